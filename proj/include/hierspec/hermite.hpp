#pragma once

#include <Eigen/Dense>

#include "hierspec/multi_index.hpp"

namespace hierspec {

// Normalized probabilists' Hermite polynomials he_k = H_k / sqrt(k!), with
// H_{k+1}(x) = x H_k(x) - k H_{k-1}(x). Under x ~ N(0,1) they satisfy
// E[he_j he_k] = delta_{jk}.
//
// The degree-q feature vector F(x) in R^{B(d,q)} has coordinate
// He_beta(x) = prod_i he_{beta_i}(x_i), so E[F F^T] = I under standard
// Gaussian inputs. This is the flattened Hermite tensor in the convention
// where flattened inner products equal dense Frobenius contractions.
double scalar_hermite(int k, double x);

// Fills he(k, i) = he_k(x_i) for k = 0..q.
void hermite_table(const Eigen::VectorXd& x, int q, Eigen::MatrixXd& he);

Eigen::VectorXd hermite_feature_vector(const Eigen::VectorXd& x,
                                       const MultiIndexBasis& basis);

// Feature map of an n x d sample block; sample mu becomes column mu of the
// D x n output (contiguous per sample). Samples are independent, so callers
// may chunk freely.
void hermite_feature_cols(const Eigen::MatrixXd& x, const MultiIndexBasis& basis,
                          Eigen::MatrixXd& out);

// He_2 of a vector as a matrix: (v v^T - I)/sqrt(2). For symmetric A,
// <A, he2_matrix(v)>_F = (v^T A v - tr A)/sqrt(2).
Eigen::MatrixXd he2_matrix(const Eigen::VectorXd& v);

}  // namespace hierspec
