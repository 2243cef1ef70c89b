#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <optional>

#include "hierspec/linalg.hpp"
#include "hierspec/teacher.hpp"

namespace hierspec {

// Label-weighted second Hermite moment of the feature vectors,
//   C = (1/(n sqrt 2)) (F^T diag(y) F - (sum_mu y_mu) I_D),
// i.e. (1/n) sum_mu y_mu He_2(F_mu) with the He_2 normalization kept. The
// 1/sqrt(2) rescales all eigenvalues uniformly and changes no eigenvector,
// overlap, or threshold ratio. `features` holds samples as rows.
Eigen::MatrixXd moment_matrix(const Eigen::MatrixXd& features,
                              const Eigen::VectorXd& y);

// Streaming variant over raw inputs: features are generated chunk-wise and
// accumulated as dense rank-k updates, never materialized as an n x D block.
Eigen::MatrixXd moment_matrix_streaming(const Eigen::MatrixXd& x,
                                        const Eigen::VectorXd& y,
                                        const MultiIndexBasis& basis,
                                        Eigen::Index chunk = 8192);

enum class EigenSolver { dense, subspace };

// The k eigenpairs of largest |eigenvalue| (both spectrum ends; the latent
// weights carry Rademacher signs). values sorted by |.| descending, ties by
// original ascending-eigenvalue index; each eigenvector's sign is fixed by
// making its largest-magnitude coordinate positive, so repeated calls are
// bit-identical.
struct TopDirections {
    Eigen::VectorXd values;   // k, |.| descending
    Eigen::MatrixXd vectors;  // D x k
};

TopDirections top_directions(const Eigen::MatrixXd& c_hat, int k,
                             EigenSolver solver = EigenSolver::dense);

// h_hat^(1) = F u_hat for a row-sample feature block.
Eigen::MatrixXd first_layer_features(const Eigen::MatrixXd& u_hat,
                                     const Eigen::MatrixXd& features);

// A_hat^(2) = (1/n) sum_mu y_mu He_2(h_mu) over estimated latents (rows).
Eigen::MatrixXd second_layer_estimate(const Eigen::MatrixXd& h1_hat,
                                      const Eigen::VectorXd& y);

// <A, He_2(h)> = (h^T A h - tr A)/sqrt(2).
double scalar_feature(const Eigen::MatrixXd& a2_hat, const Eigen::VectorXd& h1_row);
Eigen::VectorXd scalar_feature_batch(const Eigen::MatrixXd& a2_hat,
                                     const Eigen::MatrixXd& h1_rows);

// Polynomial ridge readout on the standardized scalar feature. Features are
// 1, t, ..., t^degree with t = (h2 - center)/scale; the intercept is not
// penalized, so ridge -> inf shrinks to the plain mean.
struct ReadoutModel {
    int degree = 1;
    double ridge = 0.0;
    double center = 0.0;
    double scale = 1.0;
    Eigen::VectorXd coefficients;

    double evaluate(double h2) const;
};

ReadoutModel fit_readout(const Eigen::VectorXd& h2, const Eigen::VectorXd& y,
                         int degree, double ridge);

struct FitOptions {
    int degree = 3;
    double ridge = 1e-5;
    EigenSolver solver = EigenSolver::dense;
    bool keep_full_spectrum = false;
    Eigen::Index chunk = 8192;
};

struct SpectralFit {
    int d = 0;
    int q = 0;
    int d1 = 0;
    Eigen::VectorXd eigvals;  // selected, |.| descending
    Eigen::MatrixXd u_hat;    // D x d1, orthonormal columns
    Eigen::MatrixXd a2_hat;   // d1 x d1 symmetric
    ReadoutModel readout;
    std::optional<Eigen::VectorXd> full_spectrum;  // ascending, when kept
    std::shared_ptr<const MultiIndexBasis> basis;

    std::string to_json() const;
    static SpectralFit from_json(const std::string& text);
};

struct TeacherDims {
    int d = 0;
    int q = 0;
    int d1 = 0;
};

// Algorithm: features -> C_hat -> top-d1 eigenpairs -> h_hat^(1) ->
// A_hat^(2) -> h_hat^(2) -> ridge readout on the fresh batch.
SpectralFit fit(const Dataset& train, const Dataset& readout_data,
                const TeacherDims& dims, const FitOptions& options);

// Downstream half of the pipeline with the first-layer directions supplied;
// fit() calls this after the spectral step, and oracle tests plant exact
// directions through it.
SpectralFit fit_with_directions(Eigen::MatrixXd u_hat, const Dataset& train,
                                const Dataset& readout_data, const TeacherDims& dims,
                                const FitOptions& options);

double predict(const SpectralFit& fit, const Eigen::VectorXd& x);
Eigen::VectorXd predict_batch(const SpectralFit& fit, const Eigen::MatrixXd& x,
                              Eigen::Index chunk = 8192);

}  // namespace hierspec
