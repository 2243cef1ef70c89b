#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hierspec/hermite.hpp"
#include "hierspec/multi_index.hpp"
#include "hierspec/readout.hpp"
#include "hierspec/rng.hpp"

namespace hierspec {

enum class DirectionScale { unit_norm_rows, entry_variance_dq, entry_variance_D };
enum class Rounding { floor, round, ceil };

DirectionScale parse_direction_scale(const std::string& s);
Rounding parse_rounding(const std::string& s);

// Everything needed to sample one compositional teacher: inputs in R^d are
// lifted to degree-q Hermite features in R^D, projected onto d1 = d^epsilon
// latent directions, combined through the power-law quadratic second layer
// and passed through the scalar readout g.
struct TeacherSpec {
    int d = 0;
    int q = 2;
    double epsilon = 0.5;
    double gamma = 0.4;
    std::string readout = "identity";
    DirectionScale direction_scale = DirectionScale::unit_norm_rows;
    bool fix_signs = false;
    bool orthogonalize = false;
    Rounding d1_rounding = Rounding::floor;
    std::uint64_t seed = 0;

    int d1() const;
    std::uint64_t feature_dim() const { return basis_size(d, q); }

    // Throws on hard violations; returns soft warnings (epsilon range, the
    // information-exponent condition) the caller may surface.
    std::vector<std::string> validate() const;
};

// Z_gamma = (sum_{i<=d1} i^{-2 gamma})^{-1/2}, the normalization that makes
// sum lambda_i^2 = 1 and hence Var(y) = Theta(1).
double normalization_constant(int d1, double gamma);

struct Teacher {
    TeacherSpec spec;
    Eigen::MatrixXd a1;       // d1 x D, rows are the latent directions
    Eigen::VectorXd lambdas;  // lambda_i = Z_gamma z_i i^-gamma
    std::vector<int> z;       // Rademacher signs
    double z_gamma = 0.0;
    Readout g = Readout::make_identity();

    int d1() const { return static_cast<int>(a1.rows()); }
    Eigen::Index feature_dim() const { return a1.cols(); }
    const MultiIndexBasis& basis() const { return *basis_; }

    // h^(1) = A^(1) f for a feature vector f in R^D.
    Eigen::VectorXd latent_first(const Eigen::VectorXd& f) const;

    // h^(2) = (1/sqrt 2) sum_i lambda_i (h_i^2 - 1).
    double latent_second(const Eigen::VectorXd& h1) const;

    double label(const Eigen::VectorXd& x) const;

    // Labels for an n x d sample block (chunked internally).
    Eigen::VectorXd label_batch(const Eigen::MatrixXd& x) const;

    // True first-layer latents for an n x d sample block, n x d1.
    Eigen::MatrixXd latents_batch(const Eigen::MatrixXd& x) const;

    std::string to_json() const;
    static Teacher from_json(const std::string& text);

    std::shared_ptr<const MultiIndexBasis> basis_;
};

Teacher sample_teacher(const TeacherSpec& spec);

struct Dataset {
    Eigen::MatrixXd x;  // n x d
    Eigen::VectorXd y;  // n
    Eigen::Index n() const { return x.rows(); }
};

// n iid standard Gaussian inputs with teacher labels. The stream `seed` is
// independent of the teacher's; identical seeds reproduce identical bytes.
// `max_elements` caps n*d as a desk-scale guard.
Dataset sample_dataset(const Teacher& teacher, Eigen::Index n, std::uint64_t seed,
                       std::uint64_t max_elements = 1ULL << 28);

}  // namespace hierspec
