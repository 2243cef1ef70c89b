#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "hierspec/spectral.hpp"
#include "hierspec/teacher.hpp"

namespace hierspec {

// One experiment's metrics record. cos2[i] is the projector overlap of
// teacher direction i+1 with the recovered eigenspace.
struct TrialResult {
    int d = 0;
    int q = 0;
    double epsilon = 0.0;
    double gamma = 0.0;
    Eigen::Index n = 0;
    double alpha = 0.0;
    std::uint64_t seed = 0;
    std::string readout;
    double test_mse = 0.0;
    double feature_overlap = 0.0;
    int m_empirical = 0;
    double bulk_edge = std::numeric_limits<double>::quiet_NaN();
    double wall_time = 0.0;
    std::vector<double> cos2;
    std::vector<double> spectrum_top;
    bool overlap_rank_deficient = false;

    // Fixed column layout; cos2 padded with empty fields up to d1_max.
    static std::string csv_header(int d1_max);
    std::string csv_row(int d1_max) const;
};

// Empirical generalization error on a fresh labeled test set.
double test_mse(const SpectralFit& fit, const Teacher& teacher, Eigen::Index n_test,
                std::uint64_t seed);

// Average squared canonical correlation between the column spaces of the
// true and learned first-layer feature matrices: (1/d1) |Q^T Q_hat|_F^2.
// Rank-deficient inputs are handled on their realized ranks; the flag
// reports that a deficiency occurred.
double feature_overlap(const Eigen::MatrixXd& h1_true, const Eigen::MatrixXd& h1_hat,
                       bool* rank_deficient = nullptr);

// cos^2(theta_i) = |u_hat^T u_i|^2 for a unit teacher direction.
double direction_alignment(const Eigen::MatrixXd& u_hat, const Eigen::VectorXd& u_i);

struct PredictorParams {
    int d = 0;
    int q = 2;
    double gamma = 0.4;
    int d1 = 0;
    double c_thr = 1.0;            // threshold calibration constant
    double c_mse = 1.0;            // MSE calibration constant
    bool use_exact_dim = false;    // D_eff = B(d,q) instead of d^q
    double recovery_level = 0.5;   // cos^2 level declaring weak recovery

    double d_eff() const;
    double z_gamma() const;  // normalization_constant(d1, gamma)
};

// n_i = c_thr * d^q * i^{2 gamma} / Z_gamma^2, the sample size at which
// direction i's spike exits the bulk.
double predicted_threshold(int i, const PredictorParams& p);

// m_n: for gamma > 0, clamp((Z^2 n / D_eff)^{1/(2 gamma)}, 0, d1); for
// gamma = 0 a single transition at the common threshold.
double predicted_count(double n, const PredictorParams& p);

// Staircase count: number of directions with predicted_threshold(i) <= n.
int predicted_count_staircase(double n, const PredictorParams& p);

enum class MseRegime { automatic, below_half, above_half };

struct MsePrediction {
    double value = 0.0;
    bool in_window = true;  // d^q << n (and n << d^q d1 when gamma < 1/2)
};

// Theta-level MSE curves: 1 - (n/(d1 d^q))^{1/(2 gamma)-1} for gamma < 1/2,
// c_mse (n/d^q)^{-1+1/(2 gamma)} for gamma > 1/2. gamma = 1/2 is the
// log-corrected boundary the rates do not cover; it throws.
MsePrediction predicted_mse(double n, const PredictorParams& p,
                            MseRegime regime = MseRegime::automatic);

// Largest |eigenvalue| of the moment matrix rebuilt with uniformly permuted
// labels: the empirical noise edge against which spikes are declared.
double bulk_edge(const Eigen::MatrixXd& features, const Eigen::VectorXd& y,
                 std::uint64_t seed);

double bulk_edge_streaming(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                           const MultiIndexBasis& basis, std::uint64_t seed,
                           Eigen::Index chunk = 8192);

// 50%-style crossing of a per-direction alignment curve, interpolated in
// log n between adjacent sweep points. Empty when the curve never reaches
// the level.
std::optional<double> crossing_sample_size(const std::vector<double>& n_values,
                                           const std::vector<double>& curve,
                                           double level);

// All teacher-relative diagnostics for a finished fit on one fresh test set.
TrialResult evaluate_trial(const SpectralFit& fit, const Teacher& teacher,
                           Eigen::Index n_test, std::uint64_t test_seed);

}  // namespace hierspec
