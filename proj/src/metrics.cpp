#include "hierspec/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "hierspec/hermite.hpp"
#include "hierspec/io.hpp"
#include "hierspec/numerics.hpp"
#include "hierspec/rng.hpp"

namespace hierspec {

std::string TrialResult::csv_header(int d1_max) {
    std::string h =
        "d,q,epsilon,gamma,n,alpha,seed,readout,test_mse,feature_overlap,"
        "m_empirical,bulk_edge,wall_time";
    for (int i = 1; i <= d1_max; ++i) h += ",cos2_" + std::to_string(i);
    return h;
}

std::string TrialResult::csv_row(int d1_max) const {
    std::ostringstream os;
    os << d << ',' << q << ',' << format_double(epsilon) << ','
       << format_double(gamma) << ',' << n << ',' << format_double(alpha) << ','
       << seed << ',' << readout << ',' << format_double(test_mse) << ','
       << format_double(feature_overlap) << ',' << m_empirical << ','
       << format_double(bulk_edge) << ',' << format_double(wall_time);
    for (int i = 0; i < d1_max; ++i) {
        os << ',';
        if (i < static_cast<int>(cos2.size())) os << format_double(cos2[static_cast<std::size_t>(i)]);
    }
    return os.str();
}

double test_mse(const SpectralFit& fit, const Teacher& teacher, Eigen::Index n_test,
                std::uint64_t seed) {
    if (n_test < 1) throw std::invalid_argument("test_mse: n_test >= 1");
    const Dataset test = sample_dataset(teacher, n_test, seed);
    const Eigen::VectorXd pred = predict_batch(fit, test.x);
    return (pred - test.y).squaredNorm() / static_cast<double>(n_test);
}

namespace {

// Orthonormal basis of the column space via rank-revealing QR.
Eigen::MatrixXd orthonormal_basis(const Eigen::MatrixXd& m, bool* deficient) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(m);
    qr.setThreshold(1e-10);
    const Eigen::Index rank = qr.rank();
    if (deficient && rank < m.cols()) *deficient = true;
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(m.rows(), rank);
    return q;
}

}  // namespace

double feature_overlap(const Eigen::MatrixXd& h1_true, const Eigen::MatrixXd& h1_hat,
                       bool* rank_deficient) {
    if (h1_true.rows() != h1_hat.rows()) {
        throw std::invalid_argument("feature_overlap: row count mismatch");
    }
    if (h1_true.rows() <= h1_true.cols() || h1_hat.rows() <= h1_hat.cols()) {
        throw std::invalid_argument("feature_overlap: need n_test > d1");
    }
    if (rank_deficient) *rank_deficient = false;
    const Eigen::MatrixXd q1 = orthonormal_basis(h1_true, rank_deficient);
    const Eigen::MatrixXd q2 = orthonormal_basis(h1_hat, rank_deficient);
    const double d1 = static_cast<double>(h1_true.cols());
    return (q1.transpose() * q2).squaredNorm() / d1;
}

double direction_alignment(const Eigen::MatrixXd& u_hat, const Eigen::VectorXd& u_i) {
    if (u_hat.rows() != u_i.size()) {
        throw std::invalid_argument("direction_alignment: dimension mismatch");
    }
    if (std::abs(u_i.norm() - 1.0) > 1e-6) {
        throw std::invalid_argument("direction_alignment: u_i must be unit norm");
    }
    return (u_hat.transpose() * u_i).squaredNorm();
}

double PredictorParams::d_eff() const {
    return use_exact_dim ? static_cast<double>(basis_size(d, q))
                         : std::pow(static_cast<double>(d), q);
}

double PredictorParams::z_gamma() const { return normalization_constant(d1, gamma); }

double predicted_threshold(int i, const PredictorParams& p) {
    if (i < 1 || i > p.d1) throw std::invalid_argument("predicted_threshold: 1 <= i <= d1");
    const double z2 = p.z_gamma() * p.z_gamma();
    return p.c_thr * p.d_eff() * std::pow(static_cast<double>(i), 2.0 * p.gamma) / z2;
}

double predicted_count(double n, const PredictorParams& p) {
    if (n < 1.0) throw std::invalid_argument("predicted_count: n >= 1");
    if (p.gamma == 0.0) {
        return n >= predicted_threshold(1, p) ? static_cast<double>(p.d1) : 0.0;
    }
    const double z2 = p.z_gamma() * p.z_gamma();
    const double raw = std::pow(z2 * n / (p.c_thr * p.d_eff()), 1.0 / (2.0 * p.gamma));
    return std::clamp(raw, 0.0, static_cast<double>(p.d1));
}

int predicted_count_staircase(double n, const PredictorParams& p) {
    int count = 0;
    for (int i = 1; i <= p.d1; ++i) {
        if (predicted_threshold(i, p) <= n) ++count;
    }
    return count;
}

MsePrediction predicted_mse(double n, const PredictorParams& p, MseRegime regime) {
    if (regime == MseRegime::automatic) {
        if (p.gamma == 0.5) {
            throw std::domain_error(
                "predicted_mse: gamma = 1/2 is the log-corrected boundary case");
        }
        regime = p.gamma < 0.5 ? MseRegime::below_half : MseRegime::above_half;
    }
    const double deff = p.d_eff();
    MsePrediction out;
    if (regime == MseRegime::below_half) {
        const double expo = 1.0 / (2.0 * p.gamma) - 1.0;
        out.value = p.c_mse * (1.0 - std::pow(n / (p.d1 * deff), expo));
        out.in_window = n > deff && n < deff * p.d1;
    } else {
        const double expo = -1.0 + 1.0 / (2.0 * p.gamma);
        out.value = p.c_mse * std::pow(n / deff, expo);
        out.in_window = n > deff;
    }
    return out;
}

namespace {

// Same trace recentering the fit applies before eigenvalue selection, so the
// permuted edge and the selected spikes live on a common scale.
double centered_abs_edge(Eigen::MatrixXd c) {
    c.diagonal().array() -= c.trace() / static_cast<double>(c.rows());
    const Eigen::VectorXd vals = eig_symmetric_values(c);
    return std::max(std::abs(vals(0)), std::abs(vals(vals.size() - 1)));
}

}  // namespace

double bulk_edge(const Eigen::MatrixXd& features, const Eigen::VectorXd& y,
                 std::uint64_t seed) {
    std::vector<double> perm(y.data(), y.data() + y.size());
    Rng rng(stream_seed(seed, "bulk-edge"));
    rng.shuffle(perm);
    const Eigen::VectorXd yp =
        Eigen::Map<const Eigen::VectorXd>(perm.data(), y.size());
    return centered_abs_edge(moment_matrix(features, yp));
}

double bulk_edge_streaming(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                           const MultiIndexBasis& basis, std::uint64_t seed,
                           Eigen::Index chunk) {
    std::vector<double> perm(y.data(), y.data() + y.size());
    Rng rng(stream_seed(seed, "bulk-edge"));
    rng.shuffle(perm);
    const Eigen::VectorXd yp =
        Eigen::Map<const Eigen::VectorXd>(perm.data(), y.size());
    return centered_abs_edge(moment_matrix_streaming(x, yp, basis, chunk));
}

std::optional<double> crossing_sample_size(const std::vector<double>& n_values,
                                           const std::vector<double>& curve,
                                           double level) {
    if (n_values.size() != curve.size() || n_values.empty()) {
        throw std::invalid_argument("crossing_sample_size: bad inputs");
    }
    if (curve.front() >= level) return n_values.front();
    for (std::size_t k = 1; k < curve.size(); ++k) {
        if (curve[k] >= level && curve[k - 1] < level) {
            const double lx0 = std::log(n_values[k - 1]);
            const double lx1 = std::log(n_values[k]);
            const double f = (level - curve[k - 1]) / (curve[k] - curve[k - 1]);
            return std::exp(lx0 + f * (lx1 - lx0));
        }
    }
    return std::nullopt;
}

TrialResult evaluate_trial(const SpectralFit& fit, const Teacher& teacher,
                           Eigen::Index n_test, std::uint64_t test_seed) {
    TrialResult r;
    r.d = teacher.spec.d;
    r.q = teacher.spec.q;
    r.epsilon = teacher.spec.epsilon;
    r.gamma = teacher.spec.gamma;
    r.readout = teacher.spec.readout;

    const Dataset test = sample_dataset(teacher, n_test, test_seed);
    const Eigen::VectorXd pred = predict_batch(fit, test.x);
    r.test_mse = (pred - test.y).squaredNorm() / static_cast<double>(n_test);

    // subspace overlap on the same test set
    const Eigen::MatrixXd h1_true = teacher.latents_batch(test.x);
    Eigen::MatrixXd h1_hat(n_test, fit.d1);
    {
        Eigen::MatrixXd feats;
        constexpr Eigen::Index kChunk = 8192;
        for (Eigen::Index start = 0; start < n_test; start += kChunk) {
            const Eigen::Index m = std::min(kChunk, n_test - start);
            hermite_feature_cols(test.x.middleRows(start, m), *fit.basis, feats);
            h1_hat.middleRows(start, m).noalias() = feats.transpose() * fit.u_hat;
        }
    }
    r.feature_overlap = feature_overlap(h1_true, h1_hat, &r.overlap_rank_deficient);

    // direction-wise projector overlaps against the recovered eigenspace
    const int d1 = teacher.d1();
    r.cos2.resize(static_cast<std::size_t>(d1));
    for (int i = 0; i < d1; ++i) {
        Eigen::VectorXd u = teacher.a1.row(i).transpose();
        u.normalize();
        r.cos2[static_cast<std::size_t>(i)] = direction_alignment(fit.u_hat, u);
    }
    r.m_empirical = static_cast<int>(
        std::count_if(r.cos2.begin(), r.cos2.end(), [](double c) { return c >= 0.5; }));

    r.spectrum_top.assign(fit.eigvals.data(), fit.eigvals.data() + fit.eigvals.size());
    return r;
}

}  // namespace hierspec
