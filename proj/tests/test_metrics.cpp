#include <doctest.h>

#include <cmath>

#include "hierspec/metrics.hpp"
#include "hierspec/numerics.hpp"
#include "hierspec/rng.hpp"

using namespace hierspec;

namespace {
Eigen::MatrixXd gaussian_matrix(int r, int c, std::uint64_t seed) {
    Rng rng(seed);
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = rng.gaussian();
    return m;
}
}  // namespace

TEST_CASE("feature_overlap: identity, invertible mixing, independent subspaces") {
    const Eigen::MatrixXd h = gaussian_matrix(500, 6, 1);
    CHECK(feature_overlap(h, h) == doctest::Approx(1.0).epsilon(1e-10));

    const Eigen::MatrixXd mix = gaussian_matrix(6, 6, 2);  // invertible w.p. 1
    CHECK(feature_overlap(h, h * mix) == doctest::Approx(1.0).epsilon(1e-8));

    // independent subspaces: mean overlap ~ d1/n_test within a factor 3
    std::vector<double> overlaps;
    for (std::uint64_t s = 0; s < 20; ++s) {
        const Eigen::MatrixXd a = gaussian_matrix(2000, 10, 100 + 2 * s);
        const Eigen::MatrixXd b = gaussian_matrix(2000, 10, 101 + 2 * s);
        overlaps.push_back(feature_overlap(a, b));
    }
    const double m = mean(overlaps);
    CHECK(m > 0.005 / 3.0);
    CHECK(m < 0.005 * 3.0);

    // rank-deficient input: computed on realized rank, flag set
    Eigen::MatrixXd defective = h;
    defective.col(5) = defective.col(0);
    bool flag = false;
    const double v = feature_overlap(defective, h, &flag);
    CHECK(flag);
    CHECK(v > 0.0);
    CHECK(v <= 1.0);

    CHECK_THROWS_AS(feature_overlap(gaussian_matrix(5, 6, 3), gaussian_matrix(5, 6, 4)),
                    std::invalid_argument);
}

TEST_CASE("direction_alignment: member, orthogonal, 45 degrees, rotation invariance") {
    Eigen::MatrixXd u = Eigen::MatrixXd::Zero(10, 2);
    u(0, 0) = 1.0;
    u(1, 1) = 1.0;
    Eigen::VectorXd e0 = Eigen::VectorXd::Zero(10);
    e0(0) = 1.0;
    CHECK(direction_alignment(u, e0) == doctest::Approx(1.0));

    Eigen::VectorXd e5 = Eigen::VectorXd::Zero(10);
    e5(5) = 1.0;
    CHECK(direction_alignment(u, e5) == doctest::Approx(0.0));

    Eigen::VectorXd diag = Eigen::VectorXd::Zero(10);
    diag(0) = diag(5) = 1.0 / std::sqrt(2.0);
    CHECK(direction_alignment(u, diag) == doctest::Approx(0.5));

    // invariance to basis rotation of u_hat and to the sign of u_i
    Rng rng(5);
    Eigen::MatrixXd g(2, 2);
    for (Eigen::Index i = 0; i < 4; ++i) g(i) = rng.gaussian();
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    const Eigen::MatrixXd rot = qr.householderQ() * Eigen::MatrixXd::Identity(2, 2);
    CHECK(direction_alignment(u * rot, diag) ==
          doctest::Approx(direction_alignment(u, diag)).epsilon(1e-10));
    CHECK(direction_alignment(u, -diag) == doctest::Approx(direction_alignment(u, diag)));

    CHECK_THROWS_AS(direction_alignment(u, 2.0 * e0), std::invalid_argument);
}

TEST_CASE("predicted_threshold: gamma = 0 plateau, monotonicity, composition") {
    PredictorParams p;
    p.d = 400;
    p.q = 2;
    p.gamma = 0.0;
    p.d1 = 20;
    for (int i = 1; i <= p.d1; ++i) {
        CHECK(predicted_threshold(i, p) ==
              doctest::Approx(std::pow(400.0, 2) * 20.0).epsilon(1e-12));
    }

    p.gamma = 0.4;
    double prev = 0.0;
    for (int i = 1; i <= p.d1; ++i) {
        const double n_i = predicted_threshold(i, p);
        CHECK(n_i > prev);
        prev = n_i;
    }
    // i = 1: c_thr d^q / Z^2 with Z from the summation oracle
    const double z = normalization_constant(20, 0.4);
    CHECK(predicted_threshold(1, p) ==
          doctest::Approx(std::pow(400.0, 2) / (z * z)).epsilon(1e-12));
    CHECK_THROWS_AS(predicted_threshold(0, p), std::invalid_argument);
    CHECK_THROWS_AS(predicted_threshold(21, p), std::invalid_argument);
}

TEST_CASE("predicted_count: clamping, exponent-1 case, staircase consistency") {
    PredictorParams p;
    p.d = 100;
    p.q = 2;
    p.gamma = 0.5;
    p.d1 = 12;
    // gamma 0.5: exponent 1/(2 gamma) = 1, so count = Z^2 n / d^q
    const double z2 = std::pow(normalization_constant(12, 0.5), 2);
    const double n = 9.0 * std::pow(100.0, 2) / z2;
    CHECK(predicted_count(n, p) == doctest::Approx(9.0).epsilon(1e-12));
    CHECK(predicted_count(1e15, p) == doctest::Approx(12.0));  // clamped at d1
    CHECK(predicted_count(1.0, p) >= 0.0);

    // staircase matches the threshold counting at gamma = 0.4, d = 800
    p.d = 800;
    p.gamma = 0.4;
    p.d1 = 28;  // floor(800^0.5)
    for (double alpha : {2.0, 2.4, 2.8, 3.2}) {
        const double nn = std::pow(800.0, alpha);
        int count = 0;
        for (int i = 1; i <= p.d1; ++i) {
            if (predicted_threshold(i, p) <= nn) ++count;
        }
        CHECK(predicted_count_staircase(nn, p) == count);
        // smooth count and staircase agree within one step
        CHECK(std::abs(predicted_count(nn, p) - count) <= 1.0 + 1e-9);
    }

    p.gamma = 0.0;
    CHECK(predicted_count(predicted_threshold(1, p) + 1, p) == doctest::Approx(28.0));
    CHECK(predicted_count(predicted_threshold(1, p) * 0.5, p) == doctest::Approx(0.0));
}

TEST_CASE("predicted_mse: regime slopes and the boundary case") {
    PredictorParams p;
    p.d = 100;
    p.q = 2;
    p.d1 = 10;

    p.gamma = 1.0;  // slope -1 + 1/(2 gamma) = -1/2
    std::vector<double> lx, ly;
    for (double n : {1e5, 1e6, 1e7}) {
        lx.push_back(std::log(n));
        ly.push_back(std::log(predicted_mse(n, p).value));
    }
    LineFit fit = fit_line(lx, ly);
    CHECK(fit.slope == doctest::Approx(-0.5).epsilon(1e-9));

    p.gamma = 64.0;  // exponent -> -1
    lx.clear();
    ly.clear();
    for (double n : {1e5, 1e6, 1e7}) {
        lx.push_back(std::log(n));
        ly.push_back(std::log(predicted_mse(n, p).value));
    }
    fit = fit_line(lx, ly);
    CHECK(fit.slope == doctest::Approx(-1.0).epsilon(0.02));

    p.gamma = 0.4;  // Theta(1) minus a power with exponent 1/(2*0.4) - 1 = 0.25
    const double n0 = 5e4, n1 = 4e5;
    const double g0 = 1.0 - predicted_mse(n0, p).value;
    const double g1 = 1.0 - predicted_mse(n1, p).value;
    CHECK(std::log(g1 / g0) / std::log(n1 / n0) == doctest::Approx(0.25).epsilon(1e-9));
    CHECK(predicted_mse(n0, p).in_window);
    CHECK_FALSE(predicted_mse(1e9, p).in_window);

    p.gamma = 0.5;
    CHECK_THROWS_AS(predicted_mse(1e5, p), std::domain_error);
}

TEST_CASE("bulk edge: constant labels are permutation invariant") {
    Rng rng(7);
    Eigen::MatrixXd f(300, 12);
    for (Eigen::Index i = 0; i < f.size(); ++i) f(i) = rng.gaussian();
    const Eigen::VectorXd y = Eigen::VectorXd::Constant(300, 1.7);
    Eigen::MatrixXd c = moment_matrix(f, y);
    c.diagonal().array() -= c.trace() / c.rows();
    const Eigen::VectorXd vals = c.selfadjointView<Eigen::Lower>().eigenvalues();
    const double direct = vals.cwiseAbs().maxCoeff();
    CHECK(bulk_edge(f, y, 1) == doctest::Approx(direct).epsilon(1e-10));
    CHECK(bulk_edge(f, y, 2) == doctest::Approx(direct).epsilon(1e-10));
}

TEST_CASE("crossing_sample_size interpolates in log n") {
    const std::vector<double> n = {100, 1000, 10000};
    CHECK(!crossing_sample_size(n, {0.1, 0.2, 0.4}, 0.5).has_value());
    CHECK(crossing_sample_size(n, {0.6, 0.7, 0.8}, 0.5).value() == doctest::Approx(100.0));

    const auto hit = crossing_sample_size(n, {0.2, 0.4, 0.8}, 0.5);
    REQUIRE(hit.has_value());
    // halfway between 0.4 and 0.8 in value -> quarter decade above 1000
    CHECK(std::log10(hit.value()) == doctest::Approx(3.25).epsilon(1e-12));
    CHECK_THROWS_AS(crossing_sample_size(n, {0.1, 0.2}, 0.5), std::invalid_argument);
}

TEST_CASE("trial CSV row layout is fixed and padded") {
    TrialResult r;
    r.d = 64;
    r.q = 2;
    r.epsilon = 0.5;
    r.gamma = 0.4;
    r.n = 1000;
    r.alpha = 1.66;
    r.seed = 3;
    r.readout = "identity";
    r.test_mse = 0.25;
    r.feature_overlap = 0.5;
    r.m_empirical = 2;
    r.bulk_edge = 0.125;
    r.wall_time = 0.0;
    r.cos2 = {0.9, 0.8};
    CHECK(TrialResult::csv_header(4) ==
          "d,q,epsilon,gamma,n,alpha,seed,readout,test_mse,feature_overlap,"
          "m_empirical,bulk_edge,wall_time,cos2_1,cos2_2,cos2_3,cos2_4");
    CHECK(r.csv_row(4) == "64,2,0.5,0.4,1000,1.66,3,identity,0.25,0.5,2,0.125,0,0.9,0.8,,");
}
