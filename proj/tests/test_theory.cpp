#include <doctest.h>

#include <cmath>

#include "hierspec/numerics.hpp"
#include "hierspec/rng.hpp"
#include "hierspec/theory.hpp"

using namespace hierspec;

TEST_CASE("gauss-hermite rules integrate exactly and the adaptive loop converges") {
    // E[Z^2] = 1, E[Z^4] = 3, E[Z^6] = 15 at modest node counts
    CHECK(gauss_hermite_expectation([](double z) { return z * z; }, 16) ==
          doctest::Approx(1.0).epsilon(1e-12));
    CHECK(gauss_hermite_expectation([](double z) { return std::pow(z, 4); }, 16) ==
          doctest::Approx(3.0).epsilon(1e-12));
    CHECK(gauss_hermite_expectation([](double z) { return std::pow(z, 6); }, 16) ==
          doctest::Approx(15.0).epsilon(1e-11));
    CHECK(adaptive_gaussian_expectation([](double z) { return std::cos(z); }) ==
          doctest::Approx(std::exp(-0.5)).epsilon(1e-10));
}

TEST_CASE("hermite_coefficient: identity, pure he_2, tanh") {
    CHECK(hermite_coefficient(Readout::make_identity(), 1) ==
          doctest::Approx(1.0).epsilon(1e-12));
    CHECK(hermite_coefficient(Readout::make_identity(), 0) ==
          doctest::Approx(0.0));
    // g = he_2: information exponent 2, so nu_1 = 0 but nu_2 = 1
    const double inv_rt2 = 1.0 / std::sqrt(2.0);
    const Readout he2 = Readout::make_polynomial({-inv_rt2, 0.0, inv_rt2});
    CHECK(hermite_coefficient(he2, 1) == doctest::Approx(0.0).epsilon(1e-10));
    CHECK(hermite_coefficient(he2, 2) == doctest::Approx(1.0).epsilon(1e-10));
    // verified independently: E[sech^2(Z)] = 0.6057055096...
    CHECK(hermite_coefficient(Readout::make_tanh(), 1) ==
          doctest::Approx(0.6057055096).epsilon(1e-8));
}

TEST_CASE("contraction norm scalings at small grids") {
    const std::vector<int> grid = {6, 10, 16, 24};
    // cross, s = 1: slope -1
    auto rep = contraction_norm_scaling(2, 1, grid, 60, ContractionMode::cross, 5);
    CHECK(std::abs(rep.fitted_slope + 1.0) <= 0.15);
    CHECK(rep.pass);
    // cross, s = q = 2: scalar product of independent tensors, slope -2
    rep = contraction_norm_scaling(2, 2, grid, 200, ContractionMode::cross, 6);
    CHECK(std::abs(rep.fitted_slope + 2.0) <= 0.2);
    // self full contraction: |A|^4 is Theta(1), slope 0
    rep = contraction_norm_scaling(2, 2, grid, 60, ContractionMode::self, 7);
    CHECK(std::abs(rep.fitted_slope) <= 0.15);
    CHECK(rep.pass);

    CHECK_THROWS_AS(contraction_norm_scaling(2, 3, grid, 10, ContractionMode::cross, 1),
                    std::invalid_argument);
}

TEST_CASE("double contraction decays at least like 1/d") {
    const std::vector<int> grid = {4, 6, 8, 12};
    const auto rep = double_contraction_scaling(2, 1, 1, 2, grid, 40, 9);
    CHECK(rep.fitted_slope <= -0.7);
    CHECK(rep.pass);
}

TEST_CASE("perturbation identity: exact at sigma -> 0 and second-order residual") {
    PerturbationSpec spec;
    spec.big_dim = 120;
    spec.weights = {1.0, 0.758, 0.644, 0.574, 0.525};
    spec.target = 1;

    std::vector<double> sigmas;
    for (int i = 0; i < 6; ++i) sigmas.push_back(1e-3 * std::pow(40.0, i / 5.0));
    const auto rep = perturbation_identity_check(spec, sigmas, 6, 11);
    CHECK(std::abs(rep.fitted_slope - 2.0) <= 0.3);
    CHECK(rep.pass);

    // residual at sigma = 1e-2 is below 10 sigma^2 on average
    for (const auto& point : rep.grid) {
        if (std::abs(point.x - 1e-2) < 2e-3) {
            CHECK(point.estimate <= 10.0 * point.x * point.x);
        }
    }

    // grid points violating the gap/4 guard are dropped, not fatal
    std::vector<double> wide = sigmas;
    wide.push_back(0.2);
    const auto rep2 = perturbation_identity_check(spec, wide, 4, 11);
    CHECK(rep2.grid.size() == sigmas.size());
    CHECK(!rep2.note.empty());

    // nearly-degenerate weights are rejected
    PerturbationSpec bad = spec;
    bad.weights = {1.0, 1.0, 0.5};
    CHECK_THROWS_AS(perturbation_identity_check(bad, sigmas, 2, 1),
                    std::invalid_argument);
    // all sigmas beyond the guard: refused
    CHECK_THROWS_AS(perturbation_identity_check(spec, {0.3, 0.4, 0.5}, 2, 1),
                    std::invalid_argument);
}

TEST_CASE("product formula MC check passes at d=5") {
    const auto rep = product_formula_check(5, 400000, 13);
    for (const auto& line : rep.lines) {
        CAPTURE(line);
    }
    CHECK(rep.pass);
}

TEST_CASE("variance normalization: flat in d1 and order one") {
    const auto rep = variance_normalization_check({16, 64, 256}, {0.0, 1.0}, 100000, 17);
    CHECK(rep.pass);
    // single-direction case: Var((h^2-1)/sqrt 2) = 1 exactly in population
    Rng rng(18);
    double s1 = 0.0, s2 = 0.0;
    const int n = 200000;
    for (int t = 0; t < n; ++t) {
        const double h = rng.gaussian();
        const double v = (h * h - 1.0) / std::sqrt(2.0);
        s1 += v;
        s2 += v * v;
    }
    const double var = s2 / n - (s1 / n) * (s1 / n);
    CHECK(var == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("population alignment: zero-signal skip and reproducibility") {
    TeacherSpec ts;
    ts.d = 10;
    ts.q = 2;
    ts.epsilon = 0.5;
    ts.gamma = 0.25;
    ts.seed = 19;
    const double inv_rt2 = 1.0 / std::sqrt(2.0);
    ts.readout = "poly:" + std::to_string(-inv_rt2) + ",0," + std::to_string(inv_rt2);
    const Teacher t = sample_teacher(ts);
    const auto rep = population_moment_alignment(t, 10000, 20);
    CHECK(rep.skipped_zero_signal);

    ts.readout = "identity";
    const Teacher t2 = sample_teacher(ts);
    const auto a = population_moment_alignment(t2, 200000, 21);
    const auto b = population_moment_alignment(t2, 200000, 21);
    CHECK(a.relative_error == b.relative_error);
    CHECK(a.scale_fitted_error == b.scale_fitted_error);
    CHECK(a.relative_error > 0.0);
}
