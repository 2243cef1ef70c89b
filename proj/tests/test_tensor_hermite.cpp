#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>

#include "hierspec/hermite.hpp"
#include "hierspec/multi_index.hpp"
#include "hierspec/rng.hpp"
#include "hierspec/sym_tensor.hpp"
#include "support/dense_tensor.hpp"

using namespace hierspec;

TEST_CASE("basis_size matches the stars-and-bars count") {
    CHECK(basis_size(4, 2) == 10);
    CHECK(basis_size(140, 2) == 9870);
    CHECK(basis_size(3, 3) == 10);
    CHECK(basis_size(1, 0) == 1);
    CHECK_THROWS_AS(basis_size(0, 2), std::invalid_argument);
    CHECK_THROWS_AS(basis_size(1000000, 12), std::overflow_error);
}

TEST_CASE("multi-index enumeration is grevlex-descending, complete, duplicate-free") {
    const MultiIndexBasis basis(3, 2);
    REQUIRE(basis.size() == 6);
    // (2,0,0),(1,1,0),(0,2,0),(1,0,1),(0,1,1),(0,0,2)
    CHECK(basis.index(0) == std::vector<int>{2, 0, 0});
    CHECK(basis.index(1) == std::vector<int>{1, 1, 0});
    CHECK(basis.index(2) == std::vector<int>{0, 2, 0});
    CHECK(basis.index(3) == std::vector<int>{1, 0, 1});
    CHECK(basis.index(4) == std::vector<int>{0, 1, 1});
    CHECK(basis.index(5) == std::vector<int>{0, 0, 2});

    for (int d : {2, 4, 7}) {
        for (int q : {1, 2, 3, 4}) {
            const MultiIndexBasis b(d, q);
            CHECK(b.size() == basis_size(d, q));
            for (std::size_t i = 0; i < b.size(); ++i) {
                int total = 0;
                for (int v : b.index(i)) {
                    total += v;
                    CHECK(v >= 0);
                }
                CHECK(total == q);
                if (i > 0) CHECK(grevlex_less_desc(b.index(i - 1), b.index(i)));
                CHECK(b.position(b.index(i)) == i);
            }
        }
    }
}

TEST_CASE("scalar Hermite values and recurrence") {
    CHECK(scalar_hermite(0, 3.7) == 1.0);
    CHECK(scalar_hermite(1, 3.0) == 3.0);
    CHECK(scalar_hermite(2, 1.0) == doctest::Approx(0.0));
    CHECK(scalar_hermite(2, 0.0) == doctest::Approx(-1.0 / std::sqrt(2.0)));
    // H_3(2) = 8 - 6 = 2, he_3 = H_3/sqrt(6)
    CHECK(scalar_hermite(3, 2.0) == doctest::Approx(2.0 / std::sqrt(6.0)).epsilon(1e-12));

    // unnormalized three-term recurrence as the independent oracle
    Rng rng(7);
    for (int t = 0; t < 50; ++t) {
        const double x = 3.0 * rng.gaussian();
        double hm1 = 0.0, h = 1.0, fact = 1.0;
        for (int k = 0; k <= 8; ++k) {
            CHECK(scalar_hermite(k, x) == doctest::Approx(h / std::sqrt(fact)).epsilon(1e-10));
            const double hn = x * h - k * hm1;
            hm1 = h;
            h = hn;
            fact *= k + 1;
        }
    }
}

TEST_CASE("feature vector coordinates at fixed points") {
    const MultiIndexBasis basis(2, 2);
    const Eigen::VectorXd f = hermite_feature_vector(Eigen::Vector2d(0.0, 0.0), basis);
    // (2,0) -> he_2(0), (1,1) -> 0, (0,2) -> he_2(0)
    CHECK(f(0) == doctest::Approx(-1.0 / std::sqrt(2.0)));
    CHECK(f(1) == doctest::Approx(0.0));
    CHECK(f(2) == doctest::Approx(-1.0 / std::sqrt(2.0)));

    const MultiIndexBasis b1(1, 1);
    Eigen::VectorXd x1(1);
    x1 << 3.0;
    CHECK(hermite_feature_vector(x1, b1)(0) == doctest::Approx(3.0));

    Eigen::VectorXd bad(3);
    CHECK_THROWS_AS(hermite_feature_vector(bad, basis), std::invalid_argument);
}

TEST_CASE("feature coordinates are orthonormal under Gaussian inputs" *
          doctest::skip(false)) {
    // MC at d=3, q=2: mean of F F^T over 1e5 draws is I_6 entrywise within
    // 4 standard errors
    const MultiIndexBasis basis(3, 2);
    const int n = 100000;
    const Eigen::Index D = static_cast<Eigen::Index>(basis.size());
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(D, D);
    Eigen::MatrixXd sumsq = Eigen::MatrixXd::Zero(D, D);
    Rng rng(11);
    Eigen::VectorXd x(3);
    for (int t = 0; t < n; ++t) {
        for (int i = 0; i < 3; ++i) x(i) = rng.gaussian();
        const Eigen::VectorXd f = hermite_feature_vector(x, basis);
        const Eigen::MatrixXd outer = f * f.transpose();
        sum += outer;
        sumsq += outer.array().square().matrix();
    }
    for (Eigen::Index i = 0; i < D; ++i) {
        for (Eigen::Index j = 0; j < D; ++j) {
            const double mean = sum(i, j) / n;
            const double var = sumsq(i, j) / n - mean * mean;
            const double se = std::sqrt(var / n);
            const double expect = i == j ? 1.0 : 0.0;
            CHECK(std::abs(mean - expect) <= 4.0 * se);
        }
    }
}

TEST_CASE("hermite_feature_cols agrees with the single-vector path") {
    const MultiIndexBasis basis(4, 3);
    Rng rng(5);
    Eigen::MatrixXd x(7, 4);
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = rng.gaussian();
    Eigen::MatrixXd cols;
    hermite_feature_cols(x, basis, cols);
    for (Eigen::Index mu = 0; mu < 7; ++mu) {
        const Eigen::VectorXd f = hermite_feature_vector(x.row(mu).transpose(), basis);
        CHECK((cols.col(mu) - f).cwiseAbs().maxCoeff() < 1e-14);
    }
}

TEST_CASE("he2_matrix values and spectral content") {
    CHECK((he2_matrix(Eigen::Vector3d::Zero()) +
           Eigen::Matrix3d::Identity() / std::sqrt(2.0))
              .norm() == doctest::Approx(0.0));

    const Eigen::MatrixXd m2 = he2_matrix(Eigen::Vector2d(1.0, 0.0));
    CHECK(m2(0, 0) == doctest::Approx(0.0));
    CHECK(m2(1, 1) == doctest::Approx(-1.0 / std::sqrt(2.0)));
    CHECK(m2(0, 1) == doctest::Approx(0.0));

    Rng rng(3);
    Eigen::VectorXd v(5);
    for (int i = 0; i < 5; ++i) v(i) = rng.gaussian();

    // trace identity <I, He_2(v)> = (|v|^2 - m)/sqrt(2)
    const Eigen::MatrixXd h = he2_matrix(v);
    CHECK(h.trace() == doctest::Approx((v.squaredNorm() - 5.0) / std::sqrt(2.0)));

    // eigenvalues: (|v|^2-1)/sqrt(2) once, -1/sqrt(2) with multiplicity m-1
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
    const double big = (v.squaredNorm() - 1.0) / std::sqrt(2.0);
    for (int i = 0; i < 4; ++i) {
        CHECK(es.eigenvalues()(i) == doctest::Approx(-1.0 / std::sqrt(2.0)).epsilon(1e-12));
    }
    CHECK(es.eigenvalues()(4) == doctest::Approx(big).epsilon(1e-12));
    const Eigen::VectorXd top = es.eigenvectors().col(4);
    CHECK(std::abs(top.dot(v.normalized())) == doctest::Approx(1.0).epsilon(1e-10));

    // Frobenius pairing against a random symmetric A
    Eigen::MatrixXd a = Eigen::MatrixXd::Random(5, 5);
    a = (a + a.transpose()).eval();
    const double lhs = (a.array() * h.array()).sum();
    const double rhs = (v.dot(a * v) - a.trace()) / std::sqrt(2.0);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("flattening preserves the Frobenius product") {
    using testing::DenseTensor;
    Rng rng(19);
    for (int d : {2, 3}) {
        for (int k : {1, 2, 3}) {
            const SymTensor a = SymTensor::random_gaussian(d, k, 1.0, rng);
            const SymTensor b = SymTensor::random_gaussian(d, k, 1.0, rng);
            const double flat = a.dot(b);
            const double dense = DenseTensor::from(a).frobenius_dot(DenseTensor::from(b));
            CHECK(flat == doctest::Approx(dense).epsilon(1e-12));
        }
    }
}

TEST_CASE("contract: full contraction gives the inner product") {
    Rng rng(23);
    const SymTensor a = SymTensor::random_gaussian(3, 2, 0.7, rng);
    const SymTensor b = SymTensor::random_gaussian(3, 2, 0.7, rng);
    const SymTensor full = contract(a, b, 2);
    REQUIRE(full.order() == 0);
    CHECK(full.data(0) == doctest::Approx(a.dot(b)).epsilon(1e-12));
    const SymTensor self = contract(a, a, 2);
    CHECK(self.data(0) == doctest::Approx(a.frobenius_norm() * a.frobenius_norm()));
}

TEST_CASE("contract: order-1 outer product is the symmetrized product") {
    SymTensor u(3, 1), v(3, 1);
    u.data << 1.0, 2.0, -1.0;
    v.data << 0.5, 0.0, 3.0;
    const SymTensor w = contract(u, v, 0);
    REQUIRE(w.order() == 2);
    // dense entries of Sym(u v^T)
    for (int i = 0; i < 3; ++i) {
        for (int j = i; j < 3; ++j) {
            std::vector<int> beta(3, 0);
            beta[i] += 1;
            beta[j] += 1;
            const double expect = 0.5 * (u.data(i) * v.data(j) + u.data(j) * v.data(i));
            CHECK(w.dense_entry(beta) == doctest::Approx(expect).epsilon(1e-12));
        }
    }
}

TEST_CASE("contract matches the dense brute-force oracle") {
    using testing::DenseTensor;
    Rng rng(29);
    struct Case {
        int d, k, l, s;
    };
    for (const Case c : {Case{2, 2, 2, 1}, Case{2, 3, 2, 1}, Case{3, 2, 2, 1},
                         Case{2, 3, 3, 2}, Case{3, 2, 1, 1}, Case{2, 2, 2, 0}}) {
        const SymTensor a = SymTensor::random_gaussian(c.d, c.k, 1.0, rng);
        const SymTensor b = SymTensor::random_gaussian(c.d, c.l, 1.0, rng);
        const SymTensor got = contract(a, b, c.s);
        const DenseTensor expect =
            testing::dense_contract_sym(DenseTensor::from(a), DenseTensor::from(b), c.s);
        const DenseTensor got_dense = DenseTensor::from(got);
        double max_diff = 0.0;
        for (std::size_t i = 0; i < expect.vals.size(); ++i) {
            max_diff = std::max(max_diff, std::abs(expect.vals[i] - got_dense.vals[i]));
        }
        CAPTURE(c.d);
        CAPTURE(c.k);
        CAPTURE(c.l);
        CAPTURE(c.s);
        CHECK(max_diff < 1e-12);
    }
}

TEST_CASE("contract: flattened identity self-contraction at d=2") {
    // a = I/sqrt(2) flattened; a x_1 a recovers I/2 up to symmetrization
    SymTensor a(2, 2);
    const std::vector<int> b20{2, 0}, b11{1, 1}, b02{0, 2};
    a.data(static_cast<Eigen::Index>(a.basis->position(b20))) = 1.0 / std::sqrt(2.0);
    a.data(static_cast<Eigen::Index>(a.basis->position(b02))) = 1.0 / std::sqrt(2.0);
    const SymTensor c = contract(a, a, 1);
    CHECK(c.dense_entry(b20) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(c.dense_entry(b02) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(c.dense_entry(b11) == doctest::Approx(0.0));
}

TEST_CASE("contract rejects shape mismatches") {
    Rng rng(31);
    const SymTensor a = SymTensor::random_gaussian(2, 2, 1.0, rng);
    const SymTensor b = SymTensor::random_gaussian(3, 2, 1.0, rng);
    CHECK_THROWS_AS(contract(a, b, 1), std::invalid_argument);
    const SymTensor c = SymTensor::random_gaussian(2, 1, 1.0, rng);
    CHECK_THROWS_AS(contract(a, c, 2), std::invalid_argument);
}

TEST_CASE("degree-2 chaos coefficients of <a,x><b,x> match sqrt(2) flatten(a sym b)") {
    // product-formula special case, small direct MC
    const int d = 3;
    const MultiIndexBasis basis(d, 2);
    Rng rng(37);
    Eigen::VectorXd a(d), b(d);
    for (int i = 0; i < d; ++i) a(i) = rng.gaussian();
    for (int i = 0; i < d; ++i) b(i) = rng.gaussian();
    a.normalize();
    b.normalize();

    const int n = 400000;
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(basis.size()));
    Eigen::VectorXd acc2 = acc;
    Eigen::VectorXd x(d);
    for (int t = 0; t < n; ++t) {
        for (int i = 0; i < d; ++i) x(i) = rng.gaussian();
        const double w = (a.dot(x)) * (b.dot(x));
        const Eigen::VectorXd f = hermite_feature_vector(x, basis);
        acc += w * f;
        acc2 += (w * f).array().square().matrix();
    }
    const SymTensor ab = [&] {
        SymTensor ua(d, 1), ub(d, 1);
        ua.data = a;
        ub.data = b;
        return contract(ua, ub, 0);
    }();
    for (Eigen::Index p = 0; p < acc.size(); ++p) {
        const double mean = acc(p) / n;
        const double var = acc2(p) / n - mean * mean;
        const double se = std::sqrt(var / n);
        const double expect = std::sqrt(2.0) * ab.data(p);
        CHECK(std::abs(mean - expect) <= 4.0 * se);
    }
}
