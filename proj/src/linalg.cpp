#include "hierspec/linalg.hpp"

#include <cblas.h>
#include <lapacke.h>

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#ifdef __linux__
#include <unistd.h>
#endif

#include "hierspec/rng.hpp"

extern "C" {
char* openblas_get_corename(void);
void openblas_set_num_threads(int);
}

namespace hierspec {

void ensure_blas_kernel(char** argv) {
#ifdef __linux__
    if (std::getenv("OPENBLAS_CORETYPE") || std::getenv("HIERSPEC_BLAS_CHECKED")) {
        return;
    }
    setenv("HIERSPEC_BLAS_CHECKED", "1", 1);

    std::string core = openblas_get_corename() ? openblas_get_corename() : "";
    std::transform(core.begin(), core.end(), core.begin(), ::tolower);
    static const char* pre_avx[] = {"prescott", "northwood", "katmai",
                                    "banias",   "core2",     "atom",
                                    "nehalem",  "generic"};
    bool slow = false;
    for (const char* n : pre_avx) slow = slow || core == n;
    if (!slow) return;

    std::ifstream cpuinfo("/proc/cpuinfo");
    std::stringstream ss;
    ss << cpuinfo.rdbuf();
    const std::string flags = ss.str();
    const char* target = nullptr;
    if (flags.find("avx512f") != std::string::npos &&
        flags.find("avx512dq") != std::string::npos) {
        target = "SKYLAKEX";
    } else if (flags.find("avx2") != std::string::npos &&
               flags.find(" fma") != std::string::npos) {
        target = "HASWELL";
    }
    if (!target) return;

    setenv("OPENBLAS_CORETYPE", target, 1);
    execv("/proc/self/exe", argv);
    // exec failed; continue on the slow kernel
#else
    (void)argv;
#endif
}

void set_blas_threads(int n) { openblas_set_num_threads(n); }

int hardware_threads() {
    const unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

WeightedGram::WeightedGram(Eigen::Index dim)
    : c_(Eigen::MatrixXd::Zero(dim, dim)) {}

void WeightedGram::accumulate(const Eigen::MatrixXd& cols, const Eigen::VectorXd& y) {
    const Eigen::Index dim = cols.rows();
    const Eigen::Index m = cols.cols();
    if (y.size() != m || dim != c_.rows()) {
        throw std::invalid_argument("WeightedGram::accumulate: shape mismatch");
    }
    // split by label sign so each half is sqrt(|y|)-scaled and dsyrk applies
    Eigen::MatrixXd buf(dim, m);
    for (int sign = 0; sign < 2; ++sign) {
        Eigen::Index cnt = 0;
        for (Eigen::Index mu = 0; mu < m; ++mu) {
            const double v = y(mu);
            if ((sign == 0 && v > 0.0) || (sign == 1 && v < 0.0)) {
                buf.col(cnt++) = cols.col(mu) * std::sqrt(std::abs(v));
            }
        }
        if (cnt == 0) continue;
        cblas_dsyrk(CblasColMajor, CblasLower, CblasNoTrans,
                    static_cast<blasint>(dim), static_cast<blasint>(cnt),
                    sign == 0 ? 1.0 : -1.0, buf.data(),
                    static_cast<blasint>(dim), 1.0, c_.data(),
                    static_cast<blasint>(dim));
    }
}

Eigen::MatrixXd WeightedGram::take() {
    Eigen::MatrixXd out = std::move(c_);
    c_ = Eigen::MatrixXd::Zero(out.rows(), out.cols());
    out.triangularView<Eigen::StrictlyUpper>() =
        out.triangularView<Eigen::StrictlyLower>().transpose();
    return out;
}

EigPairs eig_symmetric_full(const Eigen::MatrixXd& m) {
    if (m.rows() != m.cols()) {
        throw std::invalid_argument("eig_symmetric_full: matrix not square");
    }
    EigPairs out;
    out.vectors = m;
    out.values.resize(m.rows());
    const lapack_int n = static_cast<lapack_int>(m.rows());
    const lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', n,
                                           out.vectors.data(), n, out.values.data());
    if (info != 0) {
        throw std::runtime_error("dsyevd failed to converge, info=" +
                                 std::to_string(info));
    }
    return out;
}

Eigen::VectorXd eig_symmetric_values(const Eigen::MatrixXd& m) {
    if (m.rows() != m.cols()) {
        throw std::invalid_argument("eig_symmetric_values: matrix not square");
    }
    Eigen::MatrixXd work = m;
    Eigen::VectorXd values(m.rows());
    const lapack_int n = static_cast<lapack_int>(m.rows());
    const lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'N', 'L', n,
                                           work.data(), n, values.data());
    if (info != 0) {
        throw std::runtime_error("dsyevd failed to converge, info=" +
                                 std::to_string(info));
    }
    return values;
}

EigPairs eig_symmetric_topk_subspace(const Eigen::MatrixXd& m, int k,
                                     std::uint64_t seed, int max_iters,
                                     double tol) {
    const Eigen::Index dim = m.rows();
    if (m.cols() != dim) {
        throw std::invalid_argument("eig_symmetric_topk_subspace: not square");
    }
    if (k < 1 || k > dim) {
        throw std::invalid_argument("eig_symmetric_topk_subspace: bad k");
    }
    const Eigen::Index block = std::min<Eigen::Index>(dim, k + std::min(k, 8) + 4);

    Rng rng(seed);
    Eigen::MatrixXd v(dim, block);
    for (Eigen::Index j = 0; j < block; ++j) {
        for (Eigen::Index i = 0; i < dim; ++i) v(i, j) = rng.gaussian();
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr0(v);
    v = qr0.householderQ() * Eigen::MatrixXd::Identity(dim, block);

    Eigen::MatrixXd w, ritz_vecs;
    Eigen::VectorXd theta;
    double norm_est = 1.0;
    for (int iter = 0; iter < max_iters; ++iter) {
        w.noalias() = m * v;
        // Rayleigh-Ritz in the current block
        Eigen::MatrixXd h = v.transpose() * w;
        h = 0.5 * (h + h.transpose()).eval();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
        theta = es.eigenvalues();
        ritz_vecs = v * es.eigenvectors();
        norm_est = std::max(std::abs(theta(0)), std::abs(theta(block - 1)));

        // residuals of the k Ritz pairs largest in |theta|
        std::vector<Eigen::Index> order(static_cast<std::size_t>(block));
        for (Eigen::Index i = 0; i < block; ++i) order[static_cast<std::size_t>(i)] = i;
        std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
            return std::abs(theta(a)) > std::abs(theta(b));
        });
        double worst = 0.0;
        for (int j = 0; j < k; ++j) {
            const Eigen::Index idx = order[static_cast<std::size_t>(j)];
            const double res =
                (m * ritz_vecs.col(idx) - theta(idx) * ritz_vecs.col(idx)).norm();
            worst = std::max(worst, res);
        }
        if (worst <= tol * std::max(norm_est, 1e-300)) {
            EigPairs out;
            out.values.resize(k);
            out.vectors.resize(dim, k);
            std::vector<Eigen::Index> sel(order.begin(), order.begin() + k);
            std::sort(sel.begin(), sel.end(),
                      [&](Eigen::Index a, Eigen::Index b) { return theta(a) < theta(b); });
            for (int j = 0; j < k; ++j) {
                out.values(j) = theta(sel[static_cast<std::size_t>(j)]);
                out.vectors.col(j) = ritz_vecs.col(sel[static_cast<std::size_t>(j)]);
            }
            return out;
        }

        Eigen::HouseholderQR<Eigen::MatrixXd> qr(w);
        v = qr.householderQ() * Eigen::MatrixXd::Identity(dim, block);
    }
    throw std::runtime_error("eig_symmetric_topk_subspace: no convergence");
}

}  // namespace hierspec
