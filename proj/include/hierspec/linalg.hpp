#pragma once

#include <Eigen/Dense>

namespace hierspec {

// OpenBLAS 0.3.x falls back to a pre-AVX kernel when it cannot identify the
// CPU (corename "Prescott"), which costs ~5x on the dense updates here. When
// that happens on a machine whose cpuinfo advertises AVX2/AVX-512, re-exec
// the process once with OPENBLAS_CORETYPE set so the right kernel loads.
// Call first thing in main(); no-op when detection worked, when the user set
// OPENBLAS_CORETYPE themselves, or off Linux.
void ensure_blas_kernel(char** argv);

void set_blas_threads(int n);
int hardware_threads();

// Accumulates sum_mu y_mu f_mu f_mu^T over sample blocks via two sign-split
// symmetric rank-k updates (dsyrk), not per-sample outer products.
class WeightedGram {
public:
    explicit WeightedGram(Eigen::Index dim);

    // cols: D x m block whose columns are the sample vectors f_mu; y: length m.
    void accumulate(const Eigen::MatrixXd& cols, const Eigen::VectorXd& y);

    // Symmetrized accumulated matrix; the accumulator is left zeroed.
    Eigen::MatrixXd take();

private:
    Eigen::MatrixXd c_;  // lower triangle holds the running sum
};

struct EigPairs {
    Eigen::VectorXd values;   // ascending
    Eigen::MatrixXd vectors;  // columns match values
};

// Full symmetric eigendecomposition (LAPACK dsyevd).
EigPairs eig_symmetric_full(const Eigen::MatrixXd& m);

// All eigenvalues, no vectors (ascending).
Eigen::VectorXd eig_symmetric_values(const Eigen::MatrixXd& m);

// Orthogonal (block subspace) iteration with Rayleigh-Ritz extraction for
// the k eigenpairs of largest |eigenvalue|, covering both spectrum ends of
// an indefinite symmetric matrix. Deterministic for a fixed seed. Returned
// in ascending eigenvalue order like the dense path.
EigPairs eig_symmetric_topk_subspace(const Eigen::MatrixXd& m, int k,
                                     std::uint64_t seed = 12345,
                                     int max_iters = 400, double tol = 1e-10);

}  // namespace hierspec
