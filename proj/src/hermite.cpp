#include "hierspec/hermite.hpp"

#include <cmath>
#include <stdexcept>

namespace hierspec {

double scalar_hermite(int k, double x) {
    if (k < 0) throw std::invalid_argument("scalar_hermite: k >= 0");
    // unnormalized recurrence, one normalization at the end; exact in double
    // for the k <= 20 range used here
    double hm1 = 0.0, h = 1.0;
    for (int j = 0; j < k; ++j) {
        const double hn = x * h - j * hm1;
        hm1 = h;
        h = hn;
    }
    double fact = 1.0;
    for (int j = 2; j <= k; ++j) fact *= j;
    return h / std::sqrt(fact);
}

void hermite_table(const Eigen::VectorXd& x, int q, Eigen::MatrixXd& he) {
    const auto d = x.size();
    he.resize(q + 1, d);
    he.row(0).setOnes();
    if (q >= 1) he.row(1) = x.transpose();
    for (int k = 2; k <= q; ++k) {
        // normalized form of H_k = x H_{k-1} - (k-1) H_{k-2}
        he.row(k) = (x.transpose().array() * he.row(k - 1).array() -
                     std::sqrt(static_cast<double>(k - 1)) * he.row(k - 2).array()) /
                    std::sqrt(static_cast<double>(k));
    }
}

Eigen::VectorXd hermite_feature_vector(const Eigen::VectorXd& x,
                                       const MultiIndexBasis& basis) {
    if (x.size() != basis.d()) {
        throw std::invalid_argument("hermite_feature_vector: dimension mismatch");
    }
    Eigen::MatrixXd he;
    hermite_table(x, basis.q(), he);
    Eigen::VectorXd f(basis.size());
    for (std::size_t i = 0; i < basis.size(); ++i) {
        double v = 1.0;
        for (const auto& t : basis.support(i)) v *= he(t.power, t.var);
        f(static_cast<Eigen::Index>(i)) = v;
    }
    return f;
}

void hermite_feature_cols(const Eigen::MatrixXd& x, const MultiIndexBasis& basis,
                          Eigen::MatrixXd& out) {
    if (x.cols() != basis.d()) {
        throw std::invalid_argument("hermite_feature_cols: dimension mismatch");
    }
    const Eigen::Index n = x.rows();
    const Eigen::Index D = static_cast<Eigen::Index>(basis.size());
    out.resize(D, n);
    Eigen::MatrixXd he;
    Eigen::VectorXd row(x.cols());
    for (Eigen::Index mu = 0; mu < n; ++mu) {
        row = x.row(mu);
        hermite_table(row, basis.q(), he);
        double* col = out.col(mu).data();
        for (std::size_t i = 0; i < basis.size(); ++i) {
            double v = 1.0;
            for (const auto& t : basis.support(i)) v *= he(t.power, t.var);
            col[i] = v;
        }
    }
}

Eigen::MatrixXd he2_matrix(const Eigen::VectorXd& v) {
    const auto m = v.size();
    if (m < 1) throw std::invalid_argument("he2_matrix: empty vector");
    Eigen::MatrixXd out = v * v.transpose();
    out.diagonal().array() -= 1.0;
    out /= std::sqrt(2.0);
    return out;
}

}  // namespace hierspec
