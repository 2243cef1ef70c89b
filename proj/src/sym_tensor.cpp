#include "hierspec/sym_tensor.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

namespace hierspec {

std::shared_ptr<const MultiIndexBasis> basis_cache(int d, int order) {
    static std::mutex mu;
    static std::map<std::pair<int, int>, std::shared_ptr<const MultiIndexBasis>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto& slot = cache[{d, order}];
    if (!slot) slot = std::make_shared<MultiIndexBasis>(d, order);
    return slot;
}

SymTensor::SymTensor(int d, int order)
    : basis(basis_cache(d, order)),
      data(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(basis->size()))) {}

double SymTensor::dot(const SymTensor& other) const {
    if (dim() != other.dim() || order() != other.order()) {
        throw std::invalid_argument("SymTensor::dot: shape mismatch");
    }
    return data.dot(other.data);
}

double SymTensor::dense_entry(const std::vector<int>& beta) const {
    const std::size_t p = basis->position(beta);
    return data(static_cast<Eigen::Index>(p)) / basis->flatten_weight(p);
}

SymTensor SymTensor::random_gaussian(int d, int order, double entry_sd, Rng& rng) {
    SymTensor t(d, order);
    for (Eigen::Index i = 0; i < t.data.size(); ++i) {
        t.data(i) = t.basis->flatten_weight(static_cast<std::size_t>(i)) * entry_sd *
                    rng.gaussian();
    }
    return t;
}

namespace {

double factorial(int n) {
    double f = 1.0;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
}

double multi_factorial(const std::vector<int>& beta) {
    double f = 1.0;
    for (int b : beta) f *= factorial(b);
    return f;
}

// All nu1 <= nu (pointwise) with |nu1| = target.
void enumerate_subindices(const std::vector<int>& nu, int target, int from,
                          std::vector<int>& cur, std::vector<std::vector<int>>& out) {
    if (target == 0) {
        out.push_back(cur);
        return;
    }
    if (from == static_cast<int>(nu.size())) return;
    const int take_max = std::min(nu[from], target);
    for (int t = 0; t <= take_max; ++t) {
        cur[from] = t;
        enumerate_subindices(nu, target - t, from + 1, cur, out);
    }
    cur[from] = 0;
}

double binom_d(int n, int k) {
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

}  // namespace

ContractionPlan::ContractionPlan(int d, int k, int l, int s)
    : d_(d), k_(k), l_(l), s_(s) {
    if (s < 0 || s > std::min(k, l)) {
        throw std::invalid_argument("ContractionPlan: need 0 <= s <= min(k, l)");
    }
    a_basis_ = basis_cache(d, k);
    b_basis_ = basis_cache(d, l);
    const int m = k + l - 2 * s;
    out_basis_ = basis_cache(d, m);
    const auto mu_basis = basis_cache(d, s);

    // For output content nu and a split nu = nu1 + nu2 with |nu1| = k - s,
    // the symmetrized contraction reads
    //   c_nu = (k-s)!(l-s)!/m! * sum_splits prod_i C(nu_i, nu1_i)
    //          * sum_{|mu|=s} s!/mu! * a_{nu1+mu} * b_{nu2+mu}
    // on dense entries; flattening weights are folded into each term.
    const double split_norm = factorial(k - s) * factorial(l - s) / factorial(m);
    const double s_fact = factorial(s);

    std::vector<int> cur(static_cast<std::size_t>(d), 0);
    std::vector<std::vector<int>> splits;
    std::vector<int> idx_a(static_cast<std::size_t>(d));
    std::vector<int> idx_b(static_cast<std::size_t>(d));

    for (std::size_t out_pos = 0; out_pos < out_basis_->size(); ++out_pos) {
        const auto& nu = out_basis_->index(out_pos);
        const double w_out = out_basis_->flatten_weight(out_pos);

        splits.clear();
        enumerate_subindices(nu, k - s, 0, cur, splits);

        for (const auto& nu1 : splits) {
            double comb = 1.0;
            for (int i = 0; i < d; ++i) comb *= binom_d(nu[i], nu1[i]);

            for (std::size_t mu_pos = 0; mu_pos < mu_basis->size(); ++mu_pos) {
                const auto& mu = mu_basis->index(mu_pos);
                for (int i = 0; i < d; ++i) {
                    idx_a[static_cast<std::size_t>(i)] = nu1[i] + mu[i];
                    idx_b[static_cast<std::size_t>(i)] = nu[i] - nu1[i] + mu[i];
                }
                const std::size_t pa = a_basis_->position(idx_a);
                const std::size_t pb = b_basis_->position(idx_b);
                const double coeff = w_out * split_norm * comb *
                                     (s_fact / multi_factorial(mu)) /
                                     (a_basis_->flatten_weight(pa) *
                                      b_basis_->flatten_weight(pb));
                terms_.push_back({static_cast<std::uint32_t>(out_pos),
                                  static_cast<std::uint32_t>(pa),
                                  static_cast<std::uint32_t>(pb), coeff});
            }
        }
    }
}

SymTensor ContractionPlan::apply(const SymTensor& a, const SymTensor& b) const {
    if (a.dim() != d_ || b.dim() != d_ || a.order() != k_ || b.order() != l_) {
        throw std::invalid_argument("ContractionPlan::apply: shape mismatch");
    }
    SymTensor out(d_, order_out());
    for (const auto& t : terms_) {
        out.data(t.out) += t.coeff * a.data(t.a) * b.data(t.b);
    }
    return out;
}

SymTensor contract(const SymTensor& a, const SymTensor& b, int s) {
    if (a.dim() != b.dim()) {
        throw std::invalid_argument("contract: dimension mismatch");
    }
    ContractionPlan plan(a.dim(), a.order(), b.order(), s);
    return plan.apply(a, b);
}

}  // namespace hierspec
