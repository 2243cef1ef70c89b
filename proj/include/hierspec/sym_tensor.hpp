#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <vector>

#include "hierspec/multi_index.hpp"
#include "hierspec/rng.hpp"

namespace hierspec {

// Shared, thread-safe cache of enumeration bases keyed by (d, order).
std::shared_ptr<const MultiIndexBasis> basis_cache(int d, int order);

// A symmetric tensor of the given order over R^d, stored flattened in the
// Frobenius-preserving convention: the coefficient for multi-index beta is
// sqrt(order!/beta!) times the dense entry, so `data.dot(other.data)` equals
// the full Frobenius contraction of the dense tensors.
struct SymTensor {
    std::shared_ptr<const MultiIndexBasis> basis;
    Eigen::VectorXd data;

    SymTensor() = default;
    SymTensor(int d, int order);

    int dim() const { return basis->d(); }
    int order() const { return basis->q(); }

    double dot(const SymTensor& other) const;
    double frobenius_norm() const { return data.norm(); }

    // Dense entry for a multi-index (undoes the flattening weight).
    double dense_entry(const std::vector<int>& beta) const;

    // iid N(0, entry_sd^2) dense entries, i.e. the ensemble used for the
    // teacher directions when entry_sd^2 = d^-q.
    static SymTensor random_gaussian(int d, int order, double entry_sd, Rng& rng);
};

// Symmetrized s-fold contraction of flattened symmetric tensors. Building a
// plan enumerates, once per (d, k, l, s) shape, every triple
// (output coefficient, input coefficient, input coefficient) with its
// combinatorial weight; apply() is then a flat multiply-add pass, which is
// what the Monte-Carlo scaling checks need.
class ContractionPlan {
public:
    ContractionPlan(int d, int k, int l, int s);

    SymTensor apply(const SymTensor& a, const SymTensor& b) const;

    int d() const { return d_; }
    int order_out() const { return k_ + l_ - 2 * s_; }
    std::size_t term_count() const { return terms_.size(); }

private:
    struct Term {
        std::uint32_t out;
        std::uint32_t a;
        std::uint32_t b;
        double coeff;
    };
    int d_, k_, l_, s_;
    std::shared_ptr<const MultiIndexBasis> a_basis_, b_basis_, out_basis_;
    std::vector<Term> terms_;
};

// One-shot convenience wrapper around ContractionPlan.
SymTensor contract(const SymTensor& a, const SymTensor& b, int s);

}  // namespace hierspec
