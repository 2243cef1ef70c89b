#pragma once

#include <cstdint>
#include <vector>

namespace hierspec {

// B(d, q) = binomial(d + q - 1, q), the number of degree-q multi-indices over
// d variables. Throws std::overflow_error when the count exceeds 64 bits --
// such configurations are beyond desk scale anyway.
std::uint64_t basis_size(int d, int q);

std::uint64_t binomial_checked(std::uint64_t n, std::uint64_t k);

// One nonzero entry of a multi-index: coordinate `var` raised to Hermite
// degree `power`.
struct IndexTerm {
    int var;
    int power;
};

// Ordered enumeration of the multi-indices beta in Z_{>=0}^d with |beta| = q.
// The order is graded reverse-lexicographic, descending (for d=2, q=2:
// (2,0), (1,1), (0,2)); it is fixed once so that flattened tensors and
// feature vectors serialize deterministically.
class MultiIndexBasis {
public:
    MultiIndexBasis(int d, int q);

    int d() const { return d_; }
    int q() const { return q_; }
    std::size_t size() const { return indices_.size(); }

    const std::vector<int>& index(std::size_t i) const { return indices_[i]; }
    const std::vector<std::vector<int>>& indices() const { return indices_; }

    // Nonzero entries of index i, for cheap evaluation of products.
    const std::vector<IndexTerm>& support(std::size_t i) const { return support_[i]; }

    // sqrt(q!/beta!): the weight that makes flattened inner products agree
    // with the dense Frobenius contraction.
    double flatten_weight(std::size_t i) const { return weights_[i]; }

    // Position of a given multi-index; throws std::invalid_argument if it is
    // not a degree-q index over d variables.
    std::size_t position(const std::vector<int>& beta) const;

private:
    int d_;
    int q_;
    std::vector<std::vector<int>> indices_;
    std::vector<std::vector<IndexTerm>> support_;
    std::vector<double> weights_;
};

// True if a precedes b in descending grevlex (same total degree assumed).
bool grevlex_less_desc(const std::vector<int>& a, const std::vector<int>& b);

}  // namespace hierspec
