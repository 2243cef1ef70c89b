#include "hierspec/multi_index.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace hierspec {

std::uint64_t binomial_checked(std::uint64_t n, std::uint64_t k) {
    if (k > n) return 0;
    if (k > n - k) k = n - k;
    std::uint64_t r = 1;
    for (std::uint64_t i = 1; i <= k; ++i) {
        const std::uint64_t num = n - k + i;
        // r * num / i is exact at every step; check the multiply only
        if (r > UINT64_MAX / num) {
            throw std::overflow_error("binomial_checked: result exceeds 64 bits");
        }
        r = r * num / i;
    }
    return r;
}

std::uint64_t basis_size(int d, int q) {
    if (d < 1 || q < 0) {
        throw std::invalid_argument("basis_size: need d >= 1, q >= 0");
    }
    return binomial_checked(static_cast<std::uint64_t>(d) + q - 1, q);
}

bool grevlex_less_desc(const std::vector<int>& a, const std::vector<int>& b) {
    // descending grevlex: a before b iff the rightmost nonzero of a-b is < 0
    for (std::size_t i = a.size(); i-- > 0;) {
        const int diff = a[i] - b[i];
        if (diff != 0) return diff < 0;
    }
    return false;
}

namespace {

// Enumerate degree-q indices over d variables in descending grevlex order:
// group by the last coordinate ascending, recurse on the first d-1.
void enumerate(int d, int q, std::vector<int>& scratch,
               std::vector<std::vector<int>>& out) {
    if (d == 1) {
        scratch[0] = q;
        out.push_back(scratch);
        return;
    }
    for (int last = 0; last <= q; ++last) {
        scratch[d - 1] = last;
        enumerate(d - 1, q - last, scratch, out);
    }
}

}  // namespace

MultiIndexBasis::MultiIndexBasis(int d, int q) : d_(d), q_(q) {
    const std::uint64_t n = basis_size(d, q);
    if (n > (1ULL << 31)) {
        throw std::overflow_error("MultiIndexBasis: basis too large to enumerate");
    }
    indices_.reserve(n);
    std::vector<int> scratch(d, 0);
    enumerate(d, q, scratch, indices_);

    double qfact = 1.0;
    for (int i = 2; i <= q; ++i) qfact *= i;

    support_.reserve(indices_.size());
    weights_.reserve(indices_.size());
    for (const auto& beta : indices_) {
        std::vector<IndexTerm> terms;
        double bfact = 1.0;
        for (int i = 0; i < d; ++i) {
            if (beta[i] > 0) {
                terms.push_back({i, beta[i]});
                for (int p = 2; p <= beta[i]; ++p) bfact *= p;
            }
        }
        support_.push_back(std::move(terms));
        weights_.push_back(std::sqrt(qfact / bfact));
    }
}

std::size_t MultiIndexBasis::position(const std::vector<int>& beta) const {
    if (static_cast<int>(beta.size()) != d_) {
        throw std::invalid_argument("position: wrong dimension");
    }
    int total = 0;
    for (int b : beta) {
        if (b < 0) throw std::invalid_argument("position: negative entry");
        total += b;
    }
    if (total != q_) throw std::invalid_argument("position: |beta| != q");

    const auto it = std::lower_bound(
        indices_.begin(), indices_.end(), beta,
        [](const std::vector<int>& a, const std::vector<int>& b2) {
            return grevlex_less_desc(a, b2);
        });
    if (it == indices_.end() || *it != beta) {
        throw std::invalid_argument("position: index not found");
    }
    return static_cast<std::size_t>(it - indices_.begin());
}

}  // namespace hierspec
