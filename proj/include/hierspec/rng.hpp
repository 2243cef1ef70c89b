#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace hierspec {

// FNV-1a over a label string, used to derive independent named substreams
// from one master seed.
inline std::uint64_t hash_label(std::string_view label) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : label) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Seed for the substream identified by (master, label, salt...). Streams with
// distinct labels or salts are statistically independent, so a teacher, its
// datasets and any permutation draws can be regenerated in isolation.
inline std::uint64_t stream_seed(std::uint64_t master, std::string_view label,
                                 std::uint64_t salt0 = 0, std::uint64_t salt1 = 0) {
    std::uint64_t h = splitmix64(master ^ hash_label(label));
    h = splitmix64(h ^ salt0);
    h = splitmix64(h ^ salt1);
    return h;
}

// mt19937_64 with explicit uniform/gaussian transforms. std::normal_distribution
// is implementation-defined, so we ship our own Box-Muller to keep sampled
// teachers and datasets bit-reproducible across toolchains.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    double uniform() {  // [0, 1)
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform(), u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    int rademacher() { return (gen_() & 1) ? 1 : -1; }

    std::uint64_t integer(std::uint64_t bound) {  // uniform in [0, bound)
        // rejection sampling keeps the draw unbiased and deterministic
        const std::uint64_t limit = bound * (UINT64_MAX / bound);
        std::uint64_t v = gen_();
        while (v >= limit) v = gen_();
        return v % bound;
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[static_cast<std::size_t>(integer(i))]);
        }
    }

    std::mt19937_64& engine() { return gen_; }

private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace hierspec
