#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace claimcomb {

// Deterministic random stream used by every generator in the library.
//
// The core is std::mt19937_64, whose output sequence is pinned by the C++
// standard, so fixtures are stable across platforms and compilers. All
// variate transformations (uniform, normal, gamma, poisson) are implemented
// here rather than with std::*_distribution, because the standard does not
// pin those algorithms.
class Rng {
public:
    explicit Rng(std::uint64_t seed)
        : seed_(seed), gen_(split_mix64(seed)) {}

    std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64() { return gen_(); }

    // Uniform on [0, 1): 53 random bits.
    double uniform() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    // Uniform on (0, 1].
    double uniform_pos() { return 1.0 - uniform(); }

    // Uniform integer in [0, bound) by rejection (unbiased).
    std::uint64_t bounded(std::uint64_t bound);

    // Standard normal via Box-Muller; generates pairs, caches one.
    double normal();

    // Marsaglia-Tsang for shape >= 1; shape < 1 uses the power boost
    // Gamma(a) = Gamma(a+1) * U^(1/a).
    double gamma(double shape, double scale);

    // Knuth product method, chunked so exp(-mean) never underflows.
    int poisson(double mean);

    // Fisher-Yates, in place.
    template <typename T>
    void shuffle(std::span<T> xs) {
        for (std::size_t i = xs.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(bounded(i));
            std::swap(xs[i - 1], xs[j]);
        }
    }

    // Independent child stream; the tag keeps sibling streams decorrelated.
    Rng derive(std::string_view tag) const;

    static std::uint64_t split_mix64(std::uint64_t x);

private:
    std::uint64_t seed_;
    std::mt19937_64 gen_;
    double cached_normal_ = 0.0;
    bool has_cached_normal_ = false;
};

// Derives a 64-bit seed from a base seed and a textual tag (FNV-1a mix).
std::uint64_t derive_seed(std::uint64_t base, std::string_view tag);

} // namespace claimcomb
