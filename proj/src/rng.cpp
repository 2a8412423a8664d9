#include "claimcomb/rng.hpp"

#include <cmath>

#include "claimcomb/errors.hpp"

namespace claimcomb {

std::uint64_t Rng::split_mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::string_view tag) {
    std::uint64_t h = 0xcbf29ce484222325ULL; // FNV-1a offset basis
    for (unsigned char c : tag) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return Rng::split_mix64(base ^ h);
}

Rng Rng::derive(std::string_view tag) const {
    return Rng(derive_seed(seed_, tag));
}

std::uint64_t Rng::bounded(std::uint64_t bound) {
    if (bound == 0) throw Error::invalid("Rng::bounded: bound must be positive");
    const std::uint64_t threshold = (~bound + 1) % bound; // 2^64 mod bound
    for (;;) {
        const std::uint64_t r = gen_();
        if (r >= threshold) return r % bound;
    }
}

double Rng::normal() {
    if (has_cached_normal_) {
        has_cached_normal_ = false;
        return cached_normal_;
    }
    const double u1 = uniform_pos();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    cached_normal_ = r * std::sin(theta);
    has_cached_normal_ = true;
    return r * std::cos(theta);
}

double Rng::gamma(double shape, double scale) {
    if (!(shape > 0.0) || !(scale > 0.0)) {
        throw Error::invalid("Rng::gamma: shape and scale must be positive");
    }
    if (shape < 1.0) {
        const double u = uniform_pos();
        return gamma(shape + 1.0, scale) * std::pow(u, 1.0 / shape);
    }
    // Marsaglia-Tsang squeeze.
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x;
        double v;
        do {
            x = normal();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = uniform_pos();
        const double x2 = x * x;
        if (u < 1.0 - 0.0331 * x2 * x2) return d * v * scale;
        if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v * scale;
    }
}

int Rng::poisson(double mean) {
    if (mean < 0.0 || !std::isfinite(mean)) {
        throw Error::invalid("Rng::poisson: mean must be finite and nonnegative");
    }
    if (mean == 0.0) return 0;
    // Chunk the rate so exp(-chunk) stays well inside normal range.
    constexpr double kChunk = 256.0;
    int count = 0;
    double remaining = mean;
    while (remaining > 0.0) {
        const double lambda = remaining > kChunk ? kChunk : remaining;
        remaining -= lambda;
        const double limit = std::exp(-lambda);
        double prod = uniform_pos();
        while (prod > limit) {
            ++count;
            prod *= uniform_pos();
        }
    }
    return count;
}

} // namespace claimcomb
