#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace claimcomb {

// Neumaier compensated summation. Claim totals reach ~1e12 once multiplied
// by ranks at n ~ 2e4, so the metric sums are all accumulated this way.
class NeumaierSum {
public:
    void add(double x) {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x)) {
            comp_ += (sum_ - t) + x;
        } else {
            comp_ += (x - t) + sum_;
        }
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

inline double compensated_sum(std::span<const double> xs) {
    NeumaierSum s;
    for (double x : xs) s.add(x);
    return s.value();
}

// log(sum_i exp(args[i])), stable for large negative arguments.
inline double log_sum_exp(std::span<const double> args) {
    double max_arg = -std::numeric_limits<double>::infinity();
    for (double a : args) max_arg = std::max(max_arg, a);
    if (!std::isfinite(max_arg)) return max_arg;
    double sum = 0.0;
    for (double a : args) sum += std::exp(a - max_arg);
    return max_arg + std::log(sum);
}

inline double mean(std::span<const double> xs) {
    if (xs.empty()) return 0.0;
    return compensated_sum(xs) / static_cast<double>(xs.size());
}

// Sample skewness m3 / m2^(3/2) (biased moment form); 0 for degenerate input.
inline double sample_skewness(std::span<const double> xs) {
    if (xs.size() < 2) return 0.0;
    const double m = mean(xs);
    NeumaierSum s2;
    NeumaierSum s3;
    for (double x : xs) {
        const double d = x - m;
        s2.add(d * d);
        s3.add(d * d * d);
    }
    const double n = static_cast<double>(xs.size());
    const double m2 = s2.value() / n;
    if (!(m2 > 0.0)) return 0.0;
    return (s3.value() / n) / std::pow(m2, 1.5);
}

// Sample standard deviation (n-1 denominator); 0 for n < 2.
inline double sample_sd(std::span<const double> xs) {
    const std::size_t n = xs.size();
    if (n < 2) return 0.0;
    const double m = mean(xs);
    NeumaierSum s;
    for (double x : xs) {
        const double d = x - m;
        s.add(d * d);
    }
    const double v = s.value() / static_cast<double>(n - 1);
    return v > 0.0 ? std::sqrt(v) : 0.0;
}

} // namespace claimcomb
