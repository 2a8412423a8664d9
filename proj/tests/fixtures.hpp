#pragma once

#include <vector>

#include "claimcomb/prediction_matrix.hpp"
#include "claimcomb/rng.hpp"

namespace fixtures {

// Zero-inflated nonnegative response with at least one positive entry.
inline std::vector<double> random_response(claimcomb::Rng& rng, std::size_t n,
                                           double zero_prob = 0.5) {
    std::vector<double> y(n, 0.0);
    bool any_positive = false;
    for (std::size_t i = 0; i < n; ++i) {
        if (rng.uniform() >= zero_prob) {
            y[i] = std::exp(rng.normal()) * 100.0;
            any_positive = true;
        }
    }
    if (!any_positive) y[rng.bounded(n)] = std::exp(rng.normal()) * 100.0;
    return y;
}

inline std::vector<double> random_values(claimcomb::Rng& rng, std::size_t n,
                                         double scale = 1.0) {
    std::vector<double> v(n);
    for (auto& x : v) x = scale * rng.normal();
    return v;
}

inline claimcomb::PredictionMatrix random_matrix(claimcomb::Rng& rng, std::size_t n,
                                                 std::size_t k, double scale = 1.0) {
    claimcomb::PredictionMatrix m;
    for (std::size_t j = 0; j < k; ++j) {
        m.add_column("c" + std::to_string(j + 1), random_values(rng, n, scale));
    }
    return m;
}

} // namespace fixtures
