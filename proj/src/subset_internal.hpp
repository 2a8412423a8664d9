#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "claimcomb/combiners.hpp"
#include "claimcomb/prediction_matrix.hpp"

namespace claimcomb::combine::detail {

// Cross moments of the intercept-augmented design: entry (0,0) is n,
// row/column 0 is the intercept. Every subset OLS below is solved from
// these, so a full sweep costs one pass over the data.
struct CrossMoments {
    Eigen::MatrixXd xtx; // (K+1) x (K+1)
    Eigen::VectorXd xty; // (K+1)
    double yty = 0.0;
    std::size_t n = 0;
};

CrossMoments cross_moments(const PredictionMatrix& preds, std::span<const double> y);
CrossMoments cross_moments_rows(const PredictionMatrix& preds, std::span<const double> y,
                                std::span<const std::size_t> rows);

// Solves the subset normal equations by Cholesky on the scaled Gram matrix;
// pivots below 1e-10 (relative, correlation scale) mark rank deficiency and
// leave rank_ok false.
SubsetModel solve_subset(const CrossMoments& m, std::uint32_t mask);

// Residual sum of squares of a fitted subset model under *other* cross
// moments (used to assess a D1 refit on D2).
double subset_rss_under(const CrossMoments& m, const SubsetModel& model);

} // namespace claimcomb::combine::detail
