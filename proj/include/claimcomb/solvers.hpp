#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "claimcomb/prediction_matrix.hpp"

namespace claimcomb::solvers {

// ---------------------------------------------------------------------------
// Ordinary least squares with inference

struct OlsFit {
    bool intercept = true;
    // coefficients[0] is the intercept when present, then one per column.
    std::vector<double> coefficients;
    std::vector<double> coefficient_ses;
    std::vector<double> p_values; // two-sided, t with n-k df
    double rss = 0.0;
    double aic = 0.0; // n*ln(rss/n) + 2*(k+1); -inf when rss == 0
    std::size_t n = 0;
    std::size_t k = 0; // fitted coefficients, intercept included

    std::vector<double> predict(const PredictionMatrix& preds) const;
};

// Householder-QR least squares. Throws a solver error when n <= k or the
// design is rank deficient (pivot threshold 1e-10 relative to the leading
// column norm).
OlsFit ols_fit(const PredictionMatrix& preds, std::span<const double> y, bool intercept);

// AIC convention used throughout: n*ln(rss/n) + 2*(k+1), where k counts all
// fitted coefficients including the intercept and the +1 is the variance
// parameter. A perfect fit (rss == 0) maps to -infinity and ranks first.
double aic_value(std::size_t n, std::size_t k, double rss);

// ---------------------------------------------------------------------------
// Least squares over the probability simplex

struct SimplexFit {
    std::vector<double> weights; // >= 0, sums to 1
    double kkt_residual = 0.0;
    std::size_t iterations = 0;
};

// min ||y - Xw||^2 s.t. w >= 0, sum(w) = 1. Projected gradient plus an
// active-set polish; the returned KKT residual is <= 1e-8 on well-posed
// inputs.
SimplexFit simplex_ls(const PredictionMatrix& preds, std::span<const double> y);

// Stationarity + feasibility violation of a feasible point (used by the
// solver and directly by tests).
double simplex_kkt_residual(const PredictionMatrix& preds, std::span<const double> y,
                            std::span<const double> weights);

// Euclidean projection onto the probability simplex (sort-based, exact).
std::vector<double> project_to_simplex(std::span<const double> v);

// ---------------------------------------------------------------------------
// Quantile regression

struct QuantileFit {
    double tau = 0.5;
    bool intercept = true;
    std::vector<double> coefficients; // intercept first when present
    double objective = 0.0;           // sum of rho_tau(residual) at the fit
    std::size_t iterations = 0;

    std::vector<double> predict(const PredictionMatrix& preds) const;
};

struct QuantileOptions {
    std::size_t max_iterations = 20000;
    double tolerance = 1e-8; // relative objective change per smoothing stage
};

// Minimizes sum_i rho_tau(y_i - x_i'b), rho_tau(u) = u*(tau - 1{u<0}),
// by iteratively reweighted least squares with a decreasing smoothing
// epsilon (down to 1e-8) and, for small column counts, an exact vertex
// polish over interpolating bases. Ties between equal-objective vertices
// resolve to the lexicographically smallest coefficient vector, which makes
// the even-n median the lower one.
QuantileFit quantile_fit(const PredictionMatrix& preds, std::span<const double> y,
                         double tau, bool intercept = true,
                         const QuantileOptions& options = {});

// ---------------------------------------------------------------------------
// Least-squares gradient boosting

struct TreeNode {
    int feature = -1; // -1 marks a leaf
    double threshold = 0.0;
    double value = 0.0; // leaf payload
    int left = -1;
    int right = -1;
};

struct RegressionTree {
    std::vector<TreeNode> nodes; // nodes[0] is the root

    double predict_row(const PredictionMatrix& preds, std::size_t row) const;
};

struct BoostOptions {
    std::size_t n_trees = 200;
    std::size_t max_depth = 3;
    double learning_rate = 0.1;
    std::size_t min_leaf = 1;
    std::uint64_t seed = 0; // reserved; fitting is deterministic (no subsampling)
};

struct BoostedModel {
    double base_score = 0.0;
    double learning_rate = 0.1;
    std::vector<RegressionTree> trees;
    std::vector<double> train_mse; // per boosting round, nonincreasing

    std::vector<double> predict(const PredictionMatrix& preds) const;

    nlohmann::json to_json() const;
    static BoostedModel from_json(const nlohmann::json& j);
};

// Stagewise least-squares boosting of depth-limited regression trees on the
// prediction columns. base_score = mean(y); training MSE never increases.
BoostedModel boost_fit(const PredictionMatrix& preds, std::span<const double> y,
                       const BoostOptions& options = {});

} // namespace claimcomb::solvers
