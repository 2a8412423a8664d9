#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace claimcomb::metrics {

// Ranks 1..n in increasing order of value. Ties are broken so that the
// EARLIER index receives the HIGHER rank: R(s_i) > R(s_j) when
// s_i == s_j and i < j. The result is always an exact permutation.
std::vector<std::int64_t> rank_with_tiebreak(std::span<const double> values);

// Normalized Gini index. Depends on yhat only through its ranks; 1 means
// the prediction reproduces the response ordering exactly, -1 means it
// reverses it exactly. Requires sum(y) > 0, y >= 0, and a response with
// some rank variation (a constant y has an undefined index).
double gini(std::span<const double> y, std::span<const double> yhat);

double mae(std::span<const double> y, std::span<const double> yhat);
double rmse(std::span<const double> y, std::span<const double> yhat);

struct Rebalanced {
    double re_rmse = 0.0;
    double lambda = 1.0; // sum(y) / sum(yhat)
};

// RMSE after scaling predictions so the predicted total matches the
// actual total. Requires sum(yhat) != 0.
Rebalanced rebalanced_rmse(std::span<const double> y, std::span<const double> yhat);

// (sum(yhat) - sum(y)) / sum(y). Requires sum(y) > 0.
double sum_error(std::span<const double> y, std::span<const double> yhat);

struct MetricSes {
    double se_mae = 0.0;
    double se_rmse = 0.0;
    double se_re_rmse = 0.0;
};

// Standard errors: sd(|residual|)/sqrt(n) for MAE, and the delta method
// sd(residual^2)/(2*rmse*sqrt(n)) for (Re-)RMSE, with sample sd. A perfect
// fit reports zero. The rebalancing scale is treated as fixed.
MetricSes metric_ses(std::span<const double> y, std::span<const double> yhat);

struct MetricReport {
    double mae = 0.0;
    double rmse = 0.0;
    double re_rmse = 0.0;
    double gini = 0.0;
    double sum_err = 0.0;
    double se_mae = 0.0;
    double se_rmse = 0.0;
    double se_re_rmse = 0.0;
    double lambda = 1.0;

    static MetricReport evaluate(std::span<const double> y, std::span<const double> yhat);

    nlohmann::json to_json() const;
    static MetricReport from_json(const nlohmann::json& j);

    // One aligned text row in table column order:
    // MAE(se)  RMSE(se)  Re_RMSE(se)  Gini  SUM
    std::string table_row(const std::string& name, int name_width = 12) const;
    static std::string table_header(int name_width = 12);
};

enum class Loss { absolute, squared };

struct PairedTestResult {
    double t_stat = 0.0;
    double p_value = 1.0;
    double mean_diff = 0.0;
    bool better = false; // p < alpha and candidate a has lower mean loss
};

// Paired two-sided t-test on per-row loss differences
// d_i = L(y_i, a_i) - L(y_i, b_i). Degenerate zero-variance differences
// give p = 1 when the mean difference is zero and p = 0 otherwise.
PairedTestResult paired_loss_test(std::span<const double> y,
                                  std::span<const double> yhat_a,
                                  std::span<const double> yhat_b,
                                  Loss loss, double alpha);

struct LorenzPoint {
    double population_fraction = 0.0;
    double claim_fraction = 0.0;
};

// Cumulative claim share after sorting responses ascending: n points
// ((i+1)/n, cum_i/total), ending at (1, 1). Requires sum(y) > 0.
std::vector<LorenzPoint> lorenz_points(std::span<const double> y);

std::size_t count_negative(std::span<const double> values);

} // namespace claimcomb::metrics
