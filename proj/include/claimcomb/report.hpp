#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "claimcomb/metrics.hpp"
#include "claimcomb/prediction_matrix.hpp"

namespace claimcomb::report {

struct RowReport {
    std::string name;
    metrics::MetricReport report;
    std::size_t negative_predictions = 0;
    // Paired tests against the per-measure best base (combined rows only):
    // absolute loss under MAE, squared loss under RMSE, squared loss on the
    // rebalanced predictions under Re-RMSE.
    std::optional<metrics::PairedTestResult> test_mae;
    std::optional<metrics::PairedTestResult> test_rmse;
    std::optional<metrics::PairedTestResult> test_re_rmse;
};

struct BestBase {
    // Per measure: which base wins it and with what value.
    std::string mae_name, rmse_name, re_rmse_name, gini_name, sum_name;
    double mae = 0.0, rmse = 0.0, re_rmse = 0.0, gini = 0.0, sum_err = 0.0;
    double se_mae = 0.0, se_rmse = 0.0, se_re_rmse = 0.0;
};

struct EvaluationTable {
    std::vector<RowReport> base_rows;
    BestBase best_base;
    std::vector<RowReport> combined_rows;
    double alpha = 0.05;

    // Text mimics the usual report layout: one row per prediction with SEs
    // in parentheses, a '*' on a combined loss that significantly beats the
    // best base, and the best combined value per column in brackets.
    std::string to_text() const;
    std::string to_csv() const;
    nlohmann::json to_json() const;
};

using NamedPrediction = std::pair<std::string, std::vector<double>>;

// Evaluates base columns and combined predictions against one response.
EvaluationTable evaluate(std::span<const double> y, const PredictionMatrix& base_preds,
                         const std::vector<NamedPrediction>& combined, double alpha);

void write_lorenz_csv(const std::filesystem::path& path, std::span<const double> y);

} // namespace claimcomb::report
