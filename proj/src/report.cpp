#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "claimcomb/errors.hpp"
#include "claimcomb/report.hpp"
#include "io_util.hpp"

namespace claimcomb::report {
namespace {

std::string fmt2(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

// "value(se)" with optional significance star and best-in-column brackets.
std::string cell(double v, double se, bool significant, bool best) {
    std::string s = fmt2(v);
    if (significant) s += '*';
    if (best) s = "[" + s + "]";
    s += "(" + fmt2(se) + ")";
    return s;
}

std::string gini_cell(double v, bool best) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    std::string s = buf;
    if (best) s = "[" + s + "]";
    return s;
}

std::string sum_cell(double v, bool best) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    std::string s = buf;
    if (best) s = "[" + s + "]";
    return s;
}

struct BestFlags {
    std::size_t mae = SIZE_MAX, rmse = SIZE_MAX, re_rmse = SIZE_MAX, gini = SIZE_MAX,
                sum = SIZE_MAX;
};

BestFlags best_among(const std::vector<RowReport>& rows) {
    BestFlags best;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& m = rows[i].report;
        if (best.mae == SIZE_MAX || m.mae < rows[best.mae].report.mae) best.mae = i;
        if (best.rmse == SIZE_MAX || m.rmse < rows[best.rmse].report.rmse) best.rmse = i;
        if (best.re_rmse == SIZE_MAX || m.re_rmse < rows[best.re_rmse].report.re_rmse) {
            best.re_rmse = i;
        }
        if (best.gini == SIZE_MAX || m.gini > rows[best.gini].report.gini) best.gini = i;
        if (best.sum == SIZE_MAX ||
            std::abs(m.sum_err) < std::abs(rows[best.sum].report.sum_err)) {
            best.sum = i;
        }
    }
    return best;
}

void append_row(std::string& out, const std::string& name, const std::string& mae,
                const std::string& rmse, const std::string& re_rmse,
                const std::string& gini, const std::string& sum) {
    char buf[320];
    std::snprintf(buf, sizeof(buf), "%-12s %20s %20s %20s %10s %10s\n", name.c_str(),
                  mae.c_str(), rmse.c_str(), re_rmse.c_str(), gini.c_str(), sum.c_str());
    out += buf;
}

nlohmann::json test_json(const std::optional<metrics::PairedTestResult>& t) {
    if (!t) return nullptr;
    return nlohmann::json{{"t_stat", t->t_stat},
                          {"p_value", t->p_value},
                          {"mean_diff", t->mean_diff},
                          {"better", t->better}};
}

} // namespace

EvaluationTable evaluate(std::span<const double> y, const PredictionMatrix& base_preds,
                         const std::vector<NamedPrediction>& combined, double alpha) {
    if (base_preds.cols() == 0) throw Error::invalid("evaluate: no base predictions");
    EvaluationTable table;
    table.alpha = alpha;

    for (std::size_t j = 0; j < base_preds.cols(); ++j) {
        RowReport row;
        row.name = base_preds.name(j);
        row.report = metrics::MetricReport::evaluate(y, base_preds.column(j));
        row.negative_predictions = metrics::count_negative(base_preds.column(j));
        table.base_rows.push_back(std::move(row));
    }

    const auto best = best_among(table.base_rows);
    auto& bb = table.best_base;
    bb.mae_name = table.base_rows[best.mae].name;
    bb.mae = table.base_rows[best.mae].report.mae;
    bb.se_mae = table.base_rows[best.mae].report.se_mae;
    bb.rmse_name = table.base_rows[best.rmse].name;
    bb.rmse = table.base_rows[best.rmse].report.rmse;
    bb.se_rmse = table.base_rows[best.rmse].report.se_rmse;
    bb.re_rmse_name = table.base_rows[best.re_rmse].name;
    bb.re_rmse = table.base_rows[best.re_rmse].report.re_rmse;
    bb.se_re_rmse = table.base_rows[best.re_rmse].report.se_re_rmse;
    bb.gini_name = table.base_rows[best.gini].name;
    bb.gini = table.base_rows[best.gini].report.gini;
    bb.sum_name = table.base_rows[best.sum].name;
    bb.sum_err = table.base_rows[best.sum].report.sum_err;

    const auto best_mae_col = base_preds.column(base_preds.column_index(bb.mae_name));
    const auto best_rmse_col = base_preds.column(base_preds.column_index(bb.rmse_name));
    const auto best_re_col = base_preds.column(base_preds.column_index(bb.re_rmse_name));

    // Rebalance the Re-RMSE reference once; each combined row is rebalanced
    // with its own scale before the squared-loss comparison.
    const auto reb_ref = metrics::rebalanced_rmse(y, best_re_col);
    std::vector<double> scaled_ref(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) scaled_ref[i] = reb_ref.lambda * best_re_col[i];

    for (const auto& [name, values] : combined) {
        if (values.size() != y.size()) {
            throw Error::invalid("evaluate: combined prediction '" + name +
                                 "' has the wrong length");
        }
        RowReport row;
        row.name = name;
        row.report = metrics::MetricReport::evaluate(y, values);
        row.negative_predictions = metrics::count_negative(values);
        row.test_mae =
            metrics::paired_loss_test(y, values, best_mae_col, metrics::Loss::absolute, alpha);
        row.test_rmse =
            metrics::paired_loss_test(y, values, best_rmse_col, metrics::Loss::squared, alpha);
        std::vector<double> scaled(y.size());
        for (std::size_t i = 0; i < y.size(); ++i) scaled[i] = row.report.lambda * values[i];
        row.test_re_rmse =
            metrics::paired_loss_test(y, scaled, scaled_ref, metrics::Loss::squared, alpha);
        table.combined_rows.push_back(std::move(row));
    }
    return table;
}

std::string EvaluationTable::to_text() const {
    std::string out;
    append_row(out, "Prediction", "MAE", "RMSE", "Re_RMSE", "Gini", "SUM");
    out += std::string(96, '-') + "\n";
    for (const auto& row : base_rows) {
        const auto& m = row.report;
        append_row(out, row.name, cell(m.mae, m.se_mae, false, false),
                   cell(m.rmse, m.se_rmse, false, false),
                   cell(m.re_rmse, m.se_re_rmse, false, false), gini_cell(m.gini, false),
                   sum_cell(m.sum_err, false));
    }
    append_row(out, "Best_base", cell(best_base.mae, best_base.se_mae, false, false),
               cell(best_base.rmse, best_base.se_rmse, false, false),
               cell(best_base.re_rmse, best_base.se_re_rmse, false, false),
               gini_cell(best_base.gini, false), sum_cell(best_base.sum_err, false));
    if (!combined_rows.empty()) {
        out += std::string(96, '-') + "\n";
        const auto best = best_among(combined_rows);
        for (std::size_t i = 0; i < combined_rows.size(); ++i) {
            const auto& row = combined_rows[i];
            const auto& m = row.report;
            append_row(out, row.name,
                       cell(m.mae, m.se_mae, row.test_mae && row.test_mae->better,
                            best.mae == i),
                       cell(m.rmse, m.se_rmse, row.test_rmse && row.test_rmse->better,
                            best.rmse == i),
                       cell(m.re_rmse, m.se_re_rmse,
                            row.test_re_rmse && row.test_re_rmse->better, best.re_rmse == i),
                       gini_cell(m.gini, best.gini == i), sum_cell(m.sum_err, best.sum == i));
        }
        char note[160];
        std::snprintf(note, sizeof(note),
                      "* paired two-sided t-test vs. the best base, p < %g and lower loss;"
                      " [] best combined value per column\n",
                      alpha);
        out += note;
    }
    for (const auto* rows : {&base_rows, &combined_rows}) {
        for (const auto& row : *rows) {
            if (row.negative_predictions > 0) {
                out += "note: prediction '" + row.name + "' contains " +
                       std::to_string(row.negative_predictions) + " negative value(s)\n";
            }
        }
    }
    return out;
}

std::string EvaluationTable::to_csv() const {
    using detail::fmt_double;
    std::string out =
        "name,type,mae,se_mae,rmse,se_rmse,re_rmse,se_re_rmse,gini,sum,lambda,"
        "negative_predictions,p_mae,sig_mae,p_rmse,sig_rmse,p_re_rmse,sig_re_rmse\n";
    auto emit = [&](const RowReport& row, const char* type) {
        const auto& m = row.report;
        out += row.name;
        out += ',';
        out += type;
        for (double v : {m.mae, m.se_mae, m.rmse, m.se_rmse, m.re_rmse, m.se_re_rmse, m.gini,
                         m.sum_err, m.lambda}) {
            out += ',' + fmt_double(v);
        }
        out += ',' + std::to_string(row.negative_predictions);
        for (const auto& t : {row.test_mae, row.test_rmse, row.test_re_rmse}) {
            if (t) {
                out += ',' + fmt_double(t->p_value) + ',' + (t->better ? "1" : "0");
            } else {
                out += ",,";
            }
        }
        out += '\n';
    };
    for (const auto& row : base_rows) emit(row, "base");
    for (const auto& row : combined_rows) emit(row, "combined");
    return out;
}

nlohmann::json EvaluationTable::to_json() const {
    nlohmann::json bases = nlohmann::json::array();
    for (const auto& row : base_rows) {
        bases.push_back({{"name", row.name},
                         {"metrics", row.report.to_json()},
                         {"negative_predictions", row.negative_predictions}});
    }
    nlohmann::json combined = nlohmann::json::array();
    for (const auto& row : combined_rows) {
        combined.push_back({{"name", row.name},
                            {"metrics", row.report.to_json()},
                            {"negative_predictions", row.negative_predictions},
                            {"tests",
                             {{"mae", test_json(row.test_mae)},
                              {"rmse", test_json(row.test_rmse)},
                              {"re_rmse", test_json(row.test_re_rmse)}}}});
    }
    return nlohmann::json{
        {"alpha", alpha},
        {"best_base",
         {{"mae", {{"name", best_base.mae_name}, {"value", best_base.mae}}},
          {"rmse", {{"name", best_base.rmse_name}, {"value", best_base.rmse}}},
          {"re_rmse", {{"name", best_base.re_rmse_name}, {"value", best_base.re_rmse}}},
          {"gini", {{"name", best_base.gini_name}, {"value", best_base.gini}}},
          {"sum", {{"name", best_base.sum_name}, {"value", best_base.sum_err}}}}},
        {"bases", std::move(bases)},
        {"combined", std::move(combined)}};
}

void write_lorenz_csv(const std::filesystem::path& path, std::span<const double> y) {
    const auto points = metrics::lorenz_points(y);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error::data("cannot write Lorenz file: " + path.string());
    out << "population_fraction,claim_fraction\n0,0\n";
    for (const auto& p : points) {
        out << detail::fmt_double(p.population_fraction) << ','
            << detail::fmt_double(p.claim_fraction) << '\n';
    }
    if (!out) throw Error::data("failed while writing Lorenz file: " + path.string());
}

} // namespace claimcomb::report
