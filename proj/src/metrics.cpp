#include "claimcomb/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include <nlohmann/json.hpp>

#include "claimcomb/errors.hpp"
#include "claimcomb/numeric.hpp"
#include "claimcomb/tdist.hpp"

namespace claimcomb::metrics {
namespace {

void require_same_length(std::span<const double> y, std::span<const double> yhat) {
    if (y.size() != yhat.size()) {
        throw Error::invalid("metric inputs must have equal length");
    }
    if (y.empty()) throw Error::invalid("metric inputs must be nonempty");
}

void require_finite(std::span<const double> xs, const char* what) {
    for (double x : xs) {
        if (!std::isfinite(x)) {
            throw Error::invalid(std::string(what) + " contains a non-finite value");
        }
    }
}

void require_response(std::span<const double> y) {
    require_finite(y, "response");
    for (double v : y) {
        if (v < 0.0) throw Error::invalid("response contains a negative claim cost");
    }
}

} // namespace

std::vector<std::int64_t> rank_with_tiebreak(std::span<const double> values) {
    if (values.empty()) throw Error::invalid("rank_with_tiebreak: empty input");
    require_finite(values, "rank input");
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    // Ascending by value; among ties the LATER index sorts first, so the
    // earlier index lands later and receives the higher rank.
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (values[a] != values[b]) return values[a] < values[b];
        return a > b;
    });
    std::vector<std::int64_t> ranks(n);
    for (std::size_t pos = 0; pos < n; ++pos) {
        ranks[order[pos]] = static_cast<std::int64_t>(pos + 1);
    }
    return ranks;
}

double gini(std::span<const double> y, std::span<const double> yhat) {
    require_same_length(y, yhat);
    require_response(y);
    require_finite(yhat, "prediction");

    NeumaierSum total;
    for (double v : y) total.add(v);
    if (!(total.value() > 0.0)) {
        throw Error::numeric("gini: response sums to zero (undefined denominator)");
    }

    const auto ranks_yhat = rank_with_tiebreak(yhat);
    const auto ranks_y = rank_with_tiebreak(y);
    const double n = static_cast<double>(y.size());
    // Offsetting each rank by (n+1)/2 keeps the sums small and makes the
    // agreement/reversal cases land on exactly +/-1: the offset is an exact
    // half-integer, so reversed ranks produce exactly negated terms.
    const double center = 0.5 * (n + 1.0);

    NeumaierSum num;
    NeumaierSum den;
    for (std::size_t i = 0; i < y.size(); ++i) {
        num.add(y[i] * (static_cast<double>(ranks_yhat[i]) - center));
        den.add(y[i] * (static_cast<double>(ranks_y[i]) - center));
    }
    const double d = den.value();
    if (d == 0.0) {
        throw Error::numeric("gini: response has no rank variation (undefined denominator)");
    }
    return num.value() / d;
}

double mae(std::span<const double> y, std::span<const double> yhat) {
    require_same_length(y, yhat);
    require_finite(y, "response");
    require_finite(yhat, "prediction");
    NeumaierSum s;
    for (std::size_t i = 0; i < y.size(); ++i) s.add(std::abs(y[i] - yhat[i]));
    return s.value() / static_cast<double>(y.size());
}

double rmse(std::span<const double> y, std::span<const double> yhat) {
    require_same_length(y, yhat);
    require_finite(y, "response");
    require_finite(yhat, "prediction");
    NeumaierSum s;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double d = y[i] - yhat[i];
        s.add(d * d);
    }
    return std::sqrt(s.value() / static_cast<double>(y.size()));
}

Rebalanced rebalanced_rmse(std::span<const double> y, std::span<const double> yhat) {
    require_same_length(y, yhat);
    require_finite(y, "response");
    require_finite(yhat, "prediction");
    NeumaierSum sy;
    NeumaierSum syhat;
    for (double v : y) sy.add(v);
    for (double v : yhat) syhat.add(v);
    if (syhat.value() == 0.0) {
        throw Error::numeric("rebalanced_rmse: predictions sum to zero (undefined scale)");
    }
    const double lambda = sy.value() / syhat.value();
    NeumaierSum s;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double d = y[i] - lambda * yhat[i];
        s.add(d * d);
    }
    return {std::sqrt(s.value() / static_cast<double>(y.size())), lambda};
}

double sum_error(std::span<const double> y, std::span<const double> yhat) {
    require_same_length(y, yhat);
    require_finite(y, "response");
    require_finite(yhat, "prediction");
    NeumaierSum sy;
    NeumaierSum sd;
    for (double v : y) sy.add(v);
    for (std::size_t i = 0; i < y.size(); ++i) sd.add(yhat[i] - y[i]);
    if (!(sy.value() > 0.0)) {
        throw Error::numeric("sum_error: response sums to zero (undefined denominator)");
    }
    return sd.value() / sy.value();
}

MetricSes metric_ses(std::span<const double> y, std::span<const double> yhat) {
    require_same_length(y, yhat);
    if (y.size() < 2) throw Error::invalid("metric_ses: need at least 2 observations");
    const double n = static_cast<double>(y.size());
    const double sqrt_n = std::sqrt(n);

    std::vector<double> abs_res(y.size());
    std::vector<double> sq_res(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double d = y[i] - yhat[i];
        abs_res[i] = std::abs(d);
        sq_res[i] = d * d;
    }
    MetricSes out;
    out.se_mae = sample_sd(abs_res) / sqrt_n;

    const double r = rmse(y, yhat);
    out.se_rmse = r > 0.0 ? sample_sd(sq_res) / (2.0 * r * sqrt_n) : 0.0;

    const auto reb = rebalanced_rmse(y, yhat);
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double d = y[i] - reb.lambda * yhat[i];
        sq_res[i] = d * d;
    }
    out.se_re_rmse = reb.re_rmse > 0.0 ? sample_sd(sq_res) / (2.0 * reb.re_rmse * sqrt_n) : 0.0;
    return out;
}

MetricReport MetricReport::evaluate(std::span<const double> y, std::span<const double> yhat) {
    MetricReport r;
    r.mae = metrics::mae(y, yhat);
    r.rmse = metrics::rmse(y, yhat);
    const auto reb = metrics::rebalanced_rmse(y, yhat);
    r.re_rmse = reb.re_rmse;
    r.lambda = reb.lambda;
    r.gini = metrics::gini(y, yhat);
    r.sum_err = metrics::sum_error(y, yhat);
    const auto ses = metrics::metric_ses(y, yhat);
    r.se_mae = ses.se_mae;
    r.se_rmse = ses.se_rmse;
    r.se_re_rmse = ses.se_re_rmse;
    return r;
}

nlohmann::json MetricReport::to_json() const {
    return nlohmann::json{
        {"mae", mae},           {"rmse", rmse},
        {"re_rmse", re_rmse},   {"gini", gini},
        {"sum", sum_err},       {"se_mae", se_mae},
        {"se_rmse", se_rmse},   {"se_re_rmse", se_re_rmse},
        {"lambda", lambda},
    };
}

MetricReport MetricReport::from_json(const nlohmann::json& j) {
    MetricReport r;
    r.mae = j.at("mae").get<double>();
    r.rmse = j.at("rmse").get<double>();
    r.re_rmse = j.at("re_rmse").get<double>();
    r.gini = j.at("gini").get<double>();
    r.sum_err = j.at("sum").get<double>();
    r.se_mae = j.at("se_mae").get<double>();
    r.se_rmse = j.at("se_rmse").get<double>();
    r.se_re_rmse = j.at("se_re_rmse").get<double>();
    r.lambda = j.at("lambda").get<double>();
    return r;
}

std::string MetricReport::table_header(int name_width) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%-*s %18s %18s %18s %9s %8s", name_width,
                  "Prediction", "MAE", "RMSE", "Re_RMSE", "Gini", "SUM");
    return buf;
}

std::string MetricReport::table_row(const std::string& name, int name_width) const {
    char value[64];
    char buf[256];
    auto with_se = [&](double v, double se) {
        std::snprintf(value, sizeof(value), "%.2f(%.2f)", v, se);
        return std::string(value);
    };
    std::snprintf(buf, sizeof(buf), "%-*s %18s %18s %18s %9.4f %8.3f", name_width,
                  name.c_str(), with_se(mae, se_mae).c_str(),
                  with_se(rmse, se_rmse).c_str(),
                  with_se(re_rmse, se_re_rmse).c_str(), gini, sum_err);
    return buf;
}

PairedTestResult paired_loss_test(std::span<const double> y,
                                  std::span<const double> yhat_a,
                                  std::span<const double> yhat_b,
                                  Loss loss, double alpha) {
    require_same_length(y, yhat_a);
    require_same_length(y, yhat_b);
    if (y.size() < 2) throw Error::invalid("paired_loss_test: need at least 2 observations");

    std::vector<double> d(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double ra = y[i] - yhat_a[i];
        const double rb = y[i] - yhat_b[i];
        d[i] = loss == Loss::absolute ? std::abs(ra) - std::abs(rb) : ra * ra - rb * rb;
    }
    PairedTestResult out;
    out.mean_diff = mean(d);
    const double sd = sample_sd(d);
    const double n = static_cast<double>(d.size());
    if (sd == 0.0) {
        // All differences identical: no sampling variability to test against.
        if (out.mean_diff == 0.0) {
            out.t_stat = 0.0;
            out.p_value = 1.0;
        } else {
            out.t_stat = out.mean_diff < 0.0 ? -std::numeric_limits<double>::infinity()
                                             : std::numeric_limits<double>::infinity();
            out.p_value = 0.0;
        }
    } else {
        out.t_stat = out.mean_diff / (sd / std::sqrt(n));
        out.p_value = student_t_two_sided_p(out.t_stat, n - 1.0);
    }
    out.better = out.p_value < alpha && out.mean_diff < 0.0;
    return out;
}

std::vector<LorenzPoint> lorenz_points(std::span<const double> y) {
    if (y.empty()) throw Error::invalid("lorenz_points: empty input");
    require_response(y);
    std::vector<double> sorted(y.begin(), y.end());
    std::sort(sorted.begin(), sorted.end());
    // Total accumulated in the same (sorted) order as the running sum, so
    // the final point is exactly (1, 1).
    NeumaierSum total;
    for (double v : sorted) total.add(v);
    if (!(total.value() > 0.0)) {
        throw Error::numeric("lorenz_points: response sums to zero");
    }
    const double n = static_cast<double>(y.size());
    NeumaierSum running;
    std::vector<LorenzPoint> points(y.size());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        running.add(sorted[i]);
        points[i].population_fraction = static_cast<double>(i + 1) / n;
        points[i].claim_fraction = running.value() / total.value();
    }
    return points;
}

std::size_t count_negative(std::span<const double> values) {
    std::size_t n = 0;
    for (double v : values) {
        if (v < 0.0) ++n;
    }
    return n;
}

} // namespace claimcomb::metrics
