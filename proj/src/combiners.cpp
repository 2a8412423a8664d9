#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "claimcomb/combiners.hpp"
#include "claimcomb/errors.hpp"
#include "claimcomb/numeric.hpp"

namespace claimcomb::combine {
namespace {

void require_columns(const PredictionMatrix& preds) {
    if (preds.cols() == 0) throw Error::invalid("combiner fit: need at least one column");
}

void require_aligned(const PredictionMatrix& preds, std::span<const double> y) {
    if (preds.rows() != y.size()) {
        throw Error::invalid("combiner fit: response length does not match the prediction rows");
    }
}

CombinerModel linear_model(Method method, const PredictionMatrix& preds,
                           std::vector<double> theta, double intercept) {
    CombinerModel model;
    model.method = method;
    model.column_names = preds.names();
    LinearCombiner linear;
    linear.theta = std::move(theta);
    linear.intercept = intercept;
    model.payload = std::move(linear);
    return model;
}

} // namespace

std::string method_name(Method method) {
    switch (method) {
        case Method::sa: return "SA";
        case Method::sa_minus: return "SA-minus";
        case Method::lr_d: return "LR-D";
        case Method::lr_aic: return "LR-AIC";
        case Method::lr_c: return "LR-C";
        case Method::qr: return "QR";
        case Method::gb: return "GB";
        case Method::arm_a: return "ARM-A";
        case Method::sa_s: return "SA-S";
        case Method::arm_i: return "ARM-I";
    }
    throw Error::invalid("unknown combining method");
}

Method method_from_name(const std::string& name) {
    for (Method m : all_methods()) {
        if (method_name(m) == name) return m;
    }
    throw Error::config("unknown combining method '" + name + "'");
}

std::vector<Method> all_methods() {
    return {Method::sa,  Method::sa_minus, Method::lr_d, Method::lr_aic, Method::lr_c,
            Method::qr,  Method::gb,       Method::arm_a, Method::sa_s,  Method::arm_i};
}

CombinerModel fit_sa(const PredictionMatrix& preds) {
    require_columns(preds);
    const double w = 1.0 / static_cast<double>(preds.cols());
    return linear_model(Method::sa, preds, std::vector<double>(preds.cols(), w), 0.0);
}

CombinerModel fit_sa_minus(const PredictionMatrix& preds, std::size_t drop_index) {
    require_columns(preds);
    if (drop_index >= preds.cols()) {
        throw Error::invalid("SA-minus: drop index out of range");
    }
    if (preds.cols() < 2) throw Error::invalid("SA-minus: need at least two columns");
    const double w = 1.0 / static_cast<double>(preds.cols() - 1);
    std::vector<double> theta(preds.cols(), w);
    theta[drop_index] = 0.0;
    auto model = linear_model(Method::sa_minus, preds, std::move(theta), 0.0);
    model.options_json = nlohmann::json{{"drop_index", drop_index}}.dump();
    return model;
}

CombinerModel fit_lr_d(const PredictionMatrix& preds, std::span<const double> y, double alpha) {
    require_columns(preds);
    require_aligned(preds, y);
    if (!(alpha > 0.0 && alpha <= 1.0)) throw Error::invalid("LR-D: alpha must lie in (0,1]");

    const auto full = solvers::ols_fit(preds, y, /*intercept=*/true);
    std::vector<std::size_t> selected;
    for (std::size_t j = 0; j < preds.cols(); ++j) {
        if (full.p_values[j + 1] < alpha) selected.push_back(j);
    }

    std::vector<double> theta(preds.cols(), 0.0);
    double intercept = 0.0;
    if (selected.empty()) {
        // Documented fallback: nothing significant leaves the intercept-only
        // model, i.e. the training mean.
        intercept = mean(y);
    } else if (selected.size() == preds.cols()) {
        intercept = full.coefficients[0];
        for (std::size_t j = 0; j < preds.cols(); ++j) theta[j] = full.coefficients[j + 1];
    } else {
        const auto sub = preds.select_columns(selected);
        const auto refit = solvers::ols_fit(sub, y, /*intercept=*/true);
        intercept = refit.coefficients[0];
        for (std::size_t s = 0; s < selected.size(); ++s) {
            theta[selected[s]] = refit.coefficients[s + 1];
        }
    }
    auto model = linear_model(Method::lr_d, preds, std::move(theta), intercept);
    model.options_json = nlohmann::json{{"alpha", alpha}}.dump();
    return model;
}

CombinerModel fit_lr_aic(const PredictionMatrix& preds, std::span<const double> y,
                         int threads) {
    require_columns(preds);
    require_aligned(preds, y);
    const auto sweep = sweep_all_subsets(preds, y, threads);

    // Smallest AIC wins; ties prefer fewer columns, then the lower mask.
    const SubsetModel* best = nullptr;
    for (const auto& model : sweep.models) {
        if (!model.rank_ok) continue;
        if (best == nullptr) {
            best = &model;
            continue;
        }
        if (model.aic < best->aic ||
            (model.aic == best->aic &&
             (std::popcount(model.mask) < std::popcount(best->mask) ||
              (std::popcount(model.mask) == std::popcount(best->mask) &&
               model.mask < best->mask)))) {
            best = &model;
        }
    }
    if (best == nullptr) throw Error::solver("LR-AIC: every subset was rank deficient");

    std::vector<double> theta(preds.cols(), 0.0);
    std::size_t c = 0;
    for (std::size_t j = 0; j < preds.cols(); ++j) {
        if (best->mask & (1u << j)) theta[j] = best->coefficients[c++];
    }
    auto model = linear_model(Method::lr_aic, preds, std::move(theta), best->intercept);
    model.selected_mask = best->mask;
    model.skipped_subsets = sweep.skipped_rank_deficient;
    return model;
}

CombinerModel fit_lr_c(const PredictionMatrix& preds, std::span<const double> y) {
    require_columns(preds);
    require_aligned(preds, y);
    // The simplex constraint is stated on the prediction weights alone, so
    // LR-C carries no intercept.
    const auto fit = solvers::simplex_ls(preds, y);
    return linear_model(Method::lr_c, preds, fit.weights, 0.0);
}

CombinerModel fit_qr_combiner(const PredictionMatrix& preds, std::span<const double> y,
                              double tau) {
    require_columns(preds);
    require_aligned(preds, y);
    const auto fit = solvers::quantile_fit(preds, y, tau, /*intercept=*/true);
    std::vector<double> theta(fit.coefficients.begin() + 1, fit.coefficients.end());
    auto model = linear_model(Method::qr, preds, std::move(theta), fit.coefficients[0]);
    model.options_json = nlohmann::json{{"tau", tau}}.dump();
    return model;
}

CombinerModel fit_gb_combiner(const PredictionMatrix& preds, std::span<const double> y,
                              const solvers::BoostOptions& options) {
    require_columns(preds);
    require_aligned(preds, y);
    CombinerModel model;
    model.method = Method::gb;
    model.column_names = preds.names();
    model.payload = solvers::boost_fit(preds, y, options);
    model.options_json = nlohmann::json{{"n_trees", options.n_trees},
                                        {"max_depth", options.max_depth},
                                        {"learning_rate", options.learning_rate},
                                        {"min_leaf", options.min_leaf}}
                             .dump();
    return model;
}

CombinerModel fit_sa_s(const PredictionMatrix& preds, std::span<const double> y,
                       int threads) {
    require_columns(preds);
    require_aligned(preds, y);
    auto sweep = sweep_all_subsets(preds, y, threads);
    const std::size_t count = sweep.models.size();
    const std::size_t usable = count - sweep.skipped_rank_deficient;
    if (usable == 0) throw Error::solver("SA-S: every subset was rank deficient");

    std::vector<double> weights(count, 0.0);
    const double w = 1.0 / static_cast<double>(usable);
    for (std::size_t mask = 0; mask < count; ++mask) {
        if (sweep.models[mask].rank_ok) weights[mask] = w;
    }
    CombinerModel model;
    model.method = Method::sa_s;
    model.column_names = preds.names();
    model.skipped_subsets = sweep.skipped_rank_deficient;
    SubsetCombiner subset;
    subset.weights = std::move(weights);
    subset.models = std::move(sweep.models);
    model.payload = std::move(subset);
    return model;
}

CombinerModel fit(Method method, const PredictionMatrix& preds, std::span<const double> y,
                  const FitOptions& options) {
    switch (method) {
        case Method::sa: return fit_sa(preds);
        case Method::sa_minus: return fit_sa_minus(preds, options.drop_index);
        case Method::lr_d: return fit_lr_d(preds, y, options.alpha);
        case Method::lr_aic: return fit_lr_aic(preds, y, options.threads);
        case Method::lr_c: return fit_lr_c(preds, y);
        case Method::qr: return fit_qr_combiner(preds, y, options.qr_tau);
        case Method::gb: return fit_gb_combiner(preds, y, options.boost);
        case Method::arm_a: return fit_arm_a(preds, y, options.arm);
        case Method::sa_s: return fit_sa_s(preds, y, options.threads);
        case Method::arm_i: return fit_arm_i(preds, y, options.arm, options.threads);
    }
    throw Error::invalid("unknown combining method");
}

std::vector<double> predict(const CombinerModel& model, const PredictionMatrix& preds) {
    if (preds.names() != model.column_names) {
        throw Error::invalid("predict: prediction columns do not match the fitted model");
    }
    if (const auto* linear = std::get_if<LinearCombiner>(&model.payload)) {
        std::vector<double> out(preds.rows(), linear->intercept);
        for (std::size_t j = 0; j < preds.cols(); ++j) {
            const double b = linear->theta[j];
            if (b == 0.0) continue;
            const auto col = preds.column(j);
            for (std::size_t i = 0; i < out.size(); ++i) out[i] += b * col[i];
        }
        return out;
    }
    if (const auto* subset = std::get_if<SubsetCombiner>(&model.payload)) {
        // Every subset model is affine, so the weighted ensemble collapses to
        // a single affine map; accumulate it in mask order.
        double intercept = 0.0;
        std::vector<double> theta(preds.cols(), 0.0);
        for (std::size_t mask = 0; mask < subset->weights.size(); ++mask) {
            const double w = subset->weights[mask];
            if (w == 0.0) continue;
            const auto& sub = subset->models[mask];
            intercept += w * sub.intercept;
            std::size_t c = 0;
            for (std::size_t j = 0; j < preds.cols(); ++j) {
                if (sub.mask & (1u << j)) theta[j] += w * sub.coefficients[c++];
            }
        }
        std::vector<double> out(preds.rows(), intercept);
        for (std::size_t j = 0; j < preds.cols(); ++j) {
            if (theta[j] == 0.0) continue;
            const auto col = preds.column(j);
            for (std::size_t i = 0; i < out.size(); ++i) out[i] += theta[j] * col[i];
        }
        return out;
    }
    const auto& boosted = std::get<solvers::BoostedModel>(model.payload);
    return boosted.predict(preds);
}

std::optional<std::vector<double>> convex_weights(const CombinerModel& model) {
    switch (model.method) {
        case Method::sa:
        case Method::sa_minus:
        case Method::lr_c:
        case Method::arm_a:
            return std::get<LinearCombiner>(model.payload).theta;
        case Method::sa_s:
        case Method::arm_i:
            return std::get<SubsetCombiner>(model.payload).weights;
        default:
            return std::nullopt;
    }
}

nlohmann::json CombinerModel::to_json() const {
    nlohmann::json j{{"method", method_name(method)},
                     {"columns", column_names},
                     {"seed", seed}};
    if (!options_json.empty()) j["options"] = nlohmann::json::parse(options_json);
    nlohmann::json diag;
    if (method == Method::lr_aic) diag["selected_mask"] = selected_mask;
    if (skipped_subsets > 0) diag["skipped_rank_deficient_subsets"] = skipped_subsets;
    if (!diag.is_null()) j["diagnostics"] = std::move(diag);

    if (const auto* linear = std::get_if<LinearCombiner>(&payload)) {
        j["intercept"] = linear->intercept;
        j["theta"] = linear->theta;
    } else if (const auto* subset = std::get_if<SubsetCombiner>(&payload)) {
        j["subset_count"] = subset->weights.size();
        nlohmann::json weights = nlohmann::json::array();
        nlohmann::json models = nlohmann::json::array();
        for (std::size_t mask = 0; mask < subset->weights.size(); ++mask) {
            if (subset->weights[mask] <= 1e-12) continue; // sparse emission
            weights.push_back({{"mask", mask}, {"w", subset->weights[mask]}});
            const auto& m = subset->models[mask];
            models.push_back({{"mask", m.mask},
                              {"intercept", m.intercept},
                              {"coefficients", m.coefficients},
                              {"rss", m.rss},
                              {"aic", m.aic}});
        }
        j["weights"] = std::move(weights);
        j["models"] = std::move(models);
    } else {
        j["boosted"] = std::get<solvers::BoostedModel>(payload).to_json();
    }
    return j;
}

CombinerModel CombinerModel::from_json(const nlohmann::json& j) {
    CombinerModel model;
    model.method = method_from_name(j.at("method").get<std::string>());
    model.column_names = j.at("columns").get<std::vector<std::string>>();
    model.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("options")) model.options_json = j["options"].dump();
    if (j.contains("diagnostics")) {
        model.selected_mask = j["diagnostics"].value("selected_mask", std::uint32_t{0});
        model.skipped_subsets =
            j["diagnostics"].value("skipped_rank_deficient_subsets", std::size_t{0});
    }

    if (j.contains("theta")) {
        LinearCombiner linear;
        linear.intercept = j.at("intercept").get<double>();
        linear.theta = j.at("theta").get<std::vector<double>>();
        if (linear.theta.size() != model.column_names.size()) {
            throw Error::data("combiner model: theta length does not match the columns");
        }
        model.payload = std::move(linear);
    } else if (j.contains("weights")) {
        SubsetCombiner subset;
        const auto count = j.at("subset_count").get<std::size_t>();
        subset.weights.assign(count, 0.0);
        subset.models.resize(count);
        for (std::size_t mask = 0; mask < count; ++mask) {
            subset.models[mask].mask = static_cast<std::uint32_t>(mask);
            subset.models[mask].rank_ok = false; // only stored models are usable
        }
        for (const auto& w : j.at("weights")) {
            subset.weights.at(w.at("mask").get<std::size_t>()) = w.at("w").get<double>();
        }
        for (const auto& m : j.at("models")) {
            SubsetModel sub;
            sub.mask = m.at("mask").get<std::uint32_t>();
            sub.intercept = m.at("intercept").get<double>();
            sub.coefficients = m.at("coefficients").get<std::vector<double>>();
            sub.rss = m.at("rss").get<double>();
            sub.aic = m.at("aic").get<double>();
            sub.rank_ok = true;
            subset.models.at(sub.mask) = std::move(sub);
        }
        model.payload = std::move(subset);
    } else if (j.contains("boosted")) {
        model.payload = solvers::BoostedModel::from_json(j.at("boosted"));
    } else {
        throw Error::data("combiner model: missing payload");
    }
    return model;
}

} // namespace claimcomb::combine
