#include <algorithm>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "claimcomb/errors.hpp"
#include "claimcomb/numeric.hpp"
#include "claimcomb/rng.hpp"
#include "subset_internal.hpp"

namespace claimcomb::combine {
namespace {

struct SplitRows {
    std::vector<std::size_t> d1;
    std::vector<std::size_t> d2;
};

SplitRows make_split(std::size_t n, double fraction, std::uint64_t seed) {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    Rng rng(seed);
    rng.shuffle(std::span<std::size_t>(perm));
    const auto n1 = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n)));
    SplitRows rows;
    rows.d1.assign(perm.begin(), perm.begin() + n1);
    rows.d2.assign(perm.begin() + n1, perm.end());
    return rows;
}

void validate_config(std::size_t n, const ArmConfig& config) {
    if (n < 4) throw Error::invalid("ARM: need at least 4 observations to split");
    if (config.n_splits < 1) throw Error::invalid("ARM: n_splits must be >= 1");
    if (!(config.split_fraction > 0.0 && config.split_fraction < 1.0)) {
        throw Error::invalid("ARM: split_fraction must lie in (0,1)");
    }
}

// Normalizes one split's log weights; candidates with sigma == 0 preempt the
// softmax and share the whole split.
std::vector<double> normalize_split(const std::vector<double>& log_weights,
                                    const std::vector<bool>& valid,
                                    const std::vector<bool>& perfect) {
    const std::size_t k = log_weights.size();
    std::vector<double> w(k, 0.0);
    std::size_t n_perfect = 0;
    for (std::size_t j = 0; j < k; ++j) {
        if (valid[j] && perfect[j]) ++n_perfect;
    }
    if (n_perfect > 0) {
        for (std::size_t j = 0; j < k; ++j) {
            if (valid[j] && perfect[j]) w[j] = 1.0 / static_cast<double>(n_perfect);
        }
        return w;
    }
    std::vector<double> finite;
    finite.reserve(k);
    for (std::size_t j = 0; j < k; ++j) {
        if (valid[j]) finite.push_back(log_weights[j]);
    }
    if (finite.empty()) return w;
    const double lse = log_sum_exp(finite);
    for (std::size_t j = 0; j < k; ++j) {
        if (valid[j]) w[j] = std::exp(log_weights[j] - lse);
    }
    return w;
}

} // namespace

ArmWeights arm_weights_for_candidates(const PredictionMatrix& candidates,
                                      std::span<const double> y, const ArmConfig& config) {
    if (candidates.rows() != y.size()) {
        throw Error::invalid("ARM: response length does not match the candidate rows");
    }
    const std::size_t n = y.size();
    const std::size_t k = candidates.cols();
    if (k == 0) throw Error::invalid("ARM: need at least one candidate");
    validate_config(n, config);

    ArmWeights out;
    out.weights.assign(k, 0.0);

    for (std::size_t s = 0; s < config.n_splits; ++s) {
        const auto rows =
            make_split(n, config.split_fraction,
                       derive_seed(config.seed, "arm-split-" + std::to_string(s)));
        const double m2 = static_cast<double>(rows.d2.size());

        std::vector<double> log_w(k, 0.0);
        std::vector<bool> valid(k, true);
        std::vector<bool> perfect(k, false);
        for (std::size_t j = 0; j < k; ++j) {
            const auto col = candidates.column(j);
            NeumaierSum s1;
            for (std::size_t i : rows.d1) {
                const double r = y[i] - col[i];
                s1.add(r * r);
            }
            const double sigma2 = s1.value() / static_cast<double>(rows.d1.size());
            if (sigma2 <= 0.0) {
                perfect[j] = true;
                continue;
            }
            NeumaierSum s2;
            for (std::size_t i : rows.d2) {
                const double r = y[i] - col[i];
                s2.add(r * r);
            }
            log_w[j] = -0.5 * m2 * std::log(sigma2) - s2.value() / (2.0 * sigma2);
        }
        const auto w = normalize_split(log_w, valid, perfect);
        for (std::size_t j = 0; j < k; ++j) out.weights[j] += w[j];
        if (config.keep_split_weights) out.split_weights.push_back(w);
    }
    const double inv = 1.0 / static_cast<double>(config.n_splits);
    for (double& w : out.weights) w *= inv;
    return out;
}

namespace {

std::string arm_options_json(const ArmConfig& config) {
    return nlohmann::json{{"n_splits", config.n_splits},
                          {"split_fraction", config.split_fraction}}
        .dump();
}

} // namespace

CombinerModel fit_arm_a(const PredictionMatrix& preds, std::span<const double> y,
                        const ArmConfig& config) {
    const auto arm = arm_weights_for_candidates(preds, y, config);
    CombinerModel model;
    model.method = Method::arm_a;
    model.column_names = preds.names();
    model.seed = config.seed;
    model.options_json = arm_options_json(config);
    LinearCombiner linear;
    linear.theta = arm.weights;
    linear.intercept = 0.0;
    model.payload = std::move(linear);
    return model;
}

CombinerModel fit_arm_i(const PredictionMatrix& preds, std::span<const double> y,
                        const ArmConfig& config, int threads) {
    const std::size_t n = y.size();
    const std::size_t k = preds.cols();
    if (k == 0) throw Error::invalid("ARM-I: need at least one column");
    if (k > 20) throw Error::invalid("ARM-I: more than 20 columns");
    validate_config(n, config);

    // Final subset models come from the full weight-training data; the
    // splits below only decide how much each subset is trusted.
    auto sweep = sweep_all_subsets(preds, y, threads);
    const std::uint32_t count = 1u << k;

    std::vector<double> weights(count, 0.0);
    std::size_t skipped = 0;

    for (std::size_t s = 0; s < config.n_splits; ++s) {
        const auto rows =
            make_split(n, config.split_fraction,
                       derive_seed(config.seed, "arm-split-" + std::to_string(s)));
        if (rows.d1.size() <= k + 1) {
            throw Error::invalid("ARM-I: split too small to refit subsets (need |D1| > K+1)");
        }
        const auto m1 = detail::cross_moments_rows(preds, y, rows.d1);
        const auto m2 = detail::cross_moments_rows(preds, y, rows.d2);
        const double n2 = static_cast<double>(rows.d2.size());

        std::vector<double> log_w(count, 0.0);
        std::vector<bool> valid(count, true);
        std::vector<bool> perfect(count, false);
        for (std::uint32_t mask = 0; mask < count; ++mask) {
            const auto refit = detail::solve_subset(m1, mask);
            if (!refit.rank_ok) {
                valid[mask] = false;
                ++skipped;
                continue;
            }
            const double sigma2 = refit.rss / static_cast<double>(rows.d1.size());
            if (sigma2 <= 0.0) {
                perfect[mask] = true;
                continue;
            }
            const double s2 = detail::subset_rss_under(m2, refit);
            log_w[mask] = -0.5 * n2 * std::log(sigma2) - s2 / (2.0 * sigma2);
        }
        const auto w = normalize_split(log_w, valid, perfect);
        for (std::uint32_t mask = 0; mask < count; ++mask) weights[mask] += w[mask];
    }
    const double inv = 1.0 / static_cast<double>(config.n_splits);
    for (double& w : weights) w *= inv;

    // A subset can be fit on half the data yet rank deficient on the full
    // set; mass on such subsets has nowhere to go, so renormalize over the
    // usable ones.
    double usable = 0.0;
    for (std::uint32_t mask = 0; mask < count; ++mask) {
        if (!sweep.models[mask].rank_ok) {
            weights[mask] = 0.0;
        } else {
            usable += weights[mask];
        }
    }
    if (usable <= 0.0) throw Error::solver("ARM-I: no usable subset received weight");
    for (double& w : weights) w /= usable;

    CombinerModel model;
    model.method = Method::arm_i;
    model.column_names = preds.names();
    model.seed = config.seed;
    model.options_json = arm_options_json(config);
    model.skipped_subsets = sweep.skipped_rank_deficient + skipped;
    SubsetCombiner subset;
    subset.weights = std::move(weights);
    subset.models = std::move(sweep.models);
    model.payload = std::move(subset);
    return model;
}

} // namespace claimcomb::combine
