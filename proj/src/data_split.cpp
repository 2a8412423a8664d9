#include <numeric>

#include <nlohmann/json.hpp>

#include "claimcomb/data.hpp"
#include "claimcomb/errors.hpp"
#include "claimcomb/rng.hpp"

namespace claimcomb::data {

nlohmann::json SplitSpec::to_json() const {
    return nlohmann::json{{"seed", seed},
                          {"n_train", n_train},
                          {"n_valid", n_valid},
                          {"n_holdout", n_holdout},
                          {"weight_subsample", weight_subsample}};
}

SplitSpec SplitSpec::from_json(const nlohmann::json& j) {
    SplitSpec s;
    s.seed = j.at("seed").get<std::uint64_t>();
    s.n_train = j.at("n_train").get<std::size_t>();
    s.n_valid = j.at("n_valid").get<std::size_t>();
    s.n_holdout = j.at("n_holdout").get<std::size_t>();
    s.weight_subsample = j.value("weight_subsample", std::size_t{0});
    return s;
}

SplitIndices split(std::size_t n, const SplitSpec& spec) {
    if (spec.n_train + spec.n_valid + spec.n_holdout != n) {
        throw Error::invalid("split: counts (" + std::to_string(spec.n_train) + "," +
                             std::to_string(spec.n_valid) + "," +
                             std::to_string(spec.n_holdout) + ") do not partition n=" +
                             std::to_string(n));
    }
    if (spec.weight_subsample > spec.n_valid) {
        throw Error::invalid("split: weight_subsample exceeds the validation count");
    }
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    Rng rng(spec.seed);
    rng.shuffle(std::span<std::size_t>(perm));

    SplitIndices out;
    out.train.assign(perm.begin(), perm.begin() + spec.n_train);
    out.valid.assign(perm.begin() + spec.n_train, perm.begin() + spec.n_train + spec.n_valid);
    out.holdout.assign(perm.begin() + spec.n_train + spec.n_valid, perm.end());
    return out;
}

std::vector<std::size_t> weight_training_subsample(std::size_t n_valid, std::size_t k,
                                                   std::uint64_t seed) {
    if (k > n_valid) {
        throw Error::invalid("weight_training_subsample: k exceeds the validation size");
    }
    std::vector<std::size_t> perm(n_valid);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    Rng rng(seed);
    // Partial Fisher-Yates: the first k entries are a uniform draw without
    // replacement.
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.bounded(n_valid - i));
        std::swap(perm[i], perm[j]);
    }
    perm.resize(k);
    return perm;
}

} // namespace claimcomb::data
