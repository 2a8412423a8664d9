#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "claimcomb/data.hpp"
#include "claimcomb/errors.hpp"
#include "claimcomb/numeric.hpp"
#include "claimcomb/rng.hpp"

namespace claimcomb::data {
namespace {

struct EmpiricalRates {
    double claim_rate = 0.0; // claims per unit exposure
    double severity_mean = 0.0;
    double response_mean = 0.0;
};

EmpiricalRates empirical_rates(std::span<const PolicyRecord> records) {
    NeumaierSum exposure;
    NeumaierSum claims;
    NeumaierSum cost;
    for (const auto& r : records) {
        exposure.add(r.exposure);
        claims.add(static_cast<double>(r.numclaims));
        cost.add(r.claimcst0);
    }
    EmpiricalRates out;
    out.claim_rate = exposure.value() > 0.0 ? claims.value() / exposure.value() : 0.0;
    out.severity_mean = claims.value() > 0.0 ? cost.value() / claims.value() : 0.0;
    out.response_mean = records.empty() ? 0.0 : cost.value() / static_cast<double>(records.size());
    return out;
}

// Lognormal factor exp(sigma*z - sigma^2/2); unit mean, so scale_bias alone
// controls the expected total.
double lognormal_noise(double sigma, Rng& rng) {
    return std::exp(sigma * rng.normal() - 0.5 * sigma * sigma);
}

} // namespace

std::string forecaster_kind_name(ForecasterKind kind) {
    switch (kind) {
        case ForecasterKind::two_stage: return "two-stage";
        case ForecasterKind::direct_severity: return "direct-severity";
        case ForecasterKind::rank_oracle_misscaled: return "rank-oracle-misscaled";
        case ForecasterKind::noisy_null: return "noisy-null";
    }
    throw Error::invalid("unknown forecaster kind");
}

ForecasterKind forecaster_kind_from_name(const std::string& name) {
    if (name == "two-stage") return ForecasterKind::two_stage;
    if (name == "direct-severity") return ForecasterKind::direct_severity;
    if (name == "rank-oracle-misscaled") return ForecasterKind::rank_oracle_misscaled;
    if (name == "noisy-null") return ForecasterKind::noisy_null;
    throw Error::config("unknown forecaster kind '" + name + "'");
}

nlohmann::json ForecasterSpec::to_json() const {
    return nlohmann::json{{"name", name},
                          {"kind", forecaster_kind_name(kind)},
                          {"noise_level", noise_level},
                          {"scale_bias", scale_bias},
                          {"seed", seed}};
}

ForecasterSpec ForecasterSpec::from_json(const nlohmann::json& j) {
    ForecasterSpec s;
    s.name = j.at("name").get<std::string>();
    s.kind = forecaster_kind_from_name(j.at("kind").get<std::string>());
    s.noise_level = j.value("noise_level", 0.5);
    s.scale_bias = j.value("scale_bias", 1.0);
    s.seed = j.value("seed", std::uint64_t{0});
    if (s.noise_level < 0.0) throw Error::config("forecaster noise_level must be >= 0");
    if (!(s.scale_bias > 0.0)) throw Error::config("forecaster scale_bias must be > 0");
    return s;
}

std::vector<ForecasterSpec> load_forecaster_specs(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error::config("cannot open forecaster specs: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error::config("malformed forecaster specs: " + std::string(e.what()));
    }
    if (!j.is_array() || j.empty()) {
        throw Error::config("forecaster specs must be a nonempty JSON array");
    }
    std::vector<ForecasterSpec> specs;
    for (const auto& item : j) specs.push_back(ForecasterSpec::from_json(item));
    return specs;
}

void write_forecaster_specs(const std::filesystem::path& path,
                            std::span<const ForecasterSpec> specs) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& s : specs) j.push_back(s.to_json());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error::config("cannot write forecaster specs: " + path.string());
    out << j.dump(2) << '\n';
}

std::vector<ForecasterSpec> default_forecaster_roster() {
    auto make = [](const char* name, ForecasterKind kind, double noise, double bias) {
        ForecasterSpec s;
        s.name = name;
        s.kind = kind;
        s.noise_level = noise;
        s.scale_bias = bias;
        return s;
    };
    // Four frequency-severity forecasters, six direct ones, one dominant
    // rank-oracle in slot 5 and one noisy null, mirroring the usual panel
    // where A5 ranks almost perfectly but misses the scale.
    return {
        make("A1", ForecasterKind::two_stage, 0.60, 0.90),
        make("A2", ForecasterKind::two_stage, 0.70, 1.00),
        make("A3", ForecasterKind::direct_severity, 0.50, 0.95),
        make("A4", ForecasterKind::direct_severity, 0.40, 1.00),
        make("A5", ForecasterKind::rank_oracle_misscaled, 1.00, 1.27),
        make("A6", ForecasterKind::direct_severity, 0.60, 1.05),
        make("A7", ForecasterKind::direct_severity, 0.80, 0.90),
        make("A8", ForecasterKind::two_stage, 0.90, 1.10),
        make("A9", ForecasterKind::direct_severity, 0.30, 1.00),
        make("A10", ForecasterKind::direct_severity, 0.70, 0.85),
        make("A11", ForecasterKind::two_stage, 0.50, 1.00),
        make("A12", ForecasterKind::noisy_null, 0.40, 1.00),
    };
}

PredictionMatrix synthesize_forecasters(std::span<const PolicyRecord> records,
                                        std::span<const ForecasterSpec> specs,
                                        std::uint64_t base_seed) {
    if (specs.empty()) throw Error::invalid("synthesize_forecasters: no specs given");
    if (records.empty()) throw Error::invalid("synthesize_forecasters: no records given");

    const auto rates = empirical_rates(records);
    PredictionMatrix preds;
    for (const auto& spec : specs) {
        const std::uint64_t seed =
            spec.seed != 0 ? spec.seed : derive_seed(base_seed, "forecaster/" + spec.name);
        Rng rng(seed);
        const double sigma = spec.noise_level;
        std::vector<double> col;
        col.reserve(records.size());
        switch (spec.kind) {
            case ForecasterKind::two_stage:
                // Stage 1 classifies each policy as claim / no-claim from a
                // distorted occurrence probability; stage 2 prices the
                // predicted claims. No-claim rows get an exact zero.
                for (const auto& r : records) {
                    const double intensity =
                        rates.claim_rate * claim_intensity_multiplier(r) * r.exposure;
                    const double p = -std::expm1(-intensity);
                    const double distorted = std::min(1.0, p * lognormal_noise(sigma, rng));
                    const double severity =
                        spec.scale_bias * rates.severity_mean * lognormal_noise(sigma, rng);
                    const bool predicted_claim = rng.uniform() < distorted;
                    col.push_back(predicted_claim ? severity : 0.0);
                }
                break;
            case ForecasterKind::direct_severity:
                for (const auto& r : records) {
                    const double cond_mean = rates.claim_rate * claim_intensity_multiplier(r) *
                                             r.exposure * rates.severity_mean;
                    col.push_back(spec.scale_bias * cond_mean * lognormal_noise(sigma, rng));
                }
                break;
            case ForecasterKind::rank_oracle_misscaled:
                // Monotone in the realized cost up to multiplicative noise:
                // near-perfect ordering, wrong scale, poor squared error.
                for (const auto& r : records) {
                    col.push_back(spec.scale_bias * r.claimcst0 * lognormal_noise(sigma, rng));
                }
                break;
            case ForecasterKind::noisy_null:
                for (std::size_t i = 0; i < records.size(); ++i) {
                    col.push_back(spec.scale_bias * rates.response_mean *
                                  (1.0 + sigma * rng.normal()));
                }
                break;
        }
        preds.add_column(spec.name, std::move(col));
    }
    return preds;
}

} // namespace claimcomb::data
