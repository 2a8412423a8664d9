#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "claimcomb/data.hpp"
#include "claimcomb/errors.hpp"
#include "claimcomb/rng.hpp"

namespace claimcomb::data {
namespace {

// Fixed covariate tables. Frequencies are texture loosely shaped like the
// Kangaroo fields; the rating factors give the two-stage and direct
// forecasters a real (if mild) signal to pick up. Factors are normalized so
// the population mean multiplier is 1.
struct Level {
    const char* label;
    double prob;
    double factor;
};

constexpr Level kVehBody[] = {
    {"SEDAN", 0.30, 1.0}, {"HBACK", 0.28, 1.0}, {"STNWG", 0.18, 1.0},
    {"UTE", 0.12, 1.0},   {"TRUCK", 0.07, 1.0}, {"COUPE", 0.05, 1.0},
};
constexpr Level kGender[] = {{"F", 0.57, 1.0}, {"M", 0.43, 1.0}};
constexpr Level kVehAge[] = {
    {"1", 0.20, 0.92}, {"2", 0.27, 1.00}, {"3", 0.30, 1.03}, {"4", 0.23, 1.06}};
constexpr Level kArea[] = {
    {"A", 0.22, 0.93}, {"B", 0.21, 0.97}, {"C", 0.21, 1.00},
    {"D", 0.19, 1.04}, {"E", 0.11, 1.10}, {"F", 0.06, 1.16}};
constexpr Level kAgecat[] = {
    {"1", 0.08, 1.30}, {"2", 0.16, 1.12}, {"3", 0.26, 1.00},
    {"4", 0.25, 0.95}, {"5", 0.15, 0.90}, {"6", 0.10, 0.82}};

template <std::size_t N>
double table_mean_factor(const Level (&table)[N]) {
    double m = 0.0;
    for (const auto& lv : table) m += lv.prob * lv.factor;
    return m;
}

template <std::size_t N>
const Level& draw_level(const Level (&table)[N], Rng& rng) {
    const double u = rng.uniform();
    double cum = 0.0;
    for (const auto& lv : table) {
        cum += lv.prob;
        if (u < cum) return lv;
    }
    return table[N - 1];
}

double normalized_factor(int ordinal, const Level* table, std::size_t n, double mean) {
    if (ordinal < 1 || static_cast<std::size_t>(ordinal) > n) return 1.0;
    return table[ordinal - 1].factor / mean;
}

double area_factor(const std::string& area) {
    static const double mean = table_mean_factor(kArea);
    for (const auto& lv : kArea) {
        if (area == lv.label) return lv.factor / mean;
    }
    return 1.0;
}

// Expected zero-claim probability for one intensity value, integrating the
// exposure out: E[exp(-lambda * U)] = (1 - exp(-lambda)) / lambda, U ~ (0,1].
double zero_prob_given_intensity(double lambda) {
    if (lambda < 1e-12) return 1.0 - 0.5 * lambda;
    return -std::expm1(-lambda) / lambda;
}

} // namespace

double claim_intensity_multiplier(const PolicyRecord& record) {
    static const double va_mean = table_mean_factor(kVehAge);
    static const double ac_mean = table_mean_factor(kAgecat);
    double g = normalized_factor(record.veh_age, kVehAge, std::size(kVehAge), va_mean);
    g *= normalized_factor(record.agecat, kAgecat, std::size(kAgecat), ac_mean);
    g *= area_factor(record.area);
    return g;
}

double implied_zero_rate(double poisson_rate) {
    if (!(poisson_rate > 0.0)) {
        throw Error::invalid("implied_zero_rate: rate must be positive");
    }
    const double va_mean = table_mean_factor(kVehAge);
    const double ar_mean = table_mean_factor(kArea);
    const double ac_mean = table_mean_factor(kAgecat);
    double total = 0.0;
    for (const auto& va : kVehAge) {
        for (const auto& ar : kArea) {
            for (const auto& ac : kAgecat) {
                const double g = (va.factor / va_mean) * (ar.factor / ar_mean) *
                                 (ac.factor / ac_mean);
                total += va.prob * ar.prob * ac.prob *
                         zero_prob_given_intensity(poisson_rate * g);
            }
        }
    }
    return total;
}

double poisson_rate_for_zero_target(double zero_rate_target) {
    if (!(zero_rate_target > 0.0 && zero_rate_target < 1.0)) {
        throw Error::invalid("poisson_rate_for_zero_target: target must lie in (0,1)");
    }
    double lo = 1e-9;
    double hi = 1.0;
    while (implied_zero_rate(hi) > zero_rate_target) hi *= 2.0;
    for (int iter = 0; iter < 200; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (implied_zero_rate(mid) > zero_rate_target) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

nlohmann::json SimConfig::to_json() const {
    return nlohmann::json{{"n", n},
                          {"zero_rate_target", zero_rate_target},
                          {"poisson_rate", poisson_rate},
                          {"gamma_shape", gamma_shape},
                          {"gamma_scale", gamma_scale},
                          {"seed", seed}};
}

SimConfig SimConfig::from_json(const nlohmann::json& j) {
    SimConfig c;
    c.n = j.at("n").get<std::size_t>();
    c.zero_rate_target = j.value("zero_rate_target", 0.94);
    c.poisson_rate = j.value("poisson_rate", 0.0);
    c.gamma_shape = j.value("gamma_shape", 0.42);
    c.gamma_scale = j.value("gamma_scale", 5950.0);
    c.seed = j.value("seed", std::uint64_t{1});
    return c;
}

SimConfig load_sim_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error::config("cannot open simulation config: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error::config("malformed simulation config: " + std::string(e.what()));
    }
    return SimConfig::from_json(j);
}

std::vector<PolicyRecord> simulate_claims(const SimConfig& config) {
    if (config.n == 0) throw Error::config("simulate_claims: n must be positive");
    if (!(config.gamma_shape > 0.0) || !(config.gamma_scale > 0.0)) {
        throw Error::config("simulate_claims: gamma shape and scale must be positive");
    }
    const bool has_target = config.zero_rate_target != 0.0;
    if (has_target && !(config.zero_rate_target > 0.0 && config.zero_rate_target < 1.0)) {
        throw Error::config("simulate_claims: zero_rate_target must lie in (0,1)");
    }

    double rate = config.poisson_rate;
    if (rate > 0.0) {
        if (has_target) {
            const double implied = implied_zero_rate(rate);
            if (std::abs(implied - config.zero_rate_target) > 0.02) {
                throw Error::config(
                    "simulate_claims: poisson_rate " + std::to_string(rate) +
                    " implies a zero rate of " + std::to_string(implied) +
                    " (= E[exp(-rate*g*exposure)]), incompatible with zero_rate_target " +
                    std::to_string(config.zero_rate_target) +
                    "; set zero_rate_target to 0 to use the rate as given");
            }
        }
    } else if (has_target) {
        rate = poisson_rate_for_zero_target(config.zero_rate_target);
    } else {
        throw Error::config("simulate_claims: need poisson_rate > 0 or zero_rate_target in (0,1)");
    }

    Rng rng(config.seed);
    std::vector<PolicyRecord> records;
    records.reserve(config.n);
    for (std::size_t i = 0; i < config.n; ++i) {
        PolicyRecord r;
        r.veh_value = std::round(std::exp(0.45 + 0.5 * rng.normal()) * 100.0) / 100.0;
        r.veh_body = draw_level(kVehBody, rng).label;
        r.veh_age = draw_level(kVehAge, rng).label[0] - '0';
        r.gender = draw_level(kGender, rng).label;
        r.area = draw_level(kArea, rng).label;
        r.agecat = draw_level(kAgecat, rng).label[0] - '0';
        r.exposure = rng.uniform_pos();

        const double intensity = rate * claim_intensity_multiplier(r) * r.exposure;
        r.numclaims = rng.poisson(intensity);
        double cost = 0.0;
        for (int c = 0; c < r.numclaims; ++c) {
            cost += rng.gamma(config.gamma_shape, config.gamma_scale);
        }
        r.claimcst0 = cost;
        r.clm = r.numclaims >= 1 ? 1 : 0;
        records.push_back(std::move(r));
    }
    return records;
}

} // namespace claimcomb::data
