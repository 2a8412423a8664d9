#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "claimcomb/prediction_matrix.hpp"

namespace claimcomb::data {

// One vehicle policy, Kangaroo schema.
struct PolicyRecord {
    double veh_value = 0.0;   // vehicle value, in 10k currency units
    std::string veh_body;     // body type
    int veh_age = 1;          // age group, 1..4
    std::string gender;       // M / F
    std::string area;         // residence area, A..F
    int agecat = 1;           // driver age group, 1..6
    double exposure = 1.0;    // covered fraction of the year, (0, 1]
    double claimcst0 = 0.0;   // total claim amount
    int numclaims = 0;        // number of claims
    int clm = 0;              // claim indicator
};

std::vector<double> responses(std::span<const PolicyRecord> records);

// ---------------------------------------------------------------------------
// CSV ingestion / emission

struct LoadOptions {
    bool strict = false; // when true, consistency warnings become errors
};

struct LoadResult {
    std::vector<PolicyRecord> records;
    std::vector<std::string> warnings; // clm/numclaims/claimcst0 inconsistencies
};

// Reads a header-first CSV with at least the Kangaroo columns (any order).
// Missing columns, unparseable numerics and negative claim costs are errors;
// clm/numclaims/claimcst0 inconsistencies produce warnings.
LoadResult load_policies(const std::filesystem::path& path, const LoadOptions& options = {});

void write_policies_csv(const std::filesystem::path& path,
                        std::span<const PolicyRecord> records);

// Prediction matrix CSV: first column row_id, then one column per forecaster.
void write_prediction_matrix_csv(const std::filesystem::path& path,
                                 const PredictionMatrix& preds);
PredictionMatrix load_prediction_matrix_csv(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Splitting

struct SplitSpec {
    std::uint64_t seed = 0;
    std::size_t n_train = 0;
    std::size_t n_valid = 0;
    std::size_t n_holdout = 0;
    std::size_t weight_subsample = 0; // rows drawn from the validation part

    nlohmann::json to_json() const;
    static SplitSpec from_json(const nlohmann::json& j);
};

struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> valid;
    std::vector<std::size_t> holdout;
};

// Deterministic uniform partition of 0..n-1 into the three parts. The
// counts must sum to n.
SplitIndices split(std::size_t n, const SplitSpec& spec);

// k distinct indices in [0, n_valid), uniform without replacement.
std::vector<std::size_t> weight_training_subsample(std::size_t n_valid, std::size_t k,
                                                   std::uint64_t seed);

// ---------------------------------------------------------------------------
// Claims simulator

struct SimConfig {
    std::size_t n = 0;
    double zero_rate_target = 0.94; // fraction of rows with no claim
    double poisson_rate = 0.0;      // per-exposure intensity; 0 = derive from target
    double gamma_shape = 0.42;
    double gamma_scale = 5950.0;
    std::uint64_t seed = 1;

    nlohmann::json to_json() const;
    static SimConfig from_json(const nlohmann::json& j);
};

SimConfig load_sim_config(const std::filesystem::path& path);

// Zero-claim probability implied by an intensity, averaging over the
// exposure distribution (uniform on (0,1]) and the covariate multipliers:
// P(no claim) = E[exp(-rate * g * exposure)].
double implied_zero_rate(double poisson_rate);

// Inverse of implied_zero_rate, by bisection.
double poisson_rate_for_zero_target(double zero_rate_target);

// Rate multiplier attached to a record's rating factors (mean 1 across the
// simulator's covariate distribution).
double claim_intensity_multiplier(const PolicyRecord& record);

// Compound Poisson-Gamma generator: numclaims ~ Poisson(rate * g * exposure),
// claimcst0 = sum of numclaims Gamma(shape, scale) severities. Covariates are
// drawn from fixed categorical tables. clm = 1 iff numclaims >= 1 iff
// claimcst0 > 0, exactly.
std::vector<PolicyRecord> simulate_claims(const SimConfig& config);

// ---------------------------------------------------------------------------
// Synthetic forecasters

enum class ForecasterKind {
    two_stage,             // frequency x severity; exact zeros on predicted-no-claim rows
    direct_severity,       // smooth positive predictions of the conditional mean
    rank_oracle_misscaled, // tracks realized outcomes in rank, wrong in scale
    noisy_null             // constant mean-level prediction plus noise
};

std::string forecaster_kind_name(ForecasterKind kind);
ForecasterKind forecaster_kind_from_name(const std::string& name);

struct ForecasterSpec {
    std::string name;
    ForecasterKind kind = ForecasterKind::direct_severity;
    double noise_level = 0.5; // >= 0
    double scale_bias = 1.0;  // > 0, multiplies the prediction scale
    std::uint64_t seed = 0;   // 0 = derive from name

    nlohmann::json to_json() const;
    static ForecasterSpec from_json(const nlohmann::json& j);
};

std::vector<ForecasterSpec> load_forecaster_specs(const std::filesystem::path& path);
void write_forecaster_specs(const std::filesystem::path& path,
                            std::span<const ForecasterSpec> specs);

// The default twelve-forecaster panel: four two-stage, six direct, one
// rank-oracle (column 5) and one noisy null.
std::vector<ForecasterSpec> default_forecaster_roster();

// One prediction column per spec, aligned with the records.
PredictionMatrix synthesize_forecasters(std::span<const PolicyRecord> records,
                                        std::span<const ForecasterSpec> specs,
                                        std::uint64_t base_seed);

} // namespace claimcomb::data
