#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "claimcomb/prediction_matrix.hpp"
#include "claimcomb/solvers.hpp"

namespace claimcomb::combine {

enum class Method {
    sa,       // simple average
    sa_minus, // simple average with one column dropped
    lr_d,     // OLS, then refit on the significant columns
    lr_aic,   // best subset OLS by AIC over all 2^K subsets
    lr_c,     // least squares constrained to the probability simplex
    qr,       // median regression coefficients
    gb,       // boosted-tree combiner (nonlinear)
    arm_a,    // adaptive mixing over the K base predictions
    sa_s,     // uniform weights over all 2^K subset fits
    arm_i     // adaptive mixing over all 2^K subset fits
};

std::string method_name(Method method);
Method method_from_name(const std::string& name);
std::vector<Method> all_methods();

// ---------------------------------------------------------------------------
// Subset machinery (shared by LR-AIC, SA-S and ARM-I)

// One OLS fit of y on the columns in `mask` (bit j = column j), intercept
// always included; the empty subset is the intercept-only model.
struct SubsetModel {
    std::uint32_t mask = 0;
    double intercept = 0.0;
    std::vector<double> coefficients; // one per set bit, ascending bit order
    double rss = 0.0;
    double aic = 0.0;
    bool rank_ok = true;
};

struct SubsetSweep {
    std::vector<SubsetModel> models; // indexed by mask
    std::size_t skipped_rank_deficient = 0;
};

// Fits all 2^K subsets from one pass of cross moments. K is capped at 20 to
// keep the sweep in memory. Thread count only affects wall time; results are
// written per mask, so the output is identical at any thread count.
SubsetSweep sweep_all_subsets(const PredictionMatrix& preds, std::span<const double> y,
                              int threads = 1);

std::vector<double> subset_predict(const SubsetModel& model, const PredictionMatrix& preds);

// ---------------------------------------------------------------------------
// ARM weighting

struct ArmConfig {
    std::size_t n_splits = 50;
    double split_fraction = 0.5;
    std::uint64_t seed = 0;
    bool keep_split_weights = false; // diagnostics; memory heavy for 2^K candidates
};

struct ArmWeights {
    std::vector<double> weights;                    // averaged over splits, convex
    std::vector<std::vector<double>> split_weights; // only when requested
    std::size_t skipped_candidates = 0;             // rank-deficient subset refits
};

// Cross-assessment weights for fixed candidate predictions: on each split,
// candidate scale sigma_j is estimated on the first half and the Gaussian
// assessment weight exp(-|D2| log sigma_j - S2_j / (2 sigma_j^2)) is
// normalized in log space over candidates; splits are averaged. A candidate
// with sigma_j = 0 takes the whole split (ties share it equally).
ArmWeights arm_weights_for_candidates(const PredictionMatrix& candidates,
                                      std::span<const double> y, const ArmConfig& config);

// ---------------------------------------------------------------------------
// Fitted combiner

struct LinearCombiner {
    std::vector<double> theta; // one per base column
    double intercept = 0.0;
};

struct SubsetCombiner {
    std::vector<double> weights;     // one per mask, convex
    std::vector<SubsetModel> models; // indexed by mask
};

struct FitOptions {
    double alpha = 0.05;                  // LR-D significance level
    std::size_t drop_index = 0;           // SA-minus column (0-based)
    double qr_tau = 0.5;
    solvers::BoostOptions boost;
    ArmConfig arm;
    int threads = 1;
};

struct CombinerModel {
    Method method = Method::sa;
    std::vector<std::string> column_names;
    std::variant<LinearCombiner, SubsetCombiner, solvers::BoostedModel> payload;

    // Fit facts carried for reporting (never affect predictions).
    std::uint32_t selected_mask = 0; // LR-AIC
    std::size_t skipped_subsets = 0; // rank-deficient subsets in sweeps
    std::uint64_t seed = 0;          // ARM seed actually used
    std::string options_json;        // the options the fit ran with

    nlohmann::json to_json() const;
    static CombinerModel from_json(const nlohmann::json& j);
};

// The convex weight vector a method promises (theta over columns for
// SA / SA-minus / LR-C / ARM-A, subset weights for SA-S / ARM-I); nullopt
// for methods without a simplex guarantee (LR-D, LR-AIC, QR, GB).
std::optional<std::vector<double>> convex_weights(const CombinerModel& model);

CombinerModel fit(Method method, const PredictionMatrix& preds, std::span<const double> y,
                  const FitOptions& options = {});

std::vector<double> predict(const CombinerModel& model, const PredictionMatrix& preds);

// Individual fitters (same contracts as fit() dispatch).
CombinerModel fit_sa(const PredictionMatrix& preds);
CombinerModel fit_sa_minus(const PredictionMatrix& preds, std::size_t drop_index);
CombinerModel fit_lr_d(const PredictionMatrix& preds, std::span<const double> y, double alpha);
CombinerModel fit_lr_aic(const PredictionMatrix& preds, std::span<const double> y,
                         int threads = 1);
CombinerModel fit_lr_c(const PredictionMatrix& preds, std::span<const double> y);
CombinerModel fit_qr_combiner(const PredictionMatrix& preds, std::span<const double> y,
                              double tau = 0.5);
CombinerModel fit_gb_combiner(const PredictionMatrix& preds, std::span<const double> y,
                              const solvers::BoostOptions& options = {});
CombinerModel fit_arm_a(const PredictionMatrix& preds, std::span<const double> y,
                        const ArmConfig& config);
CombinerModel fit_sa_s(const PredictionMatrix& preds, std::span<const double> y,
                       int threads = 1);
CombinerModel fit_arm_i(const PredictionMatrix& preds, std::span<const double> y,
                        const ArmConfig& config, int threads = 1);

} // namespace claimcomb::combine
