// claimcomb — simulate zero-inflated claim data, fit combining methods on a
// weight-training subsample, and report the five accuracy measures on the
// holdout set.

#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "claimcomb/combiners.hpp"
#include "claimcomb/data.hpp"
#include "claimcomb/errors.hpp"
#include "claimcomb/metrics.hpp"
#include "claimcomb/numeric.hpp"
#include "claimcomb/report.hpp"
#include "claimcomb/rng.hpp"

namespace cc = claimcomb;

namespace {

struct MethodRequest {
    std::string token; // as requested, e.g. "SA-5"
    cc::combine::Method method;
    std::size_t drop_index = 0; // SA-minus only
};

MethodRequest parse_method_token(const std::string& token) {
    MethodRequest req;
    req.token = token;
    if (token.size() > 3 && token.rfind("SA-", 0) == 0 &&
        token.find_first_not_of("0123456789", 3) == std::string::npos) {
        const long k = std::stol(token.substr(3));
        if (k < 1) throw cc::Error::config("method token '" + token + "': index must be >= 1");
        req.method = cc::combine::Method::sa_minus;
        req.drop_index = static_cast<std::size_t>(k - 1);
        return req;
    }
    req.method = cc::combine::method_from_name(token);
    if (req.method == cc::combine::Method::sa_minus) {
        throw cc::Error::config("SA-minus needs a column index, e.g. SA-5");
    }
    return req;
}

std::vector<std::string> split_tokens(const std::string& csv) {
    std::vector<std::string> out;
    std::string token;
    for (char c : csv) {
        if (c == ',') {
            if (!token.empty()) out.push_back(token);
            token.clear();
        } else {
            token.push_back(c);
        }
    }
    if (!token.empty()) out.push_back(token);
    return out;
}

cc::data::SplitSpec resolve_split(std::size_t n, std::uint64_t seed,
                                  const std::string& split_counts,
                                  std::size_t subsample) {
    cc::data::SplitSpec spec;
    spec.seed = seed;
    if (split_counts.empty()) {
        spec.n_valid = n / 3;
        spec.n_holdout = n / 3;
        spec.n_train = n - spec.n_valid - spec.n_holdout;
    } else {
        const auto parts = split_tokens(split_counts);
        if (parts.size() != 3) {
            throw cc::Error::config("--split expects three comma-separated counts");
        }
        spec.n_train = std::stoul(parts[0]);
        spec.n_valid = std::stoul(parts[1]);
        spec.n_holdout = std::stoul(parts[2]);
    }
    spec.weight_subsample =
        subsample > 0 ? subsample : std::min<std::size_t>(5000, spec.n_valid);
    return spec;
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw cc::Error::data("cannot write output file: " + path.string());
    out << content;
}

nlohmann::json load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw cc::Error::config("cannot open run config: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw cc::Error::config("malformed run config: " + std::string(e.what()));
    }
    return j;
}

// Fills a value from the run config unless the flag was given on the
// command line (flags override the file).
template <typename T>
void config_default(const nlohmann::json& j, const char* key, const CLI::Option* opt,
                    T& value) {
    if (opt->count() == 0 && j.contains(key)) value = j.at(key).get<T>();
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
    std::uint64_t seed = 0;
    std::string out_dir;
    std::string config_path;
    std::string forecasters_path;
    std::size_t n = 0;
    double zero_rate = -1.0;
    double poisson_rate = -1.0;
    double gamma_shape = -1.0;
    double gamma_scale = -1.0;
};

int cmd_simulate(const SimulateArgs& args) {
    cc::data::SimConfig config;
    if (!args.config_path.empty()) config = cc::data::load_sim_config(args.config_path);
    if (args.n > 0) config.n = args.n;
    if (args.zero_rate >= 0.0) config.zero_rate_target = args.zero_rate;
    if (args.poisson_rate >= 0.0) config.poisson_rate = args.poisson_rate;
    if (args.gamma_shape > 0.0) config.gamma_shape = args.gamma_shape;
    if (args.gamma_scale > 0.0) config.gamma_scale = args.gamma_scale;
    config.seed = args.seed;
    if (config.n == 0) throw cc::Error::config("simulate: give --n or a config with n > 0");

    auto specs = args.forecasters_path.empty()
                     ? cc::data::default_forecaster_roster()
                     : cc::data::load_forecaster_specs(args.forecasters_path);

    const auto records = cc::data::simulate_claims(config);
    const auto preds = cc::data::synthesize_forecasters(
        records, specs, cc::derive_seed(config.seed, "forecasters"));

    std::filesystem::create_directories(args.out_dir);
    const auto dir = std::filesystem::path(args.out_dir);
    cc::data::write_policies_csv(dir / "dataset.csv", records);
    cc::data::write_prediction_matrix_csv(dir / "predictions.csv", preds);
    cc::data::write_forecaster_specs(dir / "forecasters.json", specs);

    const auto y = cc::data::responses(records);
    std::vector<double> nonzero;
    for (double v : y) {
        if (v > 0.0) nonzero.push_back(v);
    }
    const double zero_frac =
        static_cast<double>(y.size() - nonzero.size()) / static_cast<double>(y.size());
    std::cout << "simulated " << y.size() << " policies (seed " << config.seed << ")\n";
    std::cout << "zero-claim fraction: " << zero_frac;
    if (config.zero_rate_target > 0.0) std::cout << " (target " << config.zero_rate_target << ")";
    std::cout << "\n";
    if (!nonzero.empty()) {
        std::cout << "nonzero claim cost: mean " << cc::mean(nonzero) << ", skewness "
                  << cc::sample_skewness(nonzero) << "\n";
    }
    std::cout << "wrote " << (dir / "dataset.csv").string() << ", "
              << (dir / "predictions.csv").string() << ", "
              << (dir / "forecasters.json").string() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------

struct CombineArgs {
    std::string config_path;
    std::string data_path;
    std::string predictions_path;
    std::string out_path;
    std::uint64_t seed = 0;
    std::string methods = "SA,SA-5,LR-D,LR-AIC,LR-C,QR,GB,ARM-A,SA-S,ARM-I";
    std::string split_counts;
    std::size_t subsample = 0;
    double alpha = 0.05;
    double tau = 0.5;
    std::size_t arm_splits = 50;
    std::size_t trees = 200;
    std::size_t depth = 3;
    double learning_rate = 0.1;
    int threads = 1;
};

int cmd_combine(const CombineArgs& args) {
    const auto loaded = cc::data::load_policies(args.data_path);
    for (const auto& w : loaded.warnings) std::cerr << "warning: " << w << "\n";
    const auto preds = cc::data::load_prediction_matrix_csv(args.predictions_path);
    if (preds.rows() != loaded.records.size()) {
        throw cc::Error::data("dataset and predictions row counts differ");
    }
    const auto y = cc::data::responses(loaded.records);
    const auto spec = resolve_split(y.size(), args.seed, args.split_counts, args.subsample);
    const auto indices = cc::data::split(y.size(), spec);
    const auto sub = cc::data::weight_training_subsample(
        indices.valid.size(), spec.weight_subsample, cc::derive_seed(args.seed, "subsample"));

    std::vector<std::size_t> rows;
    rows.reserve(sub.size());
    for (std::size_t s : sub) rows.push_back(indices.valid[s]);
    const auto train_preds = preds.select_rows(rows);
    std::vector<double> train_y;
    train_y.reserve(rows.size());
    for (std::size_t i : rows) train_y.push_back(y[i]);

    cc::combine::FitOptions options;
    options.alpha = args.alpha;
    options.qr_tau = args.tau;
    options.boost.n_trees = args.trees;
    options.boost.max_depth = args.depth;
    options.boost.learning_rate = args.learning_rate;
    options.arm.n_splits = args.arm_splits;
    options.arm.seed = cc::derive_seed(args.seed, "arm");
    options.threads = args.threads;

    nlohmann::json models = nlohmann::json::array();
    nlohmann::json failures = nlohmann::json::array();
    for (const auto& token : split_tokens(args.methods)) {
        const auto request = parse_method_token(token);
        options.drop_index = request.drop_index;
        const auto start = std::chrono::steady_clock::now();
        try {
            auto model = cc::combine::fit(request.method, train_preds, train_y, options);
            const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                                std::chrono::steady_clock::now() - start)
                                .count();
            std::cerr << "fit " << token << " in " << ms << " ms\n";
            models.push_back({{"name", token}, {"model", model.to_json()}});
        } catch (const cc::Error& e) {
            std::cerr << "fit " << token << " FAILED: " << e.what() << "\n";
            failures.push_back({{"name", token}, {"error", e.what()}});
        }
    }

    nlohmann::json out{{"split", spec.to_json()},
                       {"alpha", args.alpha},
                       {"models", std::move(models)}};
    if (!failures.empty()) out["failures"] = failures;
    write_text_file(args.out_path, out.dump(2) + "\n");
    std::cerr << "wrote " << args.out_path << "\n";
    if (!failures.empty()) {
        throw cc::Error::solver(std::to_string(failures.size()) +
                                " combining method(s) failed; see " + args.out_path);
    }
    return 0;
}

// ---------------------------------------------------------------------------

struct ReportArgs {
    std::string config_path;
    std::string data_path;
    std::string predictions_path;
    std::string models_path;
    std::string out_path;
    std::string lorenz_path;
    std::string format = "text";
    std::string split_counts;
    std::size_t subsample = 0;
    std::uint64_t seed = 0;
    bool seed_given = false;
    double alpha = 0.05;
};

int cmd_report(const ReportArgs& args) {
    const auto loaded = cc::data::load_policies(args.data_path);
    for (const auto& w : loaded.warnings) std::cerr << "warning: " << w << "\n";
    const auto preds = cc::data::load_prediction_matrix_csv(args.predictions_path);
    if (preds.rows() != loaded.records.size()) {
        throw cc::Error::data("dataset and predictions row counts differ");
    }
    const auto y = cc::data::responses(loaded.records);

    nlohmann::json models_json;
    cc::data::SplitSpec spec;
    if (!args.models_path.empty()) {
        std::ifstream in(args.models_path);
        if (!in) throw cc::Error::data("cannot open models file: " + args.models_path);
        try {
            in >> models_json;
        } catch (const nlohmann::json::exception& e) {
            throw cc::Error::data("malformed models file: " + std::string(e.what()));
        }
        spec = cc::data::SplitSpec::from_json(models_json.at("split"));
        if (args.seed_given && spec.seed != args.seed) {
            throw cc::Error::config("--seed disagrees with the split recorded in " +
                                    args.models_path);
        }
    } else if (args.seed_given) {
        spec = resolve_split(y.size(), args.seed, args.split_counts, args.subsample);
    } else {
        throw cc::Error::config("report needs --models or --seed to fix the holdout split");
    }

    const auto indices = cc::data::split(y.size(), spec);
    std::vector<double> holdout_y;
    holdout_y.reserve(indices.holdout.size());
    for (std::size_t i : indices.holdout) holdout_y.push_back(y[i]);
    const auto holdout_preds = preds.select_rows(indices.holdout);

    std::vector<cc::report::NamedPrediction> combined;
    if (!models_json.is_null()) {
        for (const auto& item : models_json.at("models")) {
            const auto model = cc::combine::CombinerModel::from_json(item.at("model"));
            combined.emplace_back(item.at("name").get<std::string>(),
                                  cc::combine::predict(model, holdout_preds));
        }
    }

    const auto table = cc::report::evaluate(holdout_y, holdout_preds, combined, args.alpha);
    std::string rendered;
    if (args.format == "text") {
        rendered = table.to_text();
    } else if (args.format == "csv") {
        rendered = table.to_csv();
    } else if (args.format == "json") {
        rendered = table.to_json().dump(2) + "\n";
    } else {
        throw cc::Error::config("unknown --format '" + args.format + "'");
    }
    if (args.out_path.empty()) {
        std::cout << rendered;
    } else {
        write_text_file(args.out_path, rendered);
        std::cerr << "wrote " << args.out_path << "\n";
    }

    if (!args.lorenz_path.empty()) {
        // Lorenz data describes the training-split response distribution.
        std::vector<double> train_y;
        train_y.reserve(indices.train.size());
        for (std::size_t i : indices.train) train_y.push_back(y[i]);
        cc::report::write_lorenz_csv(args.lorenz_path, train_y);
        std::cerr << "wrote " << args.lorenz_path << "\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"combine and evaluate claim-cost predictions"};
    app.require_subcommand(1);

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "generate a synthetic dataset and panel");
    simulate->add_option("--seed", sim.seed, "simulation seed")->required();
    simulate->add_option("--out-dir", sim.out_dir, "output directory")->required();
    simulate->add_option("--config", sim.config_path, "simulation config JSON");
    simulate->add_option("--forecasters", sim.forecasters_path, "forecaster specs JSON");
    simulate->add_option("--n", sim.n, "number of policies");
    simulate->add_option("--zero-rate", sim.zero_rate, "target zero-claim fraction");
    simulate->add_option("--poisson-rate", sim.poisson_rate, "per-exposure claim intensity");
    simulate->add_option("--gamma-shape", sim.gamma_shape, "severity shape");
    simulate->add_option("--gamma-scale", sim.gamma_scale, "severity scale");

    CombineArgs comb;
    auto* combine = app.add_subcommand("combine", "fit combining methods on the subsample");
    combine->add_option("--config", comb.config_path, "run config JSON (flags override)");
    auto* c_data = combine->add_option("--data", comb.data_path, "dataset CSV");
    auto* c_preds =
        combine->add_option("--predictions", comb.predictions_path, "prediction matrix CSV");
    auto* c_out = combine->add_option("--out", comb.out_path, "fitted models JSON");
    auto* c_seed = combine->add_option("--seed", comb.seed, "split/subsample/ARM seed");
    auto* c_methods = combine->add_option("--methods", comb.methods, "comma list of methods");
    auto* c_split = combine->add_option("--split", comb.split_counts, "train,valid,holdout");
    auto* c_sub = combine->add_option("--subsample", comb.subsample, "subsample size");
    auto* c_alpha = combine->add_option("--alpha", comb.alpha, "LR-D significance level");
    auto* c_tau = combine->add_option("--tau", comb.tau, "QR quantile level");
    auto* c_arm = combine->add_option("--arm-splits", comb.arm_splits, "ARM data splits");
    auto* c_trees = combine->add_option("--trees", comb.trees, "GB boosting rounds");
    auto* c_depth = combine->add_option("--depth", comb.depth, "GB tree depth");
    auto* c_lr = combine->add_option("--learning-rate", comb.learning_rate, "GB learning rate");
    auto* c_threads = combine->add_option("--threads", comb.threads, "subset sweep threads");

    ReportArgs rep;
    auto* report = app.add_subcommand("report", "evaluate predictions on the holdout");
    report->add_option("--config", rep.config_path, "run config JSON (flags override)");
    auto* r_data = report->add_option("--data", rep.data_path, "dataset CSV");
    auto* r_preds =
        report->add_option("--predictions", rep.predictions_path, "prediction matrix CSV");
    auto* r_models = report->add_option("--models", rep.models_path, "fitted models JSON");
    auto* r_out = report->add_option("--out", rep.out_path, "report file (default stdout)");
    auto* r_lorenz =
        report->add_option("--lorenz", rep.lorenz_path, "write training-set Lorenz CSV here");
    auto* r_format = report->add_option("--format", rep.format, "text | csv | json");
    auto* seed_opt = report->add_option("--seed", rep.seed, "split seed (evaluate-only mode)");
    auto* r_split = report->add_option("--split", rep.split_counts, "train,valid,holdout");
    auto* r_sub = report->add_option("--subsample", rep.subsample, "subsample size");
    auto* r_alpha = report->add_option("--alpha", rep.alpha, "paired-test significance level");

    CLI11_PARSE(app, argc, argv);

    if (combine->parsed()) {
        bool seed_given = c_seed->count() > 0;
        if (!comb.config_path.empty()) {
            const auto j = load_run_config(comb.config_path);
            config_default(j, "data", c_data, comb.data_path);
            config_default(j, "predictions", c_preds, comb.predictions_path);
            config_default(j, "models", c_out, comb.out_path);
            config_default(j, "seed", c_seed, comb.seed);
            config_default(j, "methods", c_methods, comb.methods);
            config_default(j, "split", c_split, comb.split_counts);
            config_default(j, "subsample", c_sub, comb.subsample);
            config_default(j, "alpha", c_alpha, comb.alpha);
            config_default(j, "tau", c_tau, comb.tau);
            config_default(j, "arm_splits", c_arm, comb.arm_splits);
            config_default(j, "trees", c_trees, comb.trees);
            config_default(j, "depth", c_depth, comb.depth);
            config_default(j, "learning_rate", c_lr, comb.learning_rate);
            config_default(j, "threads", c_threads, comb.threads);
            seed_given = seed_given || j.contains("seed");
        }
        if (comb.data_path.empty() || comb.predictions_path.empty() || comb.out_path.empty()) {
            std::cerr << "error: combine needs --data, --predictions and --out "
                         "(flags or config)\n";
            return 2;
        }
        if (!seed_given) {
            std::cerr << "error: combine needs an explicit --seed (or a config seed)\n";
            return 2;
        }
    }
    if (report->parsed() && !rep.config_path.empty()) {
        const auto j = load_run_config(rep.config_path);
        config_default(j, "data", r_data, rep.data_path);
        config_default(j, "predictions", r_preds, rep.predictions_path);
        config_default(j, "models", r_models, rep.models_path);
        config_default(j, "report_out", r_out, rep.out_path);
        config_default(j, "lorenz", r_lorenz, rep.lorenz_path);
        config_default(j, "format", r_format, rep.format);
        config_default(j, "split", r_split, rep.split_counts);
        config_default(j, "subsample", r_sub, rep.subsample);
        config_default(j, "alpha", r_alpha, rep.alpha);
        if (seed_opt->count() == 0 && j.contains("seed")) {
            rep.seed = j.at("seed").get<std::uint64_t>();
            rep.seed_given = true;
        }
    }
    if (report->parsed()) {
        if (rep.data_path.empty() || rep.predictions_path.empty()) {
            std::cerr << "error: report needs --data and --predictions (flags or config)\n";
            return 2;
        }
    }
    rep.seed_given = rep.seed_given || seed_opt->count() > 0;

    try {
        if (simulate->parsed()) return cmd_simulate(sim);
        if (combine->parsed()) return cmd_combine(comb);
        if (report->parsed()) return cmd_report(rep);
    } catch (const cc::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        switch (e.kind()) {
            case cc::Error::Kind::config: return 2;
            case cc::Error::Kind::data:
            case cc::Error::Kind::invalid_input: return 3;
            case cc::Error::Kind::solver:
            case cc::Error::Kind::numeric: return 4;
        }
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
