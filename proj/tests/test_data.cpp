#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include <doctest.h>
#include <nlohmann/json.hpp>

#include "claimcomb/data.hpp"
#include "claimcomb/errors.hpp"
#include "claimcomb/metrics.hpp"
#include "claimcomb/numeric.hpp"
#include "claimcomb/rng.hpp"

using namespace claimcomb;
namespace d = claimcomb::data;

namespace {

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("claimcomb_test_" + name);
}

} // namespace

TEST_CASE("split: determinism, disjoint cover, count validation") {
    d::SplitSpec spec{/*seed=*/42, 4, 3, 3, 2};
    const auto a = d::split(10, spec);
    const auto b = d::split(10, spec);
    CHECK(a.train == b.train);
    CHECK(a.valid == b.valid);
    CHECK(a.holdout == b.holdout);

    std::set<std::size_t> all(a.train.begin(), a.train.end());
    all.insert(a.valid.begin(), a.valid.end());
    all.insert(a.holdout.begin(), a.holdout.end());
    CHECK(all.size() == 10);
    CHECK(*all.rbegin() == 9);

    spec.n_train = 5;
    CHECK_THROWS_AS(d::split(10, spec), Error);
}

TEST_CASE("split: paper-scale counts partition 67856 rows") {
    d::SplitSpec spec{7, 22610, 22629, 22617, 5000};
    const auto s = d::split(67856, spec);
    CHECK(s.train.size() == 22610);
    CHECK(s.valid.size() == 22629);
    CHECK(s.holdout.size() == 22617);
}

TEST_CASE("split: different seeds give different partitions") {
    d::SplitSpec a{1, 40, 30, 30, 0};
    d::SplitSpec b{2, 40, 30, 30, 0};
    CHECK(d::split(100, a).train != d::split(100, b).train);
}

TEST_CASE("weight_training_subsample: determinism, distinctness, bounds") {
    const auto a = d::weight_training_subsample(50, 10, 99);
    const auto b = d::weight_training_subsample(50, 10, 99);
    CHECK(a == b);
    std::set<std::size_t> uniq(a.begin(), a.end());
    CHECK(uniq.size() == 10);
    for (std::size_t i : a) CHECK(i < 50);
    CHECK_THROWS_AS(d::weight_training_subsample(5, 6, 1), Error);
}

TEST_CASE("weight_training_subsample: near-uniform inclusion over seeds") {
    const std::size_t n = 20;
    const std::size_t k = 5;
    const int n_seeds = 1000;
    std::vector<int> hits(n, 0);
    for (int s = 0; s < n_seeds; ++s) {
        for (std::size_t i : d::weight_training_subsample(n, k, 1000 + s)) ++hits[i];
    }
    const double p = static_cast<double>(k) / static_cast<double>(n);
    const double sigma = std::sqrt(p * (1.0 - p) / n_seeds);
    for (int h : hits) {
        const double freq = static_cast<double>(h) / n_seeds;
        CHECK(std::abs(freq - p) <= 3.0 * sigma + 1e-12);
    }
}

TEST_CASE("simulate_claims: vanishing rate produces no claims") {
    d::SimConfig config;
    config.n = 2000;
    config.zero_rate_target = 0.0; // rate given explicitly
    config.poisson_rate = 1e-12;
    config.seed = 5;
    const auto records = d::simulate_claims(config);
    for (const auto& r : records) {
        CHECK(r.claimcst0 == 0.0);
        CHECK(r.numclaims == 0);
        CHECK(r.clm == 0);
    }
}

TEST_CASE("simulate_claims: zero rate lands in the target band at n=50000") {
    d::SimConfig config;
    config.n = 50000;
    config.seed = 11;
    const auto records = d::simulate_claims(config);
    std::size_t zeros = 0;
    for (const auto& r : records) {
        if (r.claimcst0 == 0.0) ++zeros;
    }
    const double frac = static_cast<double>(zeros) / static_cast<double>(records.size());
    CHECK(frac > 0.92);
    CHECK(frac < 0.96);
}

TEST_CASE("simulate_claims: severity is right-skewed") {
    d::SimConfig config;
    config.n = 50000;
    config.seed = 12;
    const auto records = d::simulate_claims(config);
    std::vector<double> nonzero;
    for (const auto& r : records) {
        if (r.claimcst0 > 0.0) nonzero.push_back(r.claimcst0);
    }
    REQUIRE(nonzero.size() > 1000);
    CHECK(sample_skewness(nonzero) > 2.0);
}

TEST_CASE("simulate_claims: indicator consistency is exact and output reproducible") {
    d::SimConfig config;
    config.n = 20000;
    config.seed = 13;
    const auto a = d::simulate_claims(config);
    const auto b = d::simulate_claims(config);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK((a[i].clm == 1) == (a[i].numclaims >= 1));
        CHECK((a[i].numclaims >= 1) == (a[i].claimcst0 > 0.0));
        CHECK(a[i].exposure > 0.0);
        CHECK(a[i].exposure <= 1.0);
        CHECK(a[i].claimcst0 == b[i].claimcst0); // bit identical
        CHECK(a[i].veh_value == b[i].veh_value);
        CHECK(a[i].area == b[i].area);
    }
}

TEST_CASE("simulate_claims: mean claim cost approaches its expectation") {
    d::SimConfig config;
    config.n = 50000;
    config.seed = 14;
    const auto records = d::simulate_claims(config);
    const auto y = d::responses(records);
    // E[y] = rate * E[g] * E[exposure] * shape * scale with E[g] = 1 and
    // exposure uniform on (0,1].
    const double rate = d::poisson_rate_for_zero_target(config.zero_rate_target);
    const double expected = rate * 0.5 * config.gamma_shape * config.gamma_scale;
    const double se = sample_sd(y) / std::sqrt(static_cast<double>(y.size()));
    CHECK(std::abs(mean(y) - expected) <= 3.0 * se);
}

TEST_CASE("simulate_claims: infeasible rate/target pair is rejected") {
    d::SimConfig config;
    config.n = 100;
    config.poisson_rate = 2.0; // implies far fewer zeros than 0.94
    config.zero_rate_target = 0.94;
    CHECK_THROWS_AS(d::simulate_claims(config), Error);
}

TEST_CASE("implied_zero_rate inverts poisson_rate_for_zero_target") {
    for (double target : {0.8, 0.94, 0.99}) {
        const double rate = d::poisson_rate_for_zero_target(target);
        CHECK(d::implied_zero_rate(rate) == doctest::Approx(target).epsilon(1e-9));
    }
}

TEST_CASE("synthesize_forecasters: noiseless null is a constant column") {
    d::SimConfig config;
    config.n = 500;
    config.seed = 21;
    const auto records = d::simulate_claims(config);
    d::ForecasterSpec spec;
    spec.name = "null";
    spec.kind = d::ForecasterKind::noisy_null;
    spec.noise_level = 0.0;
    const auto preds = d::synthesize_forecasters(records, std::vector{spec}, 1);
    const auto col = preds.column(0);
    for (double v : col) CHECK(v == col[0]);
}

TEST_CASE("synthesize_forecasters: misscaled rank oracle drives SUM toward the bias") {
    d::SimConfig config;
    config.n = 50000;
    config.seed = 22;
    const auto records = d::simulate_claims(config);
    d::ForecasterSpec spec;
    spec.name = "oracle";
    spec.kind = d::ForecasterKind::rank_oracle_misscaled;
    spec.noise_level = 0.5;
    spec.scale_bias = 1.27;
    const auto preds = d::synthesize_forecasters(records, std::vector{spec}, 2);
    const auto y = d::responses(records);
    CHECK(std::abs(metrics::sum_error(y, preds.column(0)) - 0.27) < 0.08);
}

TEST_CASE("synthesize_forecasters: two-stage forecasters produce exact zeros") {
    d::SimConfig config;
    config.n = 5000;
    config.seed = 23;
    const auto records = d::simulate_claims(config);
    d::ForecasterSpec spec;
    spec.name = "fs";
    spec.kind = d::ForecasterKind::two_stage;
    spec.noise_level = 0.5;
    const auto preds = d::synthesize_forecasters(records, std::vector{spec}, 3);
    std::size_t zeros = 0;
    for (double v : preds.column(0)) {
        if (v == 0.0) ++zeros;
    }
    CHECK(zeros > preds.rows() / 2);
    CHECK(zeros < preds.rows()); // some predicted claims exist
}

TEST_CASE("synthesize_forecasters: reproducible and validated") {
    d::SimConfig config;
    config.n = 300;
    config.seed = 24;
    const auto records = d::simulate_claims(config);
    const auto specs = d::default_forecaster_roster();
    REQUIRE(specs.size() == 12);
    const auto a = d::synthesize_forecasters(records, specs, 77);
    const auto b = d::synthesize_forecasters(records, specs, 77);
    for (std::size_t j = 0; j < a.cols(); ++j) {
        const auto ca = a.column(j);
        const auto cb = b.column(j);
        for (std::size_t i = 0; i < a.rows(); ++i) CHECK(ca[i] == cb[i]);
    }
    CHECK_THROWS_AS(d::synthesize_forecasters(records, std::vector<d::ForecasterSpec>{}, 1),
                    Error);
}

TEST_CASE("policy CSV round trip preserves every value") {
    d::SimConfig config;
    config.n = 200;
    config.seed = 31;
    const auto records = d::simulate_claims(config);
    const auto path = temp_file("roundtrip.csv");
    d::write_policies_csv(path, records);
    const auto loaded = d::load_policies(path);
    CHECK(loaded.warnings.empty());
    REQUIRE(loaded.records.size() == records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        CHECK(loaded.records[i].claimcst0 == records[i].claimcst0);
        CHECK(loaded.records[i].exposure == records[i].exposure);
        CHECK(loaded.records[i].veh_body == records[i].veh_body);
        CHECK(loaded.records[i].agecat == records[i].agecat);
    }
    std::filesystem::remove(path);
}

TEST_CASE("load_policies: schema and consistency handling") {
    SUBCASE("missing required column is named") {
        const auto path = temp_file("missing_col.csv");
        std::ofstream out(path);
        out << "veh_value,exposure,clm,numclaims,veh_body,veh_age,gender,area,agecat\n";
        out << "1.1,0.5,0,0,SEDAN,2,F,C,3\n";
        out.close();
        CHECK_THROWS_WITH_AS(d::load_policies(path),
                             doctest::Contains("claimcst0"), Error);
        std::filesystem::remove(path);
    }
    SUBCASE("inconsistent indicator row loads with a warning") {
        const auto path = temp_file("inconsistent.csv");
        std::ofstream out(path);
        out << "veh_value,exposure,clm,numclaims,claimcst0,veh_body,veh_age,gender,area,agecat\n";
        out << "1.1,0.5,1,0,0,SEDAN,2,F,C,3\n";
        out << "1.3,0.9,0,0,0,HBACK,1,M,A,2\n";
        out.close();
        const auto loaded = d::load_policies(path);
        CHECK(loaded.records.size() == 2);
        CHECK(loaded.warnings.size() == 1);
        d::LoadOptions strict;
        strict.strict = true;
        CHECK_THROWS_AS(d::load_policies(path, strict), Error);
        std::filesystem::remove(path);
    }
    SUBCASE("negative claim cost is an error") {
        const auto path = temp_file("negative.csv");
        std::ofstream out(path);
        out << "veh_value,exposure,clm,numclaims,claimcst0,veh_body,veh_age,gender,area,agecat\n";
        out << "1.1,0.5,1,1,-5,SEDAN,2,F,C,3\n";
        out.close();
        CHECK_THROWS_AS(d::load_policies(path), Error);
        std::filesystem::remove(path);
    }
}

TEST_CASE("prediction matrix CSV round trip and row_id validation") {
    PredictionMatrix preds;
    Rng rng(40);
    for (std::size_t j = 0; j < 3; ++j) {
        std::vector<double> col(17);
        for (auto& v : col) v = rng.normal() * 123.456;
        preds.add_column("A" + std::to_string(j + 1), std::move(col));
    }
    const auto path = temp_file("preds.csv");
    d::write_prediction_matrix_csv(path, preds);
    const auto loaded = d::load_prediction_matrix_csv(path);
    REQUIRE(loaded.cols() == 3);
    CHECK(loaded.names() == preds.names());
    for (std::size_t j = 0; j < 3; ++j) {
        for (std::size_t i = 0; i < preds.rows(); ++i) {
            CHECK(loaded(i, j) == preds(i, j));
        }
    }
    std::filesystem::remove(path);

    const auto bad = temp_file("bad_preds.csv");
    std::ofstream out(bad);
    out << "row_id,A1\n1,2.0\n"; // row ids must start at 0
    out.close();
    CHECK_THROWS_AS(d::load_prediction_matrix_csv(bad), Error);
    std::filesystem::remove(bad);
}

TEST_CASE("config JSON round trips") {
    d::SplitSpec spec{123, 10, 20, 30, 5};
    const auto spec2 = d::SplitSpec::from_json(spec.to_json());
    CHECK(spec2.seed == spec.seed);
    CHECK(spec2.n_holdout == spec.n_holdout);
    CHECK(spec2.weight_subsample == spec.weight_subsample);

    d::SimConfig sim;
    sim.n = 777;
    sim.seed = 9;
    sim.poisson_rate = 0.1;
    sim.zero_rate_target = 0.0;
    const auto sim2 = d::SimConfig::from_json(sim.to_json());
    CHECK(sim2.n == sim.n);
    CHECK(sim2.poisson_rate == sim.poisson_rate);

    d::ForecasterSpec fs;
    fs.name = "X";
    fs.kind = d::ForecasterKind::rank_oracle_misscaled;
    fs.noise_level = 0.7;
    fs.scale_bias = 1.3;
    const auto fs2 = d::ForecasterSpec::from_json(fs.to_json());
    CHECK(fs2.kind == fs.kind);
    CHECK(fs2.scale_bias == fs.scale_bias);
}
