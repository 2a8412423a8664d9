#include <algorithm>
#include <cmath>
#include <numeric>

#include <doctest.h>
#include <nlohmann/json.hpp>

#include "claimcomb/errors.hpp"
#include "claimcomb/numeric.hpp"
#include "claimcomb/rng.hpp"
#include "claimcomb/solvers.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace claimcomb;
namespace s = claimcomb::solvers;

TEST_CASE("ols_fit: exact column recovery") {
    Rng rng(200);
    auto preds = fixtures::random_matrix(rng, 50, 3);
    std::vector<double> y(preds.column(1).begin(), preds.column(1).end());
    const auto fit = s::ols_fit(preds, y, true);
    CHECK(fit.rss == doctest::Approx(0.0).epsilon(1e-18));
    CHECK(fit.coefficients[0] == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(fit.coefficients[1] == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(fit.coefficients[2] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(fit.coefficients[3] == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(std::isinf(fit.aic));
    CHECK(fit.aic < 0.0);
}

TEST_CASE("ols_fit: one-regressor closed form") {
    Rng rng(201);
    const std::size_t n = 37;
    PredictionMatrix preds;
    preds.add_column("x", fixtures::random_values(rng, n, 2.0));
    std::vector<double> y(n);
    const auto x = preds.column(0);
    for (std::size_t i = 0; i < n; ++i) y[i] = 3.0 + 1.7 * x[i] + rng.normal();

    const auto fit = s::ols_fit(preds, y, true);
    const double xbar = mean(x);
    const double ybar = mean(y);
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - xbar) * (x[i] - xbar);
        sxy += (x[i] - xbar) * (y[i] - ybar);
    }
    const double slope = sxy / sxx;
    CHECK(fit.coefficients[1] == doctest::Approx(slope).epsilon(1e-12));
    CHECK(fit.coefficients[0] == doctest::Approx(ybar - slope * xbar).epsilon(1e-12));
}

TEST_CASE("ols_fit: inference on a fixed 20x3 fixture matches the t reference") {
    Rng rng(202);
    const std::size_t n = 20;
    auto preds = fixtures::random_matrix(rng, n, 3);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        y[i] = 0.5 + 1.0 * preds(i, 0) - 0.3 * preds(i, 1) + rng.normal();
    }
    const auto fit = s::ols_fit(preds, y, true);
    REQUIRE(fit.k == 4);
    const double df = static_cast<double>(fit.n - fit.k);
    for (std::size_t j = 0; j < fit.k; ++j) {
        const double t = fit.coefficients[j] / fit.coefficient_ses[j];
        const double p_ref = 2.0 * (1.0 - oracle::t_cdf_quadrature(std::abs(t), df));
        CHECK(fit.p_values[j] == doctest::Approx(p_ref).epsilon(1e-8));
    }
    // Residuals orthogonal to the fitted columns.
    const auto pred = fit.predict(preds);
    for (std::size_t j = 0; j < preds.cols(); ++j) {
        double dot = 0.0;
        double scale = 0.0;
        const auto col = preds.column(j);
        for (std::size_t i = 0; i < n; ++i) {
            dot += (y[i] - pred[i]) * col[i];
            scale += std::abs(col[i] * y[i]);
        }
        CHECK(std::abs(dot) <= 1e-8 * (1.0 + scale));
    }
}

TEST_CASE("ols_fit: rank deficiency and n<=k are errors") {
    Rng rng(203);
    PredictionMatrix preds;
    const auto x = fixtures::random_values(rng, 30, 1.0);
    preds.add_column("a", x);
    preds.add_column("b", x); // duplicate column
    std::vector<double> y = fixtures::random_values(rng, 30, 1.0);
    CHECK_THROWS_AS(s::ols_fit(preds, y, true), Error);

    PredictionMatrix wide = fixtures::random_matrix(rng, 3, 5);
    std::vector<double> y3 = fixtures::random_values(rng, 3, 1.0);
    CHECK_THROWS_AS(s::ols_fit(wide, y3, true), Error);
}

TEST_CASE("aic: penalty dominates a pure-noise column") {
    Rng rng(204);
    const std::size_t n = 400;
    PredictionMatrix one;
    one.add_column("x", fixtures::random_values(rng, n, 1.0));
    PredictionMatrix two = one;
    two.add_column("noise", fixtures::random_values(rng, n, 1.0));
    std::vector<double> y(n);
    const auto x = one.column(0);
    for (std::size_t i = 0; i < n; ++i) y[i] = 2.0 * x[i] + rng.normal();

    const auto fit1 = s::ols_fit(one, y, true);
    const auto fit2 = s::ols_fit(two, y, true);
    CHECK(fit2.rss <= fit1.rss + 1e-9); // extra column never hurts the fit
    CHECK(fit2.aic > fit1.aic);         // but the penalty flips the comparison
    CHECK(s::aic_value(fit1.n, fit1.k, fit1.rss) == fit1.aic);
}

TEST_CASE("aic: identical fits, identical values; nested truth wins at n=5000") {
    CHECK(s::aic_value(100, 3, 42.0) == s::aic_value(100, 3, 42.0));

    int wins = 0;
    const int seeds = 100;
    for (int seed = 0; seed < seeds; ++seed) {
        Rng rng(3000 + seed);
        const std::size_t n = 5000;
        auto preds = fixtures::random_matrix(rng, n, 12);
        std::vector<double> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            y[i] = 1.0 + 0.8 * preds(i, 0) - 0.6 * preds(i, 1) + rng.normal();
        }
        std::vector<std::size_t> truth = {0, 1};
        const auto small = s::ols_fit(preds.select_columns(truth), y, true);
        const auto full = s::ols_fit(preds, y, true);
        if (small.aic < full.aic) ++wins;
    }
    CHECK(wins > seeds / 2);
}

TEST_CASE("project_to_simplex: feasibility and fixed points") {
    Rng rng(205);
    for (int rep = 0; rep < 100; ++rep) {
        const auto v = fixtures::random_values(rng, 1 + rng.bounded(10), 3.0);
        const auto w = s::project_to_simplex(v);
        double sum = 0.0;
        for (double x : w) {
            CHECK(x >= 0.0);
            sum += x;
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
    const std::vector<double> inside = {0.2, 0.3, 0.5};
    const auto w = s::project_to_simplex(inside);
    for (std::size_t i = 0; i < inside.size(); ++i) {
        CHECK(w[i] == doctest::Approx(inside[i]).epsilon(1e-12));
    }
}

TEST_CASE("simplex_ls: single column takes the whole weight") {
    Rng rng(206);
    PredictionMatrix preds;
    preds.add_column("only", fixtures::random_values(rng, 20, 1.0));
    const auto y = fixtures::random_values(rng, 20, 1.0);
    const auto fit = s::simplex_ls(preds, y);
    REQUIRE(fit.weights.size() == 1);
    CHECK(fit.weights[0] == 1.0);
}

TEST_CASE("simplex_ls: recovers interior convex combinations") {
    Rng rng(207);
    const std::size_t n = 300;
    auto preds = fixtures::random_matrix(rng, n, 2);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = 0.3 * preds(i, 0) + 0.7 * preds(i, 1);
    const auto fit = s::simplex_ls(preds, y);
    CHECK(fit.weights[0] == doctest::Approx(0.3).epsilon(1e-6));
    CHECK(fit.weights[1] == doctest::Approx(0.7).epsilon(1e-6));
    CHECK(fit.kkt_residual <= 1e-8);
}

TEST_CASE("simplex_ls: matches exhaustive active-set enumeration for K <= 4") {
    Rng rng(208);
    for (int rep = 0; rep < 60; ++rep) {
        const std::size_t k = 2 + rng.bounded(3);
        const std::size_t n = 12 + rng.bounded(30);
        auto preds = fixtures::random_matrix(rng, n, k);
        // Mix of correlated targets and near-orthogonal ones so vertex and
        // face solutions both occur.
        std::vector<double> y(n);
        if (rep % 2 == 0) {
            for (std::size_t i = 0; i < n; ++i) y[i] = rng.normal() * 2.0;
        } else {
            for (std::size_t i = 0; i < n; ++i) {
                y[i] = 0.9 * preds(i, 0) + 0.1 * rng.normal();
            }
        }
        const auto fit = s::simplex_ls(preds, y);
        const auto ref = oracle::simplex_enumeration(preds, y);
        REQUIRE_FALSE(ref.empty());

        double sum = 0.0;
        for (double w : fit.weights) {
            CHECK(w >= 0.0);
            sum += w;
        }
        CHECK(std::abs(sum - 1.0) <= 1e-10);
        CHECK(fit.kkt_residual <= 1e-8);
        for (std::size_t j = 0; j < k; ++j) {
            CHECK(fit.weights[j] == doctest::Approx(ref[j]).epsilon(1e-5).scale(1.0));
        }
    }
}

TEST_CASE("quantile_fit: intercept-only median follows the lower-median convention") {
    PredictionMatrix empty;
    SUBCASE("odd n") {
        const std::vector<double> y = {3.0, 1.0, 7.0, 5.0, 9.0};
        const auto fit = s::quantile_fit(empty, y, 0.5);
        CHECK(fit.coefficients[0] == doctest::Approx(5.0).epsilon(1e-9));
    }
    SUBCASE("even n picks the lower middle value") {
        const std::vector<double> y = {8.0, 2.0, 6.0, 4.0};
        const auto fit = s::quantile_fit(empty, y, 0.5);
        CHECK(fit.coefficients[0] == doctest::Approx(4.0).epsilon(1e-9));
    }
}

TEST_CASE("quantile_fit: exact linear data is recovered with zero objective") {
    Rng rng(209);
    const std::size_t n = 40;
    auto preds = fixtures::random_matrix(rng, n, 2);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = 1.5 - 2.0 * preds(i, 0) + 0.5 * preds(i, 1);
    const auto fit = s::quantile_fit(preds, y, 0.5);
    CHECK(fit.objective <= 1e-8 * n);
    CHECK(fit.coefficients[0] == doctest::Approx(1.5).epsilon(1e-6));
    CHECK(fit.coefficients[1] == doctest::Approx(-2.0).epsilon(1e-6));
    CHECK(fit.coefficients[2] == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("quantile_fit: objective matches the enumeration LP on 50 rows") {
    for (int rep = 0; rep < 6; ++rep) {
        Rng rng(500 + rep);
        const std::size_t n = 50;
        const double tau = rep % 2 == 0 ? 0.5 : 0.3;
        PredictionMatrix preds;
        preds.add_column("x", fixtures::random_values(rng, n, 1.0));
        std::vector<double> y(n);
        const auto x = preds.column(0);
        for (std::size_t i = 0; i < n; ++i) y[i] = 2.0 + 3.0 * x[i] + 1.5 * rng.normal();

        const auto fit = s::quantile_fit(preds, y, tau);
        const double ref = oracle::quantile_lp_enumeration(preds, y, tau, true);
        CHECK(fit.objective <= ref * (1.0 + 1e-6) + 1e-9);
        CHECK(fit.objective >= ref * (1.0 - 1e-6) - 1e-9);
    }
}

TEST_CASE("quantile_fit: median objective dominates the OLS coefficients") {
    Rng rng(210);
    const std::size_t n = 120;
    auto preds = fixtures::random_matrix(rng, n, 3);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        y[i] = preds(i, 0) + std::exp(rng.normal()); // skewed errors
    }
    const auto qfit = s::quantile_fit(preds, y, 0.5);
    const auto ols = s::ols_fit(preds, y, true);

    // Evaluate both coefficient vectors under the pinball loss.
    auto pinball = [&](const std::vector<double>& beta) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double fitted = beta[0];
            for (std::size_t j = 0; j < preds.cols(); ++j) fitted += beta[j + 1] * preds(i, j);
            const double r = y[i] - fitted;
            total += r >= 0.0 ? 0.5 * r : -0.5 * r;
        }
        return total;
    };
    CHECK(pinball(qfit.coefficients) <= pinball(ols.coefficients) + 1e-9);
    CHECK_THROWS_AS(s::quantile_fit(preds, y, 0.0), Error);
    CHECK_THROWS_AS(s::quantile_fit(preds, y, 1.0), Error);
}

TEST_CASE("boost_fit: validation and degenerate inputs") {
    Rng rng(211);
    auto preds = fixtures::random_matrix(rng, 30, 2);
    const auto y = fixtures::random_values(rng, 30, 1.0);
    s::BoostOptions opts;
    opts.n_trees = 0;
    CHECK_THROWS_AS(s::boost_fit(preds, y, opts), Error);

    SUBCASE("constant response predicts its mean") {
        std::vector<double> cy(30, 4.2);
        const auto model = s::boost_fit(preds, cy, {});
        for (double v : model.predict(preds)) CHECK(v == doctest::Approx(4.2).epsilon(1e-12));
    }
    SUBCASE("constant features reduce to the base score") {
        PredictionMatrix flat;
        flat.add_column("c", std::vector<double>(30, 1.0));
        const auto model = s::boost_fit(flat, y, {});
        const double base = mean(y);
        for (double v : model.predict(flat)) CHECK(v == doctest::Approx(base).epsilon(1e-9));
    }
}

TEST_CASE("boost_fit: one stump on separable data strictly drops the MSE") {
    PredictionMatrix preds;
    preds.add_column("x", {0, 0, 0, 1, 1, 1});
    const std::vector<double> y = {1, 1, 1, 5, 5, 5};
    s::BoostOptions opts;
    opts.n_trees = 1;
    opts.max_depth = 1;
    opts.learning_rate = 1.0;
    const auto model = s::boost_fit(preds, y, opts);
    const double mse0 = [&] {
        double s2 = 0.0;
        const double m = mean(y);
        for (double v : y) s2 += (v - m) * (v - m);
        return s2 / static_cast<double>(y.size());
    }();
    REQUIRE(model.train_mse.size() == 1);
    CHECK(model.train_mse[0] < mse0);
    CHECK(model.train_mse[0] == doctest::Approx(0.0).epsilon(1e-18));
}

TEST_CASE("boost_fit: training MSE is nonincreasing over 200 rounds") {
    Rng rng(212);
    const std::size_t n = 800;
    auto preds = fixtures::random_matrix(rng, n, 5);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        y[i] = 2.0 * preds(i, 0) - preds(i, 1) * preds(i, 2) + 0.5 * rng.normal();
    }
    const auto model = s::boost_fit(preds, y, {});
    REQUIRE(model.train_mse.size() == 200);
    for (std::size_t r = 1; r < model.train_mse.size(); ++r) {
        CHECK(model.train_mse[r] <= model.train_mse[r - 1] + 1e-12);
    }
}

TEST_CASE("BoostedModel: JSON round trip preserves predictions") {
    Rng rng(213);
    auto preds = fixtures::random_matrix(rng, 100, 4);
    std::vector<double> y(100);
    for (std::size_t i = 0; i < 100; ++i) y[i] = preds(i, 0) + 0.3 * rng.normal();
    s::BoostOptions opts;
    opts.n_trees = 25;
    const auto model = s::boost_fit(preds, y, opts);
    const auto back = s::BoostedModel::from_json(model.to_json());
    const auto a = model.predict(preds);
    const auto b = back.predict(preds);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}
