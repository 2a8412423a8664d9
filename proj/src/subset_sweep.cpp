#include <bit>
#include <cmath>
#include <thread>

#include "claimcomb/errors.hpp"
#include "claimcomb/numeric.hpp"
#include "subset_internal.hpp"

namespace claimcomb::combine {
namespace detail {

CrossMoments cross_moments(const PredictionMatrix& preds, std::span<const double> y) {
    if (preds.rows() != y.size()) {
        throw Error::invalid("cross_moments: response length does not match the prediction rows");
    }
    const std::size_t k = preds.cols();
    CrossMoments m;
    m.n = y.size();
    m.xtx = Eigen::MatrixXd::Zero(k + 1, k + 1);
    m.xty = Eigen::VectorXd::Zero(k + 1);

    m.xtx(0, 0) = static_cast<double>(m.n);
    NeumaierSum ysum;
    NeumaierSum yty;
    for (double v : y) {
        ysum.add(v);
        yty.add(v * v);
    }
    m.xty[0] = ysum.value();
    m.yty = yty.value();

    for (std::size_t a = 0; a < k; ++a) {
        const auto ca = preds.column(a);
        NeumaierSum sa;
        NeumaierSum say;
        for (std::size_t i = 0; i < m.n; ++i) {
            sa.add(ca[i]);
            say.add(ca[i] * y[i]);
        }
        m.xtx(a + 1, 0) = m.xtx(0, a + 1) = sa.value();
        m.xty[a + 1] = say.value();
        for (std::size_t b = a; b < k; ++b) {
            const auto cb = preds.column(b);
            NeumaierSum sab;
            for (std::size_t i = 0; i < m.n; ++i) sab.add(ca[i] * cb[i]);
            m.xtx(a + 1, b + 1) = m.xtx(b + 1, a + 1) = sab.value();
        }
    }
    return m;
}

CrossMoments cross_moments_rows(const PredictionMatrix& preds, std::span<const double> y,
                                std::span<const std::size_t> rows) {
    if (preds.rows() != y.size()) {
        throw Error::invalid("cross_moments_rows: response length mismatch");
    }
    const std::size_t k = preds.cols();
    CrossMoments m;
    m.n = rows.size();
    m.xtx = Eigen::MatrixXd::Zero(k + 1, k + 1);
    m.xty = Eigen::VectorXd::Zero(k + 1);
    m.xtx(0, 0) = static_cast<double>(m.n);
    NeumaierSum ysum;
    NeumaierSum yty;
    for (std::size_t i : rows) {
        ysum.add(y[i]);
        yty.add(y[i] * y[i]);
    }
    m.xty[0] = ysum.value();
    m.yty = yty.value();
    for (std::size_t a = 0; a < k; ++a) {
        const auto ca = preds.column(a);
        NeumaierSum sa;
        NeumaierSum say;
        for (std::size_t i : rows) {
            sa.add(ca[i]);
            say.add(ca[i] * y[i]);
        }
        m.xtx(a + 1, 0) = m.xtx(0, a + 1) = sa.value();
        m.xty[a + 1] = say.value();
        for (std::size_t b = a; b < k; ++b) {
            const auto cb = preds.column(b);
            NeumaierSum sab;
            for (std::size_t i : rows) sab.add(ca[i] * cb[i]);
            m.xtx(a + 1, b + 1) = m.xtx(b + 1, a + 1) = sab.value();
        }
    }
    return m;
}

SubsetModel solve_subset(const CrossMoments& m, std::uint32_t mask) {
    SubsetModel model;
    model.mask = mask;

    // Augmented index set: intercept (0) plus 1+j for every set bit j.
    std::vector<int> idx;
    idx.push_back(0);
    const int k = static_cast<int>(m.xtx.rows()) - 1;
    for (int j = 0; j < k; ++j) {
        if (mask & (1u << j)) idx.push_back(j + 1);
    }
    const auto p = static_cast<Eigen::Index>(idx.size());

    Eigen::MatrixXd g(p, p);
    Eigen::VectorXd c(p);
    for (Eigen::Index a = 0; a < p; ++a) {
        c[a] = m.xty[idx[static_cast<std::size_t>(a)]];
        for (Eigen::Index b = 0; b < p; ++b) {
            g(a, b) = m.xtx(idx[static_cast<std::size_t>(a)], idx[static_cast<std::size_t>(b)]);
        }
    }

    // Scale to correlation form so the rank threshold is scale free.
    Eigen::VectorXd d(p);
    for (Eigen::Index a = 0; a < p; ++a) {
        const double diag = g(a, a);
        if (!(diag > 0.0)) {
            model.rank_ok = false;
            return model;
        }
        d[a] = 1.0 / std::sqrt(diag);
    }
    Eigen::MatrixXd gs = d.asDiagonal() * g * d.asDiagonal();

    // In-place Cholesky with a relative pivot floor.
    constexpr double pivot_floor = 1e-10;
    Eigen::MatrixXd l = Eigen::MatrixXd::Zero(p, p);
    for (Eigen::Index i = 0; i < p; ++i) {
        double diag = gs(i, i);
        for (Eigen::Index q = 0; q < i; ++q) diag -= l(i, q) * l(i, q);
        if (diag <= pivot_floor) {
            model.rank_ok = false;
            return model;
        }
        l(i, i) = std::sqrt(diag);
        for (Eigen::Index r = i + 1; r < p; ++r) {
            double v = gs(r, i);
            for (Eigen::Index q = 0; q < i; ++q) v -= l(r, q) * l(i, q);
            l(r, i) = v / l(i, i);
        }
    }

    const Eigen::VectorXd cs = d.asDiagonal() * c;
    const Eigen::VectorXd z = l.triangularView<Eigen::Lower>().solve(cs);
    const Eigen::VectorXd bs = l.transpose().triangularView<Eigen::Upper>().solve(z);
    const Eigen::VectorXd beta = d.asDiagonal() * bs;

    double rss = m.yty - 2.0 * beta.dot(c) + beta.dot(g * beta);
    if (rss < 0.0) rss = 0.0;

    model.intercept = beta[0];
    model.coefficients.assign(beta.data() + 1, beta.data() + p);
    model.rss = rss;
    const double exact_floor = 1e-24 * m.yty;
    model.aic = solvers::aic_value(m.n, static_cast<std::size_t>(p),
                                   rss <= exact_floor ? 0.0 : rss);
    return model;
}

double subset_rss_under(const CrossMoments& m, const SubsetModel& model) {
    std::vector<int> idx;
    idx.push_back(0);
    const int k = static_cast<int>(m.xtx.rows()) - 1;
    for (int j = 0; j < k; ++j) {
        if (model.mask & (1u << j)) idx.push_back(j + 1);
    }
    const auto p = static_cast<Eigen::Index>(idx.size());
    Eigen::VectorXd beta(p);
    beta[0] = model.intercept;
    for (Eigen::Index a = 1; a < p; ++a) {
        beta[a] = model.coefficients[static_cast<std::size_t>(a - 1)];
    }
    double quad = 0.0;
    double lin = 0.0;
    for (Eigen::Index a = 0; a < p; ++a) {
        lin += beta[a] * m.xty[idx[static_cast<std::size_t>(a)]];
        for (Eigen::Index b = 0; b < p; ++b) {
            quad += beta[a] * beta[b] *
                    m.xtx(idx[static_cast<std::size_t>(a)], idx[static_cast<std::size_t>(b)]);
        }
    }
    const double rss = m.yty - 2.0 * lin + quad;
    return rss < 0.0 ? 0.0 : rss;
}

} // namespace detail

SubsetSweep sweep_all_subsets(const PredictionMatrix& preds, std::span<const double> y,
                              int threads) {
    const std::size_t k = preds.cols();
    if (k == 0) throw Error::invalid("sweep_all_subsets: need at least one column");
    if (k > 20) {
        throw Error::invalid("sweep_all_subsets: more than 20 columns (2^K fits would not fit)");
    }
    if (y.size() <= k + 1) {
        throw Error::solver("sweep_all_subsets: need n > K + 1 observations");
    }
    const auto moments = detail::cross_moments(preds, y);
    const std::uint32_t count = 1u << k;

    SubsetSweep sweep;
    sweep.models.resize(count);

    const int n_threads = std::max(1, threads);
    auto worker = [&](std::uint32_t begin, std::uint32_t end) {
        for (std::uint32_t mask = begin; mask < end; ++mask) {
            sweep.models[mask] = detail::solve_subset(moments, mask);
        }
    };
    if (n_threads == 1 || count < 64) {
        worker(0, count);
    } else {
        std::vector<std::thread> pool;
        const std::uint32_t chunk = (count + n_threads - 1) / n_threads;
        for (int t = 0; t < n_threads; ++t) {
            const std::uint32_t begin = static_cast<std::uint32_t>(t) * chunk;
            const std::uint32_t end = std::min(count, begin + chunk);
            if (begin >= end) break;
            pool.emplace_back(worker, begin, end);
        }
        for (auto& th : pool) th.join();
    }
    for (const auto& model : sweep.models) {
        if (!model.rank_ok) ++sweep.skipped_rank_deficient;
    }
    return sweep;
}

std::vector<double> subset_predict(const SubsetModel& model, const PredictionMatrix& preds) {
    std::vector<double> out(preds.rows(), model.intercept);
    std::size_t c = 0;
    for (std::size_t j = 0; j < preds.cols(); ++j) {
        if (!(model.mask & (1u << j))) continue;
        const double b = model.coefficients.at(c++);
        const auto col = preds.column(j);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += b * col[i];
    }
    if (c != model.coefficients.size()) {
        throw Error::invalid("subset_predict: column count does not match the mask");
    }
    return out;
}

} // namespace claimcomb::combine
