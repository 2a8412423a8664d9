#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Dense>

#include "claimcomb/errors.hpp"
#include "claimcomb/solvers.hpp"

namespace claimcomb::solvers {
namespace {

struct QuadraticForm {
    Eigen::MatrixXd gram; // X'X
    Eigen::VectorXd xty;  // X'y
};

QuadraticForm cross_products(const PredictionMatrix& preds, std::span<const double> y) {
    if (preds.rows() != y.size()) {
        throw Error::invalid("simplex_ls: response length does not match the prediction rows");
    }
    if (preds.cols() == 0) throw Error::invalid("simplex_ls: need at least one column");
    const auto n = static_cast<Eigen::Index>(preds.rows());
    const auto k = static_cast<Eigen::Index>(preds.cols());
    Eigen::MatrixXd x(n, k);
    for (Eigen::Index j = 0; j < k; ++j) {
        const auto col = preds.column(static_cast<std::size_t>(j));
        for (Eigen::Index i = 0; i < n; ++i) x(i, j) = col[static_cast<std::size_t>(i)];
    }
    Eigen::Map<const Eigen::VectorXd> yv(y.data(), n);
    return {x.transpose() * x, x.transpose() * yv};
}

// Gradient of ||y - Xw||^2 up to the constant: 2(Gw - c).
Eigen::VectorXd gradient(const QuadraticForm& q, const Eigen::VectorXd& w) {
    return 2.0 * (q.gram * w - q.xty);
}

double kkt_residual_impl(const QuadraticForm& q, const Eigen::VectorXd& w) {
    const Eigen::VectorXd g = gradient(q, w);
    const double scale = 1.0 + g.cwiseAbs().maxCoeff();
    double sum = 0.0;
    double min_w = 0.0;
    double min_g = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < w.size(); ++i) {
        sum += w[i];
        min_w = std::min(min_w, w[i]);
        min_g = std::min(min_g, g[i]);
    }
    // Stationarity: every supported coordinate's gradient must sit at the
    // minimum gradient value. Measured relative to the gradient scale.
    double stationarity = 0.0;
    for (Eigen::Index i = 0; i < w.size(); ++i) {
        if (w[i] > 1e-12) stationarity = std::max(stationarity, g[i] - min_g);
    }
    const double feasibility = std::max(std::abs(sum - 1.0), -min_w);
    return std::max(stationarity / scale, feasibility);
}

} // namespace

std::vector<double> project_to_simplex(std::span<const double> v) {
    if (v.empty()) throw Error::invalid("project_to_simplex: empty input");
    std::vector<double> u(v.begin(), v.end());
    std::sort(u.begin(), u.end(), std::greater<double>());
    double cum = 0.0;
    double theta = 0.0;
    std::size_t rho = 0;
    for (std::size_t j = 0; j < u.size(); ++j) {
        cum += u[j];
        const double candidate = (cum - 1.0) / static_cast<double>(j + 1);
        if (u[j] - candidate > 0.0) {
            rho = j + 1;
            theta = candidate;
        }
    }
    (void)rho;
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::max(v[i] - theta, 0.0);
    return out;
}

double simplex_kkt_residual(const PredictionMatrix& preds, std::span<const double> y,
                            std::span<const double> weights) {
    if (weights.size() != preds.cols()) {
        throw Error::invalid("simplex_kkt_residual: weight length mismatch");
    }
    const auto q = cross_products(preds, y);
    Eigen::Map<const Eigen::VectorXd> w(weights.data(),
                                        static_cast<Eigen::Index>(weights.size()));
    return kkt_residual_impl(q, w);
}

SimplexFit simplex_ls(const PredictionMatrix& preds, std::span<const double> y) {
    const auto q = cross_products(preds, y);
    const auto k = q.gram.rows();

    SimplexFit fit;
    if (k == 1) {
        fit.weights = {1.0};
        fit.kkt_residual = 0.0;
        return fit;
    }

    Eigen::VectorXd w = Eigen::VectorXd::Constant(k, 1.0 / static_cast<double>(k));

    // Phase 1: projected gradient with step 1/L.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(q.gram);
    const double lmax = eig.eigenvalues().maxCoeff();
    std::size_t iterations = 0;
    if (lmax > 0.0) {
        const double step = 1.0 / (2.0 * lmax);
        constexpr std::size_t max_pg = 5000;
        for (; iterations < max_pg; ++iterations) {
            const Eigen::VectorXd g = gradient(q, w);
            Eigen::VectorXd next = w - step * g;
            const auto projected =
                project_to_simplex(std::span<const double>(next.data(),
                                                           static_cast<std::size_t>(k)));
            Eigen::Map<const Eigen::VectorXd> pv(projected.data(), k);
            const double move = (pv - w).cwiseAbs().maxCoeff();
            w = pv;
            if (move < 1e-14 || kkt_residual_impl(q, w) < 1e-11) break;
        }
    }

    // Phase 2: active-set polish. Solve the equality-constrained problem on
    // the current support, walking supports until primal and dual
    // feasibility hold.
    std::vector<bool> active(static_cast<std::size_t>(k), false);
    for (Eigen::Index i = 0; i < k; ++i) active[static_cast<std::size_t>(i)] = w[i] > 1e-12;
    if (std::none_of(active.begin(), active.end(), [](bool b) { return b; })) {
        active[0] = true;
    }

    const std::size_t max_polish = 50 * static_cast<std::size_t>(k) + 50;
    for (std::size_t it = 0; it < max_polish; ++it) {
        std::vector<Eigen::Index> support;
        for (Eigen::Index i = 0; i < k; ++i) {
            if (active[static_cast<std::size_t>(i)]) support.push_back(i);
        }
        const auto s = static_cast<Eigen::Index>(support.size());

        // KKT system: [2 G_SS  1][w_S]   [2 c_S]
        //             [1'      0][mu ] = [1    ]
        Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(s + 1, s + 1);
        Eigen::VectorXd rhs(s + 1);
        for (Eigen::Index a = 0; a < s; ++a) {
            for (Eigen::Index b = 0; b < s; ++b) kkt(a, b) = 2.0 * q.gram(support[a], support[b]);
            kkt(a, s) = 1.0;
            kkt(s, a) = 1.0;
            rhs[a] = 2.0 * q.xty[support[a]];
        }
        rhs[s] = 1.0;
        Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
        if (!lu.isInvertible()) break; // degenerate support; keep current iterate
        const Eigen::VectorXd sol = lu.solve(rhs);

        Eigen::VectorXd candidate = Eigen::VectorXd::Zero(k);
        for (Eigen::Index a = 0; a < s; ++a) candidate[support[a]] = sol[a];
        const double mu = sol[s];

        double min_ws = 0.0;
        for (Eigen::Index a = 0; a < s; ++a) min_ws = std::min(min_ws, sol[a]);
        if (min_ws < -1e-12) {
            // Step from the last feasible point to the boundary and drop the
            // coordinate that hits zero first.
            double alpha = 1.0;
            Eigen::Index drop = -1;
            for (Eigen::Index a = 0; a < s; ++a) {
                const Eigen::Index i = support[a];
                if (candidate[i] < w[i]) {
                    const double step_to_zero = w[i] / (w[i] - candidate[i]);
                    if (step_to_zero < alpha) {
                        alpha = step_to_zero;
                        drop = i;
                    }
                }
            }
            w = w + alpha * (candidate - w);
            if (drop >= 0) {
                w[drop] = 0.0;
                active[static_cast<std::size_t>(drop)] = false;
            }
            ++iterations;
            continue;
        }

        w = candidate;
        // Dual feasibility: excluded coordinates need gradient >= mu.
        const Eigen::VectorXd g = gradient(q, w);
        const double scale = 1.0 + g.cwiseAbs().maxCoeff();
        Eigen::Index enter = -1;
        double worst = 1e-12;
        for (Eigen::Index i = 0; i < k; ++i) {
            if (active[static_cast<std::size_t>(i)]) continue;
            const double violation = (mu - g[i]) / scale;
            if (violation > worst) {
                worst = violation;
                enter = i;
            }
        }
        ++iterations;
        if (enter < 0) break;
        active[static_cast<std::size_t>(enter)] = true;
    }

    // Tidy: exact zeros for negligible weights, then restore the exact sum.
    double sum = 0.0;
    for (Eigen::Index i = 0; i < k; ++i) {
        if (w[i] < 1e-15) w[i] = 0.0;
        sum += w[i];
    }
    if (sum > 0.0) w /= sum;

    fit.weights.assign(w.data(), w.data() + k);
    fit.kkt_residual = kkt_residual_impl(q, w);
    fit.iterations = iterations;
    return fit;
}

} // namespace claimcomb::solvers
