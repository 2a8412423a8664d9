#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "claimcomb/errors.hpp"
#include "claimcomb/numeric.hpp"
#include "claimcomb/solvers.hpp"

namespace claimcomb::solvers {
namespace {

Eigen::MatrixXd design_matrix(const PredictionMatrix& preds, std::size_t n, bool intercept) {
    const std::size_t k = preds.cols() + (intercept ? 1 : 0);
    Eigen::MatrixXd x(n, k);
    std::size_t col = 0;
    if (intercept) {
        x.col(0).setOnes();
        col = 1;
    }
    for (std::size_t j = 0; j < preds.cols(); ++j, ++col) {
        const auto values = preds.column(j);
        for (std::size_t i = 0; i < n; ++i) x(i, col) = values[i];
    }
    return x;
}

double pinball_objective(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                         const Eigen::VectorXd& beta, double tau) {
    const Eigen::VectorXd r = y - x * beta;
    NeumaierSum s;
    for (Eigen::Index i = 0; i < r.size(); ++i) {
        // rho_tau(u) = u * (tau - 1{u<0})
        s.add(r[i] >= 0.0 ? tau * r[i] : (tau - 1.0) * r[i]);
    }
    return s.value();
}

bool lex_less(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        if (a[i] < b[i]) return true;
        if (a[i] > b[i]) return false;
    }
    return false;
}

// Exact local polish: the optimum of the pinball LP sits at a vertex where
// p rows are interpolated. Enumerate interpolating bases drawn from the 2p
// rows with the smallest current residuals and keep the best.
void vertex_polish(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double tau,
                   Eigen::VectorXd& beta, double& objective) {
    const auto p = x.cols();
    const auto n = x.rows();
    if (p > 8 || n < p) return;

    const Eigen::VectorXd r = y - x * beta;
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    std::sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) {
        const double ra = std::abs(r[a]);
        const double rb = std::abs(r[b]);
        if (ra != rb) return ra < rb;
        return a < b;
    });
    const std::size_t pool =
        std::min<std::size_t>(static_cast<std::size_t>(n), 2 * static_cast<std::size_t>(p));
    idx.resize(pool);

    std::vector<bool> pick(pool, false);
    std::fill(pick.begin(), pick.begin() + static_cast<std::size_t>(p), true);
    Eigen::MatrixXd xb(p, p);
    Eigen::VectorXd yb(p);
    do {
        Eigen::Index row = 0;
        for (std::size_t i = 0; i < pool; ++i) {
            if (!pick[i]) continue;
            xb.row(row) = x.row(idx[i]);
            yb[row] = y[idx[i]];
            ++row;
        }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(xb);
        if (!lu.isInvertible()) continue;
        const Eigen::VectorXd candidate = lu.solve(yb);
        const double obj = pinball_objective(x, y, candidate, tau);
        const double tie = 1e-9 * (1.0 + std::abs(objective));
        if (obj < objective - tie ||
            (std::abs(obj - objective) <= tie && lex_less(candidate, beta))) {
            beta = candidate;
            objective = std::min(obj, objective);
        }
    } while (std::prev_permutation(pick.begin(), pick.end()));
}

} // namespace

QuantileFit quantile_fit(const PredictionMatrix& preds, std::span<const double> y,
                         double tau, bool intercept, const QuantileOptions& options) {
    if (!(tau > 0.0 && tau < 1.0)) {
        throw Error::invalid("quantile_fit: tau must lie strictly inside (0,1)");
    }
    if (preds.rows() != y.size() && !(preds.cols() == 0 && intercept)) {
        throw Error::invalid("quantile_fit: response length does not match the prediction rows");
    }
    const std::size_t n = y.size();
    if (n == 0) throw Error::invalid("quantile_fit: empty response");
    const std::size_t p = preds.cols() + (intercept ? 1 : 0);
    if (p == 0) throw Error::invalid("quantile_fit: empty design");
    if (n < p) throw Error::solver("quantile_fit: fewer rows than coefficients");

    const Eigen::MatrixXd x = design_matrix(preds, n, intercept);
    Eigen::Map<const Eigen::VectorXd> yv(y.data(), static_cast<Eigen::Index>(n));

    // Start from least squares.
    Eigen::VectorXd beta = (x.transpose() * x)
                               .ldlt()
                               .solve(x.transpose() * yv);
    if (!beta.allFinite()) beta.setZero();

    double best_obj = pinball_objective(x, yv, beta, tau);
    Eigen::VectorXd best_beta = beta;

    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, std::abs(y[i]));
    scale = std::max(scale, 1.0);

    std::size_t total_iters = 0;
    // Smoothing schedule: IRLS on the eps-smoothed pinball loss, tightening
    // eps from ~1e-2*scale down to 1e-8.
    for (double eps = 1e-2 * scale; eps >= 1e-8; eps *= 0.1) {
        double prev_obj = std::numeric_limits<double>::infinity();
        for (std::size_t it = 0; it < 100; ++it) {
            if (++total_iters > options.max_iterations) {
                throw Error::solver("quantile_fit: exceeded max iterations; last objective " +
                                    std::to_string(best_obj));
            }
            const Eigen::VectorXd r = yv - x * beta;
            Eigen::VectorXd wts(r.size());
            for (Eigen::Index i = 0; i < r.size(); ++i) {
                const double weight_num = r[i] >= 0.0 ? tau : 1.0 - tau;
                wts[i] = weight_num / std::max(std::abs(r[i]), eps);
            }
            Eigen::MatrixXd xtwx = x.transpose() * wts.asDiagonal() * x;
            // Scale-free ridge: keeps the weighted solve defined on
            // degenerate designs and resolves near-tied optima to the
            // minimum-norm point, so collinear candidate columns get a
            // stable allocation. Orders of magnitude below the objective
            // tolerance.
            const double ridge =
                3e-7 * xtwx.trace() / static_cast<double>(xtwx.rows());
            xtwx.diagonal().array() += ridge;
            const Eigen::VectorXd xtwy = x.transpose() * (wts.asDiagonal() * yv);
            const Eigen::VectorXd next = xtwx.ldlt().solve(xtwy);
            if (!next.allFinite()) break;
            beta = next;
            const double obj = pinball_objective(x, yv, beta, tau);
            if (obj < best_obj) {
                best_obj = obj;
                best_beta = beta;
            }
            if (std::abs(prev_obj - obj) <= options.tolerance * (1.0 + std::abs(obj))) break;
            prev_obj = obj;
        }
    }

    beta = best_beta;
    vertex_polish(x, yv, tau, beta, best_obj);
    best_obj = pinball_objective(x, yv, beta, tau);

    QuantileFit fit;
    fit.tau = tau;
    fit.intercept = intercept;
    fit.coefficients.assign(beta.data(), beta.data() + beta.size());
    fit.objective = best_obj;
    fit.iterations = total_iters;
    return fit;
}

std::vector<double> QuantileFit::predict(const PredictionMatrix& preds) const {
    const std::size_t offset = intercept ? 1 : 0;
    if (preds.cols() + offset != coefficients.size()) {
        throw Error::invalid("QuantileFit::predict: column count does not match the fit");
    }
    std::vector<double> out(preds.rows(), intercept ? coefficients[0] : 0.0);
    for (std::size_t j = 0; j < preds.cols(); ++j) {
        const double b = coefficients[j + offset];
        if (b == 0.0) continue;
        const auto col = preds.column(j);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += b * col[i];
    }
    return out;
}

} // namespace claimcomb::solvers
