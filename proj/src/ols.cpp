#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "claimcomb/errors.hpp"
#include "claimcomb/solvers.hpp"
#include "claimcomb/tdist.hpp"

namespace claimcomb::solvers {
namespace {

Eigen::MatrixXd design_matrix(const PredictionMatrix& preds, std::span<const double> y,
                              bool intercept) {
    if (preds.cols() > 0 && preds.rows() != y.size()) {
        throw Error::invalid("ols_fit: response length does not match the prediction rows");
    }
    const std::size_t n = y.size();
    const std::size_t k = preds.cols() + (intercept ? 1 : 0);
    if (k == 0) throw Error::invalid("ols_fit: empty design");
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

} // namespace

double aic_value(std::size_t n, std::size_t k, double rss) {
    if (rss < 0.0) rss = 0.0;
    if (rss == 0.0) return -std::numeric_limits<double>::infinity();
    const double nd = static_cast<double>(n);
    return nd * std::log(rss / nd) + 2.0 * (static_cast<double>(k) + 1.0);
}

OlsFit ols_fit(const PredictionMatrix& preds, std::span<const double> y, bool intercept) {
    const Eigen::MatrixXd x = design_matrix(preds, y, intercept);
    const std::size_t n = static_cast<std::size_t>(x.rows());
    const std::size_t k = static_cast<std::size_t>(x.cols());
    if (n <= k) {
        throw Error::solver("ols_fit: need more observations than coefficients (n=" +
                            std::to_string(n) + ", k=" + std::to_string(k) + ")");
    }
    Eigen::Map<const Eigen::VectorXd> yv(y.data(), static_cast<Eigen::Index>(y.size()));

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
    qr.setThreshold(1e-10);
    if (qr.rank() < static_cast<Eigen::Index>(k)) {
        throw Error::solver("ols_fit: design matrix is rank deficient (rank " +
                            std::to_string(qr.rank()) + " of " + std::to_string(k) + ")");
    }
    OlsFit fit;
    fit.intercept = intercept;
    fit.n = n;
    fit.k = k;
    Eigen::VectorXd beta = qr.solve(yv);
    const Eigen::VectorXd residuals = yv - x * beta;
    fit.rss = residuals.squaredNorm();
    // Residual mass at rounding level counts as an exact fit for the AIC
    // sentinel; otherwise log(rss) turns noise into a ranking.
    const double exact_floor = 1e-24 * yv.squaredNorm();
    fit.aic = aic_value(n, k, fit.rss <= exact_floor ? 0.0 : fit.rss);

    // (X'X)^-1 from the pivoted R factor: X P = Q R.
    const Eigen::MatrixXd r = qr.matrixR()
                                  .topLeftCorner(static_cast<Eigen::Index>(k),
                                                 static_cast<Eigen::Index>(k))
                                  .triangularView<Eigen::Upper>();
    const Eigen::MatrixXd r_inv =
        r.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(k, k));
    Eigen::MatrixXd xtx_inv = r_inv * r_inv.transpose();
    xtx_inv = qr.colsPermutation() * xtx_inv * qr.colsPermutation().transpose();

    const double sigma2 = fit.rss / static_cast<double>(n - k);
    const double df = static_cast<double>(n - k);
    fit.coefficients.assign(beta.data(), beta.data() + k);
    fit.coefficient_ses.resize(k);
    fit.p_values.resize(k);
    for (std::size_t j = 0; j < k; ++j) {
        const double var = sigma2 * xtx_inv(static_cast<Eigen::Index>(j),
                                            static_cast<Eigen::Index>(j));
        fit.coefficient_ses[j] = var > 0.0 ? std::sqrt(var) : 0.0;
        if (fit.coefficient_ses[j] > 0.0) {
            fit.p_values[j] =
                student_t_two_sided_p(fit.coefficients[j] / fit.coefficient_ses[j], df);
        } else {
            // Degenerate exact fit: zero variance estimate.
            fit.p_values[j] = fit.coefficients[j] == 0.0 ? 1.0 : 0.0;
        }
    }
    return fit;
}

std::vector<double> OlsFit::predict(const PredictionMatrix& preds) const {
    const std::size_t offset = intercept ? 1 : 0;
    if (preds.cols() + offset != coefficients.size()) {
        throw Error::invalid("OlsFit::predict: column count does not match the fit");
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
