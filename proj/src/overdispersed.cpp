#include "countpred/overdispersed.hpp"

#include <cmath>

#include "countpred/errors.hpp"
#include "countpred/special_math.hpp"

namespace countpred {

Moments overdispersed_moments(double lambda, double xi) {
    if (!(lambda > 0.0)) throw DomainError("rate must be positive");
    if (!(xi > 0.0)) throw DomainError("over-dispersion parameter must be positive");
    if (std::isinf(xi)) return Moments{lambda, lambda};
    return Moments{lambda, lambda * (1.0 + (1.0 + lambda) / xi)};
}

double estimate_xi(const GlmFit& base_fit) {
    const Eigen::ArrayXd rates = base_fit.fitted_rates.array();
    const Eigen::ArrayXd dev = base_fit.observed.array() - rates;
    const double numerator = (rates * (1.0 + rates)).sum();
    const double denominator = (dev.square() - rates).sum();
    if (!(denominator > 0.0)) return kPurePoisson;
    return numerator / denominator;
}

double xi_estimating_equation(const GlmFit& base_fit, double xi) {
    const Eigen::ArrayXd rates = base_fit.fitted_rates.array();
    const Eigen::ArrayXd dev = base_fit.observed.array() - rates;
    const double n = static_cast<double>(rates.size());
    return (dev.square() - rates * (1.0 + (1.0 + rates) / xi)).sum() / n;
}

double estimate_xi_newton(const GlmFit& base_fit, double start, double tol, int max_iter) {
    if (!(start > 0.0)) throw DomainError("starting value must be positive");
    const Eigen::ArrayXd rates = base_fit.fitted_rates.array();
    const double n = static_cast<double>(rates.size());
    const double curvature = (rates * (1.0 + rates)).sum() / n;
    double xi = start;
    for (int iter = 0; iter < max_iter; ++iter) {
        const double value = xi_estimating_equation(base_fit, xi);
        const double slope = curvature / (xi * xi);
        double next = xi - value / slope;
        // Keep the iterate positive; the equation is only defined for xi > 0.
        if (!(next > 0.0)) next = 0.5 * xi;
        if (std::fabs(next - xi) <= tol * std::fabs(xi)) return next;
        xi = next;
    }
    throw ConvergenceError("over-dispersion Newton iteration did not converge", {xi});
}

SandwichParts sandwich_covariance(const GlmFit& base_fit, double xi, const Eigen::MatrixXd& x,
                                  const Eigen::VectorXd& y) {
    if (!(xi > 0.0) || std::isinf(xi)) throw DomainError("sandwich covariance needs a finite positive xi");
    const Eigen::Index n = x.rows();
    const Eigen::Index q = x.cols();
    if (y.size() != n || base_fit.theta.size() != q) throw DomainError("sandwich covariance dimension mismatch");
    const double nd = static_cast<double>(n);

    const Eigen::VectorXd rates = (x * base_fit.theta).array().exp().matrix();
    SandwichParts parts;
    parts.sigma_hat = Eigen::MatrixXd::Zero(q + 1, q + 1);
    parts.omega_hat = Eigen::MatrixXd::Zero(q + 1, q + 1);
    Eigen::VectorXd u(q + 1);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double lam = rates[i];
        const double dev = y[i] - lam;
        const double inflation = 1.0 + (1.0 + lam) / xi;
        u.head(q) = x.row(i).transpose() * dev;
        u[q] = dev * dev - lam * inflation;
        parts.sigma_hat.noalias() += u * u.transpose();

        parts.omega_hat.topLeftCorner(q, q).noalias() -= lam * x.row(i).transpose() * x.row(i);
        parts.omega_hat.block(q, 0, 1, q).noalias() -= lam * (2.0 * dev + inflation + lam / xi) * x.row(i);
        parts.omega_hat(q, q) += lam * (1.0 + lam) / (xi * xi);
    }
    parts.sigma_hat /= nd;
    parts.omega_hat /= nd;

    const Eigen::FullPivLU<Eigen::MatrixXd> lu(parts.omega_hat);
    if (!lu.isInvertible()) throw SingularMatrixError("estimating-equation derivative matrix is singular");
    const Eigen::MatrixXd omega_inv = lu.inverse();
    parts.xi_hat = omega_inv * parts.sigma_hat * omega_inv.transpose();
    return parts;
}

OverdispersedFit fit_overdispersed(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const GlmFit& base_fit) {
    OverdispersedFit result;
    result.theta = base_fit.theta;
    result.base_fit = base_fit;
    result.xi = estimate_xi(base_fit);
    if (!result.pure_poisson()) {
        SandwichParts parts = sandwich_covariance(base_fit, result.xi, x, y);
        result.sandwich = std::move(parts.xi_hat);
        result.sigma_hat = std::move(parts.sigma_hat);
        result.omega_hat = std::move(parts.omega_hat);
    } else {
        // Pure-Poisson limit: the theta block reduces to n times the inverse information.
        const auto q = base_fit.theta.size();
        result.sandwich = Eigen::MatrixXd::Zero(q + 1, q + 1);
        result.sandwich.topLeftCorner(q, q) = static_cast<double>(base_fit.n_obs()) * base_fit.covariance;
    }
    return result;
}

OverdispersedFit fit_overdispersed(const Design& design, const Eigen::VectorXd& y, const FitOptions& options) {
    return fit_overdispersed(design.matrix, y, fit(design, y, options));
}

PredictionRegion region_overdispersed(const OverdispersedFit& fit, const Eigen::RowVectorXd& x0, double alpha) {
    if (fit.pure_poisson()) return region_regression(fit.base_fit, x0, alpha, RegressionRegion::Normal);
    if (x0.size() != fit.theta.size()) throw DomainError("covariate vector has wrong length");
    const double eta = x0.dot(fit.theta);
    if (!(eta <= 700.0)) throw DivergenceError("predicted rate overflows");
    const double rate = ExpLink::rho(eta);
    const double psi = ExpLink::psi(eta);
    const double n = static_cast<double>(fit.base_fit.n_obs());
    const double quad = psi * psi * (x0 * fit.theta_block() * x0.transpose())(0, 0);
    const double variance = rate * (1.0 + rate) / fit.xi + rate + rate * rate * quad / n;
    const double half = z_half(alpha) * std::sqrt(variance);
    return region_from_interval(rate - half, rate + half, 1.0 - alpha);
}

}  // namespace countpred
