#pragma once

#include <Eigen/Dense>
#include <limits>

#include "countpred/poisson_glm.hpp"

namespace countpred {

inline constexpr double kPurePoisson = std::numeric_limits<double>::infinity();

struct Moments {
    double mean = 0.0;
    double variance = 0.0;
};

struct SandwichParts {
    Eigen::MatrixXd sigma_hat;  // (1/n) sum U U^T
    Eigen::MatrixXd omega_hat;  // (1/n) sum dU/d(theta, xi)
    Eigen::MatrixXd xi_hat;     // Omega^{-1} Sigma Omega^{-T}
};

struct OverdispersedFit {
    Eigen::VectorXd theta;
    double xi = kPurePoisson;
    Eigen::MatrixXd sandwich;
    Eigen::MatrixXd sigma_hat;
    Eigen::MatrixXd omega_hat;
    GlmFit base_fit;

    bool pure_poisson() const { return xi == kPurePoisson; }
    Eigen::MatrixXd theta_block() const {
        const auto q = theta.size();
        return sandwich.topLeftCorner(q, q);
    }
};

Moments overdispersed_moments(double lambda, double xi);

// Closed-form root of the second estimating equation; kPurePoisson when the
// empirical excess variance is not positive.
double estimate_xi(const GlmFit& base_fit);
// One-variable Newton-Raphson on the second estimating equation.
double estimate_xi_newton(const GlmFit& base_fit, double start, double tol = 1e-12, int max_iter = 200);
// (1/n) sum {(y - lambda)^2 - lambda [1 + (1 + lambda) / xi]}.
double xi_estimating_equation(const GlmFit& base_fit, double xi);

SandwichParts sandwich_covariance(const GlmFit& base_fit, double xi, const Eigen::MatrixXd& x,
                                  const Eigen::VectorXd& y);

OverdispersedFit fit_overdispersed(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                   const GlmFit& base_fit);
OverdispersedFit fit_overdispersed(const Design& design, const Eigen::VectorXd& y,
                                   const FitOptions& options = {});

PredictionRegion region_overdispersed(const OverdispersedFit& fit, const Eigen::RowVectorXd& x0, double alpha);

}  // namespace countpred
