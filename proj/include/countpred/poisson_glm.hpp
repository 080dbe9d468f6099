#pragma once

#include <Eigen/Dense>
#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "countpred/intercept_regions.hpp"

namespace countpred {

enum class Weekday { Monday = 0, Tuesday, Wednesday, Thursday, Friday, Saturday, Sunday };

std::string to_string(Weekday day);

struct DesignSpec {
    int poly_order = 1;
    bool include_day_factor = false;
    bool standardize = true;
    // Recorded at fit time for the polynomial columns w^1..w^p.
    std::vector<double> column_means;
    std::vector<double> column_sds;

    int dimension() const { return 1 + poly_order + (include_day_factor ? 6 : 0); }
    bool has_statistics() const { return static_cast<int>(column_means.size()) == poly_order; }
};

struct Design {
    Eigen::MatrixXd matrix;
    DesignSpec spec;
};

// Exponential inverse link: rho(eta) = exp(eta), psi = rho'/rho = 1, Psi = 0.
struct ExpLink {
    static double rho(double eta);
    static double psi(double) { return 1.0; }
    static double big_psi(double) { return 0.0; }
};

struct GlmFit {
    Eigen::VectorXd theta;
    Eigen::MatrixXd info_observed;
    Eigen::MatrixXd covariance;
    double loglik = 0.0;
    double aic = 0.0;
    Eigen::VectorXd fitted_rates;
    Eigen::VectorXd residuals;
    Eigen::VectorXd observed;
    DesignSpec design;
    bool converged = false;
    int iterations = 0;
    double condition_number = 0.0;

    Eigen::Index n_obs() const { return observed.size(); }
};

struct FitOptions {
    std::optional<Eigen::VectorXd> init;
    double tol = 1e-8;
    int max_iter = 100;
};

struct RateVariance {
    double rate = 0.0;
    double v_hat = 0.0;
};

enum class RegressionRegion { SmallestPlugin, Normal, Sqrt };

std::string to_string(RegressionRegion variant);

struct ContingencyTest {
    std::vector<std::array<long, 2>> table;  // per bin: residuals <= 0, residuals > 0
    std::vector<double> bin_upper_edges;
    double statistic = 0.0;
    int df = 0;
    double p_value = 1.0;
};

Design build_design(std::span<const double> w, std::optional<std::span<const Weekday>> days,
                    DesignSpec spec);
Eigen::RowVectorXd design_row(double w, std::optional<Weekday> day, const DesignSpec& spec);

Eigen::VectorXd score(const Eigen::VectorXd& theta, const Eigen::MatrixXd& x, const Eigen::VectorXd& y);
Eigen::MatrixXd observed_info(const Eigen::VectorXd& theta, const Eigen::MatrixXd& x, const Eigen::VectorXd& y);
Eigen::MatrixXd expected_info(const Eigen::VectorXd& theta, const Eigen::MatrixXd& x);
double poisson_loglik(const Eigen::VectorXd& theta, const Eigen::MatrixXd& x, const Eigen::VectorXd& y);

GlmFit fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const FitOptions& options = {});
GlmFit fit(const Design& design, const Eigen::VectorXd& y, const FitOptions& options = {});

RateVariance rate_and_variance(const GlmFit& fit, const Eigen::RowVectorXd& x0);
PredictionRegion region_regression(const GlmFit& fit, const Eigen::RowVectorXd& x0, double alpha,
                                   RegressionRegion variant, double u = 0.0);

// Pearson chi-square test of independence on a bins x 2 table.
ContingencyTest independence_test(std::vector<std::array<long, 2>> table);
// Splits the index range into n_bins intervals (first index - 1, last index]
// with integer edges ceil(start + j * span / n_bins) and tabulates residual signs.
ContingencyTest residual_diagnostics(const GlmFit& fit, std::span<const double> index, int n_bins);

// Coefficients of the polynomial columns on the original (unstandardized) scale.
Eigen::VectorXd raw_scale_theta(const GlmFit& fit);

}  // namespace countpred
