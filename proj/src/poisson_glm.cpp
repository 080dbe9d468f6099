#include "countpred/poisson_glm.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "countpred/errors.hpp"
#include "countpred/special_math.hpp"

namespace countpred {

namespace {

constexpr double kMaxExponent = 700.0;
constexpr int kMaxHalvings = 30;
constexpr double kMinReciprocalCondition = 1e-16;

void check_dims(const Eigen::VectorXd& theta, const Eigen::MatrixXd& x) {
    if (theta.size() != x.cols()) throw DomainError("coefficient length does not match design columns");
}

Eigen::VectorXd linear_predictor(const Eigen::VectorXd& theta, const Eigen::MatrixXd& x) {
    check_dims(theta, x);
    Eigen::VectorXd eta = x * theta;
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
        if (!(eta[i] <= kMaxExponent))
            throw DivergenceError("linear predictor overflow (exp argument > 700); standardize the design");
    }
    return eta;
}

Eigen::VectorXd rates_of(const Eigen::VectorXd& eta) {
    return eta.unaryExpr([](double v) { return ExpLink::rho(v); });
}

double log_factorial_sum(const Eigen::VectorXd& y) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) acc += log_gamma(y[i] + 1.0);
    return acc;
}

bool is_intercept_column(const Eigen::MatrixXd& x) {
    return x.cols() > 0 && (x.col(0).array() == 1.0).all();
}

}  // namespace

double ExpLink::rho(double eta) { return std::exp(eta); }

std::string to_string(Weekday day) {
    static const char* names[] = {"Monday", "Tuesday", "Wednesday", "Thursday", "Friday", "Saturday", "Sunday"};
    return names[static_cast<int>(day)];
}

std::string to_string(RegressionRegion variant) {
    switch (variant) {
        case RegressionRegion::SmallestPlugin: return "smallest_plugin";
        case RegressionRegion::Normal: return "normal";
        case RegressionRegion::Sqrt: return "sqrt";
    }
    return "unknown";
}

Design build_design(std::span<const double> w, std::optional<std::span<const Weekday>> days,
                    DesignSpec spec) {
    if (spec.poly_order < 0) throw DomainError("polynomial order must be nonnegative");
    const auto n = static_cast<Eigen::Index>(w.size());
    if (spec.include_day_factor && (!days || days->size() != w.size()))
        throw DomainError("day factor requested but weekday labels are missing or mismatched");

    Design design;
    design.matrix.resize(n, spec.dimension());
    design.matrix.col(0).setOnes();
    for (int j = 1; j <= spec.poly_order; ++j) {
        for (Eigen::Index i = 0; i < n; ++i) design.matrix(i, j) = std::pow(w[static_cast<std::size_t>(i)], j);
    }
    if (spec.standardize) {
        if (!spec.has_statistics()) {
            spec.column_means.assign(static_cast<std::size_t>(spec.poly_order), 0.0);
            spec.column_sds.assign(static_cast<std::size_t>(spec.poly_order), 0.0);
            for (int j = 1; j <= spec.poly_order; ++j) {
                const double mean = design.matrix.col(j).mean();
                const double ss = (design.matrix.col(j).array() - mean).square().sum();
                const double sd = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
                if (!(sd > 0.0))
                    throw DomainError("design column w^" + std::to_string(j) + " has zero variance");
                spec.column_means[static_cast<std::size_t>(j - 1)] = mean;
                spec.column_sds[static_cast<std::size_t>(j - 1)] = sd;
            }
        }
        for (int j = 1; j <= spec.poly_order; ++j) {
            const auto idx = static_cast<std::size_t>(j - 1);
            design.matrix.col(j) =
                (design.matrix.col(j).array() - spec.column_means[idx]) / spec.column_sds[idx];
        }
    }
    if (spec.include_day_factor) {
        const int base = 1 + spec.poly_order;
        design.matrix.middleCols(base, 6).setZero();
        for (Eigen::Index i = 0; i < n; ++i) {
            const int d = static_cast<int>((*days)[static_cast<std::size_t>(i)]);
            if (d < 0 || d > 6) throw DomainError("invalid weekday label");
            if (d > 0) design.matrix(i, base + d - 1) = 1.0;
        }
    }
    design.spec = std::move(spec);
    return design;
}

Eigen::RowVectorXd design_row(double w, std::optional<Weekday> day, const DesignSpec& spec) {
    if (spec.standardize && !spec.has_statistics())
        throw DomainError("design row requires column statistics recorded at fit time");
    const double wv[1] = {w};
    std::optional<std::span<const Weekday>> days;
    Weekday dv[1] = {Weekday::Monday};
    if (spec.include_day_factor) {
        if (!day) throw DomainError("design row requires a weekday label");
        dv[0] = *day;
        days = std::span<const Weekday>(dv, 1);
    }
    return build_design(std::span<const double>(wv, 1), days, spec).matrix.row(0);
}

Eigen::VectorXd score(const Eigen::VectorXd& theta, const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    const Eigen::VectorXd rates = rates_of(linear_predictor(theta, x));
    return x.transpose() * (y - rates);
}

Eigen::MatrixXd observed_info(const Eigen::VectorXd& theta, const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    const Eigen::VectorXd eta = linear_predictor(theta, x);
    // Sum of x x^T [rho''(eta) - y Psi(eta)]; rho'' = exp and Psi = 0 for the exp link.
    Eigen::VectorXd weights(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i)
        weights[i] = ExpLink::rho(eta[i]) - y[i] * ExpLink::big_psi(eta[i]);
    return x.transpose() * weights.asDiagonal() * x;
}

Eigen::MatrixXd expected_info(const Eigen::VectorXd& theta, const Eigen::MatrixXd& x) {
    const Eigen::VectorXd eta = linear_predictor(theta, x);
    Eigen::VectorXd weights(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
        const double psi = ExpLink::psi(eta[i]);
        weights[i] = psi * psi * ExpLink::rho(eta[i]);
    }
    return x.transpose() * weights.asDiagonal() * x;
}

double poisson_loglik(const Eigen::VectorXd& theta, const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    const Eigen::VectorXd eta = linear_predictor(theta, x);
    return y.dot(eta) - rates_of(eta).sum() - log_factorial_sum(y);
}

GlmFit fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const FitOptions& options) {
    const Eigen::Index n = x.rows();
    const Eigen::Index q = x.cols();
    if (y.size() != n) throw DomainError("response length does not match design rows");
    if (n < q) throw DomainError("fewer observations than coefficients");
    if ((y.array() < 0.0).any()) throw DomainError("responses must be nonnegative counts");

    Eigen::VectorXd theta = Eigen::VectorXd::Zero(q);
    if (options.init) {
        if (options.init->size() != q) throw DomainError("initial value has wrong length");
        theta = *options.init;
    } else if (is_intercept_column(x)) {
        theta[0] = std::log(y.mean() + 0.5);
    }

    const double log_fact = log_factorial_sum(y);
    auto loglik_of = [&](const Eigen::VectorXd& t) {
        const Eigen::VectorXd eta = linear_predictor(t, x);
        return y.dot(eta) - rates_of(eta).sum() - log_fact;
    };
    auto as_vector = [](const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };

    double ll = loglik_of(theta);
    bool converged = false;
    int iter = 0;
    for (; iter <= options.max_iter; ++iter) {
        const Eigen::VectorXd u = score(theta, x, y);
        if (u.cwiseAbs().maxCoeff() <= options.tol * (1.0 + std::fabs(ll))) {
            converged = true;
            break;
        }
        if (iter == options.max_iter) break;
        const Eigen::MatrixXd info = expected_info(theta, x);
        const Eigen::LLT<Eigen::MatrixXd> llt(info);
        if (llt.info() != Eigen::Success || llt.rcond() < kMinReciprocalCondition)
            throw SingularMatrixError("information matrix is singular; design is rank deficient");
        const Eigen::VectorXd step = llt.solve(u);

        bool accepted = false;
        double factor = 1.0;
        for (int h = 0; h <= kMaxHalvings; ++h, factor *= 0.5) {
            const Eigen::VectorXd candidate = theta + factor * step;
            double cand_ll;
            try {
                cand_ll = loglik_of(candidate);
            } catch (const DivergenceError&) {
                continue;
            }
            if (cand_ll >= ll - 1e-12 * (1.0 + std::fabs(ll))) {
                theta = candidate;
                ll = cand_ll;
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            if (step.cwiseAbs().maxCoeff() <= 1e-10 * (1.0 + theta.cwiseAbs().maxCoeff())) {
                converged = true;
                break;
            }
            throw ConvergenceError("Newton-Raphson step halving failed to increase the log-likelihood",
                                   as_vector(theta));
        }
        if (factor * step.cwiseAbs().maxCoeff() <= 1e-10 * (1.0 + theta.cwiseAbs().maxCoeff()) &&
            score(theta, x, y).cwiseAbs().maxCoeff() <= std::sqrt(options.tol) * (1.0 + std::fabs(ll))) {
            converged = true;
            ++iter;
            break;
        }
    }
    if (!converged)
        throw ConvergenceError("Newton-Raphson did not converge within " + std::to_string(options.max_iter) +
                                   " iterations",
                               as_vector(theta));

    GlmFit result;
    result.theta = theta;
    result.info_observed = observed_info(theta, x, y);
    const Eigen::LLT<Eigen::MatrixXd> llt(result.info_observed);
    if (llt.info() != Eigen::Success || llt.rcond() < kMinReciprocalCondition)
        throw SingularMatrixError("information matrix is singular at the estimate");
    result.covariance = llt.solve(Eigen::MatrixXd::Identity(q, q));
    result.condition_number = 1.0 / llt.rcond();
    result.loglik = ll;
    result.aic = -2.0 * ll + 2.0 * static_cast<double>(q);
    result.fitted_rates = rates_of(linear_predictor(theta, x));
    result.residuals = (y - result.fitted_rates).array() / result.fitted_rates.array().sqrt();
    result.observed = y;
    result.converged = true;
    result.iterations = iter;
    return result;
}

GlmFit fit(const Design& design, const Eigen::VectorXd& y, const FitOptions& options) {
    GlmFit result = fit(design.matrix, y, options);
    result.design = design.spec;
    return result;
}

RateVariance rate_and_variance(const GlmFit& fit, const Eigen::RowVectorXd& x0) {
    if (x0.size() != fit.theta.size()) throw DomainError("covariate vector has wrong length");
    const double eta = x0.dot(fit.theta);
    if (!(eta <= kMaxExponent)) throw DivergenceError("predicted rate overflows");
    const double rate = ExpLink::rho(eta);
    const double psi = ExpLink::psi(eta);
    const double quad = x0 * fit.covariance * x0.transpose();
    return RateVariance{rate, 1.0 + psi * psi * rate * quad};
}

PredictionRegion region_regression(const GlmFit& fit, const Eigen::RowVectorXd& x0, double alpha,
                                   RegressionRegion variant, double u) {
    const RateVariance rv = rate_and_variance(fit, x0);
    switch (variant) {
        case RegressionRegion::SmallestPlugin:
            return region_smallest(pmf_poisson(rv.rate, PmfKind::PluginMl), alpha, u);
        case RegressionRegion::Normal: {
            const double half = z_half(alpha) * std::sqrt(rv.rate * rv.v_hat);
            return region_from_interval(rv.rate - half, rv.rate + half, 1.0 - alpha);
        }
        case RegressionRegion::Sqrt: {
            const double root = std::sqrt(rv.rate);
            const double half = z_half(alpha) * 0.5 * std::sqrt(rv.v_hat);
            const double low_root = std::max(0.0, root - half);
            return region_from_interval(low_root * low_root, (root + half) * (root + half), 1.0 - alpha);
        }
    }
    throw DomainError("unknown region variant");
}

ContingencyTest independence_test(std::vector<std::array<long, 2>> table) {
    if (table.size() < 2) throw DomainError("independence test needs at least two bins");
    double total = 0.0;
    std::array<double, 2> col{0.0, 0.0};
    std::vector<double> row(table.size(), 0.0);
    for (std::size_t i = 0; i < table.size(); ++i) {
        for (int j = 0; j < 2; ++j) {
            row[i] += static_cast<double>(table[i][static_cast<std::size_t>(j)]);
            col[static_cast<std::size_t>(j)] += static_cast<double>(table[i][static_cast<std::size_t>(j)]);
        }
        total += row[i];
    }
    ContingencyTest test;
    for (std::size_t i = 0; i < table.size(); ++i) {
        for (std::size_t j = 0; j < 2; ++j) {
            const double expected = row[i] * col[j] / total;
            if (!(expected > 0.0)) throw DataError("contingency table has an expected cell count of zero");
            const double diff = static_cast<double>(table[i][j]) - expected;
            test.statistic += diff * diff / expected;
        }
    }
    test.df = static_cast<int>(table.size()) - 1;
    test.p_value = chisq_sf(test.statistic, test.df);
    test.table = std::move(table);
    return test;
}

ContingencyTest residual_diagnostics(const GlmFit& fit, std::span<const double> index, int n_bins) {
    if (n_bins < 2) throw DomainError("need at least two bins");
    if (static_cast<Eigen::Index>(index.size()) != fit.residuals.size())
        throw DomainError("index length does not match the number of residuals");
    const auto [min_it, max_it] = std::minmax_element(index.begin(), index.end());
    const double start = *min_it - 1.0;
    const double span = *max_it - start;
    std::vector<double> edges(static_cast<std::size_t>(n_bins));
    for (int j = 1; j <= n_bins; ++j) edges[static_cast<std::size_t>(j - 1)] = std::ceil(start + j * span / n_bins);
    edges.back() = *max_it;

    std::vector<std::array<long, 2>> table(static_cast<std::size_t>(n_bins), {0, 0});
    for (std::size_t i = 0; i < index.size(); ++i) {
        std::size_t bin = 0;
        while (bin + 1 < edges.size() && index[i] > edges[bin]) ++bin;
        table[bin][fit.residuals[static_cast<Eigen::Index>(i)] > 0.0 ? 1 : 0] += 1;
    }
    ContingencyTest test = independence_test(std::move(table));
    test.bin_upper_edges = std::move(edges);
    return test;
}

Eigen::VectorXd raw_scale_theta(const GlmFit& fit) {
    Eigen::VectorXd raw = fit.theta;
    const DesignSpec& spec = fit.design;
    if (!spec.standardize) return raw;
    for (int j = 1; j <= spec.poly_order; ++j) {
        const auto idx = static_cast<std::size_t>(j - 1);
        raw[j] = fit.theta[j] / spec.column_sds[idx];
        raw[0] -= fit.theta[j] * spec.column_means[idx] / spec.column_sds[idx];
    }
    return raw;
}

}  // namespace countpred
