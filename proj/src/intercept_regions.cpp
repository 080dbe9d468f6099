#include "countpred/intercept_regions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "countpred/errors.hpp"

namespace countpred {

namespace {

constexpr double kTieTolerance = 1e-12;
// Walk-out truncation: stop once a mass falls below exp(-42) of the modal mass.
constexpr double kLogWalkCutoff = 42.0;
// Beyond this rate the truncated support exceeds about 1.4 million points.
constexpr double kMaxEnumerableRate = 1e10;

bool log_tied(double a, double b) {
    const double scale = std::max({1.0, std::fabs(a), std::fabs(b)});
    return std::fabs(a - b) <= kTieTolerance * scale;
}

void check_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
}

EstimatedPmf point_mass(std::int64_t at, PmfKind kind) {
    EstimatedPmf pmf;
    pmf.support_lo = at;
    pmf.log_mass = {0.0};
    pmf.kind = kind;
    return pmf;
}

// Builds a unimodal pmf by walking outward from the mode until masses become
// negligible or the hard bounds are reached.
template <class LogMassFn>
EstimatedPmf walk_from_mode(LogMassFn log_mass, std::int64_t mode, std::int64_t hard_lo,
                            std::int64_t hard_hi, PmfKind kind) {
    const double peak = log_mass(mode);
    std::vector<double> left;
    for (std::int64_t k = mode - 1; k >= hard_lo; --k) {
        const double lm = log_mass(k);
        if (lm < peak - kLogWalkCutoff) break;
        left.push_back(lm);
    }
    EstimatedPmf pmf;
    pmf.kind = kind;
    pmf.support_lo = mode - static_cast<std::int64_t>(left.size());
    pmf.log_mass.assign(left.rbegin(), left.rend());
    pmf.log_mass.push_back(peak);
    for (std::int64_t k = mode + 1; k <= hard_hi; ++k) {
        const double lm = log_mass(k);
        if (lm < peak - kLogWalkCutoff) break;
        pmf.log_mass.push_back(lm);
    }
    return pmf;
}

void check_counts(std::int64_t n, std::int64_t t) {
    if (n < 1) throw DomainError("sample size must be at least 1");
    if (t < 0) throw DomainError("total count must be nonnegative");
}

}  // namespace

std::string to_string(PmfKind kind) {
    switch (kind) {
        case PmfKind::Poisson: return "poisson";
        case PmfKind::PluginMl: return "plugin_ml";
        case PmfKind::Taylor: return "taylor";
        case PmfKind::Umvue: return "umvue";
        case PmfKind::GammaPredictive: return "gamma_predictive";
    }
    return "unknown";
}

LogProb EstimatedPmf::log_mass_at(std::int64_t k) const {
    if (k < support_lo || k > support_hi()) return LogProb{};
    return LogProb{log_mass[static_cast<std::size_t>(k - support_lo)]};
}

double EstimatedPmf::total_mass() const {
    double total = 0.0;
    for (double lm : log_mass) total += std::exp(lm);
    return total;
}

PredictionRegion region_smallest(const EstimatedPmf& pmf, double alpha, double u) {
    check_alpha(alpha);
    if (!(u >= 0.0 && u <= 1.0)) throw DomainError("randomizer must lie in [0, 1]");
    if (pmf.log_mass.empty()) throw DomainError("region_smallest: empty pmf");

    const std::size_t m = pmf.log_mass.size();
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return pmf.log_mass[a] > pmf.log_mass[b];
    });

    const double target = 1.0 - alpha;
    std::vector<std::int64_t> core;
    std::vector<std::int64_t> boundary;
    double covered = 0.0;
    double gamma = 0.0;
    std::size_t i = 0;
    while (i < m) {
        const double anchor = pmf.log_mass[order[i]];
        std::size_t j = i;
        double group_mass = 0.0;
        while (j < m && log_tied(pmf.log_mass[order[j]], anchor)) {
            group_mass += std::exp(pmf.log_mass[order[j]]);
            ++j;
        }
        if (covered + group_mass <= target + 1e-14) {
            for (std::size_t r = i; r < j; ++r) core.push_back(pmf.support_lo + static_cast<std::int64_t>(order[r]));
            covered += group_mass;
            i = j;
            continue;
        }
        for (std::size_t r = i; r < j; ++r) boundary.push_back(pmf.support_lo + static_cast<std::int64_t>(order[r]));
        gamma = group_mass > 0.0 ? std::clamp((target - covered) / group_mass, 0.0, 1.0) : 0.0;
        break;
    }

    PredictionRegion region;
    region.level = target;
    std::sort(boundary.begin(), boundary.end());
    if (!core.empty()) {
        const auto [lo, hi] = std::minmax_element(core.begin(), core.end());
        region.core_lo = *lo;
        region.core_hi = *hi;
        if (region.core_hi - region.core_lo + 1 != static_cast<std::int64_t>(core.size()))
            throw NumericalError("region_smallest: pmf is not unimodal, core is not an interval");
    } else {
        region.core_lo = boundary.empty() ? 0 : boundary.front();
        region.core_hi = region.core_lo - 1;
    }
    region.boundary = std::move(boundary);
    region.boundary_prob = region.boundary.empty() ? 0.0 : gamma;

    const bool include_boundary = region.boundary_prob > 0.0 && u <= region.boundary_prob;
    std::int64_t lo = std::numeric_limits<std::int64_t>::max();
    std::int64_t hi = std::numeric_limits<std::int64_t>::min();
    if (!region.core_empty()) {
        lo = region.core_lo;
        hi = region.core_hi;
    }
    if (include_boundary) {
        lo = std::min(lo, region.boundary.front());
        hi = std::max(hi, region.boundary.back());
    }
    if (lo <= hi) {
        region.realized_lo = lo;
        region.realized_hi = hi;
    }
    region.length = static_cast<double>(region.integer_length());
    return region;
}

PredictionRegion region_from_interval(double lower, double upper, double level) {
    PredictionRegion region;
    region.level = level;
    lower = std::max(0.0, lower);
    region.length = upper - lower;
    const double lo = std::ceil(lower);
    const double hi = std::floor(upper);
    if (lo <= hi) {
        region.core_lo = static_cast<std::int64_t>(lo);
        region.core_hi = static_cast<std::int64_t>(hi);
    } else {
        region.core_lo = static_cast<std::int64_t>(lo);
        region.core_hi = region.core_lo - 1;
    }
    region.realized_lo = region.core_lo;
    region.realized_hi = region.core_hi;
    return region;
}

PredictionRegion region_normal_known(double lambda, double alpha) {
    if (!(lambda > 0.0)) throw DomainError("rate must be positive");
    const double half = z_half(alpha) * std::sqrt(lambda);
    return region_from_interval(lambda - half, lambda + half, 1.0 - alpha);
}

PredictionRegion region_sqrt_known(double lambda, double alpha) {
    if (!(lambda > 0.0)) throw DomainError("rate must be positive");
    const double root = std::sqrt(lambda);
    const double half = 0.5 * z_half(alpha);
    const double low_root = std::max(0.0, root - half);
    return region_from_interval(low_root * low_root, (root + half) * (root + half), 1.0 - alpha);
}

RegionProperties exact_region_properties(const PredictionRegion& region, double lambda) {
    if (!(lambda > 0.0)) throw DomainError("rate must be positive");
    auto p = [&](std::int64_t k) { return poisson_log_pmf(k, lambda).prob(); };
    double core_mass = 0.0;
    for (std::int64_t k = region.core_lo; k <= region.core_hi; ++k) core_mass += p(k);
    double boundary_mass = 0.0;
    for (std::int64_t k : region.boundary) boundary_mass += p(k);

    RegionProperties props;
    props.coverage = core_mass + region.boundary_prob * boundary_mass;

    const auto without = region.core_empty() ? 0 : region.core_hi - region.core_lo;
    std::int64_t with = without;
    if (!region.boundary.empty()) {
        std::int64_t lo = region.boundary.front();
        std::int64_t hi = region.boundary.back();
        if (!region.core_empty()) {
            lo = std::min(lo, region.core_lo);
            hi = std::max(hi, region.core_hi);
        }
        with = hi - lo;
    }
    props.expected_length = region.boundary_prob * static_cast<double>(with) +
                            (1.0 - region.boundary_prob) * static_cast<double>(without);
    return props;
}

EstimatedPmf pmf_poisson(double lambda, PmfKind kind) {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw DomainError("rate must be nonnegative and finite");
    if (lambda == 0.0) return point_mass(0, kind);
    if (lambda > kMaxEnumerableRate) throw NumericalError("rate too large for pmf enumeration");
    EstimatedPmf pmf;
    pmf.kind = kind;
    pmf.support_lo = poisson_lower_support(lambda);
    const std::int64_t hi = poisson_upper_support(lambda);
    pmf.log_mass.reserve(static_cast<std::size_t>(hi - pmf.support_lo + 1));
    for (std::int64_t k = pmf.support_lo; k <= hi; ++k) pmf.log_mass.push_back(poisson_log_pmf(k, lambda).value);
    return pmf;
}

EstimatedPmf pmf_plugin_ml(std::int64_t n, std::int64_t t) {
    check_counts(n, t);
    return pmf_poisson(static_cast<double>(t) / static_cast<double>(n), PmfKind::PluginMl);
}

PredictionRegion region_adjusted_normal(std::int64_t n, std::int64_t t, double alpha) {
    check_counts(n, t);
    const double rate = static_cast<double>(t) / static_cast<double>(n);
    const double half = z_half(alpha) * std::sqrt(rate * (1.0 + 1.0 / static_cast<double>(n)));
    return region_from_interval(rate - half, rate + half, 1.0 - alpha);
}

PredictionRegion region_adjusted_sqrt(std::int64_t n, std::int64_t t, double alpha) {
    check_counts(n, t);
    const double root = std::sqrt(static_cast<double>(t) / static_cast<double>(n));
    const double half = z_half(alpha) * std::sqrt(0.25 * (1.0 + 1.0 / static_cast<double>(n)));
    const double low_root = std::max(0.0, root - half);
    return region_from_interval(low_root * low_root, (root + half) * (root + half), 1.0 - alpha);
}

EstimatedPmf pmf_taylor(std::int64_t n, std::int64_t t) {
    check_counts(n, t);
    if (t == 0) return point_mass(0, PmfKind::Taylor);
    const double rate = static_cast<double>(t) / static_cast<double>(n);
    const double scale = 0.5 * rate / static_cast<double>(n);
    EstimatedPmf pmf = pmf_poisson(rate, PmfKind::Taylor);
    double total = 0.0;
    for (std::size_t i = 0; i < pmf.log_mass.size(); ++i) {
        const double k = static_cast<double>(pmf.support_lo + static_cast<std::int64_t>(i));
        const double dev = 1.0 - k / rate;
        const double denom = 1.0 + scale * (dev * dev - k / (rate * rate));
        if (denom > 0.0) pmf.log_mass[i] -= std::log(denom);
        else pmf.guarded = true;
        total += std::exp(pmf.log_mass[i]);
    }
    const double log_total = std::log(total);
    for (double& lm : pmf.log_mass) lm -= log_total;
    return pmf;
}

EstimatedPmf pmf_umvue(std::int64_t n, std::int64_t t) {
    check_counts(n, t);
    if (n == 1) return point_mass(t, PmfKind::Umvue);
    if (t == 0) return point_mass(0, PmfKind::Umvue);
    const double td = static_cast<double>(t);
    const double log_p = -std::log(static_cast<double>(n));
    const double log_q = std::log1p(-1.0 / static_cast<double>(n));
    const double log_t_fact = log_gamma(td + 1.0);
    auto log_mass = [&](std::int64_t k) {
        const double kd = static_cast<double>(k);
        return log_t_fact - log_gamma(kd + 1.0) - log_gamma(td - kd + 1.0) + kd * log_p + (td - kd) * log_q;
    };
    const std::int64_t mode = std::min<std::int64_t>(t, (t + 1) / n);
    return walk_from_mode(log_mass, mode, 0, t, PmfKind::Umvue);
}

EstimatedPmf pmf_gamma_predictive(std::int64_t n, std::int64_t t, double kappa, double beta) {
    check_counts(n, t);
    if (!(kappa > 0.0 && beta > 0.0)) throw DomainError("gamma hyper-parameters must be positive");
    const double shape = kappa + static_cast<double>(t);
    const double rate = beta + static_cast<double>(n);
    const double log_q = std::log(rate / (rate + 1.0));
    const double log_one_minus_q = -std::log(rate + 1.0);
    const double log_shape_gamma = log_gamma(shape);
    auto log_mass = [&](std::int64_t y) {
        const double yd = static_cast<double>(y);
        return log_gamma(shape + yd) - log_gamma(yd + 1.0) - log_shape_gamma + shape * log_q + yd * log_one_minus_q;
    };
    const std::int64_t mode = shape > 1.0 ? static_cast<std::int64_t>(std::floor((shape - 1.0) / rate)) : 0;
    return walk_from_mode(log_mass, mode, 0, std::numeric_limits<std::int64_t>::max() - 1,
                          PmfKind::GammaPredictive);
}

GammaHyper hyper_from_mean_sd(double mean, double sd) {
    if (!(mean > 0.0 && sd > 0.0)) throw DomainError("prior mean and sd must be positive");
    const double var = sd * sd;
    return GammaHyper{mean * mean / var, mean / var};
}

double marginal_log_likelihood(double kappa, double beta, std::span<const std::int64_t> y) {
    if (!(kappa > 0.0 && beta > 0.0)) throw DomainError("gamma hyper-parameters must be positive");
    if (y.empty()) throw DomainError("marginal likelihood needs at least one observation");
    const double n = static_cast<double>(y.size());
    double sum_y = 0.0;
    double acc = 0.0;
    for (std::int64_t yi : y) {
        if (yi < 0) throw DomainError("counts must be nonnegative");
        const double yd = static_cast<double>(yi);
        acc += log_gamma(kappa + yd) - log_gamma(yd + 1.0);
        sum_y += yd;
    }
    return acc - n * log_gamma(kappa) + n * kappa * std::log(beta / (beta + 1.0)) - sum_y * std::log1p(beta);
}

MarginalGradient marginal_log_likelihood_gradient(double kappa, double beta,
                                                  std::span<const std::int64_t> y) {
    if (!(kappa > 0.0 && beta > 0.0)) throw DomainError("gamma hyper-parameters must be positive");
    if (y.empty()) throw DomainError("marginal likelihood needs at least one observation");
    const double n = static_cast<double>(y.size());
    const double psi_kappa = digamma(kappa);
    double d_kappa = n * std::log(beta / (beta + 1.0));
    double sum_y = 0.0;
    for (std::int64_t yi : y) {
        const double yd = static_cast<double>(yi);
        d_kappa += digamma(kappa + yd) - psi_kappa;
        sum_y += yd;
    }
    const double d_beta = n * kappa * (1.0 / beta - 1.0 / (beta + 1.0)) - sum_y / (beta + 1.0);
    return MarginalGradient{d_kappa, d_beta};
}

std::variant<GammaHyper, UnderDispersed> mom_gamma(std::span<const std::int64_t> y) {
    if (y.size() < 2) throw DomainError("moment fit needs at least two observations");
    const double n = static_cast<double>(y.size());
    double mean = 0.0;
    for (std::int64_t yi : y) mean += static_cast<double>(yi);
    mean /= n;
    double ss = 0.0;
    for (std::int64_t yi : y) ss += (static_cast<double>(yi) - mean) * (static_cast<double>(yi) - mean);
    const double variance = ss / (n - 1.0);
    if (!(variance > mean)) return UnderDispersed{mean, variance};
    const double beta = mean / (variance - mean);
    return GammaHyper{mean * beta, beta};
}

}  // namespace countpred
