#include "countpred/special_math.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "countpred/errors.hpp"

namespace countpred {

namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178;

double lanczos_log_gamma(double x) {
    // Lanczos approximation, g = 7, nine coefficients; valid for x >= 0.5.
    static constexpr double coef[9] = {
        0.99999999999980993,     676.5203681218851,     -1259.1392167224028,
        771.32342877765313,      -176.61502916214059,   12.507343278686905,
        -0.13857109526572012,    9.9843695780195716e-6, 1.5056327351493116e-7};
    const double xm1 = x - 1.0;
    double series = coef[0];
    for (int i = 1; i < 9; ++i) series += coef[i] / (xm1 + i);
    const double t = xm1 + 7.5;
    return kLogSqrt2Pi + (xm1 + 0.5) * std::log(t) - t + std::log(series);
}

double stirling_log_gamma(double x) {
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    const double correction =
        inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 / 1680.0)));
    return (x - 0.5) * std::log(x) - x + kLogSqrt2Pi + correction;
}

// Log of the common prefactor x^a e^{-x} / Gamma(a).
double incomplete_gamma_log_prefactor(double a, double x) {
    return a * std::log(x) - x - log_gamma(a);
}

double lower_series(double a, double x) {
    double term = 1.0 / a;
    double sum = term;
    double ap = a;
    for (int i = 0; i < 1000000; ++i) {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if (std::fabs(term) < std::fabs(sum) * 1e-17) break;
    }
    return std::exp(incomplete_gamma_log_prefactor(a, x)) * sum;
}

double upper_continued_fraction(double a, double x) {
    constexpr double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 1000000; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1.0) < 1e-16) break;
    }
    return std::exp(incomplete_gamma_log_prefactor(a, x)) * h;
}

void check_incomplete_gamma_args(double a, double x) {
    if (!(a > 0.0)) throw DomainError("incomplete gamma: shape must be positive");
    if (!(x >= 0.0)) throw DomainError("incomplete gamma: argument must be nonnegative");
}

void check_rate(double lambda) {
    if (!(lambda > 0.0) || !std::isfinite(lambda))
        throw DomainError("poisson: rate must be positive and finite");
}

}  // namespace

double LogProb::prob() const { return std::exp(value); }

double log_gamma(double x) {
    if (!(x > 0.0)) throw DomainError("log_gamma: argument must be positive");
    if (x == 1.0 || x == 2.0) return 0.0;
    if (x < 0.5) return lanczos_log_gamma(x + 1.0) - std::log(x);
    if (x >= 15.0) return stirling_log_gamma(x);
    return lanczos_log_gamma(x);
}

double digamma(double x) {
    if (!(x > 0.0)) throw DomainError("digamma: argument must be positive");
    double shift = 0.0;
    while (x < 10.0) {
        shift -= 1.0 / x;
        x += 1.0;
    }
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    const double tail =
        inv2 * (1.0 / 12.0 -
                inv2 * (1.0 / 120.0 -
                        inv2 * (1.0 / 252.0 - inv2 * (1.0 / 240.0 - inv2 / 132.0))));
    return shift + std::log(x) - 0.5 * inv - tail;
}

double gamma_p(double a, double x) {
    check_incomplete_gamma_args(a, x);
    if (x == 0.0) return 0.0;
    if (x < a + 1.0) return lower_series(a, x);
    return 1.0 - upper_continued_fraction(a, x);
}

double gamma_q(double a, double x) {
    check_incomplete_gamma_args(a, x);
    if (x == 0.0) return 1.0;
    if (x < a + 1.0) return 1.0 - lower_series(a, x);
    return upper_continued_fraction(a, x);
}

LogProb poisson_log_pmf(std::int64_t k, double lambda) {
    check_rate(lambda);
    if (k < 0) throw DomainError("poisson_log_pmf: count must be nonnegative");
    const double kd = static_cast<double>(k);
    return LogProb{-lambda + kd * std::log(lambda) - log_gamma(kd + 1.0)};
}

double poisson_cdf(double w, double lambda) {
    check_rate(lambda);
    if (w < 0.0) return 0.0;
    return gamma_q(std::floor(w) + 1.0, lambda);
}

double poisson_sf(std::int64_t k, double lambda) {
    check_rate(lambda);
    if (k < 0) return 1.0;
    return gamma_p(static_cast<double>(k) + 1.0, lambda);
}

std::int64_t poisson_upper_support(double lambda, double tail_mass) {
    check_rate(lambda);
    if (!(tail_mass > 0.0 && tail_mass < 1.0))
        throw DomainError("poisson_upper_support: tail mass must lie in (0, 1)");
    const double target = 1.0 - tail_mass;
    auto enough = [&](std::int64_t m) { return poisson_cdf(static_cast<double>(m), lambda) >= target; };
    std::int64_t lo = 0;
    std::int64_t hi = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(lambda)));
    if (enough(0)) return 0;
    while (!enough(hi)) {
        lo = hi;
        hi *= 2;
    }
    // Invariant: !enough(lo) (or lo == 0 and !enough(0)), enough(hi).
    while (hi - lo > 1) {
        const std::int64_t mid = lo + (hi - lo) / 2;
        if (enough(mid)) hi = mid;
        else lo = mid;
    }
    return hi;
}

std::int64_t poisson_lower_support(double lambda, double tail_mass) {
    check_rate(lambda);
    if (!(tail_mass > 0.0 && tail_mass < 1.0))
        throw DomainError("poisson_lower_support: tail mass must lie in (0, 1)");
    auto below = [&](std::int64_t m) { return poisson_cdf(static_cast<double>(m - 1), lambda) <= tail_mass; };
    std::int64_t lo = 0;
    std::int64_t hi = static_cast<std::int64_t>(std::floor(lambda)) + 1;
    if (below(hi)) return hi;
    while (hi - lo > 1) {
        const std::int64_t mid = lo + (hi - lo) / 2;
        if (below(mid)) lo = mid;
        else hi = mid;
    }
    return lo;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("normal_quantile: probability must lie in (0, 1)");
    if (p > 0.5) return -normal_quantile(1.0 - p);
    if (p == 0.5) return 0.0;

    // Rational initial guess for the lower half, then Halley refinement.
    static constexpr double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                    -2.759285104469687e+02, 1.383577518672690e+02,
                                    -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                    -1.556989798598866e+02, 6.680131188771972e+01,
                                    -1.328068155288572e+01};
    static constexpr double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                    -2.400758277161838e+00, -2.549732539343734e+00,
                                    4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                    2.445134137142996e+00, 3.754408661907416e+00};
    double x;
    if (p < 0.02425) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    }
    for (int iter = 0; iter < 3; ++iter) {
        const double e = normal_cdf(x) - p;
        const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
        x -= u / (1.0 + 0.5 * x * u);
    }
    return x;
}

double z_half(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
    return -normal_quantile(0.5 * alpha);
}

double chisq_sf(double x, int df) {
    if (df <= 0) throw DomainError("chisq_sf: degrees of freedom must be positive");
    if (!(x >= 0.0)) throw DomainError("chisq_sf: statistic must be nonnegative");
    return gamma_q(0.5 * df, 0.5 * x);
}

}  // namespace countpred
