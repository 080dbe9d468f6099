#pragma once

#include <cstdint>
#include <limits>

namespace countpred {

// Natural-log probability in [-inf, 0].
struct LogProb {
    double value = -std::numeric_limits<double>::infinity();
    double prob() const;
};

inline constexpr double kDefaultTailMass = 1e-12;

double log_gamma(double x);
double digamma(double x);

LogProb poisson_log_pmf(std::int64_t k, double lambda);
double poisson_cdf(double w, double lambda);
// P(Y > k) for Y ~ POI(lambda), computed without cancellation.
double poisson_sf(std::int64_t k, double lambda);
std::int64_t poisson_upper_support(double lambda, double tail_mass = kDefaultTailMass);
// Largest m with P(Y < m) <= tail_mass.
std::int64_t poisson_lower_support(double lambda, double tail_mass = kDefaultTailMass);

// Regularized incomplete gamma functions P(a, x) and Q(a, x) = 1 - P(a, x).
double gamma_p(double a, double x);
double gamma_q(double a, double x);

double normal_cdf(double z);
double normal_quantile(double p);
// Two-sided critical value z with upper-tail probability alpha / 2.
double z_half(double alpha);

double chisq_sf(double x, int df);

}  // namespace countpred
