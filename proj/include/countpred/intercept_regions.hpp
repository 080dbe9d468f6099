#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "countpred/special_math.hpp"

namespace countpred {

// Integer prediction region: a core interval, an optional boundary set
// included with probability boundary_prob, and the realized interval
// obtained after the randomizer draw.
struct PredictionRegion {
    std::int64_t core_lo = 0;
    std::int64_t core_hi = -1;
    std::vector<std::int64_t> boundary;
    double boundary_prob = 0.0;
    std::int64_t realized_lo = 0;
    std::int64_t realized_hi = -1;
    double level = 0.0;
    // Real-interval width for interval-type regions, realized_hi - realized_lo
    // for enumeration-type regions.
    double length = 0.0;

    bool empty() const { return realized_hi < realized_lo; }
    bool core_empty() const { return core_hi < core_lo; }
    bool contains(std::int64_t y) const { return y >= realized_lo && y <= realized_hi; }
    std::int64_t integer_length() const { return empty() ? 0 : realized_hi - realized_lo; }
};

enum class PmfKind { Poisson, PluginMl, Taylor, Umvue, GammaPredictive };

std::string to_string(PmfKind kind);

// Probability mass function on a finite window [support_lo, support_hi];
// mass outside the window is treated as zero.
struct EstimatedPmf {
    std::int64_t support_lo = 0;
    std::vector<double> log_mass;
    PmfKind kind = PmfKind::Poisson;
    // Set when a Taylor-adjusted mass had a nonpositive denominator and the
    // plug-in mass was used instead.
    bool guarded = false;

    std::int64_t support_hi() const { return support_lo + static_cast<std::int64_t>(log_mass.size()) - 1; }
    LogProb log_mass_at(std::int64_t k) const;
    double mass(std::int64_t k) const { return log_mass_at(k).prob(); }
    double total_mass() const;
};

struct RegionProperties {
    double coverage = 0.0;
    double expected_length = 0.0;
};

struct GammaHyper {
    double kappa = 0.0;
    double beta = 0.0;
};

// Moment fit failure: the sample variance does not exceed the sample mean.
struct UnderDispersed {
    double mean = 0.0;
    double variance = 0.0;
};

struct MarginalGradient {
    double d_kappa = 0.0;
    double d_beta = 0.0;
};

PredictionRegion region_smallest(const EstimatedPmf& pmf, double alpha, double u);
PredictionRegion region_from_interval(double lower, double upper, double level);
PredictionRegion region_normal_known(double lambda, double alpha);
PredictionRegion region_sqrt_known(double lambda, double alpha);
RegionProperties exact_region_properties(const PredictionRegion& region, double lambda);

EstimatedPmf pmf_poisson(double lambda, PmfKind kind = PmfKind::Poisson);
EstimatedPmf pmf_plugin_ml(std::int64_t n, std::int64_t t);
PredictionRegion region_adjusted_normal(std::int64_t n, std::int64_t t, double alpha);
PredictionRegion region_adjusted_sqrt(std::int64_t n, std::int64_t t, double alpha);
// t = 0 yields the point mass at 0 (the vanishing-rate limit).
EstimatedPmf pmf_taylor(std::int64_t n, std::int64_t t);
EstimatedPmf pmf_umvue(std::int64_t n, std::int64_t t);
EstimatedPmf pmf_gamma_predictive(std::int64_t n, std::int64_t t, double kappa, double beta);

GammaHyper hyper_from_mean_sd(double mean, double sd);
double marginal_log_likelihood(double kappa, double beta, std::span<const std::int64_t> y);
MarginalGradient marginal_log_likelihood_gradient(double kappa, double beta,
                                                  std::span<const std::int64_t> y);
std::variant<GammaHyper, UnderDispersed> mom_gamma(std::span<const std::int64_t> y);

}  // namespace countpred
