#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "countpred/intercept_regions.hpp"

namespace countpred {

// Per-replication random stream: a 64-bit Mersenne Twister whose state is
// derived from std::seed_seq over the 32-bit halves of (seed, stream index).
class RandomStream {
public:
    RandomStream(std::uint64_t seed, std::uint64_t stream);

    // Uniform on [0, 1) with 53 random bits.
    double uniform();
    double normal(double mean, double sd);
    double gamma(double shape, double scale);

private:
    std::mt19937_64 engine_;
};

// Exact Poisson draw: sequential inversion below rate 30, transformed
// rejection with squeeze (PTRS) otherwise.
std::int64_t poisson_sample(double lambda, RandomStream& rng);

struct WDistribution {
    enum class Kind { Uniform, Normal };
    Kind kind = Kind::Uniform;
    double a = 0.0;  // lower bound or mean
    double b = 1.0;  // upper bound or standard deviation

    double draw(RandomStream& rng) const;
    std::string describe() const;
};

struct InterceptScenario {
    std::int64_t n = 5;
    double lambda = 1.0;
    // Evaluate the smallest region at the true rate instead of the estimate.
    bool known_rate = false;
};

struct RegressionScenario {
    int order = 1;
    std::vector<double> theta;
    WDistribution w;
    std::int64_t n = 30;
};

// Built-in regression cases 1..4 of the coverage study.
RegressionScenario regression_case(int case_id, std::int64_t n);

struct SimConfig {
    std::variant<InterceptScenario, RegressionScenario> scenario;
    int replications = 10000;
    double alpha = 0.05;
    std::uint64_t seed = 1;
    // Indices of the regions to evaluate: 0..5 for the intercept model
    // (smallest plug-in, adjusted normal, adjusted sqrt, Taylor, UMVUE,
    // gamma-predictive), 0..2 for regression (smallest plug-in, normal, sqrt).
    std::vector<int> regions;
    int workers = 1;
    GammaHyper prior{0.25, 0.005};
};

struct RegionStats {
    int region = 0;
    double coverage_pct = 0.0;
    double mean_length = 0.0;  // integer lengths realized_hi - realized_lo
    double sd_length = 0.0;
    double mean_width = 0.0;  // real-interval width
};

struct SimResult {
    std::vector<RegionStats> regions;
    int replications = 0;
    std::int64_t redraws = 0;
};

int region_count(const SimConfig& config);
SimResult run_intercept_experiment(const SimConfig& config);
SimResult run_regression_experiment(const SimConfig& config);
SimResult run_experiment(const SimConfig& config);

struct RegressionSample {
    std::vector<double> w;
    Eigen::VectorXd y;
    double w0 = 0.0;
    std::int64_t y0 = 0;
    std::int64_t redraws = 0;
};

RegressionSample gen_poisson_regression_data(const RegressionScenario& scenario, RandomStream& rng);
RegressionSample gen_poisson_regression_data(const RegressionScenario& scenario, std::uint64_t seed);

// Gamma-frailty response: floor(z * y*) with z ~ Gamma(xi, 1/xi) and y* ~ POI(rate).
std::int64_t overdispersed_sample(double rate, double xi, RandomStream& rng);

}  // namespace countpred
