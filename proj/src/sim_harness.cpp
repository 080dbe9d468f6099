#include "countpred/sim_harness.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "countpred/errors.hpp"
#include "countpred/poisson_glm.hpp"
#include "countpred/special_math.hpp"

namespace countpred {

namespace {

struct Outcome {
    bool covered = false;
    std::int64_t length = 0;
    double width = 0.0;
};

struct Replication {
    std::vector<Outcome> outcomes;
    std::int64_t redraws = 0;
};

std::int64_t poisson_inversion(double lambda, RandomStream& rng) {
    const double u = rng.uniform();
    double p = std::exp(-lambda);
    double cdf = p;
    std::int64_t k = 0;
    while (u > cdf && k < 1000) {
        ++k;
        p *= lambda / static_cast<double>(k);
        cdf += p;
    }
    return k;
}

// Transformed rejection with squeeze (Hormann 1993).
std::int64_t poisson_ptrs(double lambda, RandomStream& rng) {
    const double slam = std::sqrt(lambda);
    const double loglam = std::log(lambda);
    const double b = 0.931 + 2.53 * slam;
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double vr = 0.9277 - 3.6224 / (b - 2.0);
    while (true) {
        const double u = rng.uniform() - 0.5;
        const double v = rng.uniform();
        const double us = 0.5 - std::fabs(u);
        const double k = std::floor((2.0 * a / us + b) * u + lambda + 0.43);
        if (us >= 0.07 && v <= vr) return static_cast<std::int64_t>(k);
        if (k < 0.0 || (us < 0.013 && v > us)) continue;
        if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <=
            -lambda + k * loglam - log_gamma(k + 1.0))
            return static_cast<std::int64_t>(k);
    }
}

double polynomial_rate_exponent(const std::vector<double>& theta, double w) {
    double eta = 0.0;
    double power = 1.0;
    for (double coef : theta) {
        eta += coef * power;
        power *= w;
    }
    return eta;
}

std::vector<int> resolved_regions(const SimConfig& config) {
    if (!config.regions.empty()) return config.regions;
    std::vector<int> all(static_cast<std::size_t>(region_count(config)));
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
    return all;
}

template <class ReplicationFn>
SimResult run_replications(const SimConfig& config, const std::vector<int>& regions, ReplicationFn replicate) {
    if (config.replications < 1) throw DomainError("replications must be positive");
    if (!(config.alpha > 0.0 && config.alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
    const auto reps = static_cast<std::size_t>(config.replications);
    std::vector<Replication> results(reps);
    const int workers = std::max(1, std::min<int>(config.workers, config.replications));

    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
    auto run_chunk = [&](int worker) {
        try {
            for (std::size_t r = static_cast<std::size_t>(worker); r < reps; r += static_cast<std::size_t>(workers)) {
                RandomStream rng(config.seed, r);
                results[r] = replicate(rng);
            }
        } catch (...) {
            errors[static_cast<std::size_t>(worker)] = std::current_exception();
        }
    };
    if (workers == 1) {
        run_chunk(0);
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(run_chunk, w);
        for (auto& t : pool) t.join();
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

    // Ordered reduction keeps results independent of the worker count.
    SimResult result;
    result.replications = config.replications;
    for (std::size_t j = 0; j < regions.size(); ++j) {
        RegionStats stats;
        stats.region = regions[j];
        double covered = 0.0;
        double mean = 0.0;
        double m2 = 0.0;
        double width = 0.0;
        double count = 0.0;
        for (const auto& rep : results) {
            const Outcome& o = rep.outcomes[j];
            covered += o.covered ? 1.0 : 0.0;
            count += 1.0;
            const double len = static_cast<double>(o.length);
            const double delta = len - mean;
            mean += delta / count;
            m2 += delta * (len - mean);
            width += o.width;
        }
        stats.coverage_pct = 100.0 * covered / count;
        stats.mean_length = mean;
        stats.sd_length = count > 1.0 ? std::sqrt(m2 / (count - 1.0)) : 0.0;
        stats.mean_width = width / count;
        result.regions.push_back(stats);
    }
    for (const auto& rep : results) result.redraws += rep.redraws;
    return result;
}

Outcome score_region(const PredictionRegion& region, std::int64_t y0) {
    return Outcome{region.contains(y0), region.integer_length(), region.length};
}

}  // namespace

RandomStream::RandomStream(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32), 0x9e3779b9u};
    engine_.seed(seq);
}

double RandomStream::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double RandomStream::normal(double mean, double sd) {
    std::normal_distribution<double> dist(mean, sd);
    return dist(engine_);
}

double RandomStream::gamma(double shape, double scale) {
    std::gamma_distribution<double> dist(shape, scale);
    return dist(engine_);
}

std::int64_t poisson_sample(double lambda, RandomStream& rng) {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw DomainError("poisson_sample: rate must be finite and nonnegative");
    if (lambda == 0.0) return 0;
    if (lambda < 30.0) return poisson_inversion(lambda, rng);
    return poisson_ptrs(lambda, rng);
}

double WDistribution::draw(RandomStream& rng) const {
    if (kind == Kind::Uniform) return a + (b - a) * rng.uniform();
    return rng.normal(a, b);
}

std::string WDistribution::describe() const {
    return (kind == Kind::Uniform ? "uniform(" : "normal(") + std::to_string(a) + "," + std::to_string(b) + ")";
}

RegressionScenario regression_case(int case_id, std::int64_t n) {
    RegressionScenario s;
    s.n = n;
    switch (case_id) {
        case 1:
            s.order = 1;
            s.theta = {3.0, 5.0};
            s.w = {WDistribution::Kind::Uniform, 0.0, 1.0};
            break;
        case 2:
            s.order = 2;
            s.theta = {3.0, -0.2, 0.05};
            s.w = {WDistribution::Kind::Normal, 2.0, 2.0};
            break;
        case 3:
            s.order = 3;
            s.theta = {3.0, 0.2, -0.1, -0.05};
            s.w = {WDistribution::Kind::Normal, 1.0, 2.0};
            break;
        case 4:
            s.order = 5;
            s.theta = {3.0, -1.0, 3.0, -2.0, 1.0, -0.5};
            s.w = {WDistribution::Kind::Uniform, 0.0, 1.0};
            break;
        default:
            throw DomainError("regression case must be 1, 2, 3 or 4");
    }
    return s;
}

int region_count(const SimConfig& config) {
    return std::holds_alternative<InterceptScenario>(config.scenario) ? 6 : 3;
}

SimResult run_intercept_experiment(const SimConfig& config) {
    const auto& sc = std::get<InterceptScenario>(config.scenario);
    if (sc.n < 1 || !(sc.lambda > 0.0)) throw DomainError("intercept scenario needs n >= 1 and a positive rate");
    const std::vector<int> regions = resolved_regions(config);
    for (int r : regions)
        if (r < 0 || r > 5) throw DomainError("intercept regions are numbered 0..5");
    const double alpha = config.alpha;
    auto replicate = [&](RandomStream& rng) {
        const std::int64_t t = poisson_sample(static_cast<double>(sc.n) * sc.lambda, rng);
        const std::int64_t y0 = poisson_sample(sc.lambda, rng);
        const double u = rng.uniform();
        Replication rep;
        for (int region : regions) {
            PredictionRegion pr;
            switch (region) {
                case 0:
                    pr = region_smallest(sc.known_rate ? pmf_poisson(sc.lambda) : pmf_plugin_ml(sc.n, t), alpha, u);
                    break;
                case 1: pr = region_adjusted_normal(sc.n, t, alpha); break;
                case 2: pr = region_adjusted_sqrt(sc.n, t, alpha); break;
                case 3: pr = region_smallest(pmf_taylor(sc.n, t), alpha, u); break;
                case 4: pr = region_smallest(pmf_umvue(sc.n, t), alpha, u); break;
                default:
                    pr = region_smallest(pmf_gamma_predictive(sc.n, t, config.prior.kappa, config.prior.beta), alpha, u);
                    break;
            }
            rep.outcomes.push_back(score_region(pr, y0));
        }
        return rep;
    };
    return run_replications(config, regions, replicate);
}

RegressionSample gen_poisson_regression_data(const RegressionScenario& scenario, RandomStream& rng) {
    if (static_cast<int>(scenario.theta.size()) != scenario.order + 1)
        throw DomainError("theta must have order + 1 entries");
    if (scenario.n < 1) throw DomainError("sample size must be positive");
    RegressionSample sample;
    const auto total = static_cast<std::size_t>(scenario.n + 1);
    std::vector<double> w(total);
    std::vector<double> rate(total);
    while (true) {
        bool overflow = false;
        for (std::size_t i = 0; i < total; ++i) {
            w[i] = scenario.w.draw(rng);
            const double eta = polynomial_rate_exponent(scenario.theta, w[i]);
            if (!(eta <= 700.0)) overflow = true;
            rate[i] = std::exp(eta);
        }
        if (!overflow) break;
        ++sample.redraws;
    }
    sample.y.resize(scenario.n);
    for (std::size_t i = 0; i < total; ++i) {
        const std::int64_t draw = poisson_sample(rate[i], rng);
        if (i + 1 < total) sample.y[static_cast<Eigen::Index>(i)] = static_cast<double>(draw);
        else sample.y0 = draw;
    }
    sample.w.assign(w.begin(), w.end() - 1);
    sample.w0 = w.back();
    return sample;
}

RegressionSample gen_poisson_regression_data(const RegressionScenario& scenario, std::uint64_t seed) {
    RandomStream rng(seed, 0);
    return gen_poisson_regression_data(scenario, rng);
}

SimResult run_regression_experiment(const SimConfig& config) {
    const auto& sc = std::get<RegressionScenario>(config.scenario);
    const std::vector<int> regions = resolved_regions(config);
    for (int r : regions)
        if (r < 0 || r > 2) throw DomainError("regression regions are numbered 0..2");
    const double alpha = config.alpha;
    auto replicate = [&](RandomStream& rng) {
        Replication rep;
        while (true) {
            RegressionSample sample = gen_poisson_regression_data(sc, rng);
            rep.redraws += sample.redraws;
            const double u = rng.uniform();
            try {
                DesignSpec spec;
                spec.poly_order = sc.order;
                spec.standardize = true;
                const Design design = build_design(sample.w, std::nullopt, spec);
                const GlmFit glm = fit(design, sample.y);
                const Eigen::RowVectorXd x0 = design_row(sample.w0, std::nullopt, glm.design);
                std::vector<Outcome> outcomes;
                for (int region : regions) {
                    const auto variant = region == 0   ? RegressionRegion::SmallestPlugin
                                         : region == 1 ? RegressionRegion::Normal
                                                       : RegressionRegion::Sqrt;
                    outcomes.push_back(score_region(region_regression(glm, x0, alpha, variant, u), sample.y0));
                }
                rep.outcomes = std::move(outcomes);
                return rep;
            } catch (const NumericalError&) {
                ++rep.redraws;
            } catch (const DomainError&) {
                ++rep.redraws;
            }
        }
    };
    return run_replications(config, regions, replicate);
}

SimResult run_experiment(const SimConfig& config) {
    if (std::holds_alternative<InterceptScenario>(config.scenario)) return run_intercept_experiment(config);
    return run_regression_experiment(config);
}

std::int64_t overdispersed_sample(double rate, double xi, RandomStream& rng) {
    if (!(xi > 0.0)) throw DomainError("over-dispersion parameter must be positive");
    const double frailty = rng.gamma(xi, 1.0 / xi);
    const std::int64_t latent = poisson_sample(rate, rng);
    return static_cast<std::int64_t>(std::floor(frailty * static_cast<double>(latent)));
}

}  // namespace countpred
