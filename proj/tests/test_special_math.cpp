#include <doctest.h>

#include <cmath>
#include <vector>

#include "countpred/errors.hpp"
#include "countpred/special_math.hpp"

using namespace countpred;

namespace {

double direct_cdf(long k, double lambda) {
    double term = std::exp(-lambda);
    double sum = 0.0;
    for (long j = 0; j <= k; ++j) {
        sum += term;
        term *= lambda / static_cast<double>(j + 1);
    }
    return sum;
}

double bisect_quantile(double p) {
    double lo = -40.0;
    double hi = 40.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (0.5 * std::erfc(-mid / std::sqrt(2.0)) < p) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

TEST_SUITE("special_math") {

TEST_CASE("poisson log pmf known values") {
    CHECK(poisson_log_pmf(0, 1.0).prob() == doctest::Approx(0.36787944117144233).epsilon(1e-14));
    CHECK(poisson_log_pmf(5, 5.0).prob() ==
          doctest::Approx(std::exp(-5.0) * 3125.0 / 120.0).epsilon(1e-13));
    double total = 0.0;
    for (int k = 0; k <= 200; ++k) total += poisson_log_pmf(k, 30.0).prob();
    CHECK(std::fabs(total - 1.0) < 1e-12);
}

TEST_CASE("poisson log pmf rejects bad arguments") {
    CHECK_THROWS_AS(poisson_log_pmf(1, 0.0), DomainError);
    CHECK_THROWS_AS(poisson_log_pmf(1, -2.0), DomainError);
    CHECK_THROWS_AS(poisson_log_pmf(-1, 2.0), DomainError);
}

TEST_CASE("poisson log pmf stays finite for large arguments") {
    const LogProb lp = poisson_log_pmf(10'000'000, 1e6);
    CHECK(std::isfinite(lp.value));
    CHECK(lp.value < 0.0);
    CHECK(poisson_log_pmf(1'000'000, 1e6).value == doctest::Approx(-0.5 * std::log(2.0 * M_PI * 1e6)).epsilon(1e-6));
}

TEST_CASE("poisson pmf is maximized at floor(lambda)") {
    for (double lambda : {0.5, 1.0, 7.3, 100.0}) {
        long best = 0;
        double best_val = -INFINITY;
        for (long k = 0; k <= 400; ++k) {
            const double v = poisson_log_pmf(k, lambda).value;
            if (v > best_val + 1e-13) {
                best_val = v;
                best = k;
            }
        }
        // At integer lambda the pmf ties at lambda - 1 and lambda.
        const long expected = static_cast<long>(std::floor(lambda));
        CHECK((best == expected || (lambda == std::floor(lambda) && best == expected - 1)));
    }
}

TEST_CASE("poisson cdf") {
    CHECK(poisson_cdf(-1.0, 5.0) == 0.0);
    CHECK(poisson_cdf(1.0, 1.0) == doctest::Approx(2.0 * std::exp(-1.0)).epsilon(1e-13));
    CHECK(std::fabs(poisson_cdf(1e6, 5.0) - 1.0) < 1e-12);
    for (double lambda : {0.3, 4.0, 17.5, 250.0}) {
        for (long k : {0L, 1L, 3L, 10L, 30L, 260L}) {
            CHECK(poisson_cdf(static_cast<double>(k) + 0.7, lambda) ==
                  doctest::Approx(direct_cdf(k, lambda)).epsilon(1e-11));
        }
    }
    CHECK_THROWS_AS(poisson_cdf(1.0, 0.0), DomainError);
}

TEST_CASE("poisson upper support matches a linear scan") {
    CHECK(poisson_upper_support(1e-9, 1e-12) <= 1);
    for (double lambda : {0.2, 5.0, 42.0}) {
        long m = 0;
        while (direct_cdf(m, lambda) < 1.0 - 1e-12) ++m;
        const auto got = poisson_upper_support(lambda, 1e-12);
        CHECK(std::labs(got - m) <= 1);  // summation oracle carries ~1e-16 rounding
        CHECK(poisson_cdf(static_cast<double>(got), lambda) >= 1.0 - 1e-12);
        CHECK(poisson_cdf(static_cast<double>(got - 1), lambda) < 1.0 - 1e-12);
    }
    CHECK(poisson_upper_support(100.0, 1e-12) >= poisson_upper_support(5.0, 1e-12));
    CHECK_THROWS_AS(poisson_upper_support(5.0, 0.0), DomainError);
}

TEST_CASE("poisson lower support") {
    CHECK(poisson_lower_support(1.0) == 0);
    const auto lo = poisson_lower_support(400.0, 1e-12);
    CHECK(lo > 0);
    CHECK(poisson_cdf(static_cast<double>(lo - 1), 400.0) <= 1e-12);
    CHECK(poisson_cdf(static_cast<double>(lo), 400.0) > 1e-12);
}

TEST_CASE("normal quantile") {
    CHECK(normal_quantile(0.5) == 0.0);
    CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-12));
    for (double p : {1e-10, 1e-5, 0.01, 0.2, 0.4, 0.6, 0.9, 0.999, 0.999999}) {
        CHECK(std::fabs(normal_quantile(p) - bisect_quantile(p)) < 1e-10);
        // 1 - p is inexact in the tails.
        const double q = normal_quantile(p);
        CHECK(std::fabs(q + normal_quantile(1.0 - p)) < 1e-9 + 1e-15 / std::exp(-0.5 * q * q));
        CHECK(std::fabs(normal_cdf(normal_quantile(p)) - p) < 1e-9 * std::max(1.0, p));
    }
    CHECK(std::fabs(normal_quantile(0.3) + normal_quantile(0.7)) < 1e-12);
    CHECK_THROWS_AS(normal_quantile(0.0), DomainError);
    CHECK_THROWS_AS(normal_quantile(1.0), DomainError);
}

TEST_CASE("chi-square survival") {
    CHECK(chisq_sf(0.0, 5) == 1.0);
    CHECK(chisq_sf(4.4685, 5) == doctest::Approx(0.4841).epsilon(5e-4 / 0.4841));
    // Closed form for two degrees of freedom.
    CHECK(chisq_sf(3.0, 2) == doctest::Approx(std::exp(-1.5)).epsilon(1e-13));
    double prev = 1.0;
    for (double x = 0.5; x < 40.0; x += 0.5) {
        const double v = chisq_sf(x, 7);
        CHECK(v < prev);
        prev = v;
    }
    CHECK_THROWS_AS(chisq_sf(-1.0, 3), DomainError);
    CHECK_THROWS_AS(chisq_sf(1.0, 0), DomainError);
}

TEST_CASE("log gamma") {
    CHECK(log_gamma(1.0) == 0.0);
    CHECK(log_gamma(6.0) == doctest::Approx(std::log(120.0)).epsilon(1e-14));
    for (double x : {1.5, 2.5, 3.7, 9.9, 14.99, 15.0, 15.01, 40.2, 1234.5, 1e6}) {
        CHECK(log_gamma(x) == doctest::Approx(std::lgamma(x)).epsilon(1e-12));
        CHECK(std::fabs(log_gamma(x + 1.0) - log_gamma(x) - std::log(x)) < 1e-10);
    }
    CHECK(log_gamma(0.1) == doctest::Approx(std::lgamma(0.1)).epsilon(1e-12));
    CHECK_THROWS_AS(log_gamma(0.0), DomainError);
}

TEST_CASE("digamma matches finite differences of log gamma") {
    for (double x : {0.3, 1.0, 2.7, 10.0, 300.0}) {
        const double h = 1e-5 * std::max(1.0, x);
        const double fd = (log_gamma(x + h) - log_gamma(x - h)) / (2.0 * h);
        CHECK(digamma(x) == doctest::Approx(fd).epsilon(1e-7));
    }
    CHECK(digamma(1.0) == doctest::Approx(-0.5772156649015329).epsilon(1e-13));
}

TEST_CASE("incomplete gamma complements") {
    for (double a : {0.5, 3.0, 40.0}) {
        for (double x : {0.1, 2.0, 39.0, 80.0}) CHECK(gamma_p(a, x) + gamma_q(a, x) == doctest::Approx(1.0).epsilon(1e-14));
    }
}

}  // TEST_SUITE
