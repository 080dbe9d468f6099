#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "countpred/errors.hpp"
#include "countpred/poisson_glm.hpp"

using namespace countpred;

namespace {

struct Synthetic {
    std::vector<double> w;
    std::vector<Weekday> days;
    Eigen::VectorXd y;
};

Synthetic synthetic_series(int n, unsigned seed) {
    std::mt19937 gen(seed);
    Synthetic s;
    s.y.resize(n);
    for (int i = 0; i < n; ++i) {
        const double w = 60.0 + i;
        s.w.push_back(w);
        s.days.push_back(static_cast<Weekday>(i % 7));
        const double t = (w - 90.0) / 30.0;
        const double rate = std::exp(4.0 + 0.8 * t - 0.5 * t * t + (i % 7 == 6 ? -0.3 : 0.0));
        std::poisson_distribution<int> draw(rate);
        s.y[i] = draw(gen);
    }
    return s;
}

double rel_err(double a, double b) { return std::fabs(a - b) / std::max(1.0, std::fabs(b)); }

}  // namespace

TEST_SUITE("poisson_glm") {

TEST_CASE("design construction") {
    const std::vector<double> w{1, 2, 3};
    DesignSpec raw;
    raw.standardize = false;
    const Design d = build_design(w, std::nullopt, raw);
    CHECK(d.matrix.rows() == 3);
    CHECK(d.matrix.cols() == 2);
    for (int i = 0; i < 3; ++i) {
        CHECK(d.matrix(i, 0) == 1.0);
        CHECK(d.matrix(i, 1) == w[i]);
    }

    const Design s = build_design(w, std::nullopt, DesignSpec{});
    CHECK(s.matrix(0, 1) == doctest::Approx(-1.0));
    CHECK(s.matrix(1, 1) == doctest::Approx(0.0));
    CHECK(s.matrix(2, 1) == doctest::Approx(1.0));
    REQUIRE(s.spec.has_statistics());
    CHECK(s.spec.column_means[0] == 2.0);
    CHECK(s.spec.column_sds[0] == 1.0);

    DesignSpec with_day;
    with_day.include_day_factor = true;
    with_day.poly_order = 2;
    const std::vector<double> w7{1, 2, 3, 4, 5, 6, 7};
    const std::vector<Weekday> days{Weekday::Monday,   Weekday::Tuesday,  Weekday::Wednesday, Weekday::Thursday,
                                    Weekday::Friday,   Weekday::Saturday, Weekday::Sunday};
    const Design dd = build_design(w7, std::span<const Weekday>(days), with_day);
    CHECK(dd.matrix.cols() == 9);
    for (int c = 3; c < 9; ++c) CHECK(dd.matrix(0, c) == 0.0);
    for (int r = 1; r < 7; ++r)
        for (int c = 3; c < 9; ++c) CHECK(dd.matrix(r, c) == (c - 3 == r - 1 ? 1.0 : 0.0));

    const Eigen::RowVectorXd row = design_row(3.0, Weekday::Sunday, dd.spec);
    for (int c = 0; c < 3; ++c) CHECK(row[c] == doctest::Approx(dd.matrix(2, c)));
    for (int c = 3; c < 9; ++c) CHECK(row[c] == (c == 8 ? 1.0 : 0.0));

    const std::vector<double> flat{2, 2, 2};
    CHECK_THROWS_AS(build_design(flat, std::nullopt, DesignSpec{}), DomainError);
    CHECK_THROWS_AS(build_design(w, std::nullopt, with_day), DomainError);
}

TEST_CASE("score and information") {
    const Synthetic s = synthetic_series(40, 7);
    DesignSpec spec;
    spec.poly_order = 2;
    spec.include_day_factor = true;
    const Design d = build_design(s.w, std::span<const Weekday>(s.days), spec);
    Eigen::VectorXd theta(d.matrix.cols());
    theta << 3.9, 0.5, -0.3, 0.1, 0.05, -0.02, 0.0, 0.03, -0.2;

    const Eigen::VectorXd u = score(theta, d.matrix, s.y);
    const double h = 1e-6;
    for (Eigen::Index j = 0; j < theta.size(); ++j) {
        Eigen::VectorXd up = theta, dn = theta;
        up[j] += h;
        dn[j] -= h;
        const double fd = (poisson_loglik(up, d.matrix, s.y) - poisson_loglik(dn, d.matrix, s.y)) / (2 * h);
        CHECK(rel_err(u[j], fd) < 1e-6);
    }

    const Eigen::MatrixXd info = observed_info(theta, d.matrix, s.y);
    CHECK((info - expected_info(theta, d.matrix)).cwiseAbs().maxCoeff() == 0.0);
    CHECK((info - info.transpose()).cwiseAbs().maxCoeff() == 0.0);
    const double hh = 1e-5;
    for (Eigen::Index j = 0; j < theta.size(); ++j) {
        Eigen::VectorXd up = theta, dn = theta;
        up[j] += hh;
        dn[j] -= hh;
        const Eigen::VectorXd col = -(score(up, d.matrix, s.y) - score(dn, d.matrix, s.y)) / (2 * hh);
        for (Eigen::Index i = 0; i < theta.size(); ++i)
            CHECK(std::fabs(col[i] - info(i, j)) <= 1e-5 * std::max(1.0, info.cwiseAbs().maxCoeff()));
    }

    const Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(5, 1);
    Eigen::VectorXd t0(1);
    t0 << 0.7;
    CHECK(expected_info(t0, ones)(0, 0) == doctest::Approx(5.0 * std::exp(0.7)).epsilon(1e-14));

    Eigen::VectorXd y3(3);
    y3 << 2, 4, 6;
    Eigen::VectorXd mle(1);
    mle << std::log(4.0);
    CHECK(std::fabs(score(mle, Eigen::MatrixXd::Ones(3, 1), y3)[0]) < 1e-10);

    Eigen::VectorXd huge(1);
    huge << 800.0;
    CHECK_THROWS_AS(score(huge, Eigen::MatrixXd::Ones(3, 1), y3), DivergenceError);
}

TEST_CASE("score vanishes when responses equal the rates") {
    Eigen::MatrixXd x(3, 2);
    x << 1, 0.1, 1, 0.5, 1, 0.9;
    Eigen::VectorXd theta(2);
    theta << 1.0, 0.4;
    const Eigen::VectorXd y = (x * theta).array().exp().matrix();
    CHECK(score(theta, x, y).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("intercept-only fit") {
    Eigen::VectorXd y(3);
    y << 2, 4, 6;
    const GlmFit f = fit(Eigen::MatrixXd::Ones(3, 1), y);
    CHECK(f.converged);
    CHECK(f.theta[0] == doctest::Approx(std::log(4.0)).epsilon(1e-8));
    double ll = 0.0;
    for (int i = 0; i < 3; ++i) ll += poisson_log_pmf(static_cast<std::int64_t>(y[i]), 4.0).value;
    CHECK(f.aic == doctest::Approx(-2.0 * ll + 2.0).epsilon(1e-10));
    CHECK(f.residuals[0] == doctest::Approx(-1.0).epsilon(1e-9));

    const RateVariance rv = rate_and_variance(f, Eigen::RowVectorXd::Ones(1));
    CHECK(rv.rate == doctest::Approx(4.0).epsilon(1e-8));
    CHECK(rv.v_hat == doctest::Approx(1.0 + 1.0 / 3.0).epsilon(1e-10));

    // Same arithmetic as the adjusted intercept region.
    const PredictionRegion r = region_regression(f, Eigen::RowVectorXd::Ones(1), 0.05, RegressionRegion::Normal);
    const PredictionRegion ref = region_adjusted_normal(3, 12, 0.05);
    CHECK(r.realized_lo == ref.realized_lo);
    CHECK(r.realized_hi == ref.realized_hi);
    CHECK(r.length == doctest::Approx(ref.length).epsilon(1e-9));
}

TEST_CASE("normal region at rate 5 with variance factor 1.1") {
    Eigen::VectorXd y = Eigen::VectorXd::Constant(10, 5.0);
    y[0] = 4;
    y[1] = 6;
    const GlmFit f = fit(Eigen::MatrixXd::Ones(10, 1), y);
    const RateVariance rv = rate_and_variance(f, Eigen::RowVectorXd::Ones(1));
    CHECK(rv.rate == doctest::Approx(5.0).epsilon(1e-10));
    CHECK(rv.v_hat == doctest::Approx(1.1).epsilon(1e-10));
    const PredictionRegion r = region_regression(f, Eigen::RowVectorXd::Ones(1), 0.05, RegressionRegion::Normal);
    CHECK(r.realized_lo == 1);
    CHECK(r.realized_hi == 9);
    const PredictionRegion sq = region_regression(f, Eigen::RowVectorXd::Ones(1), 0.05, RegressionRegion::Sqrt);
    CHECK(sq.realized_lo == 2);
    CHECK(sq.realized_hi == 10);
    const PredictionRegion plug =
        region_regression(f, Eigen::RowVectorXd::Ones(1), 0.05, RegressionRegion::SmallestPlugin, 0.0);
    const PredictionRegion ref = region_smallest(pmf_poisson(rv.rate), 0.05, 0.0);
    CHECK(plug.realized_lo == ref.realized_lo);
    CHECK(plug.realized_hi == ref.realized_hi);
}

TEST_CASE("saturated two-point fit") {
    Eigen::MatrixXd x(2, 2);
    x << 1, -1, 1, 1;
    Eigen::VectorXd y(2);
    y << 3, 11;
    const GlmFit f = fit(x, y);
    CHECK(f.fitted_rates[0] == doctest::Approx(3.0).epsilon(1e-8));
    CHECK(f.fitted_rates[1] == doctest::Approx(11.0).epsilon(1e-8));
}

TEST_CASE("fit errors") {
    Eigen::MatrixXd x(4, 2);
    x << 1, 2, 1, 2, 1, 2, 1, 2;
    Eigen::VectorXd y(4);
    y << 1, 2, 3, 4;
    CHECK_THROWS_AS(fit(x, y), SingularMatrixError);

    Eigen::VectorXd neg = y;
    neg[0] = -1;
    CHECK_THROWS_AS(fit(Eigen::MatrixXd::Ones(4, 1), neg), DomainError);

    const Synthetic s = synthetic_series(30, 3);
    DesignSpec spec;
    spec.poly_order = 2;
    const Design d = build_design(s.w, std::nullopt, spec);
    FitOptions opts;
    opts.max_iter = 1;
    opts.init = Eigen::VectorXd::Zero(3);
    try {
        (void)fit(d, s.y, opts);
        FAIL("expected a convergence error");
    } catch (const ConvergenceError& e) {
        CHECK(e.last_iterate().size() == 3);
    }
}

TEST_CASE("fit properties on a synthetic series") {
    const Synthetic s = synthetic_series(80, 11);
    double prev_ll = -INFINITY;
    for (int order = 1; order <= 4; ++order) {
        DesignSpec spec;
        spec.poly_order = order;
        spec.include_day_factor = true;
        const Design d = build_design(s.w, std::span<const Weekday>(s.days), spec);
        const GlmFit f = fit(d, s.y);
        CAPTURE(order);
        CHECK(score(f.theta, d.matrix, s.y).cwiseAbs().maxCoeff() <= 1e-8 * (1.0 + std::fabs(f.loglik)));
        CHECK((f.fitted_rates.array() > 0.0).all());
        CHECK(f.aic == doctest::Approx(-2.0 * f.loglik + 2.0 * static_cast<double>(f.theta.size())));
        CHECK(std::fabs(f.fitted_rates.sum() - s.y.sum()) <= 1e-6 * s.y.sum());
        CHECK(f.loglik >= prev_ll - 1e-8);
        prev_ll = f.loglik;

        DesignSpec raw_spec = spec;
        raw_spec.standardize = false;
        std::vector<double> centered;
        // Unstandardized high powers of 60..140 are badly conditioned; scale the index.
        for (double w : s.w) centered.push_back(w / 100.0);
        const Design dr = build_design(centered, std::span<const Weekday>(s.days), raw_spec);
        const Design ds = build_design(centered, std::span<const Weekday>(s.days), spec);
        const GlmFit fr = fit(dr, s.y);
        const GlmFit fs = fit(ds, s.y);
        CHECK(std::fabs(fr.loglik - fs.loglik) <= 1e-8 * std::fabs(fs.loglik));
        CHECK(((fr.fitted_rates - fs.fitted_rates).array().abs() / fs.fitted_rates.array()).maxCoeff() < 1e-8);

        const Eigen::RowVectorXd x_raw = design_row(1.5, Weekday::Friday, dr.spec);
        const Eigen::RowVectorXd x_std = design_row(1.5, Weekday::Friday, ds.spec);
        CHECK(rate_and_variance(fr, x_raw).rate == doctest::Approx(rate_and_variance(fs, x_std).rate).epsilon(1e-8));

        const Eigen::VectorXd back = raw_scale_theta(fs);
        CHECK((back - fr.theta).cwiseAbs().maxCoeff() <= 1e-6 * (1.0 + fr.theta.cwiseAbs().maxCoeff()));

        const RateVariance far = rate_and_variance(f, design_row(150.0, Weekday::Monday, d.spec));
        CHECK(far.v_hat > 1.0);
    }
}

TEST_CASE("independence test") {
    const ContingencyTest published =
        independence_test({{7, 6}, {6, 7}, {5, 7}, {10, 3}, {7, 6}, {5, 7}});
    CHECK(published.statistic == doctest::Approx(4.4685).epsilon(0.01 / 4.4685));
    CHECK(published.df == 5);
    CHECK(std::fabs(published.p_value - 0.4841) < 5e-4);

    const ContingencyTest balanced = independence_test({{4, 4}, {4, 4}, {4, 4}});
    CHECK(balanced.statistic == 0.0);
    CHECK(balanced.p_value == 1.0);
    CHECK(independence_test({{2, 2}, {2, 2}}).statistic == 0.0);
    CHECK_THROWS_AS(independence_test({{0, 3}, {0, 5}}), DataError);
    CHECK_THROWS_AS(independence_test({{1, 1}}), DomainError);
}

TEST_CASE("residual bins follow the index range") {
    // Days 62..137 as in a mid-March to mid-May window.
    std::vector<double> idx;
    Eigen::VectorXd y(76);
    for (int d = 62; d <= 137; ++d) {
        idx.push_back(d);
        y[d - 62] = (d * 7919) % 13;
    }
    const GlmFit f = fit(Eigen::MatrixXd::Ones(76, 1), y);
    const ContingencyTest t = residual_diagnostics(f, idx, 6);
    const std::vector<double> edges{74, 87, 99, 112, 125, 137};
    CHECK(t.bin_upper_edges == edges);
    const long sizes[] = {13, 13, 12, 13, 13, 12};
    for (int b = 0; b < 6; ++b) CHECK(t.table[b][0] + t.table[b][1] == sizes[b]);
}

}  // TEST_SUITE
