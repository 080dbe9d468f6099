#include "countpred/forecast.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "countpred/errors.hpp"

namespace countpred {

namespace {

using DayRegion = std::function<PredictionRegion(const Eigen::RowVectorXd&, double)>;

ForecastResult forecast_with(const DesignSpec& design, const Eigen::VectorXd& theta, const DayRegion& region_of,
                             const DailySeries& series, int target_daynum, double alpha,
                             const ForecastOptions& options, std::string tag) {
    if (series.empty()) throw DomainError("cannot forecast from an empty series");
    const int cutoff = series.last_daynum();
    const int horizon = target_daynum - cutoff;
    if (horizon < 1) throw DomainError("target day must come after the last observed day");
    if (horizon > options.max_horizon && !options.allow_long_horizon)
        throw DomainError("horizon of " + std::to_string(horizon) + " days exceeds the limit of " +
                          std::to_string(options.max_horizon) + "; pass the long-horizon override to proceed");

    ForecastResult result;
    result.cutoff_daynum = cutoff;
    result.target_daynum = target_daynum;
    result.horizon_days = horizon;
    result.alpha = alpha;
    result.alpha_star = alpha_star(alpha, horizon);
    result.s_current = series.total();
    result.model_tag = std::move(tag);

    std::int64_t point_sum = 0;
    std::int64_t lower_sum = 0;
    std::int64_t upper_sum = 0;
    for (int day = cutoff + 1; day <= target_daynum; ++day) {
        ForecastDay fd;
        fd.daynum = day;
        fd.weekday = weekday_of_daynum(day);
        const Eigen::RowVectorXd x0 = design_row(static_cast<double>(day), fd.weekday, design);
        fd.point = std::exp(x0.dot(theta));
        const PredictionRegion region = region_of(x0, result.alpha_star);
        fd.lower = region.realized_lo;
        fd.upper = region.realized_hi;
        point_sum += std::llround(fd.point);
        lower_sum += fd.lower;
        upper_sum += fd.upper;
        result.per_day.push_back(fd);
    }
    result.point_cumulative = result.s_current + point_sum;
    result.lower_cumulative = result.s_current + lower_sum;
    result.upper_cumulative = result.s_current + upper_sum;
    return result;
}

}  // namespace

double alpha_star(double alpha, int horizon) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
    if (horizon < 1) throw DomainError("horizon must be at least one day");
    return -std::expm1(std::log1p(-alpha) / static_cast<double>(horizon));
}

SeriesModel fit_series_model(const DailySeries& series, int first_daynum, int last_daynum, DesignSpec spec,
                             bool overdispersed, const FitOptions& options) {
    const DailySeries window = series.window(first_daynum, last_daynum);
    if (window.records.size() < static_cast<std::size_t>(spec.dimension()) + 2)
        throw DomainError("fit window [" + std::to_string(first_daynum) + ", " + std::to_string(last_daynum) +
                          "] has too few observations");
    SeriesModel model;
    model.first_daynum = window.first_daynum();
    model.last_daynum = window.last_daynum();
    std::vector<Weekday> days;
    Eigen::VectorXd y(static_cast<Eigen::Index>(window.records.size()));
    for (std::size_t i = 0; i < window.records.size(); ++i) {
        model.index.push_back(static_cast<double>(window.records[i].daynum));
        days.push_back(window.records[i].weekday);
        y[static_cast<Eigen::Index>(i)] = static_cast<double>(window.records[i].count);
    }
    const Design design = build_design(model.index, std::span<const Weekday>(days), std::move(spec));
    model.glm = fit(design, y, options);
    if (overdispersed) model.overdispersed = fit_overdispersed(design.matrix, y, model.glm);
    return model;
}

ForecastResult cumulative_forecast(const GlmFit& fit, const DailySeries& series, int target_daynum, double alpha,
                                   const ForecastOptions& options) {
    const DayRegion region_of = [&](const Eigen::RowVectorXd& x0, double level_alpha) {
        return region_regression(fit, x0, level_alpha, RegressionRegion::Normal);
    };
    return forecast_with(fit.design, fit.theta, region_of, series, target_daynum, alpha, options, "poisson_normal");
}

ForecastResult cumulative_forecast(const OverdispersedFit& fit, const DailySeries& series, int target_daynum,
                                   double alpha, const ForecastOptions& options) {
    const DayRegion region_of = [&](const Eigen::RowVectorXd& x0, double level_alpha) {
        return region_overdispersed(fit, x0, level_alpha);
    };
    return forecast_with(fit.base_fit.design, fit.theta, region_of, series, target_daynum, alpha, options,
                         fit.pure_poisson() ? "overdispersed_pure_poisson" : "overdispersed");
}

ForecastResult cumulative_forecast(const SeriesModel& model, const DailySeries& series, int target_daynum,
                                   double alpha, const ForecastOptions& options) {
    if (model.overdispersed) return cumulative_forecast(*model.overdispersed, series, target_daynum, alpha, options);
    return cumulative_forecast(model.glm, series, target_daynum, alpha, options);
}

DailySeries reallocate_adjustments(const DailySeries& series, std::span<const Adjustment> adjustments) {
    DailySeries out = series;
    std::vector<Adjustment> ordered(adjustments.begin(), adjustments.end());
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const Adjustment& a, const Adjustment& b) { return a.daynum < b.daynum; });
    for (const Adjustment& adj : ordered) {
        if (out.empty() || adj.daynum < out.first_daynum() || adj.daynum > out.last_daynum())
            throw DataError("adjustment day " + std::to_string(adj.daynum) + " is not in the series");
        if (adj.amount < 0) throw DataError("adjustment amount must be nonnegative");
        const auto last = static_cast<std::size_t>(adj.daynum - out.first_daynum());
        auto& counts = out.records;
        if (adj.amount > counts[last].count)
            throw DataError("adjustment of " + std::to_string(adj.amount) + " exceeds the count on day " +
                            std::to_string(adj.daynum));
        if (adj.amount == 0) continue;
        counts[last].count -= adj.amount;

        __int128 base_total = 0;
        for (std::size_t i = 0; i <= last; ++i) base_total += counts[i].count;
        if (base_total == 0) {
            counts[last].count += adj.amount;
            continue;
        }
        std::vector<std::int64_t> share(last + 1);
        std::vector<std::int64_t> remainder(last + 1);
        std::int64_t assigned = 0;
        for (std::size_t i = 0; i <= last; ++i) {
            const __int128 scaled = static_cast<__int128>(adj.amount) * counts[i].count;
            share[i] = static_cast<std::int64_t>(scaled / base_total);
            remainder[i] = static_cast<std::int64_t>(scaled % base_total);
            assigned += share[i];
        }
        std::vector<std::size_t> order(last + 1);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
        for (std::int64_t extra = adj.amount - assigned, r = 0; extra > 0; --extra, ++r)
            share[order[static_cast<std::size_t>(r)]] += 1;
        for (std::size_t i = 0; i <= last; ++i) counts[i].count += share[i];
    }
    out.adjustments = ordered;
    return out;
}

std::vector<SweepRow> sensitivity_sweep(const DailySeries& series, const DesignSpec& design, int first_daynum,
                                        int target_daynum, double alpha, std::span<const int> cutoffs,
                                        bool overdispersed, const ForecastOptions& options) {
    std::vector<int> ordered(cutoffs.begin(), cutoffs.end());
    std::sort(ordered.begin(), ordered.end());
    std::vector<SweepRow> rows;
    for (int cutoff : ordered) {
        SweepRow row;
        row.cutoff_daynum = cutoff;
        try {
            if (series.empty() || cutoff > series.last_daynum() || cutoff < series.first_daynum())
                throw DomainError("cutoff outside the observed range");
            DesignSpec spec = design;
            spec.column_means.clear();
            spec.column_sds.clear();
            const SeriesModel model = fit_series_model(series, first_daynum, cutoff, spec, overdispersed);
            const DailySeries observed = series.window(series.first_daynum(), cutoff);
            row.result = cumulative_forecast(model, observed, target_daynum, alpha, options);
        } catch (const Error& e) {
            row.error = e.what();
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace countpred
