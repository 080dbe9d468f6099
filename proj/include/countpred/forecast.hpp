#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "countpred/daily_series.hpp"
#include "countpred/overdispersed.hpp"
#include "countpred/poisson_glm.hpp"

namespace countpred {

double alpha_star(double alpha, int horizon);

// Regression fitted to a daily series with DayNum polynomial (and optional
// weekday factor) covariates.
struct SeriesModel {
    GlmFit glm;
    std::optional<OverdispersedFit> overdispersed;
    int first_daynum = 0;
    int last_daynum = 0;
    std::vector<double> index;  // DayNum of each fitted observation
};

SeriesModel fit_series_model(const DailySeries& series, int first_daynum, int last_daynum, DesignSpec spec,
                             bool overdispersed, const FitOptions& options = {});

struct ForecastDay {
    int daynum = 0;
    Weekday weekday = Weekday::Monday;
    double point = 0.0;
    std::int64_t lower = 0;
    std::int64_t upper = 0;
};

struct ForecastResult {
    int cutoff_daynum = 0;
    int target_daynum = 0;
    int horizon_days = 0;
    double alpha = 0.0;
    double alpha_star = 0.0;
    std::vector<ForecastDay> per_day;
    std::int64_t s_current = 0;
    std::int64_t point_cumulative = 0;
    std::int64_t lower_cumulative = 0;
    std::int64_t upper_cumulative = 0;
    std::string model_tag;
};

struct ForecastOptions {
    int max_horizon = 60;
    bool allow_long_horizon = false;
};

// The series ends at the current day; its total is the current cumulative count.
ForecastResult cumulative_forecast(const GlmFit& fit, const DailySeries& series, int target_daynum, double alpha,
                                   const ForecastOptions& options = {});
ForecastResult cumulative_forecast(const OverdispersedFit& fit, const DailySeries& series, int target_daynum,
                                   double alpha, const ForecastOptions& options = {});
ForecastResult cumulative_forecast(const SeriesModel& model, const DailySeries& series, int target_daynum,
                                   double alpha, const ForecastOptions& options = {});

DailySeries reallocate_adjustments(const DailySeries& series, std::span<const Adjustment> adjustments);

struct SweepRow {
    int cutoff_daynum = 0;
    std::optional<ForecastResult> result;
    std::string error;
};

std::vector<SweepRow> sensitivity_sweep(const DailySeries& series, const DesignSpec& design, int first_daynum,
                                        int target_daynum, double alpha, std::span<const int> cutoffs,
                                        bool overdispersed, const ForecastOptions& options = {});

}  // namespace countpred
