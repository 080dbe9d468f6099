// Command-line front end: fitting, prediction, forecasting, sweeps,
// simulation, exact region properties and adjustment re-allocation.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "countpred/daily_series.hpp"
#include "countpred/errors.hpp"
#include "countpred/forecast.hpp"
#include "countpred/intercept_regions.hpp"
#include "countpred/overdispersed.hpp"
#include "countpred/poisson_glm.hpp"
#include "countpred/sim_harness.hpp"

using json = nlohmann::ordered_json;
using namespace countpred;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;

struct ModelArgs {
    std::string data;
    std::string country = "US";
    std::string adjustments;
    int first_daynum = 0;  // 0: first day with a positive count
    int last_daynum = 0;   // 0: last observed day
    int order = 5;
    bool day_factor = false;
    bool overdispersed = false;
    bool raw_scale = false;
};

void add_model_options(CLI::App* app, ModelArgs& m, bool with_last) {
    app->add_option("--data", m.data, "ECDC-format CSV file")->required()->check(CLI::ExistingFile);
    app->add_option("--country", m.country, "country name, geoId or ISO3 code")->capture_default_str();
    app->add_option("--adjustments", m.adjustments, "JSON list of one-time adjustments to re-allocate")
        ->check(CLI::ExistingFile);
    app->add_option("--first-daynum", m.first_daynum, "first day of the fit window (default: first positive day)");
    if (with_last) app->add_option("--last-daynum", m.last_daynum, "last day of the fit window (default: last day)");
    app->add_option("--order", m.order, "polynomial order in DayNum")->capture_default_str()->check(CLI::Range(0, 12));
    app->add_flag("--day-factor", m.day_factor, "include weekday dummies (Monday baseline)");
    app->add_flag("--overdispersed", m.overdispersed, "gamma-frailty over-dispersed model");
    app->add_flag("--no-standardize", m.raw_scale, "fit on unstandardized polynomial columns");
}

json model_config(const ModelArgs& m) {
    return json{{"data", m.data},
                {"country", m.country},
                {"adjustments", m.adjustments.empty() ? json(nullptr) : json(m.adjustments)},
                {"first_daynum", m.first_daynum},
                {"last_daynum", m.last_daynum},
                {"order", m.order},
                {"day_factor", m.day_factor},
                {"overdispersed", m.overdispersed},
                {"standardize", !m.raw_scale}};
}

DesignSpec design_spec(const ModelArgs& m, int order) {
    DesignSpec spec;
    spec.poly_order = order;
    spec.include_day_factor = m.day_factor;
    spec.standardize = !m.raw_scale;
    return spec;
}

DailySeries load_series(ModelArgs& m) {
    DailySeries series = parse_ecdc_csv(std::filesystem::path(m.data), m.country);
    if (!m.adjustments.empty()) series = reallocate_adjustments(series, load_adjustments(m.adjustments));
    if (m.first_daynum == 0) m.first_daynum = series.first_positive_daynum();
    if (m.last_daynum == 0) m.last_daynum = series.last_daynum();
    return series;
}

json metadata(const json& config, std::optional<std::uint64_t> seed) {
    return json{{"version", COUNTPRED_VERSION},
                {"seed", seed ? json(*seed) : json(nullptr)},
                {"config", config}};
}

void csv_header(std::ostream& out, const json& config, std::optional<std::uint64_t> seed) {
    out << "# countpred " << COUNTPRED_VERSION << '\n';
    out << "# seed: " << (seed ? std::to_string(*seed) : std::string("none")) << '\n';
    out << "# config: " << config.dump() << '\n';
}

json vector_json(const Eigen::VectorXd& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

json region_json(const PredictionRegion& r) {
    return json{{"lower", r.realized_lo},
                {"upper", r.realized_hi},
                {"core", {r.core_lo, r.core_hi}},
                {"boundary", r.boundary},
                {"boundary_prob", r.boundary_prob},
                {"level", r.level},
                {"length", r.length}};
}

json forecast_json(const ForecastResult& r) {
    return json{{"model", r.model_tag},
                {"cutoff_daynum", r.cutoff_daynum},
                {"target_daynum", r.target_daynum},
                {"horizon_days", r.horizon_days},
                {"alpha", r.alpha},
                {"alpha_star", r.alpha_star},
                {"current_total", r.s_current},
                {"point", r.point_cumulative},
                {"interval", {r.lower_cumulative, r.upper_cumulative}}};
}

void write_per_day(std::ostream& out, const ForecastResult& r, const json& config) {
    csv_header(out, config, std::nullopt);
    out << "daynum,date,weekday,point,lower,upper\n";
    out << std::setprecision(10);
    for (const ForecastDay& d : r.per_day)
        out << d.daynum << ',' << iso_date(date_of_daynum(d.daynum)) << ',' << to_string(d.weekday) << ',' << d.point
            << ',' << d.lower << ',' << d.upper << '\n';
}

std::vector<double> parse_grid(const std::string& text) {
    // start:stop[:step], inclusive.
    std::vector<double> parts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ':')) {
        try {
            parts.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw DomainError("grid must look like start:stop[:step], got '" + text + "'");
        }
    }
    if (parts.size() < 2 || parts.size() > 3) throw DomainError("grid must look like start:stop[:step]");
    const double step = parts.size() == 3 ? parts[2] : 1.0;
    if (!(step > 0.0) || !(parts[0] > 0.0) || parts[1] < parts[0]) throw DomainError("invalid grid '" + text + "'");
    std::vector<double> grid;
    const auto count = static_cast<long>(std::floor((parts[1] - parts[0]) / step + 1e-9));
    for (long i = 0; i <= count; ++i) grid.push_back(parts[0] + static_cast<double>(i) * step);
    return grid;
}

std::vector<int> parse_cutoffs(const std::string& text) {
    std::vector<int> out;
    if (text.find(':') != std::string::npos) {
        for (double v : parse_grid(text)) out.push_back(static_cast<int>(std::lround(v)));
        return out;
    }
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            out.push_back(std::stoi(item));
        } catch (const std::exception&) {
            throw DomainError("cutoffs must be a comma list or start:stop[:step]");
        }
    }
    return out;
}

std::string fmt(double v) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(4) << v;
    return os.str();
}

void ensure_stream(const std::ofstream& out, const std::string& path) {
    if (!out) throw DataError("cannot write '" + path + "'");
}

// ---- subcommands ---------------------------------------------------------

void run_fit(ModelArgs m, int max_order, const std::string& residuals_out, int bins) {
    DailySeries series = load_series(m);
    if (max_order < m.order) max_order = m.order;
    json config = model_config(m);
    config["max_order"] = max_order;
    config["bins"] = bins;

    json aic_table = json::array();
    for (int order = 1; order <= max_order; ++order) {
        json row{{"order", order}};
        try {
            const SeriesModel fitted =
                fit_series_model(series, m.first_daynum, m.last_daynum, design_spec(m, order), true);
            row["loglik"] = fitted.glm.loglik;
            row["aic"] = fitted.glm.aic;
            row["xi"] = fitted.overdispersed->pure_poisson() ? json("inf") : json(fitted.overdispersed->xi);
        } catch (const Error& e) {
            row["error"] = e.what();
        }
        aic_table.push_back(row);
    }

    const SeriesModel model =
        fit_series_model(series, m.first_daynum, m.last_daynum, design_spec(m, m.order), m.overdispersed);
    const GlmFit& g = model.glm;
    json out = metadata(config, std::nullopt);
    out["n_obs"] = g.n_obs();
    out["window"] = {model.first_daynum, model.last_daynum};
    out["theta"] = vector_json(g.theta);
    out["theta_raw_scale"] = vector_json(raw_scale_theta(g));
    out["std_errors"] = vector_json(g.covariance.diagonal().cwiseSqrt());
    out["loglik"] = g.loglik;
    out["aic"] = g.aic;
    out["iterations"] = g.iterations;
    out["condition_number"] = g.condition_number;
    out["column_means"] = g.design.column_means;
    out["column_sds"] = g.design.column_sds;
    if (model.overdispersed) {
        const OverdispersedFit& od = *model.overdispersed;
        out["xi"] = od.pure_poisson() ? json("inf") : json(od.xi);
        out["sandwich_std_errors"] = vector_json(
            (od.theta_block().diagonal() / static_cast<double>(g.n_obs())).cwiseSqrt());
    }
    out["aic_table"] = aic_table;
    try {
        const ContingencyTest test = residual_diagnostics(g, model.index, bins);
        json table = json::array();
        for (std::size_t b = 0; b < test.table.size(); ++b)
            table.push_back({{"upper_edge", test.bin_upper_edges[b]},
                             {"nonpositive", test.table[b][0]},
                             {"positive", test.table[b][1]}});
        out["independence_test"] = {
            {"table", table}, {"statistic", test.statistic}, {"df", test.df}, {"p_value", test.p_value}};
    } catch (const Error& e) {
        out["independence_test"] = {{"error", e.what()}};
    }
    if (!residuals_out.empty()) {
        std::ofstream res(residuals_out);
        ensure_stream(res, residuals_out);
        csv_header(res, config, std::nullopt);
        res << "daynum,observed,fitted,residual\n" << std::setprecision(10);
        for (Eigen::Index i = 0; i < g.n_obs(); ++i)
            res << model.index[static_cast<std::size_t>(i)] << ',' << g.observed[i] << ',' << g.fitted_rates[i] << ','
                << g.residuals[i] << '\n';
    }
    std::cout << out.dump(2) << '\n';
}

struct InterceptArgs {
    long n = 0;
    long t = -1;
    double prior_mean = 50.0;
    double prior_sd = 100.0;
};

void run_predict(ModelArgs m, bool have_data, int daynum, const InterceptArgs& ia, double alpha, double u) {
    json config{{"alpha", alpha}, {"u", u}};
    json regions;
    if (!have_data) {
        if (ia.n < 1 || ia.t < 0) throw DomainError("predict needs --data with --daynum, or --n and --t");
        config["n"] = ia.n;
        config["t"] = ia.t;
        config["prior_mean"] = ia.prior_mean;
        config["prior_sd"] = ia.prior_sd;
        const GammaHyper prior = hyper_from_mean_sd(ia.prior_mean, ia.prior_sd);
        regions["smallest_plugin"] = region_json(region_smallest(pmf_plugin_ml(ia.n, ia.t), alpha, u));
        regions["adjusted_normal"] = region_json(region_adjusted_normal(ia.n, ia.t, alpha));
        regions["adjusted_sqrt"] = region_json(region_adjusted_sqrt(ia.n, ia.t, alpha));
        regions["taylor"] = region_json(region_smallest(pmf_taylor(ia.n, ia.t), alpha, u));
        regions["umvue"] = region_json(region_smallest(pmf_umvue(ia.n, ia.t), alpha, u));
        regions["gamma_predictive"] =
            region_json(region_smallest(pmf_gamma_predictive(ia.n, ia.t, prior.kappa, prior.beta), alpha, u));
    } else {
        if (daynum <= 0) throw DomainError("--daynum is required with --data");
        DailySeries series = load_series(m);
        config.update(model_config(m));
        config["daynum"] = daynum;
        const SeriesModel model =
            fit_series_model(series, m.first_daynum, m.last_daynum, design_spec(m, m.order), m.overdispersed);
        const Eigen::RowVectorXd x0 =
            design_row(static_cast<double>(daynum), weekday_of_daynum(daynum), model.glm.design);
        const RateVariance rv = rate_and_variance(model.glm, x0);
        config["rate"] = rv.rate;
        config["variance_factor"] = rv.v_hat;
        regions["smallest_plugin"] =
            region_json(region_regression(model.glm, x0, alpha, RegressionRegion::SmallestPlugin, u));
        regions["normal"] = region_json(region_regression(model.glm, x0, alpha, RegressionRegion::Normal));
        regions["sqrt"] = region_json(region_regression(model.glm, x0, alpha, RegressionRegion::Sqrt));
        if (model.overdispersed) regions["overdispersed"] = region_json(region_overdispersed(*model.overdispersed, x0, alpha));
    }
    json out = metadata(config, std::nullopt);
    out["regions"] = regions;
    std::cout << out.dump(2) << '\n';
}

void run_forecast(ModelArgs m, int cutoff, int target, double alpha, const ForecastOptions& opts,
                  const std::string& per_day_out) {
    DailySeries series = load_series(m);
    if (cutoff == 0) cutoff = series.last_daynum();
    m.last_daynum = cutoff;
    json config = model_config(m);
    config["cutoff_daynum"] = cutoff;
    config["target_daynum"] = target;
    config["alpha"] = alpha;
    config["max_horizon"] = opts.max_horizon;
    config["allow_long_horizon"] = opts.allow_long_horizon;

    if (cutoff < series.first_daynum() || cutoff > series.last_daynum())
        throw DataError("cutoff day " + std::to_string(cutoff) + " is outside the data");
    const SeriesModel model = fit_series_model(series, m.first_daynum, cutoff, design_spec(m, m.order), m.overdispersed);
    const DailySeries observed = series.window(series.first_daynum(), cutoff);
    const ForecastResult result = cumulative_forecast(model, observed, target, alpha, opts);

    json out = metadata(config, std::nullopt);
    out.update(forecast_json(result));
    if (model.overdispersed) out["xi"] = model.overdispersed->pure_poisson() ? json("inf") : json(model.overdispersed->xi);
    if (!per_day_out.empty()) {
        std::ofstream f(per_day_out);
        ensure_stream(f, per_day_out);
        write_per_day(f, result, config);
    }
    std::cout << out.dump(2) << '\n';
}

void run_sweep(ModelArgs m, const std::string& cutoffs_text, int target, double alpha, const ForecastOptions& opts) {
    DailySeries series = load_series(m);
    const std::vector<int> cutoffs = parse_cutoffs(cutoffs_text);
    json config = model_config(m);
    config["cutoffs"] = cutoffs;
    config["target_daynum"] = target;
    config["alpha"] = alpha;
    const auto rows = sensitivity_sweep(series, design_spec(m, m.order), m.first_daynum, target, alpha, cutoffs,
                                        m.overdispersed, opts);
    csv_header(std::cout, config, std::nullopt);
    std::cout << "cutoff_daynum,cutoff_date,current_total,point,lower,upper,error\n";
    for (const SweepRow& row : rows) {
        std::cout << row.cutoff_daynum << ',' << iso_date(date_of_daynum(row.cutoff_daynum)) << ',';
        if (row.result) {
            const ForecastResult& r = *row.result;
            std::cout << r.s_current << ',' << r.point_cumulative << ',' << r.lower_cumulative << ','
                      << r.upper_cumulative << ",\n";
        } else {
            std::string msg = row.error;
            for (char& c : msg)
                if (c == ',' || c == '"') c = ';';
            std::cout << ",,,," << msg << '\n';
        }
    }
}

struct SimArgs {
    std::string scenario = "intercept";
    long n = 5;
    double lambda = 1.0;
    int case_id = 1;
    bool known_rate = false;
};

void run_simulate(const SimArgs& a, SimConfig config) {
    json cfg{{"scenario", a.scenario}, {"n", a.n}, {"replications", config.replications}, {"alpha", config.alpha},
             {"workers", config.workers}};
    std::vector<std::string> names;
    if (a.scenario == "intercept") {
        config.scenario = InterceptScenario{a.n, a.lambda, a.known_rate};
        cfg["lambda"] = a.lambda;
        cfg["known_rate"] = a.known_rate;
        cfg["prior"] = {{"kappa", config.prior.kappa}, {"beta", config.prior.beta}};
        names = {"smallest_plugin", "adjusted_normal", "adjusted_sqrt", "taylor", "umvue", "gamma_predictive"};
    } else if (a.scenario == "regression") {
        const RegressionScenario rs = regression_case(a.case_id, a.n);
        config.scenario = rs;
        cfg["case"] = a.case_id;
        cfg["theta"] = rs.theta;
        cfg["w"] = rs.w.describe();
        names = {"smallest_plugin", "normal", "sqrt"};
    } else {
        throw DomainError("scenario must be 'intercept' or 'regression'");
    }
    const SimResult result = run_experiment(config);
    csv_header(std::cout, cfg, config.seed);
    std::cout << (a.scenario == "intercept" ? "n,lambda" : "case,n");
    for (const char* suffix : {"_cp", "_ml", "_sl"})
        for (const RegionStats& s : result.regions) std::cout << ',' << names[static_cast<std::size_t>(s.region)] << suffix;
    std::cout << ",redraws\n";
    if (a.scenario == "intercept") std::cout << a.n << ',' << a.lambda;
    else std::cout << a.case_id << ',' << a.n;
    for (const RegionStats& s : result.regions) std::cout << ',' << fmt(s.coverage_pct);
    for (const RegionStats& s : result.regions) std::cout << ',' << fmt(s.mean_length);
    for (const RegionStats& s : result.regions) std::cout << ',' << fmt(s.sd_length);
    std::cout << ',' << result.redraws << '\n';
}

void run_exact_props(double alpha, const std::string& grid_text) {
    const std::vector<double> grid = parse_grid(grid_text);
    json cfg{{"alpha", alpha}, {"lambda_grid", grid_text}};
    csv_header(std::cout, cfg, std::nullopt);
    std::cout << "lambda,randomized_cp,randomized_el,nonrandomized_cp,nonrandomized_el,normal_cp,normal_el,sqrt_cp,"
                 "sqrt_el\n";
    std::cout << std::setprecision(12);
    for (double lambda : grid) {
        const PredictionRegion randomized = region_smallest(pmf_poisson(lambda), alpha, 0.0);
        PredictionRegion always = randomized;
        if (!always.boundary.empty()) always.boundary_prob = 1.0;
        const RegionProperties a = exact_region_properties(randomized, lambda);
        const RegionProperties b = exact_region_properties(always, lambda);
        const RegionProperties c = exact_region_properties(region_normal_known(lambda, alpha), lambda);
        const RegionProperties d = exact_region_properties(region_sqrt_known(lambda, alpha), lambda);
        std::cout << lambda << ',' << 100.0 * a.coverage << ',' << a.expected_length << ',' << 100.0 * b.coverage << ','
                  << b.expected_length << ',' << 100.0 * c.coverage << ',' << c.expected_length << ','
                  << 100.0 * d.coverage << ',' << d.expected_length << '\n';
    }
}

void run_reallocate(ModelArgs m) {
    if (m.adjustments.empty()) throw DomainError("reallocate needs --adjustments");
    DailySeries series = load_series(m);
    csv_header(std::cout, model_config(m), std::nullopt);
    write_daily_csv(std::cout, series);
}

int report(const std::string& kind, const std::string& message, int code) {
    std::cerr << json{{"error", kind}, {"message", message}, {"exit_code", code}}.dump() << '\n';
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Prediction regions and forecasts for Poisson count data"};
    app.set_version_flag("--version", std::string("countpred ") + COUNTPRED_VERSION);
    app.require_subcommand(1);

    double alpha = 0.05;
    auto alpha_opt = [&](CLI::App* sub) {
        sub->add_option("--alpha", alpha, "miscoverage level")->capture_default_str()->check(CLI::Range(1e-12, 1.0 - 1e-12));
    };

    ModelArgs fit_m;
    int max_order = 0;
    int bins = 6;
    std::string residuals_out;
    CLI::App* fit_cmd = app.add_subcommand("fit", "fit the regression model and report diagnostics");
    add_model_options(fit_cmd, fit_m, true);
    fit_cmd->add_option("--max-order", max_order, "report AIC for orders 1..max-order");
    fit_cmd->add_option("--bins", bins, "bins for the residual independence test")->capture_default_str();
    fit_cmd->add_option("--residuals-out", residuals_out, "write residuals CSV here");

    ModelArgs pred_m;
    InterceptArgs ia;
    int pred_daynum = 0;
    double u = 0.0;
    CLI::App* pred_cmd = app.add_subcommand("predict", "prediction regions for one future count");
    pred_cmd->add_option("--data", pred_m.data, "ECDC-format CSV file")->check(CLI::ExistingFile);
    pred_cmd->add_option("--country", pred_m.country)->capture_default_str();
    pred_cmd->add_option("--adjustments", pred_m.adjustments)->check(CLI::ExistingFile);
    pred_cmd->add_option("--first-daynum", pred_m.first_daynum);
    pred_cmd->add_option("--last-daynum", pred_m.last_daynum);
    pred_cmd->add_option("--order", pred_m.order)->capture_default_str();
    pred_cmd->add_flag("--day-factor", pred_m.day_factor);
    pred_cmd->add_flag("--overdispersed", pred_m.overdispersed);
    pred_cmd->add_flag("--no-standardize", pred_m.raw_scale);
    pred_cmd->add_option("--daynum", pred_daynum, "day to predict");
    pred_cmd->add_option("--n", ia.n, "sample size (no-covariate model)");
    pred_cmd->add_option("--t", ia.t, "sample total (no-covariate model)");
    pred_cmd->add_option("--prior-mean", ia.prior_mean)->capture_default_str();
    pred_cmd->add_option("--prior-sd", ia.prior_sd)->capture_default_str();
    pred_cmd->add_option("--u", u, "randomizer value in [0, 1]")->capture_default_str()->check(CLI::Range(0.0, 1.0));
    alpha_opt(pred_cmd);

    ModelArgs fc_m;
    int cutoff = 0;
    int target = 0;
    ForecastOptions fopts;
    std::string per_day_out;
    CLI::App* fc_cmd = app.add_subcommand("forecast", "conservative interval for a future cumulative count");
    add_model_options(fc_cmd, fc_m, false);
    fc_cmd->add_option("--cutoff-daynum", cutoff, "last day used (default: last day in the data)");
    fc_cmd->add_option("--target-daynum", target, "day whose cumulative total is forecast")->required();
    fc_cmd->add_option("--max-horizon", fopts.max_horizon)->capture_default_str();
    fc_cmd->add_flag("--allow-long-horizon", fopts.allow_long_horizon);
    fc_cmd->add_option("--per-day-out", per_day_out, "write per-day CSV here");
    alpha_opt(fc_cmd);

    ModelArgs sw_m;
    std::string cutoffs;
    int sw_target = 0;
    CLI::App* sw_cmd = app.add_subcommand("sweep", "forecasts over a range of cutoff days");
    add_model_options(sw_cmd, sw_m, false);
    sw_cmd->add_option("--cutoffs", cutoffs, "comma list or start:stop[:step]")->required();
    sw_cmd->add_option("--target-daynum", sw_target)->required();
    sw_cmd->add_option("--max-horizon", fopts.max_horizon)->capture_default_str();
    sw_cmd->add_flag("--allow-long-horizon", fopts.allow_long_horizon);
    alpha_opt(sw_cmd);

    SimArgs sa;
    SimConfig sim;
    CLI::App* sim_cmd = app.add_subcommand("simulate", "Monte Carlo coverage and length study");
    sim_cmd->add_option("--scenario", sa.scenario)->capture_default_str()->check(CLI::IsMember({"intercept", "regression"}));
    sim_cmd->add_option("--n", sa.n)->capture_default_str();
    sim_cmd->add_option("--lambda", sa.lambda)->capture_default_str();
    sim_cmd->add_option("--case", sa.case_id)->capture_default_str()->check(CLI::Range(1, 4));
    sim_cmd->add_flag("--known-rate", sa.known_rate, "use the true rate for the smallest region");
    sim_cmd->add_option("--reps", sim.replications)->capture_default_str();
    sim_cmd->add_option("--seed", sim.seed)->capture_default_str();
    sim_cmd->add_option("--workers", sim.workers)->capture_default_str();
    sim_cmd->add_option("--regions", sim.regions, "region indices to evaluate");
    alpha_opt(sim_cmd);

    std::string grid = "1:200";
    CLI::App* ex_cmd = app.add_subcommand("exact-props", "exact coverage and expected length over a rate grid");
    ex_cmd->add_option("--lambda-grid", grid)->capture_default_str();
    alpha_opt(ex_cmd);

    ModelArgs re_m;
    CLI::App* re_cmd = app.add_subcommand("reallocate", "spread one-time adjustments over earlier days");
    add_model_options(re_cmd, re_m, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return report("usage", e.what(), kExitUsage);
    }

    try {
        if (*fit_cmd) run_fit(fit_m, max_order, residuals_out, bins);
        else if (*pred_cmd) run_predict(pred_m, !pred_m.data.empty(), pred_daynum, ia, alpha, u);
        else if (*fc_cmd) run_forecast(fc_m, cutoff, target, alpha, fopts, per_day_out);
        else if (*sw_cmd) run_sweep(sw_m, cutoffs, sw_target, alpha, fopts);
        else if (*sim_cmd) {
            sim.alpha = alpha;
            run_simulate(sa, sim);
        } else if (*ex_cmd) run_exact_props(alpha, grid);
        else if (*re_cmd) run_reallocate(re_m);
    } catch (const DataError& e) {
        return report("data", e.what(), kExitData);
    } catch (const NumericalError& e) {
        return report("numerical", e.what(), kExitNumerical);
    } catch (const DomainError& e) {
        return report("usage", e.what(), kExitUsage);
    } catch (const std::exception& e) {
        return report("numerical", e.what(), kExitNumerical);
    }
    return 0;
}
