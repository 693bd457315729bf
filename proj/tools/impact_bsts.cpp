// impact-bsts: causal-impact analysis of daily time series.
//
// Subcommands: prescreen, fit, impact, validate, grid, simulate, fetch.
// One JSON config drives everything; paths inside it are relative to the
// config file. Exit codes: 0 success, 2 config/input problem, 3 numerical or
// sampler failure, 4 network failure.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bsts/csv.hpp"
#include "bsts/gibbs.hpp"
#include "bsts/impact.hpp"
#include "bsts/log.hpp"
#include "bsts/pageviews.hpp"
#include "bsts/plot.hpp"
#include "bsts/prescreen.hpp"
#include "bsts/synth.hpp"
#include "bsts/validate.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace bsts;

namespace {

#ifndef IMPACT_BSTS_DATA_DIR
#define IMPACT_BSTS_DATA_DIR ""
#endif

struct Context {
    json cfg;
    fs::path base;     // directory of the config file
    fs::path out_dir;  // all outputs land here
    std::optional<std::uint64_t> seed_override;
    bool pointwise_panel = false;
};

[[noreturn]] void fail(const std::string& message) { throw Error(message); }

const json& require_key(const json& j, const std::string& key, const std::string& where) {
    if (!j.contains(key)) fail("config: missing '" + key + "' in " + where);
    return j.at(key);
}

template <typename T>
T get_or(const json& j, const std::string& key, T fallback) {
    if (!j.is_object() || !j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        fail("config: bad value for '" + key + "'");
    }
}

json section(const json& cfg, const std::string& key) {
    if (!cfg.contains(key)) return json::object();
    if (!cfg.at(key).is_object()) fail("config: '" + key + "' must be an object");
    return cfg.at(key);
}

TrendType parse_trend(const std::string& name) {
    if (name == "static_intercept") return TrendType::static_intercept;
    if (name == "local_level") return TrendType::local_level;
    if (name == "local_linear") return TrendType::local_linear;
    if (name == "semi_local_linear" || name == "semilocal_linear") {
        return TrendType::semi_local_linear;
    }
    fail("config: unknown trend '" + name +
         "' (expected static_intercept, local_level, local_linear, semi_local_linear)");
}

fs::path resolve(const Context& ctx, const std::string& path) {
    fs::path p(path);
    return p.is_absolute() ? p : ctx.base / p;
}

void write_text(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail("cannot write " + path.string());
    out << content;
}

// ---------------------------------------------------------------------------
// holiday calendars

fs::path calendar_file(const Context& ctx, const std::string& name) {
    if (name.find('/') != std::string::npos || name.ends_with(".json")) {
        return resolve(ctx, name);
    }
    std::string dir;
    if (const char* env = std::getenv("IMPACT_BSTS_DATA_DIR")) dir = env;
    if (dir.empty()) dir = IMPACT_BSTS_DATA_DIR;
    if (dir.empty()) fail("holiday calendar '" + name + "': no data directory configured");
    return fs::path(dir) / "holidays" / (name + ".json");
}

std::vector<Holiday> parse_holiday_list(const json& list, const std::string& where) {
    std::vector<Holiday> out;
    if (list.is_array() && !list.empty() && list[0].is_string()) {
        Holiday h;
        h.name = "holiday";
        for (const auto& d : list) h.dates.push_back(Date::parse(d.get<std::string>()));
        out.push_back(std::move(h));
        return out;
    }
    if (!list.is_array()) fail("config: " + where + " must be an array");
    for (const auto& entry : list) {
        Holiday h;
        h.name = require_key(entry, "name", where).get<std::string>();
        for (const auto& d : require_key(entry, "dates", where)) {
            h.dates.push_back(Date::parse(d.get<std::string>()));
        }
        out.push_back(std::move(h));
    }
    return out;
}

std::vector<Holiday> load_holidays(const Context& ctx, const json& model_cfg) {
    std::vector<Holiday> holidays;
    const std::string calendar = get_or<std::string>(model_cfg, "holiday_calendar", "");
    if (!calendar.empty()) {
        const fs::path file = calendar_file(ctx, calendar);
        std::ifstream in(file);
        if (!in) fail("holiday calendar '" + calendar + "': cannot open " + file.string());
        json doc;
        try {
            doc = json::parse(in);
        } catch (const json::exception& e) {
            fail("holiday calendar " + file.string() + ": " + e.what());
        }
        auto parsed = parse_holiday_list(require_key(doc, "holidays", file.string()),
                                         file.string());
        holidays.insert(holidays.end(), parsed.begin(), parsed.end());
    }
    if (model_cfg.contains("holidays")) {
        auto inlined = parse_holiday_list(model_cfg.at("holidays"), "model.holidays");
        holidays.insert(holidays.end(), inlined.begin(), inlined.end());
    }
    return holidays;
}

// ---------------------------------------------------------------------------
// config -> model/mcmc

ModelSpec build_model(const Context& ctx) {
    const json model_cfg = section(ctx.cfg, "model");
    ModelSpec spec;
    spec.trend = parse_trend(get_or<std::string>(model_cfg, "trend", "local_level"));
    spec.weekly_seasonal = get_or(model_cfg, "weekly_seasonal", true);
    spec.monthly_regressors = get_or(model_cfg, "monthly_regressors", false);
    spec.holidays = load_holidays(ctx, model_cfg);
    spec.slope_ar = get_or(model_cfg, "slope_ar", spec.slope_ar);
    spec.slope_mean = get_or(model_cfg, "slope_mean", spec.slope_mean);
    spec.trend_sd_guess = get_or(model_cfg, "trend_sd_guess", spec.trend_sd_guess);
    spec.seasonal_sd_guess =
        get_or(model_cfg, "seasonal_sd_guess", spec.seasonal_sd_guess);

    const json slab = section(ctx.cfg, "spike_slab");
    spec.expected_model_size = get_or(slab, "expected_model_size", 0.0);
    spec.slab_kappa = get_or(slab, "kappa", 0.0);
    spec.slab_df = get_or(slab, "df", 0.0);
    spec.slab_residual_sd = get_or(slab, "residual_sd_guess", 0.0);
    return spec;
}

McmcConfig build_mcmc(const Context& ctx) {
    const json mcmc = section(ctx.cfg, "mcmc");
    McmcConfig config;
    config.iterations = get_or(mcmc, "iterations", 1000);
    config.burn_in = get_or(mcmc, "burn_in", 200);
    config.chains = get_or(mcmc, "chains", 1);
    config.seed = get_or<std::uint64_t>(mcmc, "seed", 0);
    if (ctx.seed_override) config.seed = *ctx.seed_override;
    return config;
}

// ---------------------------------------------------------------------------
// data loading and windowing

SeriesPanel load_panel(const Context& ctx) {
    const json data = section(ctx.cfg, "data");
    if (!data.contains("csv")) fail("config: missing 'data.csv'");

    std::vector<std::string> files;
    if (data.at("csv").is_string()) {
        files.push_back(data.at("csv").get<std::string>());
    } else if (data.at("csv").is_array()) {
        for (const auto& f : data.at("csv")) files.push_back(f.get<std::string>());
    } else {
        fail("config: 'data.csv' must be a path or list of paths");
    }
    if (files.empty()) fail("config: 'data.csv' is empty");

    std::vector<DateIndexedSeries> columns;
    for (const auto& file : files) {
        const fs::path path = resolve(ctx, file);
        if (!fs::exists(path)) fail("data source not found: " + path.string());
        auto loaded = load_csv(path);
        for (auto& s : loaded) {
            for (const auto& existing : columns) {
                if (existing.name == s.name) {
                    throw DuplicateColumn("column '" + s.name +
                                          "' appears in more than one source");
                }
            }
            columns.push_back(std::move(s));
        }
    }

    const std::string treated_name = get_or<std::string>(data, "treated", "");
    if (treated_name.empty()) fail("config: missing 'data.treated' column name");

    auto take = [&](const std::string& name) -> DateIndexedSeries {
        for (const auto& s : columns) {
            if (s.name == name) return s;
        }
        fail("series '" + name + "' not found in data sources");
    };

    SeriesPanel raw;
    raw.treated = take(treated_name);

    std::vector<std::string> covariate_names;
    for (const auto& name : get_or(data, "covariates", std::vector<std::string>{})) {
        covariate_names.push_back(name);
        raw.covariates.push_back(take(name));
    }
    if (data.contains("controls")) {
        for (const auto& name : data.at("controls").get<std::vector<std::string>>()) {
            raw.controls.push_back(take(name));
        }
    } else {
        for (const auto& s : columns) {
            if (s.name == treated_name) continue;
            if (std::find(covariate_names.begin(), covariate_names.end(), s.name) !=
                covariate_names.end()) {
                continue;
            }
            raw.controls.push_back(s);
        }
    }
    return align(raw);
}

SeriesPanel panel_window(const SeriesPanel& panel, Date from, Date to) {
    SeriesPanel out;
    out.treated = panel.treated.slice(from, to);
    for (const auto& c : panel.controls) out.controls.push_back(c.slice(from, to));
    for (const auto& c : panel.covariates) out.covariates.push_back(c.slice(from, to));
    return out;
}

std::optional<Date> intervention_date(const Context& ctx) {
    if (!ctx.cfg.contains("intervention_date")) return std::nullopt;
    return Date::parse(ctx.cfg.at("intervention_date").get<std::string>());
}

/// Training window: from the first data point (or intervention minus
/// pre_period_days) through the day before the intervention.
SeriesPanel pre_panel(const Context& ctx, const SeriesPanel& panel) {
    const auto intervention = intervention_date(ctx);
    if (!intervention) return panel;
    const Date pre_end = *intervention - 1;
    if (pre_end < panel.start_date()) {
        fail("intervention date " + intervention->to_string() +
             " leaves no pre-period data");
    }
    if (pre_end > panel.treated.end_date()) {
        fail("intervention date " + intervention->to_string() + " is after the data ends");
    }
    Date pre_start = panel.start_date();
    const long pre_days = get_or<long>(ctx.cfg, "pre_period_days", 0);
    if (pre_days > 0 && *intervention - pre_days > pre_start) {
        pre_start = *intervention - pre_days;
    }
    return panel_window(panel, pre_start, pre_end);
}

SeriesPanel post_panel(const Context& ctx, const SeriesPanel& panel, Date intervention) {
    const long post_days = get_or<long>(ctx.cfg, "post_period_days", 42);
    if (post_days < 1) fail("config: post_period_days must be at least 1");
    const Date post_end = intervention + (post_days - 1);
    if (intervention > panel.treated.end_date()) {
        fail("intervention date " + intervention.to_string() + " is after the data ends");
    }
    if (post_end > panel.treated.end_date()) {
        fail("post period ends " + post_end.to_string() + " but data ends " +
             panel.treated.end_date().to_string() +
             "; shorten post_period_days or extend the data");
    }
    return panel_window(panel, intervention, post_end);
}

/// Trims the control list to the prescreen selection (covariates pass
/// through untouched). Disabled or empty-control panels pass unchanged.
SeriesPanel apply_prescreen(const Context& ctx, const SeriesPanel& panel) {
    const json screen = section(ctx.cfg, "prescreen");
    if (!get_or(screen, "enabled", true) || panel.controls.empty()) return panel;
    const auto max_k = get_or<std::size_t>(screen, "max_controls", 50);
    ScreeningReport report = rank_controls(panel.treated, panel.controls, max_k);
    SeriesPanel trimmed;
    trimmed.treated = panel.treated;
    trimmed.covariates = panel.covariates;
    for (const auto& name : report.selected) {
        for (const auto& c : panel.controls) {
            if (c.name == name) {
                trimmed.controls.push_back(c);
                break;
            }
        }
    }
    return trimmed;
}

// ---------------------------------------------------------------------------
// commands

int cmd_prescreen(const Context& ctx) {
    const SeriesPanel panel = pre_panel(ctx, load_panel(ctx));
    const auto max_k =
        get_or<std::size_t>(section(ctx.cfg, "prescreen"), "max_controls", 50);
    ScreeningReport report = rank_controls(panel.treated, panel.controls, max_k);
    write_text(ctx.out_dir / "screening.json", screening_to_json(report).dump(2) + "\n");
    write_text(ctx.out_dir / "screening.csv", screening_to_csv(report));
    std::cout << "prescreen: " << report.selected.size() << " of "
              << panel.controls.size() << " candidates selected\n";
    return 0;
}

PosteriorSamples run_fit(const Context& ctx, const SeriesPanel& pre) {
    return fit(build_model(ctx), apply_prescreen(ctx, pre), build_mcmc(ctx));
}

json fit_summary(const PosteriorSamples& samples) {
    const double scale =
        samples.treated_params.degenerate ? 1.0 : samples.treated_params.sd;
    auto sd_summary = [&](const std::vector<double>& vars) {
        double total = 0.0;
        for (double v : vars) total += std::sqrt(v);
        return vars.empty() ? 0.0 : scale * total / static_cast<double>(vars.size());
    };
    const Eigen::VectorXd pip = inclusion_probabilities(samples);
    const Eigen::VectorXd coef = standardized_coefficients(samples);
    json regression = json::array();
    for (std::size_t j = 0; j < samples.design_names.size(); ++j) {
        regression.push_back({{"name", samples.design_names[j]},
                              {"inclusion_probability", pip(static_cast<long>(j))},
                              {"coefficient_mean_standardized", coef(static_cast<long>(j))},
                              {"forced", j >= samples.selectable}});
    }
    return json{{"start_date", samples.start_date.to_string()},
                {"end_date",
                 (samples.start_date + static_cast<long>(samples.n) - 1).to_string()},
                {"observations", samples.n},
                {"trend", trend_name(samples.spec.trend)},
                {"draws", samples.draw_count()},
                {"chains", samples.config.chains},
                {"seed", samples.config.seed},
                {"posterior_sd",
                 {{"observation", sd_summary(samples.obs_var)},
                  {"level", sd_summary(samples.level_var)},
                  {"slope", sd_summary(samples.slope_var)},
                  {"seasonal", sd_summary(samples.seasonal_var)}}},
                {"regression", regression}};
}

int cmd_fit(const Context& ctx) {
    const SeriesPanel pre = pre_panel(ctx, load_panel(ctx));
    PosteriorSamples samples = run_fit(ctx, pre);
    write_text(ctx.out_dir / "fit.json", fit_summary(samples).dump(2) + "\n");
    std::cout << "fit: " << samples.draw_count() << " draws over " << samples.n
              << " days\n";
    return 0;
}

int cmd_impact(const Context& ctx) {
    const auto intervention = intervention_date(ctx);
    if (!intervention) fail("config: 'intervention_date' is required for impact");
    const SeriesPanel panel = load_panel(ctx);
    const SeriesPanel pre = pre_panel(ctx, panel);
    const SeriesPanel post = post_panel(ctx, panel, *intervention);

    PosteriorSamples samples = run_fit(ctx, pre);
    // distinct stream so the forecast does not replay fit randomness
    const std::uint64_t forecast_seed = Rng::mix(samples.config.seed, 0x666f7265ULL);
    Eigen::MatrixXd draws =
        predict_counterfactual(samples, post, post.size(), forecast_seed);
    const double level = get_or(ctx.cfg, "credible_level", 0.95);
    ImpactReport report = compute_impact(post.treated, draws, level);

    json doc = impact_to_json(report);
    doc["intervention_date"] = intervention->to_string();
    doc["pre_period"] = {{"start", pre.start_date().to_string()},
                         {"end", pre.treated.end_date().to_string()}};
    doc["post_period"] = {{"start", post.start_date().to_string()},
                          {"end", post.treated.end_date().to_string()}};
    doc["treated"] = panel.treated.name;
    doc["seed"] = samples.config.seed;
    write_text(ctx.out_dir / "impact.json", doc.dump(2) + "\n");
    write_text(ctx.out_dir / "impact.csv", impact_to_csv(report));

    PlotOptions plot_options;
    plot_options.pointwise_panel = ctx.pointwise_panel;
    write_text(ctx.out_dir / "impact.svg",
               impact_to_svg(report, &pre.treated, plot_options));

    std::cout << "impact: relative effect " << report.relative_mean << "% ["
              << report.relative_lower << "%, " << report.relative_upper << "%], "
              << (report.significant ? "significant" : "not significant") << "\n";
    return 0;
}

int cmd_validate(const Context& ctx) {
    const SeriesPanel pre = pre_panel(ctx, load_panel(ctx));
    const json vcfg = section(ctx.cfg, "validate");
    ValidationReport report = cross_validate(
        build_model(ctx), apply_prescreen(ctx, pre), build_mcmc(ctx),
        get_or<std::size_t>(vcfg, "folds", 10), get_or<std::size_t>(vcfg, "horizon", 42));
    write_text(ctx.out_dir / "validation.json", validation_to_json(report).dump(2) + "\n");
    write_text(ctx.out_dir / "validation.csv", validation_to_csv(report));
    std::cout << "validate: average MAPE " << report.average_mape << "% over "
              << report.folds.size() << " folds\n";
    return 0;
}

int cmd_grid(const Context& ctx) {
    const SeriesPanel pre = pre_panel(ctx, load_panel(ctx));
    const json gcfg = section(ctx.cfg, "grid");
    GridSpec grid;
    if (gcfg.contains("pre_lengths")) {
        grid.pre_lengths = gcfg.at("pre_lengths").get<std::vector<std::size_t>>();
    }
    if (gcfg.contains("trends")) {
        grid.trends.clear();
        for (const auto& t : gcfg.at("trends")) {
            grid.trends.push_back(parse_trend(t.get<std::string>()));
        }
    }
    GridResult result = grid_search(
        grid, build_model(ctx), apply_prescreen(ctx, pre), build_mcmc(ctx),
        get_or<std::size_t>(gcfg, "folds", 10), get_or<std::size_t>(gcfg, "horizon", 42));
    write_text(ctx.out_dir / "grid.json", grid_to_json(result).dump(2) + "\n");
    write_text(ctx.out_dir / "grid.csv", grid_to_csv(result));
    std::size_t ok = 0;
    for (const auto& c : result.cells) ok += c.ok ? 1 : 0;
    std::cout << "grid: " << result.cells.size() << " cells evaluated, " << ok
              << " usable\n";
    return 0;
}

int cmd_simulate(const Context& ctx) {
    const json sim = section(ctx.cfg, "simulate");
    SynthSpec spec;
    spec.trend = parse_trend(get_or<std::string>(sim, "trend", "local_level"));
    spec.weekly_seasonal = get_or(sim, "weekly_seasonal", spec.weekly_seasonal);
    spec.length = get_or<std::size_t>(sim, "length", spec.length);
    spec.start = Date::parse(get_or<std::string>(sim, "start", spec.start.to_string()));
    spec.seed = get_or<std::uint64_t>(sim, "seed", spec.seed);
    if (ctx.seed_override) spec.seed = *ctx.seed_override;
    spec.intercept = get_or(sim, "intercept", spec.intercept);
    spec.initial_slope = get_or(sim, "initial_slope", spec.initial_slope);
    spec.slope_mean = get_or(sim, "slope_mean", spec.slope_mean);
    spec.ar1 = get_or(sim, "ar1", spec.ar1);
    spec.sigma_obs = get_or(sim, "sigma_obs", spec.sigma_obs);
    spec.sigma_level = get_or(sim, "sigma_level", spec.sigma_level);
    spec.sigma_slope = get_or(sim, "sigma_slope", spec.sigma_slope);
    spec.sigma_seasonal = get_or(sim, "sigma_seasonal", spec.sigma_seasonal);
    spec.seasonal_amplitude = get_or(sim, "seasonal_amplitude", spec.seasonal_amplitude);
    spec.n_controls = get_or<std::size_t>(sim, "n_controls", spec.n_controls);
    spec.true_beta = get_or(sim, "true_beta", spec.true_beta);
    spec.target_correlation = get_or(sim, "target_correlation", spec.target_correlation);
    spec.control_correlations =
        get_or(sim, "control_correlations", spec.control_correlations);
    spec.control_base = get_or(sim, "control_base", spec.control_base);
    spec.control_scale = get_or(sim, "control_scale", spec.control_scale);
    spec.treated_name = get_or<std::string>(sim, "treated_name", spec.treated_name);

    SynthOutput out = generate(spec);
    if (sim.contains("intervention")) {
        const json iv_cfg = sim.at("intervention");
        Intervention iv;
        const std::string kind = get_or<std::string>(iv_cfg, "kind", "step");
        if (kind == "step") {
            iv.kind = InterventionKind::step;
        } else if (kind == "pulse") {
            iv.kind = InterventionKind::pulse;
        } else if (kind == "linear_decay") {
            iv.kind = InterventionKind::linear_decay;
        } else {
            fail("config: unknown intervention kind '" + kind + "'");
        }
        iv.start =
            Date::parse(require_key(iv_cfg, "date", "simulate.intervention")
                            .get<std::string>());
        iv.magnitude =
            require_key(iv_cfg, "magnitude", "simulate.intervention").get<double>();
        iv.duration = get_or<long>(iv_cfg, "duration", 1);
        out.panel.treated = inject(out.panel.treated, iv);
    }

    std::vector<DateIndexedSeries> panel_columns = {out.panel.treated};
    panel_columns.insert(panel_columns.end(), out.panel.controls.begin(),
                         out.panel.controls.end());
    const auto panel_file =
        ctx.out_dir / get_or<std::string>(sim, "output", "panel.csv");
    write_csv(panel_file, panel_columns);

    std::vector<DateIndexedSeries> truth_columns = {
        DateIndexedSeries("level", spec.start, out.truth.level),
        DateIndexedSeries("slope", spec.start, out.truth.slope),
        DateIndexedSeries("seasonal", spec.start, out.truth.seasonal),
        DateIndexedSeries("regression", spec.start, out.truth.regression),
        DateIndexedSeries("noise", spec.start, out.truth.noise)};
    write_csv(ctx.out_dir / get_or<std::string>(sim, "truth_output", "truth.csv"),
              truth_columns);

    std::cout << "simulate: wrote " << spec.length << " days to " << panel_file.string()
              << "\n";
    return 0;
}

int cmd_fetch(const Context& ctx) {
    const json fetch_cfg = section(ctx.cfg, "fetch");
    FetchOptions options;
    options.base_url = get_or<std::string>(fetch_cfg, "base_url", options.base_url);
    const std::string cache = get_or<std::string>(fetch_cfg, "cache_dir", "");
    if (!cache.empty()) options.cache_dir = resolve(ctx, cache);
    FetchStats stats;
    options.stats = &stats;

    const Date start =
        Date::parse(require_key(fetch_cfg, "start", "fetch").get<std::string>());
    const Date end = Date::parse(require_key(fetch_cfg, "end", "fetch").get<std::string>());

    std::vector<json> queries;
    if (fetch_cfg.contains("series")) {
        for (const auto& q : fetch_cfg.at("series")) queries.push_back(q);
    } else {
        queries.push_back(fetch_cfg);
    }

    std::vector<DateIndexedSeries> columns;
    for (const auto& q : queries) {
        PageviewQuery query;
        query.project = get_or<std::string>(q, "project", query.project);
        query.access = get_or<std::string>(q, "access", query.access);
        query.agent = get_or<std::string>(q, "agent", query.agent);
        query.start = start;
        query.end = end;
        DateIndexedSeries series = fetch_aggregate(query, options);
        series.name = get_or<std::string>(q, "name", series.name);
        columns.push_back(std::move(series));
    }

    const auto file = ctx.out_dir / get_or<std::string>(fetch_cfg, "output", "fetched.csv");
    write_csv(file, columns);
    if (stats.cache_hits > 0) {
        std::cerr << "fetch: cache hit for " << stats.cache_hits << " chunk(s)\n";
    }
    std::cout << "fetch: " << columns.size() << " series (" << stats.network_requests
              << " network, " << stats.cache_hits << " cached) -> " << file.string()
              << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bayesian structural time-series causal impact"};
    app.require_subcommand(1);

    std::string config_path;
    long long seed_flag = -1;
    std::string out_flag;
    bool pointwise = false;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "JSON config file")
            ->required()
            ->check(CLI::ExistingFile);
        cmd->add_option("--seed", seed_flag, "override the config seed")
            ->check(CLI::NonNegativeNumber);
        cmd->add_option("--out", out_flag, "output directory");
        return cmd;
    };

    add_common(app.add_subcommand("prescreen", "rank candidate control series"));
    add_common(app.add_subcommand("fit", "fit the structural model on the pre-period"));
    add_common(app.add_subcommand("impact", "estimate post-intervention impact"))
        ->add_flag("--pointwise-panel", pointwise, "add the pointwise-effect panel");
    add_common(app.add_subcommand("validate", "rolling-origin cross-validation"));
    add_common(app.add_subcommand("grid", "pre-period length x trend grid search"));
    add_common(app.add_subcommand("simulate", "write synthetic CSV fixtures"));
    add_common(app.add_subcommand("fetch", "download pageview series to CSV"));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    warning_handler() = [](const std::string& message) {
        std::cerr << "warning: " << message << "\n";
    };

    try {
        Context ctx;
        const fs::path config_file = fs::absolute(config_path);
        std::ifstream in(config_file);
        if (!in) fail("cannot open config " + config_file.string());
        try {
            ctx.cfg = json::parse(in);
        } catch (const json::exception& e) {
            fail("config " + config_file.string() + ": " + e.what());
        }
        ctx.base = config_file.parent_path();
        if (seed_flag >= 0) ctx.seed_override = static_cast<std::uint64_t>(seed_flag);
        ctx.pointwise_panel = pointwise;
        if (!out_flag.empty()) {
            ctx.out_dir = fs::absolute(out_flag);
        } else {
            ctx.out_dir = ctx.base / get_or<std::string>(ctx.cfg, "output_dir", "out");
        }
        fs::create_directories(ctx.out_dir);

        if (app.got_subcommand("prescreen")) return cmd_prescreen(ctx);
        if (app.got_subcommand("fit")) return cmd_fit(ctx);
        if (app.got_subcommand("impact")) return cmd_impact(ctx);
        if (app.got_subcommand("validate")) return cmd_validate(ctx);
        if (app.got_subcommand("grid")) return cmd_grid(ctx);
        if (app.got_subcommand("simulate")) return cmd_simulate(ctx);
        if (app.got_subcommand("fetch")) return cmd_fetch(ctx);
        std::cerr << "error: no subcommand\n";
        return 2;
    } catch (const HttpError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const NumericalFailure& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const SingularInformation& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const DegenerateDraws& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
