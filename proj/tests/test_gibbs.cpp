#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "bsts/gibbs.hpp"
#include "oracles.hpp"

using namespace bsts;

namespace {

const Date kStart = Date::parse("2019-01-01");

double quantile_of(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    const double pos = q * (static_cast<double>(v.size()) - 1.0);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    const double w = pos - static_cast<double>(lo);
    return v[lo] * (1.0 - w) + v[hi] * w;
}

/// Random-walk level plus one scaled control plus noise, original scale.
SeriesPanel level_plus_control(std::size_t n, double beta, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> y(n), x(n);
    double mu = 50.0;
    for (std::size_t t = 0; t < n; ++t) {
        mu += 0.5 * rng.normal();
        x[t] = 2.0 * rng.normal();
        y[t] = mu + beta * x[t] + 0.5 * rng.normal();
    }
    SeriesPanel panel;
    panel.treated = DateIndexedSeries("treated", kStart, std::move(y));
    panel.controls.push_back(DateIndexedSeries("ctrl", kStart, std::move(x)));
    return panel;
}

ModelSpec level_only_spec() {
    ModelSpec spec;
    spec.trend = TrendType::local_level;
    spec.weekly_seasonal = false;
    return spec;
}

}  // namespace

TEST_CASE("variance prior centers the innovation sd near the guess", "[gibbs]") {
    auto prior = variance_prior();
    CHECK(prior.df == 3.0);
    CHECK(prior.sd_guess == 0.01);
    // inverse-gamma mode of sigma^2 is rate / (shape + 1)
    const double mode_sd = std::sqrt(prior.rate() / (prior.shape() + 1.0));
    CHECK(mode_sd > 0.005);
    CHECK(mode_sd < 0.015);

    auto doubled = variance_prior(0.02);
    const double doubled_mode_sd = std::sqrt(doubled.rate() / (doubled.shape() + 1.0));
    CHECK(doubled_mode_sd == Catch::Approx(2.0 * mode_sd));
    CHECK(doubled.df == 3.0);
}

TEST_CASE("posterior variance draws respect the floor", "[gibbs]") {
    Rng rng(5);
    auto prior = variance_prior();
    for (int i = 0; i < 50; ++i) {
        CHECK(prior.posterior_draw(0.0, 1e9, rng) >= 1e-12);
    }
}

TEST_CASE("design builder standardizes controls and drops dead dummies", "[gibbs]") {
    const Date start = Date::parse("2019-02-01");
    const std::size_t n = 59;  // through 2019-03-31
    std::vector<double> x(n);
    for (std::size_t t = 0; t < n; ++t) x[t] = static_cast<double>(t);
    SeriesPanel panel;
    panel.treated = DateIndexedSeries("y", start, std::vector<double>(n, 1.0));
    panel.controls.push_back(DateIndexedSeries("ramp", start, x));
    panel.controls.push_back(DateIndexedSeries("flat", start, std::vector<double>(n, 3.0)));

    ModelSpec spec = level_only_spec();
    spec.monthly_regressors = true;
    spec.holidays = {{"diwali", {Date::parse("2019-10-27")}},
                     {"holi", {Date::parse("2019-03-21")}}};

    std::vector<std::string> warnings;
    warning_handler() = [&](const std::string& w) { warnings.push_back(w); };
    Design design = build_design(spec, panel);
    warning_handler() = nullptr;

    // ramp + flat selectable; feb/mar dummies and holi survive, the rest die
    REQUIRE(design.names ==
            std::vector<std::string>{"ramp", "flat", "month_feb", "month_mar", "holiday_holi"});
    CHECK(design.selectable == 2);
    CHECK(design.vetoed == std::vector<int>{1});
    // standardized ramp: mean 0, sample sd 1
    CHECK(design.X.col(0).mean() == Catch::Approx(0.0).margin(1e-12));
    CHECK(design.X.col(0).squaredNorm() == Catch::Approx(static_cast<double>(n - 1)));
    CHECK(design.X.col(1).isZero());
    CHECK(design.X.col(4).sum() == 1.0);  // one holi occurrence in window
    CHECK(warnings.size() >= 2);
}

TEST_CASE("posterior interval covers a known control coefficient", "[gibbs]") {
    McmcConfig config;
    config.iterations = 500;
    config.burn_in = 100;
    int hits = 0;
    const int reps = 20;
    for (int rep = 0; rep < reps; ++rep) {
        SeriesPanel panel = level_plus_control(250, 0.8, 1000 + static_cast<std::uint64_t>(rep));
        config.seed = 9000 + static_cast<std::uint64_t>(rep);
        PosteriorSamples samples = fit(level_only_spec(), panel, config);
        // map draws back to the original scale before comparing with 0.8
        const double scale = samples.treated_params.sd / samples.design_params[0].sd;
        std::vector<double> beta_draws;
        for (const auto& b : samples.beta) beta_draws.push_back(b(0) * scale);
        const double lo = quantile_of(beta_draws, 0.025);
        const double hi = quantile_of(beta_draws, 0.975);
        if (lo <= 0.8 && 0.8 <= hi) ++hits;
    }
    CHECK(hits >= 16);
}

TEST_CASE("constant data drives the observation variance to zero", "[gibbs]") {
    SeriesPanel panel;
    panel.treated = DateIndexedSeries("y", kStart, std::vector<double>(400, 7.0));
    ModelSpec spec;
    spec.trend = TrendType::static_intercept;
    spec.weekly_seasonal = false;
    McmcConfig config;
    config.seed = 11;
    PosteriorSamples samples = fit(spec, panel, config);
    CHECK(oracle::mean_of(samples.obs_var) < 1e-3);
}

TEST_CASE("identical seed and config reproduce every draw bit for bit", "[gibbs]") {
    SeriesPanel panel = level_plus_control(150, 0.5, 77);
    ModelSpec spec = level_only_spec();
    McmcConfig config;
    config.iterations = 120;
    config.burn_in = 40;
    config.seed = 4242;

    PosteriorSamples a = fit(spec, panel, config);
    PosteriorSamples b = fit(spec, panel, config);
    REQUIRE(a.draw_count() == b.draw_count());
    REQUIRE(a.draw_count() ==
            static_cast<std::size_t>(config.iterations - config.burn_in));
    for (std::size_t d = 0; d < a.draw_count(); ++d) {
        REQUIRE(a.state_paths[d] == b.state_paths[d]);
        REQUIRE(a.beta[d] == b.beta[d]);
        REQUIRE(a.gamma[d] == b.gamma[d]);
        REQUIRE(a.obs_var[d] == b.obs_var[d]);
        REQUIRE(a.level_var[d] == b.level_var[d]);
    }

    config.seed = 4243;
    PosteriorSamples c = fit(spec, panel, config);
    bool differs = false;
    for (std::size_t d = 0; d < a.draw_count() && !differs; ++d) {
        if (a.beta[d] != c.beta[d] || a.obs_var[d] != c.obs_var[d]) differs = true;
    }
    CHECK(differs);
}

TEST_CASE("zero-coefficient fraction equals one minus inclusion probability", "[gibbs]") {
    Rng rng(314159);
    const std::size_t n = 300;
    std::vector<double> y(n);
    SeriesPanel panel;
    std::vector<std::vector<double>> controls(6, std::vector<double>(n));
    double mu = 10.0;
    for (std::size_t t = 0; t < n; ++t) {
        mu += 0.1 * rng.normal();
        for (auto& c : controls) c[t] = rng.normal();
        y[t] = mu + 1.0 * controls[0][t] + 0.3 * rng.normal();
    }
    panel.treated = DateIndexedSeries("y", kStart, std::move(y));
    for (std::size_t j = 0; j < controls.size(); ++j) {
        panel.controls.push_back(
            DateIndexedSeries("c" + std::to_string(j), kStart, std::move(controls[j])));
    }

    McmcConfig config;
    config.iterations = 400;
    config.burn_in = 100;
    config.seed = 271828;
    PosteriorSamples samples = fit(level_only_spec(), panel, config);

    Eigen::VectorXd pip = inclusion_probabilities(samples);
    REQUIRE(pip.size() == 6);
    for (long j = 0; j < pip.size(); ++j) {
        double zero_fraction = 0.0;
        for (const auto& b : samples.beta) {
            if (b(j) == 0.0) zero_fraction += 1.0;
        }
        zero_fraction /= static_cast<double>(samples.draw_count());
        CHECK(zero_fraction == 1.0 - pip(j));
    }
    CHECK(pip(0) > 0.9);  // the real signal
}

TEST_CASE("summary statistics average the retained draws", "[gibbs]") {
    PosteriorSamples samples;
    samples.design_names = {"a", "b", "c"};
    for (int d = 0; d < 10; ++d) {
        samples.gamma.push_back({1, d < 5 ? 1 : 0, 0});
        Eigen::VectorXd b(3);
        b << 0.65, d < 5 ? 1.0 : 0.0, 0.0;
        samples.beta.push_back(b);
    }
    Eigen::VectorXd pip = inclusion_probabilities(samples);
    CHECK(pip(0) == 1.0);
    CHECK(pip(1) == 0.5);
    CHECK(pip(2) == 0.0);
    Eigen::VectorXd coef = standardized_coefficients(samples);
    CHECK(coef(0) == Catch::Approx(0.65));
    CHECK(coef(1) == Catch::Approx(0.5));
    CHECK(coef(2) == 0.0);

    PosteriorSamples empty;
    CHECK_THROWS_AS(inclusion_probabilities(empty), Error);
    CHECK_THROWS_AS(standardized_coefficients(empty), Error);
}

TEST_CASE("without regressors the fit matches a direct filter", "[gibbs]") {
    Rng rng(60);
    const std::size_t n = 401;
    std::vector<double> y(n);
    // high level-to-noise ratio keeps filtered and smoothed paths close, so
    // the comparison isolates regression leakage rather than smoothing lag
    double mu = 100.0;
    for (std::size_t t = 0; t < n; ++t) {
        mu += 2.0 * rng.normal();
        y[t] = mu + 0.667 * rng.normal();
    }
    SeriesPanel panel;
    panel.treated = DateIndexedSeries("y", kStart, std::move(y));

    McmcConfig config;
    config.iterations = 600;
    config.burn_in = 200;
    config.seed = 8;
    PosteriorSamples samples = fit(level_only_spec(), panel, config);
    REQUIRE(samples.design_names.empty());

    // fit's in-sample one-step predictions, averaged over draws
    std::vector<double> fit_pred(n, 0.0);
    for (const auto& path : samples.state_paths) {
        for (std::size_t t = 1; t < n; ++t) fit_pred[t] += path(0, t - 1);
    }
    for (auto& v : fit_pred) v /= static_cast<double>(samples.draw_count());

    // direct filter with the posterior-mean variances on the same scale
    auto [y_std, params] = standardize(panel.treated);
    StateSpaceModel model =
        assemble({LocalLevel{std::sqrt(oracle::mean_of(samples.level_var))}},
                 oracle::mean_of(samples.obs_var));
    FilterResult filter = kalman_filter(model, y_std.values);

    double mad = 0.0;
    for (std::size_t t = 1; t < n; ++t) {
        mad += std::abs(fit_pred[t] - filter.forecast_mean[t]);
    }
    mad /= static_cast<double>(n - 1);
    CHECK(mad < 0.1);
}

TEST_CASE("independent chains agree on the observation variance", "[gibbs]") {
    SeriesPanel panel = level_plus_control(300, 0.8, 2718);
    ModelSpec spec = level_only_spec();
    McmcConfig config;
    config.iterations = 600;
    config.burn_in = 200;
    config.seed = 99;
    config.chains = 2;
    PosteriorSamples samples = fit(spec, panel, config);
    const std::size_t per_chain = static_cast<std::size_t>(config.iterations - config.burn_in);
    REQUIRE(samples.draw_count() == 2 * per_chain);

    double mean0 = 0.0, mean1 = 0.0;
    for (std::size_t d = 0; d < per_chain; ++d) {
        mean0 += samples.obs_var[d];
        mean1 += samples.obs_var[d + per_chain];
    }
    mean0 /= static_cast<double>(per_chain);
    mean1 /= static_cast<double>(per_chain);
    CHECK(std::abs(mean0 - mean1) / mean0 < 0.1);
}

TEST_CASE("missing treated days are tolerated and paths span the calendar", "[gibbs]") {
    SeriesPanel panel = level_plus_control(200, 0.8, 5150);
    panel.treated.values[13] = kMissing;
    panel.treated.values[77] = kMissing;
    McmcConfig config;
    config.iterations = 150;
    config.burn_in = 50;
    config.seed = 3;
    PosteriorSamples samples = fit(level_only_spec(), panel, config);
    REQUIRE(samples.draw_count() == 100);
    CHECK(samples.state_paths[0].cols() == 200);
    for (double v : samples.obs_var) CHECK(std::isfinite(v));
}

TEST_CASE("forced calendar regressors are present in every draw", "[gibbs]") {
    Rng rng(1212);
    const std::size_t n = 200;
    std::vector<double> y(n);
    for (std::size_t t = 0; t < n; ++t) y[t] = 5.0 + rng.normal();
    SeriesPanel panel;
    panel.treated = DateIndexedSeries("y", kStart, std::move(y));

    ModelSpec spec = level_only_spec();
    spec.holidays = {{"newyear", {Date::parse("2019-01-01"), Date::parse("2020-01-01")}}};
    McmcConfig config;
    config.iterations = 100;
    config.burn_in = 20;
    config.seed = 64;
    PosteriorSamples samples = fit(spec, panel, config);
    REQUIRE(samples.design_names == std::vector<std::string>{"holiday_newyear"});
    CHECK(samples.selectable == 0);
    for (const auto& g : samples.gamma) REQUIRE(g[0] == 1);
    CHECK(inclusion_probabilities(samples)(0) == 1.0);
}
