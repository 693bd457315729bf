#pragma once

// Synthetic daily panels with known latent components, plus intervention
// injection for calibration studies.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <string>
#include <utility>
#include <vector>

#include "bsts/errors.hpp"
#include "bsts/gibbs.hpp"
#include "bsts/rng.hpp"
#include "bsts/series.hpp"

namespace bsts {

/// Recipe for one simulated panel. (spec, seed) fixes the output exactly.
struct SynthSpec {
    TrendType trend = TrendType::local_level;
    bool weekly_seasonal = true;

    std::size_t length = 365;
    Date start = Date::parse("2017-01-01");
    std::uint64_t seed = 1;

    double intercept = 100.0;
    double initial_slope = 0.0;
    double slope_mean = 0.0;  // long-run slope D (semilocal)
    double ar1 = 0.95;        // slope mean reversion rho (semilocal)

    double sigma_obs = 1.0;
    double sigma_level = 0.5;
    double sigma_slope = 0.05;
    double sigma_seasonal = 0.1;
    double seasonal_amplitude = 5.0;  // scale of the initial weekly pattern

    std::size_t n_controls = 0;
    // Raw-scale weight per control; zero-padded when shorter than n_controls.
    std::vector<double> true_beta;
    // Controls mix the treated latent trend with white noise to hit this
    // correlation; a control with correlation <= 0 is pure noise.
    double target_correlation = 0.9;
    std::vector<double> control_correlations;  // per-control override
    double control_base = 50.0;
    double control_scale = 10.0;

    std::string treated_name = "y";
};

/// Per-day latent components recorded alongside the observed panel.
/// Identity: y_t = level[t] + seasonal[t] + regression[t] + noise[t].
struct SynthTruth {
    std::vector<double> level;
    std::vector<double> slope;
    std::vector<double> seasonal;
    std::vector<double> regression;
    std::vector<double> noise;
    std::vector<double> beta;  // raw-scale coefficient per control
};

struct SynthOutput {
    SeriesPanel panel;
    SynthTruth truth;
};

inline SynthOutput generate(const SynthSpec& spec) {
    if (spec.length == 0) throw Error("synthetic length must be positive");
    const std::size_t n = spec.length;
    Rng rng(spec.seed);

    SynthTruth truth;
    truth.level.resize(n);
    truth.slope.assign(n, 0.0);
    truth.seasonal.assign(n, 0.0);
    truth.regression.assign(n, 0.0);
    truth.noise.resize(n);
    truth.beta.assign(spec.n_controls, 0.0);
    for (std::size_t j = 0; j < spec.n_controls && j < spec.true_beta.size(); ++j) {
        truth.beta[j] = spec.true_beta[j];
    }

    double level = spec.intercept;
    double slope = spec.initial_slope;
    for (std::size_t t = 0; t < n; ++t) {
        truth.level[t] = level;
        truth.slope[t] = slope;
        switch (spec.trend) {
            case TrendType::static_intercept:
                break;
            case TrendType::local_level:
                level += spec.sigma_level * rng.normal();
                break;
            case TrendType::local_linear:
                level += slope + spec.sigma_level * rng.normal();
                slope += spec.sigma_slope * rng.normal();
                break;
            case TrendType::semi_local_linear:
                level += slope + spec.sigma_level * rng.normal();
                slope = spec.slope_mean + spec.ar1 * (slope - spec.slope_mean) +
                        spec.sigma_slope * rng.normal();
                break;
        }
    }

    if (spec.weekly_seasonal) {
        // Six pre-sample lags seed the pattern; the sum-to-zero recursion
        // then repeats it weekly (exactly so when sigma_seasonal is 0).
        std::deque<double> lags;
        for (int i = 0; i < 6; ++i) lags.push_back(spec.seasonal_amplitude * rng.normal());
        for (std::size_t t = 0; t < n; ++t) {
            double sum = 0.0;
            for (double v : lags) sum += v;
            const double tau = -sum + spec.sigma_seasonal * rng.normal();
            truth.seasonal[t] = tau;
            lags.push_back(tau);
            lags.pop_front();
        }
    }

    // Controls share the realized trend path: x = z + lambda * e with z the
    // standardized level, so corr(x, trend) concentrates near the target.
    SeriesPanel panel;
    std::vector<double> z(n, 0.0);
    {
        double mean = 0.0;
        for (double v : truth.level) mean += v;
        mean /= static_cast<double>(n);
        double ss = 0.0;
        for (double v : truth.level) ss += (v - mean) * (v - mean);
        const double sd = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
        if (sd > 0.0) {
            for (std::size_t t = 0; t < n; ++t) z[t] = (truth.level[t] - mean) / sd;
        }
    }
    for (std::size_t j = 0; j < spec.n_controls; ++j) {
        const double rho = j < spec.control_correlations.size()
                               ? spec.control_correlations[j]
                               : spec.target_correlation;
        std::vector<double> x(n);
        if (rho > 0.0) {
            const double clipped = rho >= 1.0 ? 1.0 : rho;
            const double lambda =
                clipped >= 1.0 ? 0.0 : std::sqrt(1.0 / (clipped * clipped) - 1.0);
            for (std::size_t t = 0; t < n; ++t) x[t] = z[t] + lambda * rng.normal();
        } else {
            for (std::size_t t = 0; t < n; ++t) x[t] = rng.normal();
        }
        for (std::size_t t = 0; t < n; ++t) {
            x[t] = spec.control_base + spec.control_scale * x[t];
            truth.regression[t] += truth.beta[j] * x[t];
        }
        panel.controls.push_back(
            DateIndexedSeries("x" + std::to_string(j + 1), spec.start, std::move(x)));
    }

    std::vector<double> y(n);
    for (std::size_t t = 0; t < n; ++t) {
        truth.noise[t] = spec.sigma_obs * rng.normal();
        y[t] = truth.level[t] + truth.seasonal[t] + truth.regression[t] + truth.noise[t];
    }
    panel.treated = DateIndexedSeries(spec.treated_name, spec.start, std::move(y));
    return SynthOutput{std::move(panel), std::move(truth)};
}

enum class InterventionKind { step, pulse, linear_decay };

/// Multiplicative intervention applied from `start`. `magnitude` is the
/// relative change at onset (-0.03 shrinks values by 3%); must exceed -1.
struct Intervention {
    InterventionKind kind = InterventionKind::step;
    Date start;
    double magnitude = 0.0;
    long duration = 1;  // pulse / linear_decay only
};

inline DateIndexedSeries inject(const DateIndexedSeries& series, const Intervention& iv) {
    if (!(iv.magnitude > -1.0)) throw Error("intervention magnitude must exceed -1");
    const long offset = iv.start - series.start_date;
    if (offset < 0 || offset >= static_cast<long>(series.size())) {
        throw Error("intervention start outside series range");
    }
    if ((iv.kind == InterventionKind::pulse || iv.kind == InterventionKind::linear_decay) &&
        iv.duration < 1) {
        throw Error("intervention duration must be at least one day");
    }
    DateIndexedSeries out = series;
    for (long t = offset; t < static_cast<long>(series.size()); ++t) {
        const long since = t - offset;
        double factor = 1.0;
        switch (iv.kind) {
            case InterventionKind::step:
                factor = 1.0 + iv.magnitude;
                break;
            case InterventionKind::pulse:
                factor = since < iv.duration ? 1.0 + iv.magnitude : 1.0;
                break;
            case InterventionKind::linear_decay:
                if (since < iv.duration) {
                    const double remaining =
                        1.0 - static_cast<double>(since) / static_cast<double>(iv.duration);
                    factor = 1.0 + iv.magnitude * remaining;
                }
                break;
        }
        out.values[static_cast<std::size_t>(t)] *= factor;
    }
    return out;
}

}  // namespace bsts
