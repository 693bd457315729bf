#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "bsts/errors.hpp"
#include "bsts/log.hpp"
#include "bsts/rng.hpp"
#include "bsts/series.hpp"
#include "bsts/spike_slab.hpp"
#include "bsts/state_space.hpp"

namespace bsts {

// ---------------------------------------------------------------------------
// Posterior sampler. Each iteration cycles three conditional draws:
//   1. state paths given variances and the regression offset,
//   2. component innovation variances given the state path,
//   3. regression inclusion, coefficients, and observation variance given
//      the de-trended, de-seasonalized residuals.
// Everything runs on the standardized scale; callers destandardize outputs.
// ---------------------------------------------------------------------------

enum class TrendType { static_intercept, local_level, local_linear, semi_local_linear };

struct ModelSpec {
    TrendType trend = TrendType::local_level;
    bool weekly_seasonal = true;
    bool monthly_regressors = false;  // 11 forced month-of-year dummies
    std::vector<Holiday> holidays;    // forced 0/1 indicators

    // semi-local linear trend parameters, held fixed during sampling
    double slope_ar = 0.5;
    double slope_mean = 0.0;

    // prior sd guesses for innovation variances, standardized scale
    double trend_sd_guess = 0.01;
    double seasonal_sd_guess = 0.01;

    // spike-and-slab overrides; values <= 0 keep the defaults
    double expected_model_size = 0.0;
    double slab_kappa = 0.0;
    double slab_df = 0.0;
    double slab_residual_sd = 0.0;
};

struct McmcConfig {
    int iterations = 1000;
    int burn_in = 200;
    std::uint64_t seed = 0;
    int chains = 1;
};

/// Inverse-gamma prior on an innovation variance, parameterized by a guess at
/// the innovation sd. df is a design constant.
struct InverseGammaPrior {
    double df = 3.0;
    double sd_guess = 0.01;

    double shape() const { return 0.5 * df; }
    double rate() const { return 0.5 * df * sd_guess * sd_guess; }

    /// Conditional draw given `count` innovations with the given sum of
    /// squares, floored to keep the filter away from exact degeneracy.
    double posterior_draw(double sum_sq, double count, Rng& rng) const {
        double draw = rng.inverse_gamma(0.5 * (df + count),
                                        0.5 * (df * sd_guess * sd_guess + sum_sq));
        return std::max(draw, 1e-12);
    }
};

inline InverseGammaPrior variance_prior(double sd_guess = 0.01) {
    return InverseGammaPrior{3.0, sd_guess};
}

struct PosteriorSamples {
    ModelSpec spec;
    McmcConfig config;
    Date start_date;  // first pre-period day
    std::size_t n = 0;
    StandardizeParams treated_params;

    // design metadata: selectable columns (controls then covariates) first,
    // then forced calendar dummies
    std::vector<std::string> design_names;
    std::vector<StandardizeParams> design_params;
    std::size_t selectable = 0;

    // retained draws, pooled across chains in chain order
    std::vector<Eigen::MatrixXd> state_paths;  // m x n each
    std::vector<Eigen::VectorXd> beta;
    std::vector<std::vector<int>> gamma;
    std::vector<double> obs_var;
    std::vector<double> level_var;     // 0 when the trend has no level noise
    std::vector<double> slope_var;     // 0 when the trend has no slope
    std::vector<double> seasonal_var;  // 0 without a seasonal component

    std::size_t draw_count() const { return beta.size(); }
};

/// Structural components implied by a spec and a set of innovation sds.
inline std::vector<ComponentSpec> components_for(const ModelSpec& spec,
                                                 double sigma_level, double sigma_slope,
                                                 double sigma_seasonal) {
    std::vector<ComponentSpec> comps;
    switch (spec.trend) {
        case TrendType::static_intercept: comps.push_back(StaticIntercept{}); break;
        case TrendType::local_level: comps.push_back(LocalLevel{sigma_level}); break;
        case TrendType::local_linear:
            comps.push_back(LocalLinear{sigma_level, sigma_slope});
            break;
        case TrendType::semi_local_linear:
            comps.push_back(
                SemiLocalLinear{sigma_level, sigma_slope, spec.slope_ar, spec.slope_mean});
            break;
    }
    if (spec.weekly_seasonal) comps.push_back(WeeklySeasonal{sigma_seasonal});
    return comps;
}

/// Standardized regression design over the panel's calendar: controls and
/// covariates (selectable), then month/holiday dummies (forced).
struct Design {
    Eigen::MatrixXd X;  // n x J, all days
    std::vector<std::string> names;
    std::vector<StandardizeParams> params;
    std::size_t selectable = 0;
    std::vector<int> vetoed;  // selectable columns that standardized to zero
};

inline Design build_design(const ModelSpec& spec, const SeriesPanel& panel) {
    const long n = static_cast<long>(panel.size());
    std::vector<Eigen::VectorXd> cols;
    Design out;

    auto add_selectable = [&](const DateIndexedSeries& s) {
        auto [std_series, params] = standardize(interpolate_missing(s));
        if (params.degenerate) {
            warn("control '" + s.name + "' is constant over the window; it is vetoed");
            out.vetoed.push_back(static_cast<int>(cols.size()));
        }
        cols.emplace_back(
            Eigen::Map<const Eigen::VectorXd>(std_series.values.data(), n));
        out.names.push_back(s.name);
        out.params.push_back(params);
    };
    for (const auto& s : panel.controls) add_selectable(s);
    for (const auto& s : panel.covariates) add_selectable(s);
    out.selectable = cols.size();

    if (spec.monthly_regressors || !spec.holidays.empty()) {
        auto dummies = seasonal_regressors(panel.start_date(), panel.end_date(), spec.holidays);
        for (auto& d : dummies) {
            const bool is_month = d.name.rfind("month_", 0) == 0;
            if (is_month && !spec.monthly_regressors) continue;
            Eigen::Map<const Eigen::VectorXd> v(d.values.data(), n);
            if (v.isZero()) {
                warn("calendar regressor '" + d.name +
                     "' never occurs in the window; dropped");
                continue;
            }
            cols.emplace_back(v);
            out.names.push_back(d.name);
            out.params.push_back(StandardizeParams{0.0, 1.0, false});
        }
    }

    out.X.resize(n, static_cast<long>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) out.X.col(static_cast<long>(j)) = cols[j];
    return out;
}

namespace detail {

/// Innovation sums of squares per noise channel of the drawn path:
/// eta_t = selected rows of alpha_{t+1} - T alpha_t, for t = 1..n-1.
inline Eigen::VectorXd innovation_sum_sq(const StateSpaceModel& model,
                                         const Eigen::MatrixXd& alpha) {
    const long n = alpha.cols();
    const int q = model.noise_dim();
    // row of alpha each noise channel feeds (R is a 0/1 selection matrix)
    std::vector<int> rows(static_cast<std::size_t>(q), 0);
    for (int k = 0; k < q; ++k) {
        for (int i = 0; i < model.state_dim(); ++i) {
            if (model.R(i, k) == 1.0) rows[static_cast<std::size_t>(k)] = i;
        }
    }
    Eigen::VectorXd sums = Eigen::VectorXd::Zero(q);
    Eigen::VectorXd resid(model.state_dim());
    for (long t = 0; t + 1 < n; ++t) {
        resid = alpha.col(t + 1) - model.T * alpha.col(t);
        for (int k = 0; k < q; ++k) {
            double e = resid(rows[static_cast<std::size_t>(k)]);
            sums(k) += e * e;
        }
    }
    return sums;
}

}  // namespace detail

/// Draws from the joint posterior over states, variances, and regression.
/// The panel must already be restricted to the pre-intervention window.
inline PosteriorSamples fit(const ModelSpec& spec, const SeriesPanel& panel,
                            const McmcConfig& config) {
    if (config.iterations < 1) throw Error("fit: iterations must be positive");
    if (config.burn_in < 0 || config.burn_in >= config.iterations) {
        throw Error("fit: burn_in must be in [0, iterations)");
    }
    if (config.chains < 1) throw Error("fit: chains must be positive");

    const std::size_t n = panel.size();
    auto [treated_std, treated_params] = standardize(panel.treated);
    if (treated_params.degenerate) {
        warn("treated series is constant over the pre-period");
    }

    Design design = build_design(spec, panel);
    const long J = design.X.cols();

    SpikeSlabPrior prior = default_prior(design.selectable);
    if (spec.expected_model_size > 0.0 && design.selectable > 0) {
        prior.expected_model_size = spec.expected_model_size;
        prior.inclusion_prob.setConstant(std::min(
            spec.expected_model_size / static_cast<double>(design.selectable), 1.0));
    }
    if (spec.slab_kappa > 0.0) prior.kappa = spec.slab_kappa;
    if (spec.slab_df > 0.0) prior.nu = spec.slab_df;
    if (spec.slab_residual_sd > 0.0) prior.residual_sd_guess = spec.slab_residual_sd;
    for (int j : design.vetoed) prior.inclusion_prob(j) = 0.0;
    prior.append_forced(static_cast<std::size_t>(J) - design.selectable);

    // regression rows where the treated value is present
    std::vector<long> present;
    for (std::size_t t = 0; t < n; ++t) {
        if (!is_missing(treated_std.values[t])) present.push_back(static_cast<long>(t));
    }
    if (present.size() < 2) throw TooShort("fit: fewer than 2 present observations");
    Eigen::MatrixXd x_present(static_cast<long>(present.size()), J);
    Eigen::VectorXd y_present(static_cast<long>(present.size()));
    for (std::size_t i = 0; i < present.size(); ++i) {
        x_present.row(static_cast<long>(i)) = design.X.row(present[i]);
        y_present(static_cast<long>(i)) = treated_std.values[static_cast<std::size_t>(present[i])];
    }
    RegressionData regression_data(std::move(x_present));

    const InverseGammaPrior trend_prior = variance_prior(spec.trend_sd_guess);
    const InverseGammaPrior seasonal_prior = variance_prior(spec.seasonal_sd_guess);

    const bool has_level = spec.trend != TrendType::static_intercept;
    const bool has_slope = spec.trend == TrendType::local_linear ||
                           spec.trend == TrendType::semi_local_linear;

    PosteriorSamples samples;
    samples.spec = spec;
    samples.config = config;
    samples.start_date = panel.start_date();
    samples.n = n;
    samples.treated_params = treated_params;
    samples.design_names = design.names;
    samples.design_params = design.params;
    samples.selectable = design.selectable;
    const std::size_t retained =
        static_cast<std::size_t>(config.chains) *
        static_cast<std::size_t>(config.iterations - config.burn_in);
    samples.state_paths.reserve(retained);
    samples.beta.reserve(retained);
    samples.gamma.reserve(retained);
    samples.obs_var.reserve(retained);
    samples.level_var.reserve(retained);
    samples.slope_var.reserve(retained);
    samples.seasonal_var.reserve(retained);

    for (int chain = 0; chain < config.chains; ++chain) {
        Rng rng = Rng::derive(config.seed, static_cast<std::uint64_t>(chain));

        double sigma_level = has_level ? spec.trend_sd_guess : 0.0;
        double sigma_slope = has_slope ? spec.trend_sd_guess : 0.0;
        double sigma_seasonal = spec.weekly_seasonal ? spec.seasonal_sd_guess : 0.0;
        RegressionState regression{std::vector<int>(static_cast<std::size_t>(J), 0),
                                   Eigen::VectorXd::Zero(J), 1.0};
        for (int f : prior.forced_in) regression.gamma[static_cast<std::size_t>(f)] = 1;
        double sigma_obs_sq = 1.0;

        StateSpaceModel model =
            assemble(components_for(spec, sigma_level, sigma_slope, sigma_seasonal),
                     sigma_obs_sq);
        // noise channels appear in block order: level, then slope, then seasonal
        int level_ch = -1, slope_ch = -1, seasonal_ch = -1, ch = 0;
        for (const auto& block : model.blocks) {
            switch (block.kind) {
                case BlockKind::LocalLevel: level_ch = ch++; break;
                case BlockKind::LocalLinear:
                case BlockKind::SemiLocalLinear:
                    level_ch = ch++;
                    slope_ch = ch++;
                    break;
                case BlockKind::StaticIntercept: break;
                case BlockKind::Seasonal: seasonal_ch = ch++; break;
            }
        }
        model.obs_offset.assign(n, 0.0);

        for (int iter = 0; iter < config.iterations; ++iter) {
            try {
                // 1. states given current variances and regression offset
                if (level_ch >= 0) model.state_noise_var(level_ch) = sigma_level * sigma_level;
                if (slope_ch >= 0) model.state_noise_var(slope_ch) = sigma_slope * sigma_slope;
                if (seasonal_ch >= 0) {
                    model.state_noise_var(seasonal_ch) = sigma_seasonal * sigma_seasonal;
                }
                model.obs_var = sigma_obs_sq;
                Eigen::VectorXd offset = design.X * regression.beta;
                for (std::size_t t = 0; t < n; ++t) model.obs_offset[t] = offset(static_cast<long>(t));
                Eigen::MatrixXd alpha = simulation_smoother(model, treated_std.values, rng);

                // 2. innovation variances given the path
                Eigen::VectorXd sum_sq = detail::innovation_sum_sq(model, alpha);
                const double count = static_cast<double>(n - 1);
                if (level_ch >= 0) {
                    sigma_level = std::sqrt(trend_prior.posterior_draw(sum_sq(level_ch), count, rng));
                }
                if (slope_ch >= 0) {
                    sigma_slope = std::sqrt(trend_prior.posterior_draw(sum_sq(slope_ch), count, rng));
                }
                if (seasonal_ch >= 0) {
                    sigma_seasonal =
                        std::sqrt(seasonal_prior.posterior_draw(sum_sq(seasonal_ch), count, rng));
                }

                // 3. regression on the de-trended residuals
                Eigen::VectorXd residual(static_cast<long>(present.size()));
                for (std::size_t i = 0; i < present.size(); ++i) {
                    const long t = present[i];
                    residual(static_cast<long>(i)) =
                        treated_std.values[static_cast<std::size_t>(t)] -
                        model.Z.dot(alpha.col(t));
                }
                sample_inclusion(regression, prior, regression_data, residual, rng);
                auto [beta_draw, obs_var_draw] =
                    sample_coefficients(regression.gamma, prior, regression_data, residual, rng);
                regression.beta = std::move(beta_draw);
                sigma_obs_sq = std::max(obs_var_draw, 1e-12);

                if (iter >= config.burn_in) {
                    samples.state_paths.push_back(alpha);
                    samples.beta.push_back(regression.beta);
                    samples.gamma.push_back(regression.gamma);
                    samples.obs_var.push_back(sigma_obs_sq);
                    samples.level_var.push_back(has_level ? sigma_level * sigma_level : 0.0);
                    samples.slope_var.push_back(has_slope ? sigma_slope * sigma_slope : 0.0);
                    samples.seasonal_var.push_back(
                        spec.weekly_seasonal ? sigma_seasonal * sigma_seasonal : 0.0);
                }
            } catch (const NumericalFailure& e) {
                throw NumericalFailure("iteration " + std::to_string(iter) + ": " + e.what());
            } catch (const SingularInformation& e) {
                throw SingularInformation("iteration " + std::to_string(iter) + ": " +
                                          e.what());
            }
        }
    }
    return samples;
}

/// Mean of gamma_j across retained draws, per design column.
inline Eigen::VectorXd inclusion_probabilities(const PosteriorSamples& samples) {
    if (samples.draw_count() == 0) throw Error("inclusion_probabilities: no draws");
    Eigen::VectorXd p = Eigen::VectorXd::Zero(static_cast<long>(samples.design_names.size()));
    for (const auto& gamma : samples.gamma) {
        for (std::size_t j = 0; j < gamma.size(); ++j) p(static_cast<long>(j)) += gamma[j];
    }
    return p / static_cast<double>(samples.draw_count());
}

/// Mean of beta_j across ALL retained draws, zeros included: the expected
/// treated-sd change per one-sd change in the column.
inline Eigen::VectorXd standardized_coefficients(const PosteriorSamples& samples) {
    if (samples.draw_count() == 0) throw Error("standardized_coefficients: no draws");
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(static_cast<long>(samples.design_names.size()));
    for (const auto& b : samples.beta) mean += b;
    return mean / static_cast<double>(samples.draw_count());
}

}  // namespace bsts
