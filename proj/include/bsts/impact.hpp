#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "bsts/errors.hpp"
#include "bsts/gibbs.hpp"
#include "bsts/series.hpp"
#include "bsts/state_space.hpp"

namespace bsts {

// ---------------------------------------------------------------------------
// Counterfactual forecasting over the post-intervention window and effect
// summarization: per-day point-wise and cumulative effects with equal-tailed
// credible bands, the relative effect over the window, and a one-sided tail
// probability for the cumulative effect.
// ---------------------------------------------------------------------------

/// Empirical quantile with linear interpolation between order statistics.
inline double quantile(std::vector<double> values, double q) {
    if (values.empty()) throw Error("quantile: no values");
    std::sort(values.begin(), values.end());
    const double pos = q * (static_cast<double>(values.size()) - 1.0);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double w = pos - static_cast<double>(lo);
    return values[lo] * (1.0 - w) + values[hi] * w;
}

struct ImpactReport {
    Date start_date;  // first post-intervention day
    std::vector<double> actual;
    std::vector<double> counterfactual_mean, counterfactual_lower, counterfactual_upper;
    std::vector<double> pointwise_mean, pointwise_lower, pointwise_upper;
    std::vector<double> cumulative_mean, cumulative_lower, cumulative_upper;
    double relative_mean = 0.0;   // percent
    double relative_lower = 0.0;  // percent
    double relative_upper = 0.0;  // percent
    double tail_probability = 0.5;
    bool significant = false;
    double credible_level = 0.95;

    std::size_t horizon() const { return actual.size(); }
};

/// Builds the post-period regression matrix for the columns the fit selected,
/// standardized with the pre-period parameters. Calendar dummies are rebuilt
/// from dates; control columns must be supplied in `post`.
inline Eigen::MatrixXd post_design(const PosteriorSamples& samples, const SeriesPanel& post,
                                   std::size_t horizon) {
    const Date post_start = samples.start_date + static_cast<long>(samples.n);
    const Date post_end = post_start + static_cast<long>(horizon) - 1;
    const long J = static_cast<long>(samples.design_names.size());

    // columns with any posterior mass need post-period values
    std::vector<bool> needed(static_cast<std::size_t>(J), false);
    for (const auto& gamma : samples.gamma) {
        for (std::size_t j = 0; j < gamma.size(); ++j) {
            if (gamma[j]) needed[j] = true;
        }
    }

    std::vector<DateIndexedSeries> dummies;
    if (samples.spec.monthly_regressors || !samples.spec.holidays.empty()) {
        dummies = seasonal_regressors(post_start, post_end, samples.spec.holidays);
    }

    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(static_cast<long>(horizon), J);
    for (long j = 0; j < J; ++j) {
        const std::string& name = samples.design_names[static_cast<std::size_t>(j)];
        if (static_cast<std::size_t>(j) < samples.selectable) {
            const DateIndexedSeries* found = nullptr;
            for (const auto& s : post.controls) {
                if (s.name == name) found = &s;
            }
            for (const auto& s : post.covariates) {
                if (s.name == name) found = &s;
            }
            if (!found) {
                if (!needed[static_cast<std::size_t>(j)]) continue;  // zero column is safe
                throw MissingPostCovariate("post_design: selected control '" + name +
                                           "' has no post-period series");
            }
            if (found->start_date > post_start || found->end_date() < post_end) {
                throw MissingPostCovariate("post_design: control '" + name +
                                           "' does not cover the post-period window");
            }
            DateIndexedSeries sliced =
                interpolate_missing(found->slice(post_start, post_end));
            const auto& params = samples.design_params[static_cast<std::size_t>(j)];
            for (std::size_t t = 0; t < horizon; ++t) {
                x(static_cast<long>(t), j) = params.to_standard(sliced.values[t]);
            }
        } else {
            for (const auto& d : dummies) {
                if (d.name == name) {
                    for (std::size_t t = 0; t < horizon; ++t) {
                        x(static_cast<long>(t), j) = d.values[t];
                    }
                }
            }
        }
    }
    return x;
}

/// One counterfactual path per retained draw, simulated forward from that
/// draw's terminal state with that draw's parameters, on the original scale.
inline Eigen::MatrixXd predict_counterfactual(const PosteriorSamples& samples,
                                              const SeriesPanel& post, std::size_t horizon,
                                              Rng& rng) {
    if (horizon < 1) throw Error("predict_counterfactual: horizon must be >= 1");
    if (samples.draw_count() == 0) throw Error("predict_counterfactual: no draws");

    const Eigen::MatrixXd x_post = post_design(samples, post, horizon);
    const long n = static_cast<long>(samples.n);

    Eigen::MatrixXd draws(static_cast<long>(samples.draw_count()),
                          static_cast<long>(horizon));
    std::vector<double> offsets(horizon);
    for (std::size_t d = 0; d < samples.draw_count(); ++d) {
        StateSpaceModel model = assemble(
            components_for(samples.spec, std::sqrt(samples.level_var[d]),
                           std::sqrt(samples.slope_var[d]),
                           std::sqrt(samples.seasonal_var[d])),
            samples.obs_var[d]);
        Eigen::VectorXd offset_vec = x_post * samples.beta[d];
        for (std::size_t h = 0; h < horizon; ++h) offsets[h] = offset_vec(static_cast<long>(h));
        std::vector<double> path = forecast_path(
            model, samples.state_paths[d].col(n - 1), horizon, offsets, rng);
        for (std::size_t h = 0; h < horizon; ++h) {
            draws(static_cast<long>(d), static_cast<long>(h)) =
                samples.treated_params.to_original(path[h]);
        }
    }
    return draws;
}

inline Eigen::MatrixXd predict_counterfactual(const PosteriorSamples& samples,
                                              const SeriesPanel& post, std::size_t horizon,
                                              std::uint64_t seed) {
    Rng rng(seed);
    return predict_counterfactual(samples, post, horizon, rng);
}

/// Summarizes actual-vs-counterfactual differences. Draw rows are
/// counterfactual paths on the original scale.
inline ImpactReport compute_impact(const DateIndexedSeries& actual,
                                   const Eigen::MatrixXd& draws, double level = 0.95) {
    const long horizon = static_cast<long>(actual.size());
    const long n_draws = draws.rows();
    if (draws.cols() != horizon) {
        throw Error("compute_impact: draw horizon does not match the actual series");
    }
    if (n_draws < 100) throw Error("compute_impact: need at least 100 draws");
    if (!(level > 0.0 && level < 1.0)) throw Error("compute_impact: level must be in (0,1)");
    for (long t = 0; t < horizon; ++t) {
        if (is_missing(actual.values[static_cast<std::size_t>(t)])) {
            throw Error("compute_impact: actual series has missing days");
        }
    }

    ImpactReport report;
    report.start_date = actual.start_date;
    report.actual = actual.values;
    report.credible_level = level;
    const double lo_q = 0.5 * (1.0 - level);
    const double hi_q = 1.0 - lo_q;

    // per-draw effect paths; cumulative is the running sum, by construction
    Eigen::MatrixXd pointwise(n_draws, horizon);
    Eigen::MatrixXd cumulative(n_draws, horizon);
    for (long d = 0; d < n_draws; ++d) {
        double running = 0.0;
        for (long t = 0; t < horizon; ++t) {
            const double effect = actual.values[static_cast<std::size_t>(t)] - draws(d, t);
            pointwise(d, t) = effect;
            running += effect;
            cumulative(d, t) = running;
        }
    }

    auto summarize = [&](const Eigen::MatrixXd& m, std::vector<double>& mean,
                         std::vector<double>& lower, std::vector<double>& upper) {
        mean.resize(static_cast<std::size_t>(horizon));
        lower.resize(static_cast<std::size_t>(horizon));
        upper.resize(static_cast<std::size_t>(horizon));
        std::vector<double> col(static_cast<std::size_t>(n_draws));
        for (long t = 0; t < horizon; ++t) {
            for (long d = 0; d < n_draws; ++d) col[static_cast<std::size_t>(d)] = m(d, t);
            mean[static_cast<std::size_t>(t)] = m.col(t).mean();
            lower[static_cast<std::size_t>(t)] = quantile(col, lo_q);
            upper[static_cast<std::size_t>(t)] = quantile(col, hi_q);
        }
    };
    summarize(draws, report.counterfactual_mean, report.counterfactual_lower,
              report.counterfactual_upper);
    summarize(pointwise, report.pointwise_mean, report.pointwise_lower,
              report.pointwise_upper);
    summarize(cumulative, report.cumulative_mean, report.cumulative_lower,
              report.cumulative_upper);

    // relative effect over the whole window, per draw
    const double actual_sum =
        std::accumulate(actual.values.begin(), actual.values.end(), 0.0);
    std::vector<double> relative(static_cast<std::size_t>(n_draws));
    for (long d = 0; d < n_draws; ++d) {
        const double draw_sum = draws.row(d).sum();
        if (draw_sum <= 0.0) {
            throw DegenerateDraws(
                "compute_impact: a counterfactual draw has non-positive post-period sum");
        }
        relative[static_cast<std::size_t>(d)] = 100.0 * (actual_sum - draw_sum) / draw_sum;
    }
    report.relative_mean =
        std::accumulate(relative.begin(), relative.end(), 0.0) / static_cast<double>(n_draws);
    report.relative_lower = quantile(relative, lo_q);
    report.relative_upper = quantile(relative, hi_q);

    // ties at zero are shared between the tails, so a null effect reports 0.5
    double below = 0.0, above = 0.0;
    for (long d = 0; d < n_draws; ++d) {
        const double final_cum = cumulative(d, horizon - 1);
        if (final_cum < 0.0) {
            below += 1.0;
        } else if (final_cum > 0.0) {
            above += 1.0;
        } else {
            below += 0.5;
            above += 0.5;
        }
    }
    report.tail_probability = std::min(below, above) / static_cast<double>(n_draws);

    // closed-interval convention: zero on the boundary is not significant
    report.significant = report.cumulative_lower.back() > 0.0 ||
                         report.cumulative_upper.back() < 0.0;
    return report;
}

namespace detail {

inline std::string format_percent(double v) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(1) << v << "%";
    return out.str();
}

}  // namespace detail

/// Significance flag plus a one-line verdict on the relative effect.
inline std::pair<bool, std::string> significance(const ImpactReport& report) {
    const bool significant = report.significant;
    const double magnitude = std::abs(report.relative_mean);
    const char* direction = report.relative_mean < 0.0 ? "decrease" : "increase";
    const int level_pct = static_cast<int>(std::lround(report.credible_level * 100.0));
    std::ostringstream out;
    out << "Estimated relative effect: a " << detail::format_percent(magnitude) << " "
        << direction << ", " << level_pct << "% credible interval ["
        << detail::format_percent(report.relative_lower) << ", "
        << detail::format_percent(report.relative_upper) << "]. ";
    if (significant) {
        out << "The effect is significant: zero change lies outside the cumulative "
            << "credible interval.";
    } else {
        out << "Not significant: zero change is still within the " << level_pct
            << "% credible interval.";
    }
    return {significant, out.str()};
}

inline nlohmann::json impact_to_json(const ImpactReport& report) {
    nlohmann::json days = nlohmann::json::array();
    for (std::size_t t = 0; t < report.horizon(); ++t) {
        days.push_back({{"date", (report.start_date + static_cast<long>(t)).to_string()},
                        {"actual", report.actual[t]},
                        {"counterfactual",
                         {{"mean", report.counterfactual_mean[t]},
                          {"lower", report.counterfactual_lower[t]},
                          {"upper", report.counterfactual_upper[t]}}},
                        {"pointwise",
                         {{"mean", report.pointwise_mean[t]},
                          {"lower", report.pointwise_lower[t]},
                          {"upper", report.pointwise_upper[t]}}},
                        {"cumulative",
                         {{"mean", report.cumulative_mean[t]},
                          {"lower", report.cumulative_lower[t]},
                          {"upper", report.cumulative_upper[t]}}}});
    }
    return nlohmann::json{
        {"credible_level", report.credible_level},
        {"relative_effect",
         {{"mean_percent", report.relative_mean},
          {"lower_percent", report.relative_lower},
          {"upper_percent", report.relative_upper}}},
        {"tail_probability", report.tail_probability},
        {"significant", report.significant},
        {"verdict", significance(report).second},
        {"days", days}};
}

/// Per-day table consumed by the CLI's SVG plotter.
inline std::string impact_to_csv(const ImpactReport& report) {
    std::ostringstream out;
    out << "date,actual,counterfactual_mean,counterfactual_lower,counterfactual_upper,"
        << "pointwise_mean,pointwise_lower,pointwise_upper,"
        << "cumulative_mean,cumulative_lower,cumulative_upper\n";
    out << std::setprecision(17);
    for (std::size_t t = 0; t < report.horizon(); ++t) {
        out << (report.start_date + static_cast<long>(t)).to_string() << ","
            << report.actual[t] << "," << report.counterfactual_mean[t] << ","
            << report.counterfactual_lower[t] << "," << report.counterfactual_upper[t]
            << "," << report.pointwise_mean[t] << "," << report.pointwise_lower[t] << ","
            << report.pointwise_upper[t] << "," << report.cumulative_mean[t] << ","
            << report.cumulative_lower[t] << "," << report.cumulative_upper[t] << "\n";
    }
    return out.str();
}

}  // namespace bsts
