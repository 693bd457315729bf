#pragma once

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bsts/errors.hpp"
#include "bsts/gibbs.hpp"
#include "bsts/impact.hpp"
#include "bsts/log.hpp"
#include "bsts/series.hpp"

namespace bsts {

// ---------------------------------------------------------------------------
// Forecast validation: holdout MAPE, rolling-origin cross-validation, and a
// grid search over pre-period length and trend type. Folds are rolling
// origins rather than random splits; random folds would leak future data
// into training on a time series.
// ---------------------------------------------------------------------------

/// Shortest training window a fold may use; long enough to estimate weekly
/// seasonality and the regression.
inline constexpr std::size_t kMinTrainDays = 90;

/// 100 x mean(|actual - predicted| / actual). Days with actual <= 0 are
/// excluded with a warning; percentage error is undefined there.
inline double mape(const std::vector<double>& actual, const std::vector<double>& predicted) {
    if (actual.size() != predicted.size()) throw Error("mape: length mismatch");
    if (actual.empty()) throw Error("mape: empty input");
    double total = 0.0;
    std::size_t used = 0;
    for (std::size_t t = 0; t < actual.size(); ++t) {
        if (!(actual[t] > 0.0)) continue;
        total += std::abs(actual[t] - predicted[t]) / actual[t];
        ++used;
    }
    if (used == 0) throw AllZeroActuals("mape: no day has a positive actual value");
    if (used < actual.size()) {
        warn("mape: excluded " + std::to_string(actual.size() - used) +
             " day(s) with non-positive actuals");
    }
    return 100.0 * total / static_cast<double>(used);
}

struct FoldResult {
    std::size_t origin = 0;  // first holdout day, as an index into the panel
    Date origin_date;
    double mape_percent = 0.0;
};

struct ValidationReport {
    std::vector<FoldResult> folds;
    double average_mape = 0.0;
    std::size_t horizon = 42;
    ModelSpec spec;
    McmcConfig config;
};

/// Evenly spaced fold origins over [first, last], deduplicated after
/// rounding; the last fold always ends on the final pre-intervention day.
inline std::vector<std::size_t> fold_origins(std::size_t pre_length, std::size_t folds,
                                             std::size_t horizon,
                                             std::size_t min_train = kMinTrainDays) {
    if (folds < 1) throw Error("fold_origins: folds must be positive");
    if (pre_length < min_train + horizon) {
        throw InsufficientData("fold_origins: pre-period of " + std::to_string(pre_length) +
                               " days cannot hold " + std::to_string(min_train) +
                               " training days plus a " + std::to_string(horizon) +
                               "-day holdout");
    }
    const std::size_t first = min_train;
    const std::size_t last = pre_length - horizon;
    std::vector<std::size_t> origins;
    if (folds == 1) {
        origins.push_back(last);
        return origins;
    }
    const double step = static_cast<double>(last - first) / static_cast<double>(folds - 1);
    for (std::size_t i = 0; i < folds; ++i) {
        origins.push_back(first +
                          static_cast<std::size_t>(std::llround(step * static_cast<double>(i))));
    }
    origins.back() = last;
    origins.erase(std::unique(origins.begin(), origins.end()), origins.end());
    return origins;
}

namespace detail {

inline SeriesPanel panel_slice(const SeriesPanel& panel, std::size_t from, std::size_t count) {
    const Date lo = panel.start_date() + static_cast<long>(from);
    const Date hi = lo + static_cast<long>(count) - 1;
    SeriesPanel out;
    out.treated = panel.treated.slice(lo, hi);
    for (const auto& s : panel.controls) out.controls.push_back(s.slice(lo, hi));
    for (const auto& s : panel.covariates) out.covariates.push_back(s.slice(lo, hi));
    return out;
}

}  // namespace detail

/// Rolling-origin cross-validation: each fold trains on everything before
/// its origin and scores the posterior-mean counterfactual on the next
/// `horizon` days. The panel must be the pre-intervention window.
inline ValidationReport cross_validate(const ModelSpec& spec, const SeriesPanel& panel,
                                       const McmcConfig& config, std::size_t folds = 10,
                                       std::size_t horizon = 42) {
    if (horizon < 1) throw Error("cross_validate: horizon must be >= 1");
    std::vector<std::size_t> origins = fold_origins(panel.size(), folds, horizon);

    ValidationReport report;
    report.horizon = horizon;
    report.spec = spec;
    report.config = config;

    for (std::size_t f = 0; f < origins.size(); ++f) {
        const std::size_t origin = origins[f];
        SeriesPanel train = detail::panel_slice(panel, 0, origin);
        SeriesPanel holdout = detail::panel_slice(panel, origin, horizon);

        McmcConfig fold_config = config;
        fold_config.seed = Rng::mix(config.seed, f);
        PosteriorSamples samples = fit(spec, train, fold_config);

        SeriesPanel future;  // control values over the holdout window
        future.controls = holdout.controls;
        future.covariates = holdout.covariates;
        Eigen::MatrixXd draws = predict_counterfactual(samples, future, horizon,
                                                       Rng::mix(fold_config.seed, 0x9e3779b9ULL));
        std::vector<double> predicted(horizon);
        for (std::size_t h = 0; h < horizon; ++h) {
            predicted[h] = draws.col(static_cast<long>(h)).mean();
        }

        FoldResult fold;
        fold.origin = origin;
        fold.origin_date = panel.start_date() + static_cast<long>(origin);
        fold.mape_percent = mape(holdout.treated.values, predicted);
        report.folds.push_back(fold);
    }

    double total = 0.0;
    for (const auto& f : report.folds) total += f.mape_percent;
    report.average_mape = total / static_cast<double>(report.folds.size());
    return report;
}

struct GridSpec {
    std::vector<std::size_t> pre_lengths = {84, 126, 183, 400};
    std::vector<TrendType> trends = {TrendType::local_level, TrendType::local_linear,
                                     TrendType::semi_local_linear,
                                     TrendType::static_intercept};
};

inline std::string trend_name(TrendType t) {
    switch (t) {
        case TrendType::static_intercept: return "static_intercept";
        case TrendType::local_level: return "local_level";
        case TrendType::local_linear: return "local_linear";
        case TrendType::semi_local_linear: return "semi_local_linear";
    }
    return "unknown";
}

struct GridCell {
    std::size_t pre_length = 0;
    TrendType trend = TrendType::local_level;
    bool ok = false;
    double average_mape = 0.0;
    std::vector<double> fold_mapes;
    std::string message;  // failure reason when not ok
};

struct GridResult {
    std::vector<GridCell> cells;  // ranked: usable cells by MAPE, then flagged
};

/// Evaluates every (pre-length, trend) cell with cross-validation on the
/// trailing `pre_length` days of the panel. Failing cells are flagged and
/// ranked last instead of aborting the search.
inline GridResult grid_search(const GridSpec& grid, const ModelSpec& base_spec,
                              const SeriesPanel& panel, const McmcConfig& config,
                              std::size_t folds = 10, std::size_t horizon = 42) {
    if (grid.pre_lengths.empty() || grid.trends.empty()) {
        throw Error("grid_search: empty grid axis");
    }
    GridResult result;
    std::size_t cell_index = 0;
    for (std::size_t length : grid.pre_lengths) {
        for (TrendType trend : grid.trends) {
            GridCell cell;
            cell.pre_length = length;
            cell.trend = trend;
            McmcConfig cell_config = config;
            cell_config.seed = Rng::mix(config.seed, 0x517cc1b727220a95ULL + cell_index);
            ++cell_index;
            try {
                if (panel.size() < length) {
                    throw InsufficientData("panel has " + std::to_string(panel.size()) +
                                           " days, cell wants " + std::to_string(length));
                }
                ModelSpec spec = base_spec;
                spec.trend = trend;
                SeriesPanel window =
                    detail::panel_slice(panel, panel.size() - length, length);
                ValidationReport report =
                    cross_validate(spec, window, cell_config, folds, horizon);
                cell.ok = true;
                cell.average_mape = report.average_mape;
                for (const auto& f : report.folds) cell.fold_mapes.push_back(f.mape_percent);
            } catch (const Error& e) {
                cell.ok = false;
                cell.message = e.what();
                warn("grid_search: cell (" + std::to_string(length) + ", " +
                     trend_name(trend) + ") flagged: " + e.what());
            }
            result.cells.push_back(std::move(cell));
        }
    }
    std::stable_sort(result.cells.begin(), result.cells.end(),
                     [](const GridCell& a, const GridCell& b) {
                         if (a.ok != b.ok) return a.ok;
                         if (!a.ok) return false;
                         return a.average_mape < b.average_mape;
                     });
    return result;
}

inline nlohmann::json validation_to_json(const ValidationReport& report) {
    nlohmann::json folds = nlohmann::json::array();
    for (const auto& f : report.folds) {
        folds.push_back({{"origin", f.origin},
                         {"origin_date", f.origin_date.to_string()},
                         {"mape_percent", f.mape_percent}});
    }
    return nlohmann::json{{"average_mape_percent", report.average_mape},
                          {"horizon", report.horizon},
                          {"trend", trend_name(report.spec.trend)},
                          {"folds", folds}};
}

inline std::string validation_to_csv(const ValidationReport& report) {
    std::ostringstream out;
    out << "fold,origin,origin_date,mape_percent\n" << std::setprecision(17);
    for (std::size_t i = 0; i < report.folds.size(); ++i) {
        const auto& f = report.folds[i];
        out << i << "," << f.origin << "," << f.origin_date.to_string() << ","
            << f.mape_percent << "\n";
    }
    return out.str();
}

inline nlohmann::json grid_to_json(const GridResult& result) {
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& c : result.cells) {
        nlohmann::json cell{{"pre_length", c.pre_length},
                            {"trend", trend_name(c.trend)},
                            {"ok", c.ok}};
        if (c.ok) {
            cell["average_mape_percent"] = c.average_mape;
            cell["fold_mapes_percent"] = c.fold_mapes;
        } else {
            cell["error"] = c.message;
        }
        cells.push_back(std::move(cell));
    }
    return nlohmann::json{{"cells", cells}};
}

inline std::string grid_to_csv(const GridResult& result) {
    std::ostringstream out;
    out << "pre_length,trend,ok,average_mape_percent,error\n";
    out << std::setprecision(17);
    for (const auto& c : result.cells) {
        out << c.pre_length << "," << trend_name(c.trend) << "," << (c.ok ? 1 : 0) << ",";
        if (c.ok) out << c.average_mape;
        out << ",";
        if (!c.ok) {
            std::string msg = c.message;
            std::replace(msg.begin(), msg.end(), ',', ';');
            out << msg;
        }
        out << "\n";
    }
    return out.str();
}

}  // namespace bsts
