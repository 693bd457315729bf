#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "bsts/calendar.hpp"
#include "bsts/errors.hpp"
#include "bsts/log.hpp"

namespace bsts {

/// Missing observations are carried as NaN; a day is never silently omitted.
inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

inline bool is_missing(double v) { return std::isnan(v); }

/// A contiguous daily series anchored to a calendar date. values[i] belongs
/// to start_date + i.
struct DateIndexedSeries {
    std::string name;
    Date start_date;
    std::vector<double> values;

    DateIndexedSeries() = default;
    DateIndexedSeries(std::string name_, Date start, std::vector<double> vals)
        : name(std::move(name_)), start_date(start), values(std::move(vals)) {
        if (values.empty()) throw Error("series '" + name + "' is empty");
        for (double v : values) {
            if (!is_missing(v) && !std::isfinite(v)) {
                throw Error("series '" + name + "' contains a non-finite value");
            }
        }
    }

    std::size_t size() const { return values.size(); }
    Date date(std::size_t i) const { return start_date + static_cast<long>(i); }
    Date end_date() const { return date(values.size() - 1); }

    std::size_t present_count() const {
        std::size_t n = 0;
        for (double v : values) n += !is_missing(v);
        return n;
    }

    /// Sub-series covering [from, to] inclusive; both must lie in range.
    DateIndexedSeries slice(Date from, Date to) const {
        long lo = from - start_date;
        long hi = to - start_date;
        if (lo < 0 || hi >= static_cast<long>(values.size()) || lo > hi) {
            throw Error("slice [" + from.to_string() + ", " + to.to_string() +
                        "] outside series '" + name + "'");
        }
        return DateIndexedSeries(name, from,
                                 {values.begin() + lo, values.begin() + hi + 1});
    }
};

/// Aligned bundle of a treated series, its control candidates, and plain
/// covariates. All members share start_date and length.
struct SeriesPanel {
    DateIndexedSeries treated;
    std::vector<DateIndexedSeries> controls;
    std::vector<DateIndexedSeries> covariates;

    std::size_t size() const { return treated.size(); }
    Date start_date() const { return treated.start_date; }
    Date end_date() const { return treated.end_date(); }
};

struct StandardizeParams {
    double mean = 0.0;
    double sd = 1.0;
    bool degenerate = false;  // source sd was 0

    double to_standard(double v) const {
        if (is_missing(v)) return kMissing;
        return degenerate ? 0.0 : (v - mean) / sd;
    }
    double to_original(double v) const {
        if (is_missing(v)) return kMissing;
        return degenerate ? mean : v * sd + mean;
    }
};

inline double sample_mean(const std::vector<double>& values) {
    double sum = 0.0;
    std::size_t n = 0;
    for (double v : values) {
        if (!is_missing(v)) {
            sum += v;
            ++n;
        }
    }
    return sum / static_cast<double>(n);
}

/// Sample standard deviation (n-1 denominator) over present values.
inline double sample_sd(const std::vector<double>& values) {
    double mean = sample_mean(values);
    double ss = 0.0;
    std::size_t n = 0;
    for (double v : values) {
        if (!is_missing(v)) {
            ss += (v - mean) * (v - mean);
            ++n;
        }
    }
    return std::sqrt(ss / static_cast<double>(n - 1));
}

/// Trims every series to the intersection of their date ranges. The first
/// series is the treated one; the rest become controls. Order is preserved.
inline SeriesPanel align(const std::vector<DateIndexedSeries>& series) {
    if (series.empty()) throw Error("align: no series given");
    Date lo = series.front().start_date;
    Date hi = series.front().end_date();
    for (const auto& s : series) {
        lo = std::max(lo, s.start_date);
        hi = std::min(hi, s.end_date());
    }
    if (lo > hi) throw EmptyIntersection("align: series date ranges share no common day");
    SeriesPanel panel;
    panel.treated = series.front().slice(lo, hi);
    for (std::size_t i = 1; i < series.size(); ++i) {
        for (std::size_t j = 1; j < i; ++j) {
            if (series[j].name == series[i].name) {
                throw Error("align: duplicate control name '" + series[i].name + "'");
            }
        }
        panel.controls.push_back(series[i].slice(lo, hi));
    }
    return panel;
}

/// Rescales present values to sample mean 0 and sd 1. A constant series maps
/// to all zeros with the degenerate flag set, so it can never carry signal.
inline std::pair<DateIndexedSeries, StandardizeParams> standardize(
    const DateIndexedSeries& s) {
    if (s.present_count() < 2) {
        throw TooShort("standardize: series '" + s.name + "' has fewer than 2 present values");
    }
    StandardizeParams params;
    params.mean = sample_mean(s.values);
    params.sd = sample_sd(s.values);
    params.degenerate = params.sd == 0.0;
    DateIndexedSeries out = s;
    for (double& v : out.values) v = params.to_standard(v);
    return {std::move(out), params};
}

inline DateIndexedSeries destandardize(const DateIndexedSeries& s,
                                       const StandardizeParams& params) {
    DateIndexedSeries out = s;
    for (double& v : out.values) v = params.to_original(v);
    return out;
}

/// Aligns treated, controls, and covariates to their common date range.
inline SeriesPanel align(const SeriesPanel& raw) {
    std::vector<DateIndexedSeries> all;
    all.push_back(raw.treated);
    all.insert(all.end(), raw.controls.begin(), raw.controls.end());
    all.insert(all.end(), raw.covariates.begin(), raw.covariates.end());
    SeriesPanel flat = align(all);
    SeriesPanel panel;
    panel.treated = std::move(flat.treated);
    panel.controls.assign(flat.controls.begin(),
                          flat.controls.begin() + static_cast<long>(raw.controls.size()));
    panel.covariates.assign(flat.controls.begin() + static_cast<long>(raw.controls.size()),
                            flat.controls.end());
    return panel;
}

/// Linear interpolation of sparse (date, value) knots onto a daily calendar,
/// flat beyond the first and last knot. Used for low-frequency covariates
/// such as quarterly subscriber counts.
inline DateIndexedSeries interpolate_to_daily(
    const std::vector<std::pair<Date, double>>& points, Date calendar_start,
    Date calendar_end, const std::string& name = "interpolated") {
    if (points.empty()) throw NoPoints("interpolate_to_daily: no points");
    for (std::size_t i = 1; i < points.size(); ++i) {
        if (!(points[i - 1].first < points[i].first)) {
            throw Error("interpolate_to_daily: points must be sorted by distinct dates");
        }
    }
    long n = calendar_end - calendar_start + 1;
    if (n < 1) throw Error("interpolate_to_daily: empty calendar");
    std::vector<double> values(static_cast<std::size_t>(n));
    std::size_t k = 0;  // index of the knot at or after the current day
    for (long i = 0; i < n; ++i) {
        Date d = calendar_start + i;
        while (k < points.size() && points[k].first < d) ++k;
        double v;
        if (k == 0) {
            v = points.front().second;
        } else if (k == points.size()) {
            v = points.back().second;
        } else if (points[k].first == d) {
            v = points[k].second;
        } else {
            const auto& [d0, v0] = points[k - 1];
            const auto& [d1, v1] = points[k];
            double w = static_cast<double>(d - d0) / static_cast<double>(d1 - d0);
            v = v0 + w * (v1 - v0);
        }
        values[static_cast<std::size_t>(i)] = v;
    }
    return DateIndexedSeries(name, calendar_start, std::move(values));
}

/// Fills interior gaps linearly and extends flat past the first/last present
/// value. No-op for a complete series.
inline DateIndexedSeries interpolate_missing(const DateIndexedSeries& s) {
    std::vector<std::pair<Date, double>> knots;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (!is_missing(s.values[i])) knots.emplace_back(s.date(i), s.values[i]);
    }
    if (knots.empty()) throw NoPoints("interpolate_missing: series '" + s.name + "' has no present values");
    if (knots.size() == s.size()) return s;
    return interpolate_to_daily(knots, s.start_date, s.end_date(), s.name);
}

struct Holiday {
    std::string name;
    std::vector<Date> dates;
};

/// Deterministic 0/1 calendar regressors: 11 month-of-year indicators
/// (January is the omitted baseline) plus one indicator per holiday.
/// Holiday dates outside the calendar are silently ignored.
inline std::vector<DateIndexedSeries> seasonal_regressors(
    Date calendar_start, Date calendar_end, const std::vector<Holiday>& holidays = {}) {
    long n = calendar_end - calendar_start + 1;
    if (n < 1) throw Error("seasonal_regressors: empty calendar");
    static const char* kMonthNames[] = {"jan", "feb", "mar", "apr", "may", "jun",
                                        "jul", "aug", "sep", "oct", "nov", "dec"};
    std::vector<DateIndexedSeries> out;
    out.reserve(11 + holidays.size());
    for (unsigned month = 2; month <= 12; ++month) {
        std::vector<double> values(static_cast<std::size_t>(n), 0.0);
        for (long i = 0; i < n; ++i) {
            if ((calendar_start + i).month() == month) values[static_cast<std::size_t>(i)] = 1.0;
        }
        out.emplace_back(std::string("month_") + kMonthNames[month - 1], calendar_start,
                         std::move(values));
    }
    for (const auto& h : holidays) {
        std::vector<double> values(static_cast<std::size_t>(n), 0.0);
        for (Date d : h.dates) {
            long i = d - calendar_start;
            if (i >= 0 && i < n) values[static_cast<std::size_t>(i)] = 1.0;
        }
        out.emplace_back("holiday_" + h.name, calendar_start, std::move(values));
    }
    return out;
}

}  // namespace bsts
