#pragma once

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bsts/errors.hpp"
#include "bsts/log.hpp"
#include "bsts/series.hpp"

namespace bsts {

// ---------------------------------------------------------------------------
// Control prescreening: score every candidate against the treated series by
// Pearson correlation and dynamic time warping, then keep the best-combined
// handful for the regression stage.
// ---------------------------------------------------------------------------

/// Sample Pearson correlation over days where both series are present.
inline double pearson(const DateIndexedSeries& a, const DateIndexedSeries& b) {
    if (a.start_date != b.start_date || a.size() != b.size()) {
        throw Error("pearson: series are not aligned");
    }
    double sum_a = 0.0, sum_b = 0.0;
    std::size_t n = 0;
    for (std::size_t t = 0; t < a.size(); ++t) {
        if (is_missing(a.values[t]) || is_missing(b.values[t])) continue;
        sum_a += a.values[t];
        sum_b += b.values[t];
        ++n;
    }
    if (n < 2) throw TooShort("pearson: fewer than 2 common present days");
    const double mean_a = sum_a / static_cast<double>(n);
    const double mean_b = sum_b / static_cast<double>(n);
    double ss_a = 0.0, ss_b = 0.0, cross = 0.0;
    for (std::size_t t = 0; t < a.size(); ++t) {
        if (is_missing(a.values[t]) || is_missing(b.values[t])) continue;
        const double da = a.values[t] - mean_a;
        const double db = b.values[t] - mean_b;
        ss_a += da * da;
        ss_b += db * db;
        cross += da * db;
    }
    if (ss_a == 0.0) throw ConstantSeries("pearson: series '" + a.name + "' is constant");
    if (ss_b == 0.0) throw ConstantSeries("pearson: series '" + b.name + "' is constant");
    return cross / std::sqrt(ss_a * ss_b);
}

namespace detail {

/// Mean 0 / sd 1 rescaling for warping costs; series too short or constant
/// flatten to zeros so they contribute no cost.
inline std::vector<double> standardize_or_zero(const std::vector<double>& v) {
    if (v.size() < 2) return std::vector<double>(v.size(), 0.0);
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    const double sd = std::sqrt(ss / (static_cast<double>(v.size()) - 1.0));
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        out[i] = sd == 0.0 ? 0.0 : (v[i] - mean) / sd;
    }
    return out;
}

/// Alignment cost between raw sequences: absolute-difference local cost,
/// steps {(1,0),(0,1),(1,1)}, no window. Each cell accumulates prefix-first,
/// matching a path walk from (0,0).
inline double dtw_cost(const std::vector<double>& a, const std::vector<double>& b) {
    const std::size_t na = a.size(), nb = b.size();
    std::vector<double> prev(nb), cur(nb);
    for (std::size_t j = 0; j < nb; ++j) {
        const double c = std::abs(a[0] - b[j]);
        prev[j] = j == 0 ? c : prev[j - 1] + c;
    }
    for (std::size_t i = 1; i < na; ++i) {
        for (std::size_t j = 0; j < nb; ++j) {
            const double c = std::abs(a[i] - b[j]);
            double best = prev[j];  // (1,0)
            if (j > 0) best = std::min({prev[j], cur[j - 1], prev[j - 1]});
            cur[j] = best + c;
        }
        std::swap(prev, cur);
    }
    return prev[nb - 1];
}

}  // namespace detail

/// Dynamic-time-warping distance between two series, each standardized
/// internally. Missing values must be filled upstream.
inline double dtw_distance(const DateIndexedSeries& a, const DateIndexedSeries& b) {
    if (a.size() < 1 || b.size() < 1) throw Error("dtw_distance: empty series");
    for (double v : a.values) {
        if (is_missing(v)) throw Error("dtw_distance: series '" + a.name + "' has missing values");
    }
    for (double v : b.values) {
        if (is_missing(v)) throw Error("dtw_distance: series '" + b.name + "' has missing values");
    }
    return detail::dtw_cost(detail::standardize_or_zero(a.values),
                            detail::standardize_or_zero(b.values));
}

struct CandidateScore {
    std::string name;
    double r = 0.0;
    double dtw = 0.0;
    double combined_rank = 0.0;
    bool selected = false;
};

struct ScreeningReport {
    std::vector<CandidateScore> scores;   // ordered by combined rank
    std::vector<std::string> selected;    // names, best first
    std::size_t max_k = 50;
};

/// Scores every candidate against the treated series and keeps the top
/// combined-rank subset (at most min(max_k, 50), at least min(3, count)).
inline ScreeningReport rank_controls(const DateIndexedSeries& treated,
                                     const std::vector<DateIndexedSeries>& candidates,
                                     std::size_t max_k = 50) {
    ScreeningReport report;
    report.max_k = max_k;
    if (candidates.empty()) {
        warn("rank_controls: no candidates to screen");
        return report;
    }

    const DateIndexedSeries treated_full = interpolate_missing(treated);
    for (const auto& raw : candidates) {
        DateIndexedSeries cand = interpolate_missing(raw);
        CandidateScore score;
        score.name = raw.name;
        try {
            score.r = pearson(treated_full, cand);
        } catch (const ConstantSeries&) {
            warn("rank_controls: '" + raw.name + "' or the treated series is constant; r = 0");
            score.r = 0.0;
        }
        score.dtw = dtw_distance(treated_full, cand);
        report.scores.push_back(std::move(score));
    }

    // per-criterion ranks with lexicographic tie-break
    const std::size_t count = report.scores.size();
    std::vector<std::size_t> by_r(count), by_dtw(count);
    for (std::size_t i = 0; i < count; ++i) by_r[i] = by_dtw[i] = i;
    std::sort(by_r.begin(), by_r.end(), [&](std::size_t x, std::size_t y) {
        const double ax = std::abs(report.scores[x].r), ay = std::abs(report.scores[y].r);
        if (ax != ay) return ax > ay;
        return report.scores[x].name < report.scores[y].name;
    });
    std::sort(by_dtw.begin(), by_dtw.end(), [&](std::size_t x, std::size_t y) {
        if (report.scores[x].dtw != report.scores[y].dtw) {
            return report.scores[x].dtw < report.scores[y].dtw;
        }
        return report.scores[x].name < report.scores[y].name;
    });
    for (std::size_t pos = 0; pos < count; ++pos) {
        report.scores[by_r[pos]].combined_rank += 0.5 * static_cast<double>(pos + 1);
        report.scores[by_dtw[pos]].combined_rank += 0.5 * static_cast<double>(pos + 1);
    }

    std::sort(report.scores.begin(), report.scores.end(),
              [](const CandidateScore& x, const CandidateScore& y) {
                  if (x.combined_rank != y.combined_rank) {
                      return x.combined_rank < y.combined_rank;
                  }
                  return x.name < y.name;
              });

    std::size_t k = std::min({count, max_k, std::size_t{50}});
    k = std::max(k, std::min(count, std::size_t{3}));
    for (std::size_t i = 0; i < k; ++i) {
        report.scores[i].selected = true;
        report.selected.push_back(report.scores[i].name);
    }
    if (count < 3) {
        warn("rank_controls: only " + std::to_string(count) +
             " candidate(s) survive screening; the model wants at least 3");
    }
    return report;
}

inline nlohmann::json screening_to_json(const ScreeningReport& report) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& s : report.scores) {
        rows.push_back({{"name", s.name},
                        {"correlation", s.r},
                        {"dtw_distance", s.dtw},
                        {"combined_rank", s.combined_rank},
                        {"selected", s.selected}});
    }
    return nlohmann::json{{"max_k", report.max_k},
                          {"selected", report.selected},
                          {"candidates", rows}};
}

inline std::string screening_to_csv(const ScreeningReport& report) {
    std::ostringstream out;
    out << "name,correlation,dtw_distance,combined_rank,selected\n";
    out << std::setprecision(17);
    for (const auto& s : report.scores) {
        out << s.name << "," << s.r << "," << s.dtw << "," << s.combined_rank << ","
            << (s.selected ? 1 : 0) << "\n";
    }
    return out.str();
}

}  // namespace bsts
