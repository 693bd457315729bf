#pragma once

// Renders an impact report as a stacked-panel SVG: observed vs counterfactual
// with its credible band, then (optionally) the pointwise effect, then the
// cumulative effect. Vector output keeps figures diffable in tests.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include "bsts/errors.hpp"
#include "bsts/impact.hpp"
#include "bsts/series.hpp"

namespace bsts {

struct PlotOptions {
    bool pointwise_panel = false;
    int width = 960;
    int panel_height = 230;
};

namespace detail {

inline std::string svg_num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

/// Rounds a span to a 1/2/5 grid step giving roughly `target` divisions.
inline double nice_step(double span, int target) {
    if (span <= 0.0) return 1.0;
    const double raw = span / target;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    for (double m : {1.0, 2.0, 5.0, 10.0}) {
        if (raw <= m * mag) return m * mag;
    }
    return 10.0 * mag;
}

struct Scale {
    double x0, x_step;       // day index -> px
    double lo, hi, y0, y1;   // value range -> px (y0 bottom, y1 top)

    double x(double i) const { return x0 + i * x_step; }
    double y(double v) const {
        if (hi == lo) return (y0 + y1) / 2.0;
        return y0 - (v - lo) / (hi - lo) * (y0 - y1);
    }
};

inline void span_minmax(const std::vector<double>& vs, double& lo, double& hi) {
    for (double v : vs) {
        if (is_missing(v)) continue;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
}

/// Polyline path with gaps where values are missing.
inline std::string line_path(const Scale& s, const std::vector<double>& values,
                             std::size_t offset) {
    std::string d;
    bool pen_down = false;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (is_missing(values[i])) {
            pen_down = false;
            continue;
        }
        d += pen_down ? " L" : (d.empty() ? "M" : " M");
        d += svg_num(s.x(static_cast<double>(offset + i))) + " " + svg_num(s.y(values[i]));
        pen_down = true;
    }
    return d;
}

inline std::string band_polygon(const Scale& s, const std::vector<double>& lower,
                                const std::vector<double>& upper, std::size_t offset) {
    std::string pts;
    for (std::size_t i = 0; i < upper.size(); ++i) {
        pts += svg_num(s.x(static_cast<double>(offset + i))) + "," +
               svg_num(s.y(upper[i])) + " ";
    }
    for (std::size_t i = lower.size(); i-- > 0;) {
        pts += svg_num(s.x(static_cast<double>(offset + i))) + "," +
               svg_num(s.y(lower[i])) + " ";
    }
    if (!pts.empty()) pts.pop_back();
    return pts;
}

inline void y_axis(std::string& svg, const Scale& s, double left) {
    const double step = nice_step(s.hi - s.lo, 4);
    for (double v = std::ceil(s.lo / step) * step; v <= s.hi + 1e-9 * step; v += step) {
        const double y = s.y(v);
        char label[48];
        if (std::abs(v) >= 10000.0) {
            std::snprintf(label, sizeof(label), "%.3g", v);
        } else {
            std::snprintf(label, sizeof(label), "%g", std::round(v * 100.0) / 100.0);
        }
        svg += "<line class=\"grid\" x1=\"" + svg_num(left) + "\" y1=\"" + svg_num(y) +
               "\" x2=\"" + svg_num(s.x0 + 0) + "\" y2=\"" + svg_num(y) +
               "\" stroke=\"#e5e7eb\"/>";
        svg += "<text class=\"ylabel\" x=\"" + svg_num(s.x0 - 6) + "\" y=\"" +
               svg_num(y + 4) + "\" text-anchor=\"end\" font-size=\"11\" fill=\"#374151\">" +
               label + "</text>";
    }
}

}  // namespace detail

/// `pre_actual`, when given, must end the day before the report starts; it
/// extends the observed line back into the pre-intervention window.
inline std::string impact_to_svg(const ImpactReport& report,
                                 const DateIndexedSeries* pre_actual = nullptr,
                                 const PlotOptions& options = {}) {
    if (report.horizon() == 0) throw Error("plot: empty impact report");
    std::size_t n_pre = 0;
    if (pre_actual != nullptr && pre_actual->size() > 0) {
        if (pre_actual->end_date() + 1 != report.start_date) {
            throw Error("plot: pre-period series must end the day before the post period");
        }
        n_pre = pre_actual->size();
    }
    const std::size_t horizon = report.horizon();
    const std::size_t total = n_pre + horizon;

    const int margin_left = 64, margin_right = 16, margin_top = 30, gap = 16,
              margin_bottom = 34;
    const int panels = options.pointwise_panel ? 3 : 2;
    const int height =
        panels * (options.panel_height + margin_top) + (panels - 1) * gap + margin_bottom;
    const double plot_w =
        static_cast<double>(options.width - margin_left - margin_right);
    const double x_step = total > 1 ? plot_w / static_cast<double>(total - 1) : plot_w;

    std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
                      std::to_string(options.width) + "\" height=\"" +
                      std::to_string(height) + "\" viewBox=\"0 0 " +
                      std::to_string(options.width) + " " + std::to_string(height) +
                      "\" font-family=\"sans-serif\">";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>";

    const Date first_date =
        n_pre > 0 ? pre_actual->start_date : report.start_date;
    // intervention boundary sits between the last pre and first post day
    const double boundary_idx =
        n_pre > 0 ? static_cast<double>(n_pre) - 0.5 : -0.5;

    struct PanelData {
        std::string id, title;
        const std::vector<double>*mean, *lower, *upper;
        bool zero_line;
    };
    std::vector<PanelData> layout;
    layout.push_back({"panel-observed", "Observed vs counterfactual",
                      &report.counterfactual_mean, &report.counterfactual_lower,
                      &report.counterfactual_upper, false});
    if (options.pointwise_panel) {
        layout.push_back({"panel-pointwise", "Pointwise effect", &report.pointwise_mean,
                          &report.pointwise_lower, &report.pointwise_upper, true});
    }
    layout.push_back({"panel-cumulative", "Cumulative effect", &report.cumulative_mean,
                      &report.cumulative_lower, &report.cumulative_upper, true});

    for (int p = 0; p < panels; ++p) {
        const PanelData& panel = layout[static_cast<std::size_t>(p)];
        const double top =
            margin_top + p * (options.panel_height + margin_top + gap);
        const double bottom = top + options.panel_height;

        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        detail::span_minmax(*panel.mean, lo, hi);
        detail::span_minmax(*panel.lower, lo, hi);
        detail::span_minmax(*panel.upper, lo, hi);
        if (panel.id == "panel-observed") {
            detail::span_minmax(report.actual, lo, hi);
            if (n_pre > 0) detail::span_minmax(pre_actual->values, lo, hi);
        }
        if (panel.zero_line) {
            lo = std::min(lo, 0.0);
            hi = std::max(hi, 0.0);
        }
        if (!std::isfinite(lo) || !std::isfinite(hi)) {
            lo = 0.0;
            hi = 1.0;
        }
        const double pad = (hi - lo) * 0.06 + 1e-12;
        detail::Scale s{static_cast<double>(margin_left), x_step,
                        lo - pad,  hi + pad,
                        bottom,    top};

        svg += "<g id=\"" + panel.id + "\">";
        svg += "<text x=\"" + std::to_string(margin_left) + "\" y=\"" +
               detail::svg_num(top - 8) +
               "\" font-size=\"13\" font-weight=\"bold\" fill=\"#111827\">" + panel.title +
               "</text>";
        svg += "<rect x=\"" + std::to_string(margin_left) + "\" y=\"" +
               detail::svg_num(top) + "\" width=\"" + detail::svg_num(plot_w) +
               "\" height=\"" + std::to_string(options.panel_height) +
               "\" fill=\"none\" stroke=\"#9ca3af\"/>";
        detail::y_axis(svg, s, margin_left);

        if (panel.zero_line) {
            svg += "<line class=\"zero\" x1=\"" + detail::svg_num(s.x(0)) + "\" y1=\"" +
                   detail::svg_num(s.y(0.0)) + "\" x2=\"" +
                   detail::svg_num(s.x(static_cast<double>(total - 1))) + "\" y2=\"" +
                   detail::svg_num(s.y(0.0)) +
                   "\" stroke=\"#6b7280\" stroke-dasharray=\"2 3\"/>";
        }

        svg += "<polygon class=\"band\" points=\"" +
               detail::band_polygon(s, *panel.lower, *panel.upper, n_pre) +
               "\" fill=\"#93c5fd\" fill-opacity=\"0.4\" stroke=\"none\"/>";
        svg += "<path class=\"model\" d=\"" + detail::line_path(s, *panel.mean, n_pre) +
               "\" fill=\"none\" stroke=\"#2563eb\" stroke-width=\"1.6\" "
               "stroke-dasharray=\"6 3\"/>";
        if (panel.id == "panel-observed") {
            std::vector<double> observed;
            if (n_pre > 0) {
                observed = pre_actual->values;
                observed.insert(observed.end(), report.actual.begin(), report.actual.end());
            } else {
                observed = report.actual;
            }
            svg += "<path class=\"actual\" d=\"" + detail::line_path(s, observed, 0) +
                   "\" fill=\"none\" stroke=\"#111827\" stroke-width=\"1.4\"/>";
        }

        if (boundary_idx >= 0.0) {
            svg += "<line class=\"intervention\" x1=\"" +
                   detail::svg_num(s.x(boundary_idx)) + "\" y1=\"" + detail::svg_num(top) +
                   "\" x2=\"" + detail::svg_num(s.x(boundary_idx)) + "\" y2=\"" +
                   detail::svg_num(bottom) +
                   "\" stroke=\"#dc2626\" stroke-dasharray=\"4 3\"/>";
        }

        // date labels on the bottom panel only
        if (p == panels - 1) {
            const int n_labels = std::min<std::size_t>(6, total);
            for (int k = 0; k < n_labels; ++k) {
                const std::size_t idx =
                    n_labels == 1
                        ? 0
                        : static_cast<std::size_t>(std::llround(
                              static_cast<double>(k) * static_cast<double>(total - 1) /
                              (n_labels - 1)));
                svg += "<text class=\"xlabel\" x=\"" +
                       detail::svg_num(s.x(static_cast<double>(idx))) + "\" y=\"" +
                       detail::svg_num(bottom + 16) +
                       "\" text-anchor=\"middle\" font-size=\"11\" fill=\"#374151\">" +
                       (first_date + static_cast<long>(idx)).to_string() + "</text>";
            }
        }
        svg += "</g>";
    }
    svg += "</svg>";
    return svg;
}

}  // namespace bsts
