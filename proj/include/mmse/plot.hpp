#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mmse/table.hpp"

namespace mmse {

struct CurveSpec {
    std::string y_col;
    std::string label;
    std::string color;   // empty picks from the default palette
    bool band = true;    // shade +-1 std over runs
};

struct PlotSpec {
    std::string x_col = "sigma";
    std::vector<CurveSpec> curves;
    std::string title;
    std::string x_label;
    std::string y_label;
    std::string out_name = "fig.svg";
};

namespace detail {

inline const std::vector<std::string>& palette() {
    static const std::vector<std::string> colors{
        "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"};
    return colors;
}

inline std::string fmt_coord(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

inline std::string fmt_tick(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

struct CurveData {
    std::vector<double> x, mean, sd;
};

// nice round tick step covering the span with about `target` intervals
inline double tick_step(double span, int target) {
    if (!(span > 0.0)) return 1.0;
    const double raw = span / target;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    for (double mult : {1.0, 2.0, 2.5, 5.0, 10.0}) {
        if (mag * mult >= raw) return mag * mult;
    }
    return mag * 10.0;
}

}  // namespace detail

// Renders a line plot of per-point means with optional +-1 std bands over
// runs. Pure function of (table, spec): identical inputs give identical
// bytes. Aggregation happens here from the raw data rows; the science is
// whatever the CSV already holds.
inline std::string render_plot(const CsvTable& table, const PlotSpec& spec) {
    if (spec.curves.empty()) throw std::invalid_argument("plot needs at least one curve");
    const std::size_t xcol = table.col_index(spec.x_col);
    const std::size_t pcol = table.col_index("point_id");

    std::map<long, std::vector<std::size_t>> by_point;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        if (!table.is_data_row(i)) continue;
        by_point[std::strtol(table.rows[i][pcol].c_str(), nullptr, 10)].push_back(i);
    }
    if (by_point.empty()) throw std::invalid_argument("plot: no data rows");

    std::vector<detail::CurveData> curves(spec.curves.size());
    for (std::size_t c = 0; c < spec.curves.size(); ++c) {
        const std::size_t ycol = table.col_index(spec.curves[c].y_col);
        for (const auto& [point, idxs] : by_point) {
            std::vector<double> vals;
            double x = std::nan("");
            for (std::size_t i : idxs) {
                x = table.num(i, xcol);
                const double v = table.num(i, ycol);
                if (std::isfinite(v)) vals.push_back(v);
            }
            if (vals.empty() || !std::isfinite(x)) continue;
            const MeanVar mv = mean_var(vals);
            curves[c].x.push_back(x);
            curves[c].mean.push_back(mv.mean);
            curves[c].sd.push_back(std::sqrt(mv.var));
        }
        if (curves[c].x.empty())
            throw std::invalid_argument("plot: column " + spec.curves[c].y_col +
                                        " has no finite data");
    }

    double xmin = HUGE_VAL, xmax = -HUGE_VAL, ymin = HUGE_VAL, ymax = -HUGE_VAL;
    for (std::size_t c = 0; c < curves.size(); ++c) {
        for (std::size_t i = 0; i < curves[c].x.size(); ++i) {
            xmin = std::min(xmin, curves[c].x[i]);
            xmax = std::max(xmax, curves[c].x[i]);
            const double lo = curves[c].mean[i] - (spec.curves[c].band ? curves[c].sd[i] : 0.0);
            const double hi = curves[c].mean[i] + (spec.curves[c].band ? curves[c].sd[i] : 0.0);
            ymin = std::min(ymin, lo);
            ymax = std::max(ymax, hi);
        }
    }
    if (xmin == xmax) {
        xmin -= 0.5;
        xmax += 0.5;
    }
    if (ymin == ymax) {
        ymin -= 0.5;
        ymax += 0.5;
    }
    const double ypad = 0.05 * (ymax - ymin);
    ymin -= ypad;
    ymax += ypad;

    const double width = 800, height = 560;
    const double l = 78, r = 22, t = 46, b = 58;
    const auto sx = [&](double x) {
        return l + (x - xmin) / (xmax - xmin) * (width - l - r);
    };
    const auto sy = [&](double y) {
        return height - b - (y - ymin) / (ymax - ymin) * (height - t - b);
    };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
        << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << " "
        << height << "\">\n";
    svg << "<rect width=\"" << width << "\" height=\"" << height
        << "\" fill=\"white\"/>\n";

    // axes grid and tick labels
    const double xstep = detail::tick_step(xmax - xmin, 6);
    const double ystep = detail::tick_step(ymax - ymin, 6);
    svg << "<g stroke=\"#dddddd\" stroke-width=\"1\">\n";
    for (double x = std::ceil(xmin / xstep) * xstep; x <= xmax + 1e-12; x += xstep)
        svg << "<line x1=\"" << detail::fmt_coord(sx(x)) << "\" y1=\""
            << detail::fmt_coord(sy(ymin)) << "\" x2=\"" << detail::fmt_coord(sx(x))
            << "\" y2=\"" << detail::fmt_coord(sy(ymax)) << "\"/>\n";
    for (double y = std::ceil(ymin / ystep) * ystep; y <= ymax + 1e-12; y += ystep)
        svg << "<line x1=\"" << detail::fmt_coord(sx(xmin)) << "\" y1=\""
            << detail::fmt_coord(sy(y)) << "\" x2=\"" << detail::fmt_coord(sx(xmax))
            << "\" y2=\"" << detail::fmt_coord(sy(y)) << "\"/>\n";
    svg << "</g>\n";
    svg << "<g font-family=\"sans-serif\" font-size=\"12\" fill=\"#333333\">\n";
    for (double x = std::ceil(xmin / xstep) * xstep; x <= xmax + 1e-12; x += xstep)
        svg << "<text x=\"" << detail::fmt_coord(sx(x)) << "\" y=\""
            << detail::fmt_coord(height - b + 18) << "\" text-anchor=\"middle\">"
            << detail::fmt_tick(x) << "</text>\n";
    for (double y = std::ceil(ymin / ystep) * ystep; y <= ymax + 1e-12; y += ystep)
        svg << "<text x=\"" << detail::fmt_coord(l - 8) << "\" y=\""
            << detail::fmt_coord(sy(y) + 4) << "\" text-anchor=\"end\">"
            << detail::fmt_tick(y) << "</text>\n";
    svg << "</g>\n";

    // bands first so lines draw on top
    for (std::size_t c = 0; c < curves.size(); ++c) {
        if (!spec.curves[c].band || curves[c].x.size() < 2) continue;
        const std::string color = spec.curves[c].color.empty()
                                      ? detail::palette()[c % detail::palette().size()]
                                      : spec.curves[c].color;
        svg << "<path fill=\"" << color << "\" fill-opacity=\"0.15\" stroke=\"none\" d=\"";
        for (std::size_t i = 0; i < curves[c].x.size(); ++i)
            svg << (i == 0 ? "M" : "L") << detail::fmt_coord(sx(curves[c].x[i])) << ","
                << detail::fmt_coord(sy(curves[c].mean[i] + curves[c].sd[i]));
        for (std::size_t i = curves[c].x.size(); i-- > 0;)
            svg << "L" << detail::fmt_coord(sx(curves[c].x[i])) << ","
                << detail::fmt_coord(sy(curves[c].mean[i] - curves[c].sd[i]));
        svg << "Z\"/>\n";
    }

    for (std::size_t c = 0; c < curves.size(); ++c) {
        const std::string color = spec.curves[c].color.empty()
                                      ? detail::palette()[c % detail::palette().size()]
                                      : spec.curves[c].color;
        svg << "<path fill=\"none\" stroke=\"" << color
            << "\" stroke-width=\"2\" d=\"";
        for (std::size_t i = 0; i < curves[c].x.size(); ++i)
            svg << (i == 0 ? "M" : "L") << detail::fmt_coord(sx(curves[c].x[i])) << ","
                << detail::fmt_coord(sy(curves[c].mean[i]));
        svg << "\"/>\n";
    }

    // legend
    svg << "<g font-family=\"sans-serif\" font-size=\"13\">\n";
    for (std::size_t c = 0; c < curves.size(); ++c) {
        const std::string color = spec.curves[c].color.empty()
                                      ? detail::palette()[c % detail::palette().size()]
                                      : spec.curves[c].color;
        const double ly = t + 8 + 18 * static_cast<double>(c);
        svg << "<line x1=\"" << detail::fmt_coord(width - r - 150) << "\" y1=\""
            << detail::fmt_coord(ly) << "\" x2=\"" << detail::fmt_coord(width - r - 122)
            << "\" y2=\"" << detail::fmt_coord(ly) << "\" stroke=\"" << color
            << "\" stroke-width=\"2\"/>\n";
        svg << "<text x=\"" << detail::fmt_coord(width - r - 116) << "\" y=\""
            << detail::fmt_coord(ly + 4) << "\">" << spec.curves[c].label
            << "</text>\n";
    }
    svg << "</g>\n";

    svg << "<g font-family=\"sans-serif\" fill=\"#111111\">\n";
    if (!spec.title.empty())
        svg << "<text x=\"" << width / 2 << "\" y=\"24\" font-size=\"16\" "
               "text-anchor=\"middle\">" << spec.title << "</text>\n";
    if (!spec.x_label.empty())
        svg << "<text x=\"" << width / 2 << "\" y=\"" << height - 14
            << "\" font-size=\"14\" text-anchor=\"middle\">" << spec.x_label
            << "</text>\n";
    if (!spec.y_label.empty())
        svg << "<text x=\"20\" y=\"" << height / 2
            << "\" font-size=\"14\" text-anchor=\"middle\" transform=\"rotate(-90 20 "
            << height / 2 << ")\">" << spec.y_label << "</text>\n";
    svg << "</g>\n</svg>\n";
    return svg.str();
}

inline void emit_plot(const CsvTable& table, const PlotSpec& spec,
                      const std::string& out_path) {
    write_file(out_path, render_plot(table, spec));
}

}  // namespace mmse
