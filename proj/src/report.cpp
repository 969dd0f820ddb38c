// SPDX-License-Identifier: Apache-2.0
#include "chanest/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "chanest/errors.hpp"

namespace chanest {

namespace {

std::string fmt(double v, const char* spec) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), spec, v);
    return buf;
}

} // namespace

void write_csv(const std::vector<ResultRow>& rows, std::ostream& out) {
    if (rows.empty())
        throw std::invalid_argument("no rows to write");
    out << "scenario";
    for (const auto& [name, value] : rows.front().keys)
        out << ',' << name;
    out << ",metric,value,n,stderr\n";
    for (const ResultRow& row : rows) {
        if (row.keys.size() != rows.front().keys.size())
            throw std::invalid_argument("rows disagree on key columns");
        out << row.scenario;
        for (const auto& [name, value] : row.keys)
            out << ',' << value;
        out << ',' << row.metric << ',' << fmt(row.value, "%.12g") << ',' << row.n << ','
            << fmt(row.std_error, "%.6g") << '\n';
    }
}

std::string csv_string(const std::vector<ResultRow>& rows) {
    std::ostringstream out;
    write_csv(rows, out);
    return out.str();
}

void write_csv_file(const std::vector<ResultRow>& rows, const std::string& path) {
    std::ofstream out(path);
    if (!out)
        throw numeric_error("cannot write to '" + path + "'");
    write_csv(rows, out);
}

namespace {

struct Series {
    std::string label;
    std::vector<std::pair<double, double>> points; // x, value
};

struct Panel {
    std::string metric;
    std::vector<Series> series;
    bool log_scale = true;
};

double parse_or_index(const std::string& text, int fallback) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(text, &pos);
        if (pos == text.size())
            return v;
    } catch (...) {
    }
    return fallback;
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                          "#8c564b", "#e377c2", "#17becf", "#7f7f7f", "#bcbd22"};

void render_panel(std::ostream& out, const Panel& panel, double top) {
    const double width = 640, height = 260, left = 70, legend_w = 210;

    double x_min = 1e300, x_max = -1e300, y_min = 1e300, y_max = -1e300;
    for (const Series& s : panel.series)
        for (const auto& [x, y] : s.points) {
            x_min = std::min(x_min, x);
            x_max = std::max(x_max, x);
            const double yy = panel.log_scale ? std::log10(y) : y;
            y_min = std::min(y_min, yy);
            y_max = std::max(y_max, yy);
        }
    if (x_max <= x_min)
        x_max = x_min + 1.0;
    if (y_max <= y_min)
        y_max = y_min + 1.0;
    const double y_pad = 0.05 * (y_max - y_min);
    y_min -= y_pad;
    y_max += y_pad;

    auto sx = [&](double x) { return left + (x - x_min) / (x_max - x_min) * width; };
    auto sy = [&](double y) {
        const double v = panel.log_scale ? std::log10(y) : y;
        return top + height - (v - y_min) / (y_max - y_min) * height;
    };

    out << "<rect x='" << left << "' y='" << top << "' width='" << width << "' height='"
        << height << "' fill='none' stroke='#444'/>\n";
    out << "<text x='" << left << "' y='" << top - 8
        << "' font-size='14' font-family='sans-serif'>" << panel.metric
        << (panel.log_scale ? " (log scale)" : "") << "</text>\n";

    for (int i = 0; i <= 4; ++i) {
        const double xv = x_min + (x_max - x_min) * i / 4.0;
        out << "<text x='" << sx(xv) << "' y='" << top + height + 16
            << "' font-size='11' text-anchor='middle' font-family='sans-serif'>"
            << fmt(xv, "%.4g") << "</text>\n";
        const double yv = y_min + (y_max - y_min) * i / 4.0;
        const double yval = panel.log_scale ? std::pow(10.0, yv) : yv;
        out << "<text x='" << left - 6 << "' y='"
            << top + height - (yv - y_min) / (y_max - y_min) * height + 4
            << "' font-size='11' text-anchor='end' font-family='sans-serif'>"
            << fmt(yval, "%.3g") << "</text>\n";
    }

    int color = 0;
    for (const Series& s : panel.series) {
        const char* stroke = kPalette[color % 10];
        out << "<polyline fill='none' stroke='" << stroke << "' stroke-width='1.5' points='";
        for (const auto& [x, y] : s.points)
            out << fmt(sx(x), "%.2f") << ',' << fmt(sy(y), "%.2f") << ' ';
        out << "'/>\n";
        for (const auto& [x, y] : s.points)
            out << "<circle cx='" << fmt(sx(x), "%.2f") << "' cy='" << fmt(sy(y), "%.2f")
                << "' r='2.4' fill='" << stroke << "'/>\n";
        out << "<text x='" << left + width + 12 << "' y='" << top + 14 + 15 * color
            << "' font-size='11' font-family='sans-serif' fill='" << stroke << "'>" << s.label
            << "</text>\n";
        ++color;
        if (15 * color > height && &s != &panel.series.back()) {
            out << "<text x='" << left + width + 12 << "' y='" << top + 14 + 15 * color
                << "' font-size='11' font-family='sans-serif'>...</text>\n";
            break;
        }
    }
    (void)legend_w;
}

} // namespace

void write_svg_file(const std::vector<ResultRow>& rows, const std::string& path) {
    if (rows.empty())
        throw std::invalid_argument("no rows to plot");

    // Group: one panel per metric, one series per non-x key combination.
    std::map<std::string, std::map<std::string, Series>> panels;
    int row_index = 0;
    for (const ResultRow& row : rows) {
        std::string label;
        for (std::size_t i = 1; i < row.keys.size(); ++i)
            label += (label.empty() ? "" : " ") + row.keys[i].first + "=" + row.keys[i].second;
        if (label.empty())
            label = row.metric;
        const double x = row.keys.empty()
                             ? row_index
                             : parse_or_index(row.keys.front().second, row_index);
        Series& series = panels[row.metric][label];
        series.label = label;
        series.points.emplace_back(x, row.value);
        ++row_index;
    }

    std::vector<Panel> ordered;
    for (auto& [metric, group] : panels) {
        Panel panel;
        panel.metric = metric;
        for (auto& [label, series] : group) {
            std::stable_sort(series.points.begin(), series.points.end(),
                             [](const auto& a, const auto& b) { return a.first < b.first; });
            // Metrics that are legitimately zero somewhere (failure rates)
            // fall back to a linear axis.
            for (const auto& [x, y] : series.points)
                if (!(y > 0.0))
                    panel.log_scale = false;
            panel.series.push_back(std::move(series));
        }
        ordered.push_back(std::move(panel));
    }

    const double panel_height = 320;
    const double total_height = 30 + panel_height * static_cast<double>(ordered.size());
    std::ofstream out(path);
    if (!out)
        throw numeric_error("cannot write to '" + path + "'");
    out << "<svg xmlns='http://www.w3.org/2000/svg' width='960' height='" << total_height
        << "'>\n<rect width='100%' height='100%' fill='white'/>\n";
    out << "<text x='16' y='20' font-size='16' font-family='sans-serif'>"
        << rows.front().scenario << "</text>\n";
    double top = 60;
    for (const Panel& panel : ordered) {
        render_panel(out, panel, top);
        top += panel_height;
    }
    out << "</svg>\n";
}

} // namespace chanest
