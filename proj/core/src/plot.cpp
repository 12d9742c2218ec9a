#include "mlnl/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace mlnl {

namespace {

constexpr double kWidth = 640, kHeight = 400;
constexpr double kLeft = 70, kRight = 150, kTop = 40, kBottom = 50;

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::string tick(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

struct Range {
    double lo, hi;
    double map(double v, double a, double b) const { return a + (v - lo) / (hi - lo) * (b - a); }
};

Range padded(double lo, double hi, bool from_zero) {
    if (from_zero) lo = std::min(lo, 0.0);
    if (hi - lo < 1e-12) {
        hi += 0.5;
        lo -= 0.5;
    }
    return {lo, hi};
}

}  // namespace

std::string render_plot(const std::vector<Series>& series, PlotKind kind, const PlotLabels& labels) {
    bool any = false;
    for (const auto& s : series) any = any || !s.points.empty();
    if (series.empty() || !any) throw std::invalid_argument("emit_plot: no data to plot");

    std::vector<double> xs;
    double ymin = INFINITY, ymax = -INFINITY;
    for (const auto& s : series) {
        for (auto [x, y] : s.points) {
            xs.push_back(x);
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
        }
    }
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());

    auto tick_text = [&](std::size_t i) {
        return i < labels.x_ticks.size() ? escape(labels.x_ticks[i]) : tick(xs[i]);
    };

    const double plot_l = kLeft, plot_r = kWidth - kRight, plot_t = kTop, plot_b = kHeight - kBottom;
    const Range yr = padded(ymin, ymax, kind == PlotKind::grouped_bar);
    const Range xr = padded(xs.front(), xs.back(), false);

    std::ostringstream svg;
    svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
        << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    if (!labels.title.empty()) {
        svg << "<text x=\"" << num(kWidth / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
            << escape(labels.title) << "</text>\n";
    }

    // Axes and y ticks.
    svg << "<line x1=\"" << num(plot_l) << "\" y1=\"" << num(plot_b) << "\" x2=\"" << num(plot_r) << "\" y2=\""
        << num(plot_b) << "\" stroke=\"black\"/>\n";
    svg << "<line x1=\"" << num(plot_l) << "\" y1=\"" << num(plot_t) << "\" x2=\"" << num(plot_l) << "\" y2=\""
        << num(plot_b) << "\" stroke=\"black\"/>\n";
    for (int t = 0; t <= 5; ++t) {
        const double v = yr.lo + (yr.hi - yr.lo) * t / 5.0;
        const double y = yr.map(v, plot_b, plot_t);
        svg << "<line x1=\"" << num(plot_l - 4) << "\" y1=\"" << num(y) << "\" x2=\"" << num(plot_r) << "\" y2=\""
            << num(y) << "\" stroke=\"#dddddd\"/>\n";
        svg << "<text x=\"" << num(plot_l - 8) << "\" y=\"" << num(y + 4) << "\" text-anchor=\"end\">" << tick(v)
            << "</text>\n";
    }

    if (kind == PlotKind::line) {
        for (std::size_t i = 0; i < xs.size(); ++i) {
            svg << "<text x=\"" << num(xr.map(xs[i], plot_l, plot_r)) << "\" y=\"" << num(plot_b + 18)
                << "\" text-anchor=\"middle\">" << tick_text(i) << "</text>\n";
        }
        for (std::size_t s = 0; s < series.size(); ++s) {
            if (series[s].points.empty()) continue;
            svg << "<polyline fill=\"none\" stroke=\"" << kPalette[s % 10] << "\" stroke-width=\"2\" points=\"";
            for (std::size_t p = 0; p < series[s].points.size(); ++p) {
                auto [x, y] = series[s].points[p];
                if (p) svg << ' ';
                svg << num(xr.map(x, plot_l, plot_r)) << ',' << num(yr.map(y, plot_b, plot_t));
            }
            svg << "\"/>\n";
        }
    } else {
        const double group_w = (plot_r - plot_l) / static_cast<double>(xs.size());
        const double bar_w = group_w * 0.8 / static_cast<double>(series.size());
        const double base = yr.map(std::max(yr.lo, 0.0), plot_b, plot_t);
        for (std::size_t g = 0; g < xs.size(); ++g) {
            svg << "<text x=\"" << num(plot_l + group_w * (g + 0.5)) << "\" y=\"" << num(plot_b + 18)
                << "\" text-anchor=\"middle\">" << tick_text(g) << "</text>\n";
        }
        for (std::size_t s = 0; s < series.size(); ++s) {
            for (auto [x, y] : series[s].points) {
                const auto g = static_cast<std::size_t>(std::lower_bound(xs.begin(), xs.end(), x) - xs.begin());
                const double left = plot_l + group_w * g + group_w * 0.1 + bar_w * s;
                const double top = yr.map(y, plot_b, plot_t);
                svg << "<rect x=\"" << num(left) << "\" y=\"" << num(std::min(top, base)) << "\" width=\""
                    << num(bar_w) << "\" height=\"" << num(std::abs(base - top)) << "\" fill=\"" << kPalette[s % 10]
                    << "\"/>\n";
            }
        }
    }

    if (!labels.x_label.empty()) {
        svg << "<text x=\"" << num((plot_l + plot_r) / 2) << "\" y=\"" << num(kHeight - 12)
            << "\" text-anchor=\"middle\">" << escape(labels.x_label) << "</text>\n";
    }
    if (!labels.y_label.empty()) {
        svg << "<text x=\"18\" y=\"" << num((plot_t + plot_b) / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
            << num((plot_t + plot_b) / 2) << ")\">" << escape(labels.y_label) << "</text>\n";
    }

    // Legend swatches are thick lines so bar charts contain exactly one rect per bar.
    for (std::size_t s = 0; s < series.size(); ++s) {
        const double y = plot_t + 10 + 20.0 * static_cast<double>(s);
        svg << "<line x1=\"" << num(plot_r + 15) << "\" y1=\"" << num(y) << "\" x2=\"" << num(plot_r + 35) << "\" y2=\""
            << num(y) << "\" stroke=\"" << kPalette[s % 10] << "\" stroke-width=\"8\"/>\n";
        svg << "<text x=\"" << num(plot_r + 42) << "\" y=\"" << num(y + 4) << "\">" << escape(series[s].name)
            << "</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

void emit_plot(const std::vector<Series>& series, PlotKind kind, const std::filesystem::path& path,
               const PlotLabels& labels) {
    const std::string text = render_plot(series, kind, labels);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << text;
}

}  // namespace mlnl
