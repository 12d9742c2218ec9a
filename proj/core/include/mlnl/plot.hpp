#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace mlnl {

struct Series {
    std::string name;
    std::vector<std::pair<double, double>> points;
};

enum class PlotKind { line, grouped_bar };

struct PlotLabels {
    std::string title;
    std::string x_label;
    std::string y_label;
    /// Optional text for the distinct x values in ascending order (e.g. "L10").
    std::vector<std::string> x_ticks;
};

/// Static SVG with axes and legend. Output depends only on the inputs.
///
/// `line`: one polyline per series. `grouped_bar`: the distinct x values form
/// the groups and each series contributes one bar (one rect) per group.
std::string render_plot(const std::vector<Series>& series, PlotKind kind, const PlotLabels& labels = {});

/// Writes render_plot() to `path`. Throws on empty input.
void emit_plot(const std::vector<Series>& series, PlotKind kind, const std::filesystem::path& path,
               const PlotLabels& labels = {});

}  // namespace mlnl
