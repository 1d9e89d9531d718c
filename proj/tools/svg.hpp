#pragma once

#include <string>
#include <vector>

#include "ctxrace/geometry.hpp"

namespace ctxrace::tools {

struct Series {
    std::string label;
    std::string color;
    std::vector<Vec2> points;
    double stroke = 1.5;
    bool dashed = false;
};

/// Line plot with axes, ticks and a legend. `equal_aspect` keeps metres square
/// for track maps.
std::string svg_plot(const std::string& title, const std::string& x_label, const std::string& y_label,
                     const std::vector<Series>& series, bool equal_aspect = false);

/// Palette used for the -0.3 / 0 / +0.3 context triples.
inline const char* context_color(int i) {
    static const char* colors[] = {"#1f77b4", "#2ca02c", "#d62728", "#9467bd", "#ff7f0e", "#8c564b"};
    return colors[i % 6];
}

}  // namespace ctxrace::tools
