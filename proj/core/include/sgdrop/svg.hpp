#pragma once

// Minimal SVG line plot: axes, one or more polylines, labels.

#include <string>
#include <vector>

namespace sgdrop {

struct PlotSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

struct PlotSpec {
    std::string title;
    std::string xLabel;
    std::string yLabel;
    std::vector<PlotSeries> series;
    int width = 640;
    int height = 400;
};

std::string svg_line_plot(const PlotSpec& spec);

} // namespace sgdrop
