#include "sgdrop/svg.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace sgdrop {
namespace {

std::string escape(const std::string& text) {
    std::string out;
    for (char c : text) {
        switch (c) {
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '&': out += "&amp;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

constexpr const char* kColours[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};

} // namespace

std::string svg_line_plot(const PlotSpec& spec) {
    double xMin = std::numeric_limits<double>::infinity(), xMax = -xMin;
    double yMin = xMin, yMax = -xMin;
    for (const auto& s : spec.series) {
        if (s.x.size() != s.y.size()) throw std::invalid_argument("series '" + s.label + "' has mismatched x/y");
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
            xMin = std::min(xMin, s.x[i]);
            xMax = std::max(xMax, s.x[i]);
            yMin = std::min(yMin, s.y[i]);
            yMax = std::max(yMax, s.y[i]);
        }
    }
    if (!(xMax >= xMin)) xMin = 0.0, xMax = 1.0;
    if (!(yMax >= yMin)) yMin = 0.0, yMax = 1.0;
    if (xMax == xMin) xMin -= 0.5, xMax += 0.5;
    if (yMax == yMin) yMin -= 0.5, yMax += 0.5;

    const double left = 70, right = 20, top = 35, bottom = 50;
    const double plotW = spec.width - left - right;
    const double plotH = spec.height - top - bottom;
    auto px = [&](double x) { return left + (x - xMin) / (xMax - xMin) * plotW; };
    auto py = [&](double y) { return top + (yMax - y) / (yMax - yMin) * plotH; };

    std::ostringstream out;
    out << std::setprecision(6);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << spec.width << "\" height=\"" << spec.height
        << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << spec.width / 2 << "\" y=\"20\" text-anchor=\"middle\">" << escape(spec.title)
        << "</text>\n";
    out << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << plotW << "\" height=\"" << plotH
        << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double fx = xMin + (xMax - xMin) * i / 4.0;
        const double fy = yMin + (yMax - yMin) * i / 4.0;
        out << "<text x=\"" << px(fx) << "\" y=\"" << top + plotH + 16 << "\" text-anchor=\"middle\">" << fx
            << "</text>\n";
        out << "<text x=\"" << left - 6 << "\" y=\"" << py(fy) + 4 << "\" text-anchor=\"end\">" << fy
            << "</text>\n";
    }
    out << "<text x=\"" << left + plotW / 2 << "\" y=\"" << spec.height - 10 << "\" text-anchor=\"middle\">"
        << escape(spec.xLabel) << "</text>\n";
    out << "<text x=\"15\" y=\"" << top + plotH / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 15 "
        << top + plotH / 2 << ")\">" << escape(spec.yLabel) << "</text>\n";

    for (std::size_t k = 0; k < spec.series.size(); ++k) {
        const auto& s = spec.series[k];
        const char* colour = kColours[k % std::size(kColours)];
        out << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
            out << px(s.x[i]) << ',' << py(s.y[i]) << ' ';
        }
        out << "\"/>\n";
        if (!s.label.empty())
            out << "<text x=\"" << left + plotW - 4 << "\" y=\"" << top + 14 + 14 * static_cast<double>(k)
                << "\" text-anchor=\"end\" fill=\"" << colour << "\">" << escape(s.label) << "</text>\n";
    }
    out << "</svg>\n";
    return out.str();
}

} // namespace sgdrop
