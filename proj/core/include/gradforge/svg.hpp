#pragma once

#include <string>
#include <vector>

namespace gradforge {

struct ChartSeries {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> yerr;  // optional error bars, empty to skip
};

struct Chart {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<ChartSeries> series;
};

// Minimal deterministic SVG line chart: axes with ticks, one polyline with
// point markers per series, legend. No external plotting dependency.
void write_line_chart(const std::string& path, const Chart& chart);

}  // namespace gradforge
