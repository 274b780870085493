#include "gradforge/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "gradforge/errors.hpp"

namespace gradforge {

namespace {

constexpr int kWidth = 640;
constexpr int kHeight = 440;
constexpr int kMarginLeft = 70;
constexpr int kMarginRight = 160;
constexpr int kMarginTop = 40;
constexpr int kMarginBottom = 55;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                          "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

}  // namespace

void write_line_chart(const std::string& path, const Chart& chart) {
    if (chart.series.empty()) throw ValueError("write_line_chart: no series");
    double xmin = 0.0, xmax = 1.0, ymin = 0.0, ymax = 1.0;
    bool first = true;
    for (const ChartSeries& s : chart.series) {
        if (s.x.size() != s.y.size()) throw ValueError("write_line_chart: x/y length mismatch");
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            const double lo = s.yerr.empty() ? s.y[i] : s.y[i] - s.yerr[i];
            const double hi = s.yerr.empty() ? s.y[i] : s.y[i] + s.yerr[i];
            if (first) {
                xmin = xmax = s.x[i];
                ymin = lo;
                ymax = hi;
                first = false;
            } else {
                xmin = std::min(xmin, s.x[i]);
                xmax = std::max(xmax, s.x[i]);
                ymin = std::min(ymin, lo);
                ymax = std::max(ymax, hi);
            }
        }
    }
    if (xmax == xmin) xmax = xmin + 1.0;
    if (ymax == ymin) ymax = ymin + 1.0;
    const double xpad = 0.02 * (xmax - xmin);
    const double ypad = 0.05 * (ymax - ymin);
    xmin -= xpad;
    xmax += xpad;
    ymin -= ypad;
    ymax += ypad;

    const double plot_w = kWidth - kMarginLeft - kMarginRight;
    const double plot_h = kHeight - kMarginTop - kMarginBottom;
    auto sx = [&](double x) { return kMarginLeft + (x - xmin) / (xmax - xmin) * plot_w; };
    auto sy = [&](double y) { return kMarginTop + (1.0 - (y - ymin) / (ymax - ymin)) * plot_h; };

    std::ofstream os(path, std::ios::trunc);
    if (!os) throw IoError("cannot open " + path + " for writing");
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
       << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";
    os << "<rect width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n";
    os << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" "
          "font-size=\"15\">"
       << chart.title << "</text>\n";

    // axes
    os << "<line x1=\"" << kMarginLeft << "\" y1=\"" << kMarginTop << "\" x2=\"" << kMarginLeft
       << "\" y2=\"" << kMarginTop + plot_h << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << kMarginLeft << "\" y1=\"" << kMarginTop + plot_h << "\" x2=\""
       << kMarginLeft + plot_w << "\" y2=\"" << kMarginTop + plot_h << "\" stroke=\"black\"/>\n";

    // ticks
    const int nticks = 5;
    for (int i = 0; i <= nticks; ++i) {
        const double tx = xmin + (xmax - xmin) * i / nticks;
        const double ty = ymin + (ymax - ymin) * i / nticks;
        os << "<line x1=\"" << fmt(sx(tx)) << "\" y1=\"" << kMarginTop + plot_h << "\" x2=\""
           << fmt(sx(tx)) << "\" y2=\"" << kMarginTop + plot_h + 5 << "\" stroke=\"black\"/>\n";
        os << "<text x=\"" << fmt(sx(tx)) << "\" y=\"" << kMarginTop + plot_h + 20
           << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(tx)
           << "</text>\n";
        os << "<line x1=\"" << kMarginLeft - 5 << "\" y1=\"" << fmt(sy(ty)) << "\" x2=\""
           << kMarginLeft << "\" y2=\"" << fmt(sy(ty)) << "\" stroke=\"black\"/>\n";
        os << "<text x=\"" << kMarginLeft - 9 << "\" y=\"" << fmt(sy(ty) + 4)
           << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(ty)
           << "</text>\n";
    }
    os << "<text x=\"" << kMarginLeft + plot_w / 2 << "\" y=\"" << kHeight - 12
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" << chart.x_label
       << "</text>\n";
    os << "<text x=\"18\" y=\"" << kMarginTop + plot_h / 2
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" transform=\"rotate(-90 "
          "18 "
       << kMarginTop + plot_h / 2 << ")\">" << chart.y_label << "</text>\n";

    for (std::size_t si = 0; si < chart.series.size(); ++si) {
        const ChartSeries& s = chart.series[si];
        const char* color = kPalette[si % (sizeof(kPalette) / sizeof(kPalette[0]))];
        if (s.x.size() > 1) {
            os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
            for (std::size_t i = 0; i < s.x.size(); ++i) {
                if (i) os << " ";
                os << fmt(sx(s.x[i])) << "," << fmt(sy(s.y[i]));
            }
            os << "\"/>\n";
        }
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            os << "<circle cx=\"" << fmt(sx(s.x[i])) << "\" cy=\"" << fmt(sy(s.y[i]))
               << "\" r=\"2.5\" fill=\"" << color << "\"/>\n";
            if (!s.yerr.empty()) {
                os << "<line x1=\"" << fmt(sx(s.x[i])) << "\" y1=\"" << fmt(sy(s.y[i] - s.yerr[i]))
                   << "\" x2=\"" << fmt(sx(s.x[i])) << "\" y2=\"" << fmt(sy(s.y[i] + s.yerr[i]))
                   << "\" stroke=\"" << color << "\"/>\n";
            }
        }
        const double ly = kMarginTop + 18.0 * static_cast<double>(si);
        os << "<line x1=\"" << kMarginLeft + plot_w + 12 << "\" y1=\"" << fmt(ly) << "\" x2=\""
           << kMarginLeft + plot_w + 32 << "\" y2=\"" << fmt(ly) << "\" stroke=\"" << color
           << "\" stroke-width=\"2\"/>\n";
        os << "<text x=\"" << kMarginLeft + plot_w + 38 << "\" y=\"" << fmt(ly + 4)
           << "\" font-family=\"sans-serif\" font-size=\"12\">" << s.name << "</text>\n";
    }
    os << "</svg>\n";
    if (!os) throw IoError("write failed for " + path);
}

}  // namespace gradforge
