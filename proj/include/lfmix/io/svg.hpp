#ifndef LFMIX_IO_SVG_HPP
#define LFMIX_IO_SVG_HPP

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace lfmix::io {

struct ChartSeries {
    std::string name;
    std::vector<std::pair<double, double>> points;  // (x, y)
};

struct ChartOptions {
    std::string title;
    std::string x_label = "t";
    std::string y_label = "value";
    bool log_y = false;
    int width = 800;
    int height = 480;
};

namespace detail {

inline std::string xml_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size());
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

inline std::string fmt(double v, const char* spec = "%.2f") {
    char buf[48];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

inline const char* palette(std::size_t i) {
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                   "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
    return colors[i % (sizeof colors / sizeof colors[0])];
}

}  // namespace detail

/// Standalone SVG line chart. Under log_y, nonpositive values are dropped
/// (the polyline breaks there).
inline std::string render_line_chart(const std::vector<ChartSeries>& series, const ChartOptions& opt = {}) {
    using detail::fmt;
    const double left = 70, right = 160, top = 40, bottom = 50;
    const double pw = opt.width - left - right;
    const double ph = opt.height - top - bottom;

    auto ty = [&](double y) { return opt.log_y ? std::log10(y) : y; };
    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
    double ymin = xmin, ymax = -xmin;
    for (const auto& s : series) {
        for (auto [x, y] : s.points) {
            if (!std::isfinite(x) || !std::isfinite(y) || (opt.log_y && y <= 0.0)) continue;
            xmin = std::min(xmin, x);
            xmax = std::max(xmax, x);
            ymin = std::min(ymin, ty(y));
            ymax = std::max(ymax, ty(y));
        }
    }
    if (!std::isfinite(xmin)) xmin = 0, xmax = 1, ymin = 0, ymax = 1;
    if (xmax == xmin) xmax = xmin + 1;
    if (ymax == ymin) ymin -= 0.5, ymax += 0.5;

    auto px = [&](double x) { return left + (x - xmin) / (xmax - xmin) * pw; };
    auto py = [&](double y) { return top + (1.0 - (ty(y) - ymin) / (ymax - ymin)) * ph; };

    std::ostringstream svg;
    svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << opt.width << "\" height=\"" << opt.height
        << "\" viewBox=\"0 0 " << opt.width << ' ' << opt.height << "\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    if (!opt.title.empty()) {
        svg << "<text x=\"" << fmt(left + pw / 2) << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
            << "font-size=\"15\">" << detail::xml_escape(opt.title) << "</text>\n";
    }

    // Axes and ticks.
    svg << "<g stroke=\"#444\" stroke-width=\"1\" fill=\"none\">\n";
    svg << "<rect x=\"" << fmt(left) << "\" y=\"" << fmt(top) << "\" width=\"" << fmt(pw) << "\" height=\"" << fmt(ph)
        << "\"/>\n</g>\n";
    svg << "<g font-family=\"sans-serif\" font-size=\"11\" fill=\"#222\">\n";
    const int ticks = 5;
    for (int i = 0; i <= ticks; ++i) {
        const double fx = xmin + (xmax - xmin) * i / ticks;
        const double x = left + pw * i / ticks;
        svg << "<line x1=\"" << fmt(x) << "\" y1=\"" << fmt(top + ph) << "\" x2=\"" << fmt(x) << "\" y2=\""
            << fmt(top + ph + 5) << "\" stroke=\"#444\"/>";
        svg << "<text x=\"" << fmt(x) << "\" y=\"" << fmt(top + ph + 18) << "\" text-anchor=\"middle\">"
            << fmt(fx, "%g") << "</text>\n";
        const double fy = ymin + (ymax - ymin) * i / ticks;
        const double y = top + ph - ph * i / ticks;
        const double label = opt.log_y ? std::pow(10.0, fy) : fy;
        svg << "<line x1=\"" << fmt(left - 5) << "\" y1=\"" << fmt(y) << "\" x2=\"" << fmt(left) << "\" y2=\""
            << fmt(y) << "\" stroke=\"#444\"/>";
        svg << "<text x=\"" << fmt(left - 8) << "\" y=\"" << fmt(y + 4) << "\" text-anchor=\"end\">"
            << fmt(label, "%.3g") << "</text>\n";
    }
    svg << "<text x=\"" << fmt(left + pw / 2) << "\" y=\"" << fmt(opt.height - 10.0) << "\" text-anchor=\"middle\">"
        << detail::xml_escape(opt.x_label) << "</text>\n";
    svg << "<text transform=\"translate(16," << fmt(top + ph / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
        << detail::xml_escape(opt.y_label + (opt.log_y ? " (log)" : "")) << "</text>\n";
    svg << "</g>\n";

    for (std::size_t si = 0; si < series.size(); ++si) {
        const auto& s = series[si];
        const char* color = detail::palette(si);
        svg << "<g class=\"series\" data-name=\"" << detail::xml_escape(s.name) << "\" stroke=\"" << color
            << "\" stroke-width=\"1.5\" fill=\"none\">\n";
        std::string pts;
        auto flush = [&] {
            if (!pts.empty()) svg << "<polyline points=\"" << pts << "\"/>\n";
            pts.clear();
        };
        for (auto [x, y] : s.points) {
            if (!std::isfinite(x) || !std::isfinite(y) || (opt.log_y && y <= 0.0)) {
                flush();
                continue;
            }
            if (!pts.empty()) pts += ' ';
            pts += fmt(px(x), "%.3f") + "," + fmt(py(y), "%.3f");
        }
        flush();
        svg << "</g>\n";
        const double ly = top + 14.0 + 18.0 * static_cast<double>(si);
        svg << "<line x1=\"" << fmt(left + pw + 12) << "\" y1=\"" << fmt(ly) << "\" x2=\"" << fmt(left + pw + 32)
            << "\" y2=\"" << fmt(ly) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>";
        svg << "<text x=\"" << fmt(left + pw + 38) << "\" y=\"" << fmt(ly + 4) << "\" font-family=\"sans-serif\" "
            << "font-size=\"11\">" << detail::xml_escape(s.name) << "</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

}  // namespace lfmix::io

#endif
