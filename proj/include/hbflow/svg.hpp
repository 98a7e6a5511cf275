#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace hbflow {

// Minimal static SVG line plots. CSV is the authoritative output; these are
// quick-look renderings with no plotting dependency.

struct SvgSeries {
    std::string label;
    std::vector<double> x, y;
};

namespace detail {

inline const char* svg_color(std::size_t i) {
    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
    return palette[i % 8];
}

}  // namespace detail

inline void write_svg_lines(const std::string& path, const std::string& title,
                            const std::vector<SvgSeries>& series, bool log_x = false,
                            bool log_y = false, std::uint64_t manifest_hash = 0) {
    const double W = 720, H = 480, ml = 70, mr = 160, mt = 40, mb = 50;
    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
    double ymin = xmin, ymax = -xmin;
    auto tx = [log_x](double v) { return log_x ? std::log10(v) : v; };
    auto ty = [log_y](double v) { return log_y ? std::log10(v) : v; };
    for (const auto& s : series) {
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (log_x && s.x[i] <= 0.0) continue;
            if (log_y && s.y[i] <= 0.0) continue;
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
            xmin = std::min(xmin, tx(s.x[i]));
            xmax = std::max(xmax, tx(s.x[i]));
            ymin = std::min(ymin, ty(s.y[i]));
            ymax = std::max(ymax, ty(s.y[i]));
        }
    }
    if (!(xmin < xmax)) { xmin -= 0.5; xmax += 0.5; }
    if (!(ymin < ymax)) { ymin -= 0.5; ymax += 0.5; }
    const double px = (W - ml - mr) / (xmax - xmin);
    const double py = (H - mt - mb) / (ymax - ymin);

    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path);
    os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H
       << "'>\n";
    os << "<!-- manifest " << std::hex << manifest_hash << std::dec << " -->\n";
    os << "<rect width='100%' height='100%' fill='white'/>\n";
    os << "<text x='" << W / 2 << "' y='24' text-anchor='middle' font-size='16'>"
       << title << "</text>\n";
    os << "<rect x='" << ml << "' y='" << mt << "' width='" << W - ml - mr
       << "' height='" << H - mt - mb << "' fill='none' stroke='#333'/>\n";
    // Corner tick labels only; enough to read scales off the plot.
    auto fmt = [](double v) {
        char b[32];
        std::snprintf(b, sizeof(b), "%.3g", v);
        return std::string(b);
    };
    auto lab = [&](double v, bool log) { return (log ? "1e" + fmt(v) : fmt(v)); };
    os << "<text x='" << ml << "' y='" << H - mb + 18 << "' font-size='11'>"
       << lab(xmin, log_x) << "</text>\n";
    os << "<text x='" << W - mr << "' y='" << H - mb + 18
       << "' text-anchor='end' font-size='11'>" << lab(xmax, log_x) << "</text>\n";
    os << "<text x='" << ml - 6 << "' y='" << H - mb << "' text-anchor='end' font-size='11'>"
       << lab(ymin, log_y) << "</text>\n";
    os << "<text x='" << ml - 6 << "' y='" << mt + 12 << "' text-anchor='end' font-size='11'>"
       << lab(ymax, log_y) << "</text>\n";

    for (std::size_t si = 0; si < series.size(); ++si) {
        const auto& s = series[si];
        os << "<polyline fill='none' stroke='" << detail::svg_color(si)
           << "' stroke-width='1.5' points='";
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (log_x && s.x[i] <= 0.0) continue;
            if (log_y && s.y[i] <= 0.0) continue;
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
            const double X = ml + (tx(s.x[i]) - xmin) * px;
            const double Y = H - mb - (ty(s.y[i]) - ymin) * py;
            os << X << ',' << Y << ' ';
        }
        os << "'/>\n";
        os << "<text x='" << W - mr + 10 << "' y='" << mt + 16 + 18 * si
           << "' font-size='12' fill='" << detail::svg_color(si) << "'>" << s.label
           << "</text>\n";
    }
    os << "</svg>\n";
}

}  // namespace hbflow
