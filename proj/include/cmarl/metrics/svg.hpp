#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "cmarl/error.hpp"
#include "cmarl/metrics/curves.hpp"

namespace cmarl::metrics {

namespace detail {

inline const char* palette(std::size_t k) {
    static const char* colours[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
    return colours[k % 6];
}

inline std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

inline std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '<') out += "&lt;";
        else if (c == '>') out += "&gt;";
        else if (c == '&') out += "&amp;";
        else out += c;
    }
    return out;
}

struct Frame {
    double w = 640, h = 400, left = 60, right = 20, top = 30, bottom = 40;
    double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    double px(double x) const { return left + (x - x0) / (x1 - x0) * (w - left - right); }
    double py(double y) const { return h - bottom - (y - y0) / (y1 - y0) * (h - top - bottom); }
};

inline void axes(std::ofstream& os, const Frame& f, const std::string& title) {
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << f.w << "\" height=\"" << f.h << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << f.w / 2 << "\" y=\"18\" text-anchor=\"middle\" font-size=\"14\">" << escape(title) << "</text>\n";
    os << "<line x1=\"" << f.left << "\" y1=\"" << f.h - f.bottom << "\" x2=\"" << f.w - f.right << "\" y2=\""
       << f.h - f.bottom << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << f.left << "\" y1=\"" << f.top << "\" x2=\"" << f.left << "\" y2=\"" << f.h - f.bottom
       << "\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        double y = f.y0 + (f.y1 - f.y0) * k / 4.0;
        os << "<text x=\"" << f.left - 5 << "\" y=\"" << num(f.py(y) + 4) << "\" text-anchor=\"end\" font-size=\"10\">"
           << num(y) << "</text>\n";
        double x = f.x0 + (f.x1 - f.x0) * k / 4.0;
        os << "<text x=\"" << num(f.px(x)) << "\" y=\"" << f.h - f.bottom + 14
           << "\" text-anchor=\"middle\" font-size=\"10\">" << static_cast<long long>(std::llround(x)) << "</text>\n";
    }
}

} // namespace detail

struct LabelledCurve {
    std::string label;
    Curve curve;
};

// Mean lines with shaded 95% bands.
inline void write_curve_svg(const std::string& path, const std::string& title, const std::vector<LabelledCurve>& curves) {
    std::ofstream os(path);
    if (!os) throw FormatError("cannot write " + path);
    detail::Frame f;
    bool any = false;
    for (const auto& c : curves)
        for (const auto& p : c.curve.points) {
            if (!any) {
                f.x0 = f.x1 = static_cast<double>(p.step);
                f.y0 = p.mean - p.ci95;
                f.y1 = p.mean + p.ci95;
                any = true;
            }
            f.x0 = std::min(f.x0, static_cast<double>(p.step));
            f.x1 = std::max(f.x1, static_cast<double>(p.step));
            f.y0 = std::min(f.y0, p.mean - p.ci95);
            f.y1 = std::max(f.y1, p.mean + p.ci95);
        }
    if (f.x1 <= f.x0) f.x1 = f.x0 + 1;
    if (f.y1 <= f.y0) f.y1 = f.y0 + 1;
    detail::axes(os, f, title);
    for (std::size_t k = 0; k < curves.size(); ++k) {
        const auto& pts = curves[k].curve.points;
        if (pts.empty()) continue;
        std::string band, line;
        for (const auto& p : pts) band += detail::num(f.px(static_cast<double>(p.step))) + "," + detail::num(f.py(p.mean + p.ci95)) + " ";
        for (auto it = pts.rbegin(); it != pts.rend(); ++it)
            band += detail::num(f.px(static_cast<double>(it->step))) + "," + detail::num(f.py(it->mean - it->ci95)) + " ";
        for (const auto& p : pts) line += detail::num(f.px(static_cast<double>(p.step))) + "," + detail::num(f.py(p.mean)) + " ";
        os << "<polygon points=\"" << band << "\" fill=\"" << detail::palette(k) << "\" fill-opacity=\"0.2\"/>\n";
        os << "<polyline points=\"" << line << "\" fill=\"none\" stroke=\"" << detail::palette(k) << "\" stroke-width=\"2\"/>\n";
        os << "<text x=\"" << f.w - f.right - 5 << "\" y=\"" << f.top + 14 * (k + 1) << "\" text-anchor=\"end\" font-size=\"12\" fill=\""
           << detail::palette(k) << "\">" << detail::escape(curves[k].label) << "</text>\n";
    }
    os << "</svg>\n";
}

struct BarGroup {
    std::string label;
    std::vector<double> values;  // one per agent
};

// Grouped bars, one group per label, one bar per agent.
inline void write_bar_svg(const std::string& path, const std::string& title, const std::vector<BarGroup>& groups) {
    std::ofstream os(path);
    if (!os) throw FormatError("cannot write " + path);
    detail::Frame f;
    f.x0 = 0;
    f.x1 = std::max<double>(1.0, static_cast<double>(groups.size()));
    f.y1 = 1e-9;
    std::size_t bars = 1;
    for (const auto& g : groups) {
        bars = std::max(bars, g.values.size());
        for (double v : g.values) f.y1 = std::max(f.y1, v);
    }
    detail::axes(os, f, title);
    const double slot = (f.w - f.left - f.right) / f.x1;
    const double bw = slot * 0.8 / static_cast<double>(bars);
    for (std::size_t k = 0; k < groups.size(); ++k) {
        for (std::size_t i = 0; i < groups[k].values.size(); ++i) {
            double x = f.left + slot * static_cast<double>(k) + slot * 0.1 + bw * static_cast<double>(i);
            double y = f.py(groups[k].values[i]);
            os << "<rect x=\"" << detail::num(x) << "\" y=\"" << detail::num(y) << "\" width=\"" << detail::num(bw * 0.9)
               << "\" height=\"" << detail::num(f.h - f.bottom - y) << "\" fill=\"" << detail::palette(i) << "\"/>\n";
        }
        os << "<text x=\"" << detail::num(f.left + slot * (static_cast<double>(k) + 0.5)) << "\" y=\"" << f.h - 8
           << "\" text-anchor=\"middle\" font-size=\"11\">" << detail::escape(groups[k].label) << "</text>\n";
    }
    os << "</svg>\n";
}

} // namespace cmarl::metrics
