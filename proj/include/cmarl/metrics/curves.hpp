#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "cmarl/error.hpp"
#include "cmarl/metrics/stats.hpp"

namespace cmarl::metrics {

struct SeriesPoint {
    std::int64_t step = 0;
    double value = 0.0;
};
using Series = std::vector<SeriesPoint>;

struct CurvePoint {
    std::int64_t step = 0;
    double mean = 0.0;
    double ci95 = 0.0;
    double min = 0.0;
    double max = 0.0;
};

struct Curve {
    std::vector<CurvePoint> points;
    std::vector<std::string> warnings;
};

// Mean and t-interval across seeds at each shared evaluation step.
inline Curve aggregate_curves(const std::vector<Series>& per_seed) {
    if (per_seed.empty()) throw UsageError("no logs to aggregate");
    Curve out;
    if (per_seed.size() == 1) out.warnings.push_back("single seed: confidence interval reported as 0");
    const std::size_t n = per_seed.front().size();
    for (const auto& s : per_seed) {
        if (s.size() != n) throw ConfigError("logs have different numbers of evaluation points");
        for (std::size_t k = 0; k < n; ++k)
            if (s[k].step != per_seed.front()[k].step) throw ConfigError("logs do not share evaluation steps");
    }
    for (std::size_t k = 0; k < n; ++k) {
        std::vector<double> xs;
        for (const auto& s : per_seed) xs.push_back(s[k].value);
        CurvePoint p;
        p.step = per_seed.front()[k].step;
        p.mean = mean(xs);
        p.ci95 = ci95_halfwidth(xs);
        p.min = *std::min_element(xs.begin(), xs.end());
        p.max = *std::max_element(xs.begin(), xs.end());
        out.points.push_back(p);
    }
    return out;
}

inline void write_curve_csv(const std::string& path, const std::string& label, const Curve& c, bool append = false) {
    std::ofstream os(path, append ? std::ios::app : std::ios::trunc);
    if (!os) throw FormatError("cannot write " + path);
    if (!append) os << "series,step,mean,ci95,min,max\n";
    char buf[192];
    for (const auto& p : c.points) {
        std::snprintf(buf, sizeof buf, ",%lld,%.10g,%.10g,%.10g,%.10g\n", static_cast<long long>(p.step), p.mean, p.ci95,
                      p.min, p.max);
        os << label << buf;
    }
}

} // namespace cmarl::metrics
