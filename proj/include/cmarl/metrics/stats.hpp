#pragma once

#include <cmath>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

namespace cmarl::metrics {

inline double mean(const std::vector<double>& xs) {
    if (xs.empty()) return 0.0;
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

// Sample standard deviation (n - 1).
inline double sample_std(const std::vector<double>& xs) {
    if (xs.size() < 2) return 0.0;
    double m = mean(xs), s = 0.0;
    for (double x : xs) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(xs.size() - 1));
}

inline double t_quantile(double p, double dof) {
    boost::math::students_t dist(dof);
    return boost::math::quantile(dist, p);
}

// Half-width of the two-sided 95% t interval of the mean; 0 for n < 2.
inline double ci95_halfwidth(const std::vector<double>& xs) {
    if (xs.size() < 2) return 0.0;
    const double n = static_cast<double>(xs.size());
    return t_quantile(0.975, n - 1.0) * sample_std(xs) / std::sqrt(n);
}

} // namespace cmarl::metrics
