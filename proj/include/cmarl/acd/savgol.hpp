#pragma once

#include <vector>

#include <Eigen/Dense>

#include "cmarl/error.hpp"

namespace cmarl::acd {

inline constexpr int kSgOrder = 10;

// delta = T/2 - (1 - (T/2 mod 2)): odd, roughly half the episode.
inline int sg_window(int T) {
    if (T < 24) throw ConfigError("episode length " + std::to_string(T) + " too short for an order-10 smoothing window");
    const int half = T / 2;
    return half - (1 - half % 2);
}

// Least-squares polynomial smoother. Interior points use the centred window;
// the first and last half-windows are evaluated from the polynomial fitted
// to the first / last full window.
class SavgolFilter {
public:
    SavgolFilter(int window, int order) : window_(window), order_(order) {
        if (window % 2 == 0 || window <= order) throw ConfigError("smoothing window must be odd and exceed the order");
        const int m = window / 2;
        Eigen::MatrixXd a(window, order + 1);
        for (int i = 0; i < window; ++i) {
            double x = static_cast<double>(i - m) / m;
            double p = 1.0;
            for (int k = 0; k <= order; ++k) {
                a(i, k) = p;
                p *= x;
            }
        }
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
        Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(window, order + 1);
        projection_ = q * q.transpose();
    }

    int window() const { return window_; }
    int order() const { return order_; }

    std::vector<double> apply(const std::vector<double>& y) const {
        const int n = static_cast<int>(y.size());
        if (n < window_) throw ConfigError("series shorter than the smoothing window");
        const int m = window_ / 2;
        std::vector<double> out(y.size());
        Eigen::Map<const Eigen::VectorXd> v(y.data(), n);
        for (int t = m; t < n - m; ++t) out[t] = projection_.row(m).dot(v.segment(t - m, window_));
        Eigen::VectorXd head = projection_.topRows(m) * v.head(window_);
        Eigen::VectorXd tail = projection_.bottomRows(m) * v.tail(window_);
        for (int t = 0; t < m; ++t) {
            out[t] = head(t);
            out[n - m + t] = tail(t);
        }
        return out;
    }

private:
    int window_;
    int order_;
    Eigen::MatrixXd projection_;
};

} // namespace cmarl::acd
