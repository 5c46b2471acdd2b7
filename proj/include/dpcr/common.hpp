#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace dpcr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double missing_value = std::numeric_limits<double>::quiet_NaN();

inline bool is_missing(double x) { return std::isnan(x); }

// Trapezoidal quadrature weights for an ordered grid. When rescale_to_unit
// is set the grid is mapped affinely onto [0,1] first, so the weights sum
// to one; otherwise they sum to the grid span. A single-point grid gets
// weight one.
inline Vector trapezoid_weights(const std::vector<int>& grid, bool rescale_to_unit = false) {
    const auto p = static_cast<Eigen::Index>(grid.size());
    if (p == 0) throw std::invalid_argument("trapezoid_weights: empty grid");
    if (p == 1) return Vector::Constant(1, 1.0);
    double scale = 1.0;
    if (rescale_to_unit) scale = 1.0 / static_cast<double>(grid.back() - grid.front());
    Vector w(p);
    w(0) = 0.5 * (grid[1] - grid[0]) * scale;
    for (Eigen::Index j = 1; j + 1 < p; ++j)
        w(j) = 0.5 * (grid[j + 1] - grid[j - 1]) * scale;
    w(p - 1) = 0.5 * (grid[p - 1] - grid[p - 2]) * scale;
    return w;
}

// Quantile by linear interpolation of order statistics (R type 7).
inline double quantile_type7(std::vector<double> values, double prob) {
    if (values.empty()) throw std::domain_error("quantile: empty sample");
    if (prob < 0.0 || prob > 1.0) throw std::domain_error("quantile: prob outside [0,1]");
    std::sort(values.begin(), values.end());
    const double idx = prob * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(idx));
    const auto hi = static_cast<std::size_t>(std::ceil(idx));
    const double frac = idx - static_cast<double>(lo);
    return (1.0 - frac) * values[lo] + frac * values[hi];
}

}  // namespace dpcr
