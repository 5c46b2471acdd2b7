#pragma once

// Shared test fixtures: seeded series generators and the independent
// oracles the implementation is checked against. Everything here is
// deliberately naive and self-contained.

#include <cmath>
#include <vector>

#include "dpcr/common.hpp"
#include "dpcr/random.hpp"

namespace testsupport {

using dpcr::Matrix;
using dpcr::Rng;
using dpcr::Vector;

inline Vector ar1_series(int n, double phi, std::uint64_t seed, double mean = 0.0,
                         double sd_innov = 1.0) {
    Rng rng(seed);
    Vector y(n);
    const double sd0 = sd_innov / std::sqrt(1.0 - phi * phi);
    y(0) = mean + sd0 * rng.normal();
    for (int t = 1; t < n; ++t)
        y(t) = mean + phi * (y(t - 1) - mean) + sd_innov * rng.normal();
    return y;
}

inline Vector ma1_series(int n, double theta, std::uint64_t seed) {
    Rng rng(seed);
    Vector y(n);
    double prev = rng.normal();
    for (int t = 0; t < n; ++t) {
        const double e = rng.normal();
        y(t) = e + theta * prev;
        prev = e;
    }
    return y;
}

inline Vector white_noise(int n, std::uint64_t seed, double mean = 0.0, double sd = 1.0) {
    Rng rng(seed);
    Vector y(n);
    for (int t = 0; t < n; ++t) y(t) = mean + sd * rng.normal();
    return y;
}

inline Vector random_walk(int n, std::uint64_t seed, double drift = 0.0) {
    Rng rng(seed);
    Vector y(n);
    double acc = 0.0;
    for (int t = 0; t < n; ++t) {
        acc += drift + rng.normal();
        y(t) = acc;
    }
    return y;
}

inline Matrix random_matrix(int rows, int cols, std::uint64_t seed, double scale = 1.0) {
    Rng rng(seed);
    Matrix m(rows, cols);
    for (int j = 0; j < cols; ++j)
        for (int i = 0; i < rows; ++i) m(i, j) = scale * rng.normal();
    return m;
}

inline Matrix random_symmetric(int p, std::uint64_t seed) {
    const Matrix a = random_matrix(p, p, seed);
    return 0.5 * (a + a.transpose());
}

// Textbook Bartlett-kernel HAC estimator for a scalar series, written the
// long way: sum over lags of the triangular weight times the divisor-n
// autocovariance. Independent of the library's estimator.
inline double hac_bartlett_oracle(const Vector& y, double h) {
    const int n = static_cast<int>(y.size());
    const double mean = y.mean();
    double total = 0.0;
    for (int lag = -(n - 1); lag <= n - 1; ++lag) {
        const double w = std::abs(lag) <= h ? 1.0 - std::abs(lag) / h : 0.0;
        if (w == 0.0) continue;
        double acov = 0.0;
        const int l = std::abs(lag);
        for (int t = 0; t + l < n; ++t) acov += (y(t) - mean) * (y(t + l) - mean);
        total += w * acov / n;
    }
    return total;
}

// Brute-force symmetric eigen-decomposition by cyclic Jacobi rotations.
// Slow and simple; used to cross-check the production decomposition.
struct JacobiEigen {
    Vector values;
    Matrix vectors;  // columns, matching the sorted values (descending)
};

inline JacobiEigen jacobi_eigen_oracle(Matrix a) {
    const int p = static_cast<int>(a.rows());
    Matrix v = Matrix::Identity(p, p);
    for (int sweep = 0; sweep < 200; ++sweep) {
        double off = 0.0;
        for (int i = 0; i < p; ++i)
            for (int j = i + 1; j < p; ++j) off += a(i, j) * a(i, j);
        if (off < 1e-26) break;
        for (int i = 0; i < p; ++i) {
            for (int j = i + 1; j < p; ++j) {
                if (std::abs(a(i, j)) < 1e-300) continue;
                const double theta = 0.5 * std::atan2(2.0 * a(i, j), a(i, i) - a(j, j));
                const double c = std::cos(theta), s = std::sin(theta);
                for (int k = 0; k < p; ++k) {
                    const double aik = a(i, k), ajk = a(j, k);
                    a(i, k) = c * aik + s * ajk;
                    a(j, k) = -s * aik + c * ajk;
                }
                for (int k = 0; k < p; ++k) {
                    const double aki = a(k, i), akj = a(k, j);
                    a(k, i) = c * aki + s * akj;
                    a(k, j) = -s * aki + c * akj;
                }
                for (int k = 0; k < p; ++k) {
                    const double vki = v(k, i), vkj = v(k, j);
                    v(k, i) = c * vki + s * vkj;
                    v(k, j) = -s * vki + c * vkj;
                }
            }
        }
    }
    std::vector<int> order(p);
    for (int i = 0; i < p; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](int x, int y) { return a(x, x) > a(y, y); });
    JacobiEigen out;
    out.values.resize(p);
    out.vectors.resize(p, p);
    for (int k = 0; k < p; ++k) {
        out.values(k) = a(order[k], order[k]);
        out.vectors.col(k) = v.col(order[k]);
    }
    return out;
}

// Best weighted-L1 straight line by exhaustive search over all lines
// through two data points (an optimal L1 line interpolates at least two
// points on small generic grids).
inline std::pair<double, double> best_l1_line_oracle(const Vector& x, const Vector& y,
                                                     const Vector& w) {
    const int n = static_cast<int>(x.size());
    auto objective = [&](double a, double b) {
        double s = 0.0;
        for (int i = 0; i < n; ++i) s += w(i) * std::abs(y(i) - a - b * x(i));
        return s;
    };
    double best_a = y(0), best_b = 0.0;
    double best = objective(best_a, best_b);
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            if (x(i) == x(j)) continue;
            const double b = (y(j) - y(i)) / (x(j) - x(i));
            const double a = y(i) - b * x(i);
            const double val = objective(a, b);
            if (val < best) {
                best = val;
                best_a = a;
                best_b = b;
            }
        }
    }
    return {best_a, best_b};
}

}  // namespace testsupport
