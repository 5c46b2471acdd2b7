#include "dpcr/longrun.hpp"

#include <cmath>

namespace dpcr {

KernelSpec KernelSpec::flat_top(double k1, double k2) {
    if (!(k2 > k1 && k1 > 0.0)) throw std::invalid_argument("flat_top requires k2 > k1 > 0");
    KernelSpec s;
    s.kind = KernelKind::flat_top;
    s.order = 0;  // infinite-order kernel; the order field is unused for flat-top
    s.k1 = k1;
    s.k2 = k2;
    return s;
}

double KernelSpec::squared_integral() const {
    if (kind == KernelKind::bartlett) return 2.0 / 3.0;
    // flat part plus two linear tapers
    return 2.0 * k1 + 2.0 * (k2 - k1) / 3.0;
}

double kernel_weight(const KernelSpec& spec, double t) {
    const double a = std::abs(t);
    if (spec.kind == KernelKind::bartlett) return a <= 1.0 ? 1.0 - a : 0.0;
    if (a < spec.k1) return 1.0;
    if (a <= spec.k2) return (spec.k2 - a) / (spec.k2 - spec.k1);
    return 0.0;
}

CovarianceSurface empirical_autocov(const Matrix& z, int lag, const std::vector<int>& grid,
                                    bool center) {
    const Eigen::Index n = z.cols();
    const Eigen::Index p = z.rows();
    if (n < 2) throw std::domain_error("empirical_autocov: need at least 2 years");
    if (std::abs(lag) >= n) throw std::domain_error("empirical_autocov: |lag| must be below n");
    if (static_cast<Eigen::Index>(grid.size()) != p)
        throw std::invalid_argument("empirical_autocov: grid size mismatch");

    Matrix zc = z;
    if (center) zc.colwise() -= z.rowwise().mean();

    // gamma_l(x,u) = (1/n) sum_j zc_j(x) zc_{j+l}(u); for l < 0 the sum runs
    // over j = 1-l..n, which equals the transpose of the positive-lag sum.
    const int l = std::abs(lag);
    Matrix g = zc.leftCols(n - l) * zc.rightCols(n - l).transpose() / static_cast<double>(n);
    if (lag < 0) g.transposeInPlace();

    CovarianceSurface s;
    s.grid = grid;
    s.values = std::move(g);
    s.kind = lag == 0 ? SurfaceKind::variance : SurfaceKind::longrun;
    return s;
}

namespace {

// Weighted lag sum shared by the estimator and the plug-in pilots:
// sum_l W(l/h) |l|^deriv_order gamma_l.
Matrix kernel_lag_sum(const Matrix& zc, double h, const KernelSpec& spec, int deriv_order,
                      bool* truncated) {
    const Eigen::Index n = zc.cols();
    const double support = spec.support() * h;
    int max_lag = static_cast<int>(std::floor(support));
    if (kernel_weight(spec, max_lag / h) == 0.0 && max_lag > 0) --max_lag;
    if (max_lag > static_cast<int>(n) - 1) {
        max_lag = static_cast<int>(n) - 1;
        if (truncated) *truncated = true;
    }

    Matrix acc = Matrix::Zero(zc.rows(), zc.rows());
    if (deriv_order == 0) acc = zc * zc.transpose() / static_cast<double>(n);
    for (int l = 1; l <= max_lag; ++l) {
        const double w = kernel_weight(spec, static_cast<double>(l) / h);
        if (w == 0.0) continue;
        const double scale = w * std::pow(static_cast<double>(l), deriv_order);
        const Matrix g =
            zc.leftCols(n - l) * zc.rightCols(n - l).transpose() / static_cast<double>(n);
        // gamma_{-l}(x,u) = gamma_l(u,x)
        acc.noalias() += scale * (g + g.transpose());
    }
    return acc;
}

}  // namespace

CovarianceSurface longrun_cov(const Matrix& z, double bandwidth, const KernelSpec& spec,
                              const std::vector<int>& grid, bool center) {
    if (!(bandwidth > 0.0)) throw std::domain_error("longrun_cov: bandwidth must be positive");
    const Eigen::Index n = z.cols();
    if (n < 3) throw std::domain_error("longrun_cov: need at least 3 years");
    if (static_cast<Eigen::Index>(grid.size()) != z.rows())
        throw std::invalid_argument("longrun_cov: grid size mismatch");

    Matrix zc = z;
    if (center) zc.colwise() -= z.rowwise().mean();

    CovarianceSurface s;
    s.grid = grid;
    s.kind = SurfaceKind::longrun;
    s.bandwidth = bandwidth;
    Matrix c = kernel_lag_sum(zc, bandwidth, spec, 0, &s.lag_truncated);
    s.values = 0.5 * (c + c.transpose());
    return s;
}

PluginBandwidthResult plugin_bandwidth(const Matrix& z, const std::vector<int>& grid,
                                       const KernelSpec& pilot, const KernelSpec& final_kernel,
                                       double h1, bool center) {
    const Eigen::Index n = z.cols();
    if (n < 10) throw std::domain_error("plugin_bandwidth: need at least 10 years");
    if (static_cast<Eigen::Index>(grid.size()) != z.rows())
        throw std::invalid_argument("plugin_bandwidth: grid size mismatch");

    PluginBandwidthResult res;
    res.h1 = h1 > 0.0 ? h1 : std::pow(static_cast<double>(n), 0.2);

    Matrix zc = z;
    if (center) zc.colwise() -= z.rowwise().mean();

    const int q = final_kernel.kind == KernelKind::bartlett ? 1 : final_kernel.order;
    if (q < 1) throw std::invalid_argument("plugin_bandwidth: final kernel order must be >= 1");

    // Pilot estimates of C and its derivative-order-q analogue.
    const Matrix c0_hat = kernel_lag_sum(zc, res.h1, pilot, 0, nullptr);
    const Matrix cq_hat = kernel_lag_sum(zc, res.h1, pilot, q, nullptr);

    const Vector w = trapezoid_weights(grid, /*rescale_to_unit=*/true);
    auto hs_norm2 = [&w](const Matrix& m) {
        return (w.asDiagonal() * m.cwiseAbs2() * w.asDiagonal()).sum();
    };
    const double norm_cq2 = hs_norm2(cq_hat);
    const double norm_c2 = hs_norm2(c0_hat);
    const double diag_int = w.dot(c0_hat.diagonal());

    if (norm_c2 <= 0.0 || norm_cq2 <= 0.0)
        throw std::domain_error("plugin_bandwidth: degenerate series");

    const double expo = 1.0 / (1.0 + 2.0 * q);
    const double num = std::pow(2.0 * q * norm_cq2, expo);
    const double den =
        std::pow((norm_c2 + diag_int * diag_int) * final_kernel.squared_integral(), expo);
    res.c0 = num / den;
    res.h_opt = res.c0 * std::pow(static_cast<double>(n), expo);
    return res;
}

}  // namespace dpcr
