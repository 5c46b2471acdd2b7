#pragma once

#include <vector>

#include "dpcr/common.hpp"

namespace dpcr {

enum class KernelKind { bartlett, flat_top };

// Symmetric weight function of order q with bounded support. The flat-top
// kernel is the infinite-order pilot; Bartlett (q = 1) is the final kernel.
struct KernelSpec {
    KernelKind kind = KernelKind::bartlett;
    int order = 1;
    double k1 = 0.5;  // flat-top knots
    double k2 = 1.0;

    static KernelSpec bartlett() { return {KernelKind::bartlett, 1, 0.0, 1.0}; }
    static KernelSpec flat_top(double k1 = 0.5, double k2 = 1.0);

    // Squared integral of the weight function over the real line.
    double squared_integral() const;
    // Largest |t| with nonzero weight.
    double support() const { return kind == KernelKind::bartlett ? 1.0 : k2; }
};

enum class SurfaceKind { variance, longrun };

// Symmetric p x p covariance surface over an age grid.
struct CovarianceSurface {
    std::vector<int> grid;
    Matrix values;
    SurfaceKind kind = SurfaceKind::variance;
    double bandwidth = 0.0;   // only meaningful for longrun
    bool lag_truncated = false;  // bandwidth demanded lags beyond n-1
};

double kernel_weight(const KernelSpec& spec, double t);

// Empirical autocovariance surface at a signed lag, divisor n. When
// `center` is false the sample mean is not subtracted (second-moment
// surfaces for the no-centering model variant).
CovarianceSurface empirical_autocov(const Matrix& z, int lag,
                                    const std::vector<int>& grid, bool center = true);

// Kernel sandwich estimator: sum over lags of W(l/h) times the empirical
// autocovariance, symmetrized as (C + C')/2.
CovarianceSurface longrun_cov(const Matrix& z, double bandwidth, const KernelSpec& spec,
                              const std::vector<int>& grid, bool center = true);

struct PluginBandwidthResult {
    double h_opt = 0.0;
    double c0 = 0.0;
    double h1 = 0.0;  // initial bandwidth actually used
};

// Plug-in bandwidth: flat-top pilot estimates of the covariance and its
// |l|-weighted analogue, then the asymptotic-MSE-optimal constant for the
// Bartlett final kernel. Norms are Hilbert-Schmidt via trapezoidal
// quadrature on the age grid rescaled to [0,1]. Initial bandwidth defaults
// to n^(1/5) when h1 <= 0.
PluginBandwidthResult plugin_bandwidth(const Matrix& z, const std::vector<int>& grid,
                                       const KernelSpec& pilot = KernelSpec::flat_top(),
                                       const KernelSpec& final_kernel = KernelSpec::bartlett(),
                                       double h1 = 0.0, bool center = true);

}  // namespace dpcr
