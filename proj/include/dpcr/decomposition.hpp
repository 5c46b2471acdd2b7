#pragma once

#include <vector>

#include "dpcr/common.hpp"
#include "dpcr/longrun.hpp"

namespace dpcr {

enum class PcaMode { static_pca, dynamic_pca };

// Inner product used for component normalization, score projection and
// residual orthogonality. The functional pathway integrates by trapezoid
// rule over the age grid; the discrete-age (Lee-Carter) pathway uses the
// plain dot product.
struct InnerProduct {
    Vector weights;

    static InnerProduct euclidean(Eigen::Index p) { return {Vector::Ones(p)}; }
    static InnerProduct quadrature(const std::vector<int>& grid) {
        return {trapezoid_weights(grid, /*rescale_to_unit=*/false)};
    }

    double operator()(const Vector& f, const Vector& g) const {
        return (f.array() * g.array() * weights.array()).sum();
    }
};

struct EigenResult {
    Vector eigenvalues;  // all of them, descending, negatives clipped to 0
    Matrix components;   // p x K, unit norm under the inner product
};

// Symmetric eigen-decomposition of a covariance surface viewed as an
// integral operator under the given inner product. Components carry a
// deterministic sign: the entry of largest absolute value is positive.
EigenResult eigen_decompose(const CovarianceSurface& surface, int max_K,
                            const InnerProduct& ip);

// Smallest K whose leading eigenvalues explain at least `threshold` of the
// total over strictly positive eigenvalues.
int select_K(const Vector& eigenvalues, double threshold = 0.85);

// Scores beta_{t,k} = <z_t - mean, component_k> under the inner product.
Matrix project_scores(const Matrix& z, const Vector& mean, const Matrix& components,
                      const InnerProduct& ip);

struct BasisDecomposition {
    Vector mean;
    Matrix components;   // p x K
    Vector eigenvalues;  // full spectrum, descending
    Matrix scores;       // n x K
    Matrix residuals;    // p x n
    PcaMode mode = PcaMode::static_pca;
    double bandwidth = 0.0;  // plug-in or fixed bandwidth (dynamic only)
    int K = 0;
    InnerProduct ip;
};

struct DecomposeOptions {
    PcaMode mode = PcaMode::static_pca;
    double bandwidth = 0.0;  // <= 0 selects the plug-in bandwidth
    double threshold = 0.85;
    int max_K = 0;       // <= 0 means min(n-1, p, 10)
    int force_K = 0;     // > 0 overrides the threshold rule (Lee-Carter uses 1)
    bool center = true;  // subtract the year-mean curve
};

// Full pipeline: mean curve, variance or long-run covariance surface,
// eigen-decomposition, component count, scores and residuals. The
// reconstruction mean + scores * components' + residuals equals the input
// identically.
BasisDecomposition decompose(const Matrix& z, const std::vector<int>& grid,
                             const InnerProduct& ip, const DecomposeOptions& opts);

}  // namespace dpcr
