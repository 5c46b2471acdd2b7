#pragma once

#include <vector>

#include "dpcr/common.hpp"
#include "dpcr/dataset.hpp"

namespace dpcr {

// Smoothed log-mortality curves with the heteroskedastic noise estimate
// and the per-year smoothing parameter that produced them.
struct SmoothedCurveSet {
    std::vector<int> ages;
    std::vector<int> years;
    Matrix log_rates;  // f_t(x_j), non-decreasing at and above the monotone age
    Matrix sigma;      // noise standard deviations
    Vector lambda;     // one per year
};

struct SolverError : std::runtime_error {
    SolverError(const std::string& msg, Vector iterate)
        : std::runtime_error(msg), last_iterate(std::move(iterate)) {}
    Vector last_iterate;
};

// sigma_t(x_j) = 1 / (m E): reciprocal of the expected death count.
// Missing or non-positive inputs yield missing cells.
Matrix estimate_noise_sd(const Matrix& rates, const Matrix& exposures);

struct SmoothOptions {
    double lambda = 1.0;
    int monotone_from_index = -1;  // -1 disables the monotone projection
    double tol = 1e-8;
    int max_iter = 500;
};

// Minimizer of sum_j w_j |y_j - theta_j| + lambda sum |second difference|,
// via iteratively reweighted least squares on the small fitting grid,
// then projected to be non-decreasing from `monotone_from_index` on.
// Cells with zero weight (or missing y) are interpolated by the fit.
Vector smooth_curve(const Vector& y, const Vector& weights, const SmoothOptions& opts);

struct LambdaGrid {
    double log10_min = -3.0;
    double log10_max = 2.0;
    int count = 11;
    int folds = 5;
};

// K-fold cross-validation over a logarithmic grid, minimizing the weighted
// absolute held-out error. Ties and degenerate grids resolve to the
// smallest lambda.
double select_lambda(const Vector& y, const Vector& weights, const LambdaGrid& grid = {},
                     int monotone_from_index = -1);

// Full per-year smoothing pass for one sex: noise estimate, per-year
// lambda by cross-validation, monotone constraint at and above
// `monotone_age`.
SmoothedCurveSet smooth_dataset(const MortalityDataset& ds, Sex sex, int monotone_age = 65);

// Weighted pool-adjacent-violators projection to a non-decreasing sequence.
Vector isotonic_non_decreasing(const Vector& v, const Vector& weights);

}  // namespace dpcr
