#pragma once

#include <cstdint>
#include <vector>

#include "dpcr/forecasters.hpp"

namespace dpcr {

struct PredictionInterval {
    double level = 0.8;  // 1 - alpha
    std::vector<int> years;
    Matrix lower_rate;  // p x h
    Matrix upper_rate;
    Matrix lower_improvement;
    Matrix upper_improvement;
    int samples_B = 0;
    std::uint64_t seed = 0;
    int clamped = 0;  // bootstrap improvements at or above 2
};

// In-sample h-step score forecast errors xi_{t,h,k} = beta_{t,k} -
// beta_{t|t-h,k} for t = h+1..n, predicted from the single full-series
// model without refitting. One column per retained component.
Matrix insample_score_errors(const ModelFit& fit, int h);

// B bootstrap improvement curves at horizon h: point score forecast plus a
// resampled forecast error per component, plus a whole resampled residual
// curve. Deterministic given the seed.
Matrix bootstrap_paths(const ModelFit& fit, int h, int B, std::uint64_t seed);

// Pointwise quantile interval on the improvement scale, back-transformed
// and horizon-chained to the rate scale. `paths_by_horizon` holds one
// B x ... path matrix (p x B) per horizon 1..h.
PredictionInterval prediction_interval(const std::vector<Matrix>& paths_by_horizon,
                                       double alpha, const Vector& anchor);

// Convenience driver: paths for every horizon 1..h, then the interval.
PredictionInterval bootstrap_interval(const ModelFit& fit, int h, double alpha = 0.2,
                                      int B = 1000, std::uint64_t seed = 1);

}  // namespace dpcr
