#pragma once

#include <optional>
#include <vector>

#include "dpcr/arima.hpp"
#include "dpcr/dataset.hpp"
#include "dpcr/decomposition.hpp"
#include "dpcr/smoothing.hpp"

namespace dpcr {

enum class Method { lee_carter, functional_ts };

struct ModelFit {
    Method method = Method::lee_carter;
    bool centering = true;  // Lee-Carter only
    PcaMode mode = PcaMode::static_pca;
    BasisDecomposition basis;  // K = 1 for Lee-Carter
    std::vector<ArimaModel> score_models;
    bool smoothed = false;
    std::vector<int> ages;
    std::vector<int> forecast_years_from;  // year labels n+1, n+2, ... start here
    Vector anchor;  // last observed raw rate curve
    ImprovementSeries improvements;  // the series the basis was fitted on
};

struct FitOptions {
    PcaMode mode = PcaMode::static_pca;
    double bandwidth = 0.0;  // <= 0 selects the plug-in bandwidth
    double threshold = 0.85;
    AutoArimaOptions arima;
};

// Adapted Lee-Carter on improvement curves: one principal component from
// the variance (static) or long-run covariance (dynamic) with the usual
// identifiability constraints sum b = 1, sum kappa = 0; the no-centering
// variant skips both the mean curve and the kappa centering.
ModelFit fit_lc(const ImprovementSeries& z, bool centering, const FitOptions& opts);

// Functional time-series method: smooth log rates, transform the smoothed
// rates to improvements, decompose with the 85% component rule, fit one
// ARIMA per score series. A precomputed smoothing (covering at least the
// dataset's years) avoids refitting identical per-year smooths inside
// expanding-window loops.
ModelFit fit_fts(const MortalityDataset& ds, Sex sex, const FitOptions& opts,
                 const SmoothedCurveSet* precomputed_smoothing = nullptr);

struct PointForecast {
    std::vector<int> years;
    Matrix improvements;  // p x h forecast improvement curves
    Matrix rates;         // p x h back-transformed, chained from the anchor
    int clamped = 0;      // improvement forecasts at or above 2
};

PointForecast point_forecast(const ModelFit& fit, int h);

// Identifiability normalization shared by fit_lc and its tests: rescale so
// sum b = 1, then center kappa, absorbing the shift into the mean curve.
void normalize_lc(Vector& a, Vector& b, Vector& kappa);

}  // namespace dpcr
