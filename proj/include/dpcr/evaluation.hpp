#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "dpcr/intervals.hpp"

namespace dpcr {

// Point forecast accuracy over all p x q holdout cells.
double mafe(const Matrix& forecasts, const Matrix& actuals);
// Conventional root of the mean square. The paper's printed display puts
// the root inside the double sum, which collapses to the MAFE; that
// literal variant stays available behind the flag for table-parity runs.
double rmsfe(const Matrix& forecasts, const Matrix& actuals, bool literal = false);
// Coverage probability deviance: |empirical exceedance rate - alpha|.
double cpd(const Matrix& lower, const Matrix& upper, const Matrix& actuals, double alpha = 0.2);
// Mean interval score: width plus 2/alpha times the miss distances.
double interval_score(const Matrix& lower, const Matrix& upper, const Matrix& actuals,
                      double alpha = 0.2);

struct SixNumberSummary {
    double min = 0, q1 = 0, median = 0, mean = 0, q3 = 0, max = 0;
};

// min / quartiles / median / mean / max, quartiles by linear interpolation
// of order statistics.
SixNumberSummary summarize(const std::vector<double>& values);

struct EvaluationOptions {
    Method method = Method::lee_carter;
    bool centering = true;
    int holdout = 30;
    int horizon = 1;
    bool with_intervals = true;
    double alpha = 0.2;
    int B = 1000;
    std::uint64_t seed = 1;
    double bandwidth = 0.0;  // <= 0: plug-in
    double threshold = 0.85;
    bool literal_rmsfe = false;
};

struct WindowForecast {
    int target_year = 0;
    Vector forecast;  // rate curves
    Vector actual;
    Vector lower, upper;  // empty when intervals were not requested
};

struct WindowResults {
    std::vector<WindowForecast> windows;
    int failures = 0;
    Matrix forecasts, actuals, lower, upper;  // p x (usable windows)
};

// Expanding-window protocol: window w fits on the first n - holdout + w - 1
// years and forecasts h steps ahead; windows whose target falls outside the
// sample are skipped, so h = 1 yields exactly `holdout` pairs. Windows run
// in parallel under the DPCR_THREADS budget; failed fits are counted and
// skipped.
WindowResults expanding_window(const MortalityDataset& ds, Sex sex, PcaMode mode,
                               const EvaluationOptions& opts,
                               const SmoothedCurveSet* presmoothed = nullptr);

struct SeriesCriteria {
    std::string label;
    PcaMode mode = PcaMode::static_pca;
    int windows_used = 0;
    int failures = 0;
    double mafe = 0, rmsfe = 0, interval_score = 0, cpd = 0;
    std::vector<double> window_mafe;  // per-window mean absolute error
};

struct EvaluationReport {
    EvaluationOptions opts;
    Sex sex = Sex::female;
    std::vector<SeriesCriteria> entries;  // one per (dataset, mode)

    std::vector<double> criterion_values(const std::string& criterion, PcaMode mode) const;
    SixNumberSummary summary(const std::string& criterion, PcaMode mode) const;
};

// Evaluate every dataset under both the dynamic and static decomposition.
EvaluationReport evaluate_datasets(
    const std::vector<std::pair<std::string, MortalityDataset>>& data, Sex sex,
    const EvaluationOptions& opts);

// Summary-statistic rows by criterion x mode columns, values scaled by 100.
void write_report_csv(std::ostream& out, const EvaluationReport& report);

}  // namespace dpcr
