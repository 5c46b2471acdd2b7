#include "dpcr/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <ostream>

#include "dpcr/parallel.hpp"
#include "dpcr/random.hpp"

namespace dpcr {

namespace {

void check_shapes(const Matrix& a, const Matrix& b, const char* who) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw std::domain_error(std::string(who) + ": shape mismatch");
    if (a.size() == 0) throw std::domain_error(std::string(who) + ": empty input");
}

}  // namespace

double mafe(const Matrix& forecasts, const Matrix& actuals) {
    check_shapes(forecasts, actuals, "mafe");
    double sum = 0.0;
    std::size_t count = 0;
    for (Eigen::Index j = 0; j < forecasts.cols(); ++j)
        for (Eigen::Index i = 0; i < forecasts.rows(); ++i) {
            if (is_missing(actuals(i, j)) || is_missing(forecasts(i, j))) continue;
            sum += std::abs(actuals(i, j) - forecasts(i, j));
            ++count;
        }
    if (count == 0) throw std::domain_error("mafe: no usable cells");
    return sum / static_cast<double>(count);
}

double rmsfe(const Matrix& forecasts, const Matrix& actuals, bool literal) {
    check_shapes(forecasts, actuals, "rmsfe");
    if (literal) return mafe(forecasts, actuals);  // sqrt inside the sum
    double sum = 0.0;
    std::size_t count = 0;
    for (Eigen::Index j = 0; j < forecasts.cols(); ++j)
        for (Eigen::Index i = 0; i < forecasts.rows(); ++i) {
            if (is_missing(actuals(i, j)) || is_missing(forecasts(i, j))) continue;
            const double e = actuals(i, j) - forecasts(i, j);
            sum += e * e;
            ++count;
        }
    if (count == 0) throw std::domain_error("rmsfe: no usable cells");
    return std::sqrt(sum / static_cast<double>(count));
}

double cpd(const Matrix& lower, const Matrix& upper, const Matrix& actuals, double alpha) {
    check_shapes(lower, actuals, "cpd");
    check_shapes(upper, actuals, "cpd");
    if (alpha <= 0.0 || alpha >= 1.0) throw std::domain_error("cpd: alpha outside (0,1)");
    std::size_t outside = 0, count = 0;
    for (Eigen::Index j = 0; j < actuals.cols(); ++j)
        for (Eigen::Index i = 0; i < actuals.rows(); ++i) {
            if (is_missing(actuals(i, j))) continue;
            if (actuals(i, j) < lower(i, j) || actuals(i, j) > upper(i, j)) ++outside;
            ++count;
        }
    if (count == 0) throw std::domain_error("cpd: no usable cells");
    return std::abs(static_cast<double>(outside) / static_cast<double>(count) - alpha);
}

double interval_score(const Matrix& lower, const Matrix& upper, const Matrix& actuals,
                      double alpha) {
    check_shapes(lower, actuals, "interval_score");
    check_shapes(upper, actuals, "interval_score");
    double sum = 0.0;
    std::size_t count = 0;
    for (Eigen::Index j = 0; j < actuals.cols(); ++j)
        for (Eigen::Index i = 0; i < actuals.rows(); ++i) {
            const double m = actuals(i, j);
            if (is_missing(m)) continue;
            const double l = lower(i, j);
            const double u = upper(i, j);
            double s = u - l;
            if (m < l) s += 2.0 / alpha * (l - m);
            if (m > u) s += 2.0 / alpha * (m - u);
            sum += s;
            ++count;
        }
    if (count == 0) throw std::domain_error("interval_score: no usable cells");
    return sum / static_cast<double>(count);
}

SixNumberSummary summarize(const std::vector<double>& values) {
    if (values.empty()) throw std::domain_error("summarize: empty input");
    SixNumberSummary s;
    s.min = *std::min_element(values.begin(), values.end());
    s.max = *std::max_element(values.begin(), values.end());
    s.q1 = quantile_type7(values, 0.25);
    s.median = quantile_type7(values, 0.5);
    s.q3 = quantile_type7(values, 0.75);
    s.mean = 0.0;
    for (double v : values) s.mean += v;
    s.mean /= static_cast<double>(values.size());
    return s;
}

WindowResults expanding_window(const MortalityDataset& ds, Sex sex, PcaMode mode,
                               const EvaluationOptions& opts,
                               const SmoothedCurveSet* presmoothed) {
    const auto n = static_cast<int>(ds.n_years());
    const auto p = static_cast<Eigen::Index>(ds.n_ages());
    if (n <= opts.holdout + 15)
        throw std::domain_error("expanding_window: dataset needs more than holdout + 15 years");
    if (opts.horizon < 1) throw std::domain_error("expanding_window: horizon must be at least 1");

    // FTS refits per window, but each year smooths independently: one
    // precomputed pass serves every window.
    SmoothedCurveSet local_smoothing;
    const SmoothedCurveSet* smoothing = presmoothed;
    if (opts.method == Method::functional_ts && !smoothing) {
        local_smoothing = smooth_dataset(ds, sex);
        smoothing = &local_smoothing;
    }

    struct Slot {
        bool used = false;
        bool failed = false;
        WindowForecast wf;
    };
    std::vector<Slot> slots(static_cast<std::size_t>(opts.holdout));

    parallel_for(static_cast<std::size_t>(opts.holdout), [&](std::size_t widx) {
        const int w = static_cast<int>(widx) + 1;
        const int train_count = n - opts.holdout + w - 1;
        const int target = train_count + opts.horizon - 1;
        if (target >= n) return;  // no actual value to compare against
        Slot& slot = slots[widx];
        try {
            const MortalityDataset train = ds.slice_years(0, static_cast<std::size_t>(train_count));
            FitOptions fopts;
            fopts.mode = mode;
            fopts.bandwidth = opts.bandwidth;
            fopts.threshold = opts.threshold;
            ModelFit fit;
            if (opts.method == Method::lee_carter) {
                fit = fit_lc(improvement_transform(train, sex), opts.centering, fopts);
            } else {
                fit = fit_fts(train, sex, fopts, smoothing);
            }
            const PointForecast pf = point_forecast(fit, opts.horizon);
            slot.wf.target_year = ds.years[static_cast<std::size_t>(target)];
            slot.wf.forecast = pf.rates.col(opts.horizon - 1);
            slot.wf.actual = ds.rate(sex).col(target);
            if (opts.with_intervals) {
                const PredictionInterval pi =
                    bootstrap_interval(fit, opts.horizon, opts.alpha, opts.B,
                                       Rng::mix(opts.seed, static_cast<std::uint64_t>(w)));
                slot.wf.lower = pi.lower_rate.col(opts.horizon - 1);
                slot.wf.upper = pi.upper_rate.col(opts.horizon - 1);
            }
            slot.used = true;
        } catch (const std::exception&) {
            slot.failed = true;
        }
    });

    WindowResults res;
    int usable = 0;
    for (const auto& s : slots) {
        if (s.failed) ++res.failures;
        if (s.used) ++usable;
    }
    res.forecasts.resize(p, usable);
    res.actuals.resize(p, usable);
    if (opts.with_intervals) {
        res.lower.resize(p, usable);
        res.upper.resize(p, usable);
    }
    Eigen::Index col = 0;
    for (auto& s : slots) {
        if (!s.used) continue;
        res.forecasts.col(col) = s.wf.forecast;
        res.actuals.col(col) = s.wf.actual;
        if (opts.with_intervals) {
            res.lower.col(col) = s.wf.lower;
            res.upper.col(col) = s.wf.upper;
        }
        res.windows.push_back(std::move(s.wf));
        ++col;
    }
    return res;
}

std::vector<double> EvaluationReport::criterion_values(const std::string& criterion,
                                                       PcaMode mode) const {
    std::vector<double> values;
    for (const auto& e : entries) {
        if (e.mode != mode) continue;
        if (criterion == "mafe") values.push_back(e.mafe);
        else if (criterion == "rmsfe") values.push_back(e.rmsfe);
        else if (criterion == "score") values.push_back(e.interval_score);
        else if (criterion == "cpd") values.push_back(e.cpd);
        else throw std::invalid_argument("unknown criterion " + criterion);
    }
    return values;
}

SixNumberSummary EvaluationReport::summary(const std::string& criterion, PcaMode mode) const {
    return summarize(criterion_values(criterion, mode));
}

EvaluationReport evaluate_datasets(
    const std::vector<std::pair<std::string, MortalityDataset>>& data, Sex sex,
    const EvaluationOptions& opts) {
    EvaluationReport report;
    report.opts = opts;
    report.sex = sex;
    for (const auto& [label, ds] : data) {
        // smoothing is shared between the two modes
        SmoothedCurveSet smoothing;
        const SmoothedCurveSet* presmoothed = nullptr;
        if (opts.method == Method::functional_ts) {
            smoothing = smooth_dataset(ds, sex);
            presmoothed = &smoothing;
        }
        for (const PcaMode mode : {PcaMode::dynamic_pca, PcaMode::static_pca}) {
            const WindowResults wr = expanding_window(ds, sex, mode, opts, presmoothed);
            SeriesCriteria sc;
            sc.label = label;
            sc.mode = mode;
            sc.windows_used = static_cast<int>(wr.windows.size());
            sc.failures = wr.failures;
            sc.mafe = mafe(wr.forecasts, wr.actuals);
            sc.rmsfe = rmsfe(wr.forecasts, wr.actuals, opts.literal_rmsfe);
            if (opts.with_intervals) {
                sc.cpd = cpd(wr.lower, wr.upper, wr.actuals, opts.alpha);
                sc.interval_score = interval_score(wr.lower, wr.upper, wr.actuals, opts.alpha);
            }
            for (Eigen::Index j = 0; j < wr.forecasts.cols(); ++j)
                sc.window_mafe.push_back(
                    mafe(wr.forecasts.col(j), wr.actuals.col(j)));
            report.entries.push_back(std::move(sc));
        }
    }
    return report;
}

void write_report_csv(std::ostream& out, const EvaluationReport& report) {
    const std::vector<std::string> criteria = {"mafe", "rmsfe", "score", "cpd"};
    out << "statistic";
    for (const auto& c : criteria)
        for (const char* m : {"dpca", "pca"}) out << ',' << c << "_x100_" << m;
    out << '\n';

    const std::vector<std::string> stats = {"Min.", "1st Qu.", "Median", "Mean", "3rd Qu.", "Max."};
    std::vector<std::vector<double>> cells(stats.size());
    for (const auto& c : criteria) {
        for (const PcaMode mode : {PcaMode::dynamic_pca, PcaMode::static_pca}) {
            const SixNumberSummary s = report.summary(c, mode);
            const double row[6] = {s.min, s.q1, s.median, s.mean, s.q3, s.max};
            for (std::size_t r = 0; r < stats.size(); ++r) cells[r].push_back(100.0 * row[r]);
        }
    }
    char buf[32];
    for (std::size_t r = 0; r < stats.size(); ++r) {
        out << stats[r];
        for (double v : cells[r]) {
            std::snprintf(buf, sizeof buf, "%.17g", v);
            out << ',' << buf;
        }
        out << '\n';
    }
}

}  // namespace dpcr
