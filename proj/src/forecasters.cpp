#include "dpcr/forecasters.hpp"

#include <algorithm>
#include <cmath>

namespace dpcr {

void normalize_lc(Vector& a, Vector& b, Vector& kappa) {
    const double c = b.sum();
    if (std::abs(c) < 1e-12)
        throw std::domain_error(
            "lee-carter: component sums to zero, cannot rescale; use the "
            "functional time-series pathway");
    b /= c;
    kappa *= c;
    const double shift = kappa.mean();
    kappa.array() -= shift;
    a += shift * b;
}

ModelFit fit_lc(const ImprovementSeries& z, bool centering, const FitOptions& opts) {
    const Eigen::Index n = z.z.cols();
    if (n < 10) throw std::domain_error("fit_lc: need at least 10 years of improvements");
    if (!z.z.allFinite()) throw std::domain_error("fit_lc: improvement series has missing cells");

    DecomposeOptions dopts;
    dopts.mode = opts.mode;
    dopts.bandwidth = opts.bandwidth;
    dopts.force_K = 1;
    dopts.center = centering;

    // discrete-age pathway: plain dot products
    const InnerProduct ip = InnerProduct::euclidean(z.z.rows());
    BasisDecomposition basis = decompose(z.z, z.ages, ip, dopts);

    Vector a = basis.mean;
    Vector b = basis.components.col(0);
    Vector kappa = basis.scores.col(0);
    if (centering) {
        normalize_lc(a, b, kappa);
    } else {
        // Appendix-B variant: no mean, no kappa centering; rescale only
        const double c = b.sum();
        if (std::abs(c) < 1e-12)
            throw std::domain_error(
                "lee-carter: component sums to zero, cannot rescale; use the "
                "functional time-series pathway");
        b /= c;
        kappa *= c;
    }
    basis.mean = a;
    basis.components.col(0) = b;
    basis.scores.col(0) = kappa;
    basis.residuals = (z.z.colwise() - a) - b * kappa.transpose();

    ModelFit fit;
    fit.method = Method::lee_carter;
    fit.centering = centering;
    fit.mode = opts.mode;
    fit.basis = std::move(basis);
    fit.smoothed = false;
    fit.ages = z.ages;
    fit.anchor = z.anchor;
    fit.improvements = z;
    fit.forecast_years_from = {z.years.back() + 1};
    fit.score_models.push_back(auto_arima(kappa, opts.arima));
    return fit;
}

ModelFit fit_fts(const MortalityDataset& ds, Sex sex, const FitOptions& opts,
                 const SmoothedCurveSet* precomputed_smoothing) {
    if (ds.n_years() < 11) throw std::domain_error("fit_fts: need at least 11 years of rates");

    Matrix smooth_rates(ds.ages.size(), ds.years.size());
    if (precomputed_smoothing) {
        const auto& sm = *precomputed_smoothing;
        if (sm.ages != ds.ages)
            throw std::invalid_argument("fit_fts: precomputed smoothing has a different age grid");
        for (std::size_t j = 0; j < ds.years.size(); ++j) {
            const auto it = std::find(sm.years.begin(), sm.years.end(), ds.years[j]);
            if (it == sm.years.end())
                throw std::invalid_argument("fit_fts: precomputed smoothing misses a year");
            smooth_rates.col(static_cast<Eigen::Index>(j)) =
                sm.log_rates.col(it - sm.years.begin()).array().exp();
        }
    } else {
        const SmoothedCurveSet sm = smooth_dataset(ds, sex);
        smooth_rates = sm.log_rates.array().exp();
    }

    ImprovementSeries z = improvement_transform(ds.ages, ds.years, smooth_rates);
    // forecasts start from the observed rates, not the smoothed ones
    z.anchor = ds.rate(sex).col(static_cast<Eigen::Index>(ds.n_years() - 1));
    if (!z.z.allFinite())
        throw std::domain_error("fit_fts: smoothed improvements still have missing cells");

    DecomposeOptions dopts;
    dopts.mode = opts.mode;
    dopts.bandwidth = opts.bandwidth;
    dopts.threshold = opts.threshold;

    const InnerProduct ip = InnerProduct::quadrature(ds.ages);
    ModelFit fit;
    fit.method = Method::functional_ts;
    fit.mode = opts.mode;
    fit.basis = decompose(z.z, z.ages, ip, dopts);
    fit.smoothed = true;
    fit.ages = z.ages;
    fit.anchor = z.anchor;
    fit.forecast_years_from = {z.years.back() + 1};
    fit.score_models.reserve(fit.basis.K);
    for (int k = 0; k < fit.basis.K; ++k)
        fit.score_models.push_back(auto_arima(fit.basis.scores.col(k), opts.arima));
    fit.improvements = std::move(z);
    return fit;
}

PointForecast point_forecast(const ModelFit& fit, int h) {
    if (h < 1) throw std::invalid_argument("point_forecast: horizon must be at least 1");
    const Eigen::Index p = fit.basis.mean.size();
    const int K = fit.basis.K;

    Matrix score_fc(h, K);
    for (int k = 0; k < K; ++k) {
        const ArimaForecast fc = forecast(fit.score_models[k], fit.basis.scores.col(k), h);
        score_fc.col(k) = fc.point;
    }

    PointForecast out;
    out.improvements.resize(p, h);
    out.rates.resize(p, h);
    Vector prev = fit.anchor;
    const int year0 = fit.forecast_years_from.front();
    for (int s = 0; s < h; ++s) {
        Vector z = fit.basis.mean;
        for (int k = 0; k < K; ++k) z += score_fc(s, k) * fit.basis.components.col(k);
        out.improvements.col(s) = z;
        prev = back_transform(z, prev, &out.clamped);
        out.rates.col(s) = prev;
        out.years.push_back(year0 + s);
    }
    return out;
}

}  // namespace dpcr
