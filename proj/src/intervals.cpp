#include "dpcr/intervals.hpp"

#include <cmath>

#include "dpcr/random.hpp"

namespace dpcr {

Matrix insample_score_errors(const ModelFit& fit, int h) {
    const Eigen::Index n = fit.basis.scores.rows();
    const int K = fit.basis.K;
    if (n - h < 5) throw std::domain_error("insample_score_errors: insufficient history");

    Matrix errors(n - h, K);
    for (int k = 0; k < K; ++k) {
        const Vector series = fit.basis.scores.col(k);
        const ArimaModel& model = fit.score_models[k];
        // prediction of beta_t made at t-h, conditioning on beta_1..beta_{t-h}
        for (Eigen::Index t = h; t < n; ++t) {
            const Vector prefix = series.head(t + 1 - h);
            errors(t - h, k) = series(t) - forecast(model, prefix, h).point(h - 1);
        }
    }
    return errors;
}

Matrix bootstrap_paths(const ModelFit& fit, int h, int B, std::uint64_t seed) {
    const Eigen::Index p = fit.basis.mean.size();
    const Eigen::Index n = fit.basis.scores.rows();
    const int K = fit.basis.K;

    const Matrix xi = insample_score_errors(fit, h);
    Vector point_scores(K);
    for (int k = 0; k < K; ++k)
        point_scores(k) = forecast(fit.score_models[k], fit.basis.scores.col(k), h).point(h - 1);

    Matrix paths(p, B);
    for (int b = 0; b < B; ++b) {
        Rng rng(Rng::mix(seed, static_cast<std::uint64_t>(h) << 32 |
                                   static_cast<std::uint64_t>(b)));
        Vector z = fit.basis.mean;
        for (int k = 0; k < K; ++k) {
            const double score = point_scores(k) + xi(rng.uniform_index(xi.rows()), k);
            z += score * fit.basis.components.col(k);
        }
        z += fit.basis.residuals.col(static_cast<Eigen::Index>(rng.uniform_index(n)));
        paths.col(b) = z;
    }
    return paths;
}

PredictionInterval prediction_interval(const std::vector<Matrix>& paths_by_horizon, double alpha,
                                       const Vector& anchor) {
    if (alpha <= 0.0 || alpha >= 1.0) throw std::domain_error("prediction_interval: alpha outside (0,1)");
    if (paths_by_horizon.empty()) throw std::invalid_argument("prediction_interval: no paths");
    const Eigen::Index p = paths_by_horizon.front().rows();
    const auto h = static_cast<int>(paths_by_horizon.size());

    PredictionInterval out;
    out.level = 1.0 - alpha;
    out.samples_B = static_cast<int>(paths_by_horizon.front().cols());
    if (out.samples_B < 100) throw std::domain_error("prediction_interval: need at least 100 paths");
    out.lower_improvement.resize(p, h);
    out.upper_improvement.resize(p, h);
    out.lower_rate.resize(p, h);
    out.upper_rate.resize(p, h);

    Vector prev_lower = anchor;
    Vector prev_upper = anchor;
    std::vector<double> buf;
    for (int s = 0; s < h; ++s) {
        const Matrix& paths = paths_by_horizon[static_cast<std::size_t>(s)];
        if (paths.rows() != p) throw std::invalid_argument("prediction_interval: grid mismatch");
        for (Eigen::Index i = 0; i < p; ++i) {
            buf.assign(paths.row(i).begin(), paths.row(i).end());
            out.lower_improvement(i, s) = quantile_type7(buf, alpha / 2.0);
            out.upper_improvement(i, s) = quantile_type7(buf, 1.0 - alpha / 2.0);
        }
        // (2+z)/(2-z) is increasing on (-2,2): chaining lower through lower
        // and upper through upper preserves the ordering on the rate scale
        prev_lower = back_transform(out.lower_improvement.col(s), prev_lower, &out.clamped);
        prev_upper = back_transform(out.upper_improvement.col(s), prev_upper, &out.clamped);
        out.lower_rate.col(s) = prev_lower;
        out.upper_rate.col(s) = prev_upper;
    }
    return out;
}

PredictionInterval bootstrap_interval(const ModelFit& fit, int h, double alpha, int B,
                                      std::uint64_t seed) {
    std::vector<Matrix> paths;
    paths.reserve(static_cast<std::size_t>(h));
    for (int s = 1; s <= h; ++s) paths.push_back(bootstrap_paths(fit, s, B, seed));
    PredictionInterval out = prediction_interval(paths, alpha, fit.anchor);
    out.seed = seed;
    const int year0 = fit.forecast_years_from.front();
    for (int s = 0; s < h; ++s) out.years.push_back(year0 + s);
    return out;
}

}  // namespace dpcr
