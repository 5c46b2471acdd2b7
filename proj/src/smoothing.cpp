#include "dpcr/smoothing.hpp"

#include <algorithm>
#include <cmath>

namespace dpcr {

namespace {

// Cholesky solve for a symmetric positive definite pentadiagonal system,
// band stored as diag/off1/off2. Grids stay small (p <= 101) but the fit
// runs inside cross-validation loops, so the O(p) solve matters.
Vector solve_pentadiagonal(Vector diag, Vector off1, Vector off2, Vector rhs) {
    const Eigen::Index n = diag.size();
    Vector d(n), l1(n), l2(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double di = diag(i);
        if (i >= 1) di -= l1(i - 1) * l1(i - 1) * d(i - 1);
        if (i >= 2) di -= l2(i - 2) * l2(i - 2) * d(i - 2);
        if (di <= 0.0) di = 1e-300;  // numerically singular; keep going
        d(i) = di;
        if (i + 1 < n) {
            double v = off1(i);
            if (i >= 1) v -= l1(i - 1) * d(i - 1) * l2(i - 1);
            l1(i) = v / di;
        }
        if (i + 2 < n) l2(i) = off2(i) / di;
    }
    // forward substitution L z = rhs
    Vector z(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double v = rhs(i);
        if (i >= 1) v -= l1(i - 1) * d(i - 1) * z(i - 1);
        if (i >= 2) v -= l2(i - 2) * d(i - 2) * z(i - 2);
        z(i) = v;
    }
    // backward substitution L' theta = D^{-1} z
    Vector theta(n);
    for (Eigen::Index i = n; i-- > 0;) {
        double v = z(i) / d(i);
        if (i + 1 < n) v -= l1(i) * theta(i + 1);
        if (i + 2 < n) v -= l2(i) * theta(i + 2);
        theta(i) = v;
    }
    return theta;
}

// Linear interpolation across zero-weight cells, extending flat at the ends.
Vector interpolate_unweighted(const Vector& y, const Vector& w) {
    const Eigen::Index n = y.size();
    Vector out = y;
    Eigen::Index prev = -1;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (w(i) > 0.0 && std::isfinite(y(i))) {
            if (prev == -1) {
                for (Eigen::Index j = 0; j < i; ++j) out(j) = y(i);
            } else if (prev + 1 < i) {
                for (Eigen::Index j = prev + 1; j < i; ++j) {
                    const double frac =
                        static_cast<double>(j - prev) / static_cast<double>(i - prev);
                    out(j) = (1.0 - frac) * y(prev) + frac * y(i);
                }
            }
            prev = i;
        }
    }
    if (prev == -1) throw std::domain_error("smooth_curve: all weights are zero");
    for (Eigen::Index j = prev + 1; j < n; ++j) out(j) = y(prev);
    return out;
}

}  // namespace

Vector isotonic_non_decreasing(const Vector& v, const Vector& weights) {
    const Eigen::Index n = v.size();
    std::vector<double> level(n), weight(n);
    std::vector<Eigen::Index> count(n);
    Eigen::Index blocks = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        level[blocks] = v(i);
        weight[blocks] = weights(i) > 0.0 ? weights(i) : 1e-12;
        count[blocks] = 1;
        ++blocks;
        while (blocks > 1 && level[blocks - 2] > level[blocks - 1]) {
            const double wsum = weight[blocks - 2] + weight[blocks - 1];
            level[blocks - 2] =
                (weight[blocks - 2] * level[blocks - 2] + weight[blocks - 1] * level[blocks - 1]) /
                wsum;
            weight[blocks - 2] = wsum;
            count[blocks - 2] += count[blocks - 1];
            --blocks;
        }
    }
    Vector out(n);
    Eigen::Index pos = 0;
    for (Eigen::Index b = 0; b < blocks; ++b)
        for (Eigen::Index k = 0; k < count[b]; ++k) out(pos++) = level[b];
    return out;
}

Matrix estimate_noise_sd(const Matrix& rates, const Matrix& exposures) {
    if (rates.rows() != exposures.rows() || rates.cols() != exposures.cols())
        throw std::invalid_argument("estimate_noise_sd: shape mismatch");
    Matrix sigma = Matrix::Constant(rates.rows(), rates.cols(), missing_value);
    for (Eigen::Index j = 0; j < rates.cols(); ++j) {
        for (Eigen::Index i = 0; i < rates.rows(); ++i) {
            const double m = rates(i, j);
            const double e = exposures(i, j);
            if (is_missing(m) || is_missing(e) || m <= 0.0 || e <= 0.0) continue;
            sigma(i, j) = 1.0 / (m * e);
        }
    }
    return sigma;
}

Vector smooth_curve(const Vector& y, const Vector& weights, const SmoothOptions& opts) {
    const Eigen::Index n = y.size();
    if (weights.size() != n) throw std::invalid_argument("smooth_curve: weight size mismatch");
    if (opts.lambda < 0.0) throw std::invalid_argument("smooth_curve: negative lambda");

    Vector w = weights;
    for (Eigen::Index i = 0; i < n; ++i)
        if (is_missing(y(i)) || w(i) < 0.0) w(i) = 0.0;
    if ((w.array() > 0.0).count() == 0) throw std::domain_error("smooth_curve: all weights are zero");

    Vector theta;
    if (opts.lambda == 0.0 || n < 3) {
        // pure data term: the weighted L1 loss is minimized cellwise
        theta = interpolate_unweighted(y, w);
    } else {
        theta = interpolate_unweighted(y, w);
        const double wmax = w.maxCoeff();
        const double ridge = 1e-10 * std::max(wmax, opts.lambda);

        // IRLS with a decreasing smoothing floor: |r| is approximated by
        // r^2 / max(|r|, delta)
        double delta = 1e-4;
        bool converged = false;
        for (int iter = 0; iter < opts.max_iter; ++iter) {
            Vector diag = Vector::Constant(n, ridge);
            Vector off1 = Vector::Zero(n);
            Vector off2 = Vector::Zero(n);
            Vector rhs = Vector::Zero(n);
            for (Eigen::Index i = 0; i < n; ++i) {
                if (w(i) <= 0.0) continue;
                const double r = std::max(std::abs(y(i) - theta(i)), delta);
                const double wd = w(i) / r;
                diag(i) += wd;
                rhs(i) += wd * y(i);
            }
            for (Eigen::Index i = 0; i + 2 < n; ++i) {
                const double d2 = theta(i) - 2.0 * theta(i + 1) + theta(i + 2);
                const double v = opts.lambda / std::max(std::abs(d2), delta);
                // add v * d d' for d = (1, -2, 1) at rows i, i+1, i+2
                diag(i) += v;
                diag(i + 1) += 4.0 * v;
                diag(i + 2) += v;
                off1(i) += -2.0 * v;
                off1(i + 1) += -2.0 * v;
                off2(i) += v;
            }
            const Vector next = solve_pentadiagonal(diag, off1, off2, rhs);
            const double change = (next - theta).cwiseAbs().maxCoeff();
            theta = next;
            if (change <= opts.tol * (1.0 + theta.cwiseAbs().maxCoeff())) {
                if (delta <= 1e-10) {
                    converged = true;
                    break;
                }
                delta = std::max(delta * 0.1, 1e-10);
            }
        }
        if (!converged) throw SolverError("smooth_curve: no convergence within budget", theta);
    }

    if (opts.monotone_from_index >= 0 && opts.monotone_from_index < n - 1) {
        const Eigen::Index from = opts.monotone_from_index;
        const Vector tail = isotonic_non_decreasing(theta.segment(from, n - from),
                                                    Vector::Ones(n - from));
        theta.segment(from, n - from) = tail;
    }
    return theta;
}

double select_lambda(const Vector& y, const Vector& weights, const LambdaGrid& grid,
                     int monotone_from_index) {
    const Eigen::Index n = y.size();
    std::vector<Eigen::Index> observed;
    for (Eigen::Index i = 0; i < n; ++i)
        if (weights(i) > 0.0 && !is_missing(y(i))) observed.push_back(i);
    if (observed.size() < 10) throw std::domain_error("select_lambda: need at least 10 observed cells");

    std::vector<double> lambdas(grid.count);
    for (int k = 0; k < grid.count; ++k)
        lambdas[k] = std::pow(10.0, grid.log10_min + (grid.log10_max - grid.log10_min) * k /
                                          static_cast<double>(grid.count - 1));

    double best_err = std::numeric_limits<double>::infinity();
    double best_lambda = lambdas.front();
    for (const double lam : lambdas) {
        double err = 0.0;
        for (int fold = 0; fold < grid.folds; ++fold) {
            Vector w_train = weights;
            bool any_held = false;
            for (std::size_t idx = fold; idx < observed.size();
                 idx += static_cast<std::size_t>(grid.folds)) {
                w_train(observed[idx]) = 0.0;
                any_held = true;
            }
            if (!any_held) continue;
            SmoothOptions opts;
            opts.lambda = lam;
            opts.monotone_from_index = monotone_from_index;
            const Vector fit = smooth_curve(y, w_train, opts);
            for (std::size_t idx = fold; idx < observed.size();
                 idx += static_cast<std::size_t>(grid.folds)) {
                const Eigen::Index i = observed[idx];
                err += weights(i) * std::abs(y(i) - fit(i));
            }
        }
        if (err < best_err - 1e-12 * (1.0 + std::abs(best_err))) {
            best_err = err;
            best_lambda = lam;
        }
    }
    return best_lambda;
}

SmoothedCurveSet smooth_dataset(const MortalityDataset& ds, Sex sex, int monotone_age) {
    const Matrix& rates = ds.rate(sex);
    const Matrix& exposures = ds.exposure(sex);
    const auto p = static_cast<Eigen::Index>(ds.ages.size());
    const auto n = static_cast<Eigen::Index>(ds.years.size());

    int monotone_idx = -1;
    for (std::size_t i = 0; i < ds.ages.size(); ++i)
        if (ds.ages[i] >= monotone_age) {
            monotone_idx = static_cast<int>(i);
            break;
        }

    SmoothedCurveSet out;
    out.ages = ds.ages;
    out.years = ds.years;
    out.sigma = estimate_noise_sd(rates, exposures);
    out.log_rates.resize(p, n);
    out.lambda.resize(n);

    for (Eigen::Index t = 0; t < n; ++t) {
        Vector y = Vector::Constant(p, missing_value);
        Vector w = Vector::Zero(p);
        for (Eigen::Index i = 0; i < p; ++i) {
            const double m = rates(i, t);
            const double s = out.sigma(i, t);
            if (is_missing(m) || m <= 0.0 || is_missing(s)) continue;
            y(i) = std::log(m);
            w(i) = 1.0 / (s * s);
        }
        out.lambda(t) = select_lambda(y, w, LambdaGrid{}, monotone_idx);
        SmoothOptions opts;
        opts.lambda = out.lambda(t);
        opts.monotone_from_index = monotone_idx;
        out.log_rates.col(t) = smooth_curve(y, w, opts);
    }
    return out;
}

}  // namespace dpcr
