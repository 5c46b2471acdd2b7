#include "dpcr/arima.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace dpcr {

namespace {

constexpr double kpss_crit_level = 0.463;
constexpr double kpss_crit_trend = 0.146;

// Durbin-Levinson: partial autocorrelations -> AR coefficients of a
// stationary polynomial 1 - sum a_i z^i.
std::vector<double> pacf_to_ar(const std::vector<double>& pacf) {
    std::vector<double> a(pacf.size(), 0.0), prev;
    for (std::size_t k = 0; k < pacf.size(); ++k) {
        prev.assign(a.begin(), a.begin() + static_cast<long>(k));
        a[k] = pacf[k];
        for (std::size_t i = 0; i < k; ++i) a[i] = prev[i] - pacf[k] * prev[k - 1 - i];
    }
    return a;
}

// Inverse recursion; coefficients outside the stationary region make some
// |pacf| >= 1, which callers clamp.
std::vector<double> ar_to_pacf(std::vector<double> a) {
    std::vector<double> pacf(a.size(), 0.0);
    for (std::size_t k = a.size(); k-- > 0;) {
        const double pk = a[k];
        pacf[k] = pk;
        if (k == 0) break;
        std::vector<double> prev(k);
        const double denom = 1.0 - pk * pk;
        if (std::abs(denom) < 1e-12) {
            for (std::size_t i = 0; i < k; ++i) prev[i] = 0.0;
        } else {
            for (std::size_t i = 0; i < k; ++i) prev[i] = (a[i] + pk * a[k - 1 - i]) / denom;
        }
        a.assign(prev.begin(), prev.end());
    }
    return pacf;
}

std::vector<double> ar_from_raw(const double* raw, int count) {
    std::vector<double> pacf(count);
    for (int i = 0; i < count; ++i) pacf[i] = std::tanh(raw[i]);
    return pacf_to_ar(pacf);
}

// Invertible MA coefficients for 1 + sum theta_j z^j: negate a stationary
// AR polynomial built from the same recursion.
std::vector<double> ma_from_raw(const double* raw, int count) {
    std::vector<double> theta = ar_from_raw(raw, count);
    for (double& t : theta) t = -t;
    return theta;
}

struct StateSpace {
    int m = 1;
    Matrix T;
    Vector R;
};

StateSpace make_state_space(const std::vector<double>& ar, const std::vector<double>& ma) {
    const int p = static_cast<int>(ar.size());
    const int q = static_cast<int>(ma.size());
    StateSpace ss;
    ss.m = std::max(p, q + 1);
    ss.T = Matrix::Zero(ss.m, ss.m);
    for (int i = 0; i < p; ++i) ss.T(i, 0) = ar[i];
    for (int i = 0; i + 1 < ss.m; ++i) ss.T(i, i + 1) = 1.0;
    ss.R = Vector::Zero(ss.m);
    ss.R(0) = 1.0;
    for (int j = 0; j < q; ++j) ss.R(j + 1) = ma[j];
    return ss;
}

// Stationary state covariance: P = T P T' + R R', solved via vec(P).
Matrix stationary_covariance(const StateSpace& ss) {
    const int m = ss.m;
    Matrix lhs = Matrix::Identity(m * m, m * m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            for (int k = 0; k < m; ++k)
                for (int l = 0; l < m; ++l) lhs(i + j * m, k + l * m) -= ss.T(i, k) * ss.T(j, l);
    const Matrix rr = ss.R * ss.R.transpose();
    Vector rhs(m * m);
    for (int j = 0; j < m; ++j)
        for (int i = 0; i < m; ++i) rhs(i + j * m) = rr(i, j);
    Vector vecp = lhs.partialPivLu().solve(rhs);
    Matrix prior(m, m);
    for (int j = 0; j < m; ++j)
        for (int i = 0; i < m; ++i) prior(i, j) = vecp(i + j * m);
    return 0.5 * (prior + prior.transpose());
}

struct FilterResult {
    double sigma2 = 0.0;   // concentrated innovation variance
    double loglik = 0.0;   // Gaussian log-likelihood at sigma2
    Vector state;          // predicted state for the next time point
    Matrix state_cov;      // its covariance (unit innovation scale)
    bool ok = false;
};

// Kalman filter on the mean-adjusted differenced series, innovation
// variance concentrated out.
FilterResult kalman_filter(const Vector& x, const StateSpace& ss) {
    const Eigen::Index n = x.size();
    const int m = ss.m;
    FilterResult res;
    Vector a = Vector::Zero(m);
    Matrix prior = stationary_covariance(ss);
    Matrix pcov = prior;
    const Matrix rr = ss.R * ss.R.transpose();

    double sum_e2f = 0.0, sum_logf = 0.0;
    for (Eigen::Index t = 0; t < n; ++t) {
        const double f = pcov(0, 0);
        if (!(f > 1e-300) || !std::isfinite(f)) return res;
        const double e = x(t) - a(0);
        sum_e2f += e * e / f;
        sum_logf += std::log(f);
        const Vector gain = ss.T * pcov.col(0) / f;
        a = ss.T * a + gain * e;
        pcov = ss.T * pcov * ss.T.transpose() + rr - gain * gain.transpose() * f;
        pcov = 0.5 * (pcov + pcov.transpose());
    }
    res.state = a;
    res.state_cov = pcov;
    if (n == 0) {
        res.sigma2 = 1.0;
        res.loglik = 0.0;
        res.ok = true;
        return res;
    }
    res.sigma2 = sum_e2f / static_cast<double>(n);
    if (!(res.sigma2 > 0.0) || !std::isfinite(res.sigma2)) return res;
    const double nn = static_cast<double>(n);
    res.loglik = -0.5 * nn * (std::log(2.0 * M_PI) + 1.0 + std::log(res.sigma2)) - 0.5 * sum_logf;
    res.ok = std::isfinite(res.loglik);
    return res;
}

double aicc_value(double loglik, int k, int n) {
    if (n - k - 1 <= 0) return std::numeric_limits<double>::infinity();
    return -2.0 * loglik + 2.0 * k * static_cast<double>(n) / static_cast<double>(n - k - 1);
}

// Nelder-Mead simplex minimizer; derivative-free, tolerance on the spread
// of function values across the simplex.
Vector nelder_mead(const std::function<double(const Vector&)>& f, Vector x0, double step,
                   double tol, int max_iter) {
    const int dim = static_cast<int>(x0.size());
    if (dim == 0) return x0;
    std::vector<Vector> pts(dim + 1, x0);
    std::vector<double> val(dim + 1);
    for (int i = 0; i < dim; ++i) pts[i + 1](i) += step;
    for (int i = 0; i <= dim; ++i) val[i] = f(pts[i]);

    std::vector<int> ord(dim + 1);
    for (int it = 0; it < max_iter; ++it) {
        for (int i = 0; i <= dim; ++i) ord[i] = i;
        std::sort(ord.begin(), ord.end(), [&](int a, int b) { return val[a] < val[b]; });
        const int best = ord[0], worst = ord[dim], second = ord[dim - 1];
        if (std::abs(val[worst] - val[best]) <= tol * (std::abs(val[best]) + tol)) break;

        Vector centroid = Vector::Zero(dim);
        for (int i = 0; i <= dim; ++i)
            if (i != worst) centroid += pts[i];
        centroid /= static_cast<double>(dim);

        const Vector refl = centroid + (centroid - pts[worst]);
        const double f_refl = f(refl);
        if (f_refl < val[best]) {
            const Vector expd = centroid + 2.0 * (centroid - pts[worst]);
            const double f_expd = f(expd);
            if (f_expd < f_refl) {
                pts[worst] = expd;
                val[worst] = f_expd;
            } else {
                pts[worst] = refl;
                val[worst] = f_refl;
            }
        } else if (f_refl < val[second]) {
            pts[worst] = refl;
            val[worst] = f_refl;
        } else {
            const Vector contr = centroid + 0.5 * (pts[worst] - centroid);
            const double f_contr = f(contr);
            if (f_contr < val[worst]) {
                pts[worst] = contr;
                val[worst] = f_contr;
            } else {
                for (int i = 0; i <= dim; ++i) {
                    if (i == best) continue;
                    pts[i] = pts[best] + 0.5 * (pts[i] - pts[best]);
                    val[i] = f(pts[i]);
                }
            }
        }
    }
    int best = 0;
    for (int i = 1; i <= dim; ++i)
        if (val[i] < val[best]) best = i;
    return pts[best];
}

std::vector<double> sample_acf(const Vector& x, int max_lag) {
    const Eigen::Index n = x.size();
    const double mean = x.mean();
    std::vector<double> acf(max_lag + 1, 0.0);
    for (int l = 0; l <= max_lag; ++l) {
        double s = 0.0;
        for (Eigen::Index t = l; t < n; ++t) s += (x(t) - mean) * (x(t - l) - mean);
        acf[l] = s / static_cast<double>(n);
    }
    return acf;
}

// Yule-Walker AR coefficients through the Durbin-Levinson recursion on the
// sample autocorrelations.
std::vector<double> yule_walker(const Vector& x, int order) {
    auto acf = sample_acf(x, order);
    if (acf[0] <= 0.0) return std::vector<double>(order, 0.0);
    std::vector<double> a(order, 0.0), prev(order, 0.0);
    std::vector<double> pacf(order, 0.0);
    double v = acf[0];
    for (int k = 0; k < order; ++k) {
        double num = acf[k + 1];
        for (int i = 0; i < k; ++i) num -= a[i] * acf[k - i];
        double pk = v > 0.0 ? num / v : 0.0;
        pk = std::clamp(pk, -0.95, 0.95);
        prev.assign(a.begin(), a.end());
        a[k] = pk;
        for (int i = 0; i < k; ++i) a[i] = prev[i] - pk * prev[k - 1 - i];
        v *= (1.0 - pk * pk);
        pacf[k] = pk;
    }
    return a;
}

struct StartValues {
    std::vector<double> ar_raw, ma_raw;
    double mu = 0.0;
};

// Hannan-Rissanen starting values: long-AR residuals, then least squares
// of x_t on its own lags and lagged residuals.
StartValues starting_values(const Vector& x, int p, int q, bool include_mean) {
    StartValues sv;
    sv.ar_raw.assign(p, 0.0);
    sv.ma_raw.assign(q, 0.0);
    const Eigen::Index n = x.size();
    sv.mu = include_mean && n > 0 ? x.mean() : 0.0;
    Vector xc = x.array() - sv.mu;

    auto to_raw = [](std::vector<double> coef) {
        auto pacf = ar_to_pacf(std::move(coef));
        for (double& v : pacf) v = std::atanh(std::clamp(v, -0.95, 0.95));
        return pacf;
    };

    if (p + q == 0 || n < p + q + 8) return sv;
    if (q == 0) {
        sv.ar_raw = to_raw(yule_walker(xc, p));
        return sv;
    }

    const int long_order = std::min<int>(static_cast<int>(n) / 4, std::max(10, 2 * (p + q)));
    if (n <= long_order + std::max(p, q) + 4) {
        if (p > 0) sv.ar_raw = to_raw(yule_walker(xc, p));
        return sv;
    }
    const auto long_ar = yule_walker(xc, long_order);
    Vector resid = Vector::Zero(n);
    for (Eigen::Index t = long_order; t < n; ++t) {
        double pred = 0.0;
        for (int i = 0; i < long_order; ++i) pred += long_ar[i] * xc(t - 1 - i);
        resid(t) = xc(t) - pred;
    }

    const Eigen::Index t0 = long_order + std::max(p, q);
    const Eigen::Index rows = n - t0;
    if (rows < p + q + 2) {
        if (p > 0) sv.ar_raw = to_raw(yule_walker(xc, p));
        return sv;
    }
    Matrix design(rows, p + q);
    Vector target(rows);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const Eigen::Index t = t0 + r;
        target(r) = xc(t);
        for (int i = 0; i < p; ++i) design(r, i) = xc(t - 1 - i);
        for (int j = 0; j < q; ++j) design(r, p + j) = resid(t - 1 - j);
    }
    Vector coef = design.colPivHouseholderQr().solve(target);
    std::vector<double> phi(p), theta(q);
    for (int i = 0; i < p; ++i) phi[i] = coef(i);
    for (int j = 0; j < q; ++j) theta[j] = coef(p + j);
    if (p > 0) sv.ar_raw = to_raw(phi);
    // invertible region of 1 + sum theta z^j mirrors the stationary region
    for (double& t : theta) t = -t;
    sv.ma_raw = to_raw(theta);
    return sv;
}

void check_roots(const std::vector<double>& coef, const char* what, int p, int q) {
    const int deg = static_cast<int>(coef.size());
    if (deg == 0) return;
    // roots of 1 - sum c_i z^i via the companion matrix of z^deg - c_1
    // z^{deg-1} - ... - c_deg (reciprocal roots must lie inside the circle)
    Matrix comp = Matrix::Zero(deg, deg);
    for (int i = 0; i < deg; ++i) comp(0, i) = coef[i];
    for (int i = 1; i < deg; ++i) comp(i, i - 1) = 1.0;
    const auto eival = comp.eigenvalues();
    for (Eigen::Index i = 0; i < eival.size(); ++i)
        if (std::abs(eival(i)) > 1.0 - 1e-6)
            throw ArimaError(std::string(what) + " polynomial has a root at or inside the unit circle",
                             p, q);
}

}  // namespace

Vector difference(const Vector& y, int d) {
    Vector x = y;
    for (int k = 0; k < d; ++k) {
        if (x.size() < 2) throw std::domain_error("difference: series too short");
        x = (x.tail(x.size() - 1) - x.head(x.size() - 1)).eval();
    }
    return x;
}

KpssResult kpss_test(const Vector& y, KpssNull null_type) {
    const Eigen::Index n = y.size();
    if (n < 10) throw std::domain_error("kpss_test: need at least 10 observations");

    Vector resid(n);
    if (null_type == KpssNull::level) {
        resid = y.array() - y.mean();
    } else {
        // OLS on (1, t)
        double st = 0.0, st2 = 0.0, sy = 0.0, sty = 0.0;
        for (Eigen::Index t = 0; t < n; ++t) {
            const double tt = static_cast<double>(t + 1);
            st += tt;
            st2 += tt * tt;
            sy += y(t);
            sty += tt * y(t);
        }
        const double nn = static_cast<double>(n);
        const double slope = (nn * sty - st * sy) / (nn * st2 - st * st);
        const double intercept = (sy - slope * st) / nn;
        for (Eigen::Index t = 0; t < n; ++t)
            resid(t) = y(t) - intercept - slope * static_cast<double>(t + 1);
    }

    KpssResult res;
    res.critical_value = null_type == KpssNull::level ? kpss_crit_level : kpss_crit_trend;

    const int bw = static_cast<int>(std::floor(4.0 * std::pow(static_cast<double>(n) / 100.0, 0.25)));
    double lrv = resid.squaredNorm();
    for (int s = 1; s <= bw; ++s) {
        double acov = 0.0;
        for (Eigen::Index t = s; t < n; ++t) acov += resid(t) * resid(t - s);
        lrv += 2.0 * (1.0 - static_cast<double>(s) / (bw + 1.0)) * acov;
    }
    lrv /= static_cast<double>(n);
    if (lrv <= 0.0) return res;  // constant series: statistic 0, never rejects

    double cum = 0.0, s2 = 0.0;
    for (Eigen::Index t = 0; t < n; ++t) {
        cum += resid(t);
        s2 += cum * cum;
    }
    res.statistic = s2 / (static_cast<double>(n) * static_cast<double>(n) * lrv);
    res.reject = res.statistic > res.critical_value;
    return res;
}

int select_d(const Vector& y, int d_max) {
    Vector x = y;
    for (int d = 0; d <= d_max; ++d) {
        if (d > 0) x = difference(x, 1);
        if (x.size() < 10) return d;  // too short to keep testing
        if (!kpss_test(x, KpssNull::level).reject) return d;
    }
    return d_max;
}

ArimaModel fit_arima(const Vector& y, int p, int d, int q, bool include_mean) {
    if (p < 0 || d < 0 || q < 0) throw std::invalid_argument("fit_arima: negative order");
    const Eigen::Index n = y.size();
    if (n - d <= p + q + 2) throw ArimaError("series too short for requested orders", p, q);

    const Vector w = difference(y, d);
    const Eigen::Index nd = w.size();

    const int dim = p + q + (include_mean ? 1 : 0);
    StartValues sv = starting_values(w, p, q, include_mean);
    Vector x0(dim);
    for (int i = 0; i < p; ++i) x0(i) = sv.ar_raw[i];
    for (int j = 0; j < q; ++j) x0(p + j) = sv.ma_raw[j];
    if (include_mean) x0(p + q) = sv.mu;

    auto unpack = [&](const Vector& raw, std::vector<double>& ar, std::vector<double>& ma,
                      double& mu) {
        ar = ar_from_raw(raw.data(), p);
        ma = ma_from_raw(raw.data() + p, q);
        mu = include_mean ? raw(p + q) : 0.0;
    };

    auto objective = [&](const Vector& raw) {
        std::vector<double> ar, ma;
        double mu;
        unpack(raw, ar, ma, mu);
        const Vector x = w.array() - mu;
        const FilterResult fr = kalman_filter(x, make_state_space(ar, ma));
        return fr.ok ? -fr.loglik : 1e100;
    };

    Vector best = x0;
    if (dim > 0) {
        best = nelder_mead(objective, x0, 0.2, 1e-8, 500 * std::max(dim, 1));
        if (objective(best) >= 1e100) {
            // retry from the origin if the warm start went somewhere bad
            best = nelder_mead(objective, Vector::Zero(dim), 0.2, 1e-8, 500 * std::max(dim, 1));
        }
    }

    ArimaModel model;
    model.p = p;
    model.d = d;
    model.q = q;
    model.include_mean = include_mean;
    model.fitted_on = static_cast<int>(n);
    unpack(best, model.ar, model.ma, model.mean);

    const Vector x = w.array() - model.mean;
    const FilterResult fr = kalman_filter(x, make_state_space(model.ar, model.ma));
    if (!fr.ok) throw ArimaError("likelihood evaluation failed at the optimum", p, q);
    model.sigma2 = fr.sigma2;
    model.loglik = fr.loglik;
    const int k = p + q + (include_mean ? 1 : 0) + 1;
    model.aicc = aicc_value(model.loglik, k, static_cast<int>(nd));
    check_roots(model.ar, "AR", p, q);
    std::vector<double> ma_neg = model.ma;
    for (double& v : ma_neg) v = -v;
    check_roots(ma_neg, "MA", p, q);
    return model;
}

ArimaModel auto_arima(const Vector& y, const AutoArimaOptions& opts) {
    const Eigen::Index n = y.size();
    if (n < 15) throw std::domain_error("auto_arima: need at least 15 observations");
    const int d = select_d(y, opts.d_max);
    const bool with_mean = d <= 1;

    ArimaModel best;
    bool have_best = false;
    for (int p = 0; p <= opts.p_max; ++p) {
        for (int q = 0; q <= opts.q_max; ++q) {
            if (n - d <= p + q + 2) continue;
            try {
                ArimaModel cand = fit_arima(y, p, d, q, with_mean);
                if (!std::isfinite(cand.aicc)) continue;
                if (!have_best || cand.aicc < best.aicc - 1e-10 ||
                    (std::abs(cand.aicc - best.aicc) <= 1e-10 &&
                     (p + q < best.p + best.q || (p + q == best.p + best.q && p < best.p)))) {
                    best = std::move(cand);
                    have_best = true;
                }
            } catch (const ArimaError&) {
                continue;
            }
        }
    }
    if (!have_best) return fit_arima(y, 0, d, 0, with_mean);
    return best;
}

std::vector<double> psi_weights(const ArimaModel& model, int count) {
    // denominator polynomial phi(B) (1-B)^d written as 1 - sum a_i B^i
    std::vector<double> c(1, 1.0);
    c.reserve(model.p + model.d + 1);
    for (int i = 0; i < model.p; ++i) c.push_back(-model.ar[i]);
    for (int r = 0; r < model.d; ++r) {
        std::vector<double> next(c.size() + 1, 0.0);
        for (std::size_t i = 0; i < c.size(); ++i) {
            next[i] += c[i];
            next[i + 1] -= c[i];
        }
        c = std::move(next);
    }
    const int deg = static_cast<int>(c.size()) - 1;
    std::vector<double> psi(count, 0.0);
    if (count == 0) return psi;
    psi[0] = 1.0;
    for (int j = 1; j < count; ++j) {
        double v = j <= model.q ? model.ma[j - 1] : 0.0;
        for (int i = 1; i <= std::min(j, deg); ++i) v += -c[i] * psi[j - i];
        psi[j] = v;
    }
    return psi;
}

ArimaForecast forecast(const ArimaModel& model, const Vector& y, int h) {
    if (h < 1) throw std::invalid_argument("forecast: horizon must be at least 1");
    if (y.size() == 0) throw std::domain_error("forecast: empty series");

    ArimaForecast out;
    out.point.resize(h);
    out.se.resize(h);

    // last values of each difference level, for integrating forecasts back
    std::vector<double> lasts(model.d);
    const bool can_difference = y.size() >= model.d;
    if (can_difference) {
        Vector x = y;
        for (int k = 0; k < model.d; ++k) {
            lasts[k] = x(x.size() - 1);
            x = x.size() >= 2 ? difference(x, 1) : Vector(0);
        }
        const Vector xc = x.array() - model.mean;
        const StateSpace ss = make_state_space(model.ar, model.ma);
        FilterResult fr = kalman_filter(xc, ss);
        if (!fr.ok && xc.size() > 0) throw std::runtime_error("forecast: filter failed");
        Vector state = xc.size() > 0 ? fr.state : Vector::Zero(ss.m);
        for (int j = 0; j < h; ++j) {
            double f = state(0) + model.mean;
            state = (ss.T * state).eval();
            for (int k = model.d - 1; k >= 0; --k) {
                f += lasts[k];
                lasts[k] = f;
            }
            out.point(j) = f;
        }
    } else {
        // history shorter than the differencing order: hold the last value
        for (int j = 0; j < h; ++j) out.point(j) = y(y.size() - 1);
    }

    const auto psi = psi_weights(model, h);
    double acc = 0.0;
    for (int j = 0; j < h; ++j) {
        acc += psi[j] * psi[j];
        out.se(j) = std::sqrt(std::max(model.sigma2, 0.0) * acc);
    }
    return out;
}

double arima_loglik(const ArimaModel& model, const Vector& y) {
    const Vector w = difference(y, model.d);
    const Vector x = w.array() - model.mean;
    const FilterResult fr = kalman_filter(x, make_state_space(model.ar, model.ma));
    if (!fr.ok) throw std::runtime_error("arima_loglik: filter failed");
    return fr.loglik;
}

Vector one_step_predictions(const ArimaModel& model, const Vector& y) {
    const Eigen::Index n = y.size();
    Vector pred = Vector::Constant(n, missing_value);
    if (n <= model.d) return pred;
    const Vector w = difference(y, model.d);
    const Vector x = w.array() - model.mean;
    const StateSpace ss = make_state_space(model.ar, model.ma);

    // one-step predictions of the differenced series from the filter
    Vector a = Vector::Zero(ss.m);
    Matrix pcov = stationary_covariance(ss);
    const Matrix rr = ss.R * ss.R.transpose();
    Vector wpred(x.size());
    for (Eigen::Index t = 0; t < x.size(); ++t) {
        wpred(t) = a(0) + model.mean;
        const double f = pcov(0, 0);
        const double e = x(t) - a(0);
        const Vector gain = ss.T * pcov.col(0) / f;
        a = ss.T * a + gain * e;
        pcov = ss.T * pcov * ss.T.transpose() + rr - gain * gain.transpose() * f;
    }

    // back to the original scale: y_t = w_t - sum_i binom(d,i) (-1)^i y_{t-i}
    std::vector<double> binom(model.d + 1, 1.0);
    for (int i = 1; i <= model.d; ++i)
        binom[i] = binom[i - 1] * static_cast<double>(model.d - i + 1) / static_cast<double>(i);
    for (Eigen::Index t = model.d; t < n; ++t) {
        double v = wpred(t - model.d);
        double sign = -1.0;
        for (int i = 1; i <= model.d; ++i) {
            v -= sign * binom[i] * y(t - i);
            sign = -sign;
        }
        pred(t) = v;
    }
    return pred;
}

}  // namespace dpcr
