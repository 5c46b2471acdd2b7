#pragma once

#include <string>
#include <vector>

#include "dpcr/common.hpp"

namespace dpcr {

enum class KpssNull { level, trend };

struct KpssResult {
    double statistic = 0.0;
    double critical_value = 0.0;  // 5% asymptotic
    bool reject = false;
};

// KPSS stationarity test with Bartlett long-run variance, bandwidth
// floor(4 (n/100)^{1/4}); 5% critical values 0.463 (level) / 0.146 (trend).
KpssResult kpss_test(const Vector& y, KpssNull null_type = KpssNull::level);

// Smallest d <= d_max whose d-times-differenced series passes KPSS.
int select_d(const Vector& y, int d_max = 2);

struct ArimaError : std::runtime_error {
    ArimaError(const std::string& msg, int p, int q)
        : std::runtime_error("arima(" + std::to_string(p) + "," + std::to_string(q) +
                             "): " + msg),
          p(p),
          q(q) {}
    int p, q;
};

struct ArimaModel {
    int p = 0, d = 0, q = 0;
    std::vector<double> ar;  // x_t = sum ar_i x_{t-i} + e_t + sum ma_j e_{t-j}
    std::vector<double> ma;
    bool include_mean = false;
    double mean = 0.0;  // mean of the d-differenced series; drift when d = 1
    double sigma2 = 0.0;
    double loglik = 0.0;
    double aicc = 0.0;
    int fitted_on = 0;  // length of the undifferenced fitting series
};

// Exact Gaussian maximum likelihood on the d-differenced series via the
// state-space innovations recursion; stationarity/invertibility enforced
// through a partial-autocorrelation reparameterization.
ArimaModel fit_arima(const Vector& y, int p, int d, int q, bool include_mean);

struct AutoArimaOptions {
    int p_max = 5;
    int q_max = 5;
    int d_max = 2;
};

// d from successive KPSS tests, then an exhaustive AICc grid search over
// (p, q); mean/drift included when d <= 1. Ties break to smaller p+q, then
// smaller p. Falls back to (0,d,0) when every candidate fails.
ArimaModel auto_arima(const Vector& y, const AutoArimaOptions& opts = {});

struct ArimaForecast {
    Vector point;  // h point forecasts
    Vector se;     // forecast standard errors from the psi weights
};

// Conditional-expectation forecasts given `y` under the fitted parameters
// (no refitting); works for any history, not just the fitting series.
ArimaForecast forecast(const ArimaModel& model, const Vector& y, int h);

// Log-likelihood of `y` under the model parameters (diagnostics/tests).
double arima_loglik(const ArimaModel& model, const Vector& y);

// Fitted one-step predictions of y_t given y_1..y_{t-1}; the first d
// entries are missing.
Vector one_step_predictions(const ArimaModel& model, const Vector& y);

// MA(infinity) psi weights of the full ARIMA polynomial, psi_0 = 1.
std::vector<double> psi_weights(const ArimaModel& model, int count);

Vector difference(const Vector& y, int d);

}  // namespace dpcr
