#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dpcr/longrun.hpp"
#include "support.hpp"

using namespace dpcr;
using testsupport::ar1_series;
using testsupport::hac_bartlett_oracle;
using testsupport::random_matrix;
using testsupport::white_noise;

namespace {

std::vector<int> grid_of(int p) {
    std::vector<int> g(p);
    for (int i = 0; i < p; ++i) g[i] = i;
    return g;
}

}  // namespace

TEST_CASE("kernel weights match the piecewise definitions") {
    const KernelSpec bart = KernelSpec::bartlett();
    CHECK(kernel_weight(bart, 0.0) == 1.0);
    CHECK(kernel_weight(bart, 0.5) == 0.5);
    CHECK(kernel_weight(bart, -0.5) == 0.5);
    CHECK(kernel_weight(bart, 1.2) == 0.0);

    const KernelSpec ft = KernelSpec::flat_top();
    CHECK(kernel_weight(ft, 0.3) == 1.0);
    CHECK(kernel_weight(ft, -0.3) == 1.0);
    CHECK(kernel_weight(ft, 0.75) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(kernel_weight(ft, 1.5) == 0.0);

    CHECK(bart.squared_integral() == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    // flat-top with defaults: 2*0.5 + 2*0.5/3
    CHECK(ft.squared_integral() == doctest::Approx(1.0 + 1.0 / 3.0).epsilon(1e-15));
    CHECK_THROWS_AS(KernelSpec::flat_top(1.0, 0.5), std::invalid_argument);
}

TEST_CASE("bartlett weight at a fixed lag never decreases in bandwidth") {
    const KernelSpec bart = KernelSpec::bartlett();
    for (int lag = 1; lag <= 6; ++lag) {
        double prev = -1.0;
        for (double h = 0.5; h <= 30.0; h += 0.5) {
            const double w = kernel_weight(bart, lag / h);
            CHECK(w >= prev - 1e-15);
            prev = w;
        }
    }
}

TEST_CASE("lag-0 autocovariance is the divisor-n sample covariance") {
    const Matrix z = random_matrix(4, 9, 42);
    const auto s = empirical_autocov(z, 0, grid_of(4));
    Matrix zc = z;
    zc.colwise() -= z.rowwise().mean();
    const Matrix expected = zc * zc.transpose() / 9.0;
    CHECK((s.values - expected).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("two-year toy autocovariance at lag one") {
    Matrix z(2, 2);
    z << 1.0, -1.0,
         0.0, 0.0;
    // columns are years; the mean over years is zero for both ages
    const auto g1 = empirical_autocov(z, 1, grid_of(2));
    CHECK(g1.values(0, 0) == doctest::Approx(-0.5).epsilon(1e-15));
    CHECK(g1.values(0, 1) == 0.0);
    CHECK(g1.values(1, 0) == 0.0);
    CHECK(g1.values(1, 1) == 0.0);
}

TEST_CASE("negative lags transpose the surface") {
    const Matrix z = random_matrix(3, 14, 7);
    for (int lag = 1; lag <= 4; ++lag) {
        const auto pos = empirical_autocov(z, lag, grid_of(3));
        const auto neg = empirical_autocov(z, -lag, grid_of(3));
        CHECK((neg.values - pos.values.transpose()).cwiseAbs().maxCoeff() < 1e-15);
    }
    CHECK_THROWS_AS(empirical_autocov(z, 14, grid_of(3)), std::domain_error);
}

TEST_CASE("tiny bandwidth keeps only the lag-0 surface") {
    const Matrix z = random_matrix(3, 20, 11);
    const auto lr = longrun_cov(z, 0.9, KernelSpec::bartlett(), grid_of(3));
    const auto v = empirical_autocov(z, 0, grid_of(3));
    CHECK((lr.values - v.values).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("long-run variance of iid noise is near one") {
    const Vector y = white_noise(2000, 99);
    Matrix z(1, 2000);
    z.row(0) = y;
    const auto lr = longrun_cov(z, 5.0, KernelSpec::bartlett(), grid_of(1));
    CHECK(std::abs(lr.values(0, 0) - 1.0) < 0.15);
}

TEST_CASE("long-run variance of an ar(1) series approaches the closed form") {
    // sum of autocovariances of AR(1)(phi) with unit innovations:
    // sigma^2/(1-phi)^2 = 4 at phi = 0.5
    const Vector y = ar1_series(5000, 0.5, 12345);
    Matrix z(1, 5000);
    z.row(0) = y;
    const auto lr = longrun_cov(z, std::pow(5000.0, 1.0 / 3.0) * 2.0, KernelSpec::bartlett(),
                                grid_of(1));
    CHECK(std::abs(lr.values(0, 0) - 4.0) / 4.0 < 0.2);
}

TEST_CASE("scalar estimator matches the textbook hac oracle exactly") {
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        const int n = 60 + static_cast<int>(seed % 17);
        const Vector y = ar1_series(n, 0.4, seed);
        Matrix z(1, n);
        z.row(0) = y;
        const double h = 1.0 + static_cast<double>(seed % 9);
        const auto lr = longrun_cov(z, h, KernelSpec::bartlett(), grid_of(1));
        const double oracle = hac_bartlett_oracle(y, h);
        CHECK(std::abs(lr.values(0, 0) - oracle) <= 1e-12);
    }
}

TEST_CASE("every surface is symmetric") {
    const Matrix z = random_matrix(6, 30, 5);
    const auto lr = longrun_cov(z, 4.0, KernelSpec::bartlett(), grid_of(6));
    CHECK((lr.values - lr.values.transpose()).cwiseAbs().maxCoeff() <= 1e-10);
    const auto ft = longrun_cov(z, 4.0, KernelSpec::flat_top(), grid_of(6));
    CHECK((ft.values - ft.values.transpose()).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("oversized bandwidths truncate at n-1 and flag it") {
    const Matrix z = random_matrix(2, 12, 3);
    const auto lr = longrun_cov(z, 500.0, KernelSpec::bartlett(), grid_of(2));
    CHECK(lr.lag_truncated);
    const auto ok = longrun_cov(z, 3.0, KernelSpec::bartlett(), grid_of(2));
    CHECK_FALSE(ok.lag_truncated);
}

TEST_CASE("plug-in bandwidth grows with temporal dependence") {
    const int p = 20, n = 500;
    Matrix iid(p, n), dependent(p, n);
    // same loading shape, one panel iid over time, one with an AR(1)(0.8)
    // common factor
    Vector loading(p);
    for (int i = 0; i < p; ++i) loading(i) = 1.0 + 0.5 * std::sin(0.3 * i);
    const Vector factor_iid = white_noise(n, 21);
    const Vector factor_dep = ar1_series(n, 0.8, 22);
    const Matrix noise_a = random_matrix(p, n, 23, 0.3);
    const Matrix noise_b = random_matrix(p, n, 24, 0.3);
    for (int t = 0; t < n; ++t) {
        iid.col(t) = loading * factor_iid(t) + noise_a.col(t);
        dependent.col(t) = loading * factor_dep(t) + noise_b.col(t);
    }
    const auto h_iid = plugin_bandwidth(iid, grid_of(p));
    const auto h_dep = plugin_bandwidth(dependent, grid_of(p));
    CHECK(h_dep.h_opt > h_iid.h_opt);
}

TEST_CASE("plug-in bandwidth rejects constant panels") {
    Matrix z = Matrix::Ones(3, 40);
    CHECK_THROWS_WITH_AS(plugin_bandwidth(z, grid_of(3)), "plugin_bandwidth: degenerate series",
                         std::domain_error);
}

TEST_CASE("plug-in uses n^(1/5) as the default initial bandwidth") {
    const Matrix z = random_matrix(4, 200, 8);
    const auto res = plugin_bandwidth(z, grid_of(4));
    CHECK(res.h1 == doctest::Approx(std::pow(200.0, 0.2)).epsilon(1e-12));
    const auto res2 = plugin_bandwidth(z, grid_of(4), KernelSpec::flat_top(),
                                       KernelSpec::bartlett(), 3.5);
    CHECK(res2.h1 == 3.5);
}
