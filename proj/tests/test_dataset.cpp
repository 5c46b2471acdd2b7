#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "dpcr/dataset.hpp"
#include "support.hpp"

using namespace dpcr;

namespace {

const char* hmd_mx =
    "United States, Death rates (period 1x1)\n"
    "\n"
    "  Year          Age             Female            Male           Total\n"
    "  1950           0             0.030872        0.038916        0.034990\n"
    "  1950           1             0.002142        0.002448        0.002299\n"
    "  1950          100            0.388900        0.401200        0.392100\n"
    "  1950          101            0.420000        0.450000        0.430000\n"
    "  1950          110+           1.000000        1.000000        1.000000\n"
    "  1951           0             0.029000        0.037000        0.033000\n"
    "  1951           1             0.002000        0.002300        0.002200\n"
    "  1951          100            0.390000        0.410000        0.395000\n"
    "  1951          101            0.425000        0.455000        0.435000\n"
    "  1951          110+           .               .               .\n";

const char* hmd_exposure =
    "United States, Exposure to risk (period 1x1)\n"
    "\n"
    "  Year          Age             Female            Male           Total\n"
    "  1950           0             1614366.00       1679896.00      3294262.00\n"
    "  1950           1             1604518.00       1668036.00      3272554.00\n"
    "  1950          100            2000.00          1000.00         3000.00\n"
    "  1950          101            1000.00          500.00          1500.00\n"
    "  1950          110+           10.00            5.00            15.00\n"
    "  1951           0             1650000.00       1710000.00      3360000.00\n"
    "  1951           1             1640000.00       1700000.00      3340000.00\n"
    "  1951          100            2100.00          1050.00         3150.00\n"
    "  1951          101            1050.00          510.00          1560.00\n"
    "  1951          110+           12.00            6.00            18.00\n";

MortalityDataset load_toy() {
    std::istringstream mx(hmd_mx), ex(hmd_exposure);
    return build_dataset(load_hmd_table(mx, TableFormat::hmd),
                         load_hmd_table(ex, TableFormat::hmd));
}

}  // namespace

TEST_CASE("hmd rows map to rate cells") {
    auto ds = load_toy();
    REQUIRE(ds.years == std::vector<int>{1950, 1951});
    CHECK(ds.ages.front() == 0);
    CHECK(ds.ages.back() == 100);
    CHECK(ds.rate(Sex::female)(0, 0) == doctest::Approx(0.030872).epsilon(1e-12));
    CHECK(ds.rate(Sex::male)(0, 0) == doctest::Approx(0.038916).epsilon(1e-12));
    CHECK(ds.exposure(Sex::female)(0, 0) == doctest::Approx(1614366.0));
}

TEST_CASE("ages at 100 and above fold into the open group via deaths over exposure") {
    auto ds = load_toy();
    // female 1950: deaths = .3889*2000 + .42*1000 + 1.0*10, exposure = 3010
    const double deaths = 0.3889 * 2000 + 0.42 * 1000 + 1.0 * 10;
    const double expo = 2000 + 1000 + 10;
    const auto top = static_cast<Eigen::Index>(ds.ages.size() - 1);
    CHECK(ds.rate(Sex::female)(top, 0) == doctest::Approx(deaths / expo).epsilon(1e-12));
    CHECK(ds.exposure(Sex::female)(top, 0) == doctest::Approx(expo));
    // 1951 folds only the cells with observed rates (110+ is missing)
    const double deaths51 = 0.39 * 2100 + 0.425 * 1050;
    const double expo51 = 2100 + 1050;
    CHECK(ds.rate(Sex::female)(top, 1) == doctest::Approx(deaths51 / expo51).epsilon(1e-12));
}

TEST_CASE("years before 1950 are dropped and later starts are kept as-is") {
    const char* csv_mx =
        "year,age,female,male,total\n"
        "1990,0,0.01,0.012,0.011\n"
        "1990,1,0.001,0.0012,0.0011\n"
        "1991,0,0.0099,0.0119,0.0109\n"
        "1991,1,0.00099,0.00119,0.00109\n";
    const char* csv_ex =
        "year,age,female,male,total\n"
        "1990,0,1000,1000,2000\n"
        "1990,1,1000,1000,2000\n"
        "1991,0,1000,1000,2000\n"
        "1991,1,1000,1000,2000\n";
    std::istringstream mx(csv_mx), ex(csv_ex);
    auto ds = build_dataset(load_hmd_table(mx, TableFormat::csv),
                            load_hmd_table(ex, TableFormat::csv));
    CHECK(ds.years == std::vector<int>{1990, 1991});
}

TEST_CASE("malformed rows report the line number") {
    std::istringstream bad("year,age,female,male,total\n1990,0,xyz,0.1,0.1\n");
    try {
        load_hmd_table(bad, TableFormat::csv);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line_number == 2);
    }
}

TEST_CASE("empty year intersection is a domain error") {
    const char* a =
        "year,age,female,male,total\n1950,0,0.1,0.1,0.1\n";
    const char* b =
        "year,age,female,male,total\n1960,0,100,100,200\n";
    std::istringstream mx(a), ex(b);
    const auto t1 = load_hmd_table(mx, TableFormat::csv);
    const auto t2 = load_hmd_table(ex, TableFormat::csv);
    CHECK_THROWS_AS(build_dataset(t1, t2), std::domain_error);
}

TEST_CASE("dataset serialization round-trips exactly") {
    auto ds = load_toy();
    std::stringstream buf;
    save_dataset(buf, ds);
    auto back = load_dataset(buf);
    REQUIRE(back.ages == ds.ages);
    REQUIRE(back.years == ds.years);
    for (int s = 0; s < 3; ++s) {
        for (Eigen::Index j = 0; j < ds.rates[s].cols(); ++j)
            for (Eigen::Index i = 0; i < ds.rates[s].rows(); ++i) {
                const double a = ds.rates[s](i, j), b = back.rates[s](i, j);
                if (is_missing(a))
                    CHECK(is_missing(b));
                else
                    CHECK(a == b);
            }
    }
    // loading is idempotent: a second round-trip gives the same bytes
    std::stringstream buf2;
    save_dataset(buf2, back);
    CHECK(buf.str() == buf2.str());
}

TEST_CASE("improvement transform matches the defining ratio") {
    std::vector<int> ages = {0};
    std::vector<int> years = {2000, 2001, 2002};
    Matrix rates(1, 3);
    rates << 0.01, 0.01, 0.0;

    SUBCASE("equal adjacent rates give zero") {
        rates(0, 2) = 0.01;
        auto z = improvement_transform(ages, years, rates);
        CHECK(z.z(0, 0) == 0.0);
        CHECK(z.z(0, 1) == 0.0);
        CHECK(z.years == std::vector<int>{2001, 2002});
    }
    SUBCASE("halving gives two thirds") {
        rates(0, 0) = 0.02;
        rates(0, 1) = 0.01;
        rates(0, 2) = 0.01;
        auto z = improvement_transform(ages, years, rates);
        CHECK(z.z(0, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    }
    SUBCASE("vanishing rate approaches the supremum 2") {
        rates(0, 1) = 1e-13;
        rates(0, 2) = 1e-13;
        auto z = improvement_transform(ages, years, rates);
        CHECK(z.z(0, 0) == doctest::Approx(2.0).epsilon(1e-4));
        CHECK(z.z(0, 0) < 2.0);
    }
    SUBCASE("zero rates become missing cells") {
        auto z = improvement_transform(ages, years, rates);
        CHECK(is_missing(z.z(0, 1)));
    }
}

TEST_CASE("back transform inverts the improvement transform") {
    SUBCASE("zero improvement is the identity") {
        Vector z = Vector::Zero(3);
        Vector prev(3);
        prev << 0.1, 0.01, 0.001;
        const Vector m = back_transform(z, prev);
        CHECK((m - prev).cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("two-thirds improvement halves the rate") {
        Vector z = Vector::Constant(1, 2.0 / 3.0);
        Vector prev = Vector::Constant(1, 0.02);
        CHECK(back_transform(z, prev)(0) == doctest::Approx(0.01).epsilon(1e-12));
    }
    SUBCASE("improvements at 2 or above are clamped and flagged") {
        Vector z = Vector::Constant(2, 2.5);
        z(1) = 0.0;
        Vector prev = Vector::Constant(2, 0.02);
        int clamped = 0;
        const Vector m = back_transform(z, prev, &clamped);
        CHECK(clamped == 1);
        CHECK(m(0) > 0.0);
        CHECK(m(0) < 1e-6);
    }
}

TEST_CASE("transform then back-transform reproduces random positive matrices") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const int p = 7, n = 12;
        Matrix rates = testsupport::random_matrix(p, n, seed).array().exp() * 0.01;
        std::vector<int> ages, years;
        for (int i = 0; i < p; ++i) ages.push_back(i);
        for (int t = 0; t < n; ++t) years.push_back(1950 + t);
        const auto z = improvement_transform(ages, years, rates);
        REQUIRE(z.z.allFinite());
        // improvement sign matches the sign of the rate decline
        for (Eigen::Index t = 0; t + 1 < n; ++t)
            for (Eigen::Index i = 0; i < p; ++i) {
                const double diff = rates(i, t) - rates(i, t + 1);
                if (diff > 0.0) CHECK(z.z(i, t) > 0.0);
                if (diff < 0.0) CHECK(z.z(i, t) < 0.0);
            }
        Vector prev = rates.col(0);
        for (Eigen::Index t = 0; t + 1 < n; ++t) {
            prev = back_transform(z.z.col(t), prev);
            for (Eigen::Index i = 0; i < p; ++i)
                CHECK(prev(i) == doctest::Approx(rates(i, t + 1)).epsilon(1e-12));
        }
    }
}

TEST_CASE("year slices keep the age grid and shift the year range") {
    auto ds = load_toy();
    auto s = ds.slice_years(1, 1);
    CHECK(s.years == std::vector<int>{1951});
    CHECK(s.ages == ds.ages);
    CHECK(s.rate(Sex::female)(0, 0) == ds.rate(Sex::female)(0, 1));
}
