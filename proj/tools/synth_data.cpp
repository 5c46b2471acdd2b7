// Generates the bundled desk-scale mortality snapshots: HMD-style age x
// year panels simulated from a three-component base curve (infant decline,
// young-adult hump, senescent growth) whose improvements follow a common
// AR(1) factor plus death-count sampling noise. Parameters are calibrated
// so the panels behave like the mid-size national datasets the estimators
// are meant for.

#include <CLI11.hpp>
#include <cmath>
#include <filesystem>
#include <iostream>

#include "dpcr/dataset.hpp"
#include "dpcr/random.hpp"

using namespace dpcr;

namespace {

struct CountrySpec {
    std::string name;
    int first_year = 1950;
    int final_year = 2015;
    double exposure_scale = 1.6e6;  // female exposure at young ages
    double exposure_growth = 0.009;
    double phi = 0.42;       // AR(1) coefficient of the common factor
    double factor_scale = 1.0;
    std::uint64_t seed = 0;
};

double base_rate(double x, bool male) {
    const double infant = (male ? 0.034 : 0.027) * std::exp(-0.52 * x);
    const double hump_height = male ? 1.6e-3 : 5.5e-4;
    const double hump = hump_height * std::exp(-0.5 * std::pow((x - 21.0) / 8.0, 2.0));
    const double senescent = (male ? 4.2e-5 : 2.4e-5) * std::exp(0.094 * x);
    return infant + hump + senescent;
}

double mean_improvement(double x) { return 0.024 * std::exp(-x / 42.0) + 0.007; }

double factor_loading(double x) { return 0.016 * std::exp(-x / 34.0) + 0.0045; }

double hump_loading(double x) { return 0.007 * std::exp(-0.5 * std::pow((x - 45.0) / 22.0, 2.0)); }

double exposure_profile(double x) {
    const double taper = x < 58.0 ? 1.0 : std::exp(-(x - 58.0) / 11.5);
    const double youth = 1.0 - 0.15 * std::exp(-x / 12.0);
    return taper * youth;
}

MortalityDataset simulate(const CountrySpec& spec) {
    const int p = 101;
    const int n = spec.final_year - spec.first_year + 1;
    MortalityDataset ds;
    for (int a = 0; a < p; ++a) ds.ages.push_back(a);
    for (int y = 0; y < n; ++y) ds.years.push_back(spec.first_year + y);
    for (auto& m : ds.rates) m = Matrix::Zero(p, n);
    for (auto& m : ds.exposures) m = Matrix::Zero(p, n);

    Rng rng(spec.seed);
    // shared factor across sexes; sex-specific second factor and noise
    std::vector<double> kappa(n, 0.0), kappa2(n, 0.0);
    const double sd_innov = std::sqrt(1.0 - spec.phi * spec.phi);
    kappa[0] = rng.normal();
    kappa2[0] = rng.normal();
    for (int t = 1; t < n; ++t) {
        kappa[t] = spec.phi * kappa[t - 1] + sd_innov * rng.normal();
        kappa2[t] = 0.25 * kappa2[t - 1] + std::sqrt(1.0 - 0.25 * 0.25) * rng.normal();
    }

    for (int s = 0; s < 2; ++s) {  // female, male
        const bool male = s == 1;
        Vector m_true(p);
        for (int i = 0; i < p; ++i) m_true(i) = base_rate(ds.ages[i], male);

        const double sex_shift = male ? 0.92 : 1.0;
        for (int t = 0; t < n; ++t) {
            if (t > 0) {
                for (int i = 0; i < p; ++i) {
                    const double x = ds.ages[i];
                    const double z = mean_improvement(x) * sex_shift +
                                     spec.factor_scale * factor_loading(x) * kappa[t] +
                                     0.6 * hump_loading(x) * kappa2[t];
                    m_true(i) *= (2.0 - z) / (2.0 + z);
                }
            }
            for (int i = 0; i < p; ++i) {
                const double x = ds.ages[i];
                const double expo = spec.exposure_scale * (male ? 0.97 : 1.0) *
                                    exposure_profile(x) *
                                    std::pow(1.0 + spec.exposure_growth, t);
                const double expected_deaths = m_true(i) * expo;
                double deaths = expected_deaths + std::sqrt(expected_deaths) * rng.normal();
                if (deaths < 0.5) deaths = 0.5;
                ds.rates[s](i, t) = deaths / expo;
                ds.exposures[s](i, t) = expo;
            }
        }
    }
    // total series from the pooled counts
    for (int t = 0; t < n; ++t)
        for (int i = 0; i < p; ++i) {
            const double ef = ds.exposures[0](i, t);
            const double em = ds.exposures[1](i, t);
            const double deaths = ds.rates[0](i, t) * ef + ds.rates[1](i, t) * em;
            ds.exposures[2](i, t) = ef + em;
            ds.rates[2](i, t) = deaths / (ef + em);
        }
    return ds;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"generate the bundled synthetic mortality snapshots"};
    std::string out_dir = "data";
    double phi = 0.0;
    app.add_option("--out-dir", out_dir, "output directory")->default_val(out_dir);
    app.add_option("--phi", phi, "override the common-factor AR coefficient (0 keeps defaults)");
    CLI11_PARSE(app, argc, argv);

    std::vector<CountrySpec> countries = {
        {"usa", 1950, 2015, 1.6e6, 0.009, 0.42, 1.0, 20240501},
        {"borealia", 1950, 2014, 3.2e5, 0.007, 0.38, 1.1, 20240502},
        {"meridia", 1950, 2013, 5.5e5, 0.011, 0.46, 0.9, 20240503},
    };

    std::filesystem::create_directories(out_dir);
    for (auto& c : countries) {
        if (phi > 0.0) c.phi = phi;
        const MortalityDataset ds = simulate(c);
        const std::string path = out_dir + "/" + c.name + ".csv";
        save_dataset_file(path, ds);
        std::cout << "wrote " << path << " (" << ds.n_ages() << " ages x " << ds.n_years()
                  << " years)\n";
    }
    return 0;
}
