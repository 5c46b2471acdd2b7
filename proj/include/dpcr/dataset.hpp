#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "dpcr/common.hpp"

namespace dpcr {

enum class Sex { female = 0, male = 1, total = 2 };

inline const char* to_string(Sex s) {
    switch (s) {
        case Sex::female: return "female";
        case Sex::male: return "male";
        default: return "total";
    }
}

Sex sex_from_string(const std::string& name);

enum class TableFormat { hmd, csv };

// One parsed HMD-style table (Mx or Exposures): values per sex over a
// year x age lattice. Ages are single years; `open_age` marks an
// open-ended top group such as 110+.
struct SexTable {
    std::vector<int> years;
    std::vector<int> ages;
    std::vector<bool> open_age;
    std::array<Matrix, 3> values;  // indexed by Sex, ages x years, NaN = missing
};

struct ParseError : std::runtime_error {
    ParseError(const std::string& msg, std::size_t line)
        : std::runtime_error(msg + " (line " + std::to_string(line) + ")"), line_number(line) {}
    std::size_t line_number;
};

// Age x year mortality rates and exposures per sex. The top age cell
// aggregates everything at and above `ages.back()`.
struct MortalityDataset {
    std::vector<int> ages;   // strictly increasing; last entry is the open group
    std::vector<int> years;  // consecutive calendar years
    std::array<Matrix, 3> rates;
    std::array<Matrix, 3> exposures;

    const Matrix& rate(Sex s) const { return rates[static_cast<int>(s)]; }
    const Matrix& exposure(Sex s) const { return exposures[static_cast<int>(s)]; }
    Matrix& rate(Sex s) { return rates[static_cast<int>(s)]; }
    Matrix& exposure(Sex s) { return exposures[static_cast<int>(s)]; }

    std::size_t n_ages() const { return ages.size(); }
    std::size_t n_years() const { return years.size(); }

    // Dataset restricted to a prefix of the year range (expanding-window fits).
    MortalityDataset slice_years(std::size_t first, std::size_t count) const;
};

// Stationary improvement curves z_{x,t} plus the last raw rate curve
// needed to map forecasts back to the rate scale.
struct ImprovementSeries {
    std::vector<int> ages;
    std::vector<int> years;  // starts one year after the source rates
    Matrix z;                // ages x years, each entry in (-2, 2) where defined
    Vector anchor;           // rate curve of the final source year
};

// Parse one HMD fixed-width/whitespace table (columns Year Age Female
// Male Total) or the CSV equivalent with header year,age,female,male,total.
SexTable load_hmd_table(std::istream& in, TableFormat format);

// Combine a rate table and an exposure table into a dataset: intersect the
// year ranges, truncate to years >= 1950, keep single ages 0-99 and fold
// everything at 100+ into one group via deaths/exposure aggregation.
MortalityDataset build_dataset(const SexTable& mx, const SexTable& exposures,
                               int first_year = 1950, int top_age = 100);

// Serialized dataset format: one row per (year, age), full precision.
MortalityDataset load_dataset(std::istream& in);
void save_dataset(std::ostream& out, const MortalityDataset& ds);
MortalityDataset load_dataset_file(const std::string& path);
void save_dataset_file(const std::string& path, const MortalityDataset& ds);

// z_{x,t} = 2 (m_{x,t-1} - m_{x,t}) / (m_{x,t-1} + m_{x,t}). Cells with a
// non-positive or missing adjacent rate become missing.
ImprovementSeries improvement_transform(const std::vector<int>& ages,
                                        const std::vector<int>& years, const Matrix& rates);

ImprovementSeries improvement_transform(const MortalityDataset& ds, Sex sex);

// m_{x,t} = m_{x,t-1} (2 + z) / (2 - z). Forecast improvements at or above
// 2 are clamped to 2 - eps; the count of clamped cells is reported through
// `clamped` when given.
Vector back_transform(const Vector& z, const Vector& m_prev, int* clamped = nullptr);

}  // namespace dpcr
