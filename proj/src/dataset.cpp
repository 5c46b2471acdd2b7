#include "dpcr/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace dpcr {

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(trim(field));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

std::vector<std::string> split_ws(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string tok;
    while (ss >> tok) out.push_back(tok);
    return out;
}

bool parse_value(const std::string& tok, double& out) {
    if (tok.empty() || tok == "." || tok == "NA" || tok == "nan" || tok == "NaN") {
        out = missing_value;
        return true;
    }
    char* end = nullptr;
    out = std::strtod(tok.c_str(), &end);
    return end == tok.c_str() + tok.size();
}

// Ages come as "0".."109" or an open group like "110+".
bool parse_age(const std::string& tok, int& age, bool& open) {
    std::string t = tok;
    open = false;
    if (!t.empty() && t.back() == '+') {
        open = true;
        t.pop_back();
    }
    auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), age);
    return ec == std::errc{} && p == t.data() + t.size();
}

struct Cell {
    double v[3] = {missing_value, missing_value, missing_value};
};

}  // namespace

Sex sex_from_string(const std::string& name) {
    const std::string n = lower(name);
    if (n == "female" || n == "f") return Sex::female;
    if (n == "male" || n == "m") return Sex::male;
    if (n == "total" || n == "t") return Sex::total;
    throw std::invalid_argument("unknown sex: " + name);
}

SexTable load_hmd_table(std::istream& in, TableFormat format) {
    std::map<int, std::map<std::pair<int, bool>, Cell>> rows;  // year -> (age, open) -> cell
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty()) continue;
        std::vector<std::string> tok =
            format == TableFormat::csv ? split_csv(t) : split_ws(t);
        if (tok.empty()) continue;
        const std::string first = lower(tok[0]);
        if (first == "year") {
            header_seen = true;
            continue;
        }
        // HMD files carry a free-text preamble before the header line.
        if (!header_seen && format == TableFormat::hmd) {
            int y = 0;
            auto [p, ec] = std::from_chars(tok[0].data(), tok[0].data() + tok[0].size(), y);
            if (ec != std::errc{} || p != tok[0].data() + tok[0].size()) continue;
            header_seen = true;  // data started without an explicit header
        }
        if (tok.size() < 5) throw ParseError("expected 5 columns (year age female male total)", line_no);
        int year = 0;
        {
            auto [p, ec] = std::from_chars(tok[0].data(), tok[0].data() + tok[0].size(), year);
            if (ec != std::errc{} || p != tok[0].data() + tok[0].size())
                throw ParseError("malformed year '" + tok[0] + "'", line_no);
        }
        int age = 0;
        bool open = false;
        if (!parse_age(tok[1], age, open)) throw ParseError("malformed age '" + tok[1] + "'", line_no);
        Cell c;
        for (int s = 0; s < 3; ++s)
            if (!parse_value(tok[2 + s], c.v[s]))
                throw ParseError("malformed value '" + tok[2 + s] + "'", line_no);
        rows[year][{age, open}] = c;
    }
    if (rows.empty()) throw std::domain_error("table contains no data rows");

    SexTable out;
    for (const auto& [year, _] : rows) out.years.push_back(year);
    std::map<std::pair<int, bool>, std::size_t> age_index;
    for (const auto& [year, by_age] : rows)
        for (const auto& [key, _] : by_age)
            if (!age_index.count(key)) age_index[key] = 0;
    for (auto& [key, idx] : age_index) {
        idx = out.ages.size();
        out.ages.push_back(key.first);
        out.open_age.push_back(key.second);
    }
    const auto p = static_cast<Eigen::Index>(out.ages.size());
    const auto n = static_cast<Eigen::Index>(out.years.size());
    for (auto& m : out.values) m = Matrix::Constant(p, n, missing_value);
    Eigen::Index col = 0;
    for (const auto& [year, by_age] : rows) {
        for (const auto& [key, cell] : by_age) {
            const auto row = static_cast<Eigen::Index>(age_index[key]);
            for (int s = 0; s < 3; ++s) out.values[s](row, col) = cell.v[s];
        }
        ++col;
    }
    return out;
}

namespace {

// Index of (age, open) in a table, or -1.
int find_age(const SexTable& t, int age, bool open) {
    for (std::size_t i = 0; i < t.ages.size(); ++i)
        if (t.ages[i] == age && t.open_age[i] == open) return static_cast<int>(i);
    return -1;
}

}  // namespace

MortalityDataset build_dataset(const SexTable& mx, const SexTable& exposures,
                               int first_year, int top_age) {
    std::vector<int> years;
    for (int y : mx.years)
        if (y >= first_year && std::find(exposures.years.begin(), exposures.years.end(), y) !=
                                   exposures.years.end())
            years.push_back(y);
    if (years.empty()) throw std::domain_error("no overlapping years at or after 1950");
    for (std::size_t i = 1; i < years.size(); ++i)
        if (years[i] != years[i - 1] + 1)
            throw std::domain_error("year range has gaps after intersection");

    std::vector<int> ages;
    for (int a = 0; a < top_age; ++a)
        if (find_age(mx, a, false) >= 0) ages.push_back(a);
    ages.push_back(top_age);

    MortalityDataset ds;
    ds.ages = ages;
    ds.years = years;
    const auto p = static_cast<Eigen::Index>(ages.size());
    const auto n = static_cast<Eigen::Index>(years.size());
    for (auto& m : ds.rates) m = Matrix::Constant(p, n, missing_value);
    for (auto& m : ds.exposures) m = Matrix::Constant(p, n, missing_value);

    std::vector<int> mx_col(years.size()), ex_col(years.size());
    for (std::size_t j = 0; j < years.size(); ++j) {
        mx_col[j] = static_cast<int>(std::find(mx.years.begin(), mx.years.end(), years[j]) -
                                     mx.years.begin());
        ex_col[j] = static_cast<int>(
            std::find(exposures.years.begin(), exposures.years.end(), years[j]) -
            exposures.years.begin());
    }

    for (int s = 0; s < 3; ++s) {
        const Matrix& rv = mx.values[s];
        const Matrix& ev = exposures.values[s];
        for (Eigen::Index i = 0; i + 1 < p; ++i) {
            const int ri = find_age(mx, ages[i], false);
            const int ei = find_age(exposures, ages[i], false);
            if (ri < 0) continue;
            for (Eigen::Index j = 0; j < n; ++j) {
                ds.rates[s](i, j) = rv(ri, mx_col[j]);
                if (ei >= 0) ds.exposures[s](i, j) = ev(ei, ex_col[j]);
            }
        }
        // 100+ group: sum deaths and exposures over all source cells at or
        // above the top age, then recompute the rate.
        for (Eigen::Index j = 0; j < n; ++j) {
            double deaths = 0.0, expo = 0.0;
            bool any = false;
            for (std::size_t k = 0; k < mx.ages.size(); ++k) {
                if (mx.ages[k] < top_age) continue;
                const int ek = find_age(exposures, mx.ages[k], mx.open_age[k]);
                if (ek < 0) continue;
                const double m = rv(k, mx_col[j]);
                const double e = exposures.values[s](ek, ex_col[j]);
                if (is_missing(m) || is_missing(e) || e <= 0.0) continue;
                deaths += m * e;
                expo += e;
                any = true;
            }
            if (any && expo > 0.0) {
                ds.rates[s](p - 1, j) = deaths / expo;
                ds.exposures[s](p - 1, j) = expo;
            }
        }
    }
    return ds;
}

MortalityDataset MortalityDataset::slice_years(std::size_t first, std::size_t count) const {
    if (first + count > years.size()) throw std::domain_error("slice_years: range outside dataset");
    MortalityDataset out;
    out.ages = ages;
    out.years.assign(years.begin() + static_cast<long>(first),
                     years.begin() + static_cast<long>(first + count));
    const auto f = static_cast<Eigen::Index>(first);
    const auto c = static_cast<Eigen::Index>(count);
    for (int s = 0; s < 3; ++s) {
        out.rates[s] = rates[s].middleCols(f, c);
        out.exposures[s] = exposures[s].middleCols(f, c);
    }
    return out;
}

namespace {

void write_value(std::ostream& out, double v) {
    if (is_missing(v)) {
        out << '.';
    } else {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out << buf;
    }
}

}  // namespace

void save_dataset(std::ostream& out, const MortalityDataset& ds) {
    out << "year,age,female,male,total,female_exposure,male_exposure,total_exposure\n";
    const auto p = static_cast<Eigen::Index>(ds.ages.size());
    const auto n = static_cast<Eigen::Index>(ds.years.size());
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = 0; i < p; ++i) {
            out << ds.years[j] << ',' << ds.ages[i];
            if (i == p - 1) out << '+';
            for (int s = 0; s < 3; ++s) {
                out << ',';
                write_value(out, ds.rates[s](i, j));
            }
            for (int s = 0; s < 3; ++s) {
                out << ',';
                write_value(out, ds.exposures[s](i, j));
            }
            out << '\n';
        }
    }
}

MortalityDataset load_dataset(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) throw std::domain_error("empty dataset file");
    ++line_no;
    const auto header = split_csv(lower(line));
    if (header.size() < 8 || header[0] != "year" || header[1] != "age")
        throw ParseError("expected dataset header year,age,female,male,total,...exposures", line_no);

    struct Row {
        int age;
        bool open;
        double v[6];
    };
    std::map<int, std::vector<Row>> by_year;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty()) continue;
        const auto tok = split_csv(t);
        if (tok.size() < 8) throw ParseError("expected 8 columns", line_no);
        Row r{};
        int year = 0;
        auto [p1, ec1] = std::from_chars(tok[0].data(), tok[0].data() + tok[0].size(), year);
        if (ec1 != std::errc{} || p1 != tok[0].data() + tok[0].size())
            throw ParseError("malformed year '" + tok[0] + "'", line_no);
        if (!parse_age(tok[1], r.age, r.open)) throw ParseError("malformed age '" + tok[1] + "'", line_no);
        for (int k = 0; k < 6; ++k)
            if (!parse_value(tok[2 + k], r.v[k]))
                throw ParseError("malformed value '" + tok[2 + k] + "'", line_no);
        by_year[year].push_back(r);
    }
    if (by_year.empty()) throw std::domain_error("dataset file contains no rows");

    MortalityDataset ds;
    for (const auto& [y, _] : by_year) ds.years.push_back(y);
    for (const auto& r : by_year.begin()->second) ds.ages.push_back(r.age);
    const auto p = static_cast<Eigen::Index>(ds.ages.size());
    const auto n = static_cast<Eigen::Index>(ds.years.size());
    for (auto& m : ds.rates) m = Matrix::Constant(p, n, missing_value);
    for (auto& m : ds.exposures) m = Matrix::Constant(p, n, missing_value);
    Eigen::Index j = 0;
    for (const auto& [y, rows] : by_year) {
        if (static_cast<Eigen::Index>(rows.size()) != p)
            throw std::domain_error("year " + std::to_string(y) + " has inconsistent age rows");
        for (Eigen::Index i = 0; i < p; ++i) {
            if (rows[i].age != ds.ages[i])
                throw std::domain_error("age grid differs across years");
            for (int s = 0; s < 3; ++s) {
                ds.rates[s](i, j) = rows[i].v[s];
                ds.exposures[s](i, j) = rows[i].v[3 + s];
            }
        }
        ++j;
    }
    return ds;
}

MortalityDataset load_dataset_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return load_dataset(in);
}

void save_dataset_file(const std::string& path, const MortalityDataset& ds) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    save_dataset(out, ds);
}

ImprovementSeries improvement_transform(const std::vector<int>& ages,
                                        const std::vector<int>& years, const Matrix& rates) {
    const Eigen::Index n = rates.cols();
    const Eigen::Index p = rates.rows();
    if (n < 2) throw std::domain_error("improvement_transform: need at least 2 years");
    ImprovementSeries out;
    out.ages = ages;
    out.years.assign(years.begin() + 1, years.end());
    out.z = Matrix::Constant(p, n - 1, missing_value);
    for (Eigen::Index t = 1; t < n; ++t) {
        for (Eigen::Index i = 0; i < p; ++i) {
            const double prev = rates(i, t - 1);
            const double cur = rates(i, t);
            // zero observed rates are treated as missing: the ratio
            // transform is undefined at 0
            if (is_missing(prev) || is_missing(cur) || prev <= 0.0 || cur < 0.0) continue;
            const double denom = prev + cur;
            if (denom == 0.0) continue;
            if (cur == 0.0) continue;
            out.z(i, t - 1) = 2.0 * (prev - cur) / denom;
        }
    }
    out.anchor = rates.col(n - 1);
    return out;
}

ImprovementSeries improvement_transform(const MortalityDataset& ds, Sex sex) {
    return improvement_transform(ds.ages, ds.years, ds.rate(sex));
}

Vector back_transform(const Vector& z, const Vector& m_prev, int* clamped) {
    if (z.size() != m_prev.size())
        throw std::invalid_argument("back_transform: curve lengths differ");
    constexpr double eps = 1e-8;
    Vector out(z.size());
    int n_clamped = 0;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        double zi = z(i);
        // improvements at or beyond the transform's range would push the
        // rate to zero or below; clamp into the feasible interval
        if (zi >= 2.0) {
            zi = 2.0 - eps;
            ++n_clamped;
        } else if (zi <= -2.0) {
            zi = -2.0 + eps;
            ++n_clamped;
        }
        out(i) = m_prev(i) * (2.0 - zi) / (2.0 + zi);
    }
    if (clamped) *clamped += n_clamped;
    return out;
}

}  // namespace dpcr
