#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "dpcr/evaluation.hpp"

namespace fs = std::filesystem;
using namespace dpcr;

namespace {

std::string fmt6(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::string fmt_full(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    return out;
}

MortalityDataset load_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path, 0);
    return load_dataset(in);
}

struct CommonOpts {
    std::string data;
    std::string sex = "female";
    std::string method = "lc";
    bool no_centering = false;
    std::string mode = "dynamic";
    std::string bandwidth = "auto";
    double threshold = 0.85;
    double alpha = 0.2;
    int B = 1000;
    std::uint64_t seed = 1;
    int holdout = 30;
    int horizon = 1;

    double bandwidth_value() const {
        if (bandwidth == "auto") return 0.0;
        char* end = nullptr;
        const double v = std::strtod(bandwidth.c_str(), &end);
        if (end == bandwidth.c_str() + bandwidth.size() && v > 0.0) return v;
        throw CLI::ValidationError("--bandwidth", "expected 'auto' or a positive number");
    }
    Method method_value() const {
        if (method == "lc") return Method::lee_carter;
        if (method == "fts") return Method::functional_ts;
        throw CLI::ValidationError("--method", "expected lc or fts");
    }
    PcaMode mode_value() const {
        if (mode == "static") return PcaMode::static_pca;
        if (mode == "dynamic") return PcaMode::dynamic_pca;
        throw CLI::ValidationError("--mode", "expected static or dynamic");
    }
};

void add_model_options(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--data", o.data, "serialized dataset CSV")->required();
    cmd->add_option("--sex", o.sex, "female, male or total")->default_val(o.sex);
    cmd->add_option("--method", o.method, "lc or fts")->default_val(o.method);
    cmd->add_flag("--no-centering", o.no_centering, "skip the mean curve (LC only)");
    cmd->add_option("--mode", o.mode, "static or dynamic decomposition")->default_val(o.mode);
    cmd->add_option("--bandwidth", o.bandwidth, "'auto' for the plug-in rule or a fixed value")
        ->default_val(o.bandwidth);
    cmd->add_option("--threshold", o.threshold, "explained-share rule for K")->default_val(o.threshold);
}

ModelFit run_fit(const CommonOpts& o) {
    const MortalityDataset ds = load_input(o.data);
    const Sex sex = sex_from_string(o.sex);
    FitOptions fopts;
    fopts.mode = o.mode_value();
    fopts.bandwidth = o.bandwidth_value();
    fopts.threshold = o.threshold;
    if (o.method_value() == Method::lee_carter)
        return fit_lc(improvement_transform(ds, sex), !o.no_centering, fopts);
    return fit_fts(ds, sex, fopts);
}

void write_surface_csv(std::ostream& out, const CovarianceSurface& s) {
    out << "age";
    for (int a : s.grid) out << ',' << a;
    out << '\n';
    for (Eigen::Index i = 0; i < s.values.rows(); ++i) {
        out << s.grid[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < s.values.cols(); ++j) out << ',' << fmt_full(s.values(i, j));
        out << '\n';
    }
}

const char* mode_name(PcaMode m) { return m == PcaMode::dynamic_pca ? "dynamic" : "static"; }
const char* method_name(Method m) { return m == Method::lee_carter ? "lc" : "fts"; }

int cmd_ingest(const std::vector<std::string>& inputs, const std::string& format,
               const std::string& out_path) {
    MortalityDataset ds;
    if (inputs.size() == 1) {
        ds = load_input(inputs[0]);  // re-ingest of a serialized dataset
    } else if (inputs.size() == 2) {
        const TableFormat f = format == "csv" ? TableFormat::csv : TableFormat::hmd;
        std::ifstream mx_in(inputs[0]);
        if (!mx_in) throw ParseError("cannot open " + inputs[0], 0);
        std::ifstream ex_in(inputs[1]);
        if (!ex_in) throw ParseError("cannot open " + inputs[1], 0);
        const SexTable mx = load_hmd_table(mx_in, f);
        const SexTable ex = load_hmd_table(ex_in, f);
        ds = build_dataset(mx, ex);
    } else {
        throw CLI::ValidationError("ingest", "expected RATES EXPOSURES or one dataset file");
    }
    auto out = open_out(out_path);
    save_dataset(out, ds);
    std::cout << "wrote " << out_path << ": " << ds.n_ages() << " ages x " << ds.n_years()
              << " years (" << ds.years.front() << "-" << ds.years.back() << ")\n";
    return 0;
}

int cmd_smooth(const CommonOpts& o, int monotone_age, const std::string& out_path) {
    const MortalityDataset ds = load_input(o.data);
    MortalityDataset smoothed = ds;
    for (const Sex s : {Sex::female, Sex::male, Sex::total}) {
        const SmoothedCurveSet sm = smooth_dataset(ds, s, monotone_age);
        smoothed.rate(s) = sm.log_rates.array().exp();
    }
    auto out = open_out(out_path);
    // raw dataset layout plus a marker column
    std::stringstream buf;
    save_dataset(buf, smoothed);
    std::string line;
    bool header = true;
    while (std::getline(buf, line)) {
        out << line << (header ? ",smoothed" : ",1") << '\n';
        header = false;
    }
    std::cout << "wrote " << out_path << '\n';
    return 0;
}

int cmd_cov(const CommonOpts& o, bool use_smoothed, const std::string& kind,
            const std::string& kernel, double h1, const std::string& out_path) {
    const MortalityDataset ds = load_input(o.data);
    const Sex sex = sex_from_string(o.sex);

    Matrix rates = ds.rate(sex);
    if (use_smoothed) rates = smooth_dataset(ds, sex).log_rates.array().exp();
    const ImprovementSeries z = improvement_transform(ds.ages, ds.years, rates);
    if (!z.z.allFinite()) throw std::domain_error("improvement series has missing cells");

    CovarianceSurface surface;
    if (kind == "variance") {
        surface = empirical_autocov(z.z, 0, z.ages);
    } else {
        const KernelSpec spec =
            kernel == "flat-top" ? KernelSpec::flat_top() : KernelSpec::bartlett();
        double h = o.bandwidth_value();
        if (h <= 0.0) {
            const PluginBandwidthResult pb =
                plugin_bandwidth(z.z, z.ages, KernelSpec::flat_top(), spec, h1);
            h = pb.h_opt;
        }
        surface = longrun_cov(z.z, h, spec, z.ages);
        std::cout << "bandwidth " << fmt6(h) << '\n';
    }
    if (!out_path.empty()) {
        auto out = open_out(out_path);
        write_surface_csv(out, surface);
        std::cout << "wrote " << out_path << '\n';
    }
    return 0;
}

int cmd_fit(const CommonOpts& o, const std::string& out_dir) {
    const ModelFit fit = run_fit(o);
    fs::create_directories(out_dir);

    const std::string comp_path = (fs::path(out_dir) / "components.csv").string();
    auto comp = open_out(comp_path);
    comp << "age,mean";
    for (int k = 0; k < fit.basis.K; ++k) comp << ",component" << (k + 1);
    comp << '\n';
    for (std::size_t i = 0; i < fit.ages.size(); ++i) {
        comp << fit.ages[i] << ',' << fmt_full(fit.basis.mean(static_cast<Eigen::Index>(i)));
        for (int k = 0; k < fit.basis.K; ++k)
            comp << ',' << fmt_full(fit.basis.components(static_cast<Eigen::Index>(i), k));
        comp << '\n';
    }

    const std::string score_path = (fs::path(out_dir) / "scores.csv").string();
    auto scores = open_out(score_path);
    scores << "year";
    for (int k = 0; k < fit.basis.K; ++k) scores << ",score" << (k + 1);
    scores << '\n';
    for (Eigen::Index t = 0; t < fit.basis.scores.rows(); ++t) {
        scores << fit.improvements.years[static_cast<std::size_t>(t)];
        for (int k = 0; k < fit.basis.K; ++k) scores << ',' << fmt_full(fit.basis.scores(t, k));
        scores << '\n';
    }

    std::cout << "method " << method_name(fit.method) << " mode " << mode_name(fit.mode)
              << " K " << fit.basis.K;
    if (fit.mode == PcaMode::dynamic_pca) std::cout << " bandwidth " << fmt6(fit.basis.bandwidth);
    std::cout << '\n';
    for (std::size_t k = 0; k < fit.score_models.size(); ++k) {
        const ArimaModel& m = fit.score_models[k];
        std::cout << "score" << (k + 1) << " arima(" << m.p << ',' << m.d << ',' << m.q << ")"
                  << (m.include_mean ? " with mean " : " ") << "aicc " << fmt6(m.aicc) << '\n';
    }
    std::cout << "wrote " << comp_path << ", " << score_path << '\n';
    return 0;
}

int cmd_forecast(const CommonOpts& o, const std::string& out_path) {
    const ModelFit fit = run_fit(o);
    const PointForecast pf = point_forecast(fit, o.horizon);
    auto out = open_out(out_path);
    out << "method,mode,sex,year,age,rate,improvement\n";
    for (int s = 0; s < o.horizon; ++s)
        for (std::size_t i = 0; i < fit.ages.size(); ++i)
            out << method_name(fit.method) << ',' << mode_name(fit.mode) << ',' << o.sex << ','
                << pf.years[static_cast<std::size_t>(s)] << ',' << fit.ages[i] << ','
                << fmt_full(pf.rates(static_cast<Eigen::Index>(i), s)) << ','
                << fmt_full(pf.improvements(static_cast<Eigen::Index>(i), s)) << '\n';
    if (pf.clamped > 0)
        std::cout << "warning: " << pf.clamped << " improvement forecasts clamped below 2\n";
    std::cout << "wrote " << out_path << '\n';
    return 0;
}

int cmd_interval(const CommonOpts& o, const std::string& out_path) {
    const ModelFit fit = run_fit(o);
    const PredictionInterval pi = bootstrap_interval(fit, o.horizon, o.alpha, o.B, o.seed);
    auto out = open_out(out_path);
    out << "method,mode,sex,horizon,age,lower,upper,level\n";
    for (int s = 0; s < o.horizon; ++s)
        for (std::size_t i = 0; i < fit.ages.size(); ++i)
            out << method_name(fit.method) << ',' << mode_name(fit.mode) << ',' << o.sex << ','
                << (s + 1) << ',' << fit.ages[i] << ','
                << fmt_full(pi.lower_rate(static_cast<Eigen::Index>(i), s)) << ','
                << fmt_full(pi.upper_rate(static_cast<Eigen::Index>(i), s)) << ','
                << fmt_full(pi.level) << '\n';
    if (pi.clamped > 0)
        std::cout << "warning: " << pi.clamped << " bootstrap improvements clamped below 2\n";
    std::cout << "wrote " << out_path << '\n';
    return 0;
}

EvaluationOptions eval_options(const CommonOpts& o, bool with_intervals, bool literal_rmsfe) {
    EvaluationOptions eopts;
    eopts.method = o.method_value();
    eopts.centering = !o.no_centering;
    eopts.holdout = o.holdout;
    eopts.horizon = o.horizon;
    eopts.with_intervals = with_intervals;
    eopts.alpha = o.alpha;
    eopts.B = o.B;
    eopts.seed = o.seed;
    eopts.bandwidth = o.bandwidth_value();
    eopts.threshold = o.threshold;
    eopts.literal_rmsfe = literal_rmsfe;
    return eopts;
}

void print_report(const EvaluationReport& report) {
    for (const auto& e : report.entries) {
        std::cout << e.label << ' ' << mode_name(e.mode) << " windows " << e.windows_used
                  << " failures " << e.failures << " mafe_x100 " << fmt6(100.0 * e.mafe)
                  << " rmsfe_x100 " << fmt6(100.0 * e.rmsfe);
        if (report.opts.with_intervals)
            std::cout << " score_x100 " << fmt6(100.0 * e.interval_score) << " cpd_x100 "
                      << fmt6(100.0 * e.cpd);
        std::cout << '\n';
    }
}

void write_windows_csv(const std::string& path, const EvaluationReport& report) {
    auto out = open_out(path);
    out << "label,method,mode,window,mafe_x100\n";
    for (const auto& e : report.entries)
        for (std::size_t w = 0; w < e.window_mafe.size(); ++w)
            out << e.label << ',' << method_name(report.opts.method) << ',' << mode_name(e.mode)
                << ',' << (w + 1) << ',' << fmt_full(100.0 * e.window_mafe[w]) << '\n';
}

int cmd_evaluate(const CommonOpts& o, const std::vector<std::string>& data_paths,
                 bool no_intervals, bool literal_rmsfe, const std::string& out_dir) {
    std::vector<std::pair<std::string, MortalityDataset>> data;
    for (const auto& path : data_paths)
        data.emplace_back(fs::path(path).stem().string(), load_input(path));

    const EvaluationReport report =
        evaluate_datasets(data, sex_from_string(o.sex), eval_options(o, !no_intervals, literal_rmsfe));

    fs::create_directories(out_dir);
    const std::string report_path =
        (fs::path(out_dir) / (std::string("report_") + o.method + ".csv")).string();
    auto out = open_out(report_path);
    write_report_csv(out, report);
    write_windows_csv((fs::path(out_dir) / (std::string("windows_") + o.method + ".csv")).string(),
                      report);
    print_report(report);
    std::cout << "wrote " << report_path << '\n';
    return 0;
}

int cmd_compare(CommonOpts o, const std::vector<std::string>& data_paths, bool no_intervals,
                const std::string& out_dir) {
    for (const char* m : {"lc", "fts"}) {
        o.method = m;
        cmd_evaluate(o, data_paths, no_intervals, false, out_dir);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dynamic vs static principal component regression for age-specific "
                 "mortality forecasting"};
    app.require_subcommand(1);
    app.set_config("--config", "", "flat key=value config file; command-line flags win");
    app.fallthrough();

    CommonOpts o;
    bool dump_config = false;
    app.add_flag("--dump-config", dump_config, "print the effective configuration and exit");

    // ingest
    std::vector<std::string> ingest_inputs;
    std::string ingest_format = "hmd";
    std::string ingest_out = "dataset.csv";
    auto* ingest = app.add_subcommand("ingest", "parse HMD rate/exposure tables into a dataset");
    ingest->add_option("inputs", ingest_inputs, "RATES EXPOSURES, or one serialized dataset")
        ->expected(1, 2)
        ->required();
    ingest->add_option("--format", ingest_format, "hmd or csv")->default_val(ingest_format);
    ingest->add_option("--out", ingest_out, "output dataset CSV")->default_val(ingest_out);

    // smooth
    auto* smooth = app.add_subcommand("smooth", "weighted penalized smoothing of log rates");
    int monotone_age = 65;
    std::string smooth_out = "smoothed.csv";
    smooth->add_option("--data", o.data, "serialized dataset CSV")->required();
    smooth->add_option("--monotone-age", monotone_age, "monotone constraint from this age")
        ->default_val(monotone_age);
    smooth->add_option("--out", smooth_out, "output CSV")->default_val(smooth_out);

    // cov
    auto* cov = app.add_subcommand("cov", "variance or long-run covariance surface export");
    bool cov_smoothed = false;
    std::string cov_kind = "longrun";
    std::string cov_kernel = "bartlett";
    double cov_h1 = 0.0;
    std::string cov_out;
    cov->add_option("--data", o.data, "serialized dataset CSV")->required();
    cov->add_option("--sex", o.sex, "female, male or total")->default_val(o.sex);
    cov->add_flag("--smoothed", cov_smoothed, "smooth log rates before the improvement transform");
    cov->add_option("--kind", cov_kind, "longrun or variance")->default_val(cov_kind);
    cov->add_option("--kernel", cov_kernel, "bartlett or flat-top")->default_val(cov_kernel);
    cov->add_option("--bandwidth", o.bandwidth, "'auto' or a fixed value")->default_val(o.bandwidth);
    cov->add_option("--h1", cov_h1, "initial plug-in bandwidth; 0 uses n^(1/5)")->default_val(cov_h1);
    cov->add_option("--out", cov_out, "surface CSV path");

    // fit / forecast / interval
    auto* fit = app.add_subcommand("fit", "fit one model and export components and scores");
    add_model_options(fit, o);
    std::string fit_out_dir = ".";
    fit->add_option("--out-dir", fit_out_dir, "output directory")->default_val(fit_out_dir);

    auto* fc = app.add_subcommand("forecast", "point forecasts on the rate scale");
    add_model_options(fc, o);
    std::string fc_out = "forecast.csv";
    fc->add_option("--horizon", o.horizon, "forecast horizon in years")->default_val(o.horizon);
    fc->add_option("--out", fc_out, "output CSV")->default_val(fc_out);

    auto* iv = app.add_subcommand("interval", "bootstrap prediction intervals");
    add_model_options(iv, o);
    std::string iv_out = "interval.csv";
    iv->add_option("--horizon", o.horizon, "forecast horizon in years")->default_val(o.horizon);
    iv->add_option("--alpha", o.alpha, "1 - interval level")->default_val(o.alpha);
    iv->add_option("--B", o.B, "bootstrap replications")->default_val(o.B);
    iv->add_option("--seed", o.seed, "bootstrap seed")->default_val(o.seed);
    iv->add_option("--out", iv_out, "output CSV")->default_val(iv_out);

    // evaluate / compare
    auto* ev = app.add_subcommand("evaluate", "expanding-window accuracy, dynamic vs static");
    std::vector<std::string> ev_data;
    bool ev_no_intervals = false;
    bool ev_literal_rmsfe = false;
    std::string ev_out_dir = ".";
    ev->add_option("--data", ev_data, "one or more dataset CSVs")->required()->expected(-1);
    ev->add_option("--sex", o.sex, "female, male or total")->default_val(o.sex);
    ev->add_option("--method", o.method, "lc or fts")->default_val(o.method);
    ev->add_flag("--no-centering", o.no_centering, "skip the mean curve (LC only)");
    ev->add_option("--holdout", o.holdout, "evaluation windows")->default_val(o.holdout);
    ev->add_option("--horizon", o.horizon, "forecast horizon")->default_val(o.horizon);
    ev->add_option("--alpha", o.alpha, "1 - interval level")->default_val(o.alpha);
    ev->add_option("--B", o.B, "bootstrap replications")->default_val(o.B);
    ev->add_option("--seed", o.seed, "bootstrap seed")->default_val(o.seed);
    ev->add_option("--bandwidth", o.bandwidth, "'auto' or a fixed value")->default_val(o.bandwidth);
    ev->add_option("--threshold", o.threshold, "explained-share rule for K")->default_val(o.threshold);
    ev->add_flag("--no-intervals", ev_no_intervals, "skip interval criteria");
    ev->add_flag("--literal-rmsfe", ev_literal_rmsfe, "root inside the sum (table-parity variant)");
    ev->add_option("--out-dir", ev_out_dir, "output directory")->default_val(ev_out_dir);

    auto* cmp = app.add_subcommand("compare", "evaluate both methods on the same data");
    cmp->add_option("--data", ev_data, "one or more dataset CSVs")->required()->expected(-1);
    cmp->add_option("--sex", o.sex, "female, male or total")->default_val(o.sex);
    cmp->add_option("--holdout", o.holdout, "evaluation windows")->default_val(o.holdout);
    cmp->add_option("--horizon", o.horizon, "forecast horizon")->default_val(o.horizon);
    cmp->add_option("--alpha", o.alpha, "1 - interval level")->default_val(o.alpha);
    cmp->add_option("--B", o.B, "bootstrap replications")->default_val(o.B);
    cmp->add_option("--seed", o.seed, "bootstrap seed")->default_val(o.seed);
    cmp->add_flag("--no-intervals", ev_no_intervals, "skip interval criteria");
    cmp->add_option("--out-dir", ev_out_dir, "output directory")->default_val(ev_out_dir);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (dump_config) {
            std::cout << app.config_to_str(true, false);
            return 0;
        }
        if (ingest->parsed()) return cmd_ingest(ingest_inputs, ingest_format, ingest_out);
        if (smooth->parsed()) return cmd_smooth(o, monotone_age, smooth_out);
        if (cov->parsed()) return cmd_cov(o, cov_smoothed, cov_kind, cov_kernel, cov_h1, cov_out);
        if (fit->parsed()) return cmd_fit(o, fit_out_dir);
        if (fc->parsed()) return cmd_forecast(o, fc_out);
        if (iv->parsed()) return cmd_interval(o, iv_out);
        if (ev->parsed()) return cmd_evaluate(o, ev_data, ev_no_intervals, ev_literal_rmsfe, ev_out_dir);
        if (cmp->parsed()) return cmd_compare(o, ev_data, ev_no_intervals, ev_out_dir);
    } catch (const ParseError& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return 2;
    } catch (const CLI::Error& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
