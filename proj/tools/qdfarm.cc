// Copyright 2026 The qdfarm Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// qdfarm: batch front end for simulating, analyzing and reporting on
// quantum-dot device farms.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "qdfarm/io.h"
#include "qdfarm/layout.h"
#include "qdfarm/mux.h"
#include "qdfarm/pipeline.h"
#include "qdfarm/report.h"
#include "qdfarm/rfchain.h"
#include "qdfarm/sim.h"
#include "qdfarm/stats.h"

namespace fs = std::filesystem;
using namespace qdfarm;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

// Thrown for argument combinations CLI11 cannot check on its own.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::ofstream open_out(const fs::path &path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    return out;
}

std::ifstream open_in(const fs::path &path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read " + path.string());
    return in;
}

// Writes to `path`, or to stdout when it is empty or "-".
template <class F>
void with_output(const std::string &path, F &&write) {
    if (path.empty() || path == "-") {
        write(std::cout);
        std::cout.flush();
        return;
    }
    auto out = open_out(path);
    write(out);
    if (!out) throw DataError("write failed for " + path);
}

MapMode mode_from_flag(const std::string &s) {
    if (s == "rf") return MapMode::Rf;
    if (s == "dc") return MapMode::DcCurrent;
    throw UsageError("--mode must be rf or dc");
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateOptions {
    std::string farm = "default";
    std::uint64_t seed = 7;
    std::string out_dir;
    int devices = kFarmCells;
    double noise = kDefaultNoiseSigma;
    double drift = kDefaultDriftAmplitude;
    int averages = 1;
    double temperature = 0.8;
    std::string mode = "rf";
    bool all_good = false;
    std::size_t vg_count = 0;
    std::size_t vds_count = 0;
    std::string layout_file;
    unsigned workers = 0;

    // Single Good device.
    bool single = false;
    double v1e = 0.387, alpha = 0.741, asym = -0.040, v2e = 0.0;

    // (v_th, v_1e) pairs for fit-correlation.
    std::string correlation_file;
    int count = 200;
    double slope = 1.01, intercept = 0.21, sigma = 0.016, vth_mean = 0.173, vth_std = 0.015;
};

int run_simulate_correlation(const SimulateOptions &o) {
    std::mt19937_64 rng(o.seed);
    std::normal_distribution<double> vth_dist(o.vth_mean, o.vth_std);
    std::normal_distribution<double> noise(0.0, o.sigma);
    std::vector<SnrSample> rows;
    for (int i = 0; i < o.count; ++i) {
        // V_th is measured from a synthetic room-temperature I-V sweep, like the farm data.
        double vth = extract_vth(synth_iv_curve(vth_dist(rng)));
        rows.push_back({vth, o.slope * vth + o.intercept + noise(rng)});
    }
    with_output(o.correlation_file, [&](std::ostream &out) { write_two_columns(out, "v_th", "v_1e", rows); });
    return kExitOk;
}

int run_simulate(const SimulateOptions &o) {
    if (!o.correlation_file.empty()) return run_simulate_correlation(o);
    if (o.out_dir.empty()) throw UsageError("simulate needs --out DIR (or --correlation FILE)");
    if (o.farm != "default") throw UsageError("unknown farm '" + o.farm + "'; only 'default' is built in");
    const MapMode mode = mode_from_flag(o.mode);
    fs::create_directories(o.out_dir);

    FarmSpec farm = default_farm_spec();
    farm.noise_sigma = o.noise;
    farm.drift_amplitude = o.drift;
    farm.n_averages = o.averages;
    farm.electron_temperature_mev = o.temperature;
    farm.mode = mode;
    if (o.vg_count) farm.vg.count = o.vg_count;
    if (o.vds_count) farm.vds.count = o.vds_count;
    if (o.all_good) {
        for (auto &s : farm.sets) s.mix = ClassMix{1.0, 0.0, 0.0};
    }

    if (o.single) {
        SimDeviceSpec spec;
        spec.dot.v_1e = o.v1e;
        spec.dot.alpha_g = o.alpha;
        spec.dot.asymmetry = o.asym;
        if (o.v2e > 0.0) spec.dot.v_2e = o.v2e;
        spec.noise_sigma = o.noise;
        spec.drift_amplitude = o.drift;
        spec.n_averages = o.averages;
        spec.electron_temperature_mev = o.temperature;
        spec.mode = mode;
        spec.validate();
        auto map = synth_map(spec, farm.vg, farm.vds, o.seed, "D0000");
        save_csm(fs::path(o.out_dir) / "D0000.csm", map);
        TruthRecord t;
        t.device_id = "D0000";
        t.params = spec.dot;
        auto out = open_out(fs::path(o.out_dir) / "truth.tsv");
        write_truth(out, {t});
        return kExitOk;
    }

    FarmLayout layout = [&] {
        if (o.layout_file.empty()) return place_farm(default_set_sizes(), o.seed);
        auto in = open_in(o.layout_file);
        return read_layout(in);
    }();
    std::vector<FarmDevice> plan = plan_farm(farm, layout, o.seed);
    const std::size_t n = std::min<std::size_t>(plan.size(), static_cast<std::size_t>(std::max(o.devices, 0)));
    plan.resize(n);

    // Rendering and writing dominate; spread them over workers like analysis.
    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::string first_error;
    auto work = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                save_csm(fs::path(o.out_dir) / (plan[i].device_id + ".csm"), render_device(plan[i], farm));
            } catch (const std::exception &e) {
                std::lock_guard lock(error_mutex);
                if (first_error.empty()) first_error = e.what();
            }
        }
    };
    unsigned workers = o.workers ? o.workers : default_worker_count();
    {
        std::vector<std::jthread> pool;
        for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work);
        work();
    }
    if (!first_error.empty()) throw DataError(first_error);

    std::vector<TruthRecord> truth;
    for (const auto &d : plan) truth.push_back(truth_record(d));
    {
        auto out = open_out(fs::path(o.out_dir) / "truth.tsv");
        write_truth(out, truth);
    }
    {
        auto out = open_out(fs::path(o.out_dir) / "layout.tsv");
        write_layout(out, layout);
    }
    std::cerr << "wrote " << n << " maps to " << o.out_dir << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------------------
// analyze / classify

struct AnalyzeOptions {
    std::string input;
    std::string out;
    unsigned workers = 0;
    std::string dump_dir;
    PipelineConfig config;
    double canny_low = NAN, canny_high = NAN;
};

std::vector<fs::path> input_files(const std::string &input) {
    fs::path p(input);
    if (fs::is_directory(p)) return list_csm_files(p);
    if (!fs::exists(p)) throw DataError(input + " does not exist");
    return {p};
}

void dump_trace(const fs::path &dir, const std::string &id, const PipelineTrace &trace) {
    fs::create_directories(dir);
    ChargeStabilityMap corrected = trace.corrected;
    corrected.set_device_id(id + "_corrected");
    save_csm(dir / (id + "_corrected.csm"), corrected);
    ChargeStabilityMap equalized = trace.equalized;
    equalized.set_device_id(id + "_equalized");
    save_csm(dir / (id + "_equalized.csm"), equalized);
    std::vector<double> edges(trace.edges.pixels.begin(), trace.edges.pixels.end());
    save_csm(dir / (id + "_edges.csm"),
             ChargeStabilityMap(id + "_edges", trace.corrected.mode(), trace.edges.vg, trace.edges.vds, edges));
}

std::vector<DeviceResult> analyze_inputs(AnalyzeOptions &o) {
    if (!std::isnan(o.canny_low)) o.config.canny.low_threshold = o.canny_low;
    if (!std::isnan(o.canny_high)) o.config.canny.high_threshold = o.canny_high;
    if (o.config.canny.low_threshold.has_value() != o.config.canny.high_threshold.has_value()) {
        throw UsageError("--canny-low and --canny-high must be given together");
    }
    if (o.config.canny.low_threshold && !(*o.config.canny.low_threshold < *o.config.canny.high_threshold)) {
        throw UsageError("--canny-low must be below --canny-high");
    }
    const std::vector<fs::path> files = input_files(o.input);
    const PipelineConfig &config = o.config;
    const std::string dump = o.dump_dir;
    auto load = [&](std::size_t i) { return load_csm(files[i]); };
    if (dump.empty()) return analyze_batch(files.size(), load, config, o.workers);

    // With --dump every map keeps its trace; run the same batch with a tracing loader.
    std::mutex dump_mutex;
    std::vector<DeviceResult> results = analyze_batch(
        files.size(),
        [&](std::size_t i) {
            ChargeStabilityMap map = load_csm(files[i]);
            PipelineTrace trace;
            analyze_map(map, config, &trace);
            std::lock_guard lock(dump_mutex);
            dump_trace(dump, map.device_id(), trace);
            return map;
        },
        config, o.workers);
    return results;
}

int report_failures(const std::vector<DeviceResult> &results) {
    int failures = 0;
    for (const auto &r : results) {
        if (r.ok()) continue;
        ++failures;
        std::cerr << "error: " << r.device_id << ": " << r.error << '\n';
    }
    return failures ? kExitData : kExitOk;
}

int run_analyze(AnalyzeOptions &o) {
    auto t0 = std::chrono::steady_clock::now();
    auto results = analyze_inputs(o);
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    with_output(o.out, [&](std::ostream &out) { write_results(out, results); });
    std::fprintf(stderr, "analyzed %zu maps in %.2f s\n", results.size(), secs);
    return report_failures(results);
}

int run_classify(AnalyzeOptions &o) {
    auto results = analyze_inputs(o);
    with_output(o.out, [&](std::ostream &out) {
        out << "device_id\tclass\n";
        for (const auto &r : results) out << r.device_id << '\t' << (r.ok() ? to_string(r.device_class) : "NA") << '\n';
    });
    return report_failures(results);
}

// ---------------------------------------------------------------------------
// fit-correlation

struct FitOptions {
    std::string input;
    std::string samples_out;
    HmcConfig hmc;
    RegressionModel model;
    double fixed_sigma = NAN;
    double vth_std = NAN;
};

int run_fit(FitOptions &o) {
    auto in = open_in(o.input);
    std::vector<DataPoint> data;
    for (const auto &row : read_two_columns(in)) data.push_back({row.x, row.y});
    if (!std::isnan(o.fixed_sigma)) o.model.fixed_sigma = o.fixed_sigma;

    Posterior post = hmc_fit(data, o.model, o.hmc);
    PosteriorSummary s = posterior_summary(post.samples);

    std::vector<double> vth;
    for (const auto &d : data) vth.push_back(d.v_th);
    const double vth_std = std::isnan(o.vth_std) ? describe(vth).std : o.vth_std;

    std::printf("# %zu points, %d chains x %d samples, %d divergences\n", data.size(), o.hmc.chains,
                o.hmc.n_samples, post.divergences);
    std::printf("parameter\tmean\tstd\tlo95\thi95\trhat\tess\n");
    auto row = [&](const char *name, const ParameterSummary &p, int k) {
        std::printf("%s\t%.6g\t%.3g\t%.6g\t%.6g\t%.4f\t%.0f\n", name, p.mean, p.std, p.lo95, p.hi95, post.rhat[k],
                    post.ess[k]);
    };
    row("slope", s.slope, 0);
    row("intercept_V", s.intercept, 1);
    row("sigma_V", s.sigma, 2);
    for (std::size_t c = 0; c < post.acceptance_rate.size(); ++c) {
        std::printf("# chain %zu: acceptance %.3f, step size %.4g\n", c, post.acceptance_rate[c], post.step_size[c]);
    }
    std::printf("vth_std_V\t%.6g\n", vth_std);
    std::printf("predicted_v1e_spread_V\t%.6g\n", propagated_spread(s, vth_std));
    std::printf("loo_score\t%.6g\n", loo_score(post.samples, data));

    if (!o.samples_out.empty()) {
        with_output(o.samples_out, [&](std::ostream &out) {
            out << "chain\tslope\tintercept\tsigma\n";
            for (std::size_t c = 0; c < post.chains.size(); ++c) {
                for (const auto &p : post.chains[c]) {
                    out << c << '\t' << format_double(p.slope) << '\t' << format_double(p.intercept) << '\t'
                        << format_double(p.sigma) << '\n';
                }
            }
        });
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// rf

struct RfOptions {
    ResonatorModel model;
    double beta = 0.66;
    double device_resistance = INFINITY;
    std::string tmin_file;
    std::string bandwidth_file;
};

int run_rf(const RfOptions &o) {
    if (!o.tmin_file.empty()) {
        auto in = open_in(o.tmin_file);
        auto rows = read_two_columns(in);
        std::printf("t_min_s\t%s\n", format_double(fit_t_min(rows)).c_str());
        return kExitOk;
    }
    if (!o.bandwidth_file.empty()) {
        auto in = open_in(o.bandwidth_file);
        auto rows = read_two_columns(in);
        std::printf("fwhm_Hz\t%s\n", format_double(bandwidth_fwhm(rows)).c_str());
        return kExitOk;
    }
    ResonatorModel m = calibrate_loss(o.model, o.beta);
    const double fr = resonant_frequency(m);
    std::printf("total_capacitance_F\t%.6g\n", m.total_capacitance());
    std::printf("resonant_frequency_Hz\t%.6g\n", fr);
    std::printf("internal_loss_resistance_Ohm\t%.6g\n", m.internal_loss_resistance);
    std::printf("beta\t%.4f\n", coupling_coefficient(m));
    std::printf("Q_internal\t%.3f\n", internal_quality(m));
    std::printf("Q_external\t%.3f\n", external_quality(m));
    std::printf("Q_loaded\t%.3f\n", loaded_quality(m));
    std::printf("dip_min_abs_gamma\t%.4f\n", reflection_dip(m, o.device_resistance));
    std::printf("abs_gamma_at_fr\t%.4f\n", std::abs(reflection(m, fr, o.device_resistance)));
    return kExitOk;
}

// ---------------------------------------------------------------------------
// scan

struct ScanOptions {
    std::string plan_file;
    bool use_default = false;
    std::string write_default;
    double budget_s = 300.0;
    bool per_device = false;
};

int run_scan(const ScanOptions &o) {
    if (!o.write_default.empty()) {
        with_output(o.write_default, [&](std::ostream &out) { write_scan_plan(out, default_scan_plan()); });
        return kExitOk;
    }
    if (o.plan_file.empty() == !o.use_default) throw UsageError("scan needs exactly one of PLAN or --default");
    ScanPlan plan = [&] {
        if (o.use_default) return default_scan_plan();
        auto in = open_in(o.plan_file);
        return read_scan_plan(in);
    }();
    std::int64_t budget = parse_seconds_ps(format_double(o.budget_s));
    ScanReport r = scan_time(plan, budget);
    if (o.per_device) {
        std::printf("device_id\ttime_s\n");
        for (std::size_t i = 0; i < plan.size(); ++i) {
            std::printf("%s\t%s\n", plan[i].device_id.c_str(), format_seconds(r.per_device_ps[i]).c_str());
        }
    }
    std::printf("devices\t%zu\n", plan.size());
    std::printf("total_s\t%s\n", format_seconds(r.total_ps).c_str());
    std::printf("budget_s\t%s\n", format_seconds(budget).c_str());
    std::printf("over_budget\t%s\n", r.over_budget ? "yes" : "no");
    return kExitOk;
}

// ---------------------------------------------------------------------------
// place

struct PlaceOptions {
    std::uint64_t seed = 1;
    std::string out;
    bool check = false;
    std::string classes_file;
};

int run_place(const PlaceOptions &o) {
    FarmLayout layout = place_farm(default_set_sizes(), o.seed);
    if (!o.out.empty()) with_output(o.out, [&](std::ostream &out) { write_layout(out, layout); });
    int status = kExitOk;
    if (o.check) {
        std::printf("set\trow_centroid\tcol_centroid\n");
        for (int s = 0; s < layout.set_count(); ++s) {
            Centroid c = centroid(layout, s);
            std::printf("%d\t%.6g\t%.6g\n", s, c.row, c.col);
            if (c.row != 15.5 || c.col != 15.5) status = kExitData;
        }
        std::printf("centroid check: %s\n", status == kExitOk ? "pass" : "FAIL");
    }
    if (!o.classes_file.empty()) {
        // Class labels from a results or truth table, keyed by device id.
        auto in = open_in(o.classes_file);
        std::string header;
        std::getline(in, header);
        std::istringstream hs(header);
        std::vector<std::string> cols;
        for (std::string c; std::getline(hs, c, '\t');) cols.push_back(c);
        auto col_of = [&](const std::string &name) {
            auto it = std::find(cols.begin(), cols.end(), name);
            if (it == cols.end()) throw DataError(o.classes_file + ": no '" + name + "' column");
            return static_cast<std::size_t>(it - cols.begin());
        };
        const std::size_t id_col = col_of("device_id"), class_col = col_of("class");
        std::vector<std::optional<DeviceClass>> classes(kFarmCells);
        for (std::string line; std::getline(in, line);) {
            if (line.empty()) continue;
            std::vector<std::string> f;
            std::istringstream ls(line);
            for (std::string c; std::getline(ls, c, '\t');) f.push_back(c);
            if (f.size() < cols.size()) throw DataError(o.classes_file + ": short row");
            try {
                classes.at(parse_device_name(f[id_col])) = parse_device_class(f[class_col]);
            } catch (const std::exception &e) {
                throw DataError(o.classes_file + ": " + e.what());
            }
        }
        for (int i = 0; i < kFarmCells; ++i) {
            if (!classes[i]) throw DataError(o.classes_file + ": no class for " + device_name(i));
        }
        UniformityReport u = uniformity(layout, [&](int i) { return *classes[i]; });
        std::printf("class\tcount\trow_kld\tcol_kld\tset_kld\n");
        for (const auto &c : u.classes) {
            std::printf("%s\t%d\t%.4f\t%.4f\t%.4f\n", std::string(to_string(c.device_class)).c_str(), c.count,
                        c.row_kld, c.col_kld, c.set_kld);
        }
        std::printf("mean_rowcol_kld\t%.4f\t+-\t%.4f\n", u.mean_rowcol_kld, u.std_rowcol_kld);
        std::printf("mean_set_kld\t%.4f\n", u.mean_set_kld);
    }
    return status;
}

// ---------------------------------------------------------------------------
// report

struct ReportOptions {
    std::string results;
    std::string truth;
    std::string format = "text";
    std::string out;
    double wall_seconds = 0.0;
    unsigned workers = 0;
};

int run_report(const ReportOptions &o) {
    auto in = open_in(o.results);
    std::vector<DeviceResult> results = read_results(in);
    std::vector<TruthRecord> truth;
    if (!o.truth.empty()) {
        auto tin = open_in(o.truth);
        truth = read_truth(tin);
    }
    FarmReport report = build_report(results, truth);
    report.wall_seconds = o.wall_seconds;
    report.workers = o.workers;
    if (std::string err = check_consistency(report); !err.empty()) throw DataError("inconsistent report: " + err);
    with_output(o.out, [&](std::ostream &out) {
        if (o.format == "json") {
            write_report_json(out, report);
        } else {
            write_report_text(out, report);
        }
    });
    return kExitOk;
}

void add_pipeline_flags(CLI::App *cmd, AnalyzeOptions &o) {
    cmd->add_option("input", o.input, "CSM map file or directory of .csm files")->required();
    cmd->add_option("-o,--out", o.out, "Output table (default stdout)");
    cmd->add_option("-j,--workers", o.workers, "Worker threads (default QDFARM_WORKERS or all cores)");
    auto &c = o.config;
    cmd->add_option("--drift-window", c.drift_window, "Samples averaged per row for drift removal")
        ->capture_default_str();
    cmd->add_option("--clahe-tiles", c.clahe.tile_rows, "CLAHE tiles per axis")
        ->check(CLI::PositiveNumber)
        ->each([&c](const std::string &v) { c.clahe.tile_cols = std::stoi(v); })
        ->capture_default_str();
    cmd->add_option("--clip-limit", c.clahe.clip_limit, "CLAHE clip limit (fraction of tile pixels)")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--canny-sigma", c.canny.gaussian_sigma, "Canny Gaussian sigma (pixels)")->capture_default_str();
    cmd->add_option("--canny-low", o.canny_low, "Absolute low hysteresis threshold");
    cmd->add_option("--canny-high", o.canny_high, "Absolute high hysteresis threshold");
    cmd->add_option("--canny-low-quantile", c.canny.low_quantile)->capture_default_str();
    cmd->add_option("--canny-high-quantile", c.canny.high_quantile)->capture_default_str();
    cmd->add_option("--hough-threshold", c.hough.accumulator_threshold, "Hough accumulator votes")
        ->capture_default_str();
    cmd->add_option("--hough-min-length", c.hough.min_length, "Minimum segment length in pixels (<0: 15% of V_DS)")
        ->capture_default_str();
    cmd->add_option("--hough-max-gap", c.hough.max_gap)->capture_default_str();
    cmd->add_option("--prominence", c.peak_prominence, "Peak prominence as a fraction of the response range")
        ->capture_default_str();
    cmd->add_option("--max-conducting", c.classifier.max_conducting_fraction)->capture_default_str();
    cmd->add_option("--w-length", c.weights.length)->capture_default_str();
    cmd->add_option("--w-vds", c.weights.vds_proximity)->capture_default_str();
    cmd->add_option("--w-peak", c.weights.peak_proximity)->capture_default_str();
    cmd->add_option("--w-gradient", c.weights.gradient_similarity)->capture_default_str();
    cmd->add_option("--w-low-vg", c.weights.low_vg)->capture_default_str();
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"qdfarm: simulate, analyze and report on quantum-dot device farms"};
    app.require_subcommand(1);

    SimulateOptions sim;
    auto *simulate = app.add_subcommand("simulate", "Write synthetic maps and ground truth");
    simulate->add_option("--farm", sim.farm, "Farm preset")->capture_default_str();
    simulate->add_option("--seed", sim.seed)->capture_default_str();
    simulate->add_option("-o,--out", sim.out_dir, "Output directory");
    simulate->add_option("-n,--devices", sim.devices, "Write only the first N devices")->capture_default_str();
    simulate->add_option("--noise", sim.noise, "Per-point noise sigma")->capture_default_str();
    simulate->add_option("--drift", sim.drift, "Row drift amplitude")->capture_default_str();
    simulate->add_option("--averages", sim.averages)->check(CLI::PositiveNumber)->capture_default_str();
    simulate->add_option("--temperature", sim.temperature, "k_B T in meV")->capture_default_str();
    simulate->add_option("--mode", sim.mode, "rf or dc")->capture_default_str();
    simulate->add_flag("--all-good", sim.all_good, "Force every device to the Good class");
    simulate->add_option("--vg-count", sim.vg_count, "V_GS samples");
    simulate->add_option("--vds-count", sim.vds_count, "V_DS samples");
    simulate->add_option("--layout", sim.layout_file, "Layout file (default: place with --seed)");
    simulate->add_option("-j,--workers", sim.workers);
    simulate->add_flag("--single", sim.single, "Write one Good device from --v1e/--alpha/--asym");
    simulate->add_option("--v1e", sim.v1e)->capture_default_str();
    simulate->add_option("--alpha", sim.alpha)->capture_default_str();
    simulate->add_option("--asym", sim.asym)->capture_default_str();
    simulate->add_option("--v2e", sim.v2e, "Second-electron voltage (0: none)");
    simulate->add_option("--correlation", sim.correlation_file, "Write (v_th, v_1e) pairs instead of maps");
    simulate->add_option("--count", sim.count)->check(CLI::PositiveNumber)->capture_default_str();
    simulate->add_option("--slope", sim.slope)->capture_default_str();
    simulate->add_option("--intercept", sim.intercept)->capture_default_str();
    simulate->add_option("--sigma", sim.sigma)->capture_default_str();
    simulate->add_option("--vth-mean", sim.vth_mean)->capture_default_str();
    simulate->add_option("--vth-std", sim.vth_std)->capture_default_str();

    AnalyzeOptions analyze_opts;
    auto *analyze = app.add_subcommand("analyze", "Extract dot parameters and classes from maps");
    add_pipeline_flags(analyze, analyze_opts);
    analyze->add_option("--dump", analyze_opts.dump_dir, "Write corrected, equalized and edge maps here");

    AnalyzeOptions classify_opts;
    auto *classify = app.add_subcommand("classify", "Print the device class of each map");
    add_pipeline_flags(classify, classify_opts);

    FitOptions fit;
    auto *fitc = app.add_subcommand("fit-correlation", "Bayesian linear fit of v_1e against v_th");
    fitc->add_option("input", fit.input, "Two-column table (v_th, v_1e)")->required();
    fitc->add_option("--samples", fit.hmc.n_samples)->check(CLI::PositiveNumber)->capture_default_str();
    fitc->add_option("--warmup", fit.hmc.n_warmup)->check(CLI::PositiveNumber)->capture_default_str();
    fitc->add_option("--chains", fit.hmc.chains)->check(CLI::PositiveNumber)->capture_default_str();
    fitc->add_option("--leapfrog", fit.hmc.leapfrog_steps)->check(CLI::PositiveNumber)->capture_default_str();
    fitc->add_option("--step-size", fit.hmc.step_size)->check(CLI::PositiveNumber)->capture_default_str();
    fitc->add_option("--seed", fit.hmc.seed)->capture_default_str();
    fitc->add_option("--prior-slope", fit.model.slope.mean)->capture_default_str();
    fitc->add_option("--prior-slope-std", fit.model.slope.std)->capture_default_str();
    fitc->add_option("--prior-intercept", fit.model.intercept.mean)->capture_default_str();
    fitc->add_option("--prior-intercept-std", fit.model.intercept.std)->capture_default_str();
    fitc->add_option("--prior-log-sigma", fit.model.log_sigma.mean)->capture_default_str();
    fitc->add_option("--prior-log-sigma-std", fit.model.log_sigma.std)->capture_default_str();
    fitc->add_option("--fixed-sigma", fit.fixed_sigma, "Hold sigma (V) fixed");
    fitc->add_option("--vth-std", fit.vth_std, "V_th spread for the propagated v_1e spread (default: sample std)");
    fitc->add_option("--dump-samples", fit.samples_out, "Write posterior draws here");

    RfOptions rf;
    auto *rfc = app.add_subcommand("rf", "Resonator model, t_min and bandwidth fits");
    rfc->add_option("--inductance", rf.model.inductance, "H")->capture_default_str();
    rfc->add_option("--coupling-cap", rf.model.coupling_capacitance, "F")->capture_default_str();
    rfc->add_option("--chip-cap", rf.model.parasitic_chip, "F")->capture_default_str();
    rfc->add_option("--pcb-cap", rf.model.parasitic_pcb, "F")->capture_default_str();
    rfc->add_option("--z0", rf.model.line_impedance, "Ohm")->capture_default_str();
    rfc->add_option("--beta", rf.beta, "Matching coefficient to calibrate losses to")->capture_default_str();
    rfc->add_option("--device-resistance", rf.device_resistance, "Ohm (default: blockaded)");
    rfc->add_option("--tmin", rf.tmin_file, "Fit t_min to a (tau_s, snr) table");
    rfc->add_option("--bandwidth", rf.bandwidth_file, "FWHM of a (frequency_Hz, snr2) table");

    ScanOptions scan;
    auto *scanc = app.add_subcommand("scan", "Farm scan-time budget");
    scanc->add_option("plan", scan.plan_file, "Scan plan table");
    scanc->add_flag("--default", scan.use_default, "Use the built-in 5-minute plan");
    scanc->add_option("--write-default", scan.write_default, "Write the built-in plan and exit");
    scanc->add_option("--budget", scan.budget_s, "Budget in seconds")->capture_default_str();
    scanc->add_flag("--per-device", scan.per_device);

    PlaceOptions place;
    auto *placec = app.add_subcommand("place", "Common-centroid farm placement");
    placec->add_option("--seed", place.seed)->capture_default_str();
    placec->add_option("-o,--out", place.out, "Layout file");
    placec->add_flag("--check", place.check, "Verify every set centroid is (15.5, 15.5)");
    placec->add_option("--classes", place.classes_file, "Results or truth table for class uniformity");

    ReportOptions rep;
    auto *reportc = app.add_subcommand("report", "Aggregate results, optionally against ground truth");
    reportc->add_option("results", rep.results, "Results table from analyze")->required();
    reportc->add_option("--truth", rep.truth, "Ground truth from simulate");
    reportc->add_option("--format", rep.format)->check(CLI::IsMember({"text", "json"}))->capture_default_str();
    reportc->add_option("-o,--out", rep.out);
    reportc->add_option("--wall-seconds", rep.wall_seconds, "Analysis wall time to record");
    reportc->add_option("--workers", rep.workers, "Worker count to record");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*simulate) return run_simulate(sim);
        if (*analyze) return run_analyze(analyze_opts);
        if (*classify) return run_classify(classify_opts);
        if (*fitc) return run_fit(fit);
        if (*rfc) return run_rf(rf);
        if (*scanc) return run_scan(scan);
        if (*placec) return run_place(place);
        if (*reportc) return run_report(rep);
    } catch (const UsageError &e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    }
    return kExitUsage;
}
