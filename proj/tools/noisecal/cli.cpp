#include "cli.hpp"

#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "figures.hpp"
#include "manifest.hpp"
#include "noisecal/calibration.hpp"
#include "noisecal/errors.hpp"
#include "noisecal/psd_model.hpp"
#include "noisecal/qkd_estimation.hpp"
#include "noisecal/signal_synth.hpp"
#include "noisecal/tgv_engine.hpp"
#include "noisecal/white_isolation.hpp"
#include "noisecal/wss_test.hpp"
#include "writers.hpp"

namespace noisecal::cli {

namespace {

namespace fs = std::filesystem;

struct Context {
    std::vector<std::string> command_line;
    unsigned threads = 1;
    std::ostream* out = nullptr;

    [[nodiscard]] RunManifest manifest() const { return RunManifest(command_line, threads); }
};

std::string error_json(const std::string& kind, const std::string& message, int code) {
    return nlohmann::json{{"error", kind}, {"message", message}, {"exit_code", code}}.dump();
}

std::uint64_t default_seed() {
    const char* env = std::getenv("NOISECAL_SEED");
    if (env == nullptr || *env == '\0') return 1;
    try {
        std::size_t used = 0;
        const auto v = std::stoull(env, &used);
        if (used != std::string(env).size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw ValidationError("NOISECAL_SEED must be a non-negative integer");
    }
}

Trace read_trace(const fs::path& path, std::optional<double> fs_flag) {
    if (path.extension() == ".csv") {
        if (!fs_flag) throw ValidationError("CSV trace " + path.string() + " needs --fs");
        return load_trace_csv(path, *fs_flag);
    }
    return load_trace(path);
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ValidationError("cannot write " + path.string());
    f << text;
}

// Single-product commands: stdout, or the file plus <file>.manifest.json.
void emit(const Context& ctx, RunManifest& manifest, const std::optional<fs::path>& path, const std::string& text) {
    if (!path) {
        *ctx.out << text;
        return;
    }
    write_text(*path, text);
    manifest.add_output(*path);
    manifest.write(path->string() + ".manifest.json");
}

// Multi-product commands: every file plus manifest.json and summary.json in dir;
// the summary is echoed to stdout.
void finish_dir(const Context& ctx, RunManifest& manifest, const fs::path& dir, const nlohmann::json& summary) {
    const auto summary_path = dir / "summary.json";
    write_text(summary_path, summary.dump(2) + "\n");
    manifest.add_output(summary_path);
    manifest.write(dir / "manifest.json");
    *ctx.out << summary.dump(2) << '\n';
}

std::vector<double> tau_grid(const std::vector<double>& taus, double lo, double hi, int per_decade) {
    if (!taus.empty()) return taus;
    return log_grid(lo, hi, per_decade);
}

// ---- model ----------------------------------------------------------------

struct ModelArgs {
    std::string model;
    std::string reference;
    std::vector<double> freqs;
    std::optional<fs::path> out;
};

void add_model(CLI::App& app, ModelArgs& a) {
    auto* model = app.add_option("--model", a.model, "model JSON file")->check(CLI::ExistingFile);
    auto* ref = app.add_option("--reference", a.reference, "bundled reference model")
                    ->check(CLI::IsMember({"electronic", "receiver"}));
    model->excludes(ref);
    app.add_option("--eval", a.freqs, "frequencies (Hz) at which to evaluate the PSD");
    app.add_option("-o,--out", a.out, "output JSON file");
}

void cmd_model(const Context& ctx, const ModelArgs& a) {
    auto manifest = ctx.manifest();
    NoisePsdModel m;
    if (!a.model.empty()) {
        m = load_model(a.model);
        manifest.add_config(a.model);
    } else if (a.reference == "electronic") {
        m = reference_electronic_model();
    } else if (a.reference == "receiver") {
        m = reference_receiver_model();
    } else {
        throw ValidationError("give --model or --reference");
    }
    nlohmann::json j = to_json(m);
    if (!a.freqs.empty()) {
        nlohmann::json psd = nlohmann::json::array();
        for (double f : a.freqs) psd.push_back({{"f", f}, {"S", eval_psd(m, f)}});
        j = {{"model", j}, {"psd", psd}};
    }
    emit(ctx, manifest, a.out, j.dump(2) + "\n");
}

// ---- synth ----------------------------------------------------------------

struct SynthArgs {
    std::string model;
    std::size_t n = 0;
    double fs = 0.0;
    std::optional<std::uint64_t> seed;
    bool lo = false;
    bool signal = false;
    std::string label;
    fs::path out;
};

void add_synth(CLI::App& app, SynthArgs& a) {
    app.add_option("--model", a.model, "model JSON file")->required()->check(CLI::ExistingFile);
    app.add_option("--n", a.n, "number of samples")->required()->check(CLI::PositiveNumber);
    app.add_option("--fs", a.fs, "sampling rate (Hz)")->required()->check(CLI::PositiveNumber);
    app.add_option("--seed", a.seed, "RNG seed (default: NOISECAL_SEED or 1)");
    app.add_flag("--lo", a.lo, "record the local oscillator as on");
    app.add_flag("--signal", a.signal, "record the signal path as open");
    app.add_option("--label", a.label, "trace label (default: model label)");
    app.add_option("-o,--out", a.out, "output .nct file")->required();
}

void cmd_synth(const Context& ctx, const SynthArgs& a) {
    auto manifest = ctx.manifest();
    const auto model = load_model(a.model);
    manifest.add_config(a.model);
    const std::uint64_t seed = a.seed ? *a.seed : default_seed();
    manifest.add_seed("trace", seed);
    auto trace = synthesize(model, a.fs, a.n, seed, SwitchState{a.lo, a.signal});
    if (!a.label.empty()) trace.label = a.label;
    if (a.out.has_parent_path()) fs::create_directories(a.out.parent_path());
    save_trace(trace, a.out);
    manifest.add_output(a.out);
    manifest.write(a.out.string() + ".manifest.json");
    *ctx.out << nlohmann::json{{"file", a.out.string()},
                               {"n", trace.size()},
                               {"fs", trace.fs},
                               {"seed", seed},
                               {"low_frequency_truncated", trace.low_frequency_truncated}}
                    .dump(2)
             << '\n';
}

// ---- tgv ------------------------------------------------------------------

struct TgvArgs {
    std::string model;
    double fs = 0.0;
    std::vector<double> taus;
    double tau_min = 1e-7;
    double tau_max = 10.0;
    int per_decade = 10;
    bool breakdown = false;
    std::optional<fs::path> out;
};

void add_tgv(CLI::App& app, TgvArgs& a) {
    app.add_option("--model", a.model, "model JSON file")->required()->check(CLI::ExistingFile);
    app.add_option("--fs", a.fs, "sampling rate (Hz)")->required()->check(CLI::PositiveNumber);
    app.add_option("--tau", a.taus, "gate durations (s); one value gives a JSON result");
    app.add_option("--tau-min", a.tau_min, "grid start (s)")->check(CLI::PositiveNumber);
    app.add_option("--tau-max", a.tau_max, "grid end (s)")->check(CLI::PositiveNumber);
    app.add_option("--per-decade", a.per_decade, "grid points per decade")->check(CLI::PositiveNumber);
    app.add_flag("--breakdown", a.breakdown, "add per-component columns");
    app.add_option("-o,--out", a.out, "output file");
}

void cmd_tgv(const Context& ctx, const TgvArgs& a) {
    auto manifest = ctx.manifest();
    const auto model = load_model(a.model);
    manifest.add_config(a.model);
    if (a.taus.size() == 1 && !a.breakdown) {
        const double v = tgv(model, GateConfig{a.taus.front(), a.fs});
        emit(ctx, manifest, a.out, nlohmann::json{{"tau", a.taus.front()}, {"variance", v}}.dump(2) + "\n");
        return;
    }
    const auto curve = tgv_curve(model, tau_grid(a.taus, a.tau_min, a.tau_max, a.per_decade), a.fs, a.breakdown,
                                 ctx.threads);
    std::ostringstream csv;
    write_tgv_csv(curve, csv);
    emit(ctx, manifest, a.out, csv.str());
}

// ---- wss ------------------------------------------------------------------

struct WssArgs {
    std::vector<double> alphas{0.05};
    std::vector<std::string> blocks;
    std::optional<double> fs;
    fs::path out;
};

void add_wss(CLI::App& app, WssArgs& a) {
    app.add_option("--alpha", a.alphas, "significance levels; verdict CSV uses the first")
        ->check(CLI::Range(0.0, 1.0));
    app.add_option("--blocks", a.blocks, "trace files, in acquisition order")->required()->check(CLI::ExistingFile);
    app.add_option("--fs", a.fs, "sampling rate for CSV traces (Hz)")->check(CLI::PositiveNumber);
    app.add_option("-o,--out", a.out, "output directory")->required();
}

void cmd_wss(const Context& ctx, const WssArgs& a) {
    auto manifest = ctx.manifest();
    std::vector<Trace> blocks;
    for (const auto& b : a.blocks) {
        blocks.push_back(read_trace(b, a.fs));
        manifest.add_config(b);
    }
    const auto report = block_scan(blocks, a.alphas, ctx.threads);
    fs::create_directories(a.out);
    std::ostringstream verdicts;
    write_wss_csv(report, 0, verdicts);
    write_text(a.out / "wss_verdicts.csv", verdicts.str());
    manifest.add_output(a.out / "wss_verdicts.csv");
    std::ostringstream cumulative;
    write_cumulative_csv(report, cumulative);
    write_text(a.out / "wss_cumulative.csv", cumulative.str());
    manifest.add_output(a.out / "wss_cumulative.csv");
    finish_dir(ctx, manifest, a.out,
               {{"block_count", report.block_count}, {"alphas", report.alphas}, {"pass_fraction", report.pass_fraction}});
}

// ---- white ----------------------------------------------------------------

struct WhiteArgs {
    std::string trace;
    std::string method = "floor";
    std::optional<double> fs;
    std::size_t segment = 1024;
    std::size_t smooth = 64;
    std::size_t p = 2;
    std::size_t q = 2;
    std::optional<fs::path> out;
};

void add_white(CLI::App& app, WhiteArgs& a) {
    app.add_option("trace", a.trace, "trace file (.nct or .csv)")->required()->check(CLI::ExistingFile);
    app.add_option("--method", a.method, "floor, arma or wiener")
        ->check(CLI::IsMember({"floor", "arma", "wiener"}));
    app.add_option("--fs", a.fs, "sampling rate for CSV traces (Hz)")->check(CLI::PositiveNumber);
    app.add_option("--segment", a.segment, "Welch segment length")->check(CLI::PositiveNumber);
    app.add_option("--smooth", a.smooth, "moving-median width in bins")->check(CLI::PositiveNumber);
    app.add_option("--ar", a.p, "ARMA autoregressive order");
    app.add_option("--ma", a.q, "ARMA moving-average order");
    app.add_option("-o,--out", a.out, "output JSON file");
}

void cmd_white(const Context& ctx, const WhiteArgs& a) {
    auto manifest = ctx.manifest();
    const auto trace = read_trace(a.trace, a.fs);
    manifest.add_config(a.trace);
    const FloorOptions options{a.segment, a.smooth};
    WhiteEstimate e;
    switch (white_method_from_string(a.method)) {
        case WhiteMethod::psd_floor: e = white_floor(trace, options); break;
        case WhiteMethod::arma: e = arma_whiten(trace, a.p, a.q).estimate; break;
        case WhiteMethod::wiener: e = white_wiener(trace, options); break;
    }
    emit(ctx, manifest, a.out, to_json(e).dump(2) + "\n");
}

// ---- calibrate --------------------------------------------------------------

struct CalibrateArgs {
    std::string scheme;
    std::string elec;
    std::string rec;
    std::string elec_trace;
    std::string rec_trace;
    std::optional<double> sigma_elec;
    std::optional<double> sigma_rec;
    std::optional<double> tau;
    std::optional<double> fs;
    double eps = 0.01;
    std::string method = "floor";
    std::optional<double> truth_density;
    std::optional<fs::path> out;
};

void add_calibrate(CLI::App& app, CalibrateArgs& a) {
    app.add_option("--scheme", a.scheme, "uncharacterized, characterized or fully-white")
        ->required()
        ->check(CLI::IsMember({"uncharacterized", "characterized", "fully-white"}));
    app.add_option("--elec", a.elec, "electronic model JSON")->check(CLI::ExistingFile);
    app.add_option("--rec", a.rec, "receiver model JSON")->check(CLI::ExistingFile);
    app.add_option("--elec-trace", a.elec_trace, "electronic trace")->check(CLI::ExistingFile);
    app.add_option("--rec-trace", a.rec_trace, "receiver trace")->check(CLI::ExistingFile);
    app.add_option("--sigma-elec", a.sigma_elec, "measured electronic variance (V^2)");
    app.add_option("--sigma-rec", a.sigma_rec, "measured receiver variance (V^2)");
    app.add_option("--tau", a.tau, "calibration duration (s)")->check(CLI::PositiveNumber);
    app.add_option("--fs", a.fs, "sampling rate (Hz)")->check(CLI::PositiveNumber);
    app.add_option("--eps", a.eps, "security parameter")->check(CLI::Range(0.0, 1.0));
    app.add_option("--method", a.method, "white isolation method for traces")
        ->check(CLI::IsMember({"floor", "arma", "wiener"}));
    app.add_option("--truth-density", a.truth_density, "known white shot density (V^2/Hz), for delta_rec");
    app.add_option("-o,--out", a.out, "output JSON file");
}

double trace_variance(const Trace& t) {
    double m = 0.0;
    for (double x : t.samples) m += x;
    m /= static_cast<double>(t.size());
    double s = 0.0;
    for (double x : t.samples) s += (x - m) * (x - m);
    return s / static_cast<double>(t.size());
}

void cmd_calibrate(const Context& ctx, const CalibrateArgs& a) {
    auto manifest = ctx.manifest();
    const auto scheme = calibration_scheme_from_string(a.scheme);
    const bool have_models = !a.elec.empty() && !a.rec.empty();
    const bool have_traces = !a.elec_trace.empty() && !a.rec_trace.empty();
    for (const auto& p : {a.elec, a.rec, a.elec_trace, a.rec_trace}) {
        if (!p.empty()) manifest.add_config(p);
    }
    CalibrationResult r;
    if (scheme == CalibrationScheme::uncharacterized) {
        double se = 0.0;
        double sr = 0.0;
        if (a.sigma_elec && a.sigma_rec) {
            se = *a.sigma_elec;
            sr = *a.sigma_rec;
        } else if (have_traces) {
            se = trace_variance(read_trace(a.elec_trace, a.fs));
            sr = trace_variance(read_trace(a.rec_trace, a.fs));
        } else {
            throw ValidationError("uncharacterized calibration needs --sigma-elec/--sigma-rec or two traces");
        }
        r.scheme = scheme;
        r.sigma_elec = se;
        r.sigma_rec = sr;
        r.n0_hat = shot_uncharacterized(sr, se);
        r.n0_min = r.n0_hat;
        r.n0_max = r.n0_hat;
        r.epsilon_secu = a.eps;
    } else if (scheme == CalibrationScheme::characterized) {
        if (!have_models || !a.tau || !a.fs) throw ValidationError("characterized calibration needs --elec, --rec, --tau and --fs");
        std::optional<ShotNoiseTruth> truth;
        if (a.truth_density) truth = ShotNoiseTruth{*a.truth_density};
        r = shot_characterized(load_model(a.elec), load_model(a.rec), *a.tau, *a.fs, a.eps, truth);
    } else if (have_traces) {
        r = shot_fully_white(read_trace(a.rec_trace, a.fs), read_trace(a.elec_trace, a.fs),
                             white_method_from_string(a.method), a.eps);
    } else if (have_models && a.fs) {
        r = shot_fully_white(load_model(a.rec), load_model(a.elec), *a.fs, a.eps);
    } else {
        throw ValidationError("fully-white calibration needs two traces, or --elec, --rec and --fs");
    }
    emit(ctx, manifest, a.out, to_json(r).dump(2) + "\n");
}

// ---- opt-tau ----------------------------------------------------------------

struct OptTauArgs {
    std::string elec;
    std::string rec;
    double fs = 0.0;
    double eps = 0.01;
    double tau_min = 1e-6;
    double tau_max = 10.0;
    int per_decade = 20;
    fs::path out;
};

void add_opt_tau(CLI::App& app, OptTauArgs& a) {
    app.add_option("--elec", a.elec, "electronic model JSON")->required()->check(CLI::ExistingFile);
    app.add_option("--rec", a.rec, "receiver model JSON")->required()->check(CLI::ExistingFile);
    app.add_option("--fs", a.fs, "sampling rate (Hz)")->required()->check(CLI::PositiveNumber);
    app.add_option("--eps", a.eps, "security parameter")->check(CLI::Range(0.0, 1.0));
    app.add_option("--tau-min", a.tau_min, "grid start (s)")->check(CLI::PositiveNumber);
    app.add_option("--tau-max", a.tau_max, "grid end (s)")->check(CLI::PositiveNumber);
    app.add_option("--per-decade", a.per_decade, "grid points per decade")->check(CLI::PositiveNumber);
    app.add_option("-o,--out", a.out, "output directory")->required();
}

void cmd_opt_tau(const Context& ctx, const OptTauArgs& a) {
    auto manifest = ctx.manifest();
    manifest.add_config(a.elec);
    manifest.add_config(a.rec);
    const auto result = optimal_tau(load_model(a.elec), load_model(a.rec), a.fs, a.eps,
                                    log_grid(a.tau_min, a.tau_max, a.per_decade), ctx.threads);
    std::ostringstream csv;
    write_opt_tau_csv(result, csv);
    write_text(a.out / "opt_tau.csv", csv.str());
    manifest.add_output(a.out / "opt_tau.csv");
    finish_dir(ctx, manifest, a.out, summary_json(result, a.fs, a.eps));
}

// ---- skr ------------------------------------------------------------------

struct SkrArgs {
    std::string scenario;
    std::string elec;
    std::string rec;
    std::string scheme = "characterized";
    double fs = 0.0;
    std::optional<double> tau_max;
    double eps = 0.01;
    double tau_min = 1e-7;
    int per_decade = 20;
    fs::path out;
};

void add_skr(CLI::App& app, SkrArgs& a) {
    app.add_option("--scenario", a.scenario, "scenario JSON")->required()->check(CLI::ExistingFile);
    app.add_option("--elec", a.elec, "electronic model JSON")->required()->check(CLI::ExistingFile);
    app.add_option("--rec", a.rec, "receiver model JSON")->required()->check(CLI::ExistingFile);
    app.add_option("--scheme", a.scheme, "characterized or fully-white")
        ->check(CLI::IsMember({"characterized", "fully-white", "uncharacterized"}));
    app.add_option("--fs", a.fs, "sampling rate (Hz)")->required()->check(CLI::PositiveNumber);
    app.add_option("--taumax", a.tau_max, "WSS window (s); overrides the scenario")->check(CLI::PositiveNumber);
    app.add_option("--eps", a.eps, "security parameter")->check(CLI::Range(0.0, 1.0));
    app.add_option("--tau-min", a.tau_min, "grid start (s)")->check(CLI::PositiveNumber);
    app.add_option("--per-decade", a.per_decade, "grid points per decade")->check(CLI::PositiveNumber);
    app.add_option("-o,--out", a.out, "output directory")->required();
}

void cmd_skr(const Context& ctx, const SkrArgs& a) {
    auto manifest = ctx.manifest();
    for (const auto& p : {a.scenario, a.elec, a.rec}) manifest.add_config(p);
    auto scenario = load_scenario(a.scenario);
    if (a.tau_max) scenario.tau_max = *a.tau_max;
    scenario.validate();
    const auto curve = skr_vs_tau(scenario, load_model(a.elec), load_model(a.rec), a.fs,
                                  log_grid(a.tau_min, scenario.tau_max, a.per_decade),
                                  calibration_scheme_from_string(a.scheme), a.eps, ctx.threads);
    std::ostringstream csv;
    write_skr_csv(curve, csv);
    write_text(a.out / "skr.csv", csv.str());
    manifest.add_output(a.out / "skr.csv");
    auto summary = summary_json(curve);
    summary["scenario"] = to_json(scenario);
    finish_dir(ctx, manifest, a.out, summary);
}

// ---- reproduce ----------------------------------------------------------------

struct ReproduceArgs {
    std::string figure;
    fs::path out;
    std::string elec = std::string(NOISECAL_DATA_DIR) + "/models/electronic.json";
    std::string rec = std::string(NOISECAL_DATA_DIR) + "/models/receiver.json";
    std::string scenario = std::string(NOISECAL_DATA_DIR) + "/scenarios/table4.json";
    double fs = 625e6;
    double eps = 0.01;
    std::optional<std::uint64_t> seed;
    std::size_t samples = std::size_t{1} << 24;
    double trace_fs = 0.5e6;
};

void add_reproduce(CLI::App& app, ReproduceArgs& a) {
    app.add_option("figure", a.figure, "fig4, fig5, fig6 or fig8")->required();
    app.add_option("-o,--out", a.out, "output directory")->required();
    app.add_option("--elec", a.elec, "electronic model JSON (default: bundled)");
    app.add_option("--rec", a.rec, "receiver model JSON (default: bundled)");
    app.add_option("--scenario", a.scenario, "scenario JSON (default: bundled)");
    app.add_option("--fs", a.fs, "sampling rate (Hz)")->check(CLI::PositiveNumber);
    app.add_option("--eps", a.eps, "security parameter")->check(CLI::Range(0.0, 1.0));
    app.add_option("--seed", a.seed, "seed for synthesized traces (default: NOISECAL_SEED or 1)");
    app.add_option("--samples", a.samples, "stand-in trace length for fig8")->check(CLI::PositiveNumber);
    app.add_option("--trace-fs", a.trace_fs, "stand-in trace sampling rate for fig8 (Hz)")->check(CLI::PositiveNumber);
}

void cmd_reproduce(const Context& ctx, const ReproduceArgs& a) {
    auto manifest = ctx.manifest();
    for (const auto& p : {a.elec, a.rec, a.scenario}) {
        if (!fs::exists(p)) throw ValidationError("bundled config missing: " + p);
        manifest.add_config(p);
    }
    FigureInputs in;
    in.elec = load_model(a.elec);
    in.rec = load_model(a.rec);
    in.scenario = load_scenario(a.scenario);
    in.fs = a.fs;
    in.epsilon_secu = a.eps;
    in.seed = a.seed ? *a.seed : default_seed();
    in.trace_samples = a.samples;
    in.trace_fs = a.trace_fs;
    in.threads = ctx.threads;
    if (a.figure == "fig8") {
        manifest.add_seed("electronic_trace", in.seed);
        manifest.add_seed("receiver_trace", in.seed + 1);
    }
    const auto result = reproduce_figure(a.figure, a.out, in);
    for (const auto& f : result.files) manifest.add_output(f);
    finish_dir(ctx, manifest, a.out, result.summary);
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"noisecal: shot-noise calibration and noise-model analysis for CV-QKD receivers", "noisecal"};
    app.require_subcommand(1);
    app.set_version_flag("--version", tool_version());
    unsigned threads = std::max(1u, std::thread::hardware_concurrency());
    app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);

    ModelArgs model;
    SynthArgs synth;
    TgvArgs tgv_args;
    WssArgs wss;
    WhiteArgs white;
    CalibrateArgs calibrate;
    OptTauArgs opt;
    SkrArgs skr;
    ReproduceArgs reproduce;
    auto* c_model = app.add_subcommand("model", "inspect or export a PSD model");
    add_model(*c_model, model);
    auto* c_synth = app.add_subcommand("synth", "synthesize a trace from a model");
    add_synth(*c_synth, synth);
    auto* c_tgv = app.add_subcommand("tgv", "time-gated variance of a model");
    add_tgv(*c_tgv, tgv_args);
    auto* c_wss = app.add_subcommand("wss", "stationarity battery over trace blocks");
    add_wss(*c_wss, wss);
    auto* c_white = app.add_subcommand("white", "white-noise level of a trace");
    add_white(*c_white, white);
    auto* c_cal = app.add_subcommand("calibrate", "shot-noise calibration");
    add_calibrate(*c_cal, calibrate);
    auto* c_opt = app.add_subcommand("opt-tau", "optimal calibration duration");
    add_opt_tau(*c_opt, opt);
    auto* c_skr = app.add_subcommand("skr", "secret key rate against calibration duration");
    add_skr(*c_skr, skr);
    auto* c_rep = app.add_subcommand("reproduce", "data behind the reference figures");
    add_reproduce(*c_rep, reproduce);

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success&) {
        const auto* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
        if (app.get_option("--version")->count() > 0) {
            out << tool_version() << '\n';
        } else {
            out << sub->help();
        }
        return 0;
    } catch (const CLI::ParseError& e) {
        const auto* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
        err << error_json("usage", e.what(), 2) << '\n' << sub->help();
        return 2;
    }

    Context ctx;
    ctx.command_line.assign(argv, argv + argc);
    ctx.threads = threads;
    ctx.out = &out;
    try {
        if (c_model->parsed()) cmd_model(ctx, model);
        if (c_synth->parsed()) cmd_synth(ctx, synth);
        if (c_tgv->parsed()) cmd_tgv(ctx, tgv_args);
        if (c_wss->parsed()) cmd_wss(ctx, wss);
        if (c_white->parsed()) cmd_white(ctx, white);
        if (c_cal->parsed()) cmd_calibrate(ctx, calibrate);
        if (c_opt->parsed()) cmd_opt_tau(ctx, opt);
        if (c_skr->parsed()) cmd_skr(ctx, skr);
        if (c_rep->parsed()) cmd_reproduce(ctx, reproduce);
    } catch (const ValidationError& e) {
        err << error_json("validation", e.what(), 2) << '\n';
        return 2;
    } catch (const NumericError& e) {
        err << error_json("numeric", e.what(), 3) << '\n';
        return 3;
    } catch (const nlohmann::json::exception& e) {
        err << error_json("validation", e.what(), 2) << '\n';
        return 2;
    } catch (const std::filesystem::filesystem_error& e) {
        err << error_json("validation", e.what(), 2) << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << error_json("internal", e.what(), 1) << '\n';
        return 1;
    }
    return 0;
}

}  // namespace noisecal::cli
