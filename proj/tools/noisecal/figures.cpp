#include "figures.hpp"

#include <cmath>
#include <fstream>

#include "noisecal/calibration.hpp"
#include "noisecal/errors.hpp"
#include "noisecal/signal_synth.hpp"
#include "noisecal/tgv_engine.hpp"
#include "writers.hpp"

namespace noisecal::cli {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write " + path.string());
    return out;
}

FigureOutput fig4(const std::filesystem::path& dir, const FigureInputs& in) {
    FigureOutput result;
    const auto taus = log_grid(1e-7, 10.0, 10);
    for (const auto* model : {&in.elec, &in.rec}) {
        const auto curve = tgv_curve(*model, taus, in.fs, true, in.threads);
        const auto path = dir / ("fig4_" + model->label() + ".csv");
        auto out = open_out(path);
        write_tgv_csv(curve, out);
        result.files.push_back(path);
    }
    result.summary = {{"figure", "fig4"}, {"points", taus.size()}, {"fs", in.fs}};
    return result;
}

FigureOutput fig5(const std::filesystem::path& dir, const FigureInputs& in) {
    const auto grid = log_grid(1e-6, 10.0, 20);
    const auto opt = optimal_tau(in.elec, in.rec, in.fs, in.epsilon_secu, grid, in.threads);
    FigureOutput result;
    const auto path = dir / "fig5_shot_noise.csv";
    auto out = open_out(path);
    write_opt_tau_csv(opt, out);
    result.files.push_back(path);
    result.summary = summary_json(opt, in.fs, in.epsilon_secu);
    result.summary["figure"] = "fig5";
    return result;
}

FigureOutput fig6(const std::filesystem::path& dir, const FigureInputs& in) {
    const auto grid = log_grid(1e-7, in.scenario.tau_max, 20);
    const auto ch = skr_vs_tau(in.scenario, in.elec, in.rec, in.fs, grid, CalibrationScheme::characterized,
                               in.epsilon_secu, in.threads);
    const auto fw = skr_vs_tau(in.scenario, in.elec, in.rec, in.fs, grid, CalibrationScheme::fully_white,
                               in.epsilon_secu, in.threads);
    FigureOutput result;
    const auto path = dir / "fig6_key_rate.csv";
    auto out = open_out(path);
    write_skr_pair_csv(ch, fw, out);
    result.files.push_back(path);
    result.summary = {{"figure", "fig6"},
                      {"scenario", to_json(in.scenario)},
                      {"characterized", summary_json(ch)},
                      {"fully_white", summary_json(fw)}};
    return result;
}

FigureOutput fig8(const std::filesystem::path& dir, const FigureInputs& in) {
    const auto elec = synthesize(in.elec, in.trace_fs, in.trace_samples, in.seed);
    const auto rec = synthesize(in.rec, in.trace_fs, in.trace_samples, in.seed + 1);
    RatioOptions options;
    options.elec_model = &in.elec;
    options.rec_model = &in.rec;
    options.threads = in.threads;
    const auto curve = ratio_curve(elec, rec, log_grid(2e-3, 20.0, 10), options);

    std::size_t agree = 0;
    for (const auto& p : curve.points) {
        if (p.model_ratio && std::abs(p.ratio - *p.model_ratio) <= 3.0 * p.standard_error) ++agree;
    }
    FigureOutput result;
    const auto path = dir / "fig8_ratio.csv";
    auto out = open_out(path);
    write_ratio_csv(curve, out);
    result.files.push_back(path);
    nlohmann::json skipped = nlohmann::json::array();
    for (const auto& s : curve.skipped) skipped.push_back({{"tau", s.tau}, {"reason", s.reason}});
    result.summary = {{"figure", "fig8"},
                      {"trace_samples", in.trace_samples},
                      {"trace_fs", in.trace_fs},
                      {"seeds", {in.seed, in.seed + 1}},
                      {"points", curve.points.size()},
                      {"within_3se", agree},
                      {"skipped", skipped}};
    return result;
}

}  // namespace

std::vector<double> log_grid(double lo, double hi, int per_decade) {
    if (!(lo > 0.0 && hi > lo) || per_decade < 1) throw ValidationError("log grid needs 0 < lo < hi");
    std::vector<double> g;
    const int steps = static_cast<int>(std::floor(std::log10(hi / lo) * per_decade + 1e-9));
    for (int i = 0; i <= steps; ++i) g.push_back(lo * std::pow(10.0, static_cast<double>(i) / per_decade));
    return g;
}

const std::vector<std::string>& figure_ids() {
    static const std::vector<std::string> ids{"fig4", "fig5", "fig6", "fig8"};
    return ids;
}

FigureOutput reproduce_figure(const std::string& id, const std::filesystem::path& out_dir, const FigureInputs& in) {
    std::filesystem::create_directories(out_dir);
    if (id == "fig4") return fig4(out_dir, in);
    if (id == "fig5") return fig5(out_dir, in);
    if (id == "fig6") return fig6(out_dir, in);
    if (id == "fig8") return fig8(out_dir, in);
    throw ValidationError("unknown figure '" + id + "' (expected fig4, fig5, fig6 or fig8)");
}

}  // namespace noisecal::cli
