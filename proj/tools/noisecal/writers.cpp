#include "writers.hpp"

#include <cmath>

#include "noisecal/csv.hpp"

namespace noisecal::cli {

namespace {

// JSON has no NaN; undefined points become null.
nlohmann::json number(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

}  // namespace

void write_opt_tau_csv(const OptimalTauResult& result, std::ostream& out) {
    const auto& c = result.curve;
    out << "tau_s,n0_hat_V2,n0_upper_V2,n0_lower_V2\n";
    for (std::size_t i = 0; i < c.taus.size(); ++i) {
        out << format_double(c.taus[i]) << ',' << format_double(c.n0_hat[i]) << ',' << format_double(c.n0_upper[i])
            << ',' << format_double(c.n0_lower[i]) << '\n';
    }
}

void write_skr_csv(const SkrCurve& curve, std::ostream& out) {
    out << "tau_s,key_fraction,duty_factor,effective_rate\n";
    for (std::size_t i = 0; i < curve.taus.size(); ++i) {
        out << format_double(curve.taus[i]) << ',' << format_double(curve.key_fraction[i]) << ','
            << format_double(curve.duty_factor[i]) << ',' << format_double(curve.effective_rate[i]) << '\n';
    }
}

void write_skr_pair_csv(const SkrCurve& ch, const SkrCurve& fw, std::ostream& out) {
    out << "tau_s,duty_factor,characterized_key_fraction,characterized_effective_rate,fully_white_key_fraction,"
           "fully_white_effective_rate\n";
    for (std::size_t i = 0; i < ch.taus.size(); ++i) {
        out << format_double(ch.taus[i]) << ',' << format_double(ch.duty_factor[i]) << ','
            << format_double(ch.key_fraction[i]) << ',' << format_double(ch.effective_rate[i]) << ','
            << format_double(fw.key_fraction[i]) << ',' << format_double(fw.effective_rate[i]) << '\n';
    }
}

void write_ratio_csv(const RatioCurve& curve, std::ostream& out) {
    out << "tau_s,ratio,standard_error,decimation,fs_effective_Hz,model_ratio\n";
    for (const auto& p : curve.points) {
        out << format_double(p.tau) << ',' << format_double(p.ratio) << ',' << format_double(p.standard_error) << ','
            << p.decimation << ',' << format_double(p.fs_effective) << ','
            << (p.model_ratio ? format_double(*p.model_ratio) : std::string()) << '\n';
    }
}

void write_wss_csv(const BlockScanReport& report, std::size_t alpha_index, std::ostream& out) {
    out << "block_index,wilcoxon_p,bf_p,acf_stat,passed\n";
    const auto& row = report.verdicts.at(alpha_index);
    for (std::size_t b = 0; b < row.size(); ++b) {
        const auto& v = row[b];
        out << b << ',' << format_double(v.wilcoxon_p) << ',' << format_double(v.brown_forsythe_p) << ','
            << format_double(v.acf_stat) << ',' << (v.passed ? 1 : 0) << '\n';
    }
}

void write_cumulative_csv(const BlockScanReport& report, std::ostream& out) {
    out << "block_index";
    for (double a : report.alphas) out << ",alpha_" << format_double(a);
    out << '\n';
    for (std::size_t b = 0; b < report.block_count; ++b) {
        out << b;
        for (const auto& cum : report.cumulative) out << ',' << cum[b];
        out << '\n';
    }
}

nlohmann::json to_json(const CalibrationResult& r) {
    nlohmann::json j{{"scheme", to_string(r.scheme)},
                     {"tau", r.tau ? number(*r.tau) : nlohmann::json(nullptr)},
                     {"n0_hat", number(r.n0_hat)},
                     {"n0_min", number(r.n0_min)},
                     {"n0_max", number(r.n0_max)},
                     {"delta_rec", r.delta_rec ? number(*r.delta_rec) : nlohmann::json(nullptr)},
                     {"sigma_elec", number(r.sigma_elec)},
                     {"sigma_rec", number(r.sigma_rec)},
                     {"sample_count", number(r.sample_count)},
                     {"epsilon_secu", number(r.epsilon_secu)}};
    return j;
}

nlohmann::json to_json(const WhiteEstimate& e) {
    nlohmann::json diag = nlohmann::json::object();
    for (const auto& [k, v] : e.diagnostics) diag[k] = number(v);
    return {{"method", to_string(e.method)},
            {"floor_density", number(e.floor_density)},
            {"white_variance", number(e.white_variance)},
            {"diagnostics", diag}};
}

nlohmann::json summary_json(const OptimalTauResult& r, double fs, double epsilon_secu) {
    return {{"fs", fs},
            {"epsilon_secu", epsilon_secu},
            {"tau_opt", number(r.tau_opt)},
            {"n0_upper_min", number(r.n0_upper_min)},
            {"tau_opt_lower", number(r.tau_opt_lower)},
            {"n0_lower_max", number(r.n0_lower_max)},
            {"points", r.curve.taus.size()}};
}

nlohmann::json summary_json(const SkrCurve& c) {
    double best = 0.0;
    for (double v : c.effective_rate) best = std::max(best, v);
    return {{"scheme", to_string(c.scheme)},
            {"tau_opt", number(c.tau_opt)},
            {"max_effective_rate", best},
            {"points", c.taus.size()},
            {"dropped_taus", c.dropped_taus}};
}

}  // namespace noisecal::cli
