#include "noisecal/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <set>

#include <gsl/gsl_cdf.h>

#include "noisecal/errors.hpp"
#include "noisecal/parallel.hpp"
#include "noisecal/signal_synth.hpp"
#include "noisecal/tgv_engine.hpp"

namespace noisecal {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void validate_epsilon(double epsilon_secu) {
    if (!(epsilon_secu > 0.0 && epsilon_secu < 1.0)) throw ValidationError("epsilon_secu must lie in (0, 1)");
}

// Q_{1-eps} / sqrt(N), or NaN when the widening reaches the estimate itself.
double relative_widening(double n_samples, double epsilon_secu) {
    const double w = normal_quantile(1.0 - epsilon_secu) / std::sqrt(n_samples);
    return w < 1.0 ? w : kNaN;
}

CalibrationResult difference_result(CalibrationScheme scheme, double sigma_rec, double sigma_elec, double n_samples,
                                    double epsilon_secu) {
    CalibrationResult r;
    r.scheme = scheme;
    r.sigma_rec = sigma_rec;
    r.sigma_elec = sigma_elec;
    r.n0_hat = sigma_rec - sigma_elec;
    r.sample_count = n_samples;
    r.epsilon_secu = epsilon_secu;
    if (n_samples >= 2.0) {
        const auto rec = worst_case_bounds(sigma_rec, n_samples, epsilon_secu);
        const auto elec = worst_case_bounds(sigma_elec, n_samples, epsilon_secu);
        r.n0_max = rec.v_max - elec.v_min;
        r.n0_min = rec.v_min - elec.v_max;
    } else {
        r.n0_min = r.n0_max = r.n0_hat;
    }
    return r;
}

}  // namespace

std::string to_string(CalibrationScheme scheme) {
    switch (scheme) {
        case CalibrationScheme::uncharacterized:
            return "uncharacterized";
        case CalibrationScheme::characterized:
            return "characterized";
        case CalibrationScheme::fully_white:
            return "fully-white";
    }
    return "characterized";
}

CalibrationScheme calibration_scheme_from_string(const std::string& name) {
    if (name == "uncharacterized") return CalibrationScheme::uncharacterized;
    if (name == "characterized") return CalibrationScheme::characterized;
    if (name == "fully-white" || name == "fully_white") return CalibrationScheme::fully_white;
    throw ValidationError("unknown calibration scheme '" + name +
                          "' (expected uncharacterized, characterized or fully-white)");
}

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw ValidationError("quantile level must lie in (0, 1)");
    return gsl_cdf_ugaussian_Pinv(p);
}

VarianceBounds worst_case_bounds(double v_hat, double n_samples, double epsilon_secu) {
    validate_epsilon(epsilon_secu);
    if (!(n_samples >= 2.0)) throw ValidationError("worst-case bounds need at least 2 samples");
    if (!std::isfinite(v_hat)) throw ValidationError("variance estimate must be finite");
    const double w = normal_quantile(1.0 - epsilon_secu) / std::sqrt(n_samples);
    if (w >= 1.0) {
        throw NumericError("worst-case bounds straddle zero: Q/sqrt(N) = " + std::to_string(w) +
                           " >= 1 with N = " + std::to_string(n_samples));
    }
    return {v_hat * (1.0 - w), v_hat * (1.0 + w)};
}

double shot_uncharacterized(double sigma_rec, double sigma_elec) {
    if (!(sigma_elec >= 0.0)) throw ValidationError("electronic variance must be non-negative");
    if (sigma_rec < sigma_elec) {
        throw ValidationError("receiver variance below electronic variance: non-physical, indicates calibration drift");
    }
    return sigma_rec - sigma_elec;
}

CalibrationResult shot_characterized(const NoisePsdModel& elec, const NoisePsdModel& rec, double tau, double fs,
                                     double epsilon_secu, std::optional<ShotNoiseTruth> truth) {
    validate_epsilon(epsilon_secu);
    const GateConfig gate{tau, fs};
    gate.validate();
    const double sigma_elec = noisecal::tgv(elec, gate);
    const double sigma_rec = noisecal::tgv(rec, gate);
    auto r = difference_result(CalibrationScheme::characterized, sigma_rec, sigma_elec, tau * fs, epsilon_secu);
    r.tau = tau;
    if (truth) r.delta_rec = r.n0_hat - truth->gated(tau, fs);
    return r;
}

CalibrationResult shot_fully_white(const Trace& rec, const Trace& elec, WhiteMethod method, double epsilon_secu,
                                   const FloorOptions& options) {
    validate_epsilon(epsilon_secu);
    rec.validate();
    elec.validate();
    if (rec.fs != elec.fs) throw ValidationError("receiver and electronic traces must share fs");
    auto white = [&](const Trace& t) {
        switch (method) {
            case WhiteMethod::psd_floor:
                return white_floor(t, options).white_variance;
            case WhiteMethod::arma:
                return arma_whiten(t).estimate.white_variance;
            case WhiteMethod::wiener:
                return white_wiener(t, options).white_variance;
        }
        return white_floor(t, options).white_variance;
    };
    const double w_rec = white(rec);
    const double w_elec = white(elec);
    if (w_rec < w_elec) {
        throw ValidationError("white receiver variance below white electronic variance: the white-noise assumption "
                              "does not hold for these traces");
    }
    const double n = static_cast<double>(std::min(rec.size(), elec.size()));
    return difference_result(CalibrationScheme::fully_white, w_rec, w_elec, n, epsilon_secu);
}

CalibrationResult shot_fully_white(const NoisePsdModel& rec, const NoisePsdModel& elec, double fs,
                                   double epsilon_secu, double sample_count) {
    validate_epsilon(epsilon_secu);
    if (!(fs > 0.0)) throw ValidationError("sampling rate fs must be positive");
    const double w_rec = rec.power_law().h0 * fs;
    const double w_elec = elec.power_law().h0 * fs;
    if (w_rec < w_elec) {
        throw ValidationError("receiver white level below electronic white level: the white-noise assumption fails");
    }
    return difference_result(CalibrationScheme::fully_white, w_rec, w_elec, sample_count, epsilon_secu);
}

OptimalTauResult optimal_tau(const NoisePsdModel& elec, const NoisePsdModel& rec, double fs, double epsilon_secu,
                             const std::vector<double>& tau_grid, unsigned threads) {
    validate_epsilon(epsilon_secu);
    if (tau_grid.empty()) throw ValidationError("tau grid is empty");
    for (std::size_t i = 1; i < tau_grid.size(); ++i) {
        if (!(tau_grid[i] > tau_grid[i - 1])) throw ValidationError("tau grid must be strictly increasing");
    }
    if (tau_grid.size() > 1 && tau_grid.back() < 1e4 * tau_grid.front() * (1.0 - 1e-12)) {
        throw ValidationError("tau grid must span at least 4 decades");
    }
    for (double tau : tau_grid) GateConfig{tau, fs}.validate();

    OptimalTauResult out;
    auto& c = out.curve;
    c.taus = tau_grid;
    const std::size_t m = tau_grid.size();
    c.n0_hat.resize(m);
    c.n0_upper.resize(m);
    c.n0_lower.resize(m);
    parallel_for(m, threads, [&](std::size_t i) {
        const GateConfig gate{tau_grid[i], fs};
        const double s_rec = noisecal::tgv(rec, gate);
        const double s_elec = noisecal::tgv(elec, gate);
        const double w = relative_widening(tau_grid[i] * fs, epsilon_secu);
        c.n0_hat[i] = s_rec - s_elec;
        c.n0_upper[i] = s_rec * (1.0 + w) - s_elec * (1.0 - w);
        c.n0_lower[i] = s_rec * (1.0 - w) - s_elec * (1.0 + w);
    });

    std::optional<std::size_t> best_upper;
    std::optional<std::size_t> best_lower;
    for (std::size_t i = 0; i < m; ++i) {
        if (std::isnan(c.n0_upper[i])) continue;
        if (!best_upper || c.n0_upper[i] < c.n0_upper[*best_upper]) best_upper = i;
        if (!best_lower || c.n0_lower[i] > c.n0_lower[*best_lower]) best_lower = i;
    }
    if (!best_upper) throw NumericError("no tau on the grid holds enough samples for meaningful bounds");
    out.tau_opt = tau_grid[*best_upper];
    out.n0_upper_min = c.n0_upper[*best_upper];
    out.tau_opt_lower = tau_grid[*best_lower];
    out.n0_lower_max = c.n0_lower[*best_lower];
    return out;
}

RatioCurve ratio_curve(const Trace& elec, const Trace& rec, const std::vector<double>& durations,
                       const RatioOptions& options) {
    elec.validate();
    rec.validate();
    if (elec.fs != rec.fs) throw ValidationError("electronic and receiver traces must share fs");
    if (options.window_samples < 2) throw ValidationError("window_samples must be at least 2");
    if ((options.elec_model == nullptr) != (options.rec_model == nullptr)) {
        throw ValidationError("model overlay needs both the electronic and the receiver model");
    }
    const double fs = elec.fs;
    const std::size_t n = std::min(elec.size(), rec.size());
    const auto w = static_cast<double>(options.window_samples);

    // Each distinct decimation factor is computed once.
    std::vector<std::size_t> factors(durations.size(), 0);
    std::vector<std::string> reasons(durations.size());
    for (std::size_t i = 0; i < durations.size(); ++i) {
        const double tau = durations[i];
        if (!(tau > 0.0) || !std::isfinite(tau)) {
            reasons[i] = "duration must be positive";
            continue;
        }
        const auto k = static_cast<long long>(std::llround(tau * fs / w));
        if (k < 1) {
            reasons[i] = "shorter than one window of " + std::to_string(options.window_samples) + " samples";
        } else if (static_cast<std::size_t>(k) > n / 8) {
            reasons[i] = "decimation factor " + std::to_string(k) + " exceeds n/8";
        } else if (n / static_cast<std::size_t>(k) < 2 * options.window_samples) {
            reasons[i] = "fewer than two windows after decimation by " + std::to_string(k);
        } else {
            factors[i] = static_cast<std::size_t>(k);
        }
    }
    std::vector<std::size_t> distinct;
    for (auto k : factors) {
        if (k > 0) distinct.push_back(k);
    }
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

    std::map<std::size_t, RatioPoint> by_factor;
    std::map<std::size_t, std::string> failed;
    std::mutex mutex;
    parallel_for(distinct.size(), options.threads, [&](std::size_t j) {
        const std::size_t k = distinct[j];
        const auto de = decimate(elec, k);
        const auto dr = decimate(rec, k);
        const double fs_k = fs / static_cast<double>(k);
        const double tau = w / fs_k;
        const auto ve = windowed_variance(de, tau);
        const auto vr = windowed_variance(dr, tau);
        if (!(vr.mean > 0.0)) {
            std::lock_guard lock(mutex);
            failed[k] = "receiver variance is zero";
            return;
        }
        RatioPoint p;
        p.tau = tau;
        p.decimation = k;
        p.fs_effective = fs_k;
        p.ratio = ve.mean / vr.mean;
        const double re = ve.mean > 0.0 ? ve.standard_error / ve.mean : 0.0;
        const double rr = vr.standard_error / vr.mean;
        p.standard_error = std::abs(p.ratio) * std::sqrt(re * re + rr * rr);
        if (options.elec_model) {
            const GateConfig gate{tau, fs_k};
            p.model_ratio = noisecal::tgv(*options.elec_model, gate) / noisecal::tgv(*options.rec_model, gate);
        }
        std::lock_guard lock(mutex);
        by_factor[k] = p;
    });

    RatioCurve curve;
    std::set<std::size_t> used;
    for (std::size_t i = 0; i < durations.size(); ++i) {
        if (factors[i] == 0) {
            curve.skipped.push_back({durations[i], reasons[i]});
        } else if (!used.insert(factors[i]).second) {
            curve.skipped.push_back({durations[i], "same decimation factor " + std::to_string(factors[i]) +
                                                       " as an earlier duration"});
        } else if (auto f = failed.find(factors[i]); f != failed.end()) {
            curve.skipped.push_back({durations[i], f->second});
        } else {
            curve.points.push_back(by_factor.at(factors[i]));
        }
    }
    return curve;
}

}  // namespace noisecal
