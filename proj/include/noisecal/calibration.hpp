#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "noisecal/psd_model.hpp"
#include "noisecal/trace.hpp"
#include "noisecal/white_isolation.hpp"

namespace noisecal {

enum class CalibrationScheme { uncharacterized, characterized, fully_white };

[[nodiscard]] std::string to_string(CalibrationScheme scheme);
[[nodiscard]] CalibrationScheme calibration_scheme_from_string(const std::string& name);

/// The white shot component, as a two-sided density. Its full-band variance is
/// density * fs; observed through a gate of duration tau it is 2 density (fs/2 - 1/tau).
struct ShotNoiseTruth {
    double density = 0.0;
    [[nodiscard]] double n0(double fs) const { return density * fs; }
    [[nodiscard]] double gated(double tau, double fs) const { return 2.0 * density * (0.5 * fs - 1.0 / tau); }
};

struct CalibrationResult {
    CalibrationScheme scheme = CalibrationScheme::characterized;
    std::optional<double> tau;  // absent for fully_white
    double n0_hat = 0.0;
    double n0_min = 0.0;
    double n0_max = 0.0;
    std::optional<double> delta_rec;  // characterized scheme with known truth
    double sigma_elec = 0.0;
    double sigma_rec = 0.0;
    double sample_count = 0.0;
    double epsilon_secu = 0.0;
};

struct VarianceBounds {
    double v_min = 0.0;
    double v_max = 0.0;
};

/// Standard normal quantile Q_p.
[[nodiscard]] double normal_quantile(double p);

/// v_hat (1 -/+ Q_{1-eps} / sqrt(N)).
[[nodiscard]] VarianceBounds worst_case_bounds(double v_hat, double n_samples, double epsilon_secu);

/// sigma_rec - sigma_elec with no duration bookkeeping.
[[nodiscard]] double shot_uncharacterized(double sigma_rec, double sigma_elec);

/// N0_hat(tau) = tgv(rec) - tgv(elec) with bounds from N = tau * fs samples:
/// n0_max pairs the upper rec bound with the lower elec bound, n0_min the reverse.
[[nodiscard]] CalibrationResult shot_characterized(const NoisePsdModel& elec, const NoisePsdModel& rec, double tau,
                                                   double fs, double epsilon_secu = 0.01,
                                                   std::optional<ShotNoiseTruth> truth = std::nullopt);

/// Difference of the white variances of the two traces.
[[nodiscard]] CalibrationResult shot_fully_white(const Trace& rec, const Trace& elec,
                                                 WhiteMethod method = WhiteMethod::psd_floor,
                                                 double epsilon_secu = 0.01, const FloorOptions& options = {});

/// Model form: the white variance of a model is h0 * fs.
[[nodiscard]] CalibrationResult shot_fully_white(const NoisePsdModel& rec, const NoisePsdModel& elec, double fs,
                                                 double epsilon_secu = 0.01, double sample_count = 0.0);

struct OptimalTauCurve {
    std::vector<double> taus;
    std::vector<double> n0_hat;
    /// sigma_rec widened up, sigma_elec widened down (NaN where the bounds are meaningless).
    std::vector<double> n0_upper;
    /// sigma_rec widened down, sigma_elec widened up.
    std::vector<double> n0_lower;
};

struct OptimalTauResult {
    double tau_opt = 0.0;        // argmin of n0_upper
    double n0_upper_min = 0.0;
    double tau_opt_lower = 0.0;  // argmax of n0_lower
    double n0_lower_max = 0.0;
    OptimalTauCurve curve;
};

[[nodiscard]] OptimalTauResult optimal_tau(const NoisePsdModel& elec, const NoisePsdModel& rec, double fs,
                                           double epsilon_secu, const std::vector<double>& tau_grid,
                                           unsigned threads = 1);

struct RatioPoint {
    double tau = 0.0;
    double ratio = 0.0;
    double standard_error = 0.0;
    std::size_t decimation = 1;
    double fs_effective = 0.0;
    std::optional<double> model_ratio;
};

struct SkippedDuration {
    double tau = 0.0;
    std::string reason;
};

struct RatioCurve {
    std::vector<RatioPoint> points;
    std::vector<SkippedDuration> skipped;
};

struct RatioOptions {
    /// Samples per variance window after decimation; tau = window_samples * k / fs.
    std::size_t window_samples = 1000;
    const NoisePsdModel* elec_model = nullptr;
    const NoisePsdModel* rec_model = nullptr;
    unsigned threads = 1;
};

/// sigma_elec^2 / sigma_rec^2 at each duration, decimating both traces by
/// k = round(tau fs / window_samples) so every window holds the same sample
/// count. With models, overlays tgv(elec)/tgv(rec) at fs/k. A duration that rounds
/// to an already used factor is skipped.
[[nodiscard]] RatioCurve ratio_curve(const Trace& elec, const Trace& rec, const std::vector<double>& durations,
                                     const RatioOptions& options = {});

}  // namespace noisecal
