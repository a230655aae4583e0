#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "noisecal/psd_model.hpp"

namespace noisecal {

/// Rectangular observation gate of duration tau at sampling rate fs. The
/// variance band is [1/tau, fs/2].
struct GateConfig {
    double tau = 0.0;
    double fs = 0.0;
    std::size_t grid_points = 1024;

    [[nodiscard]] double f_min() const { return 1.0 / tau; }
    [[nodiscard]] double f_max() const { return 0.5 * fs; }
    void validate() const;
};

struct GatedSpectrum {
    std::vector<double> frequencies;
    std::vector<double> densities;
    double tau = 0.0;
};

struct TgvCurve {
    std::vector<double> taus;
    std::vector<double> variances;
    /// Filled only when a breakdown was requested; components[i][k] belongs to taus[k].
    std::vector<std::string> component_names;
    std::vector<std::vector<double>> components;
};

/// Closed-form gated density of a power-law set:
/// I_-2 + I_-1 + h0 + |f| h1 + f^2 h2.
[[nodiscard]] double gated_psd_analytic(const PowerLawSet& power_law, double f, double tau);

/// Gated density of the alpha = -2 and alpha = -1 terms obtained by direct
/// quadrature of the gated autocorrelation (-2 pi^2 h_-2 |t| and i pi h_-1 sign t).
/// Used by the numeric pipeline up to `max_cycles` = f * tau; closed form beyond.
[[nodiscard]] double gated_power_law_quadrature(const PowerLawSet& power_law, double f, double tau,
                                                double max_cycles = 1024.0);

/// Gate a tone: A [K(f - f_peak) + K(f + f_peak)], K(v) = sin(pi v tau) / (pi v).
[[nodiscard]] double gated_tone_density(const DiracTone& tone, double f, double tau);

/// Gated spectrum of a Lorentzian line obtained by transforming its sampled
/// autocorrelation, multiplying by the gate, and transforming back. The
/// autocorrelation is computed once and reused across gate durations.
class LorentzianGating {
public:
    LorentzianGating(const LorentzianLine& line, double fs);

    /// Gated density on the internal uniform grid k * df, k = 0..size-1.
    [[nodiscard]] std::vector<double> gated_density(double tau) const;
    /// 2 * integral over [1/tau, fs/2] of the gated density.
    [[nodiscard]] double band_power(double tau) const;

    [[nodiscard]] double df() const { return df_; }
    [[nodiscard]] const LorentzianLine& line() const { return line_; }

private:
    LorentzianLine line_;
    double fs_;
    double df_;
    double dt_;
    std::vector<double> autocorrelation_;  // R(j * dt), j = 0..m-1
};

/// Numeric gated PSD of the full model on a log-spaced grid over [1/tau, fs/2],
/// refined to at least 20 points per half-width around each Lorentzian.
[[nodiscard]] GatedSpectrum gated_psd_numeric(const NoisePsdModel& model, const GateConfig& gate);

/// Band powers 2 * integral_{1/tau}^{fs/2} of each gated component.
[[nodiscard]] double tgv_power_law(const PowerLawSet& power_law, const GateConfig& gate);
[[nodiscard]] double tgv_tone(const DiracTone& tone, const GateConfig& gate);
[[nodiscard]] double tgv_lorentzian(const LorentzianLine& line, const GateConfig& gate);

/// Time-gated variance of the model.
[[nodiscard]] double tgv(const NoisePsdModel& model, const GateConfig& gate);

/// TGV at every tau (sorted ascending). With `breakdown`, per-component curves
/// named power_law, tone_<i>, lorentzian_<i>.
[[nodiscard]] TgvCurve tgv_curve(const NoisePsdModel& model, const std::vector<double>& taus, double fs,
                                 bool breakdown = false, unsigned threads = 1);

/// CSV with header tau_s,variance_V2[,component...].
void write_tgv_csv(const TgvCurve& curve, std::ostream& out);

}  // namespace noisecal
