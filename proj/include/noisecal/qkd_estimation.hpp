#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include <json.hpp>

#include "noisecal/calibration.hpp"
#include "noisecal/psd_model.hpp"
#include "noisecal/trace.hpp"

namespace noisecal {

/// Link and detector parameters; variances in shot-noise units.
struct QkdScenario {
    double v_a = 5.0;
    double eta = 1.0;
    double t_true = 0.25;
    double xi_alice = 0.1;
    double v_elec_snu = 0.09;
    double beta = 1.0;
    double tau_max = 1.6e-3;
    unsigned calib_steps = 2;

    /// Excess noise referred to Bob's input: eta T xi_alice.
    [[nodiscard]] double xi_bob() const { return eta * t_true * xi_alice; }
    void validate() const;
};

[[nodiscard]] nlohmann::json to_json(const QkdScenario& scenario);
/// Accepts either xi_alice or xi_bob (converted with eta T).
[[nodiscard]] QkdScenario scenario_from_json(const nlohmann::json& j);
[[nodiscard]] QkdScenario load_scenario(const std::filesystem::path& path);

/// Bob's samples x_b = sqrt(eta T N0 / 2) (x_a + eps) + n_rec, one receiver-noise
/// sample per symbol; x_a and eps in SNU, x_b and n_rec in volts.
struct MeasurementSim {
    std::vector<double> x_a;
    std::vector<double> epsilon;
    std::vector<double> x_b;
    Trace n_rec;
    double n0_true = 0.0;
};

[[nodiscard]] MeasurementSim simulate_measurement(const QkdScenario& scenario, const NoisePsdModel& rec_model,
                                                  std::size_t n_symbols, double fs, std::uint64_t seed,
                                                  double n0_true);

struct EstimationReport {
    double t_hat = 0.0;
    double xi_hat_snu = 0.0;  // referred to Alice
    double xi_bob_snu = 0.0;  // eta t_hat xi_hat
    double v_b_snu = 0.0;
    double v_b_given_a_snu = 0.0;
    double n0_used = 0.0;
};

/// Sample variances normalized by n0_hat; V_{B|A} is the residual variance of
/// x_b after regression on x_a.
[[nodiscard]] EstimationReport estimate_parameters(const MeasurementSim& sim, double n0_hat, double sigma_rec,
                                                   double eta, double v_a);

struct KeyInputs {
    double v_a = 5.0;
    double t = 0.25;
    double xi_alice = 0.1;
    double eta = 1.0;
    double v_elec_snu = 0.0;
    double beta = 1.0;
};

struct KeyRateReport {
    double key_fraction = 0.0;  // bits/symbol, clipped at 0
    double mutual_information = 0.0;
    double holevo_bound = 0.0;
    double duty_factor = 1.0;
    double effective_rate = 0.0;
};

/// Asymptotic Gaussian-modulation key fraction, heterodyne detection with
/// trusted detector noise, reverse reconciliation.
[[nodiscard]] KeyRateReport key_fraction(const KeyInputs& inputs);

/// max(0, 1 - calib_steps tau / tau_max), clipped to [0, 1].
[[nodiscard]] double duty_factor(double tau, double tau_max, unsigned calib_steps);

struct SkrCurve {
    CalibrationScheme scheme = CalibrationScheme::characterized;
    std::vector<double> taus;
    std::vector<double> n0_true;
    std::vector<double> n0_hat;
    std::vector<double> n0_used;  // after worst-case widening
    std::vector<double> t_hat;
    std::vector<double> key_fraction;
    std::vector<double> duty_factor;
    std::vector<double> effective_rate;
    double tau_opt = 0.0;  // argmax of effective_rate
    std::vector<double> dropped_taus;
};

/// Effective key rate against calibration duration. Truth: the white shot
/// component (h0_rec - h0_elec) seen through the gate. N0_hat per scheme is
/// widened to sigma_rec(1 + q) - sigma_elec(1 - q), q = Q_{1-eps}/sqrt(tau fs);
/// the ratio N0 / N0_used rescales the transmittance and electronic noise Bob
/// infers. Grid points outside (2/fs, tau_max / calib_steps) or with q >= 1 are dropped.
[[nodiscard]] SkrCurve skr_vs_tau(const QkdScenario& scenario, const NoisePsdModel& elec,
                                  const NoisePsdModel& rec, double fs, const std::vector<double>& tau_grid,
                                  CalibrationScheme scheme, double epsilon_secu = 0.01, unsigned threads = 1);

struct RinSensitivity {
    double h_m1_factor = 40.0;
    SkrCurve characterized_low;
    SkrCurve characterized_high;
    SkrCurve fully_white_low;
    SkrCurve fully_white_high;
};

/// Paired curves for the receiver model and a copy with h_-1 scaled by `h_m1_factor`.
[[nodiscard]] RinSensitivity rin_sensitivity(const QkdScenario& scenario, const NoisePsdModel& elec,
                                             const NoisePsdModel& rec_low, double h_m1_factor, double fs,
                                             const std::vector<double>& tau_grid, double epsilon_secu = 0.01,
                                             unsigned threads = 1);

}  // namespace noisecal
