#include "noisecal/qkd_estimation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "noisecal/errors.hpp"
#include "noisecal/parallel.hpp"
#include "noisecal/signal_synth.hpp"
#include "noisecal/tgv_engine.hpp"

namespace noisecal {

namespace {

// Entropy of a thermal state with mean photon number x, in bits.
double g(double x) {
    if (x <= 0.0) return 0.0;
    return (x + 1.0) * std::log2(x + 1.0) - x * std::log2(x);
}

// Symplectic eigenvalues from the invariants: nu^2 = (a +/- sqrt(a^2 - 4b)) / 2.
std::pair<double, double> eigen_pair(double a, double b, const char* which) {
    const double disc = a * a - 4.0 * b;
    const double tol = 1e-12 * a * a;
    if (disc < -tol || b < 0.0) {
        throw NumericError(std::string("unphysical covariance: negative discriminant for ") + which + " eigenvalues");
    }
    const double root = std::sqrt(std::max(0.0, disc));
    const double hi = 0.5 * (a + root);
    const double lo = 0.5 * (a - root);
    if (lo < 0.0) throw NumericError(std::string("unphysical covariance: negative ") + which + " eigenvalue");
    const double l1 = std::sqrt(hi);
    const double l2 = std::sqrt(lo);
    if (l2 < 1.0 - 1e-9) {
        throw NumericError(std::string("unphysical covariance: ") + which + " symplectic eigenvalue below 1");
    }
    return {l1, l2};
}

double read_field(const nlohmann::json& j, const char* key) {
    const auto it = j.find(key);
    if (it == j.end()) throw ValidationError(std::string("missing field '") + key + "'");
    if (!it->is_number()) throw ValidationError(std::string("field '") + key + "' must be a number");
    return it->get<double>();
}

double sample_mean(const std::vector<double>& x) {
    double s = 0.0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
}

}  // namespace

void QkdScenario::validate() const {
    if (!(v_a > 0.0)) throw ValidationError("field 'v_a' must be positive");
    if (!(eta > 0.0 && eta <= 1.0)) throw ValidationError("field 'eta' must lie in (0, 1]");
    if (!(t_true > 0.0 && t_true <= 1.0)) throw ValidationError("field 't_true' must lie in (0, 1]");
    if (!(xi_alice >= 0.0)) throw ValidationError("field 'xi_alice' must be non-negative");
    if (!(v_elec_snu >= 0.0)) throw ValidationError("field 'v_elec_snu' must be non-negative");
    if (!(beta > 0.0 && beta <= 1.0)) throw ValidationError("field 'beta' must lie in (0, 1]");
    if (!(tau_max > 0.0)) throw ValidationError("field 'tau_max' must be positive");
    if (calib_steps < 1) throw ValidationError("field 'calib_steps' must be at least 1");
}

nlohmann::json to_json(const QkdScenario& s) {
    return {{"v_a", s.v_a},
            {"eta", s.eta},
            {"t_true", s.t_true},
            {"xi_alice", s.xi_alice},
            {"v_elec_snu", s.v_elec_snu},
            {"beta", s.beta},
            {"tau_max", s.tau_max},
            {"calib_steps", s.calib_steps}};
}

QkdScenario scenario_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ValidationError("scenario must be a JSON object");
    QkdScenario s;
    s.v_a = read_field(j, "v_a");
    s.eta = j.contains("eta") ? read_field(j, "eta") : 1.0;
    s.t_true = read_field(j, "t_true");
    s.v_elec_snu = read_field(j, "v_elec_snu");
    s.beta = j.contains("beta") ? read_field(j, "beta") : 1.0;
    s.tau_max = read_field(j, "tau_max");
    if (j.contains("calib_steps")) {
        const double steps = read_field(j, "calib_steps");
        if (!(steps >= 1.0) || steps != std::floor(steps)) {
            throw ValidationError("field 'calib_steps' must be a positive integer");
        }
        s.calib_steps = static_cast<unsigned>(steps);
    }
    if (j.contains("xi_alice")) {
        if (j.contains("xi_bob")) throw ValidationError("give either 'xi_alice' or 'xi_bob', not both");
        s.xi_alice = read_field(j, "xi_alice");
    } else if (j.contains("xi_bob")) {
        s.xi_alice = read_field(j, "xi_bob") / (s.eta * s.t_true);
    } else {
        throw ValidationError("missing field 'xi_alice' (or 'xi_bob')");
    }
    s.validate();
    return s;
}

QkdScenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open scenario file " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError("scenario file " + path.string() + " is not valid JSON: " + e.what());
    }
    return scenario_from_json(j);
}

MeasurementSim simulate_measurement(const QkdScenario& scenario, const NoisePsdModel& rec_model,
                                    std::size_t n_symbols, double fs, std::uint64_t seed, double n0_true) {
    scenario.validate();
    if (!(n0_true > 0.0)) throw ValidationError("true shot-noise variance must be positive");
    MeasurementSim sim;
    sim.n0_true = n0_true;
    sim.n_rec = synthesize(rec_model, fs, n_symbols, seed ^ 0x5DEECE66DULL);

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> alice(0.0, std::sqrt(scenario.v_a));
    std::normal_distribution<double> channel(0.0, std::sqrt(scenario.xi_alice));
    sim.x_a.resize(n_symbols);
    sim.epsilon.resize(n_symbols);
    sim.x_b.resize(n_symbols);
    const double gain = std::sqrt(0.5 * scenario.eta * scenario.t_true * n0_true);
    for (std::size_t i = 0; i < n_symbols; ++i) {
        sim.x_a[i] = alice(rng);
        sim.epsilon[i] = scenario.xi_alice > 0.0 ? channel(rng) : 0.0;
        sim.x_b[i] = gain * (sim.x_a[i] + sim.epsilon[i]) + sim.n_rec.samples[i];
    }
    return sim;
}

EstimationReport estimate_parameters(const MeasurementSim& sim, double n0_hat, double sigma_rec, double eta,
                                     double v_a) {
    if (!(n0_hat > 0.0)) throw ValidationError("shot-noise estimate must be positive");
    if (!(eta > 0.0 && eta <= 1.0)) throw ValidationError("eta must lie in (0, 1]");
    if (!(v_a > 0.0)) throw ValidationError("v_a must be positive");
    if (sim.x_a.size() != sim.x_b.size() || sim.x_a.size() < 2) {
        throw ValidationError("measurement needs matching Alice and Bob records of at least 2 symbols");
    }
    const double ma = sample_mean(sim.x_a);
    const double mb = sample_mean(sim.x_b);
    double saa = 0.0;
    double sbb = 0.0;
    double sab = 0.0;
    for (std::size_t i = 0; i < sim.x_a.size(); ++i) {
        const double a = sim.x_a[i] - ma;
        const double b = sim.x_b[i] - mb;
        saa += a * a;
        sbb += b * b;
        sab += a * b;
    }
    const auto n = static_cast<double>(sim.x_a.size());
    const double var_b = sbb / n;
    const double var_b_given_a = (sbb - sab * sab / saa) / n;

    EstimationReport r;
    r.n0_used = n0_hat;
    r.v_b_snu = var_b / n0_hat;
    r.v_b_given_a_snu = var_b_given_a / n0_hat;
    r.t_hat = 2.0 / (eta * v_a) * (r.v_b_snu - r.v_b_given_a_snu);
    if (!(r.t_hat > 0.0)) throw NumericError("estimated transmittance is not positive: estimation collapsed");
    r.xi_hat_snu = 2.0 / (eta * r.t_hat) * (r.v_b_given_a_snu - sigma_rec / n0_hat);
    r.xi_bob_snu = eta * r.t_hat * r.xi_hat_snu;
    return r;
}

KeyRateReport key_fraction(const KeyInputs& in) {
    if (!(in.t > 0.0 && in.t <= 1.0)) throw ValidationError("transmittance must lie in (0, 1]");
    if (!(in.eta > 0.0 && in.eta <= 1.0)) throw ValidationError("eta must lie in (0, 1]");
    if (!(in.v_a > 0.0)) throw ValidationError("v_a must be positive");
    if (!(in.beta >= 0.0 && in.beta <= 1.0)) throw ValidationError("beta must lie in [0, 1]");
    if (!(in.v_elec_snu >= 0.0)) throw ValidationError("electronic noise must be non-negative");
    if (!std::isfinite(in.xi_alice)) throw ValidationError("excess noise must be finite");

    const double v = in.v_a + 1.0;
    const double t = in.t;
    const double chi_line = (1.0 - t) / t + in.xi_alice;
    const double chi_het = (2.0 - in.eta + 2.0 * in.v_elec_snu) / in.eta;
    const double chi_tot = chi_line + chi_het / t;
    if (!(chi_line > -1.0 / v)) throw NumericError("unphysical covariance: channel noise below the vacuum limit");

    KeyRateReport r;
    r.mutual_information = std::log2((v + chi_tot) / (1.0 + chi_tot));

    const double a = v * v * (1.0 - 2.0 * t) + 2.0 * t + t * t * (v + chi_line) * (v + chi_line);
    const double b = t * t * (v * chi_line + 1.0) * (v * chi_line + 1.0);
    const auto [l1, l2] = eigen_pair(a, b, "joint");

    const double denom = t * (v + chi_tot);
    const double c = (a * chi_het * chi_het + b + 1.0 + 2.0 * chi_het * (v * std::sqrt(b) + t * (v + chi_line)) +
                      2.0 * t * (v * v - 1.0)) /
                     (denom * denom);
    const double d = std::pow((v + std::sqrt(b) * chi_het) / denom, 2);
    const auto [l3, l4] = eigen_pair(c, d, "conditional");

    r.holevo_bound = g((l1 - 1.0) / 2.0) + g((l2 - 1.0) / 2.0) - g((l3 - 1.0) / 2.0) - g((l4 - 1.0) / 2.0);
    r.key_fraction = std::max(0.0, in.beta * r.mutual_information - r.holevo_bound);
    r.duty_factor = 1.0;
    r.effective_rate = r.key_fraction;
    return r;
}

double duty_factor(double tau, double tau_max, unsigned calib_steps) {
    if (!(tau_max > 0.0)) throw ValidationError("tau_max must be positive");
    return std::clamp(1.0 - static_cast<double>(calib_steps) * tau / tau_max, 0.0, 1.0);
}

SkrCurve skr_vs_tau(const QkdScenario& scenario, const NoisePsdModel& elec, const NoisePsdModel& rec, double fs,
                    const std::vector<double>& tau_grid, CalibrationScheme scheme, double epsilon_secu,
                    unsigned threads) {
    scenario.validate();
    if (scheme == CalibrationScheme::uncharacterized) {
        throw ValidationError("key-rate sweeps need a duration-aware scheme (characterized or fully-white)");
    }
    if (!(epsilon_secu > 0.0 && epsilon_secu < 1.0)) throw ValidationError("epsilon_secu must lie in (0, 1)");
    if (!(fs > 0.0)) throw ValidationError("sampling rate fs must be positive");
    const double dh0 = rec.power_law().h0 - elec.power_law().h0;
    if (!(dh0 > 0.0)) throw ValidationError("receiver white level must exceed the electronic white level");

    const double q_level = normal_quantile(1.0 - epsilon_secu);
    const double tau_limit = scenario.tau_max / static_cast<double>(scenario.calib_steps);

    SkrCurve curve;
    curve.scheme = scheme;
    for (double tau : tau_grid) {
        const bool inside = tau > 2.0 / fs && tau < tau_limit && q_level / std::sqrt(tau * fs) < 1.0;
        (inside ? curve.taus : curve.dropped_taus).push_back(tau);
    }
    if (curve.taus.empty()) throw ValidationError("no feasible duration in the tau grid");
    std::sort(curve.taus.begin(), curve.taus.end());

    const std::size_t m = curve.taus.size();
    for (auto* v : {&curve.n0_true, &curve.n0_hat, &curve.n0_used, &curve.t_hat, &curve.key_fraction,
                    &curve.duty_factor, &curve.effective_rate}) {
        v->assign(m, 0.0);
    }
    parallel_for(m, threads, [&](std::size_t i) {
        const double tau = curve.taus[i];
        const double band = 2.0 * (0.5 * fs - 1.0 / tau);
        double s_rec = 0.0;
        double s_elec = 0.0;
        if (scheme == CalibrationScheme::characterized) {
            const GateConfig gate{tau, fs};
            s_rec = noisecal::tgv(rec, gate);
            s_elec = noisecal::tgv(elec, gate);
        } else {
            s_rec = rec.power_law().h0 * band;
            s_elec = elec.power_law().h0 * band;
        }
        const double q = q_level / std::sqrt(tau * fs);
        const double n0_true = dh0 * band;
        const double used = s_rec * (1.0 + q) - s_elec * (1.0 - q);
        const double ratio = n0_true / used;
        KeyInputs k{scenario.v_a, scenario.t_true * ratio, scenario.xi_alice, scenario.eta,
                    scenario.v_elec_snu * ratio, scenario.beta};
        const auto report = key_fraction(k);
        curve.n0_true[i] = n0_true;
        curve.n0_hat[i] = s_rec - s_elec;
        curve.n0_used[i] = used;
        curve.t_hat[i] = k.t;
        curve.key_fraction[i] = report.key_fraction;
        curve.duty_factor[i] = duty_factor(tau, scenario.tau_max, scenario.calib_steps);
        curve.effective_rate[i] = curve.duty_factor[i] * report.key_fraction;
    });
    const auto best = std::max_element(curve.effective_rate.begin(), curve.effective_rate.end());
    curve.tau_opt = curve.taus[static_cast<std::size_t>(best - curve.effective_rate.begin())];
    return curve;
}

RinSensitivity rin_sensitivity(const QkdScenario& scenario, const NoisePsdModel& elec, const NoisePsdModel& rec_low,
                               double h_m1_factor, double fs, const std::vector<double>& tau_grid,
                               double epsilon_secu, unsigned threads) {
    if (!(h_m1_factor > 0.0)) throw ValidationError("h_-1 scale factor must be positive");
    auto pl = rec_low.power_law();
    pl.h_m1 *= h_m1_factor;
    const auto rec_high = rec_low.with_power_law(pl);
    RinSensitivity out;
    out.h_m1_factor = h_m1_factor;
    out.characterized_low =
        skr_vs_tau(scenario, elec, rec_low, fs, tau_grid, CalibrationScheme::characterized, epsilon_secu, threads);
    out.characterized_high =
        skr_vs_tau(scenario, elec, rec_high, fs, tau_grid, CalibrationScheme::characterized, epsilon_secu, threads);
    out.fully_white_low =
        skr_vs_tau(scenario, elec, rec_low, fs, tau_grid, CalibrationScheme::fully_white, epsilon_secu, threads);
    out.fully_white_high =
        skr_vs_tau(scenario, elec, rec_high, fs, tau_grid, CalibrationScheme::fully_white, epsilon_secu, threads);
    return out;
}

}  // namespace noisecal
