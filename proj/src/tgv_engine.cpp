#include "noisecal/tgv_engine.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <ostream>

#include <gsl/gsl_sf_expint.h>

#include "fft.hpp"
#include "noisecal/csv.hpp"
#include "noisecal/errors.hpp"
#include "noisecal/parallel.hpp"

namespace noisecal {

namespace {

constexpr double kPi = std::numbers::pi;

// 8-point Gauss-Legendre on [-1, 1].
constexpr std::array<double, 8> kGlNodes = {-0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
                                            -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
                                            0.7966664774136267,  0.9602898564975363};
constexpr std::array<double, 8> kGlWeights = {0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
                                              0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
                                              0.2223810344533745, 0.1012285362903763};

// x sin x + cos x - 1, with a series near zero where the terms cancel.
double random_walk_kernel(double x) {
    if (std::abs(x) < 1e-2) {
        const double x2 = x * x;
        return x2 * (0.5 - x2 / 8.0 + x2 * x2 / 144.0);
    }
    const double s = std::sin(0.5 * x);
    return x * std::sin(x) - 2.0 * s * s;
}

double one_minus_cos(double x) {
    const double s = std::sin(0.5 * x);
    return 2.0 * s * s;
}

double positive_power_law(const PowerLawSet& pl, double af) { return pl.h0 + pl.h1 * af + pl.h2 * af * af; }

double si(double x) { return gsl_sf_Si(x); }

// Integral of sin(pi v tau) / (pi v) over v in [a, b].
double sinc_kernel_integral(double a, double b, double tau) { return (si(kPi * tau * b) - si(kPi * tau * a)) / kPi; }

}  // namespace

void GateConfig::validate() const {
    if (!(fs > 0.0) || !std::isfinite(fs)) throw ValidationError("sampling rate fs must be positive");
    if (!(tau > 0.0) || !std::isfinite(tau)) throw ValidationError("gate duration tau must be positive");
    if (!(tau > 2.0 / fs)) {
        throw ValidationError("gate duration tau=" + format_double(tau) +
                              " must exceed 2/fs (f_min = 1/tau must lie below fs/2)");
    }
    if (grid_points < 2) throw ValidationError("grid_points must be at least 2");
}

double gated_psd_analytic(const PowerLawSet& pl, double f, double tau) {
    const double af = std::abs(f);
    if (af == 0.0) throw ValidationError("gated PSD evaluated at f = 0");
    if (!(tau > 0.0)) throw ValidationError("gate duration tau must be positive");
    const double x = kPi * af * tau;
    const double i_m2 = -pl.h_m2 * random_walk_kernel(x) / (af * af);
    const double i_m1 = pl.h_m1 * one_minus_cos(x) / af;
    return i_m2 + i_m1 + positive_power_law(pl, af);
}

double gated_power_law_quadrature(const PowerLawSet& pl, double f, double tau, double max_cycles) {
    const double af = std::abs(f);
    if (af == 0.0) throw ValidationError("gated PSD evaluated at f = 0");
    if (!(tau > 0.0)) throw ValidationError("gate duration tau must be positive");
    if (af * tau > max_cycles) return gated_psd_analytic(pl, af, tau);

    // Over [0, tau/2]: I_-2 = -4 pi^2 h_-2 int t cos(2 pi f t) dt, I_-1 = 2 pi h_-1 int sin(2 pi f t) dt.
    const double half = 0.5 * tau;
    const auto panels = static_cast<std::size_t>(std::ceil(2.0 * af * tau)) + 4;
    const double width = half / static_cast<double>(panels);
    const double omega = 2.0 * kPi * af;
    double ramp = 0.0;
    double step = 0.0;
    for (std::size_t p = 0; p < panels; ++p) {
        const double mid = (static_cast<double>(p) + 0.5) * width;
        for (std::size_t k = 0; k < kGlNodes.size(); ++k) {
            const double t = mid + 0.5 * width * kGlNodes[k];
            const double w = 0.5 * width * kGlWeights[k];
            ramp += w * t * std::cos(omega * t);
            step += w * std::sin(omega * t);
        }
    }
    const double i_m2 = -4.0 * kPi * kPi * pl.h_m2 * ramp;
    const double i_m1 = 2.0 * kPi * pl.h_m1 * step;
    return i_m2 + i_m1 + positive_power_law(pl, af);
}

double gated_tone_density(const DiracTone& tone, double f, double tau) {
    auto kernel = [tau](double v) {
        const double arg = kPi * v * tau;
        if (std::abs(arg) < 1e-8) return tau;
        return std::sin(arg) / (kPi * v);
    };
    return tone.amplitude * (kernel(f - tone.f_peak) + kernel(f + tone.f_peak));
}

// --- Lorentzian via sampled autocorrelation ------------------------------------

namespace {
constexpr std::size_t kMaxLorentzianGrid = std::size_t{1} << 24;
constexpr double kPointsPerHalfWidth = 20.0;
}  // namespace

LorentzianGating::LorentzianGating(const LorentzianLine& line, double fs) : line_(line), fs_(fs) {
    line_.validate();
    if (!(fs > 0.0)) throw ValidationError("sampling rate fs must be positive");
    df_ = line.gamma / kPointsPerHalfWidth;
    const double f_top = std::max(fs, line.f_center + 400.0 * line.gamma);
    const double cells = std::ceil(f_top / df_);
    if (cells > static_cast<double>(kMaxLorentzianGrid)) {
        throw ResolutionError("Lorentzian half-width " + format_double(line.gamma) +
                              " Hz is too narrow to resolve up to " + format_double(f_top) + " Hz");
    }
    std::size_t n = 1;
    while (static_cast<double>(n) < cells) n <<= 1;
    const std::size_t m = n + 1;
    dt_ = 1.0 / (2.0 * static_cast<double>(n) * df_);

    std::vector<double> density(m);
    for (std::size_t k = 0; k < m; ++k) density[k] = line.density(static_cast<double>(k) * df_);
    autocorrelation_ = detail::dct1(density);
    for (auto& r : autocorrelation_) r *= df_;

    // The periodic extension must not fold the autocorrelation onto itself. The fold
    // at f = 0 leaves an algebraic 1/t^2 tail, so the bound is relative, not exponential.
    const double r0 = std::abs(autocorrelation_.front());
    if (r0 > 0.0 && std::abs(autocorrelation_.back()) > 1e-4 * r0) {
        throw ResolutionError("Lorentzian autocorrelation does not decay within the transform period");
    }
}

std::vector<double> LorentzianGating::gated_density(double tau) const {
    const double half = 0.5 * tau;
    std::vector<double> gated(autocorrelation_.size());
    for (std::size_t j = 0; j < gated.size(); ++j) {
        const double t = static_cast<double>(j) * dt_;
        const double weight = std::clamp((half - t) / dt_ + 0.5, 0.0, 1.0);
        gated[j] = autocorrelation_[j] * weight;
    }
    auto out = detail::dct1(gated);
    for (auto& s : out) s *= dt_;
    return out;
}

double LorentzianGating::band_power(double tau) const {
    const auto s = gated_density(tau);
    const double f_lo = 1.0 / tau;
    const double f_hi = 0.5 * fs_;
    auto at = [&](double f) {
        const double pos = f / df_;
        const auto i = std::min(static_cast<std::size_t>(pos), s.size() - 2);
        const double frac = pos - static_cast<double>(i);
        return s[i] + frac * (s[i + 1] - s[i]);
    };
    const auto first = static_cast<std::size_t>(std::ceil(f_lo / df_));
    const auto last = static_cast<std::size_t>(std::floor(f_hi / df_));
    if (first > last) {
        return 2.0 * 0.5 * (at(f_lo) + at(f_hi)) * (f_hi - f_lo);
    }
    const double f_first = static_cast<double>(first) * df_;
    const double f_last = static_cast<double>(last) * df_;
    double integral = 0.5 * (at(f_lo) + s[first]) * (f_first - f_lo);
    for (std::size_t k = first; k < last; ++k) integral += 0.5 * (s[k] + s[k + 1]) * df_;
    integral += 0.5 * (s[last] + at(f_hi)) * (f_hi - f_last);
    return 2.0 * integral;
}

// --- full model -------------------------------------------------------------------

GatedSpectrum gated_psd_numeric(const NoisePsdModel& model, const GateConfig& gate) {
    gate.validate();
    const double f_lo = gate.f_min();
    const double f_hi = gate.f_max();

    std::vector<double> grid;
    grid.reserve(gate.grid_points);
    const double ratio = std::log(f_hi / f_lo);
    for (std::size_t i = 0; i < gate.grid_points; ++i) {
        const double u = static_cast<double>(i) / static_cast<double>(gate.grid_points - 1);
        grid.push_back(f_lo * std::exp(ratio * u));
    }
    grid.back() = f_hi;

    std::vector<LorentzianGating> lines;
    std::vector<std::vector<double>> line_spectra;
    for (const auto& l : model.lorentzians()) {
        lines.emplace_back(l, gate.fs);
        line_spectra.push_back(lines.back().gated_density(gate.tau));
        const double step = l.gamma / kPointsPerHalfWidth;
        const double lo = std::max(f_lo, l.f_center - 50.0 * l.gamma);
        const double hi = std::min(f_hi, l.f_center + 50.0 * l.gamma);
        for (double f = lo; f <= hi; f += step) grid.push_back(f);
    }
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

    GatedSpectrum out;
    out.tau = gate.tau;
    out.frequencies = grid;
    out.densities.reserve(grid.size());
    for (double f : grid) {
        double s = gated_power_law_quadrature(model.power_law(), f, gate.tau);
        for (const auto& t : model.tones()) s += gated_tone_density(t, f, gate.tau);
        for (std::size_t i = 0; i < lines.size(); ++i) {
            const auto& spec = line_spectra[i];
            const double pos = f / lines[i].df();
            const auto k = std::min(static_cast<std::size_t>(pos), spec.size() - 2);
            const double frac = pos - static_cast<double>(k);
            s += spec[k] + frac * (spec[k + 1] - spec[k]);
        }
        out.densities.push_back(s);
    }
    return out;
}

double tgv_power_law(const PowerLawSet& pl, const GateConfig& gate) {
    gate.validate();
    const double f_lo = gate.f_min();
    const double f_hi = gate.f_max();
    const double x_hi = kPi * f_hi * gate.tau;

    double p = 0.0;
    if (pl.h_m2 != 0.0) {
        // Antiderivative of (x sin x + cos x - 1) / x^2 is (1 - cos x) / x.
        p += 2.0 * pl.h_m2 * (2.0 * gate.tau - one_minus_cos(x_hi) / f_hi);
    }
    if (pl.h_m1 != 0.0) {
        // int_pi^X (1 - cos u) / u du = ln(X / pi) - Ci(X) + Ci(pi)
        p += 2.0 * pl.h_m1 * (std::log(x_hi / kPi) - gsl_sf_Ci(x_hi) + gsl_sf_Ci(kPi));
    }
    PowerLawSet flat{0.0, 0.0, pl.h0, pl.h1, pl.h2};
    if (!flat.is_zero()) p += component_power(flat, f_lo, f_hi);
    return p;
}

double tgv_tone(const DiracTone& tone, const GateConfig& gate) {
    gate.validate();
    const double f_lo = gate.f_min();
    const double f_hi = gate.f_max();
    const double fp = tone.f_peak;
    const double inner = sinc_kernel_integral(f_lo - fp, f_hi - fp, gate.tau) +
                         sinc_kernel_integral(f_lo + fp, f_hi + fp, gate.tau);
    return 2.0 * tone.amplitude * inner;
}

double tgv_lorentzian(const LorentzianLine& line, const GateConfig& gate) {
    gate.validate();
    return LorentzianGating(line, gate.fs).band_power(gate.tau);
}

double tgv(const NoisePsdModel& model, const GateConfig& gate) {
    double v = tgv_power_law(model.power_law(), gate);
    for (const auto& t : model.tones()) v += tgv_tone(t, gate);
    for (const auto& l : model.lorentzians()) v += tgv_lorentzian(l, gate);
    return v;
}

TgvCurve tgv_curve(const NoisePsdModel& model, const std::vector<double>& taus, double fs, bool breakdown,
                   unsigned threads) {
    for (std::size_t i = 0; i < taus.size(); ++i) {
        try {
            GateConfig{taus[i], fs}.validate();
        } catch (const ValidationError& e) {
            throw ValidationError("invalid tau " + format_double(taus[i]) + ": " + e.what());
        }
        if (i > 0 && !(taus[i] > taus[i - 1])) {
            throw ValidationError("taus must be strictly increasing (offending tau " + format_double(taus[i]) + ")");
        }
    }

    std::vector<LorentzianGating> lines;
    for (const auto& l : model.lorentzians()) lines.emplace_back(l, fs);

    const std::size_t n_comp = 1 + model.tones().size() + lines.size();
    std::vector<std::vector<double>> comps(n_comp, std::vector<double>(taus.size()));
    parallel_for(taus.size(), threads, [&](std::size_t k) {
        const GateConfig gate{taus[k], fs};
        std::size_t c = 0;
        comps[c++][k] = tgv_power_law(model.power_law(), gate);
        for (const auto& t : model.tones()) comps[c++][k] = tgv_tone(t, gate);
        for (const auto& l : lines) comps[c++][k] = l.band_power(taus[k]);
    });

    TgvCurve curve;
    curve.taus = taus;
    curve.variances.assign(taus.size(), 0.0);
    for (std::size_t k = 0; k < taus.size(); ++k) {
        for (std::size_t c = 0; c < n_comp; ++c) curve.variances[k] += comps[c][k];
    }
    if (breakdown) {
        curve.component_names.push_back("power_law");
        for (std::size_t i = 0; i < model.tones().size(); ++i) curve.component_names.push_back("tone_" + std::to_string(i));
        for (std::size_t i = 0; i < lines.size(); ++i) curve.component_names.push_back("lorentzian_" + std::to_string(i));
        curve.components = std::move(comps);
    }
    return curve;
}

void write_tgv_csv(const TgvCurve& curve, std::ostream& out) {
    out << "tau_s,variance_V2";
    for (const auto& name : curve.component_names) out << ',' << name;
    out << '\n';
    for (std::size_t k = 0; k < curve.taus.size(); ++k) {
        out << format_double(curve.taus[k]) << ',' << format_double(curve.variances[k]);
        for (const auto& comp : curve.components) out << ',' << format_double(comp[k]);
        out << '\n';
    }
}

}  // namespace noisecal
