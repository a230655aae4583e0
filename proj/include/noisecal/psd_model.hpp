#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace noisecal {

/// Power-law coefficients h_alpha for alpha = -2..2. Density contribution of
/// each term is h_alpha * |f|^alpha (V^2/Hz).
struct PowerLawSet {
    double h_m2 = 0.0;
    double h_m1 = 0.0;
    double h0 = 0.0;
    double h1 = 0.0;
    double h2 = 0.0;

    [[nodiscard]] std::array<double, 5> coefficients() const { return {h_m2, h_m1, h0, h1, h2}; }
    [[nodiscard]] bool is_zero() const;
    void validate() const;

    PowerLawSet& operator+=(const PowerLawSet& other);
    friend PowerLawSet operator+(PowerLawSet a, const PowerLawSet& b) { return a += b; }
    friend bool operator==(const PowerLawSet&, const PowerLawSet&) = default;
};

/// Fixed-frequency tone. Stored as a weight (V^2) at +-f_peak, so its total
/// two-sided power is 2 * amplitude.
struct DiracTone {
    double f_peak = 0.0;
    double amplitude = 0.0;

    void validate() const;
    friend bool operator==(const DiracTone&, const DiracTone&) = default;
};

/// Lorentzian line, amplitude * gamma / (pi * ((f - f_center)^2 + gamma^2)).
struct LorentzianLine {
    double f_center = 0.0;
    double amplitude = 0.0;
    double gamma = 0.0;

    [[nodiscard]] double density(double f) const;
    void validate() const;
    friend bool operator==(const LorentzianLine&, const LorentzianLine&) = default;
};

/// Parametric two-sided noise PSD, evaluated at |f|. Immutable once built.
class NoisePsdModel {
public:
    NoisePsdModel() = default;
    NoisePsdModel(std::string label, PowerLawSet power_law, std::vector<DiracTone> tones = {},
                  std::vector<LorentzianLine> lorentzians = {});

    [[nodiscard]] const std::string& label() const { return label_; }
    [[nodiscard]] const PowerLawSet& power_law() const { return power_law_; }
    [[nodiscard]] const std::vector<DiracTone>& tones() const { return tones_; }
    [[nodiscard]] const std::vector<LorentzianLine>& lorentzians() const { return lorentzians_; }

    /// Continuous density at |f| (tones excluded). Throws ValidationError at f = 0.
    [[nodiscard]] double density(double f) const;
    [[nodiscard]] double power_law_density(double f) const;

    [[nodiscard]] NoisePsdModel with_label(std::string label) const;
    [[nodiscard]] NoisePsdModel with_power_law(const PowerLawSet& pl) const;
    [[nodiscard]] NoisePsdModel with_tone(const DiracTone& tone) const;
    [[nodiscard]] NoisePsdModel scaled(double factor) const;

    friend NoisePsdModel operator+(const NoisePsdModel& a, const NoisePsdModel& b);
    friend bool operator==(const NoisePsdModel&, const NoisePsdModel&) = default;

private:
    std::string label_;
    PowerLawSet power_law_;
    std::vector<DiracTone> tones_;
    std::vector<LorentzianLine> lorentzians_;
};

[[nodiscard]] double eval_psd(const NoisePsdModel& model, double f);

/// Two-sided power 2 * integral over [f_lo, f_hi] of the (ungated) density.
[[nodiscard]] double component_power(const DiracTone& tone, double f_lo, double f_hi);
[[nodiscard]] double component_power(const LorentzianLine& line, double f_lo, double f_hi);
[[nodiscard]] double component_power(const PowerLawSet& pl, double f_lo, double f_hi);
[[nodiscard]] double component_power(const NoisePsdModel& model, double f_lo, double f_hi);

[[nodiscard]] nlohmann::json to_json(const NoisePsdModel& model);
[[nodiscard]] NoisePsdModel model_from_json(const nlohmann::json& j);
[[nodiscard]] NoisePsdModel load_model(const std::filesystem::path& path);
void save_model(const NoisePsdModel& model, const std::filesystem::path& path);

/// Bundled parameter sets (electronic and full-receiver columns).
[[nodiscard]] NoisePsdModel reference_electronic_model();
[[nodiscard]] NoisePsdModel reference_receiver_model();

}  // namespace noisecal
