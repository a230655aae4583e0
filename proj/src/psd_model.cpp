#include "noisecal/psd_model.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "noisecal/errors.hpp"

namespace noisecal {

namespace {

void require_nonnegative(double value, const std::string& field) {
    if (!std::isfinite(value)) {
        throw ValidationError("field '" + field + "' must be finite");
    }
    if (value < 0.0) {
        throw ValidationError("field '" + field + "' must be non-negative");
    }
}

void require_positive(double value, const std::string& field) {
    if (!std::isfinite(value) || value <= 0.0) {
        throw ValidationError("field '" + field + "' must be positive and finite");
    }
}

void check_band(double f_lo, double f_hi) {
    if (!(f_lo > 0.0) || !(f_hi > f_lo) || !std::isfinite(f_hi)) {
        throw ValidationError("invalid band: need 0 < f_lo < f_hi");
    }
}

}  // namespace

bool PowerLawSet::is_zero() const {
    return h_m2 == 0.0 && h_m1 == 0.0 && h0 == 0.0 && h1 == 0.0 && h2 == 0.0;
}

void PowerLawSet::validate() const {
    require_nonnegative(h_m2, "h_m2");
    require_nonnegative(h_m1, "h_m1");
    require_nonnegative(h0, "h0");
    require_nonnegative(h1, "h1");
    require_nonnegative(h2, "h2");
}

PowerLawSet& PowerLawSet::operator+=(const PowerLawSet& other) {
    h_m2 += other.h_m2;
    h_m1 += other.h_m1;
    h0 += other.h0;
    h1 += other.h1;
    h2 += other.h2;
    return *this;
}

void DiracTone::validate() const {
    require_positive(f_peak, "tones.f");
    require_nonnegative(amplitude, "tones.A");
}

double LorentzianLine::density(double f) const {
    const double d = std::abs(f) - f_center;
    return amplitude * gamma / (std::numbers::pi * (d * d + gamma * gamma));
}

void LorentzianLine::validate() const {
    require_positive(f_center, "lorentzians.f0");
    require_nonnegative(amplitude, "lorentzians.A");
    require_positive(gamma, "lorentzians.gamma");
}

NoisePsdModel::NoisePsdModel(std::string label, PowerLawSet power_law, std::vector<DiracTone> tones,
                             std::vector<LorentzianLine> lorentzians)
    : label_(std::move(label)),
      power_law_(power_law),
      tones_(std::move(tones)),
      lorentzians_(std::move(lorentzians)) {
    power_law_.validate();
    for (const auto& t : tones_) t.validate();
    for (const auto& l : lorentzians_) l.validate();
}

double NoisePsdModel::power_law_density(double f) const {
    const double af = std::abs(f);
    if (af == 0.0) {
        throw ValidationError("PSD evaluated at f = 0");
    }
    const auto& p = power_law_;
    double s = p.h0 + p.h1 * af + p.h2 * af * af;
    if (p.h_m1 != 0.0) s += p.h_m1 / af;
    if (p.h_m2 != 0.0) s += p.h_m2 / (af * af);
    return s;
}

double NoisePsdModel::density(double f) const {
    double s = power_law_density(f);
    for (const auto& l : lorentzians_) s += l.density(f);
    return s;
}

NoisePsdModel NoisePsdModel::with_label(std::string label) const {
    NoisePsdModel m = *this;
    m.label_ = std::move(label);
    return m;
}

NoisePsdModel NoisePsdModel::with_power_law(const PowerLawSet& pl) const {
    return NoisePsdModel(label_, pl, tones_, lorentzians_);
}

NoisePsdModel NoisePsdModel::with_tone(const DiracTone& tone) const {
    auto tones = tones_;
    tones.push_back(tone);
    return NoisePsdModel(label_, power_law_, std::move(tones), lorentzians_);
}

NoisePsdModel NoisePsdModel::scaled(double factor) const {
    require_nonnegative(factor, "scale");
    PowerLawSet pl{power_law_.h_m2 * factor, power_law_.h_m1 * factor, power_law_.h0 * factor,
                   power_law_.h1 * factor, power_law_.h2 * factor};
    auto tones = tones_;
    for (auto& t : tones) t.amplitude *= factor;
    auto lines = lorentzians_;
    for (auto& l : lines) l.amplitude *= factor;
    return NoisePsdModel(label_, pl, std::move(tones), std::move(lines));
}

NoisePsdModel operator+(const NoisePsdModel& a, const NoisePsdModel& b) {
    auto tones = a.tones_;
    tones.insert(tones.end(), b.tones_.begin(), b.tones_.end());
    auto lines = a.lorentzians_;
    lines.insert(lines.end(), b.lorentzians_.begin(), b.lorentzians_.end());
    return NoisePsdModel(a.label_, a.power_law_ + b.power_law_, std::move(tones), std::move(lines));
}

double eval_psd(const NoisePsdModel& model, double f) { return model.density(f); }

double component_power(const DiracTone& tone, double f_lo, double f_hi) {
    check_band(f_lo, f_hi);
    return (f_lo < tone.f_peak && tone.f_peak < f_hi) ? 2.0 * tone.amplitude : 0.0;
}

double component_power(const LorentzianLine& line, double f_lo, double f_hi) {
    check_band(f_lo, f_hi);
    const double upper = std::atan((f_hi - line.f_center) / line.gamma);
    const double lower = std::atan((f_lo - line.f_center) / line.gamma);
    return 2.0 * line.amplitude * (upper - lower) / std::numbers::pi;
}

double component_power(const PowerLawSet& pl, double f_lo, double f_hi) {
    check_band(f_lo, f_hi);
    double p = 0.0;
    p += 2.0 * pl.h_m2 * (1.0 / f_lo - 1.0 / f_hi);
    p += 2.0 * pl.h_m1 * std::log(f_hi / f_lo);
    p += 2.0 * pl.h0 * (f_hi - f_lo);
    p += pl.h1 * (f_hi * f_hi - f_lo * f_lo);
    p += 2.0 / 3.0 * pl.h2 * (f_hi * f_hi * f_hi - f_lo * f_lo * f_lo);
    return p;
}

double component_power(const NoisePsdModel& model, double f_lo, double f_hi) {
    double p = component_power(model.power_law(), f_lo, f_hi);
    for (const auto& t : model.tones()) p += component_power(t, f_lo, f_hi);
    for (const auto& l : model.lorentzians()) p += component_power(l, f_lo, f_hi);
    return p;
}

// --- serialization -----------------------------------------------------------

namespace {

double read_number(const nlohmann::json& obj, const char* key, const std::string& context) {
    const auto it = obj.find(key);
    if (it == obj.end()) {
        throw ValidationError("missing field '" + context + key + "'");
    }
    if (!it->is_number()) {
        throw ValidationError("field '" + context + key + "' must be a number");
    }
    return it->get<double>();
}

double read_optional(const nlohmann::json& obj, const char* key) {
    const auto it = obj.find(key);
    if (it == obj.end()) return 0.0;
    if (!it->is_number()) {
        throw ValidationError(std::string("field 'power_law.") + key + "' must be a number");
    }
    return it->get<double>();
}

}  // namespace

nlohmann::json to_json(const NoisePsdModel& model) {
    nlohmann::json j;
    j["label"] = model.label();
    const auto& p = model.power_law();
    j["power_law"] = {{"h_m2", p.h_m2}, {"h_m1", p.h_m1}, {"h0", p.h0}, {"h1", p.h1}, {"h2", p.h2}};
    j["tones"] = nlohmann::json::array();
    for (const auto& t : model.tones()) j["tones"].push_back({{"f", t.f_peak}, {"A", t.amplitude}});
    j["lorentzians"] = nlohmann::json::array();
    for (const auto& l : model.lorentzians()) {
        j["lorentzians"].push_back({{"f0", l.f_center}, {"A", l.amplitude}, {"gamma", l.gamma}});
    }
    return j;
}

NoisePsdModel model_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ValidationError("model config must be a JSON object");
    if (!j.contains("power_law")) throw ValidationError("missing field 'power_law'");
    const auto& pj = j.at("power_law");
    if (!pj.is_object()) throw ValidationError("field 'power_law' must be an object");

    PowerLawSet pl{read_optional(pj, "h_m2"), read_optional(pj, "h_m1"), read_optional(pj, "h0"),
                   read_optional(pj, "h1"), read_optional(pj, "h2")};

    std::vector<DiracTone> tones;
    if (auto it = j.find("tones"); it != j.end()) {
        if (!it->is_array()) throw ValidationError("field 'tones' must be an array");
        for (const auto& t : *it) {
            tones.push_back({read_number(t, "f", "tones."), read_number(t, "A", "tones.")});
        }
    }
    std::vector<LorentzianLine> lines;
    if (auto it = j.find("lorentzians"); it != j.end()) {
        if (!it->is_array()) throw ValidationError("field 'lorentzians' must be an array");
        for (const auto& l : *it) {
            lines.push_back({read_number(l, "f0", "lorentzians."), read_number(l, "A", "lorentzians."),
                             read_number(l, "gamma", "lorentzians.")});
        }
    }
    std::string label;
    if (auto it = j.find("label"); it != j.end()) {
        if (!it->is_string()) throw ValidationError("field 'label' must be a string");
        label = it->get<std::string>();
    }
    return NoisePsdModel(std::move(label), pl, std::move(tones), std::move(lines));
}

NoisePsdModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open model file " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError("malformed model file " + path.string() + ": " + e.what());
    }
    return model_from_json(j);
}

void save_model(const NoisePsdModel& model, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write model file " + path.string());
    out << to_json(model).dump(2) << '\n';
}

NoisePsdModel reference_electronic_model() {
    return NoisePsdModel("electronic", PowerLawSet{2e-5, 3e-10, 7e-16, 6e-24, 4e-32}, {DiracTone{1e7, 5e-7}});
}

NoisePsdModel reference_receiver_model() {
    return NoisePsdModel("receiver", PowerLawSet{2.005e-5, 3.0e-9, 3e-14, 6e-24, 4e-32}, {DiracTone{1e7, 5e-7}},
                         {LorentzianLine{4e5, 5e-12, 1e5}});
}

}  // namespace noisecal
