#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace noisecal {

/// Optical switch states during acquisition (LO, signal path).
struct SwitchState {
    bool lo = false;
    bool signal = false;
    friend bool operator==(const SwitchState&, const SwitchState&) = default;
};

/// Finite sampled detector record in volts.
struct Trace {
    std::vector<double> samples;
    double fs = 0.0;
    SwitchState switches;
    std::uint64_t seed = 0;
    std::string label;
    /// Set when the model has 1/f or 1/f^2 power below the lowest realizable bin.
    bool low_frequency_truncated = false;

    [[nodiscard]] std::size_t size() const { return samples.size(); }
    [[nodiscard]] double duration() const { return static_cast<double>(samples.size()) / fs; }
    void validate() const;
};

/// Binary trace file: "NCTRACE1", u32 LE header length, JSON header, n f64 LE samples.
void save_trace(const Trace& trace, const std::filesystem::path& path);
[[nodiscard]] Trace load_trace(const std::filesystem::path& path);

/// One sample per line; the sampling rate is not stored in the file.
[[nodiscard]] Trace load_trace_csv(const std::filesystem::path& path, double fs);

}  // namespace noisecal
