#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "noisecal/psd_model.hpp"
#include "noisecal/trace.hpp"

namespace noisecal {

/// Averaged-periodogram estimate on bins k * fs / segment, k = 0..segment/2.
/// Densities follow the two-sided convention of NoisePsdModel.
struct PsdEstimate {
    std::vector<double> frequencies;
    std::vector<double> densities;
    double fs = 0.0;
    double trace_duration = 0.0;
    std::size_t segments = 0;
    std::size_t segment_length = 0;
    double overlap = 0.0;
};

struct WindowedVariance {
    double mean = 0.0;
    double standard_error = 0.0;  // NaN when only one window fits
    std::size_t windows = 0;
    std::size_t window_samples = 0;
};

/// Gaussian trace with the model's PSD. The continuous part is shaped in the
/// frequency domain (DC bin zero); tones are cosines of variance 2 * A with a
/// seed-derived phase.
[[nodiscard]] Trace synthesize(const NoisePsdModel& model, double fs, std::size_t n, std::uint64_t seed,
                               SwitchState switches = {});

/// Periodic Hann window used by welch_psd.
[[nodiscard]] std::vector<double> hann_window(std::size_t n);

/// Equivalent chi-square degrees of freedom of a Welch bin estimate, counting
/// the correlation between overlapping windowed segments.
[[nodiscard]] double welch_degrees_of_freedom(const PsdEstimate& estimate);

[[nodiscard]] PsdEstimate welch_psd(const Trace& trace, std::size_t segment, double overlap = 0.5);

/// Blackman-windowed sinc low-pass at the new Nyquist fs/(2k), 32k+1 taps,
/// mirror-extended edges, then every k-th sample.
[[nodiscard]] Trace decimate(const Trace& trace, std::size_t k);
[[nodiscard]] std::vector<double> decimation_filter(std::size_t k);

/// Mean (and standard error) of per-window variances over disjoint windows of
/// round(tau * fs) samples, each window's own mean removed.
[[nodiscard]] WindowedVariance windowed_variance(const Trace& trace, double tau);

}  // namespace noisecal
