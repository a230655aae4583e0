#include "noisecal/signal_synth.hpp"

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <random>

#include "fft.hpp"
#include "noisecal/errors.hpp"

namespace noisecal {

namespace {
constexpr double kPi = std::numbers::pi;
}

Trace synthesize(const NoisePsdModel& model, double fs, std::size_t n, std::uint64_t seed, SwitchState switches) {
    if (n < 2) throw ValidationError("trace length n must be at least 2");
    if (!(fs > 0.0) || !std::isfinite(fs)) throw ValidationError("sampling rate fs must be positive");

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> phase_dist(0.0, 2.0 * kPi);
    std::normal_distribution<double> gauss(0.0, 1.0);

    std::vector<double> phases;
    for (std::size_t i = 0; i < model.tones().size(); ++i) phases.push_back(phase_dist(rng));

    Trace trace;
    trace.fs = fs;
    trace.seed = seed;
    trace.label = model.label();
    trace.switches = switches;
    const auto& pl = model.power_law();
    trace.low_frequency_truncated = pl.h_m2 > 0.0 || pl.h_m1 > 0.0;

    const bool has_continuous = !pl.is_zero() || !model.lorentzians().empty();
    if (has_continuous) {
        const double df = fs / static_cast<double>(n);
        const std::size_t half = n / 2;
        std::vector<std::complex<double>> spectrum(half + 1);
        for (std::size_t k = 1; k <= half; ++k) {
            const double density = model.density(static_cast<double>(k) * df);
            const double a = gauss(rng);
            const double b = gauss(rng);
            if (n % 2 == 0 && k == half) {
                // Real Nyquist bin carries a single (one-sided) share.
                spectrum[k] = {std::sqrt(density * df) * a, 0.0};
            } else {
                // 2 Re(Y e^{i theta}) contributes variance 2 * S * df per bin pair.
                const double c = std::sqrt(2.0 * density * df);
                spectrum[k] = {0.5 * c * a, 0.5 * c * b};
            }
        }
        trace.samples = detail::irfft(spectrum, n);
    } else {
        trace.samples.assign(n, 0.0);
    }

    for (std::size_t i = 0; i < model.tones().size(); ++i) {
        const auto& tone = model.tones()[i];
        const double amp = 2.0 * std::sqrt(tone.amplitude);
        const double w = 2.0 * kPi * tone.f_peak / fs;
        for (std::size_t j = 0; j < n; ++j) {
            trace.samples[j] += amp * std::cos(w * static_cast<double>(j) + phases[i]);
        }
    }
    return trace;
}

std::vector<double> hann_window(std::size_t n) {
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) {
        w[i] = 0.5 * (1.0 - std::cos(2.0 * kPi * static_cast<double>(i) / static_cast<double>(n)));
    }
    return w;
}

double welch_degrees_of_freedom(const PsdEstimate& estimate) {
    const std::size_t k = estimate.segments;
    const std::size_t segment = estimate.segment_length;
    if (k == 0 || segment == 0) throw ValidationError("PSD estimate carries no segment bookkeeping");
    const auto w = hann_window(segment);
    const auto step = std::max<std::size_t>(
        1, segment - static_cast<std::size_t>(std::llround(estimate.overlap * static_cast<double>(segment))));
    double norm = 0.0;
    for (double v : w) norm += v * v;
    // Var ratio of the averaged estimate: (1/K) [1 + 2 sum_j (1 - j/K) c_j^2].
    double sum = 1.0;
    for (std::size_t j = 1; j < k && j * step < segment; ++j) {
        double c = 0.0;
        for (std::size_t i = 0; i + j * step < segment; ++i) c += w[i] * w[i + j * step];
        c /= norm;
        sum += 2.0 * (1.0 - static_cast<double>(j) / static_cast<double>(k)) * c * c;
    }
    return 2.0 * static_cast<double>(k) / sum;
}

PsdEstimate welch_psd(const Trace& trace, std::size_t segment, double overlap) {
    trace.validate();
    if (segment < 16) throw ValidationError("Welch segment must hold at least 16 samples");
    if (segment > trace.size()) throw ValidationError("Welch segment longer than the trace");
    if (!(overlap >= 0.0 && overlap < 1.0)) throw ValidationError("Welch overlap must lie in [0, 1)");

    const auto step = std::max<std::size_t>(1, segment - static_cast<std::size_t>(std::llround(overlap * segment)));
    const auto window = hann_window(segment);
    double window_power = 0.0;
    for (double w : window) window_power += w * w;

    PsdEstimate est;
    est.fs = trace.fs;
    est.trace_duration = trace.duration();
    est.segment_length = segment;
    est.overlap = overlap;
    const std::size_t bins = segment / 2 + 1;
    est.densities.assign(bins, 0.0);
    std::vector<double> buf(segment);
    for (std::size_t start = 0; start + segment <= trace.size(); start += step) {
        double mean = 0.0;
        for (std::size_t i = 0; i < segment; ++i) mean += trace.samples[start + i];
        mean /= static_cast<double>(segment);
        for (std::size_t i = 0; i < segment; ++i) buf[i] = (trace.samples[start + i] - mean) * window[i];
        const auto spec = detail::rfft(buf);
        for (std::size_t k = 0; k < bins; ++k) est.densities[k] += std::norm(spec[k]);
        ++est.segments;
    }
    const double scale = 1.0 / (trace.fs * window_power * static_cast<double>(est.segments));
    for (auto& d : est.densities) d *= scale;
    est.frequencies.resize(bins);
    for (std::size_t k = 0; k < bins; ++k) {
        est.frequencies[k] = static_cast<double>(k) * trace.fs / static_cast<double>(segment);
    }
    return est;
}

std::vector<double> decimation_filter(std::size_t k) {
    if (k < 1) throw ValidationError("decimation factor must be at least 1");
    const std::size_t taps = 32 * k + 1;
    const double centre = static_cast<double>(taps - 1) / 2.0;
    const double cutoff = 0.5 / static_cast<double>(k);  // cycles per input sample
    std::vector<double> h(taps);
    double sum = 0.0;
    for (std::size_t i = 0; i < taps; ++i) {
        const double m = static_cast<double>(i) - centre;
        const double sinc = m == 0.0 ? 2.0 * cutoff : std::sin(2.0 * kPi * cutoff * m) / (kPi * m);
        const double u = static_cast<double>(i) / static_cast<double>(taps - 1);
        const double blackman = 0.42 - 0.5 * std::cos(2.0 * kPi * u) + 0.08 * std::cos(4.0 * kPi * u);
        h[i] = sinc * blackman;
        sum += h[i];
    }
    for (auto& v : h) v /= sum;
    return h;
}

Trace decimate(const Trace& trace, std::size_t k) {
    trace.validate();
    if (k < 1) throw ValidationError("decimation factor must be at least 1");
    if (k == 1) return trace;
    if (k > trace.size() / 8) {
        throw ValidationError("decimation factor " + std::to_string(k) + " too large for " +
                              std::to_string(trace.size()) + " samples (max n/8)");
    }
    const auto h = decimation_filter(k);
    const auto half = static_cast<std::ptrdiff_t>(h.size() / 2);
    const auto n = static_cast<std::ptrdiff_t>(trace.size());
    auto reflect = [n](std::ptrdiff_t i) {
        const std::ptrdiff_t period = 2 * (n - 1);
        i %= period;
        if (i < 0) i += period;
        return i < n ? i : period - i;
    };

    Trace out = trace;
    out.fs = trace.fs / static_cast<double>(k);
    out.samples.clear();
    out.samples.reserve(trace.size() / k + 1);
    for (std::ptrdiff_t centre = 0; centre < n; centre += static_cast<std::ptrdiff_t>(k)) {
        double acc = 0.0;
        const std::ptrdiff_t lo = centre - half;
        if (lo >= 0 && centre + half < n) {
            const double* x = trace.samples.data() + lo;
            for (std::size_t i = 0; i < h.size(); ++i) acc += h[i] * x[i];
        } else {
            for (std::size_t i = 0; i < h.size(); ++i) {
                acc += h[i] * trace.samples[static_cast<std::size_t>(reflect(lo + static_cast<std::ptrdiff_t>(i)))];
            }
        }
        out.samples.push_back(acc);
    }
    return out;
}

WindowedVariance windowed_variance(const Trace& trace, double tau) {
    trace.validate();
    const double exact = tau * trace.fs;
    if (!(exact >= 2.0 - 1e-9)) throw ValidationError("window must hold at least 2 samples (tau * fs >= 2)");
    const auto w = static_cast<std::size_t>(std::llround(exact));
    const std::size_t windows = trace.size() / w;
    if (windows == 0) throw ValidationError("no full window of duration tau fits in the trace");

    std::vector<double> per_window(windows);
    for (std::size_t m = 0; m < windows; ++m) {
        const double* x = trace.samples.data() + m * w;
        double mean = 0.0;
        for (std::size_t i = 0; i < w; ++i) mean += x[i];
        mean /= static_cast<double>(w);
        double ss = 0.0;
        for (std::size_t i = 0; i < w; ++i) ss += (x[i] - mean) * (x[i] - mean);
        per_window[m] = ss / static_cast<double>(w);
    }
    WindowedVariance out;
    out.windows = windows;
    out.window_samples = w;
    for (double v : per_window) out.mean += v;
    out.mean /= static_cast<double>(windows);
    if (windows < 2) {
        out.standard_error = std::numeric_limits<double>::quiet_NaN();
    } else {
        double ss = 0.0;
        for (double v : per_window) ss += (v - out.mean) * (v - out.mean);
        out.standard_error = std::sqrt(ss / static_cast<double>(windows - 1) / static_cast<double>(windows));
    }
    return out;
}

}  // namespace noisecal
