#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "noisecal/signal_synth.hpp"
#include "noisecal/trace.hpp"

namespace noisecal {

enum class WhiteMethod { psd_floor, arma, wiener };

[[nodiscard]] std::string to_string(WhiteMethod method);
[[nodiscard]] WhiteMethod white_method_from_string(const std::string& name);

struct WhiteEstimate {
    double floor_density = 0.0;   // V^2/Hz, two-sided
    double white_variance = 0.0;  // floor_density * fs
    WhiteMethod method = WhiteMethod::psd_floor;
    std::map<std::string, double> diagnostics;
};

/// Minimum of the moving-median-smoothed spectrum above the guard frequency
/// 10 / T_trace, divided by the median of the bin distribution (chi-square with
/// the Welch degrees of freedom) so that a flat spectrum maps to its level.
[[nodiscard]] WhiteEstimate white_floor_psd(const PsdEstimate& spectrum, std::size_t smooth_bins);

struct FloorOptions {
    std::size_t segment = 1024;
    std::size_t smooth_bins = 64;
};

/// Welch estimate followed by white_floor_psd.
[[nodiscard]] WhiteEstimate white_floor(const Trace& trace, const FloorOptions& options = {});

struct ArmaFit {
    Trace residuals;
    WhiteEstimate estimate;
    std::vector<double> ar;  // x_t = sum ar_i x_{t-i} + e_t + sum ma_j e_{t-j}
    std::vector<double> ma;
};

/// Conditional least squares ARMA(p, q) fit of the mean-removed trace
/// (Hannan-Rissanen start, Gauss-Newton refinement). white_variance is the
/// residual variance; diagnostics carry the coefficients and a Ljung-Box
/// portmanteau statistic on the residuals.
[[nodiscard]] ArmaFit arma_whiten(const Trace& trace, std::size_t p = 2, std::size_t q = 2);

struct WienerOptions {
    std::size_t segment = 1024;
};

/// Applies H(f) = P_white / P_signal(f) (capped at 1) to the trace spectrum.
/// P_signal is the Welch estimate plus floor/100.
[[nodiscard]] Trace wiener_extract(const Trace& trace, const WhiteEstimate& floor, const WienerOptions& options = {});

/// White estimate obtained from the variance of the Wiener-filtered trace.
[[nodiscard]] WhiteEstimate white_wiener(const Trace& trace, const FloorOptions& options = {});

}  // namespace noisecal
