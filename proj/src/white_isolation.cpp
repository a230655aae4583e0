#include "noisecal/white_isolation.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <sstream>

#include <Eigen/Dense>
#include <gsl/gsl_cdf.h>

#include "fft.hpp"
#include "noisecal/errors.hpp"

namespace noisecal {

namespace {

constexpr double kGuardCycles = 10.0;
constexpr double kWienerEpsilonFraction = 0.01;

double population_variance(const std::vector<double>& x) {
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
    double ss = 0.0;
    for (double v : x) ss += (v - mean) * (v - mean);
    return ss / static_cast<double>(x.size());
}

// Moduli of the roots of z^m + c_1 z^{m-1} + ... + c_m.
std::vector<double> root_moduli(const std::vector<double>& c) {
    const auto m = static_cast<Eigen::Index>(c.size());
    if (m == 0) return {};
    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(m, m);
    for (Eigen::Index j = 0; j < m; ++j) companion(0, j) = -c[static_cast<std::size_t>(j)];
    for (Eigen::Index i = 1; i < m; ++i) companion(i, i - 1) = 1.0;
    const Eigen::VectorXcd roots = companion.eigenvalues();
    std::vector<double> moduli;
    for (Eigen::Index i = 0; i < m; ++i) moduli.push_back(std::abs(roots(i)));
    return moduli;
}

struct CssState {
    double sse = 0.0;
    std::size_t count = 0;
};

// Conditional residuals e_t, t >= start, with e_t = 0 before start.
// Optionally accumulates J^T J and J^T e, J = de/dparams.
CssState css(const std::vector<double>& x, std::size_t p, std::size_t q, const Eigen::VectorXd& params,
             std::vector<double>* residuals, Eigen::MatrixXd* jtj, Eigen::VectorXd* jte) {
    const std::size_t k = p + q;
    const std::size_t start = p;
    const std::size_t n = x.size();
    std::vector<double> e(n, 0.0);
    // Ring of the last q derivative vectors.
    std::vector<Eigen::VectorXd> deriv(std::max<std::size_t>(q, 1), Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k)));
    Eigen::VectorXd d(static_cast<Eigen::Index>(k));
    CssState state;
    if (jtj) {
        jtj->setZero(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
        jte->setZero(static_cast<Eigen::Index>(k));
    }
    for (std::size_t t = start; t < n; ++t) {
        double pred = 0.0;
        for (std::size_t i = 1; i <= p; ++i) pred += params(static_cast<Eigen::Index>(i - 1)) * x[t - i];
        for (std::size_t j = 1; j <= q; ++j) {
            if (t - j >= start) pred += params(static_cast<Eigen::Index>(p + j - 1)) * e[t - j];
        }
        e[t] = x[t] - pred;
        state.sse += e[t] * e[t];
        ++state.count;
        if (jtj) {
            for (std::size_t i = 1; i <= p; ++i) d(static_cast<Eigen::Index>(i - 1)) = -x[t - i];
            for (std::size_t j = 1; j <= q; ++j) {
                d(static_cast<Eigen::Index>(p + j - 1)) = t - j >= start ? -e[t - j] : 0.0;
            }
            for (std::size_t j = 1; j <= q; ++j) {
                if (t - j >= start) d -= params(static_cast<Eigen::Index>(p + j - 1)) * deriv[(t - j) % q];
            }
            if (q > 0) deriv[t % q] = d;
            jtj->noalias() += d * d.transpose();
            *jte += d * e[t];
        }
    }
    if (residuals) residuals->assign(e.begin() + static_cast<std::ptrdiff_t>(start), e.end());
    return state;
}

// Least squares of y_t on regressor columns, accumulated as normal equations.
template <typename Row>
Eigen::VectorXd least_squares(std::size_t first, std::size_t last, std::size_t k, Row&& row,
                              const std::vector<double>& y) {
    Eigen::MatrixXd ata = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
    Eigen::VectorXd aty = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k));
    Eigen::VectorXd r(static_cast<Eigen::Index>(k));
    for (std::size_t t = first; t < last; ++t) {
        row(t, r);
        ata.noalias() += r * r.transpose();
        aty += r * y[t];
    }
    return ata.ldlt().solve(aty);
}

Eigen::VectorXd hannan_rissanen(const std::vector<double>& x, std::size_t p, std::size_t q) {
    const std::size_t n = x.size();
    if (q == 0) {
        return least_squares(
            p, n, p, [&](std::size_t t, Eigen::VectorXd& r) {
                for (std::size_t i = 1; i <= p; ++i) r(static_cast<Eigen::Index>(i - 1)) = x[t - i];
            },
            x);
    }
    const std::size_t m = std::max<std::size_t>(20, 2 * (p + q));
    const auto long_ar = least_squares(
        m, n, m, [&](std::size_t t, Eigen::VectorXd& r) {
            for (std::size_t i = 1; i <= m; ++i) r(static_cast<Eigen::Index>(i - 1)) = x[t - i];
        },
        x);
    std::vector<double> innov(n, 0.0);
    for (std::size_t t = m; t < n; ++t) {
        double pred = 0.0;
        for (std::size_t i = 1; i <= m; ++i) pred += long_ar(static_cast<Eigen::Index>(i - 1)) * x[t - i];
        innov[t] = x[t] - pred;
    }
    return least_squares(
        m + q, n, p + q,
        [&](std::size_t t, Eigen::VectorXd& r) {
            for (std::size_t i = 1; i <= p; ++i) r(static_cast<Eigen::Index>(i - 1)) = x[t - i];
            for (std::size_t j = 1; j <= q; ++j) r(static_cast<Eigen::Index>(p + j - 1)) = innov[t - j];
        },
        x);
}

std::string describe_roots(const char* which, const std::vector<double>& moduli) {
    std::ostringstream os;
    os << which << " polynomial has roots of modulus";
    for (double m : moduli) os << ' ' << m;
    os << " (reciprocal roots must lie inside the unit circle)";
    return os.str();
}

double interpolate_density(const PsdEstimate& est, double f) {
    const double bin = est.frequencies.size() > 1 ? est.frequencies[1] : est.fs;
    const double pos = f / bin;
    const auto last = est.densities.size() - 1;
    if (pos >= static_cast<double>(last)) return est.densities[last];
    const auto i = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(i);
    return est.densities[i] + frac * (est.densities[i + 1] - est.densities[i]);
}

}  // namespace

std::string to_string(WhiteMethod method) {
    switch (method) {
        case WhiteMethod::psd_floor:
            return "floor";
        case WhiteMethod::arma:
            return "arma";
        case WhiteMethod::wiener:
            return "wiener";
    }
    return "floor";
}

WhiteMethod white_method_from_string(const std::string& name) {
    if (name == "floor" || name == "psd_floor") return WhiteMethod::psd_floor;
    if (name == "arma") return WhiteMethod::arma;
    if (name == "wiener") return WhiteMethod::wiener;
    throw ValidationError("unknown white-isolation method '" + name + "' (expected floor, arma or wiener)");
}

WhiteEstimate white_floor_psd(const PsdEstimate& spectrum, std::size_t smooth_bins) {
    if (smooth_bins < 1) throw ValidationError("smooth_bins must be at least 1");
    const std::size_t bins = spectrum.densities.size();
    if (bins < 8 * smooth_bins) {
        throw ValidationError("spectrum has " + std::to_string(bins) + " bins; need at least 8 * smooth_bins = " +
                              std::to_string(8 * smooth_bins));
    }
    if (!(spectrum.trace_duration > 0.0)) throw ValidationError("spectrum must record its trace duration");
    const double guard = kGuardCycles / spectrum.trace_duration;
    if (guard >= 0.5 * spectrum.fs) {
        throw ValidationError("guard band 10/T = " + std::to_string(guard) + " Hz leaves no usable band below fs/2");
    }
    // DC and Nyquist bins follow a different distribution; skip both.
    std::size_t first = 1;
    while (first < bins && spectrum.frequencies[first] < guard) ++first;
    const std::size_t last = bins - 1;  // exclusive
    if (last < first + smooth_bins) throw ValidationError("spectrum shorter than the guard band plus one smoothing window");

    const double dof = welch_degrees_of_freedom(spectrum);
    const double median_factor = gsl_cdf_chisq_Pinv(0.5, dof) / dof;

    double floor = HUGE_VAL;
    double floor_frequency = 0.0;
    std::vector<double> window(smooth_bins);
    for (std::size_t start = first; start + smooth_bins <= last; ++start) {
        std::copy_n(spectrum.densities.begin() + static_cast<std::ptrdiff_t>(start), smooth_bins, window.begin());
        const std::size_t mid = smooth_bins / 2;
        std::nth_element(window.begin(), window.begin() + static_cast<std::ptrdiff_t>(mid), window.end());
        double med = window[mid];
        if (smooth_bins % 2 == 0) {
            med = 0.5 * (med + *std::max_element(window.begin(), window.begin() + static_cast<std::ptrdiff_t>(mid)));
        }
        if (med < floor) {
            floor = med;
            floor_frequency = spectrum.frequencies[start + smooth_bins / 2];
        }
    }

    WhiteEstimate out;
    out.method = WhiteMethod::psd_floor;
    out.floor_density = floor / median_factor;
    out.white_variance = out.floor_density * spectrum.fs;
    out.diagnostics = {{"degrees_of_freedom", dof},
                       {"median_bias_factor", median_factor},
                       {"floor_frequency_hz", floor_frequency},
                       {"guard_frequency_hz", guard},
                       {"smooth_bins", static_cast<double>(smooth_bins)}};
    return out;
}

WhiteEstimate white_floor(const Trace& trace, const FloorOptions& options) {
    return white_floor_psd(welch_psd(trace, options.segment), options.smooth_bins);
}

ArmaFit arma_whiten(const Trace& trace, std::size_t p, std::size_t q) {
    trace.validate();
    if (p + q < 1) throw ValidationError("ARMA order p + q must be at least 1");
    if (trace.size() < 50 * (p + q)) {
        throw ValidationError("ARMA(" + std::to_string(p) + "," + std::to_string(q) + ") needs at least " +
                              std::to_string(50 * (p + q)) + " samples");
    }
    const double mean =
        std::accumulate(trace.samples.begin(), trace.samples.end(), 0.0) / static_cast<double>(trace.size());
    std::vector<double> x(trace.samples);
    for (auto& v : x) v -= mean;
    if (population_variance(x) == 0.0) throw ValidationError("ARMA fit of a constant trace is undefined");

    Eigen::VectorXd params = hannan_rissanen(x, p, q);
    Eigen::MatrixXd jtj;
    Eigen::VectorXd jte;
    auto state = css(x, p, q, params, nullptr, &jtj, &jte);
    int iterations = 0;
    for (; iterations < 100; ++iterations) {
        const Eigen::VectorXd step = -jtj.ldlt().solve(jte);
        double scale = 1.0;
        bool improved = false;
        for (int halving = 0; halving < 30; ++halving, scale *= 0.5) {
            const Eigen::VectorXd trial = params + scale * step;
            const auto s = css(x, p, q, trial, nullptr, nullptr, nullptr);
            if (std::isfinite(s.sse) && s.sse <= state.sse) {
                improved = state.sse - s.sse > 1e-12 * state.sse;
                params = trial;
                break;
            }
        }
        if (!improved) break;
        state = css(x, p, q, params, nullptr, &jtj, &jte);
    }

    ArmaFit fit;
    for (std::size_t i = 0; i < p; ++i) fit.ar.push_back(params(static_cast<Eigen::Index>(i)));
    for (std::size_t j = 0; j < q; ++j) fit.ma.push_back(params(static_cast<Eigen::Index>(p + j)));

    std::vector<double> ar_poly;
    for (double a : fit.ar) ar_poly.push_back(-a);
    const auto ar_roots = root_moduli(ar_poly);
    if (std::any_of(ar_roots.begin(), ar_roots.end(), [](double m) { return m >= 1.0; })) {
        throw NumericError("explosive ARMA fit: " + describe_roots("AR", ar_roots));
    }
    const auto ma_roots = root_moduli(fit.ma);
    if (std::any_of(ma_roots.begin(), ma_roots.end(), [](double m) { return m >= 1.0; })) {
        throw NumericError("non-invertible ARMA fit: " + describe_roots("MA", ma_roots));
    }

    std::vector<double> e;
    (void)css(x, p, q, params, &e, nullptr, nullptr);
    fit.residuals = trace;
    fit.residuals.samples = e;
    fit.residuals.label = trace.label + ":arma_residual";

    double sse = 0.0;
    for (double v : e) sse += v * v;
    const double innovation = sse / static_cast<double>(e.size());

    // Ljung-Box on the residuals.
    const std::size_t m = e.size();
    const std::size_t h = std::min<std::size_t>(20, m / 4);
    double q_stat = 0.0;
    for (std::size_t lag = 1; lag <= h; ++lag) {
        double c = 0.0;
        for (std::size_t t = lag; t < m; ++t) c += e[t] * e[t - lag];
        const double rho = c / sse;
        q_stat += rho * rho / static_cast<double>(m - lag);
    }
    q_stat *= static_cast<double>(m) * static_cast<double>(m + 2);
    const double lb_dof = static_cast<double>(std::max<std::ptrdiff_t>(
        1, static_cast<std::ptrdiff_t>(h) - static_cast<std::ptrdiff_t>(p + q)));

    auto& est = fit.estimate;
    est.method = WhiteMethod::arma;
    est.white_variance = innovation;
    est.floor_density = innovation / trace.fs;
    est.diagnostics["p"] = static_cast<double>(p);
    est.diagnostics["q"] = static_cast<double>(q);
    for (std::size_t i = 0; i < p; ++i) est.diagnostics["ar_" + std::to_string(i + 1)] = fit.ar[i];
    for (std::size_t j = 0; j < q; ++j) est.diagnostics["ma_" + std::to_string(j + 1)] = fit.ma[j];
    est.diagnostics["ljung_box_q"] = q_stat;
    est.diagnostics["ljung_box_lags"] = static_cast<double>(h);
    est.diagnostics["ljung_box_p"] = gsl_cdf_chisq_Q(q_stat, lb_dof);
    est.diagnostics["iterations"] = iterations;
    return fit;
}

Trace wiener_extract(const Trace& trace, const WhiteEstimate& floor, const WienerOptions& options) {
    trace.validate();
    if (!(floor.floor_density >= 0.0)) throw ValidationError("white floor density must be non-negative");
    Trace out = trace;
    out.label = trace.label + ":wiener";
    if (floor.floor_density == 0.0) {
        std::fill(out.samples.begin(), out.samples.end(), 0.0);
        return out;
    }
    const auto est = welch_psd(trace, std::min(options.segment, trace.size()));
    const double epsilon = kWienerEpsilonFraction * floor.floor_density;
    const std::size_t n = trace.size();
    auto spec = detail::rfft(trace.samples);
    for (std::size_t k = 0; k < spec.size(); ++k) {
        const double f = static_cast<double>(k) * trace.fs / static_cast<double>(n);
        const double signal = interpolate_density(est, f) + epsilon;
        spec[k] *= std::min(1.0, floor.floor_density / signal);
    }
    out.samples = detail::irfft(spec, n);
    for (auto& v : out.samples) v /= static_cast<double>(n);
    return out;
}

WhiteEstimate white_wiener(const Trace& trace, const FloorOptions& options) {
    const auto floor = white_floor(trace, options);
    const auto filtered = wiener_extract(trace, floor, WienerOptions{options.segment});
    WhiteEstimate out;
    out.method = WhiteMethod::wiener;
    out.white_variance = population_variance(filtered.samples);
    out.floor_density = out.white_variance / trace.fs;
    out.diagnostics = {{"input_variance", population_variance(trace.samples)},
                       {"output_variance", out.white_variance},
                       {"floor_density", floor.floor_density}};
    return out;
}

}  // namespace noisecal
