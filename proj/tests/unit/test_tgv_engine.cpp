#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <gsl/gsl_sf_expint.h>

#include "../support/quadrature.hpp"

#include "noisecal/errors.hpp"
#include "noisecal/tgv_engine.hpp"

using namespace noisecal;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kFs = 625e6;

// Direct quadrature of the gated autocorrelation transforms, written from the
// time-domain definitions.
double oracle_gated_power_law(const PowerLawSet& pl, double f, double tau) {
    const double half = tau / 2.0;
    const double ramp = oracle::integrate([&](double t) { return t * std::cos(2 * kPi * f * t); }, 0.0, half, 1e-13);
    const double step = oracle::integrate([&](double t) { return std::sin(2 * kPi * f * t); }, 0.0, half, 1e-13);
    return -4 * kPi * kPi * pl.h_m2 * ramp + 2 * kPi * pl.h_m1 * step + pl.h0 + pl.h1 * f + pl.h2 * f * f;
}

// Gated-band window for a unit line at f': integral over [f1, f2] of the sinc kernel.
double band_window(double fp, double f1, double f2, double tau) {
    return (gsl_sf_Si(kPi * tau * (f2 - fp)) - gsl_sf_Si(kPi * tau * (f1 - fp))) / kPi;
}

// Gated band power of an even density through the band window, summed over
// +/- f'. Independent of the autocorrelation pipeline.
double oracle_gated_band_power(const std::function<double(double)>& density, double tau, double fs,
                               const std::vector<double>& breaks) {
    const double f1 = 1.0 / tau;
    const double f2 = fs / 2.0;
    auto integrand = [&](double fp) {
        return density(fp) * (band_window(fp, f1, f2, tau) + band_window(-fp, f1, f2, tau));
    };
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        total += oracle::integrate(integrand, breaks[i], breaks[i + 1], 1e-9);
    }
    return 2.0 * total;
}

}  // namespace

TEST_CASE("closed forms at f = 1/tau") {
    const double tau = 1e-3;
    CHECK(gated_psd_analytic(PowerLawSet{3e-5, 0, 0, 0, 0}, 1 / tau, tau) ==
          doctest::Approx(2 * 3e-5 * tau * tau).epsilon(1e-12));
    CHECK(gated_psd_analytic(PowerLawSet{0, 4e-9, 0, 0, 0}, 1 / tau, tau) ==
          doctest::Approx(2 * 4e-9 * tau).epsilon(1e-12));
}

TEST_CASE("gating leaves alpha = 0, 1, 2 unchanged") {
    const PowerLawSet pl{0, 0, 7e-16, 6e-24, 4e-32};
    const NoisePsdModel m("flat", pl);
    for (double tau : {1e-6, 1e-3, 1.0}) {
        for (double f : {1e3, 1e6, 3e8}) {
            CHECK(gated_psd_analytic(pl, f, tau) == doctest::Approx(eval_psd(m, f)).epsilon(1e-14));
        }
    }
    CHECK_THROWS_AS((void)gated_psd_analytic(pl, 0.0, 1.0), ValidationError);
}

TEST_CASE("closed forms agree with direct quadrature of the gated autocorrelation") {
    const PowerLawSet pl{2e-5, 3e-9, 0, 0, 0};
    for (double tau : {1e-5, 1e-3}) {
        for (double cycles : {0.01, 0.5, 1.0, 3.3, 17.0}) {
            const double f = cycles / tau;
            const double oracle = oracle_gated_power_law(pl, f, tau);
            const double scale = pl.h_m2 * tau * tau + pl.h_m1 * tau;
            CHECK(std::abs(gated_psd_analytic(pl, f, tau) - oracle) <= 1e-9 * scale);
        }
    }
}

TEST_CASE("numeric pipeline matches closed forms on random power-law models") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> logu(-2.0, 2.0);
    for (int trial = 0; trial < 10; ++trial) {
        const PowerLawSet pl{2e-5 * std::pow(10, logu(rng)), 3e-9 * std::pow(10, logu(rng)),
                             3e-14 * std::pow(10, logu(rng)), 6e-24 * std::pow(10, logu(rng)),
                             4e-32 * std::pow(10, logu(rng))};
        const NoisePsdModel m("pl", pl);
        for (double tau : {1e-6, 1e-4, 1e-2}) {
            const auto spec = gated_psd_numeric(m, GateConfig{tau, kFs, 256});
            for (std::size_t i = 0; i < spec.frequencies.size(); ++i) {
                const double f = spec.frequencies[i];
                const double exact = gated_psd_analytic(pl, f, tau);
                const double envelope = pl.h_m2 * (kPi * tau / f + 2.0 / (f * f)) + 2.0 * pl.h_m1 / f +
                                        pl.h0 + pl.h1 * f + pl.h2 * f * f;
                CHECK(std::abs(spec.densities[i] - exact) <= 1e-5 * std::max(std::abs(exact), 1e-3 * envelope));
            }
        }
    }
}

TEST_CASE("power-law TGV closed form agrees with band quadrature of the gated density") {
    const PowerLawSet pl{2e-5, 3e-9, 3e-14, 6e-24, 4e-32};
    const double fs = 2e6;
    for (double tau : {2e-5, 1e-4, 1e-3}) {
        const double f1 = 1.0 / tau;
        const double f2 = fs / 2.0;
        double quad = 0.0;
        const double piece = 1.0 / tau;
        for (double a = f1; a < f2; a += piece) {
            quad += oracle::integrate([&](double f) { return gated_psd_analytic(pl, f, tau); }, a,
                                      std::min(a + piece, f2), 1e-12);
        }
        CHECK(tgv_power_law(pl, GateConfig{tau, fs}) == doctest::Approx(2.0 * quad).epsilon(1e-9));
    }
}

TEST_CASE("white TGV is exact") {
    for (double h0 : {7e-16, 3e-14}) {
        const NoisePsdModel m("w", PowerLawSet{0, 0, h0, 0, 0});
        for (double tau : {1e-8, 1e-6, 1e-3, 1.0, 10.0}) {
            const double expected = 2.0 * h0 * (kFs / 2.0 - 1.0 / tau);
            CHECK(tgv(m, GateConfig{tau, kFs}) == doctest::Approx(expected).epsilon(1e-12));
        }
    }
}

TEST_CASE("white TGV is strictly increasing in tau") {
    const NoisePsdModel m("w", PowerLawSet{0, 0, 3e-14, 0, 0});
    double prev = -1.0;
    for (double e = -8.0; e <= 1.0; e += 0.25) {
        const double v = tgv(m, GateConfig{std::pow(10.0, e), kFs});
        CHECK(v > prev);
        prev = v;
    }
}

TEST_CASE("gated tone power") {
    const DiracTone tone{1e7, 5e-7};
    SUBCASE("long gate recovers twice the weight") {
        for (double tau : {1e-5, 1e-3, 1.0}) {
            CHECK(tgv_tone(tone, GateConfig{tau, kFs}) == doctest::Approx(2 * tone.amplitude).epsilon(0.01));
        }
    }
    SUBCASE("closed form agrees with quadrature of the sinc-broadened line") {
        const double fs = 1e8;
        for (double tau : {5e-8, 2e-7, 1e-6}) {
            const double f1 = 1.0 / tau;
            double quad = 0.0;
            for (double a = f1; a < fs / 2; a += 1.0 / tau) {
                quad += oracle::integrate([&](double f) { return gated_tone_density(tone, f, tau); }, a,
                                          std::min(a + 1.0 / tau, fs / 2), 1e-12);
            }
            CHECK(tgv_tone(tone, GateConfig{tau, fs}) == doctest::Approx(2.0 * quad).epsilon(1e-8));
        }
    }
}

TEST_CASE("Lorentzian gating agrees with the band-window oracle") {
    const LorentzianLine line{4e5, 5e-12, 1e5};
    const auto density = [&](double f) { return line.density(f); };
    const LorentzianGating gating(line, kFs);
    for (double tau : {2.5e-7, 2.5e-6, 2.5e-5, 1e-3}) {
        const std::vector<double> breaks = {0.0, 1e5, 3e5, 4e5, 5e5, 7e5, 2e6, 2e7, 3.1e8, 3.2e8, 2e9};
        const double oracle = oracle_gated_band_power(density, tau, kFs, breaks);
        CHECK(gating.band_power(tau) == doctest::Approx(oracle).epsilon(5e-3));
    }
}

TEST_CASE("RIN step across 1/f_RIN equals the line's band power") {
    const auto rec = reference_receiver_model();
    const auto& line = rec.lorentzians().at(0);
    const auto curve = tgv_curve(rec, {0.1 / line.f_center, 10.0 / line.f_center}, kFs, true);
    const auto& lor = curve.components.at(2);
    const double step = lor[1] - lor[0];
    const double band = component_power(line, line.f_center / 10.0, kFs / 2);
    CHECK(step == doctest::Approx(band).epsilon(0.15));
}

TEST_CASE("tgv_curve breakdown and bookkeeping") {
    const auto rec = reference_receiver_model();
    std::vector<double> taus;
    for (double e = -6.0; e <= 1.0; e += 0.5) taus.push_back(std::pow(10.0, e));
    const auto curve = tgv_curve(rec, taus, kFs, true, 2);
    REQUIRE(curve.component_names == std::vector<std::string>{"power_law", "tone_0", "lorentzian_0"});
    for (std::size_t k = 0; k < taus.size(); ++k) {
        double sum = 0.0;
        for (const auto& c : curve.components) sum += c[k];
        CHECK(sum == doctest::Approx(curve.variances[k]).epsilon(1e-12));
        CHECK(curve.variances[k] == doctest::Approx(tgv(rec, GateConfig{taus[k], kFs})).epsilon(1e-12));
    }
    for (std::size_t k = 1; k < taus.size(); ++k) CHECK(curve.variances[k] >= curve.variances[k - 1]);

    const auto single = tgv_curve(rec, {1e-3}, kFs);
    REQUIRE(single.variances.size() == 1);
    CHECK(single.variances[0] == tgv(rec, GateConfig{1e-3, kFs}));
    CHECK(single.components.empty());

    const auto elec = reference_electronic_model();
    CHECK(tgv(rec, GateConfig{1e-3, kFs}) > tgv(elec, GateConfig{1e-3, kFs}));

    CHECK_THROWS_AS((void)tgv_curve(rec, {1e-3, 1e-4}, kFs), ValidationError);
    try {
        (void)tgv_curve(rec, {1e-3, 1e-12}, kFs);
        FAIL("expected error");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("1e-12") != std::string::npos);
    }
}

TEST_CASE("linearity of tgv") {
    const auto a = reference_receiver_model();
    const auto b = reference_electronic_model();
    for (double tau : {1e-6, 1e-4, 1e-2, 1.0}) {
        const GateConfig g{tau, kFs};
        CHECK(tgv(a + b, g) == doctest::Approx(tgv(a, g) + tgv(b, g)).epsilon(1e-9));
    }
}

TEST_CASE("zero model yields a zero spectrum") {
    const NoisePsdModel zero("zero", PowerLawSet{});
    const auto spec = gated_psd_numeric(zero, GateConfig{1e-4, kFs, 64});
    for (double s : spec.densities) CHECK(s == 0.0);
    CHECK(tgv(zero, GateConfig{1e-4, kFs}) == 0.0);
}

TEST_CASE("gated spectrum grid resolves Lorentzians and rejects unresolvable lines") {
    const auto rec = reference_receiver_model();
    const auto spec = gated_psd_numeric(rec, GateConfig{1e-3, kFs, 128});
    for (std::size_t i = 1; i < spec.frequencies.size(); ++i) {
        CHECK(spec.frequencies[i] > spec.frequencies[i - 1]);
        const double f = spec.frequencies[i];
        if (std::abs(f - 4e5) < 1e5) CHECK(f - spec.frequencies[i - 1] <= 1e5 / 10.0);
    }
    const NoisePsdModel narrow("n", PowerLawSet{}, {}, {LorentzianLine{1e5, 1e-12, 0.01}});
    CHECK_THROWS_AS((void)tgv(narrow, GateConfig{1e-3, kFs}), ResolutionError);
}

TEST_CASE("gate validation") {
    CHECK_THROWS_AS(GateConfig({1e-9, kFs}).validate(), ValidationError);
    CHECK_THROWS_AS(GateConfig({-1.0, kFs}).validate(), ValidationError);
    CHECK_NOTHROW(GateConfig({1e-6, kFs}).validate());
}

TEST_CASE("CSV export header") {
    const auto curve = tgv_curve(reference_receiver_model(), {1e-4, 1e-3}, kFs, true);
    std::ostringstream out;
    write_tgv_csv(curve, out);
    const auto text = out.str();
    CHECK(text.rfind("tau_s,variance_V2,power_law,tone_0,lorentzian_0\n", 0) == 0);
}
