#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "../support/cv_oracle.hpp"
#include "noisecal/errors.hpp"
#include "noisecal/qkd_estimation.hpp"
#include "noisecal/tgv_engine.hpp"

using namespace noisecal;

namespace {

constexpr double kFs = 625e6;

std::vector<double> log_grid(double lo, double hi, int per_decade) {
    std::vector<double> g;
    const int steps = static_cast<int>(std::lround(std::log10(hi / lo) * per_decade));
    for (int i = 0; i <= steps; ++i) g.push_back(lo * std::pow(10.0, static_cast<double>(i) / per_decade));
    return g;
}

// Receiver noise for the symbol-rate simulation: white, sigma_rec = (1 + v_el) N0.
NoisePsdModel symbol_noise(double v_el, double n0) {
    return NoisePsdModel("symbol", PowerLawSet{0, 0, (1.0 + v_el) * n0, 0, 0});
}

double key(double t, double xi, double beta = 1.0, double eta = 1.0, double v_el = 0.09) {
    return key_fraction(KeyInputs{5.0, t, xi, eta, v_el, beta}).key_fraction;
}

}  // namespace

TEST_CASE("key fraction matches the covariance-matrix oracle") {
    struct Case {
        double v_a, t, xi, eta, v_el;
    };
    for (const auto& c : {Case{5, 0.25, 0.1, 1.0, 0.0}, Case{5, 0.25, 0.1, 0.9, 0.09}, Case{5, 0.25, 0.2, 0.6, 0.09},
                          Case{5, 0.5, 0.05, 0.8, 0.1}, Case{10, 0.1, 0.02, 0.7, 0.3}, Case{3, 0.9, 0.0, 1.0, 0.0}}) {
        const auto ref = oracle::cv_qkd(c.v_a, c.t, c.xi, c.eta, c.v_el);
        const auto r = key_fraction(KeyInputs{c.v_a, c.t, c.xi, c.eta, c.v_el, 1.0});
        CHECK(r.mutual_information == doctest::Approx(ref.mutual_information).epsilon(1e-9));
        CHECK(r.holevo_bound == doctest::Approx(ref.holevo).epsilon(1e-9));
    }
}

TEST_CASE("lossless noiseless channel leaks nothing") {
    const auto r = key_fraction(KeyInputs{5.0, 1.0, 0.0, 1.0, 0.0, 1.0});
    CHECK(std::abs(r.holevo_bound) < 1e-9);
    CHECK(r.key_fraction > 0.0);
    CHECK(r.key_fraction == doctest::Approx(std::log2(1.0 + 5.0 / 2.0)).epsilon(1e-9));
}

TEST_CASE("reference scenario has a positive key") {
    const QkdScenario s;
    CHECK(s.xi_bob() == doctest::Approx(0.025));
    CHECK(key(s.t_true, s.xi_alice) > 0.0);
    CHECK(key(s.t_true, s.xi_alice, 0.0) == 0.0);
}

TEST_CASE("key fraction monotonicity around the reference point") {
    for (double t : {0.2, 0.25, 0.3}) {
        double prev = key(t, 0.0);
        for (double xi = 0.01; xi <= 0.15; xi += 0.01) {
            const double k = key(t, xi);
            CHECK(k <= prev + 1e-15);
            prev = k;
        }
    }
    for (double xi : {0.05, 0.1}) {
        double prev = 0.0;
        for (double t = 0.15; t <= 0.4; t += 0.025) {
            const double k = key(t, xi);
            CHECK(k >= prev - 1e-15);
            prev = k;
        }
        prev = 0.0;
        for (double beta = 0.9; beta <= 1.0; beta += 0.01) {
            const double k = key(0.25, xi, beta);
            CHECK(k >= prev - 1e-15);
            prev = k;
        }
    }
}

TEST_CASE("key fraction input validation") {
    CHECK_THROWS_AS((void)key_fraction(KeyInputs{5, 0.0, 0.1, 1, 0, 1}), ValidationError);
    CHECK_THROWS_AS((void)key_fraction(KeyInputs{5, 1.2, 0.1, 1, 0, 1}), ValidationError);
    CHECK_THROWS_AS((void)key_fraction(KeyInputs{5, 0.25, 0.1, 0, 0, 1}), ValidationError);
    CHECK_THROWS_AS((void)key_fraction(KeyInputs{-1, 0.25, 0.1, 1, 0, 1}), ValidationError);
    CHECK_THROWS_AS((void)key_fraction(KeyInputs{5, 0.25, 0.1, 1, -0.1, 1}), ValidationError);
    CHECK_THROWS_AS((void)key_fraction(KeyInputs{5, 0.25, 0.1, 1, 0, 1.5}), ValidationError);
    CHECK_THROWS_AS((void)key_fraction(KeyInputs{5, 0.5, -3.0, 1, 0, 1}), NumericError);
}

TEST_CASE("duty factor") {
    CHECK(duty_factor(0.0, 1.6e-3, 2) == 1.0);
    CHECK(duty_factor(4e-4, 1.6e-3, 2) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(duty_factor(8e-4, 1.6e-3, 2) == 0.0);
    CHECK(duty_factor(1.0, 1.6e-3, 2) == 0.0);
    CHECK(duty_factor(4e-4, 1.6e-3, 1) == doctest::Approx(0.75).epsilon(1e-15));
    CHECK_THROWS_AS((void)duty_factor(1e-4, 0.0, 2), ValidationError);
}

TEST_CASE("noiseless simulation") {
    QkdScenario s;
    s.xi_alice = 0.0;
    s.t_true = 0.5;
    const auto sim = simulate_measurement(s, NoisePsdModel("zero", PowerLawSet{}), 1000, 1.0, 3, 1.0);
    for (std::size_t i = 0; i < sim.x_a.size(); ++i) {
        CHECK(sim.x_b[i] == doctest::Approx(sim.x_a[i] / 2.0).epsilon(1e-12));
    }
}

TEST_CASE("simulated variances agree with the channel model") {
    const QkdScenario s;
    const std::size_t n = 200000;
    const double n0 = 2.0;
    const auto sim = simulate_measurement(s, symbol_noise(s.v_elec_snu, n0), n, 1.0, 11, n0);
    double sbb = 0.0;
    for (double x : sim.x_b) sbb += x * x;
    const double var_b = sbb / static_cast<double>(n);
    const double expected = 0.5 * s.eta * s.t_true * n0 * (s.v_a + s.xi_alice) + (1.0 + s.v_elec_snu) * n0;
    CHECK(std::abs(var_b - expected) < 3.0 * expected * std::sqrt(2.0 / static_cast<double>(n)));
    CHECK(sim.n_rec.samples.size() == n);
    CHECK_THROWS_AS((void)simulate_measurement(s, symbol_noise(0.0, 1.0), 10, 1.0, 1, 0.0), ValidationError);
}

TEST_CASE("estimation round trip with exact shot-noise units") {
    const QkdScenario s;
    const std::size_t n = 200000;
    const int runs = 20;
    double sum_t = 0.0, sum_t2 = 0.0, sum_x = 0.0, sum_x2 = 0.0;
    for (int r = 0; r < runs; ++r) {
        const auto sim = simulate_measurement(s, symbol_noise(s.v_elec_snu, 1.0), n, 1.0, 100 + r, 1.0);
        const auto est = estimate_parameters(sim, 1.0, 1.0 + s.v_elec_snu, s.eta, s.v_a);
        sum_t += est.t_hat;
        sum_t2 += est.t_hat * est.t_hat;
        sum_x += est.xi_bob_snu;
        sum_x2 += est.xi_bob_snu * est.xi_bob_snu;

        const auto inflated = estimate_parameters(sim, 1.05, 1.0 + s.v_elec_snu, s.eta, s.v_a);
        CHECK(inflated.xi_bob_snu < est.xi_bob_snu);
    }
    const double mt = sum_t / runs;
    const double mx = sum_x / runs;
    const double se_t = std::sqrt((sum_t2 / runs - mt * mt) / (runs - 1));
    const double se_x = std::sqrt((sum_x2 / runs - mx * mx) / (runs - 1));
    CHECK(std::abs(mt - s.t_true) < 3.0 * se_t);
    CHECK(std::abs(mx - s.xi_bob()) < 3.0 * se_x);
}

TEST_CASE("estimates are invariant under a common rescaling") {
    const QkdScenario s;
    const auto base = simulate_measurement(s, symbol_noise(s.v_elec_snu, 1.0), 50000, 1.0, 5, 1.0);
    const auto a = estimate_parameters(base, 1.0, 1.09, s.eta, s.v_a);
    auto scaled = base;
    const double c = 3.7;
    for (double& x : scaled.x_b) x *= c;
    const auto b = estimate_parameters(scaled, c * c, c * c * 1.09, s.eta, s.v_a);
    CHECK(b.t_hat == doctest::Approx(a.t_hat).epsilon(1e-9));
    CHECK(b.xi_hat_snu == doctest::Approx(a.xi_hat_snu).epsilon(1e-9));
    CHECK(b.xi_bob_snu == doctest::Approx(a.xi_bob_snu).epsilon(1e-9));
    const double ka = key(a.t_hat, a.xi_hat_snu);
    const double kb = key(b.t_hat, b.xi_hat_snu);
    CHECK(kb == doctest::Approx(ka).epsilon(1e-9));
}

TEST_CASE("estimation preconditions") {
    const QkdScenario s;
    auto sim = simulate_measurement(s, symbol_noise(s.v_elec_snu, 1.0), 100, 1.0, 5, 1.0);
    CHECK_THROWS_AS((void)estimate_parameters(sim, 0.0, 1.09, 1.0, 5.0), ValidationError);
    CHECK_THROWS_AS((void)estimate_parameters(sim, 1.0, 1.09, 0.0, 5.0), ValidationError);
    auto broken = sim;
    broken.x_b.pop_back();
    CHECK_THROWS_AS((void)estimate_parameters(broken, 1.0, 1.09, 1.0, 5.0), ValidationError);
    auto dead = sim;
    std::fill(dead.x_b.begin(), dead.x_b.end(), 0.0);
    CHECK_THROWS_AS((void)estimate_parameters(dead, 1.0, 1.09, 1.0, 5.0), NumericError);
}

TEST_CASE("key rate against calibration duration, reference models") {
    const QkdScenario s;
    const auto elec = reference_electronic_model();
    const auto rec = reference_receiver_model();
    const auto grid = log_grid(1e-7, 1e-3, 10);
    const auto ch = skr_vs_tau(s, elec, rec, kFs, grid, CalibrationScheme::characterized);
    const auto fw = skr_vs_tau(s, elec, rec, kFs, grid, CalibrationScheme::fully_white);
    REQUIRE(ch.taus == fw.taus);
    REQUIRE(ch.taus.size() >= 10);
    for (std::size_t i = 0; i < ch.taus.size(); ++i) {
        CHECK(fw.effective_rate[i] >= ch.effective_rate[i]);
        CHECK(ch.duty_factor[i] == duty_factor(ch.taus[i], s.tau_max, s.calib_steps));
        CHECK(ch.n0_used[i] >= ch.n0_hat[i]);
    }
    CHECK(ch.tau_opt > ch.taus.front());
    CHECK(ch.tau_opt < ch.taus.back());
    const double peak = *std::max_element(ch.effective_rate.begin(), ch.effective_rate.end());
    CHECK(ch.effective_rate.back() < 0.05 * peak);
    for (double d : ch.dropped_taus) CHECK((d >= s.tau_max / s.calib_steps || d <= 2.0 / kFs));
    CHECK(std::find(ch.dropped_taus.begin(), ch.dropped_taus.end(), grid.back()) != ch.dropped_taus.end());
}

TEST_CASE("key fraction falls as the used shot-noise estimate grows") {
    const QkdScenario s;
    double prev = 1.0;
    for (double r = 1.0; r >= 0.8; r -= 0.02) {
        const double k = key(s.t_true * r, s.xi_alice, 1.0, 1.0, s.v_elec_snu * r);
        CHECK(k <= prev);
        prev = k;
    }
}

TEST_CASE("key rate sweep preconditions") {
    const QkdScenario s;
    const auto elec = reference_electronic_model();
    const auto rec = reference_receiver_model();
    CHECK_THROWS_AS((void)skr_vs_tau(s, elec, rec, kFs, {1e-5}, CalibrationScheme::uncharacterized), ValidationError);
    CHECK_THROWS_AS((void)skr_vs_tau(s, elec, rec, kFs, {1.0}, CalibrationScheme::characterized), ValidationError);
    CHECK_THROWS_AS((void)skr_vs_tau(s, rec, elec, kFs, {1e-5}, CalibrationScheme::characterized), ValidationError);
    CHECK_THROWS_AS((void)skr_vs_tau(s, elec, rec, kFs, {1e-5}, CalibrationScheme::characterized, 0.0), ValidationError);
}

TEST_CASE("intensity-noise sensitivity") {
    const QkdScenario s;
    const auto elec = reference_electronic_model();
    const auto rec = reference_receiver_model();
    const auto grid = log_grid(1e-7, 1e-3, 10);
    const auto rs = rin_sensitivity(s, elec, rec, 40.0, kFs, grid);
    REQUIRE(rs.fully_white_low.taus.size() == rs.fully_white_high.taus.size());
    for (std::size_t i = 0; i < rs.fully_white_low.taus.size(); ++i) {
        CHECK(rs.fully_white_high.effective_rate[i] ==
              doctest::Approx(rs.fully_white_low.effective_rate[i]).epsilon(0.01));
    }
    const auto& low = rs.characterized_low;
    const std::size_t at = static_cast<std::size_t>(std::find(low.taus.begin(), low.taus.end(), low.tau_opt) -
                                                    low.taus.begin());
    CHECK(rs.characterized_high.effective_rate[at] < low.effective_rate[at]);

    const auto same = rin_sensitivity(s, elec, rec, 1.0, kFs, grid);
    CHECK(same.characterized_high.effective_rate == same.characterized_low.effective_rate);
    CHECK(same.fully_white_high.effective_rate == same.fully_white_low.effective_rate);
    CHECK_THROWS_AS((void)rin_sensitivity(s, elec, rec, 0.0, kFs, grid), ValidationError);
}

TEST_CASE("scenario JSON") {
    const QkdScenario s;
    const auto back = scenario_from_json(to_json(s));
    CHECK(back.xi_alice == s.xi_alice);
    CHECK(back.tau_max == s.tau_max);
    CHECK(back.calib_steps == s.calib_steps);

    const auto bundled = load_scenario(std::filesystem::path(NOISECAL_SOURCE_DIR) / "scenarios" / "table4.json");
    CHECK(bundled.xi_bob() == doctest::Approx(0.025).epsilon(1e-12));
    CHECK(bundled.xi_alice == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(bundled.v_elec_snu == 0.09);

    auto j = to_json(s);
    j["xi_bob"] = 0.025;
    CHECK_THROWS_AS((void)scenario_from_json(j), ValidationError);
    j.erase("xi_alice");
    j.erase("xi_bob");
    CHECK_THROWS_AS((void)scenario_from_json(j), ValidationError);
    j = to_json(s);
    j["calib_steps"] = 1.5;
    CHECK_THROWS_AS((void)scenario_from_json(j), ValidationError);
    j = to_json(s);
    j["t_true"] = "a";
    CHECK_THROWS_AS((void)scenario_from_json(j), ValidationError);
    CHECK_THROWS_AS((void)load_scenario("/nonexistent/scenario.json"), ValidationError);
}
