#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <boost/math/distributions/fisher_f.hpp>

#include "noisecal/errors.hpp"
#include "noisecal/wss_test.hpp"

using namespace noisecal;

namespace {

std::vector<double> normals(std::mt19937_64& rng, std::size_t n, double sd = 1.0) {
    std::normal_distribution<double> g(0.0, sd);
    std::vector<double> x(n);
    for (auto& v : x) v = g(rng);
    return x;
}

// Two-sided exact p by listing every assignment of ranks to the first group.
double brute_force_rank_sum_p(std::size_t m, std::size_t n, double observed) {
    std::vector<int> pick(n, 0);
    std::fill(pick.begin(), pick.begin() + static_cast<std::ptrdiff_t>(m), 1);
    std::sort(pick.begin(), pick.end());
    std::size_t total = 0;
    std::size_t low = 0;
    std::size_t high = 0;
    do {
        double w = 0.0;
        for (std::size_t i = 0; i < n; ++i) w += pick[i] ? static_cast<double>(i + 1) : 0.0;
        ++total;
        low += w <= observed;
        high += w >= observed;
    } while (std::next_permutation(pick.begin(), pick.end()));
    return std::min(1.0, 2.0 * static_cast<double>(std::min(low, high)) / static_cast<double>(total));
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double oracle_brown_forsythe_p(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<std::vector<double>> z;
    for (const auto* g : {&a, &b}) {
        const double med = median(*g);
        std::vector<double> d;
        for (double v : *g) d.push_back(std::abs(v - med));
        z.push_back(d);
    }
    double grand = 0.0;
    double count = 0.0;
    for (const auto& g : z) {
        grand += std::accumulate(g.begin(), g.end(), 0.0);
        count += static_cast<double>(g.size());
    }
    grand /= count;
    double ssb = 0.0;
    double ssw = 0.0;
    for (const auto& g : z) {
        const double m = std::accumulate(g.begin(), g.end(), 0.0) / static_cast<double>(g.size());
        ssb += static_cast<double>(g.size()) * (m - grand) * (m - grand);
        for (double v : g) ssw += (v - m) * (v - m);
    }
    const double f = ssb / (ssw / (count - 2.0));
    return boost::math::cdf(boost::math::complement(boost::math::fisher_f_distribution<double>(1.0, count - 2.0), f));
}

Trace as_trace(std::vector<double> x) {
    Trace t;
    t.fs = 1.0;
    t.samples = std::move(x);
    return t;
}

}  // namespace

TEST_CASE("Wilcoxon exact small samples") {
    const std::vector<double> a{1, 2, 3};
    const std::vector<double> b{4, 5, 6};
    CHECK(wilcoxon_rank_sum(a, b).p_value == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(wilcoxon_rank_sum(a, b).statistic == 6.0);
    const std::vector<double> odd{1, 3, 5};
    const std::vector<double> even{2, 4, 6};
    CHECK(wilcoxon_rank_sum(odd, even).p_value >= 0.6);

    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t m = 3 + trial % 5;
        const std::size_t n = 3 + (trial * 7) % 9;
        const auto x = normals(rng, m);
        auto y = normals(rng, n);
        for (auto& v : y) v += 0.8;
        if (m + n > 20) continue;
        const auto result = wilcoxon_rank_sum(x, y);
        CHECK(result.p_value == doctest::Approx(brute_force_rank_sum_p(m, m + n, result.statistic)).epsilon(1e-12));
    }
}

TEST_CASE("Wilcoxon normal approximation and ties") {
    std::mt19937_64 rng(8);
    // Against a permutation distribution of the same statistic.
    const auto a = normals(rng, 40);
    auto b = normals(rng, 50);
    for (auto& v : b) v += 0.4;
    const auto result = wilcoxon_rank_sum(a, b);
    std::vector<double> pooled(a);
    pooled.insert(pooled.end(), b.begin(), b.end());
    const double centre = 40.0 * 91.0 / 2.0;
    std::size_t extreme = 0;
    const std::size_t perms = 40000;
    for (std::size_t p = 0; p < perms; ++p) {
        std::shuffle(pooled.begin(), pooled.end(), rng);
        const auto w = wilcoxon_rank_sum(std::span<const double>(pooled).first(40),
                                         std::span<const double>(pooled).subspan(40));
        extreme += std::abs(w.statistic - centre) >= std::abs(result.statistic - centre) - 1e-9;
    }
    const double perm_p = static_cast<double>(extreme) / static_cast<double>(perms);
    CHECK(result.p_value == doctest::Approx(perm_p).epsilon(0.1));

    const std::vector<double> tied{2, 2, 2, 2};
    const auto all_tied = wilcoxon_rank_sum(tied, tied);
    CHECK(all_tied.degenerate);
    CHECK(all_tied.p_value == 1.0);

    const std::vector<double> ta{1, 1, 2, 3};
    const std::vector<double> tb{3, 4, 4, 5};
    const auto with_ties = wilcoxon_rank_sum(ta, tb);
    CHECK_FALSE(with_ties.degenerate);
    CHECK(with_ties.statistic == doctest::Approx(1.5 + 1.5 + 3 + 4.5));
    CHECK_THROWS_AS((void)wilcoxon_rank_sum(std::vector<double>{1, 2}, tb), ValidationError);
}

TEST_CASE("Brown-Forsythe agrees with an ANOVA oracle") {
    const std::vector<double> a{1, 2, 3};
    const auto same = brown_forsythe(a, a);
    CHECK(same.statistic == 0.0);
    CHECK(same.p_value == 1.0);

    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 20; ++trial) {
        const auto x = normals(rng, 30 + trial);
        const auto y = normals(rng, 40, 1.0 + 0.05 * trial);
        CHECK(brown_forsythe(x, y).p_value == doctest::Approx(oracle_brown_forsythe_p(x, y)).epsilon(1e-9));
    }
    const std::vector<double> flat{5, 5, 5};
    const auto degenerate = brown_forsythe(flat, flat);
    CHECK(degenerate.degenerate);
    CHECK(degenerate.p_value == 1.0);
}

TEST_CASE("rank and scale tests are symmetric in the groups") {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 10; ++trial) {
        const auto x = normals(rng, 60);
        const auto y = normals(rng, 45, 1.3);
        CHECK(wilcoxon_rank_sum(x, y).p_value == doctest::Approx(wilcoxon_rank_sum(y, x).p_value).epsilon(1e-12));
        CHECK(brown_forsythe(x, y).p_value == doctest::Approx(brown_forsythe(y, x).p_value).epsilon(1e-12));
    }
}

TEST_CASE("size and power of the two-sample tests, n = 500") {
    std::mt19937_64 rng(77);
    const int seeds = 1000;
    int wilcoxon_rejects = 0;
    int bf_rejects = 0;
    int bf_scaled_strong = 0;
    for (int s = 0; s < seeds; ++s) {
        const auto x = normals(rng, 500);
        const auto y = normals(rng, 500);
        wilcoxon_rejects += wilcoxon_rank_sum(x, y).p_value <= 0.05;
        bf_rejects += brown_forsythe(x, y).p_value <= 0.05;
        auto scaled = y;
        for (auto& v : scaled) v *= 3.0;
        bf_scaled_strong += brown_forsythe(x, scaled).p_value < 0.001;
    }
    CHECK(std::abs(wilcoxon_rejects / double(seeds) - 0.05) <= 0.02);
    CHECK(std::abs(bf_rejects / double(seeds) - 0.05) <= 0.02);
    CHECK(bf_scaled_strong / double(seeds) >= 0.99);
}

TEST_CASE("autocorrelation comparison") {
    std::mt19937_64 rng(31);
    const auto a = normals(rng, 10000);
    SUBCASE("normalized autocorrelation matches the direct sum") {
        const auto rho = autocorrelation(a, 20);
        const double mean = std::accumulate(a.begin(), a.end(), 0.0) / a.size();
        double r0 = 0.0;
        for (double v : a) r0 += (v - mean) * (v - mean);
        for (std::size_t l : {0u, 1u, 7u, 20u}) {
            double r = 0.0;
            for (std::size_t t = 0; t + l < a.size(); ++t) r += (a[t] - mean) * (a[t + l] - mean);
            CHECK(rho[l] == doctest::Approx(r / r0).epsilon(1e-9));
        }
    }
    SUBCASE("identical inputs give zero distance") { CHECK(acf_distance(a, a, 512) == 0.0); }
    SUBCASE("threshold is monotone in alpha and scales with length") {
        const double t1 = acf_threshold(10000, 10000, 512, 0.1);
        const double t2 = acf_threshold(10000, 10000, 512, 0.05);
        const double t3 = acf_threshold(10000, 10000, 512, 0.01);
        CHECK(t1 < t2);
        CHECK(t2 < t3);
        // Each lag difference has spread about sqrt(2/n), the max over 512 lags sits near 3.5 of those.
        CHECK(t2 / std::sqrt(2.0 / 10000) == doctest::Approx(3.7).epsilon(0.15));
    }
    SUBCASE("white pairs are rejected at about alpha; AR(1) is always rejected") {
        std::mt19937_64 local(5);
        const int seeds = 1000;
        const double threshold = acf_threshold(10000, 10000, 512, 0.05);
        int white_rejects = 0;
        int ar_rejects = 0;
        for (int s = 0; s < seeds; ++s) {
            const auto x = normals(local, 10000);
            const auto y = normals(local, 10000);
            white_rejects += acf_distance(x, y, 512) >= threshold;
            if (s < 200) {
                auto ar = normals(local, 10000);
                for (std::size_t i = 1; i < ar.size(); ++i) ar[i] += 0.9 * ar[i - 1];
                ar_rejects += acf_distance(x, ar, 512) >= threshold;
            }
        }
        CHECK(std::abs(white_rejects / double(seeds) - 0.05) <= 0.02);
        CHECK(ar_rejects / 200.0 >= 0.99);
    }
    SUBCASE("errors") {
        const std::vector<double> zero(1000, 0.0);
        CHECK_THROWS_AS((void)acf_distance(a, zero, 10), ValidationError);
        CHECK_THROWS_AS((void)acf_distance(a, std::vector<double>(100, 1.0), 30), ValidationError);
    }
}

TEST_CASE("verdict on stationary and non-stationary traces") {
    std::mt19937_64 rng(101);
    const std::size_t n = 4096;
    const int seeds = 200;
    const double alpha = 0.05;
    int white_pass = 0;
    int drift_fail = 0;
    int step_fail = 0;
    for (int s = 0; s < seeds; ++s) {
        const auto v = wss_verdict(as_trace(normals(rng, n)), alpha);
        CHECK(v.passed == (v.wilcoxon_p > alpha && v.brown_forsythe_p > alpha && v.acf_stat < v.acf_threshold));
        white_pass += v.passed;

        auto drift = normals(rng, n);
        for (std::size_t i = 0; i < n; ++i) drift[i] += 3.0 * static_cast<double>(i) / static_cast<double>(n);
        drift_fail += !wss_verdict(as_trace(drift), alpha).passed;

        auto step = normals(rng, n);
        for (std::size_t i = n / 2; i < n; ++i) step[i] *= std::sqrt(2.0);
        step_fail += !wss_verdict(as_trace(step), alpha).passed;
    }
    // Three independent tests of size alpha pass jointly with probability (1 - alpha)^3.
    const double expected = std::pow(1.0 - alpha, 3);
    const double se = std::sqrt(expected * (1.0 - expected) / seeds);
    CHECK(white_pass / double(seeds) >= expected - 3.0 * se);
    CHECK(drift_fail / double(seeds) >= 0.95);
    CHECK(step_fail / double(seeds) >= 0.95);
    CHECK_THROWS_AS((void)wss_verdict(as_trace(normals(rng, 32)), alpha), ValidationError);
}

TEST_CASE("passing at alpha implies passing at smaller alpha") {
    std::mt19937_64 rng(55);
    for (int s = 0; s < 50; ++s) {
        const auto t = as_trace(normals(rng, 2048));
        bool previous = false;
        for (double alpha : {0.2, 0.1, 0.05, 0.01, 0.001}) {
            const bool passed = wss_verdict(t, alpha).passed;
            if (previous) CHECK(passed);
            previous = passed;
        }
    }
}

TEST_CASE("block scan") {
    std::mt19937_64 rng(9);
    std::vector<Trace> stationary;
    std::vector<Trace> drifting;
    for (int b = 0; b < 100; ++b) {
        stationary.push_back(as_trace(normals(rng, 2048)));
        auto d = normals(rng, 2048);
        for (std::size_t i = 0; i < d.size(); ++i) d[i] += 4.0 * static_cast<double>(i) / 2048.0;
        drifting.push_back(as_trace(d));
    }
    const auto report = block_scan(stationary, {0.1, 0.05}, 2);
    REQUIRE(report.cumulative.size() == 2);
    CHECK(report.block_count == 100);
    for (const auto& c : report.cumulative) {
        for (std::size_t i = 1; i < c.size(); ++i) CHECK(c[i] >= c[i - 1]);
    }
    CHECK(report.pass_fraction[0] == doctest::Approx(report.cumulative[0].back() / 100.0));
    const double expected = std::pow(0.9, 3);
    CHECK(report.pass_fraction[0] >= expected - 3.0 * std::sqrt(expected * (1 - expected) / 100));
    CHECK(report.pass_fraction[1] >= report.pass_fraction[0]);

    const auto bad = block_scan(drifting, {0.1});
    CHECK(bad.pass_fraction[0] == 0.0);
    CHECK_THROWS_AS((void)block_scan({}, {0.1}), ValidationError);
}
