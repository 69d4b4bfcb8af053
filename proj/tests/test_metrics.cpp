#include <doctest.h>

#include <cmath>

#include "helix/metrics.hpp"
#include "oracles.hpp"

using namespace helix;
using metrics::average_periodicity;
using metrics::quasi_ap_check;

namespace {

std::vector<std::int64_t> plus_constant(std::vector<std::int64_t> v, std::int64_t c) {
    for (auto& x : v) x += c;
    return v;
}

}  // namespace

TEST_CASE("average_periodicity: reference train and degenerate cases") {
    const std::vector<std::int64_t> train{74, 223, 368, 519, 669, 820};
    CHECK(average_periodicity(train) == 149.2);

    CHECK(average_periodicity(std::vector<std::int64_t>{10, 20, 30}) == 10.0);

    CHECK_THROWS_AS(average_periodicity(std::vector<std::int64_t>{5}), DetectError);
    CHECK_THROWS_AS(average_periodicity(std::vector<std::int64_t>{5, 5}), Error);

    // Exact arithmetic progression with step d has average exactly d.
    SplitMix64 rng(4);
    for (int t = 0; t < 50; ++t) {
        const auto d = static_cast<std::int64_t>(rng.next() % 500 + 1);
        std::vector<std::int64_t> ap;
        std::int64_t v = static_cast<std::int64_t>(rng.next() % 100);
        for (int i = 0; i < 12; ++i, v += d) ap.push_back(v);
        CHECK(average_periodicity(ap) == static_cast<double>(d));
    }
}

TEST_CASE("quasi_ap_check: reference steady-order lists") {
    // Regular train: all gaps inside the P +- P^(1/3) band.
    const std::vector<std::int64_t> regular{74, 223, 368, 519, 669, 820};
    auto r = quasi_ap_check(regular);
    CHECK(r.average == 149.2);
    CHECK(r.band_lo == doctest::Approx(149.2 - std::cbrt(149.2)).epsilon(1e-15));
    CHECK(r.band_hi == doctest::Approx(149.2 + std::cbrt(149.2)).epsilon(1e-15));
    CHECK(r.band_lo == doctest::Approx(143.90).epsilon(1e-3));
    CHECK(r.band_hi == doctest::Approx(154.50).epsilon(1e-3));
    CHECK(r.verdict);

    // Irregular trains from the positive-Schwarzian family.
    const std::vector<std::int64_t> list_a{1065, 2210, 3014, 4095, 5178,
                                           6458, 7538, 8611, 10176, 11305};
    auto ra = quasi_ap_check(list_a);
    CHECK(ra.average == doctest::Approx(10240.0 / 9.0).epsilon(1e-15));
    CHECK(!ra.verdict);
    // The gap 2210 - 1065 + ... the second difference 804 falls below the band.
    bool found_804 = false;
    for (auto idx : ra.violations)
        if (ra.diffs[idx] == 804) found_804 = true;
    CHECK(found_804);

    const std::vector<std::int64_t> list_b{4988, 11051, 17121, 23185, 28974,
                                           35420, 41447, 47523, 53575};
    auto rb = quasi_ap_check(list_b);
    CHECK(rb.average == 6073.375);
    CHECK(!rb.verdict);
    bool found_5789 = false, found_6446 = false;
    for (auto idx : rb.violations) {
        if (rb.diffs[idx] == 5789) found_5789 = true;
        if (rb.diffs[idx] == 6446) found_6446 = true;
    }
    CHECK(found_5789);
    CHECK(found_6446);

    CHECK_THROWS_AS(quasi_ap_check(std::vector<std::int64_t>{1, 2}), DetectError);
}

TEST_CASE("quasi_ap_check is invariant under integer translation") {
    SplitMix64 rng(9);
    for (int t = 0; t < 30; ++t) {
        std::vector<std::int64_t> orders;
        std::int64_t v = 10;
        for (int i = 0; i < 8; ++i) {
            v += 100 + static_cast<std::int64_t>(rng.next() % 30);
            orders.push_back(v);
        }
        auto base = quasi_ap_check(orders);
        auto shifted = quasi_ap_check(plus_constant(orders, 12345));
        CHECK(base.verdict == shifted.verdict);
        CHECK(base.average == shifted.average);
        CHECK(base.diffs == shifted.diffs);
    }
}

TEST_CASE("shift coverage of fractional distances") {
    // For fractional parts away from the wrap point, a shifted distance is
    // either d or 1-d; the minimum over several shifts is at most
    // min(d, 1-d) plus wrap slack.
    SplitMix64 rng(21);
    const std::vector<double> shifts{0.0, 0.25, 0.5};
    for (int t = 0; t < 2000; ++t) {
        const double a = 1000.0 * rng.next_double();
        const double b = 1000.0 * rng.next_double();
        const double d = std::fabs(frac(a) - frac(b));
        double best = 1.0;
        for (double s : shifts)
            best = std::min(best, std::fabs(frac(a + s) - frac(b + s)));
        CHECK(best <= std::min(d, 1.0 - d) + 1e-12);
        for (double s : shifts) {
            const double ds = std::fabs(frac(a + s) - frac(b + s));
            const bool near_d = std::fabs(ds - d) < 1e-9;
            const bool near_1d = std::fabs(ds - (1.0 - d)) < 1e-9;
            CHECK((near_d || near_1d));
        }
    }
}

TEST_CASE("chaos_mod1_test: helix vs chaotic parameters") {
    metrics::ChaosOptions opts;
    opts.pair_count = 8;
    opts.horizon = 200000;
    opts.seed = 2024;

    // Attracting order-3 helix: all starts collapse onto the same cycle.
    auto helix_map = families::bind(families::builtin("composite"), std::nullopt, 1.2);
    auto helix_report = metrics::chaos_mod1_test(helix_map, opts);
    CHECK(!helix_report.verdict);
    CHECK(helix_report.spread_min_over_pairs < opts.lambda_threshold);

    // Genuinely chaotic sine parameter: every pair separates macroscopically
    // while the shifted fractional parts keep meeting.
    auto chaos_map = families::bind(families::builtin("sine"), 0.4, 1.55);
    auto chaos_report = metrics::chaos_mod1_test(chaos_map, opts);
    CHECK(chaos_report.verdict);
    CHECK(chaos_report.spread_min_over_pairs >= opts.lambda_threshold);
    for (double f : chaos_report.min_frac_by_shift) CHECK(f < opts.frac_tol);
}

TEST_CASE("chaos_mod1_test: degenerate pair does not drive the verdict") {
    metrics::ChaosOptions opts;
    opts.pair_count = 4;
    opts.horizon = 100000;
    opts.seed = 7;
    opts.extra_pairs = {{0.37, 0.37}};
    auto map = families::bind(families::builtin("sine"), 0.4, 1.55);
    auto report = metrics::chaos_mod1_test(map, opts);
    const auto& dup = report.pairs.back();
    CHECK(dup.degenerate);
    CHECK(dup.spread == 0.0);
    for (double f : dup.min_frac) CHECK(f == 0.0);
    CHECK(report.verdict);  // driven by the sampled pairs
    CHECK(report.spread_min_over_pairs > 0.0);
}

TEST_CASE("chaos verdict is monotone in the lambda threshold") {
    metrics::ChaosOptions opts;
    opts.pair_count = 6;
    opts.horizon = 100000;
    opts.seed = 5;
    auto map = families::bind(families::builtin("sine"), 0.4, 1.55);
    auto report = metrics::chaos_mod1_test(map, opts);
    bool prev = metrics::chaos_verdict(report, 1e-9, opts.frac_tol);
    for (double lambda : {1e-6, 1e-3, 0.1, 1.0, 10.0, 1e6}) {
        const bool cur = metrics::chaos_verdict(report, lambda, opts.frac_tol);
        CHECK((prev || !cur));  // true can only flip to false as lambda grows
        prev = cur;
    }
}

TEST_CASE("chaos_mod1_test report is deterministic for a fixed seed") {
    metrics::ChaosOptions opts;
    opts.pair_count = 4;
    opts.horizon = 50000;
    opts.seed = 99;
    auto map = families::bind(families::builtin("sine"), 0.4, 1.55);
    opts.threads = 1;
    auto a = metrics::chaos_mod1_test(map, opts);
    opts.threads = 3;  // concurrent evaluation must not change the report
    auto b = metrics::chaos_mod1_test(map, opts);
    REQUIRE(a.pairs.size() == b.pairs.size());
    for (std::size_t i = 0; i < a.pairs.size(); ++i) {
        CHECK(a.pairs[i].x0 == b.pairs[i].x0);
        CHECK(a.pairs[i].spread == b.pairs[i].spread);
        CHECK(a.pairs[i].min_frac == b.pairs[i].min_frac);
    }
    CHECK(a.verdict == b.verdict);
}
