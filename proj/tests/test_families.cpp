#include <doctest.h>

#include <cmath>

#include "helix/families.hpp"
#include "oracles.hpp"

using namespace helix;

using families::builtin;
using families::schwarzian_at;
using families::schwarzian_scan;
using families::validate_ascending;

TEST_CASE("builtin families exist and reject unknown names") {
    for (const auto& name : families::builtin_names()) CHECK_NOTHROW(builtin(name));
    CHECK_THROWS_AS(builtin("nope"), Error);
    CHECK(builtin("composite").needs_beta);
    CHECK(!builtin("composite").needs_alpha);
    CHECK(builtin("sine").needs_alpha);
}

TEST_CASE("bind: evaluation and missing parameters") {
    auto sine = families::bind(builtin("sine"), 0.4, 1.0);
    CHECK(sine(0.5) == doctest::Approx(1.9).epsilon(1e-14));
    CHECK(sine(1.0) == doctest::Approx(2.0).epsilon(1e-14));

    // Independent direct-formula evaluation.
    auto phi = families::bind(builtin("phi_nested"), 1.2, 0.8);
    const double x = 0.5;
    const double s = std::sin(0.5 * kPi * x);
    const double want = 1.2 * std::sin(s * s) + x + 0.8;
    CHECK(phi(x) == doctest::Approx(want).epsilon(1e-15));
    CHECK(phi(x) == doctest::Approx(1.8753106463250436).epsilon(1e-13));

    CHECK_THROWS_AS(families::bind(builtin("sine"), std::nullopt, 1.0), Error);
    CHECK_NOTHROW(families::bind(builtin("composite"), std::nullopt, 1.2));
}

TEST_CASE("validate_ascending via the closed-form minimum beta-alpha") {
    CHECK(validate_ascending(families::bind(builtin("sine"), 0.4, 1.5), 0.0, 2.0, 10001));
    CHECK(!validate_ascending(families::bind(builtin("sine"), 0.4, 0.3), 0.0, 2.0, 10001));
    auto up = families::make_family("up", "x+1");
    CHECK(validate_ascending(families::bind(up, std::nullopt, std::nullopt), 0.0, 2.0, 101));
}

TEST_CASE("schwarzian_at: sine closed form, affine zero, singular point") {
    auto sine = families::bind(builtin("sine"), 0.4, 1.0);
    // F' = 1 at x = 0.5, F'' = -0.4 pi^2, F''' = 0 -> S = -0.24 pi^4.
    const double want = -1.5 * std::pow(0.4 * kPi * kPi, 2.0);
    auto s = schwarzian_at(sine, 0.5);
    REQUIRE(s.has_value());
    CHECK(*s == doctest::Approx(want).epsilon(1e-12));
    CHECK(*s == doctest::Approx(-23.378181848160585).epsilon(1e-12));

    auto affine = families::bind(families::make_family("affine", "x+7"), std::nullopt, std::nullopt);
    auto s0 = schwarzian_at(affine, 1.234);
    REQUIRE(s0.has_value());
    CHECK(*s0 == 0.0);

    // Root of F'(x) = 1 + 0.4 pi cos(pi x) located by a bisection oracle.
    const auto fprime = [](double x) { return 1.0 + 0.4 * kPi * std::cos(kPi * x); };
    const double root = oracles::bisect_root(fprime, 0.5, 1.0);
    CHECK(std::fabs(fprime(root)) < 1e-11);
    CHECK(!schwarzian_at(sine, root).has_value());
}

TEST_CASE("schwarzian_at agrees with the finite-difference Schwarzian") {
    oracles::ExprGen gen(5);
    auto sine = families::bind(builtin("sine"), 0.4, 1.0);
    auto psi = families::bind(builtin("psi_nested"), 0.5, 1.2);
    for (int i = 0; i < 100; ++i) {
        const double x = gen.uniform(0.0, 2.0);
        for (const auto& map : {sine, psi}) {
            const auto s = schwarzian_at(map, x);
            if (!s) continue;
            if (std::fabs(map.jet(x).v1) < 1e-2) continue;  // FD loses digits there
            const double fd = oracles::fd_schwarzian([&](double xx) { return map(xx); }, x);
            CHECK(std::fabs(*s - fd) <= 1e-4 * std::max(1.0, std::fabs(*s)));
        }
    }
}

TEST_CASE("schwarzian negativity is preserved under composition") {
    auto sine = families::bind(builtin("sine"), 0.4, 1.0);
    oracles::ExprGen gen(11);
    int checked = 0;
    for (int i = 0; i < 400 && checked < 100; ++i) {
        const double x = gen.uniform(0.0, 2.0);
        const auto sx = schwarzian_at(sine, x);
        if (!sx || *sx >= 0.0) continue;
        const auto inner = sine.jet(x);
        const auto sf = schwarzian_at(sine, inner.v0);
        if (!sf || *sf >= 0.0) continue;
        // Jet of F(F(x)) by the chain rule; exercises the jet algebra end to end.
        const auto outer = sine.jet(inner.v0);
        const helix::expr::Jet3 comp = helix::expr::jet_chain(
            outer.v0, outer.v1, outer.v2, outer.v3, inner);
        if (std::fabs(comp.v1) < 1e-9) continue;
        const double s2 =
            comp.v3 / comp.v1 - 1.5 * (comp.v2 / comp.v1) * (comp.v2 / comp.v1);
        CHECK(s2 < 0.0);
        ++checked;
    }
    CHECK(checked == 100);
}

TEST_CASE("schwarzian_scan: sine negative, affine flat") {
    auto sine = families::bind(builtin("sine"), 0.4, 1.0);
    auto report = schwarzian_scan(sine, 0.0, 2.0, 10000);
    CHECK(report.all_negative);
    CHECK(!report.first_positive_sample.has_value());

    // A grid sample placed on a critical point of F is masked as singular
    // and does not disturb the all_negative verdict.
    const auto fprime = [](double x) { return 1.0 + 0.4 * kPi * std::cos(kPi * x); };
    const double root = oracles::bisect_root(fprime, 0.5, 1.0);
    auto masked = schwarzian_scan(sine, root - 1e-6, root + 1e-6, 3);
    CHECK(masked.singular_count == 1);
    CHECK(masked.all_negative);

    auto affine = families::bind(families::make_family("affine", "x+1"), std::nullopt, std::nullopt);
    auto flat = schwarzian_scan(affine, 0.0, 2.0, 101);
    CHECK(!flat.all_negative);
    CHECK(flat.singular_count == 0);
    for (const auto& s : flat.samples) CHECK(s.value == 0.0);
}

TEST_CASE("schwarzian_scan: phi_positive_schwarzian has positive regions") {
    auto phi = families::bind(builtin("phi_positive_schwarzian"), 1.2, 0.9);
    auto report = schwarzian_scan(phi, 0.0, 2.0, 10000);
    CHECK(!report.all_negative);
    CHECK(report.first_positive_sample.has_value());
}
