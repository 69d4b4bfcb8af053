#pragma once

// Test-only oracles, independent of the library's evaluation paths: central
// finite differences with Richardson extrapolation, a brute-force period
// checker, and a small random expression generator.

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "helix/common.hpp"

namespace oracles {

using Fn = std::function<double(double)>;

namespace detail {

inline double d1_central(const Fn& f, double x, double h) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

inline double d2_central(const Fn& f, double x, double h) {
    return (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
}

inline double d3_central(const Fn& f, double x, double h) {
    return (f(x + 2.0 * h) - 2.0 * f(x + h) + 2.0 * f(x - h) - f(x - 2.0 * h)) /
           (2.0 * h * h * h);
}

// Two Richardson steps on an O(h^2) central formula: O(h^6) accuracy.
inline double richardson6(const std::function<double(double)>& base, double h) {
    const auto r4 = [&](double hh) {
        return (4.0 * base(hh / 2.0) - base(hh)) / 3.0;
    };
    return (16.0 * r4(h / 2.0) - r4(h)) / 15.0;
}

}  // namespace detail

// Central finite differences at the given base steps.
inline double fd_derivative1(const Fn& f, double x, double h = 1e-4) {
    return detail::richardson6([&](double hh) { return detail::d1_central(f, x, hh); }, h);
}

inline double fd_derivative2(const Fn& f, double x, double h = 1e-3) {
    return detail::richardson6([&](double hh) { return detail::d2_central(f, x, hh); }, h);
}

inline double fd_derivative3(const Fn& f, double x, double h = 1e-2) {
    return detail::richardson6([&](double hh) { return detail::d3_central(f, x, hh); }, h);
}

// Finite-difference Schwarzian, an independent path to F'''/F' - 1.5(F''/F')^2.
inline double fd_schwarzian(const Fn& f, double x) {
    const double f1 = fd_derivative1(f, x);
    const double f2 = fd_derivative2(f, x);
    const double f3 = fd_derivative3(f, x);
    return f3 / f1 - 1.5 * (f2 / f1) * (f2 / f1);
}

// Brute-force: is the integer sequence p-periodic?
inline bool is_p_periodic(const std::vector<std::int64_t>& xs, int p) {
    for (std::size_t i = 0; i + static_cast<std::size_t>(p) < xs.size(); ++i)
        if (xs[i] != xs[i + static_cast<std::size_t>(p)]) return false;
    return true;
}

// Bisection root finder for a continuous scalar function with a bracket.
inline double bisect_root(const Fn& f, double lo, double hi, int iters = 200) {
    double flo = f(lo);
    for (int i = 0; i < iters; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if ((flo < 0.0) == (fm < 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

// Random expression strings over the library grammar. Power bases are kept
// strictly positive so evaluation stays inside the domain.
class ExprGen {
public:
    explicit ExprGen(std::uint64_t seed) : rng_(seed) {}

    std::string gen(int depth = 3) {
        if (depth <= 0) return leaf();
        switch (rng_.next() % 8) {
            case 0: return "(" + gen(depth - 1) + "+" + gen(depth - 1) + ")";
            case 1: return "(" + gen(depth - 1) + "-" + gen(depth - 1) + ")";
            case 2: return "(" + gen(depth - 1) + "*" + gen(depth - 1) + ")";
            case 3: return "sin(" + gen(depth - 1) + ")";
            case 4: return "cos(" + gen(depth - 1) + ")";
            case 5: return "-" + gen(depth - 1);
            case 6: return "((sin(" + gen(depth - 1) + ")+1.5)^" + leaf_small() + ")";
            default: return leaf();
        }
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * rng_.next_double();
    }

private:
    std::string leaf() {
        switch (rng_.next() % 5) {
            case 0: return "x";
            case 1: return "alpha";
            case 2: return "beta";
            case 3: return "pi";
            default: {
                const double v = 0.1 + 2.0 * rng_.next_double();
                char buf[32];
                std::snprintf(buf, sizeof(buf), "%.3f", v);
                return buf;
            }
        }
    }

    std::string leaf_small() {
        switch (rng_.next() % 3) {
            case 0: return "2";
            case 1: return "3";
            default: return "0.5";
        }
    }

    helix::SplitMix64 rng_;
};

}  // namespace oracles
