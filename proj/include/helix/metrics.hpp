#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "helix/common.hpp"
#include "helix/families.hpp"
#include "helix/parallel.hpp"

namespace helix::metrics {

// Average spacing of a steady-order train: (U(n) - U(1)) / (n - 1).
inline double average_periodicity(std::span<const std::int64_t> orders) {
    const auto n = static_cast<std::int64_t>(orders.size());
    if (n < 2) throw DetectError("average_periodicity: need at least 2 orders");
    for (std::int64_t i = 0; i + 1 < n; ++i)
        if (orders[static_cast<std::size_t>(i + 1)] <= orders[static_cast<std::size_t>(i)])
            throw Error("average_periodicity: orders must be strictly increasing");
    return static_cast<double>(orders.back() - orders.front()) /
           static_cast<double>(n - 1);
}

// Quasi arithmetic progression test: every consecutive difference must lie
// within P +- P^(1/3) of the average periodicity P.
struct QuasiApResult {
    double average = 0.0;
    double band_lo = 0.0;
    double band_hi = 0.0;
    std::vector<std::int64_t> diffs;
    std::vector<std::size_t> violations;  // indices into diffs
    bool verdict = false;
};

inline QuasiApResult quasi_ap_check(std::span<const std::int64_t> orders) {
    if (orders.size() < 3) throw DetectError("quasi_ap_check: need at least 3 orders");
    QuasiApResult r;
    r.average = average_periodicity(orders);
    const double tol = std::cbrt(r.average);
    r.band_lo = r.average - tol;
    r.band_hi = r.average + tol;
    for (std::size_t i = 0; i + 1 < orders.size(); ++i)
        r.diffs.push_back(orders[i + 1] - orders[i]);
    for (std::size_t i = 0; i < r.diffs.size(); ++i) {
        const double d = static_cast<double>(r.diffs[i]);
        if (d < r.band_lo || d > r.band_hi) r.violations.push_back(i);
    }
    r.verdict = r.violations.empty();
    return r;
}

struct SteadyPointTrain {
    std::vector<std::int64_t> orders;
    std::optional<double> average_periodicity;
    std::optional<QuasiApResult> quasi_ap;
};

inline SteadyPointTrain analyze_train(std::vector<std::int64_t> orders) {
    SteadyPointTrain t;
    t.orders = std::move(orders);
    if (t.orders.size() >= 2)
        t.average_periodicity = metrics::average_periodicity(t.orders);
    if (t.orders.size() >= 3) t.quasi_ap = quasi_ap_check(t.orders);
    return t;
}

// ---------------------------------------------------------------------------
// Chaos modulo 1

struct ChaosOptions {
    std::int64_t pair_count = 20;
    std::int64_t horizon = 1000000;
    std::int64_t burn_in = 1000;
    std::vector<double> shifts = {0.0, 0.25, 0.5};
    double lambda_threshold = 0.1;
    double frac_tol = 1e-3;
    std::uint64_t seed = 1;
    int threads = 0;  // 0: hardware default
    // Extra pairs evaluated after the sampled ones (tests inject degenerate
    // or handpicked pairs this way).
    std::vector<std::pair<double, double>> extra_pairs;
};

struct ChaosPairStat {
    double x0 = 0.0;
    double y0 = 0.0;
    bool degenerate = false;            // x0 == y0; excluded from aggregates
    double spread = 0.0;                // max |u_x(n) - u_y(n)| over the late window
    std::vector<double> min_frac;       // per shift: min |[u_x+s] - [u_y+s]|
};

// Finite-horizon estimate of the two chaos-modulo-1 conditions. Both are
// universally quantified over pairs, so the verdict takes the worst pair on
// each side: the smallest spread must still clear lambda, and for some shift
// the largest per-pair minimum fractional distance must still drop below
// frac_tol. This is an estimator, not a proof.
struct ChaosModReport {
    ChaosOptions opts;
    std::vector<ChaosPairStat> pairs;
    double spread_min_over_pairs = 0.0;
    double spread_max_over_pairs = 0.0;     // observed macroscopic separation
    std::vector<double> min_frac_by_shift;  // per shift: max over pairs of per-pair min
    std::optional<std::size_t> best_shift;
    bool verdict = false;
    std::string note =
        "finite-horizon estimate of the chaos-modulo-1 conditions, not a proof";
};

inline bool chaos_verdict(const ChaosModReport& report, double lambda_threshold,
                          double frac_tol) {
    bool any_pair = false;
    for (const auto& p : report.pairs)
        if (!p.degenerate) any_pair = true;
    if (!any_pair) return false;
    if (report.spread_min_over_pairs < lambda_threshold) return false;
    for (double v : report.min_frac_by_shift)
        if (v < frac_tol) return true;
    return false;
}

inline ChaosModReport chaos_mod1_test(const families::BoundMap& map,
                                      const ChaosOptions& opts = {}) {
    if (opts.horizon <= opts.burn_in)
        throw Error("chaos_mod1_test: horizon must exceed burn_in");
    for (double s : opts.shifts)
        if (s <= -1.0 || s >= 1.0)
            throw Error("chaos_mod1_test: shifts must lie in (-1, 1)");

    ChaosModReport report;
    report.opts = opts;

    std::vector<std::pair<double, double>> starts;
    SplitMix64 rng(opts.seed);
    for (std::int64_t i = 0; i < opts.pair_count; ++i) {
        const double x = rng.next_double();
        const double y = rng.next_double();
        starts.emplace_back(x, y);
    }
    for (const auto& p : opts.extra_pairs) starts.push_back(p);

    report.pairs.resize(starts.size());
    const auto shifts = opts.shifts;
    parallel_for(
        starts.size(),
        [&](std::size_t i) {
            ChaosPairStat stat;
            stat.x0 = starts[i].first;
            stat.y0 = starts[i].second;
            stat.degenerate = stat.x0 == stat.y0;
            stat.min_frac.assign(shifts.size(), 1.0);
            double ux = stat.x0, uy = stat.y0;
            for (std::int64_t n = 1; n < opts.horizon; ++n) {
                ux = map(ux);
                uy = map(uy);
                if (!std::isfinite(ux) || !std::isfinite(uy))
                    throw OrbitError("non-finite orbit value", n + 1);
                if (n <= opts.burn_in) continue;
                stat.spread = std::max(stat.spread, std::fabs(ux - uy));
                for (std::size_t s = 0; s < shifts.size(); ++s) {
                    const double d =
                        std::fabs(frac(ux + shifts[s]) - frac(uy + shifts[s]));
                    stat.min_frac[s] = std::min(stat.min_frac[s], d);
                }
            }
            report.pairs[i] = std::move(stat);
        },
        opts.threads);

    report.min_frac_by_shift.assign(opts.shifts.size(), 0.0);
    bool first = true;
    for (const auto& p : report.pairs) {
        if (p.degenerate) continue;
        if (first) {
            report.spread_min_over_pairs = p.spread;
            report.spread_max_over_pairs = p.spread;
            first = false;
        } else {
            report.spread_min_over_pairs = std::min(report.spread_min_over_pairs, p.spread);
            report.spread_max_over_pairs = std::max(report.spread_max_over_pairs, p.spread);
        }
        for (std::size_t s = 0; s < p.min_frac.size(); ++s)
            report.min_frac_by_shift[s] =
                std::max(report.min_frac_by_shift[s], p.min_frac[s]);
    }
    report.verdict = chaos_verdict(report, opts.lambda_threshold, opts.frac_tol);
    if (report.verdict) {
        std::size_t best = 0;
        for (std::size_t s = 1; s < report.min_frac_by_shift.size(); ++s)
            if (report.min_frac_by_shift[s] < report.min_frac_by_shift[best]) best = s;
        report.best_shift = best;
    }
    return report;
}

}  // namespace helix::metrics
