#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iterator>
#include <optional>
#include <string>
#include <vector>

#include "helix/common.hpp"
#include "helix/detect.hpp"
#include "helix/families.hpp"
#include "helix/metrics.hpp"
#include "helix/parallel.hpp"

namespace helix::sweep {

enum class ParamAxis { Alpha, Beta };

inline const char* axis_name(ParamAxis a) {
    return a == ParamAxis::Alpha ? "alpha" : "beta";
}

inline families::BoundMap bind_on_axis(const families::FamilySpec& family,
                                       ParamAxis axis, double value,
                                       std::optional<double> fixed_other) {
    if (axis == ParamAxis::Alpha) return families::bind(family, value, fixed_other);
    return families::bind(family, fixed_other, value);
}

struct SweepOptions {
    detect::ClassifyOptions classify;
    int min_steady_points = 10;
    std::int64_t ascending_samples = 10000;
    int threads = 0;
};

struct SweepRecord {
    double param_value = 0.0;
    std::string verdict;  // stable_helix | pseudo_helix_regime | chaotic | error
    int period = 0;       // helix order, or pseudo-helix period
    std::optional<double> mu;
    std::optional<std::string> error;
};

// Classifies every grid point independently; records never throw, per-point
// failures are recorded in the row.
inline std::vector<SweepRecord> classify_grid(const families::FamilySpec& family,
                                              ParamAxis axis, double lo, double hi,
                                              std::int64_t steps,
                                              std::optional<double> fixed_other,
                                              double x0,
                                              const SweepOptions& opts = {}) {
    if (!(lo < hi) || steps < 2)
        throw Error("classify_grid: need lo < hi and steps >= 2");
    std::vector<SweepRecord> records(static_cast<std::size_t>(steps));
    const double step = (hi - lo) / static_cast<double>(steps - 1);
    parallel_for(
        static_cast<std::size_t>(steps),
        [&](std::size_t i) {
            SweepRecord rec;
            rec.param_value = lo + step * static_cast<double>(i);
            try {
                auto map = bind_on_axis(family, axis, rec.param_value, fixed_other);
                if (!families::validate_ascending(map, x0, x0 + 2.0,
                                                  opts.ascending_samples))
                    throw DomainError("map is not ascending on [x0, x0+2]");
                auto c = detect::classify(map, x0, opts.classify);
                rec.verdict = detect::verdict_name(c.verdict);
                if (c.verdict == detect::Verdict::StableHelix) {
                    rec.period = c.helix->period;
                } else if (c.verdict == detect::Verdict::PseudoHelixRegime) {
                    rec.period = c.pseudo_period;
                    const auto orders = detect::collect_steady_orders(c.segments);
                    if (static_cast<int>(orders.size()) >= opts.min_steady_points)
                        rec.mu = metrics::average_periodicity(orders);
                }
            } catch (const std::exception& e) {
                rec.verdict = "error";
                rec.error = e.what();
            }
            records[i] = std::move(rec);
        },
        opts.threads);
    return records;
}

// ---------------------------------------------------------------------------
// Boundary location

struct BoundaryResult {
    double boundary = 0.0;
    double bracket_lo = 0.0;
    double bracket_hi = 0.0;
    int iterations = 0;
    bool converged = false;
    bool lo_is_helix = false;
};

// Bisection of an arbitrary helix predicate; the production predicate is
// classify() == StableHelix, tests may inject a step function.
inline BoundaryResult bisect_boundary(const std::function<bool(double)>& is_helix,
                                      double lo, double hi, double tol = 1e-9,
                                      int iter_max = 60) {
    if (!(lo < hi)) throw Error("bisect_boundary: need lo < hi");
    BoundaryResult r;
    r.lo_is_helix = is_helix(lo);
    const bool hi_helix = is_helix(hi);
    if (r.lo_is_helix == hi_helix)
        throw SearchError("bisect_boundary: bracket does not straddle a boundary");
    while (r.iterations < iter_max && (hi - lo) > tol) {
        const double mid = 0.5 * (lo + hi);
        if (is_helix(mid) == r.lo_is_helix)
            lo = mid;
        else
            hi = mid;
        ++r.iterations;
    }
    r.bracket_lo = lo;
    r.bracket_hi = hi;
    r.boundary = 0.5 * (lo + hi);
    r.converged = (hi - lo) <= tol;
    return r;
}

inline BoundaryResult find_boundary(const families::FamilySpec& family,
                                    ParamAxis axis, double bracket_lo,
                                    double bracket_hi,
                                    std::optional<double> fixed_other, double x0,
                                    const detect::ClassifyOptions& opts = {},
                                    double tol = 1e-9, int iter_max = 60) {
    auto predicate = [&](double v) {
        auto map = bind_on_axis(family, axis, v, fixed_other);
        return detect::classify(map, x0, opts).verdict == detect::Verdict::StableHelix;
    };
    return bisect_boundary(predicate, bracket_lo, bracket_hi, tol, iter_max);
}

// ---------------------------------------------------------------------------
// mu: average steady-point periodicity as a function of the parameter

struct MuOptions {
    detect::ClassifyOptions classify;
    int min_steady_points = 10;
    std::int64_t regime_check_horizon = 200000;
};

struct MuResult {
    double mu = 0.0;
    std::vector<std::int64_t> orders;
    std::int64_t horizon_used = 0;
    int period = 1;
};

// Measures mu at one parameter value: verify the pseudo-helix regime on a
// moderate horizon, then stream the full horizon through the steady-point
// scanner. Throws when the point classifies as a stable helix or when the
// horizon holds fewer than min_steady_points steady points.
inline MuResult mu(const families::FamilySpec& family, ParamAxis axis,
                   double param_value, std::optional<double> fixed_other,
                   double x0, std::int64_t horizon, const MuOptions& opts = {}) {
    auto map = bind_on_axis(family, axis, param_value, fixed_other);

    detect::ClassifyOptions gate = opts.classify;
    gate.horizon = std::min(horizon, opts.regime_check_horizon);
    gate.transient = std::min(gate.transient, gate.horizon / 4);
    auto c = detect::classify(map, x0, gate);
    if (c.verdict == detect::Verdict::StableHelix)
        throw NotInRegime("mu: parameter is in the stable-helix regime");
    if (c.pseudo_period == 0)
        throw NotInRegime("mu: no periodic stride pattern; not in regime");

    MuResult r;
    r.period = c.pseudo_period;
    r.horizon_used = horizon;
    r.orders = detect::scan_steady_orders(map, x0, horizon, gate.transient,
                                          c.pseudo_period, opts.classify.detector);
    if (static_cast<int>(r.orders.size()) < opts.min_steady_points)
        throw InsufficientData("mu: insufficient steady points (" +
                          std::to_string(r.orders.size()) + " < " +
                          std::to_string(opts.min_steady_points) +
                          "); raise the horizon");
    r.mu = metrics::average_periodicity(r.orders);
    return r;
}

// ---------------------------------------------------------------------------
// mu inversion and the Vier-constant estimate

struct InvertOptions {
    MuOptions mu;
    double mu_rel_tol = 0.05;
    int n_x0 = 3;
    int max_bisect = 60;
    std::int64_t horizon_start = 50000;
    std::int64_t horizon_cap = 100000000;
    double initial_distance = 1e-2;
    double min_distance = 1e-12;
    std::uint64_t seed = 1;
};

struct InvertResult {
    double param = 0.0;
    double distance = 0.0;  // |param - boundary|
    double mu_measured = 0.0;
    double residual = 0.0;  // (mu - target)/target
    int evaluations = 0;
    std::vector<std::string> warnings;
};

enum class ChaoticSide { Below, Above };

inline const char* side_name(ChaoticSide s) {
    return s == ChaoticSide::Below ? "below" : "above";
}

namespace detail {

// Noise-damped mu estimate: average over n_x0 seeded initial values, with
// horizon doubling until enough steady points are seen. Initial values that
// never yield enough steady points within the cap are dropped with a warning.
class MuEvaluator {
public:
    MuEvaluator(const families::FamilySpec& family, ParamAxis axis,
                std::optional<double> fixed_other, double x0_base,
                const InvertOptions& opts)
        : family_(family), axis_(axis), fixed_other_(fixed_other), opts_(opts) {
        x0s_.push_back(x0_base);
        SplitMix64 rng(opts.seed);
        for (int i = 1; i < opts.n_x0; ++i) x0s_.push_back(rng.next_double());
    }

    double operator()(double param_value, std::vector<std::string>* warnings) {
        double sum = 0.0;
        int used = 0;
        for (double x0 : x0s_) {
            std::optional<double> value;
            for (std::int64_t h = opts_.horizon_start; h <= opts_.horizon_cap; h *= 2) {
                try {
                    value = mu(family_, axis_, param_value, fixed_other_, x0, h,
                               opts_.mu).mu;
                    break;
                } catch (const NotInRegime&) {
                    break;
                } catch (const InsufficientData&) {
                    if (2 * h > opts_.horizon_cap) break;
                }
            }
            if (value) {
                sum += *value;
                ++used;
            } else if (warnings) {
                warnings->push_back("mu unavailable at param " +
                                    std::to_string(param_value) + " from x0 " +
                                    std::to_string(x0));
            }
        }
        if (used == 0)
            throw DetectError("mu: no initial value yielded steady points at param " +
                              std::to_string(param_value));
        return sum / static_cast<double>(used);
    }

private:
    const families::FamilySpec& family_;
    ParamAxis axis_;
    std::optional<double> fixed_other_;
    InvertOptions opts_;
    std::vector<double> x0s_;
};

}  // namespace detail

// Core inversion against an arbitrary mu model, parameterized by the distance
// d > 0 from the boundary on the chaotic side. mu_of_distance must grow
// toward the boundary (d -> 0). Bracketing walks d geometrically, then
// bisects on mu(d) - target until the relative residual is inside tol.
inline InvertResult invert_mu_on(const std::function<double(double)>& mu_of_distance,
                                 double boundary, ChaoticSide side, double target_P,
                                 const InvertOptions& opts) {
    if (!(target_P > 0.0)) throw Error("invert_mu: target_P must be positive");
    InvertResult result;
    int evals = 0;
    // Narrow stable-helix windows interleave the chaotic side; when a probe
    // lands inside one, retry at slightly nudged distances before giving up.
    static constexpr double kNudge[] = {1.0,   1.004, 0.996, 1.012,
                                        0.988, 1.024, 0.976};
    const auto probe = [&](double& d) {
        for (double factor : kNudge) {
            const double d_try = d * factor;
            try {
                ++evals;
                const double m = mu_of_distance(d_try);
                d = d_try;
                return m;
            } catch (const DetectError&) {
                if (factor == kNudge[std::size(kNudge) - 1]) throw;
            }
        }
        throw DetectError("invert_mu: unreachable");
    };
    const auto to_param = [&](double d) {
        return side == ChaoticSide::Below ? boundary - d : boundary + d;
    };

    double d_out = opts.initial_distance;
    double mu_out = probe(d_out);

    // Walk outward while mu is still above target (d too close to boundary).
    while (mu_out > target_P) {
        double d_next = 2.0 * d_out;
        double mu_next;
        try {
            mu_next = probe(d_next);
        } catch (const DetectError&) {
            break;  // left the regime; keep the inner point as the outer edge
        }
        if (mu_next > mu_out + opts.mu_rel_tol * mu_out)
            result.warnings.push_back("non-monotone mu while walking outward near d=" +
                                      std::to_string(d_next));
        d_out = d_next;
        mu_out = mu_next;
        if (evals > opts.max_bisect)
            throw SearchError("invert_mu: target below reachable periodicity range");
    }

    // Walk inward until mu exceeds the target.
    double d_in = d_out;
    double mu_in = mu_out;
    while (mu_in < target_P) {
        d_in *= 0.5;
        if (d_in < opts.min_distance)
            throw SearchError("invert_mu: target unreachable within distance budget");
        const double mu_next = probe(d_in);
        if (mu_next < mu_in - 2.0 * opts.mu_rel_tol * mu_in) {
            result.warnings.push_back("non-monotone mu while walking inward near d=" +
                                      std::to_string(d_in));
            if (result.warnings.size() > 8)
                throw SearchError("invert_mu: mu is not monotone toward the boundary");
        }
        mu_in = mu_next;
        if (evals > 4 * opts.max_bisect)
            throw SearchError("invert_mu: bracketing budget exhausted");
    }

    // Bisect [d_in (mu >= target), d_out (mu <= target)] on log-ish scale.
    double best_d = mu_in >= mu_out ? d_in : d_out;
    double best_mu = std::max(mu_in, mu_out);
    const auto rel = [&](double m) { return (m - target_P) / target_P; };
    if (std::fabs(rel(mu_in)) <= opts.mu_rel_tol) {
        best_d = d_in;
        best_mu = mu_in;
    } else if (std::fabs(rel(mu_out)) <= opts.mu_rel_tol) {
        best_d = d_out;
        best_mu = mu_out;
    } else {
        for (int i = 0; i < opts.max_bisect; ++i) {
            double d_mid = std::sqrt(d_in * d_out);
            const double mu_mid = probe(d_mid);
            if (std::fabs(rel(mu_mid)) <= opts.mu_rel_tol) {
                best_d = d_mid;
                best_mu = mu_mid;
                break;
            }
            if (mu_mid >= target_P) {
                d_in = d_mid;
                mu_in = mu_mid;
            } else {
                d_out = d_mid;
                mu_out = mu_mid;
            }
            best_d = mu_in >= target_P ? d_in : d_out;
            best_mu = mu_in >= target_P ? mu_in : mu_out;
        }
        if (std::fabs(rel(best_mu)) > opts.mu_rel_tol)
            throw SearchError("invert_mu: could not reach target within tolerance");
    }

    result.param = to_param(best_d);
    result.distance = best_d;
    result.mu_measured = best_mu;
    result.residual = rel(best_mu);
    result.evaluations = evals;
    return result;
}

inline InvertResult invert_mu(const families::FamilySpec& family, ParamAxis axis,
                              double boundary, ChaoticSide side, double target_P,
                              std::optional<double> fixed_other, double x0,
                              const InvertOptions& opts = {}) {
    detail::MuEvaluator eval(family, axis, fixed_other, x0, opts);
    std::vector<std::string> mu_warnings;
    auto model = [&](double d) {
        const double v = side == ChaoticSide::Below ? boundary - d : boundary + d;
        return eval(v, &mu_warnings);
    };
    InvertResult r = invert_mu_on(model, boundary, side, target_P, opts);
    for (auto& w : mu_warnings) r.warnings.push_back(std::move(w));
    return r;
}

// ---------------------------------------------------------------------------
// Vier estimate

struct VierEstimate {
    double boundary = 0.0;
    ChaoticSide side = ChaoticSide::Below;
    double p0 = 0.0;
    int levels = 0;
    std::vector<double> b;            // b_n = inverse-mu(2^n * P0)
    std::vector<double> ratios;       // (b_{n+1}-b_n) / (b_{n+2}-b_{n+1})
    std::vector<double> mu_residuals; // per level
    std::optional<int> failed_level;
    std::vector<std::string> warnings;
};

inline std::vector<double> successive_ratio(std::span<const double> b) {
    std::vector<double> r;
    for (std::size_t n = 0; n + 2 < b.size(); ++n) {
        const double num = b[n + 1] - b[n];
        const double den = b[n + 2] - b[n + 1];
        if (den == 0.0) throw NumericError("ratio: repeated boundary estimate");
        r.push_back(num / den);
    }
    return r;
}

// Core estimator against an injectable inverter; the production inverter is
// invert_mu, tests may supply closed-form models.
inline VierEstimate vier_estimate_on(
    const std::function<InvertResult(double target_P)>& inverter, double boundary,
    ChaoticSide side, double p0, int levels) {
    if (levels < 3) throw Error("vier_estimate: levels >= 3 required");
    VierEstimate est;
    est.boundary = boundary;
    est.side = side;
    est.p0 = p0;
    est.levels = levels;
    double target = p0;
    for (int n = 0; n < levels; ++n, target *= 2.0) {
        try {
            InvertResult r = inverter(target);
            est.b.push_back(r.param);
            est.mu_residuals.push_back(r.residual);
            for (auto& w : r.warnings) est.warnings.push_back(std::move(w));
        } catch (const std::exception& e) {
            est.failed_level = n;
            est.warnings.push_back("level " + std::to_string(n) + " failed: " + e.what());
            break;
        }
    }
    if (est.b.size() >= 3) est.ratios = successive_ratio(est.b);
    return est;
}

inline VierEstimate vier_estimate(const families::FamilySpec& family, ParamAxis axis,
                                  double boundary, ChaoticSide side, double p0,
                                  int levels, std::optional<double> fixed_other,
                                  double x0, InvertOptions opts = {}) {
    double last_distance = opts.initial_distance;
    auto inverter = [&](double target) {
        InvertOptions level_opts = opts;
        // Successive targets sit strictly closer to the boundary; start the
        // walk from the previous level's distance.
        level_opts.initial_distance = last_distance;
        InvertResult r =
            invert_mu(family, axis, boundary, side, target, fixed_other, x0, level_opts);
        last_distance = r.distance;
        return r;
    };
    return vier_estimate_on(inverter, boundary, side, p0, levels);
}

}  // namespace helix::sweep
