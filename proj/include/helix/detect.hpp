#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "helix/common.hpp"
#include "helix/metrics.hpp"
#include "helix/orbit.hpp"

namespace helix::detect {

struct DetectorOptions {
    // Slack for the "strictly decreasing" second-difference comparisons;
    // absorbs last-bit noise only.
    double delta2_slack = 1e-15;
    // Minimum segment length in cycles (length in terms = cycles * p).
    int min_segment_cycles = 5;
};

// A maximal window satisfying the pseudo-helix conditions: nearest-integer
// strides p-periodic, per-phase second differences strictly decreasing with
// at most one sign change. `start` is the 1-based index of the first term.
struct PseudoHelixSegment {
    std::int64_t start = 0;
    std::int64_t length = 0;
    int period = 1;
    bool has_steady_point = false;
    std::int64_t steady_k0 = -1;           // lattice index: steady order = start + p*k0
    std::vector<std::int64_t> steady_orders;  // the block start+p*k0 .. start+p*k0+p-1
};

// Incremental detector fed with first differences delta1(n) = u(n+1) - u(n)
// in index order. Holds O(p) state plus a small replay ring, so it runs over
// arbitrarily long orbits.
class PseudoHelixScanner {
public:
    PseudoHelixScanner(int p, DetectorOptions opts, std::int64_t first_value_index)
        : p_(p),
          opts_(opts),
          ring_(static_cast<std::size_t>(4 * p + 16)),
          next_index_(first_value_index) {
        if (p < 1) throw Error("scanner: p >= 1 required");
        reset_window(first_value_index);
    }

    // Feeds delta1(n) for the next n in sequence.
    void feed(double delta) {
        const std::int64_t n = next_index_++;
        ring_[static_cast<std::size_t>(n % ring_size())] = delta;
        if (!apply(n, delta)) return;

        // Violation: the window cannot contain u(n+1). Close it, then retry
        // later starts replayed from the ring until one survives to n. Any
        // start older than the replay ring cannot produce a window that
        // extends past the break, so the candidate set is complete.
        close_window(n);
        std::int64_t cand = std::max(window_start_ + 1, n - 3 * p_ + 2);
        for (;;) {
            reset_window(cand);
            bool broke = false;
            for (std::int64_t m = cand; m <= n; ++m) {
                if (apply(m, ring_[static_cast<std::size_t>(m % ring_size())])) {
                    close_window(m);
                    cand = std::max(cand + 1, m - 3 * p_ + 2);
                    broke = true;
                    break;
                }
            }
            if (!broke) break;
        }
    }

    // Closes the trailing window at end of data (maximality is vacuous there).
    void finish() {
        if (finished_) return;
        if (next_index_ > window_start_) close_at(next_index_);
        finished_ = true;
    }

    const std::vector<PseudoHelixSegment>& segments() const { return segments_; }
    std::vector<PseudoHelixSegment> take_segments() { return std::move(segments_); }

private:
    struct PhaseState {
        double prev_d = 0.0;
        double prev_dd = 0.0;
        int have = 0;  // 0: nothing, 1: prev_d, 2: prev_d + prev_dd
        std::int64_t dd_count = 0;
        std::int64_t flip_k = -1;
        bool strict_decrease_seen = false;
    };

    std::int64_t ring_size() const { return static_cast<std::int64_t>(ring_.size()); }

    void reset_window(std::int64_t s) {
        window_start_ = s;
        strides_.assign(static_cast<std::size_t>(p_), 0);
        phases_.assign(static_cast<std::size_t>(p_), PhaseState{});
    }

    // Applies delta1(n) to the current window; true means violation.
    bool apply(std::int64_t n, double delta) {
        const std::int64_t offset = n - window_start_;
        const std::int64_t j = stride(delta);
        if (offset < p_) {
            strides_[static_cast<std::size_t>(offset)] = j;
        } else if (j != strides_[static_cast<std::size_t>(offset % p_)]) {
            return true;
        }

        // delta1(n) completes the phase difference d starting at value index
        // a = n - p + 1 when that lattice point lies inside the window.
        const std::int64_t a = n - p_ + 1;
        if (a < window_start_) return false;
        double d = 0.0;
        for (std::int64_t m = a; m <= n; ++m)
            d += ring_[static_cast<std::size_t>(m % ring_size())];
        PhaseState& ph = phases_[static_cast<std::size_t>((a - window_start_) % p_)];
        if (ph.have == 0) {
            ph.prev_d = d;
            ph.have = 1;
            return false;
        }
        const double dd = d - ph.prev_d;
        ph.prev_d = d;
        if (ph.have == 2) {
            if (dd > ph.prev_dd + opts_.delta2_slack) return true;
            if (dd < ph.prev_dd) ph.strict_decrease_seen = true;
        }
        if (ph.flip_k < 0) {
            if (dd <= 0.0) ph.flip_k = ph.dd_count;
        } else if (dd > opts_.delta2_slack) {
            return true;  // sign regression after the flip
        }
        ph.prev_dd = dd;
        ph.have = 2;
        ++ph.dd_count;
        return false;
    }

    // Close with e = n: the violating delta1(n) links u(n) to u(n+1), so the
    // window keeps values up to u(n).
    void close_window(std::int64_t n) { close_at(n); }

    void close_at(std::int64_t e) {
        const std::int64_t len = e - window_start_ + 1;
        if (len < static_cast<std::int64_t>(opts_.min_segment_cycles) * p_) return;
        bool all_strict = true;
        bool all_flipped = true;
        bool flips_equal = true;
        std::int64_t k0 = -1;
        for (const PhaseState& ph : phases_) {
            if (!ph.strict_decrease_seen) all_strict = false;
            if (ph.flip_k < 1) all_flipped = false;  // needs a positive prefix
            if (k0 < 0)
                k0 = ph.flip_k;
            else if (ph.flip_k != k0)
                flips_equal = false;
        }
        if (!all_strict) return;
        PseudoHelixSegment seg;
        seg.start = window_start_;
        seg.length = len;
        seg.period = p_;
        if (all_flipped && flips_equal) {
            seg.has_steady_point = true;
            seg.steady_k0 = k0;
            for (int j = 0; j < p_; ++j)
                seg.steady_orders.push_back(window_start_ + static_cast<std::int64_t>(p_) * k0 + j);
        }
        segments_.push_back(std::move(seg));
    }

    int p_;
    DetectorOptions opts_;
    std::vector<double> ring_;
    std::vector<std::int64_t> strides_;
    std::vector<PhaseState> phases_;
    std::int64_t window_start_ = 1;
    std::int64_t next_index_ = 1;
    bool finished_ = false;
    std::vector<PseudoHelixSegment> segments_;
};

// Maximal pseudo-helix windows of a materialized series (1-based indices).
inline std::vector<PseudoHelixSegment> segment_pseudo_helices(
    std::span<const double> values, int p, DetectorOptions opts = {}) {
    PseudoHelixScanner scanner(p, opts, 1);
    for (std::size_t i = 0; i + 1 < values.size(); ++i)
        scanner.feed(values[i + 1] - values[i]);
    scanner.finish();
    return scanner.take_segments();
}

inline std::vector<PseudoHelixSegment> segment_pseudo_helices(
    const orbit::OrbitSeries& series, int p, DetectorOptions opts = {}) {
    return segment_pseudo_helices(std::span<const double>(series.values), p, opts);
}

// Representative steady orders: the phase-0 order (start + p*k0) of every
// segment that has a steady point.
inline std::vector<std::int64_t> collect_steady_orders(
    const std::vector<PseudoHelixSegment>& segments) {
    std::vector<std::int64_t> orders;
    for (const auto& s : segments)
        if (s.has_steady_point) orders.push_back(s.steady_orders.front());
    return orders;
}

inline metrics::SteadyPointTrain steady_points(std::span<const double> values,
                                               int p, DetectorOptions opts = {}) {
    return metrics::analyze_train(
        collect_steady_orders(segment_pseudo_helices(values, p, opts)));
}

inline metrics::SteadyPointTrain steady_points(const orbit::OrbitSeries& series,
                                               int p, DetectorOptions opts = {}) {
    return steady_points(std::span<const double>(series.values), p, opts);
}

// Smallest p <= p_max for which the nearest-integer strides are p-periodic
// over the trailing window, or nullopt. The trailing window is the last half
// of the stride sequence, widened to at least 4*p_max strides when available.
inline std::optional<int> infer_period_strides(std::span<const std::int64_t> strides,
                                               int p_max) {
    const auto w = static_cast<std::int64_t>(strides.size());
    for (int p = 1; p <= p_max; ++p) {
        if (2 * p > w) break;
        bool ok = true;
        for (std::int64_t i = 0; i + p < w; ++i) {
            if (strides[static_cast<std::size_t>(i)] !=
                strides[static_cast<std::size_t>(i + p)]) {
                ok = false;
                break;
            }
        }
        if (ok) return p;
    }
    return std::nullopt;
}

// Burst-tolerant variant for live orbits: in a pseudo-helix regime the
// stride pattern is p-periodic inside the quasi-periodic windows but the
// chaotic episodes break exact periodicity, so instead of demanding a
// perfect match this accepts the smallest p whose match fraction across the
// window clears the threshold.
inline std::optional<int> infer_period_strides_tolerant(
    std::span<const std::int64_t> strides, int p_max, double match_threshold) {
    const auto w = static_cast<std::int64_t>(strides.size());
    for (int p = 1; p <= p_max; ++p) {
        if (4 * p > w) break;
        std::int64_t hits = 0;
        const std::int64_t total = w - p;
        for (std::int64_t i = 0; i + p < w; ++i) {
            if (strides[static_cast<std::size_t>(i)] ==
                strides[static_cast<std::size_t>(i + p)])
                ++hits;
        }
        if (static_cast<double>(hits) >=
            match_threshold * static_cast<double>(total))
            return p;
    }
    return std::nullopt;
}

inline std::optional<int> infer_period(std::span<const double> values, int p_max) {
    const auto n = static_cast<std::int64_t>(values.size());
    if (p_max < 1) throw Error("infer_period: p_max >= 1 required");
    if (n < 4 * static_cast<std::int64_t>(p_max))
        throw DetectError("infer_period: series too short (need length >= 4*p_max)");
    const std::int64_t total = n - 1;
    const std::int64_t w = std::min(total, std::max<std::int64_t>(4 * p_max, total / 2));
    std::vector<std::int64_t> strides(static_cast<std::size_t>(w));
    for (std::int64_t i = 0; i < w; ++i) {
        const std::size_t k = static_cast<std::size_t>(total - w + i);
        strides[static_cast<std::size_t>(i)] = stride(values[k + 1] - values[k]);
    }
    return infer_period_strides(strides, p_max);
}

inline std::optional<int> infer_period(const orbit::OrbitSeries& series, int p_max) {
    return infer_period(std::span<const double>(series.values), p_max);
}

// ---------------------------------------------------------------------------
// Orbit classification

struct ClassifyOptions {
    std::int64_t transient = 10000;
    int confirm_cycles = 100;
    double tol = 1e-6;
    int p_max = 128;
    std::int64_t horizon = 100000;
    int min_segments = 2;  // segments with steady points needed for the regime verdict
    double stride_match_threshold = 0.9;  // burst-tolerant period inference
    DetectorOptions detector;
};

struct HelixReport {
    int period = 0;
    std::vector<double> lambdas;
    std::int64_t modulo_step = 0;
    double residual = 0.0;
};

enum class Verdict { StableHelix, PseudoHelixRegime, Chaotic };

inline const char* verdict_name(Verdict v) {
    switch (v) {
        case Verdict::StableHelix: return "stable_helix";
        case Verdict::PseudoHelixRegime: return "pseudo_helix_regime";
        case Verdict::Chaotic: return "chaotic";
    }
    return "?";
}

struct Evidence {
    std::int64_t transient_used = 0;
    int cycles_checked = 0;
    std::int64_t segments_found = 0;
    std::int64_t horizon = 0;
};

struct Classification {
    Verdict verdict = Verdict::Chaotic;
    std::optional<HelixReport> helix;
    int pseudo_period = 0;
    std::vector<PseudoHelixSegment> segments;
    Evidence evidence;
};

namespace detail {

// Fixed-capacity ring holding the most recent values of a stream.
class TailRing {
public:
    explicit TailRing(std::int64_t capacity)
        : buf_(static_cast<std::size_t>(capacity)) {}

    void push(double v) {
        buf_[static_cast<std::size_t>(count_ % capacity())] = v;
        ++count_;
    }

    std::int64_t size() const { return std::min(count_, capacity()); }

    // back(0) is the newest element, back(1) the one before, ...
    double back(std::int64_t i) const {
        return buf_[static_cast<std::size_t>((count_ - 1 - i) % capacity())];
    }

private:
    std::int64_t capacity() const { return static_cast<std::int64_t>(buf_.size()); }
    std::vector<double> buf_;
    std::int64_t count_ = 0;
};

inline std::optional<HelixReport> helix_from_tail(const TailRing& tail,
                                                  const ClassifyOptions& opts) {
    for (int j = 1; j <= opts.p_max; ++j) {
        const std::int64_t need =
            static_cast<std::int64_t>(opts.confirm_cycles) * j + j;
        if (need > tail.size()) break;
        const std::int64_t m = stride(tail.back(0) - tail.back(j));
        double drift = 0.0;
        double residual = 0.0;
        for (std::int64_t t = 0; t < static_cast<std::int64_t>(opts.confirm_cycles) * j; ++t) {
            const double gap = tail.back(t) - tail.back(t + j) - static_cast<double>(m);
            const double g = std::fabs(gap);
            drift = std::max(drift, g);
            if (t < j) residual = std::max(residual, g);
            if (drift >= opts.tol) break;
        }
        if (drift < opts.tol) {
            HelixReport report;
            report.period = j;
            report.modulo_step = m;
            report.residual = residual;
            for (std::int64_t i = j - 1; i >= 0; --i)
                report.lambdas.push_back(frac(tail.back(i)));
            return report;
        }
    }
    return std::nullopt;
}

}  // namespace detail

// Classifies the orbit of `map` from x0: a stable periodic helix when the
// trailing window settles into a j-cycle modulo 1 within tol; otherwise a
// pseudo-helix regime when at least `min_segments` windows with steady
// points are found after the transient; otherwise chaotic.
inline Classification classify(const families::BoundMap& map, double x0,
                               const ClassifyOptions& opts = {}) {
    if (opts.horizon <= opts.transient)
        throw Error("classify: horizon must exceed transient");

    const std::int64_t tail_capacity =
        std::min(opts.horizon,
                 static_cast<std::int64_t>(opts.confirm_cycles + 1) * opts.p_max + 4);
    detail::TailRing tail(tail_capacity);

    const std::int64_t stride_window = std::min(
        opts.horizon - opts.transient > 1 ? opts.horizon - opts.transient - 1
                                          : std::int64_t{1},
        std::max<std::int64_t>(4 * opts.p_max, 1024));
    std::vector<std::int64_t> strides(static_cast<std::size_t>(stride_window));
    std::int64_t stride_count = 0;

    orbit::ReducedWalker walker(map, x0);
    tail.push(walker.value());
    for (std::int64_t n = 1; n < opts.horizon; ++n) {
        const double delta = walker.step();
        tail.push(walker.value());
        strides[static_cast<std::size_t>(stride_count % stride_window)] = stride(delta);
        ++stride_count;
    }

    Classification result;
    result.evidence.transient_used = opts.transient;
    result.evidence.cycles_checked = opts.confirm_cycles;
    result.evidence.horizon = opts.horizon;

    if (auto helix = detail::helix_from_tail(tail, opts)) {
        result.verdict = Verdict::StableHelix;
        result.helix = std::move(helix);
        return result;
    }

    // Unroll the stride ring into trailing order for period inference.
    const std::int64_t w = std::min(stride_count, stride_window);
    std::vector<std::int64_t> trailing(static_cast<std::size_t>(w));
    for (std::int64_t i = 0; i < w; ++i)
        trailing[static_cast<std::size_t>(i)] =
            strides[static_cast<std::size_t>((stride_count - w + i) % stride_window)];
    const auto p = infer_period_strides_tolerant(trailing, opts.p_max,
                                                 opts.stride_match_threshold);

    if (p) {
        result.pseudo_period = *p;
        PseudoHelixScanner scanner(*p, opts.detector, opts.transient + 1);
        orbit::ReducedWalker rescan(map, x0);
        for (std::int64_t n = 1; n < opts.horizon; ++n) {
            const double delta = rescan.step();
            if (n > opts.transient) scanner.feed(delta);
        }
        scanner.finish();
        result.segments = scanner.take_segments();
        result.evidence.segments_found =
            static_cast<std::int64_t>(collect_steady_orders(result.segments).size());
        if (result.evidence.segments_found >= opts.min_segments) {
            result.verdict = Verdict::PseudoHelixRegime;
            return result;
        }
    }
    result.verdict = Verdict::Chaotic;
    return result;
}

// Steady orders of a live orbit, streamed: iterate to `horizon`, skip the
// first `skip` indices, scan with period p. Used by the sweep module where
// horizons can be large.
inline std::vector<std::int64_t> scan_steady_orders(const families::BoundMap& map,
                                                    double x0, std::int64_t horizon,
                                                    std::int64_t skip, int p,
                                                    DetectorOptions opts = {}) {
    PseudoHelixScanner scanner(p, opts, skip + 1);
    orbit::ReducedWalker walker(map, x0);
    for (std::int64_t n = 1; n < horizon; ++n) {
        const double delta = walker.step();
        if (n > skip) scanner.feed(delta);
    }
    scanner.finish();
    return collect_steady_orders(scanner.take_segments());
}

}  // namespace helix::detect
