#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "helix/common.hpp"
#include "helix/families.hpp"

namespace helix::orbit {

// Materialized orbit u(1..N) with u(1) = x0. Iteration is sequential by
// nature; distinct orbits may be produced concurrently.
struct OrbitSeries {
    double x0 = 0.0;
    double alpha = 0.0;
    double beta = 0.0;
    std::vector<double> values;  // values[i] = u(i+1)

    std::int64_t size() const { return static_cast<std::int64_t>(values.size()); }
    double u(std::int64_t n) const { return values[static_cast<std::size_t>(n - 1)]; }
};

// Streams u(1..n) into sink(index, value) without materializing the series.
template <typename Sink>
void iterate_stream(const families::BoundMap& map, double x0, std::int64_t n,
                    Sink&& sink) {
    if (n < 1) throw Error("iterate: n >= 1 required");
    double u = x0;
    sink(std::int64_t{1}, u);
    for (std::int64_t i = 2; i <= n; ++i) {
        const double next = map(u);
        if (!std::isfinite(next)) throw OrbitError("non-finite orbit value", i);
        if (!(next > u)) throw OrbitError("descending step (map is not ascending here)", i);
        u = next;
        sink(i, u);
    }
}

inline OrbitSeries iterate(const families::BoundMap& map, double x0,
                           std::int64_t n) {
    OrbitSeries s;
    s.x0 = x0;
    s.alpha = map.alpha();
    s.beta = map.beta();
    s.values.reserve(static_cast<std::size_t>(n));
    iterate_stream(map, x0, n, [&](std::int64_t, double v) { s.values.push_back(v); });
    return s;
}

// Long-horizon walker that keeps the iterate reduced modulo the map period 2
// (valid because every built-in satisfies F(x+2) = F(x) + 2). The reduced
// coordinate keeps one-step differences at full double precision no matter
// how far the orbit has climbed; the winding count carries the integer part.
class ReducedWalker {
public:
    ReducedWalker(const families::BoundMap& map, double x0)
        : map_(&map) {
        const double base = std::floor(x0 / 2.0) * 2.0;
        winding_ = static_cast<std::int64_t>(base / 2.0);
        y_ = x0 - base;
    }

    // Advances one step and returns delta1 = u(n+1) - u(n).
    double step() {
        const double fy = (*map_)(y_);
        if (!std::isfinite(fy)) throw OrbitError("non-finite orbit value", index_ + 1);
        const double delta = fy - y_;
        if (!(delta > 0.0)) throw OrbitError("descending step (map is not ascending here)", index_ + 1);
        const double base = std::floor(fy / 2.0) * 2.0;
        winding_ += static_cast<std::int64_t>(base / 2.0);
        y_ = fy - base;
        ++index_;
        return delta;
    }

    std::int64_t index() const { return index_; }  // current term's 1-based index
    double reduced() const { return y_; }
    double value() const { return 2.0 * static_cast<double>(winding_) + y_; }

private:
    const families::BoundMap* map_;
    double y_ = 0.0;
    std::int64_t winding_ = 0;
    std::int64_t index_ = 1;
};

// First differences plus the per-phase second-difference columns used by
// the pseudo-helix conditions: for phase j in {0..p-1},
//   d_j(k)      = u(1 + p(k+1) + j) - u(1 + pk + j)
//   delta2_j(k) = d_j(k+1) - d_j(k).
struct DiffColumns {
    std::vector<double> delta1;
    std::vector<std::vector<double>> delta2_by_phase;
};

inline DiffColumns diff_columns(std::span<const double> values, int p) {
    const auto n = static_cast<std::int64_t>(values.size());
    if (p < 1) throw Error("diff_columns: p >= 1 required");
    if (n < 3 * p) throw DetectError("diff_columns: series too short");
    DiffColumns out;
    out.delta1.resize(static_cast<std::size_t>(n - 1));
    for (std::int64_t i = 0; i + 1 < n; ++i)
        out.delta1[static_cast<std::size_t>(i)] = values[static_cast<std::size_t>(i + 1)] -
                                                  values[static_cast<std::size_t>(i)];
    out.delta2_by_phase.resize(static_cast<std::size_t>(p));
    for (int j = 0; j < p; ++j) {
        auto& col = out.delta2_by_phase[static_cast<std::size_t>(j)];
        for (std::int64_t k = 0;; ++k) {
            const std::int64_t i0 = p * k + j;          // 0-based index of u(1+pk+j)
            const std::int64_t i2 = i0 + 2 * p;
            if (i2 >= n) break;
            const double d0 = values[static_cast<std::size_t>(i0 + p)] -
                              values[static_cast<std::size_t>(i0)];
            const double d1 = values[static_cast<std::size_t>(i2)] -
                              values[static_cast<std::size_t>(i0 + p)];
            col.push_back(d1 - d0);
        }
    }
    return out;
}

inline DiffColumns diff_columns(const OrbitSeries& series, int p) {
    return diff_columns(std::span<const double>(series.values), p);
}

using helix::decompose;
using helix::Decomposed;

}  // namespace helix::orbit
