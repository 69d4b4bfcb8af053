#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "helix/common.hpp"
#include "helix/expr.hpp"

namespace helix::families {

// A named map family: an expression plus the record of which of
// {alpha, beta} it actually references.
struct FamilySpec {
    std::string name;
    expr::MapExpr map;
    bool needs_alpha = false;
    bool needs_beta = false;
};

inline FamilySpec make_family(std::string name, std::string_view text) {
    FamilySpec f;
    f.map = expr::parse_map_expr(text);
    f.needs_alpha = f.map.uses_alpha();
    f.needs_beta = f.map.uses_beta();
    f.name = std::move(name);
    return f;
}

// Built-in families. `composite` is monotone with inflection points only;
// the others have one quadratic maximum and one quadratic minimum per
// period. All are periodic in the sense F(x+2) = F(x) + 2.
inline FamilySpec builtin(std::string_view name) {
    if (name == "sine")
        return make_family("sine", "alpha*sin(pi*x)+x+beta");
    if (name == "phi_nested")
        return make_family("phi_nested", "alpha*sin(sin(0.5*pi*x)^2)+x+beta");
    if (name == "psi_nested")
        return make_family("psi_nested", "alpha*sin(sin(pi*x))+x+beta");
    if (name == "composite")
        return make_family("composite",
                           "0.31830988618379*sin(pi*(0.3*sin(pi*x)+x))"
                           "+0.3*sin(pi*x)+x+beta");
    if (name == "phi_positive_schwarzian")
        return make_family("phi_positive_schwarzian",
                           "alpha*0.5*sin(0.5*pi*sin(pi*x))+x+beta");
    throw Error("unknown family '" + std::string(name) +
                "' (expected one of sine, phi_nested, psi_nested, composite, "
                "phi_positive_schwarzian)");
}

inline const std::vector<std::string>& builtin_names() {
    static const std::vector<std::string> names = {
        "sine", "phi_nested", "psi_nested", "composite",
        "phi_positive_schwarzian"};
    return names;
}

// A family with parameter values bound; the single-variable map that gets
// iterated. Value type, cheap to copy, safe to use from multiple threads.
class BoundMap {
public:
    BoundMap(FamilySpec family, std::optional<double> alpha,
             std::optional<double> beta)
        : family_(std::move(family)) {
        if (family_.needs_alpha) {
            if (!alpha) throw Error("family '" + family_.name + "' needs alpha");
            alpha_ = *alpha;
        }
        if (family_.needs_beta) {
            if (!beta) throw Error("family '" + family_.name + "' needs beta");
            beta_ = *beta;
        }
    }

    const FamilySpec& family() const { return family_; }
    double alpha() const { return alpha_; }
    double beta() const { return beta_; }

    double operator()(double x) const {
        return family_.map.eval_value(x, alpha_, beta_);
    }

    expr::Jet3 jet(double x) const {
        return family_.map.eval_jet(x, alpha_, beta_);
    }

private:
    FamilySpec family_;
    double alpha_ = 0.0;
    double beta_ = 0.0;
};

inline BoundMap bind(FamilySpec family, std::optional<double> alpha,
                     std::optional<double> beta) {
    return BoundMap(std::move(family), alpha, beta);
}

// True iff F(x) - x > 0 at every grid sample. F - x is periodic with period
// 2 for every built-in, so a dense grid over one period settles the global
// question for those.
inline bool validate_ascending(const BoundMap& map, double x_lo, double x_hi,
                               std::int64_t samples) {
    if (!(x_lo < x_hi) || samples < 2)
        throw Error("validate_ascending: need x_lo < x_hi and samples >= 2");
    const double step = (x_hi - x_lo) / static_cast<double>(samples - 1);
    for (std::int64_t i = 0; i < samples; ++i) {
        const double x = x_lo + step * static_cast<double>(i);
        const double fx = map(x);
        if (!std::isfinite(fx)) throw DomainError("non-finite map value");
        if (!(fx - x > 0.0)) return false;
    }
    return true;
}

inline constexpr double kDerivativeEpsilon = 1e-9;

// Schwarzian derivative F'''/F' - 1.5 (F''/F')^2, or nullopt where |F'| is
// below eps (quadratic critical points, where the true value runs to -inf).
inline std::optional<double> schwarzian_at(const BoundMap& map, double x,
                                           double eps = kDerivativeEpsilon) {
    const expr::Jet3 j = map.jet(x);
    if (std::fabs(j.v1) < eps) return std::nullopt;
    const double a = j.v3 / j.v1;
    const double b = j.v2 / j.v1;
    return a - 1.5 * b * b;
}

struct SchwarzianSample {
    double x = 0.0;
    double value = 0.0;
    bool singular = false;
};

struct SchwarzianReport {
    std::vector<SchwarzianSample> samples;
    bool all_negative = false;  // over non-singular samples only
    std::optional<double> first_positive_sample;
    std::int64_t singular_count = 0;
};

inline SchwarzianReport schwarzian_scan(const BoundMap& map, double x_lo,
                                        double x_hi, std::int64_t samples,
                                        double eps = kDerivativeEpsilon) {
    if (samples < 2) throw Error("schwarzian_scan: samples >= 2 required");
    SchwarzianReport report;
    report.samples.reserve(static_cast<std::size_t>(samples));
    report.all_negative = true;
    const double step = (x_hi - x_lo) / static_cast<double>(samples - 1);
    for (std::int64_t i = 0; i < samples; ++i) {
        const double x = x_lo + step * static_cast<double>(i);
        SchwarzianSample s;
        s.x = x;
        if (auto v = schwarzian_at(map, x, eps)) {
            s.value = *v;
            if (*v >= 0.0) {
                report.all_negative = false;
                if (!report.first_positive_sample && *v > 0.0)
                    report.first_positive_sample = x;
            }
        } else {
            s.singular = true;
            ++report.singular_count;
        }
        report.samples.push_back(s);
    }
    return report;
}

}  // namespace helix::families
