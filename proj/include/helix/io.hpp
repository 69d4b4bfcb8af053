#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "helix/common.hpp"
#include "helix/detect.hpp"
#include "helix/families.hpp"
#include "helix/metrics.hpp"
#include "helix/orbit.hpp"
#include "helix/sweep.hpp"

namespace helix::io {

using json = nlohmann::ordered_json;

// Shortest round-trip decimal for a double; the one float format used in
// every CSV we write, so identical inputs give byte-identical files.
inline std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

// ---------------------------------------------------------------------------
// Series ingestion: two- or three-column table "index value [delta1]",
// whitespace or comma separated, indices contiguous from 1. A third column
// is kept for reference but detectors always recompute differences.

struct IngestedSeries {
    std::vector<double> values;
    std::vector<double> reference_delta;  // empty unless the file had 3 columns
    std::string path;
    std::uint64_t checksum = 0;  // FNV-1a 64 of the raw file bytes

    std::int64_t size() const { return static_cast<std::int64_t>(values.size()); }
};

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    const auto is_sep = [](char c) {
        return c == ' ' || c == '\t' || c == ',' || c == '\r';
    };
    while (i < line.size()) {
        while (i < line.size() && is_sep(line[i])) ++i;
        std::size_t j = i;
        while (j < line.size() && !is_sep(line[j])) ++j;
        if (j > i) out.push_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

inline double parse_double_field(std::string_view s, std::int64_t line_no) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw IoError("malformed number '" + std::string(s) + "' at line " +
                      std::to_string(line_no));
    return v;
}

}  // namespace detail

inline IngestedSeries ingest_series_text(std::string_view text, std::string path = {}) {
    IngestedSeries series;
    series.path = std::move(path);
    series.checksum = fnv1a64(text.data(), text.size());
    std::int64_t line_no = 0;
    std::int64_t expected_index = 1;
    std::size_t pos = 0;
    bool saw_third = false;
    while (pos <= text.size()) {
        const std::size_t eol = text.find('\n', pos);
        const std::string_view line =
            text.substr(pos, eol == std::string_view::npos ? text.size() - pos
                                                           : eol - pos);
        pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
        ++line_no;
        const auto fields = detail::split_fields(line);
        if (fields.empty()) continue;
        if (fields[0].front() == '#') continue;
        if (fields.size() < 2)
            throw IoError("expected 'index value [delta]' at line " +
                          std::to_string(line_no));
        std::int64_t idx = 0;
        const auto res =
            std::from_chars(fields[0].data(), fields[0].data() + fields[0].size(), idx);
        if (res.ec != std::errc() || res.ptr != fields[0].data() + fields[0].size())
            throw IoError("malformed index '" + std::string(fields[0]) +
                          "' at line " + std::to_string(line_no));
        if (idx != expected_index)
            throw IoError("non-contiguous index " + std::to_string(idx) +
                          " (expected " + std::to_string(expected_index) +
                          ") at line " + std::to_string(line_no));
        ++expected_index;
        series.values.push_back(detail::parse_double_field(fields[1], line_no));
        if (fields.size() >= 3) {
            saw_third = true;
            series.reference_delta.push_back(
                detail::parse_double_field(fields[2], line_no));
        } else if (saw_third) {
            throw IoError("missing third column at line " + std::to_string(line_no));
        }
    }
    if (series.values.empty()) throw IoError("no data rows in series file");
    return series;
}

inline IngestedSeries ingest_series(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return ingest_series_text(buf.str(), path);
}

inline std::string checksum_hex(std::uint64_t checksum) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[static_cast<std::size_t>(i)] = digits[checksum & 0xF];
        checksum >>= 4;
    }
    return s;
}

// ---------------------------------------------------------------------------
// CSV writers

inline std::string orbit_csv(std::span<const double> values) {
    std::string out = "index,value,int_part,frac_part,delta1\n";
    for (std::size_t i = 0; i < values.size(); ++i) {
        const auto d = decompose(values[i]);
        out += std::to_string(i + 1);
        out += ',';
        out += format_double(values[i]);
        out += ',';
        out += std::to_string(d.int_part);
        out += ',';
        out += format_double(d.frac_part);
        out += ',';
        if (i + 1 < values.size())
            out += format_double(values[i + 1] - values[i]);
        out += '\n';
    }
    return out;
}

inline std::string sweep_csv(const std::vector<sweep::SweepRecord>& records) {
    std::string out = "param_value,verdict,period,mu\n";
    for (const auto& r : records) {
        out += format_double(r.param_value);
        out += ',';
        out += r.verdict;
        out += ',';
        out += std::to_string(r.period);
        out += ',';
        if (r.mu) out += format_double(*r.mu);
        out += '\n';
    }
    return out;
}

inline std::string schwarzian_csv(const families::SchwarzianReport& report) {
    std::string out = "x,schwarzian,singular\n";
    for (const auto& s : report.samples) {
        out += format_double(s.x);
        out += ',';
        if (!s.singular) out += format_double(s.value);
        out += ',';
        out += s.singular ? '1' : '0';
        out += '\n';
    }
    return out;
}

// ---------------------------------------------------------------------------
// JSON report builders. Every report carries the exact configuration used,
// echoed as a flat string map, so any run can be reproduced from its output.

using Config = std::vector<std::pair<std::string, std::string>>;

inline json config_json(const Config& config) {
    json j = json::object();
    for (const auto& [k, v] : config) j[k] = v;
    return j;
}

inline json helix_json(const detect::HelixReport& h) {
    json j;
    j["period_j"] = h.period;
    j["lambdas"] = h.lambdas;
    j["modulo_step"] = h.modulo_step;
    j["residual"] = h.residual;
    return j;
}

inline json segment_json(const detect::PseudoHelixSegment& s) {
    json j;
    j["start"] = s.start;
    j["length"] = s.length;
    j["period"] = s.period;
    j["has_steady_point"] = s.has_steady_point;
    if (s.has_steady_point) {
        j["steady_k0"] = s.steady_k0;
        j["steady_orders"] = s.steady_orders;
    }
    return j;
}

inline json classification_json(const detect::Classification& c, const Config& config) {
    json j;
    j["config"] = config_json(config);
    j["verdict"] = detect::verdict_name(c.verdict);
    if (c.helix) j["helix"] = helix_json(*c.helix);
    if (c.verdict == detect::Verdict::PseudoHelixRegime || !c.segments.empty()) {
        j["pseudo_period"] = c.pseudo_period;
        json segs = json::array();
        for (const auto& s : c.segments) segs.push_back(segment_json(s));
        j["segments"] = segs;
    }
    j["evidence"] = {{"transient_used", c.evidence.transient_used},
                     {"cycles_checked", c.evidence.cycles_checked},
                     {"segments_found", c.evidence.segments_found},
                     {"horizon", c.evidence.horizon}};
    return j;
}

inline json train_json(const metrics::SteadyPointTrain& t, const Config& config) {
    json j;
    j["config"] = config_json(config);
    j["orders"] = t.orders;
    if (t.average_periodicity)
        j["average_periodicity"] = *t.average_periodicity;
    if (t.quasi_ap) {
        j["quasi_ap"] = {{"verdict", t.quasi_ap->verdict},
                         {"average", t.quasi_ap->average},
                         {"band_lo", t.quasi_ap->band_lo},
                         {"band_hi", t.quasi_ap->band_hi},
                         {"diffs", t.quasi_ap->diffs},
                         {"violations", t.quasi_ap->violations}};
    }
    return j;
}

inline json schwarzian_json(const families::SchwarzianReport& r, const Config& config) {
    json j;
    j["config"] = config_json(config);
    j["all_negative"] = r.all_negative;
    if (r.first_positive_sample) j["first_positive_sample"] = *r.first_positive_sample;
    j["singular_count"] = r.singular_count;
    json values = json::array();
    for (const auto& s : r.samples) {
        if (s.singular)
            values.push_back(nullptr);
        else
            values.push_back(s.value);
    }
    j["x_lo"] = r.samples.front().x;
    j["x_hi"] = r.samples.back().x;
    j["values"] = values;
    return j;
}

inline json chaos_json(const metrics::ChaosModReport& r, const Config& config) {
    json j;
    j["config"] = config_json(config);
    j["note"] = r.note;
    j["verdict"] = r.verdict;
    j["lambda_threshold"] = r.opts.lambda_threshold;
    j["frac_tol"] = r.opts.frac_tol;
    j["seed"] = r.opts.seed;
    j["shifts"] = r.opts.shifts;
    j["spread_min_over_pairs"] = r.spread_min_over_pairs;
    j["spread_max_over_pairs"] = r.spread_max_over_pairs;
    j["min_frac_by_shift"] = r.min_frac_by_shift;
    if (r.best_shift) j["best_shift"] = *r.best_shift;
    json pairs = json::array();
    for (const auto& p : r.pairs) {
        json pj;
        pj["x0"] = p.x0;
        pj["y0"] = p.y0;
        pj["degenerate"] = p.degenerate;
        pj["spread"] = p.spread;
        pj["min_frac"] = p.min_frac;
        pairs.push_back(pj);
    }
    j["pairs"] = pairs;
    return j;
}

inline json boundary_json(const sweep::BoundaryResult& r, const Config& config) {
    json j;
    j["config"] = config_json(config);
    j["boundary"] = r.boundary;
    j["bracket_lo"] = r.bracket_lo;
    j["bracket_hi"] = r.bracket_hi;
    j["iterations"] = r.iterations;
    j["converged"] = r.converged;
    j["lo_is_helix"] = r.lo_is_helix;
    return j;
}

inline json mu_json(const sweep::MuResult& r, const Config& config) {
    json j;
    j["config"] = config_json(config);
    j["mu"] = r.mu;
    j["period"] = r.period;
    j["order_count"] = r.orders.size();
    j["orders"] = r.orders;
    j["horizon_used"] = r.horizon_used;
    return j;
}

inline json vier_json(const sweep::VierEstimate& e, const Config& config) {
    json j;
    j["config"] = config_json(config);
    j["boundary"] = e.boundary;
    j["side"] = sweep::side_name(e.side);
    j["p0"] = e.p0;
    j["levels"] = e.levels;
    j["b"] = e.b;
    j["ratios"] = e.ratios;
    j["mu_residuals"] = e.mu_residuals;
    if (e.failed_level) j["failed_level"] = *e.failed_level;
    j["warnings"] = e.warnings;
    return j;
}

// ---------------------------------------------------------------------------
// Flat key=value run configuration ('#' starts a comment line).

inline Config parse_config_text(std::string_view text) {
    Config out;
    std::int64_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t eol = text.find('\n', pos);
        std::string_view line = text.substr(
            pos, eol == std::string_view::npos ? text.size() - pos : eol - pos);
        pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
        ++line_no;
        while (!line.empty() && (line.back() == '\r' || line.back() == ' '))
            line.remove_suffix(1);
        while (!line.empty() && line.front() == ' ') line.remove_prefix(1);
        if (line.empty() || line.front() == '#') continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string_view::npos)
            throw IoError("expected key=value at line " + std::to_string(line_no));
        std::string_view key = line.substr(0, eq);
        std::string_view value = line.substr(eq + 1);
        while (!key.empty() && key.back() == ' ') key.remove_suffix(1);
        while (!value.empty() && value.front() == ' ') value.remove_prefix(1);
        if (key.empty())
            throw IoError("empty key at line " + std::to_string(line_no));
        out.emplace_back(std::string(key), std::string(value));
    }
    return out;
}

inline std::string serialize_config(const Config& config) {
    std::string out;
    for (const auto& [k, v] : config) {
        out += k;
        out += '=';
        out += v;
        out += '\n';
    }
    return out;
}

inline void write_file(const std::string& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace helix::io
