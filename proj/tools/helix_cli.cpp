// helix: iterate unbounded maps, classify orbits, measure steady points, and
// estimate the order-chaos scaling constant.
//
// Exit codes: 0 success, 1 usage error, 2 numeric/detection failure, 3 I/O.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "helix/detect.hpp"
#include "helix/families.hpp"
#include "helix/io.hpp"
#include "helix/metrics.hpp"
#include "helix/orbit.hpp"
#include "helix/sweep.hpp"

namespace {

using helix::io::Config;
using helix::io::format_double;

struct CommonArgs {
    std::string config_path;
    std::string out_path;
    std::string format;  // "", "json", "csv"
    std::uint64_t seed = 1;
};

struct MapArgs {
    std::string family;
    std::string expr_text;
    std::optional<double> alpha;
    std::optional<double> beta;
};

void add_common(CLI::App* cmd, CommonArgs& args, const std::string& default_format) {
    args.format = default_format;
    cmd->add_option("--config", args.config_path,
                    "flat key=value file; command-line flags override it");
    cmd->add_option("--out", args.out_path, "output path (default: stdout)");
    cmd->add_option("--format", args.format, "output format: json or csv")
        ->check(CLI::IsMember({"json", "csv"}));
    cmd->add_option("--seed", args.seed, "seed for any randomized sampling");
}

void add_map(CLI::App* cmd, MapArgs& args, bool need_x0 = false, double* x0 = nullptr) {
    cmd->add_option("--family", args.family,
                    "built-in family: sine, phi_nested, psi_nested, composite, "
                    "phi_positive_schwarzian");
    cmd->add_option("--expr", args.expr_text,
                    "custom map expression over x, alpha, beta, pi, sin, cos");
    cmd->add_option("--alpha", args.alpha, "alpha parameter value");
    cmd->add_option("--beta", args.beta, "beta parameter value");
    if (need_x0)
        cmd->add_option("--x0", *x0, "initial value u(1)")->capture_default_str();
}

helix::families::FamilySpec resolve_family(const MapArgs& args) {
    if (!args.expr_text.empty() && !args.family.empty())
        throw CLI::ValidationError("--family and --expr are mutually exclusive");
    if (!args.expr_text.empty())
        return helix::families::make_family("custom", args.expr_text);
    if (!args.family.empty()) return helix::families::builtin(args.family);
    throw CLI::ValidationError("one of --family or --expr is required");
}

helix::families::BoundMap resolve_map(const MapArgs& args) {
    return helix::families::bind(resolve_family(args), args.alpha, args.beta);
}

void config_put(Config& cfg, const std::string& key, const std::string& v) {
    cfg.emplace_back(key, v);
}

void config_put(Config& cfg, const std::string& key, double v) {
    cfg.emplace_back(key, format_double(v));
}

void config_put(Config& cfg, const std::string& key, std::int64_t v) {
    cfg.emplace_back(key, std::to_string(v));
}

void config_put(Config& cfg, const std::string& key, int v) {
    cfg.emplace_back(key, std::to_string(v));
}

void config_put(Config& cfg, const std::string& key, std::uint64_t v) {
    cfg.emplace_back(key, std::to_string(v));
}

void config_put_map(Config& cfg, const MapArgs& args) {
    if (!args.family.empty()) config_put(cfg, "family", args.family);
    if (!args.expr_text.empty()) config_put(cfg, "expr", args.expr_text);
    if (args.alpha) config_put(cfg, "alpha", *args.alpha);
    if (args.beta) config_put(cfg, "beta", *args.beta);
}

void emit(const CommonArgs& common, const std::string& content) {
    if (common.out_path.empty()) {
        std::fwrite(content.data(), 1, content.size(), stdout);
        if (!content.empty() && content.back() != '\n') std::fputc('\n', stdout);
    } else {
        helix::io::write_file(common.out_path, content);
    }
}

void emit_json(const CommonArgs& common, const helix::io::json& j) {
    if (common.format == "csv")
        throw CLI::ValidationError("this subcommand has no csv form; use --format json");
    emit(common, j.dump(2));
}

std::vector<std::int64_t> parse_int_list(const std::string& text) {
    std::vector<std::int64_t> out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t comma = text.find(',', pos);
        if (comma == std::string::npos) comma = text.size();
        out.push_back(std::stoll(text.substr(pos, comma - pos)));
        pos = comma + 1;
    }
    return out;
}

std::vector<double> parse_double_list(const std::string& text) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t comma = text.find(',', pos);
        if (comma == std::string::npos) comma = text.size();
        out.push_back(std::stod(text.substr(pos, comma - pos)));
        pos = comma + 1;
    }
    return out;
}

helix::sweep::ParamAxis parse_axis(const std::string& name) {
    if (name == "alpha") return helix::sweep::ParamAxis::Alpha;
    if (name == "beta") return helix::sweep::ParamAxis::Beta;
    throw CLI::ValidationError("--param must be alpha or beta");
}

helix::sweep::ChaoticSide parse_side(const std::string& name) {
    if (name == "below" || name == "left") return helix::sweep::ChaoticSide::Below;
    if (name == "above" || name == "right") return helix::sweep::ChaoticSide::Above;
    throw CLI::ValidationError("--side must be below/left or above/right");
}

// ---------------------------------------------------------------------------
// The application is rebuilt from scratch when a config file is present, so
// file values act as defaults and explicit flags override them.

struct Cli {
    CLI::App app{"orbit analysis for unbounded maps F(x) = alpha*f(x) + x + beta"};

    // iterate
    CommonArgs it_common;
    MapArgs it_map;
    double it_x0 = 0.5;
    std::int64_t it_n = 100;

    // classify
    CommonArgs cl_common;
    MapArgs cl_map;
    double cl_x0 = 0.5;
    helix::detect::ClassifyOptions cl_opts;

    // steady-points
    CommonArgs sp_common;
    MapArgs sp_map;
    std::string sp_ingest;
    double sp_x0 = 0.5;
    std::int64_t sp_horizon = 100000;
    std::int64_t sp_skip = 0;
    int sp_period = 0;  // 0: infer
    int sp_p_max = 16;

    // quasi-ap
    CommonArgs qa_common;
    std::string qa_orders;

    // schwarzian
    CommonArgs sch_common;
    MapArgs sch_map;
    double sch_lo = 0.0;
    double sch_hi = 2.0;
    std::int64_t sch_samples = 10000;

    // chaos-test
    CommonArgs ch_common;
    MapArgs ch_map;
    helix::metrics::ChaosOptions ch_opts;
    std::string ch_shifts = "0,0.25,0.5";

    // sweep
    CommonArgs sw_common;
    MapArgs sw_map;
    std::string sw_param = "beta";
    double sw_lo = 0.0, sw_hi = 1.0;
    std::int64_t sw_steps = 11;
    double sw_x0 = 0.5;
    helix::sweep::SweepOptions sw_opts;

    // boundary
    CommonArgs bd_common;
    MapArgs bd_map;
    std::string bd_param = "beta";
    double bd_lo = 0.0, bd_hi = 1.0;
    double bd_x0 = 0.5;
    double bd_tol = 1e-9;
    int bd_iter_max = 60;
    helix::detect::ClassifyOptions bd_opts;

    // mu
    CommonArgs mu_common;
    MapArgs mu_map;
    std::string mu_param = "beta";
    double mu_value = 0.0;
    double mu_x0 = 0.5;
    std::int64_t mu_horizon = 400000;
    helix::sweep::MuOptions mu_opts;

    // vier
    CommonArgs vr_common;
    MapArgs vr_map;
    std::string vr_param = "beta";
    std::string vr_side = "below";
    std::optional<double> vr_boundary;
    double vr_bracket_lo = 0.0, vr_bracket_hi = 0.0;
    double vr_x0 = 0.5;
    double vr_p0 = 50.0;
    int vr_levels = 4;
    helix::sweep::InvertOptions vr_opts;
    helix::detect::ClassifyOptions vr_cl_opts;

    // ingest
    CommonArgs in_common;
    std::string in_path;

    CLI::App* c_iterate = nullptr;
    CLI::App* c_classify = nullptr;
    CLI::App* c_steady = nullptr;
    CLI::App* c_quasi = nullptr;
    CLI::App* c_schwarzian = nullptr;
    CLI::App* c_chaos = nullptr;
    CLI::App* c_sweep = nullptr;
    CLI::App* c_boundary = nullptr;
    CLI::App* c_mu = nullptr;
    CLI::App* c_vier = nullptr;
    CLI::App* c_ingest = nullptr;

    Cli() {
        app.require_subcommand(1);
        app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

        c_iterate = app.add_subcommand("iterate", "iterate a map and dump the orbit");
        add_map(c_iterate, it_map, true, &it_x0);
        c_iterate->add_option("-n,--n", it_n, "orbit length")->capture_default_str();
        add_common(c_iterate, it_common, "csv");

        c_classify = app.add_subcommand(
            "classify", "stable helix / pseudo-helix regime / chaotic verdict");
        add_map(c_classify, cl_map, true, &cl_x0);
        add_classify_opts(c_classify, cl_opts);
        add_common(c_classify, cl_common, "json");

        c_steady = app.add_subcommand(
            "steady-points", "pseudo-helix segments and steady orders");
        add_map(c_steady, sp_map, true, &sp_x0);
        c_steady->add_option("--ingest", sp_ingest, "read the series from a file");
        c_steady->add_option("--horizon", sp_horizon, "orbit length when iterating")
            ->capture_default_str();
        c_steady->add_option("--skip", sp_skip, "indices to skip before scanning")
            ->capture_default_str();
        c_steady->add_option("--period", sp_period,
                             "segment period p (0: infer from strides)")
            ->capture_default_str();
        c_steady->add_option("--p-max", sp_p_max, "largest period tried when inferring")
            ->capture_default_str();
        add_common(c_steady, sp_common, "json");

        c_quasi = app.add_subcommand("quasi-ap",
                                     "quasi arithmetic progression test on orders");
        c_quasi->add_option("--orders", qa_orders,
                            "comma-separated strictly increasing integers")
            ->required();
        add_common(c_quasi, qa_common, "json");

        c_schwarzian =
            app.add_subcommand("schwarzian", "Schwarzian derivative scan of a map");
        add_map(c_schwarzian, sch_map);
        c_schwarzian->add_option("--lo", sch_lo, "scan start")->capture_default_str();
        c_schwarzian->add_option("--hi", sch_hi, "scan end")->capture_default_str();
        c_schwarzian->add_option("--samples", sch_samples, "grid size")
            ->capture_default_str();
        add_common(c_schwarzian, sch_common, "json");

        c_chaos = app.add_subcommand("chaos-test",
                                     "finite-horizon chaos-modulo-1 estimate");
        add_map(c_chaos, ch_map);
        c_chaos->add_option("--pairs", ch_opts.pair_count, "sampled initial pairs")
            ->capture_default_str();
        c_chaos->add_option("--horizon", ch_opts.horizon, "iterates per orbit")
            ->capture_default_str();
        c_chaos->add_option("--burn-in", ch_opts.burn_in, "iterates ignored up front")
            ->capture_default_str();
        c_chaos->add_option("--lambda", ch_opts.lambda_threshold,
                            "macroscopic separation threshold")
            ->capture_default_str();
        c_chaos->add_option("--frac-tol", ch_opts.frac_tol,
                            "fractional closeness threshold")
            ->capture_default_str();
        c_chaos->add_option("--shifts", ch_shifts, "comma-separated shifts in (-1,1)")
            ->capture_default_str();
        c_chaos->add_option("--threads", ch_opts.threads, "worker threads (0: auto)")
            ->capture_default_str();
        add_common(c_chaos, ch_common, "json");

        c_sweep = app.add_subcommand("sweep", "classify a parameter grid");
        add_map(c_sweep, sw_map, true, &sw_x0);
        c_sweep->add_option("--param", sw_param, "swept axis: alpha or beta")
            ->capture_default_str();
        c_sweep->add_option("--lo", sw_lo, "grid start")->required();
        c_sweep->add_option("--hi", sw_hi, "grid end")->required();
        c_sweep->add_option("--steps", sw_steps, "grid size")->capture_default_str();
        add_classify_opts(c_sweep, sw_opts.classify);
        c_sweep->add_option("--min-steady-points", sw_opts.min_steady_points,
                            "steady points required to report mu")
            ->capture_default_str();
        c_sweep->add_option("--threads", sw_opts.threads, "worker threads (0: auto)")
            ->capture_default_str();
        add_common(c_sweep, sw_common, "csv");

        c_boundary = app.add_subcommand(
            "boundary", "bisect an order-chaos boundary inside a bracket");
        add_map(c_boundary, bd_map, true, &bd_x0);
        c_boundary->add_option("--param", bd_param, "axis: alpha or beta")
            ->capture_default_str();
        c_boundary->add_option("--bracket-lo", bd_lo, "bracket start")->required();
        c_boundary->add_option("--bracket-hi", bd_hi, "bracket end")->required();
        c_boundary->add_option("--boundary-tol", bd_tol, "bracket width to stop at")
            ->capture_default_str();
        c_boundary->add_option("--iter-max", bd_iter_max, "bisection budget")
            ->capture_default_str();
        add_classify_opts(c_boundary, bd_opts);
        add_common(c_boundary, bd_common, "json");

        c_mu = app.add_subcommand("mu", "average steady-point periodicity at a point");
        add_map(c_mu, mu_map, true, &mu_x0);
        c_mu->add_option("--param", mu_param, "axis: alpha or beta")
            ->capture_default_str();
        c_mu->add_option("--param-value", mu_value, "value on the swept axis")
            ->required();
        c_mu->add_option("--horizon", mu_horizon, "iterates for the scan")
            ->capture_default_str();
        c_mu->add_option("--min-steady-points", mu_opts.min_steady_points,
                         "steady points required")
            ->capture_default_str();
        add_common(c_mu, mu_common, "json");

        c_vier = app.add_subcommand(
            "vier", "successive-difference ratio estimate near a boundary");
        add_map(c_vier, vr_map, true, &vr_x0);
        c_vier->add_option("--param", vr_param, "axis: alpha or beta")
            ->capture_default_str();
        c_vier->add_option("--side", vr_side, "chaotic side: below/left or above/right")
            ->capture_default_str();
        c_vier->add_option("--boundary", vr_boundary,
                           "boundary value (omit to bisect inside the bracket)");
        c_vier->add_option("--bracket-lo", vr_bracket_lo, "bracket start");
        c_vier->add_option("--bracket-hi", vr_bracket_hi, "bracket end");
        c_vier->add_option("--p0", vr_p0, "base periodicity target")
            ->capture_default_str();
        c_vier->add_option("--levels", vr_levels, "number of doubling levels")
            ->capture_default_str();
        c_vier->add_option("--mu-rel-tol", vr_opts.mu_rel_tol,
                           "relative tolerance on mu targets")
            ->capture_default_str();
        c_vier->add_option("--n-x0", vr_opts.n_x0, "initial values averaged per mu")
            ->capture_default_str();
        add_common(c_vier, vr_common, "json");

        c_ingest = app.add_subcommand("ingest", "validate and summarize a series file");
        c_ingest->add_option("--in", in_path, "series file (index value [delta])")
            ->required();
        add_common(c_ingest, in_common, "json");
    }

    static void add_classify_opts(CLI::App* cmd, helix::detect::ClassifyOptions& o) {
        cmd->add_option("--horizon", o.horizon, "iterates per orbit")
            ->capture_default_str();
        cmd->add_option("--transient", o.transient, "iterates discarded up front")
            ->capture_default_str();
        cmd->add_option("--confirm-cycles", o.confirm_cycles,
                        "cycles a helix must hold for")
            ->capture_default_str();
        cmd->add_option("--tol", o.tol, "helix drift tolerance")->capture_default_str();
        cmd->add_option("--p-max", o.p_max, "largest period considered")
            ->capture_default_str();
        cmd->add_option("--min-segments", o.min_segments,
                        "steady segments needed for the regime verdict")
            ->capture_default_str();
    }
};

Config classify_config(const MapArgs& map, double x0,
                       const helix::detect::ClassifyOptions& o) {
    Config cfg;
    config_put_map(cfg, map);
    config_put(cfg, "x0", x0);
    config_put(cfg, "horizon", o.horizon);
    config_put(cfg, "transient", o.transient);
    config_put(cfg, "confirm-cycles", o.confirm_cycles);
    config_put(cfg, "tol", o.tol);
    config_put(cfg, "p-max", o.p_max);
    config_put(cfg, "min-segments", o.min_segments);
    return cfg;
}

int run(Cli& cli) {
    if (cli.c_iterate->parsed()) {
        auto map = resolve_map(cli.it_map);
        if (!helix::families::validate_ascending(map, cli.it_x0, cli.it_x0 + 2.0, 10001))
            throw helix::DomainError("map is not ascending on [x0, x0+2]");
        auto series = helix::orbit::iterate(map, cli.it_x0, cli.it_n);
        Config cfg;
        config_put_map(cfg, cli.it_map);
        config_put(cfg, "x0", cli.it_x0);
        config_put(cfg, "n", cli.it_n);
        if (cli.it_common.format == "csv") {
            emit(cli.it_common, helix::io::orbit_csv(series.values));
        } else {
            helix::io::json j;
            j["command"] = "iterate";
            j["config"] = helix::io::config_json(cfg);
            j["values"] = series.values;
            emit_json(cli.it_common, j);
        }
        return 0;
    }

    if (cli.c_classify->parsed()) {
        auto map = resolve_map(cli.cl_map);
        if (!helix::families::validate_ascending(map, cli.cl_x0, cli.cl_x0 + 2.0, 10001))
            throw helix::DomainError("map is not ascending on [x0, x0+2]");
        auto c = helix::detect::classify(map, cli.cl_x0, cli.cl_opts);
        auto j = helix::io::classification_json(
            c, classify_config(cli.cl_map, cli.cl_x0, cli.cl_opts));
        j["command"] = "classify";
        emit_json(cli.cl_common, j);
        return 0;
    }

    if (cli.c_steady->parsed()) {
        std::vector<double> values;
        Config cfg;
        if (!cli.sp_ingest.empty()) {
            auto ingested = helix::io::ingest_series(cli.sp_ingest);
            values = std::move(ingested.values);
            config_put(cfg, "ingest", cli.sp_ingest);
        } else {
            auto map = resolve_map(cli.sp_map);
            values = helix::orbit::iterate(map, cli.sp_x0, cli.sp_horizon).values;
            config_put_map(cfg, cli.sp_map);
            config_put(cfg, "x0", cli.sp_x0);
            config_put(cfg, "horizon", cli.sp_horizon);
        }
        config_put(cfg, "skip", cli.sp_skip);
        config_put(cfg, "period", cli.sp_period);
        config_put(cfg, "p-max", cli.sp_p_max);
        std::span<const double> span(values);
        if (cli.sp_skip > 0) span = span.subspan(static_cast<std::size_t>(cli.sp_skip));
        int p = cli.sp_period;
        if (p <= 0) {
            // Exact stride periodicity first; fall back to the burst-tolerant
            // match used by classify when chaotic episodes break exactness.
            auto inferred = helix::detect::infer_period(span, cli.sp_p_max);
            if (!inferred) {
                const auto n = static_cast<std::int64_t>(span.size());
                const std::int64_t total = n - 1;
                const std::int64_t w =
                    std::min(total, std::max<std::int64_t>(4 * cli.sp_p_max, total / 2));
                std::vector<std::int64_t> strides(static_cast<std::size_t>(w));
                for (std::int64_t i = 0; i < w; ++i) {
                    const auto k = static_cast<std::size_t>(total - w + i);
                    strides[static_cast<std::size_t>(i)] =
                        helix::stride(span[k + 1] - span[k]);
                }
                inferred = helix::detect::infer_period_strides_tolerant(strides,
                                                                        cli.sp_p_max, 0.9);
            }
            if (!inferred)
                throw helix::DetectError(
                    "no stride period found; pass --period explicitly");
            p = *inferred;
        }
        auto segments = helix::detect::segment_pseudo_helices(span, p);
        auto train = helix::metrics::analyze_train(
            helix::detect::collect_steady_orders(segments));
        auto j = helix::io::train_json(train, cfg);
        j["command"] = "steady-points";
        j["period"] = p;
        helix::io::json segs = helix::io::json::array();
        for (const auto& s : segments) segs.push_back(helix::io::segment_json(s));
        j["segments"] = segs;
        emit_json(cli.sp_common, j);
        return 0;
    }

    if (cli.c_quasi->parsed()) {
        const auto orders = parse_int_list(cli.qa_orders);
        auto result = helix::metrics::quasi_ap_check(orders);
        Config cfg;
        config_put(cfg, "orders", cli.qa_orders);
        helix::io::json j;
        j["command"] = "quasi-ap";
        j["config"] = helix::io::config_json(cfg);
        j["average_periodicity"] = result.average;
        j["band_lo"] = result.band_lo;
        j["band_hi"] = result.band_hi;
        j["diffs"] = result.diffs;
        j["violations"] = result.violations;
        j["verdict"] = result.verdict;
        emit_json(cli.qa_common, j);
        return 0;
    }

    if (cli.c_schwarzian->parsed()) {
        auto map = resolve_map(cli.sch_map);
        auto report =
            helix::families::schwarzian_scan(map, cli.sch_lo, cli.sch_hi, cli.sch_samples);
        Config cfg;
        config_put_map(cfg, cli.sch_map);
        config_put(cfg, "lo", cli.sch_lo);
        config_put(cfg, "hi", cli.sch_hi);
        config_put(cfg, "samples", cli.sch_samples);
        if (cli.sch_common.format == "csv") {
            emit(cli.sch_common, helix::io::schwarzian_csv(report));
        } else {
            auto j = helix::io::schwarzian_json(report, cfg);
            j["command"] = "schwarzian";
            emit_json(cli.sch_common, j);
        }
        return 0;
    }

    if (cli.c_chaos->parsed()) {
        auto map = resolve_map(cli.ch_map);
        helix::metrics::ChaosOptions opts = cli.ch_opts;
        opts.shifts = parse_double_list(cli.ch_shifts);
        opts.seed = cli.ch_common.seed;
        auto report = helix::metrics::chaos_mod1_test(map, opts);
        Config cfg;
        config_put_map(cfg, cli.ch_map);
        config_put(cfg, "pairs", opts.pair_count);
        config_put(cfg, "horizon", opts.horizon);
        config_put(cfg, "burn-in", opts.burn_in);
        config_put(cfg, "lambda", opts.lambda_threshold);
        config_put(cfg, "frac-tol", opts.frac_tol);
        config_put(cfg, "shifts", cli.ch_shifts);
        config_put(cfg, "seed", opts.seed);
        auto j = helix::io::chaos_json(report, cfg);
        j["command"] = "chaos-test";
        emit_json(cli.ch_common, j);
        return 0;
    }

    if (cli.c_sweep->parsed()) {
        auto family = resolve_family(cli.sw_map);
        const auto axis = parse_axis(cli.sw_param);
        const auto fixed = axis == helix::sweep::ParamAxis::Alpha ? cli.sw_map.beta
                                                                  : cli.sw_map.alpha;
        auto records = helix::sweep::classify_grid(family, axis, cli.sw_lo, cli.sw_hi,
                                                   cli.sw_steps, fixed, cli.sw_x0,
                                                   cli.sw_opts);
        Config cfg = classify_config(cli.sw_map, cli.sw_x0, cli.sw_opts.classify);
        config_put(cfg, "param", cli.sw_param);
        config_put(cfg, "lo", cli.sw_lo);
        config_put(cfg, "hi", cli.sw_hi);
        config_put(cfg, "steps", cli.sw_steps);
        if (cli.sw_common.format == "csv") {
            emit(cli.sw_common, helix::io::sweep_csv(records));
        } else {
            helix::io::json j;
            j["command"] = "sweep";
            j["config"] = helix::io::config_json(cfg);
            helix::io::json rows = helix::io::json::array();
            for (const auto& r : records) {
                helix::io::json row;
                row["param_value"] = r.param_value;
                row["verdict"] = r.verdict;
                row["period"] = r.period;
                if (r.mu) row["mu"] = *r.mu;
                if (r.error) row["error"] = *r.error;
                rows.push_back(row);
            }
            j["records"] = rows;
            emit_json(cli.sw_common, j);
        }
        return 0;
    }

    if (cli.c_boundary->parsed()) {
        auto family = resolve_family(cli.bd_map);
        const auto axis = parse_axis(cli.bd_param);
        const auto fixed = axis == helix::sweep::ParamAxis::Alpha ? cli.bd_map.beta
                                                                  : cli.bd_map.alpha;
        auto result =
            helix::sweep::find_boundary(family, axis, cli.bd_lo, cli.bd_hi, fixed,
                                        cli.bd_x0, cli.bd_opts, cli.bd_tol,
                                        cli.bd_iter_max);
        Config cfg = classify_config(cli.bd_map, cli.bd_x0, cli.bd_opts);
        config_put(cfg, "param", cli.bd_param);
        config_put(cfg, "bracket-lo", cli.bd_lo);
        config_put(cfg, "bracket-hi", cli.bd_hi);
        config_put(cfg, "boundary-tol", cli.bd_tol);
        config_put(cfg, "iter-max", cli.bd_iter_max);
        auto j = helix::io::boundary_json(result, cfg);
        j["command"] = "boundary";
        emit_json(cli.bd_common, j);
        return 0;
    }

    if (cli.c_mu->parsed()) {
        auto family = resolve_family(cli.mu_map);
        const auto axis = parse_axis(cli.mu_param);
        const auto fixed = axis == helix::sweep::ParamAxis::Alpha ? cli.mu_map.beta
                                                                  : cli.mu_map.alpha;
        auto result = helix::sweep::mu(family, axis, cli.mu_value, fixed, cli.mu_x0,
                                       cli.mu_horizon, cli.mu_opts);
        Config cfg;
        config_put_map(cfg, cli.mu_map);
        config_put(cfg, "param", cli.mu_param);
        config_put(cfg, "param-value", cli.mu_value);
        config_put(cfg, "x0", cli.mu_x0);
        config_put(cfg, "horizon", cli.mu_horizon);
        config_put(cfg, "min-steady-points", cli.mu_opts.min_steady_points);
        auto j = helix::io::mu_json(result, cfg);
        j["command"] = "mu";
        emit_json(cli.mu_common, j);
        return 0;
    }

    if (cli.c_vier->parsed()) {
        auto family = resolve_family(cli.vr_map);
        const auto axis = parse_axis(cli.vr_param);
        const auto side = parse_side(cli.vr_side);
        const auto fixed = axis == helix::sweep::ParamAxis::Alpha ? cli.vr_map.beta
                                                                  : cli.vr_map.alpha;
        double boundary;
        if (cli.vr_boundary) {
            boundary = *cli.vr_boundary;
        } else {
            if (!(cli.vr_bracket_lo < cli.vr_bracket_hi))
                throw CLI::ValidationError(
                    "either --boundary or a valid --bracket-lo/--bracket-hi is required");
            boundary = helix::sweep::find_boundary(family, axis, cli.vr_bracket_lo,
                                                   cli.vr_bracket_hi, fixed, cli.vr_x0,
                                                   cli.vr_cl_opts)
                           .boundary;
        }
        helix::sweep::InvertOptions opts = cli.vr_opts;
        opts.seed = cli.vr_common.seed;
        auto est = helix::sweep::vier_estimate(family, axis, boundary, side, cli.vr_p0,
                                               cli.vr_levels, fixed, cli.vr_x0, opts);
        Config cfg;
        config_put_map(cfg, cli.vr_map);
        config_put(cfg, "param", cli.vr_param);
        config_put(cfg, "side", cli.vr_side);
        config_put(cfg, "boundary", boundary);
        config_put(cfg, "p0", cli.vr_p0);
        config_put(cfg, "levels", cli.vr_levels);
        config_put(cfg, "x0", cli.vr_x0);
        config_put(cfg, "mu-rel-tol", opts.mu_rel_tol);
        config_put(cfg, "n-x0", opts.n_x0);
        config_put(cfg, "seed", opts.seed);
        auto j = helix::io::vier_json(est, cfg);
        j["command"] = "vier";
        emit_json(cli.vr_common, j);
        return 0;
    }

    if (cli.c_ingest->parsed()) {
        auto series = helix::io::ingest_series(cli.in_path);
        Config cfg;
        config_put(cfg, "in", cli.in_path);
        if (cli.in_common.format == "csv") {
            emit(cli.in_common, helix::io::orbit_csv(series.values));
        } else {
            helix::io::json j;
            j["command"] = "ingest";
            j["config"] = helix::io::config_json(cfg);
            j["rows"] = series.values.size();
            j["first"] = series.values.front();
            j["last"] = series.values.back();
            j["has_reference_delta"] = !series.reference_delta.empty();
            j["checksum_fnv1a64"] = helix::io::checksum_hex(series.checksum);
            emit_json(cli.in_common, j);
        }
        return 0;
    }

    throw CLI::ValidationError("no subcommand given");
}

// Applies a config file as defaults: synthesize an argv where the file pairs
// come first and the original command-line flags follow (and win).
std::vector<std::string> apply_config(const CLI::App& sub,
                                      const std::vector<std::string>& original,
                                      const std::string& config_path) {
    std::ifstream in(config_path, std::ios::binary);
    if (!in) throw helix::IoError("cannot open config '" + config_path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    const auto pairs = helix::io::parse_config_text(buf.str());
    std::vector<std::string> argv;
    argv.push_back(sub.get_name());
    for (const auto& [key, value] : pairs) {
        const std::string flag = "--" + key;
        bool known = false;
        for (const auto* opt : sub.get_options())
            if (opt->check_name(flag)) known = true;
        if (!known)
            throw helix::IoError("unknown config key '" + key + "' for subcommand " +
                                 sub.get_name());
        argv.push_back(flag);
        argv.push_back(value);
    }
    for (std::size_t i = 1; i < original.size(); ++i) argv.push_back(original[i]);
    return argv;
}

}  // namespace

int main(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    try {
        Cli cli;
        try {
            cli.app.parse(argc, argv);
        } catch (const CLI::ParseError& e) {
            return cli.app.exit(e) == 0 ? 0 : 1;
        }

        // When a config file is present, rebuild with file pairs as defaults.
        CLI::App* active = cli.app.get_subcommands().at(0);
        std::string config_path;
        if (auto* opt = active->get_option_no_throw("--config");
            opt && opt->count() > 0)
            config_path = opt->as<std::string>();
        if (!config_path.empty()) {
            std::vector<std::string> sub_args(args.begin() + 1, args.end());
            auto merged = apply_config(*active, sub_args, config_path);
            Cli fresh;
            std::vector<const char*> cargv;
            cargv.push_back(args[0].c_str());
            for (const auto& a : merged) cargv.push_back(a.c_str());
            try {
                fresh.app.parse(static_cast<int>(cargv.size()), cargv.data());
            } catch (const CLI::ParseError& e) {
                return fresh.app.exit(e) == 0 ? 0 : 1;
            }
            return run(fresh);
        }
        return run(cli);
    } catch (const CLI::Error& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const helix::IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 3;
    } catch (const helix::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
