// teik: a command-line laboratory for Lorentzian 2-torus metrics.
//
// Subcommands
//   cone      stable causal cone of the universal cover
//   distance  time separation between two points, with maximizer
//   pole      conjugate-point scan along the timelike fan from a point
//   busemann  horofunction-type eikonal solution toward a direction
//   foliate   integral curves of a computed field: a foliation by lines
//   verify    self-check battery for a metric spec
//
// Exit codes: 0 success, 1 numerical failure, 2 configuration error.

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "teik/io.hpp"
#include "teik/verify.hpp"

namespace fs = std::filesystem;
using namespace teik;

namespace {

// Default per-iterate integration step for a spec family: the flat family
// integrates straight lines exactly, so a coarse step loses nothing.
double default_field_step(const MetricSpec& spec, double requested) {
    if (requested > 0.0) return requested;
    return spec.family() == "flat" ? 0.1 : 0.01;
}

struct Prelude {
    MetricSpec spec;
    SignatureReport signature;
};

// Load the metric, run the signature gate, create the output directory and
// echo the effective configuration into it.
Prelude prelude(const RunConfig& cfg) {
    if (cfg.metric_path.empty())
        throw ConfigError("--metric PATH (or \"metric\" in --config) is required");
    MetricSpec spec = load_metric_spec(cfg.metric_path);
    SignatureReport sig = spec.signature_check(64); // throws on violation
    fs::create_directories(cfg.out_dir);
    write_json_file((fs::path(cfg.out_dir) / "config.json").string(),
                    config_to_json(cfg));
    return {std::move(spec), sig};
}

std::string out_path(const RunConfig& cfg, const char* name) {
    return (fs::path(cfg.out_dir) / name).string();
}

Vec2 direction_of(const RunConfig& cfg) {
    Vec2 a = cfg.use_k ? Vec2{double(cfg.k[0]), double(cfg.k[1])} : cfg.alpha;
    if (a.norm() == 0.0) throw ConfigError("direction must be nonzero");
    return normalized(a);
}

int cmd_cone(const RunConfig& cfg) {
    Prelude pre = prelude(cfg);
    ConeEstimate cone = estimate_cone(pre.spec, cfg.length, 1e-3);
    write_json_file(out_path(cfg, "cone.json"), cone_to_json(cone));
    std::printf("cone: m_minus = (%.9f, %.9f), m_plus = (%.9f, %.9f), D = %.3g\n",
                cone.m_minus.x, cone.m_minus.y, cone.m_plus.x, cone.m_plus.y,
                cone.deviation_bound_D);
    return 0;
}

int cmd_distance(const RunConfig& cfg) {
    Prelude pre = prelude(cfg);
    Vec2 p{cfg.px, cfg.py}, q{cfg.x, cfg.y};
    ConeEstimate cone = estimate_cone(pre.spec, cfg.length, 1e-3);
    DistanceOptions dop;
    dop.cone = &cone;
    dop.cross_check = cfg.cross_check;
    if (cfg.step > 0.0) dop.step = cfg.step;
    DistanceResult r = lorentz_distance(pre.spec, p, q, dop);
    write_json_file(out_path(cfg, "distance.json"), distance_to_json(r));
    std::printf("distance: d((%g, %g), (%g, %g)) = %.12g [%s]\n", p.x, p.y,
                q.x, q.y, r.value, to_string(r.status));
    if (r.method_agreement)
        std::printf("distance: cross-check agreement %.3g\n",
                    *r.method_agreement);
    return 0;
}

int cmd_pole(const RunConfig& cfg) {
    Prelude pre = prelude(cfg);
    PoleReport pr =
        pole_check(pre.spec, Vec2{cfg.x, cfg.y}, cfg.horizon, cfg.sweep);
    write_json_file(out_path(cfg, "pole.json"), pole_to_json(pr));
    std::printf("pole: (%g, %g) %s up to horizon %g (%d directions, "
                "min |J| = %.3g)\n",
                cfg.x, cfg.y,
                pr.is_pole_up_to_horizon ? "has no conjugate point"
                                         : "has a conjugate point",
                pr.horizon, pr.directions_checked, pr.worst_min_abs);
    return 0;
}

// Shared by busemann and foliate (inline construction path).
BusemannField build_field(const MetricSpec& spec, const RunConfig& cfg,
                          const ConeEstimate& cone) {
    Vec2 base = cfg.has_base ? Vec2{cfg.px, cfg.py} : cfg.window.center();
    Vec2 alpha = direction_of(cfg);
    double ray_horizon = cfg.spacing * cfg.poles + 1.0;
    RayOptions ro;
    ro.cone = &cone;
    Ray ray = ray_toward(spec, base, alpha, ray_horizon, ro);
    PoleOptions po;
    po.spacing = cfg.spacing;
    po.validate_step = 0.1;
    po.cone = &cone;
    PoleSequence seq =
        build_pole_sequence(spec, base, alpha, cfg.poles, ray.geodesic, po);
    BusemannOptions bo;
    bo.epsilon_margin = cfg.epsilon_margin;
    bo.field.cone = &cone;
    bo.field.step = default_field_step(spec, cfg.step);
    return busemann_field(spec, seq, cfg.window, cfg.nx, cfg.ny, cfg.tol, bo);
}

int cmd_busemann(const RunConfig& cfg) {
    Prelude pre = prelude(cfg);
    ConeEstimate cone = estimate_cone(pre.spec, cfg.length, 1e-3);
    BusemannField field = build_field(pre.spec, cfg, cone);
    write_field_csv(out_path(cfg, "field.csv"), field, pre.spec);
    write_json_file(out_path(cfg, "history.json"), history_to_json(field));
    Json pj;
    try {
        PeriodicityReport rep = check_periodicity(field, pre.spec);
        pj = periodicity_to_json(rep);
    } catch (const WindowTooSmall& e) {
        pj["schema"] = "teik-periodicity-v1";
        pj["available"] = false;
        pj["reason"] = e.what();
    }
    write_json_file(out_path(cfg, "periodicity.json"), pj);
    EikonalReport er = verify_eikonal(field, pre.spec);
    std::printf("busemann: %d iterations, final value gap %.3g, "
                "max interior residual %.3g\n",
                field.iterations_used,
                field.history.empty() ? 0.0 : field.history.back().value_gap,
                er.max_residual);
    return 0;
}

int cmd_foliate(const RunConfig& cfg, const std::string& field_path) {
    Prelude pre = prelude(cfg);
    BusemannField field;
    if (!field_path.empty()) {
        FieldCsv fc = read_field_csv(field_path);
        static_cast<ScalarField&>(field) = std::move(fc.field);
    } else {
        ConeEstimate cone = estimate_cone(pre.spec, cfg.length, 1e-3);
        field = build_field(pre.spec, cfg, cone);
    }
    std::vector<Vec2> seeds;
    if (cfg.seeds < 1) throw ConfigError("--seeds must be >= 1");
    double midy = 0.5 * (field.window.y0 + field.window.y1);
    for (int i = 0; i < cfg.seeds; ++i)
        seeds.push_back({field.window.x0 +
                             (i + 0.5) / cfg.seeds * field.window.width(),
                         midy});
    LeafOptions lo;
    if (cfg.step > 0.0) lo.step = cfg.step;
    FoliationChart chart =
        integral_curves(field, pre.spec, seeds, cfg.horizon, lo);
    write_leaves_csv(out_path(cfg, "leaves.csv"), chart);
    write_json_file(out_path(cfg, "direction.json"), directions_to_json(chart));
    write_json_file(out_path(cfg, "disjointness.json"),
                    disjointness_to_json(chart));
    std::printf("foliate: %zu leaves, min separation %.3g, max geodesic "
                "deviation %.3g\n",
                chart.leaves.size(), chart.min_separation,
                chart.max_geodesic_deviation);
    return 0;
}

int cmd_verify(const RunConfig& cfg) {
    Prelude pre = prelude(cfg);
    VerifyOptions vo;
    vo.seed = cfg.seed;
    vo.tol = cfg.tol;
    vo.poles = cfg.poles;
    vo.spacing = cfg.spacing;
    vo.field_step = cfg.step;
    vo.cone_length = cfg.length;
    if (cfg.horizon > 10.0) vo.pole_horizon = cfg.horizon;
    auto checks = run_verification(pre.spec, vo);
    bool all = true;
    Json arr = Json::array();
    for (const auto& c : checks) {
        std::printf("[%s] %-26s %s\n", c.pass ? "ok" : "FAIL", c.name.c_str(),
                    c.detail.c_str());
        all &= c.pass;
        Json e;
        e["name"] = c.name;
        e["pass"] = c.pass;
        e["detail"] = c.detail;
        arr.push_back(std::move(e));
    }
    Json j;
    j["schema"] = "teik-verify-v1";
    j["passed"] = all;
    j["checks"] = std::move(arr);
    write_json_file(out_path(cfg, "verify.json"), j);
    std::printf("verify: %s\n", all ? "all checks passed" : "FAILED");
    return all ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Lorentzian 2-torus laboratory: causal cones, time "
                 "separation, eikonal fields and foliations by timelike "
                 "lines"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    std::string metric_path, out_dir;
    std::vector<double> window_v, alpha_v;
    std::vector<int> res_v, k_v;
    double tol = 0, horizon = 0, length = 0, x = 0, y = 0, px = 0, py = 0;
    double step = 0, spacing = 0, epsilon_margin = 0;
    std::uint64_t seed = 0;
    int poles = 0, seeds = 0, sweep = 0;
    bool cross_check = false;
    std::string field_path;

    auto* o_config = app.add_option("--config", config_path,
                                    "JSON config file; explicit flags override it");
    auto* o_metric = app.add_option("--metric", metric_path, "metric spec JSON");
    auto* o_out = app.add_option("--out", out_dir, "output directory");
    auto* o_window = app.add_option("--window", window_v, "window x0,x1,y0,y1")
                         ->delimiter(',')->expected(4);
    auto* o_res = app.add_option("--res", res_v, "grid resolution NX,NY")
                      ->delimiter(',')->expected(2);
    auto* o_alpha = app.add_option("--alpha", alpha_v, "direction AX,AY")
                        ->delimiter(',')->expected(2);
    auto* o_k = app.add_option("--k", k_v, "integer direction KX,KY")
                    ->delimiter(',')->expected(2);
    auto* o_tol = app.add_option("--tol", tol, "convergence tolerance");
    auto* o_horizon = app.add_option("--horizon", horizon, "integration horizon");
    auto* o_seed = app.add_option("--seed", seed, "RNG seed for sampled checks");
    auto* o_cross = app.add_flag("--cross-check", cross_check,
                                 "run the secondary method and report agreement");
    auto* o_length = app.add_option("--length", length, "cone integration length");
    auto* o_x = app.add_option("--x", x, "point x coordinate");
    auto* o_y = app.add_option("--y", y, "point y coordinate");
    auto* o_px = app.add_option("--px", px, "source / base point x");
    auto* o_py = app.add_option("--py", py, "source / base point y");
    auto* o_step = app.add_option("--step", step, "integration step override");
    auto* o_poles = app.add_option("--poles", poles, "pole sequence length");
    auto* o_spacing = app.add_option("--spacing", spacing, "pole spacing");
    auto* o_margin = app.add_option("--epsilon-margin", epsilon_margin,
                                    "valid-mask cone margin");
    auto* o_seeds = app.add_option("--seeds", seeds, "number of leaf seeds");
    auto* o_sweep = app.add_option("--sweep", sweep, "directions scanned");

    CLI::App* sc_cone = app.add_subcommand("cone", "stable causal cone");
    CLI::App* sc_distance =
        app.add_subcommand("distance", "time separation between two points");
    CLI::App* sc_pole =
        app.add_subcommand("pole", "conjugate-point scan from a point");
    CLI::App* sc_busemann = app.add_subcommand(
        "busemann", "eikonal field toward an asymptotic direction");
    CLI::App* sc_foliate = app.add_subcommand(
        "foliate", "integral-curve foliation of a computed field");
    CLI::App* sc_verify =
        app.add_subcommand("verify", "self-check battery for a metric spec");
    sc_foliate->add_option("--field", field_path,
                           "read a previously written field.csv instead of "
                           "constructing the field");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        RunConfig cfg;
        if (o_config->count()) {
            Json j = load_json_file(config_path);
            cfg = config_from_json(j);
        }
        if (o_metric->count()) cfg.metric_path = metric_path;
        if (o_out->count()) cfg.out_dir = out_dir;
        if (o_window->count())
            cfg.window = {window_v[0], window_v[1], window_v[2], window_v[3]};
        if (o_res->count()) {
            cfg.nx = res_v[0];
            cfg.ny = res_v[1];
        }
        if (o_alpha->count()) {
            cfg.alpha = {alpha_v[0], alpha_v[1]};
            cfg.use_k = false;
        }
        if (o_k->count()) {
            cfg.k = {k_v[0], k_v[1]};
            cfg.use_k = true;
        }
        if (o_alpha->count() && o_k->count())
            throw ConfigError("--alpha and --k are mutually exclusive");
        if (o_tol->count()) cfg.tol = tol;
        if (o_horizon->count()) cfg.horizon = horizon;
        if (o_seed->count()) cfg.seed = seed;
        if (o_cross->count()) cfg.cross_check = cross_check;
        if (o_length->count()) cfg.length = length;
        if (o_x->count()) cfg.x = x;
        if (o_y->count()) cfg.y = y;
        if (o_px->count()) {
            cfg.px = px;
            cfg.has_base = true;
        }
        if (o_py->count()) {
            cfg.py = py;
            cfg.has_base = true;
        }
        if (o_step->count()) cfg.step = step;
        if (o_poles->count()) cfg.poles = poles;
        if (o_spacing->count()) cfg.spacing = spacing;
        if (o_margin->count()) cfg.epsilon_margin = epsilon_margin;
        if (o_seeds->count()) cfg.seeds = seeds;
        if (o_sweep->count()) cfg.sweep = sweep;

        if (sc_cone->parsed()) return cmd_cone(cfg);
        if (sc_distance->parsed()) return cmd_distance(cfg);
        if (sc_pole->parsed()) return cmd_pole(cfg);
        if (sc_busemann->parsed()) return cmd_busemann(cfg);
        if (sc_foliate->parsed()) return cmd_foliate(cfg, field_path);
        if (sc_verify->parsed()) return cmd_verify(cfg);
        throw ConfigError("no subcommand given");
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const NumericalError& e) {
        std::fprintf(stderr, "numerical error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
