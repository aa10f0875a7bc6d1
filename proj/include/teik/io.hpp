#pragma once
// File formats: metric specs and run configs (JSON), scalar-field and leaf
// grids (CSV), and result reports (JSON).  Every writer uses a fixed number
// format so identical inputs produce byte-identical files, and every format
// carries a schema tag and has a matching reader.

#include <array>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "busemann.hpp"

namespace teik {

using Json = nlohmann::json;

//----------------------------------------------------------------------------
// Small helpers

namespace detail {

// %.17g round-trips IEEE doubles exactly and prints deterministically
inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline Json vec2_json(Vec2 v) { return Json::array({v.x, v.y}); }

inline Vec2 vec2_from_json(const Json& j, const char* what) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw ConfigError(std::string(what) + ": expected [x, y]");
    return {j[0].get<double>(), j[1].get<double>()};
}

} // namespace detail

inline void write_json_file(const std::string& path, const Json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open for writing: " + path);
    out << j.dump(2) << '\n';
    if (!out) throw ConfigError("write failed: " + path);
}

inline Json load_json_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open: " + path);
    try {
        return Json::parse(in);
    } catch (const std::exception& e) {
        throw ConfigError("invalid JSON in " + path + ": " + e.what());
    }
}

// The CLI's generic report reader: parses and checks the schema tag.
inline Json read_report(const std::string& path, const std::string& schema) {
    Json j = load_json_file(path);
    if (!j.is_object() || !j.contains("schema") || j["schema"] != schema)
        throw ConfigError(path + ": expected schema \"" + schema + "\"");
    return j;
}

//----------------------------------------------------------------------------
// Metric specs.
//
// {"family": "flat" | "conformal" | "sheared" | "raw",
//  "params": {"amplitude": A},                  // conformal, sheared
//  "g11": [[m, n, a, b], ...], "g12": ..., "g22": ...}   // raw
//
// Term lists, when present, take precedence over the family constructor so
// that emitted specs round-trip exactly.  Frequencies must be integers.

namespace detail {

inline FourierSeries series_from_json(const Json& j, const char* name) {
    if (!j.is_array())
        throw ConfigError(std::string("metric spec: ") + name +
                          " must be a list of [m, n, a, b] terms");
    FourierSeries s;
    for (const auto& t : j) {
        if (!t.is_array() || t.size() != 4)
            throw ConfigError(std::string("metric spec: ") + name +
                              " term must be [m, n, a, b]");
        if (!t[0].is_number_integer() || !t[1].is_number_integer())
            throw ConfigError(std::string("metric spec: ") + name +
                              " frequencies m, n must be integers");
        if (!t[2].is_number() || !t[3].is_number())
            throw ConfigError(std::string("metric spec: ") + name +
                              " coefficients a, b must be numbers");
        s.add_term(t[0].get<int>(), t[1].get<int>(), t[2].get<double>(),
                   t[3].get<double>());
    }
    return s;
}

inline Json series_to_json(const FourierSeries& s) {
    Json arr = Json::array();
    for (const auto& t : s.terms())
        arr.push_back(Json::array({t.m, t.n, t.a, t.b}));
    return arr;
}

} // namespace detail

inline MetricSpec metric_from_json(const Json& j) {
    if (!j.is_object()) throw ConfigError("metric spec: expected a JSON object");
    std::string family = j.value("family", std::string("raw"));
    if (j.contains("g11") || j.contains("g12") || j.contains("g22")) {
        if (!(j.contains("g11") && j.contains("g12") && j.contains("g22")))
            throw ConfigError("metric spec: raw specs need g11, g12 and g22");
        return MetricSpec(detail::series_from_json(j["g11"], "g11"),
                          detail::series_from_json(j["g12"], "g12"),
                          detail::series_from_json(j["g22"], "g22"), family);
    }
    double amplitude = 0.0;
    if (j.contains("params")) {
        if (!j["params"].is_object())
            throw ConfigError("metric spec: params must be an object");
        amplitude = j["params"].value("amplitude", 0.0);
    }
    if (family == "flat") return MetricSpec::flat();
    if (family == "conformal")
        return MetricSpec::conformal(amplitude != 0.0 ? amplitude : 0.1);
    if (family == "sheared")
        return MetricSpec::sheared(amplitude != 0.0 ? amplitude : 0.2);
    throw ConfigError("metric spec: unknown family \"" + family +
                      "\" (and no raw term lists given)");
}

inline Json metric_to_json(const MetricSpec& spec) {
    Json j;
    j["schema"] = "teik-metric-v1";
    j["family"] = spec.family();
    j["g11"] = detail::series_to_json(spec.g11());
    j["g12"] = detail::series_to_json(spec.g12());
    j["g22"] = detail::series_to_json(spec.g22());
    return j;
}

inline MetricSpec load_metric_spec(const std::string& path) {
    return metric_from_json(load_json_file(path));
}

//----------------------------------------------------------------------------
// Run configuration: what the CLI reads from --config and echoes to the
// output directory.  Keys mirror the long option names.

struct RunConfig {
    std::string metric_path;
    std::string out_dir = ".";
    Rect window{0.0, 1.0, 0.0, 1.0};
    int nx = 65, ny = 65;
    Vec2 alpha{0.0, 1.0};
    bool use_k = false;            // direction given as a lattice vector
    std::array<int, 2> k{0, 1};
    double tol = 1e-3;
    double horizon = 10.0;
    std::uint64_t seed = 0;        // RNG seed for sampled checks
    bool cross_check = false;
    double length = 100.0;         // cone integration length
    double x = 0.0, y = 0.0;       // point argument (distance target, pole)
    double px = 0.0, py = 0.0;     // source / base point
    bool has_base = false;         // px,py explicitly set
    double step = 0.0;             // 0 = per-operation default
    int poles = 512;
    double spacing = 5.0;
    double epsilon_margin = 0.05;
    int seeds = 8;
    int sweep = 64;                // directions scanned by the pole command
};

inline RunConfig config_from_json(const Json& j) {
    if (!j.is_object()) throw ConfigError("config: expected a JSON object");
    RunConfig c;
    for (const auto& [key, val] : j.items()) {
        try {
            if (key == "schema") {
                if (val != "teik-config-v1")
                    throw ConfigError("config: unknown schema");
            } else if (key == "metric") c.metric_path = val.get<std::string>();
            else if (key == "out") c.out_dir = val.get<std::string>();
            else if (key == "window") {
                if (!val.is_array() || val.size() != 4)
                    throw ConfigError("config: window must be [x0,x1,y0,y1]");
                c.window = {val[0].get<double>(), val[1].get<double>(),
                            val[2].get<double>(), val[3].get<double>()};
            } else if (key == "res") {
                if (!val.is_array() || val.size() != 2)
                    throw ConfigError("config: res must be [nx,ny]");
                c.nx = val[0].get<int>();
                c.ny = val[1].get<int>();
            } else if (key == "alpha") {
                c.alpha = detail::vec2_from_json(val, "config alpha");
                c.use_k = false;
            } else if (key == "k") {
                if (!val.is_array() || val.size() != 2 ||
                    !val[0].is_number_integer() || !val[1].is_number_integer())
                    throw ConfigError("config: k must be [kx,ky] integers");
                c.k = {val[0].get<int>(), val[1].get<int>()};
                c.use_k = true;
            } else if (key == "tol") c.tol = val.get<double>();
            else if (key == "horizon") c.horizon = val.get<double>();
            else if (key == "seed") c.seed = val.get<std::uint64_t>();
            else if (key == "cross_check") c.cross_check = val.get<bool>();
            else if (key == "length") c.length = val.get<double>();
            else if (key == "x") c.x = val.get<double>();
            else if (key == "y") c.y = val.get<double>();
            else if (key == "px") { c.px = val.get<double>(); c.has_base = true; }
            else if (key == "py") { c.py = val.get<double>(); c.has_base = true; }
            else if (key == "step") c.step = val.get<double>();
            else if (key == "poles") c.poles = val.get<int>();
            else if (key == "spacing") c.spacing = val.get<double>();
            else if (key == "epsilon_margin") c.epsilon_margin = val.get<double>();
            else if (key == "seeds") c.seeds = val.get<int>();
            else if (key == "sweep") c.sweep = val.get<int>();
            else throw ConfigError("config: unknown key \"" + key + "\"");
        } catch (const Json::exception& e) {
            throw ConfigError("config key \"" + key + "\": " + e.what());
        }
    }
    return c;
}

inline Json config_to_json(const RunConfig& c) {
    Json j;
    j["schema"] = "teik-config-v1";
    j["metric"] = c.metric_path;
    j["out"] = c.out_dir;
    j["window"] = Json::array({c.window.x0, c.window.x1, c.window.y0, c.window.y1});
    j["res"] = Json::array({c.nx, c.ny});
    if (c.use_k)
        j["k"] = Json::array({c.k[0], c.k[1]});
    else
        j["alpha"] = detail::vec2_json(c.alpha);
    j["tol"] = c.tol;
    j["horizon"] = c.horizon;
    j["seed"] = c.seed;
    j["cross_check"] = c.cross_check;
    j["length"] = c.length;
    j["x"] = c.x;
    j["y"] = c.y;
    j["px"] = c.px;
    j["py"] = c.py;
    j["step"] = c.step;
    j["poles"] = c.poles;
    j["spacing"] = c.spacing;
    j["epsilon_margin"] = c.epsilon_margin;
    j["seeds"] = c.seeds;
    j["sweep"] = c.sweep;
    return j;
}

//----------------------------------------------------------------------------
// Field CSV: header "x,y,u,ux,uy,residual,valid", one row per node, iy outer
// and ix inner.  Invalid nodes write zeros with valid=0.

template <MetricModel M>
void write_field_csv(const std::string& path, const ScalarField& f,
                     const M& metric) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open for writing: " + path);
    out << "x,y,u,ux,uy,residual,valid\n";
    for (int iy = 0; iy < f.ny; ++iy)
        for (int ix = 0; ix < f.nx; ++ix) {
            size_t id = f.index(ix, iy);
            Vec2 node = f.node(ix, iy);
            double u = 0.0, gx = 0.0, gy = 0.0, res = 0.0;
            int valid = f.valid[id] ? 1 : 0;
            if (valid) {
                u = f.values[id];
                gx = f.gradient[id].x;
                gy = f.gradient[id].y;
                res = std::abs(metric.eval(node).g.quad(f.gradient[id]) + 1.0);
            }
            out << detail::fmt_double(node.x) << ',' << detail::fmt_double(node.y)
                << ',' << detail::fmt_double(u) << ',' << detail::fmt_double(gx)
                << ',' << detail::fmt_double(gy) << ',' << detail::fmt_double(res)
                << ',' << valid << '\n';
        }
    if (!out) throw ConfigError("write failed: " + path);
}

struct FieldCsv {
    ScalarField field;
    std::vector<double> residual;  // as written, one per node
};

inline FieldCsv read_field_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open: " + path);
    std::string line;
    if (!std::getline(in, line) || line != "x,y,u,ux,uy,residual,valid")
        throw ConfigError(path + ": bad field csv header");

    std::vector<double> xs, ys, us, gxs, gys, res;
    std::vector<int> valid;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        double cx, cy, cu, cgx, cgy, cres;
        int cv;
        if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf,%lf,%lf,%d", &cx, &cy,
                        &cu, &cgx, &cgy, &cres, &cv) != 7)
            throw ConfigError(path + ": bad row at line " +
                              std::to_string(lineno));
        xs.push_back(cx); ys.push_back(cy); us.push_back(cu);
        gxs.push_back(cgx); gys.push_back(cgy); res.push_back(cres);
        valid.push_back(cv);
    }
    size_t n = xs.size();
    if (n < 4) throw ConfigError(path + ": too few rows");
    size_t nx = 1;
    while (nx < n && ys[nx] == ys[0]) ++nx;
    if (nx < 2 || n % nx != 0)
        throw ConfigError(path + ": rows do not form a rectangular grid");
    size_t ny = n / nx;
    if (ny < 2) throw ConfigError(path + ": needs at least two rows of nodes");

    FieldCsv out;
    ScalarField& f = out.field;
    f.window = {xs[0], xs[nx - 1], ys[0], ys[n - 1]};
    f.nx = int(nx);
    f.ny = int(ny);
    f.values = std::move(us);
    f.valid.resize(n);
    f.one_sided.assign(n, 0);
    f.gradient.resize(n);
    for (size_t i = 0; i < n; ++i) {
        f.valid[i] = uint8_t(valid[i] != 0);
        f.gradient[i] = {gxs[i], gys[i]};
    }
    out.residual = std::move(res);
    return out;
}

//----------------------------------------------------------------------------
// Leaves CSV: header "leaf_id,t,x,y", rows grouped by leaf in emission order.

inline void write_leaves_csv(const std::string& path,
                             const FoliationChart& chart) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open for writing: " + path);
    out << "leaf_id,t,x,y\n";
    for (size_t i = 0; i < chart.leaves.size(); ++i)
        for (const auto& s : chart.leaves[i].samples)
            out << i << ',' << detail::fmt_double(s.t) << ','
                << detail::fmt_double(s.p.x) << ',' << detail::fmt_double(s.p.y)
                << '\n';
    if (!out) throw ConfigError("write failed: " + path);
}

struct LeafPath {
    int id = 0;
    std::vector<double> t;
    std::vector<Vec2> p;
};

inline std::vector<LeafPath> read_leaves_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open: " + path);
    std::string line;
    if (!std::getline(in, line) || line != "leaf_id,t,x,y")
        throw ConfigError(path + ": bad leaves csv header");
    std::vector<LeafPath> leaves;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        int id;
        double t, x, y;
        if (std::sscanf(line.c_str(), "%d,%lf,%lf,%lf", &id, &t, &x, &y) != 4)
            throw ConfigError(path + ": bad row at line " +
                              std::to_string(lineno));
        if (leaves.empty() || leaves.back().id != id) {
            leaves.push_back({id, {}, {}});
        }
        leaves.back().t.push_back(t);
        leaves.back().p.push_back({x, y});
    }
    return leaves;
}

//----------------------------------------------------------------------------
// Reports

inline Json cone_to_json(const ConeEstimate& c) {
    Json j;
    j["schema"] = "teik-cone-v1";
    j["m_minus"] = detail::vec2_json(c.m_minus);
    j["m_plus"] = detail::vec2_json(c.m_plus);
    j["D"] = c.deviation_bound_D;
    j["length"] = c.integration_length;
    return j;
}

inline ConeEstimate cone_from_json(const Json& j) {
    ConeEstimate c;
    c.m_minus = detail::vec2_from_json(j.at("m_minus"), "cone m_minus");
    c.m_plus = detail::vec2_from_json(j.at("m_plus"), "cone m_plus");
    c.deviation_bound_D = j.at("D").get<double>();
    c.integration_length = j.at("length").get<double>();
    return c;
}

inline Json distance_to_json(const DistanceResult& r,
                             size_t max_polyline_points = 1024) {
    Json j;
    j["schema"] = "teik-distance-v1";
    j["value"] = r.value;
    j["status"] = to_string(r.status);
    j["ambiguous_cut"] = r.ambiguous_cut;
    if (r.method_agreement) j["method_agreement"] = *r.method_agreement;
    Json poly = Json::array();
    if (r.maximizer) {
        const auto& s = r.maximizer->samples;
        size_t stride = std::max<size_t>(1, s.size() / max_polyline_points);
        for (size_t i = 0; i < s.size(); i += stride)
            poly.push_back(detail::vec2_json(s[i].p));
        if (!s.empty() && (s.size() - 1) % stride != 0)
            poly.push_back(detail::vec2_json(s.back().p));
    }
    j["maximizer"] = std::move(poly);
    return j;
}

inline Json pole_to_json(const PoleReport& r) {
    Json j;
    j["schema"] = "teik-pole-v1";
    j["is_pole_up_to_horizon"] = r.is_pole_up_to_horizon;
    j["horizon"] = r.horizon;
    j["directions_checked"] = r.directions_checked;
    if (!std::isnan(r.first_conjugate)) j["first_conjugate"] = r.first_conjugate;
    j["worst_direction"] = detail::vec2_json(r.worst_direction);
    j["worst_min_abs"] = r.worst_min_abs;
    return j;
}

inline Json signature_to_json(const SignatureReport& r) {
    Json j;
    j["schema"] = "teik-signature-v1";
    j["ok"] = r.ok;
    j["min_abs_det"] = r.min_abs_det;
    j["max_g22"] = r.max_g22;
    j["resolution"] = r.resolution;
    return j;
}

inline Json eikonal_to_json(const EikonalReport& r) {
    Json j;
    j["schema"] = "teik-eikonal-v1";
    j["max_residual"] = r.max_residual;
    j["max_residual_all"] = r.max_residual_all;
    j["mean_residual"] = r.mean_residual;
    j["n_interior"] = r.n_interior;
    j["n_valid"] = r.n_valid;
    j["worst_node"] = detail::vec2_json(r.worst_node);
    return j;
}

inline Json history_to_json(const BusemannField& f) {
    Json j;
    j["schema"] = "teik-history-v1";
    j["direction"] = detail::vec2_json(f.direction);
    j["tol"] = f.tol;
    j["iterations_used"] = f.iterations_used;
    j["anchored"] = f.anchored;
    j["anchor_point"] = detail::vec2_json(f.anchor_point);
    Json entries = Json::array();
    for (const auto& h : f.history) {
        Json e;
        e["index"] = h.index;
        e["time"] = h.time;
        e["value_gap"] = h.value_gap;
        e["gradient_gap"] = h.gradient_gap;
        e["center_drift"] = h.center_drift;
        entries.push_back(std::move(e));
    }
    j["entries"] = std::move(entries);
    return j;
}

inline Json periodicity_to_json(const PeriodicityReport& r) {
    Json j;
    j["schema"] = "teik-periodicity-v1";
    j["available"] = true;
    j["defect"] = r.defect;
    j["defect_x"] = r.defect_x;
    j["defect_y"] = r.defect_y;
    j["value_spread_x"] = r.value_spread_x;
    j["value_spread_y"] = r.value_spread_y;
    j["pairs_x"] = r.pairs_x;
    j["pairs_y"] = r.pairs_y;
    // NaN is not representable in JSON; absent axes write null
    for (const char* key : {"defect", "defect_x", "defect_y", "value_spread_x",
                            "value_spread_y"})
        if (j[key].is_number() && std::isnan(j[key].get<double>()))
            j[key] = nullptr;
    return j;
}

inline Json directions_to_json(const FoliationChart& chart) {
    Json j;
    j["schema"] = "teik-direction-v1";
    Json arr = Json::array();
    for (size_t i = 0; i < chart.leaves.size(); ++i) {
        const Leaf& lf = chart.leaves[i];
        Json e;
        e["leaf"] = i;
        e["seed"] = detail::vec2_json(lf.seed);
        e["euclid_length"] = lf.euclid_length;
        e["left_window"] = lf.left_window;
        e["geodesic_deviation"] = lf.geodesic_deviation;
        if (lf.direction) {
            e["alpha"] = detail::vec2_json(lf.direction->alpha);
            e["D"] = lf.direction->D;
            e["confidence_length"] = lf.direction->confidence_length;
        } else {
            e["alpha"] = nullptr;
        }
        arr.push_back(std::move(e));
    }
    j["leaves"] = std::move(arr);
    return j;
}

inline Json disjointness_to_json(const FoliationChart& chart) {
    Json j;
    j["schema"] = "teik-disjointness-v1";
    j["n_leaves"] = chart.leaves.size();
    j["min_separation"] = chart.min_separation;
    j["max_geodesic_deviation"] = chart.max_geodesic_deviation;
    j["any_left_window"] = chart.any_left_window;
    return j;
}

} // namespace teik
