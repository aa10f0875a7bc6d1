#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "teik/io.hpp"

using namespace teik;

namespace {

std::string scratch(const std::string& name) {
    auto d = std::filesystem::temp_directory_path() / "teik_io_tests";
    std::filesystem::create_directories(d);
    return (d / name).string();
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

ScalarField tiny_field() {
    ScalarField f;
    f.window = {0.0, 1.0, 2.0, 3.0};
    f.nx = 3;
    f.ny = 3;
    size_t n = 9;
    f.values.assign(n, 0.0);
    f.gradient.assign(n, Vec2{0.0, 1.0});
    f.arrival_velocity.assign(n, Vec2{0.0, 1.0});
    f.valid.assign(n, 1);
    f.one_sided.assign(n, 0);
    for (int iy = 0; iy < 3; ++iy)
        for (int ix = 0; ix < 3; ++ix)
            f.values[f.index(ix, iy)] = 0.125 * ix - f.node(ix, iy).y;
    f.valid[f.index(2, 0)] = 0; // one hole
    return f;
}

} // namespace

TEST_CASE("metric specs round-trip through JSON exactly") {
    for (const MetricSpec& spec :
         {MetricSpec::flat(), MetricSpec::sheared(0.2),
          MetricSpec::conformal(0.1)}) {
        Json j = metric_to_json(spec);
        REQUIRE(j["schema"] == "teik-metric-v1");
        REQUIRE(j["family"] == spec.family());
        MetricSpec back = metric_from_json(j);
        REQUIRE(back.family() == spec.family());
        for (Vec2 p : {Vec2{0.13, 0.77}, Vec2{0.5, 0.5}, Vec2{-1.2, 3.4}}) {
            MetricEval a = spec.eval(p), b = back.eval(p);
            REQUIRE(a.g.g11 == b.g.g11);
            REQUIRE(a.g.g12 == b.g.g12);
            REQUIRE(a.g.g22 == b.g.g22);
        }
    }
}

TEST_CASE("metric specs from family constructors") {
    Json j;
    j["family"] = "sheared";
    j["params"] = Json::object({{"amplitude", 0.35}});
    MetricSpec spec = metric_from_json(j);
    REQUIRE(spec.family() == "sheared");
    REQUIRE(spec.eval({0.25, 0.0}).g.g12 == Approx(0.35 * std::sin(M_PI / 2)));
}

TEST_CASE("malformed metric specs are rejected") {
    REQUIRE_THROWS_AS(metric_from_json(Json::array()), ConfigError);
    REQUIRE_THROWS_AS(metric_from_json(Json{{"family", "hyperbolic"}}),
                      ConfigError);
    Json raw;
    raw["g11"] = Json::array({Json::array({0, 0, 1.0, 0.0})});
    raw["g12"] = Json::array();
    REQUIRE_THROWS_AS(metric_from_json(raw), ConfigError); // g22 missing
    raw["g22"] = Json::array({Json::array({0.5, 0, -1.0, 0.0})});
    REQUIRE_THROWS_AS(metric_from_json(raw), ConfigError); // fractional freq
    raw["g22"] = Json::array({Json::array({0, 0, -1.0})});
    REQUIRE_THROWS_AS(metric_from_json(raw), ConfigError); // 3-entry term
}

TEST_CASE("run configs round-trip and reject unknown keys") {
    RunConfig c;
    c.metric_path = "metric.json";
    c.window = {-1.0, 2.0, 0.5, 4.5};
    c.nx = 17;
    c.ny = 9;
    c.tol = 2.5e-4;
    c.seed = 1234567890123ull;
    c.use_k = true;
    c.k = {3, -4};
    c.cross_check = true;
    RunConfig back = config_from_json(config_to_json(c));
    REQUIRE(back.metric_path == c.metric_path);
    REQUIRE(back.window.x0 == c.window.x0);
    REQUIRE(back.window.y1 == c.window.y1);
    REQUIRE(back.nx == 17);
    REQUIRE(back.ny == 9);
    REQUIRE(back.tol == c.tol);
    REQUIRE(back.seed == c.seed);
    REQUIRE(back.use_k);
    REQUIRE(back.k[0] == 3);
    REQUIRE(back.k[1] == -4);
    REQUIRE(back.cross_check);

    RunConfig d; // alpha branch
    d.alpha = {0.6, 0.8};
    RunConfig dback = config_from_json(config_to_json(d));
    REQUIRE_FALSE(dback.use_k);
    REQUIRE(dback.alpha.x == 0.6);

    REQUIRE_THROWS_AS(config_from_json(Json{{"granularity", 3}}), ConfigError);
    REQUIRE_THROWS_AS(config_from_json(Json{{"window", Json::array({0, 1})}}),
                      ConfigError);
    REQUIRE_THROWS_AS(
        config_from_json(Json{{"k", Json::array({0.5, 1.0})}}), ConfigError);
    REQUIRE_THROWS_AS(config_from_json(Json{{"schema", "teik-config-v9"}}),
                      ConfigError);
}

TEST_CASE("field CSV round-trips nodes, values and mask") {
    ScalarField f = tiny_field();
    MetricSpec flat = MetricSpec::flat();
    std::string path = scratch("field.csv");
    write_field_csv(path, f, flat);

    FieldCsv back = read_field_csv(path);
    REQUIRE(back.field.nx == 3);
    REQUIRE(back.field.ny == 3);
    REQUIRE(back.field.window.x1 == 1.0);
    REQUIRE(back.field.window.y0 == 2.0);
    for (int iy = 0; iy < 3; ++iy)
        for (int ix = 0; ix < 3; ++ix) {
            size_t id = f.index(ix, iy);
            REQUIRE(int(back.field.valid[id]) == int(f.valid[id]));
            if (f.valid[id]) {
                REQUIRE(back.field.values[id] == f.values[id]);
                REQUIRE(back.field.gradient[id].y == 1.0);
                // gradient (0,1) solves the flat unit-norm equation exactly
                REQUIRE(back.residual[id] == 0.0);
            } else {
                REQUIRE(back.field.values[id] == 0.0);
            }
        }
}

TEST_CASE("writers are byte-deterministic") {
    ScalarField f = tiny_field();
    MetricSpec flat = MetricSpec::flat();
    std::string a = scratch("field_a.csv"), b = scratch("field_b.csv");
    write_field_csv(a, f, flat);
    write_field_csv(b, f, flat);
    REQUIRE(slurp(a) == slurp(b));

    std::string ja = scratch("metric_a.json"), jb = scratch("metric_b.json");
    write_json_file(ja, metric_to_json(MetricSpec::conformal(0.1)));
    write_json_file(jb, metric_to_json(MetricSpec::conformal(0.1)));
    REQUIRE(slurp(ja) == slurp(jb));
}

TEST_CASE("field CSV rejections") {
    std::string path = scratch("bad.csv");
    spit(path, "x,y,u\n0,0,0\n");
    REQUIRE_THROWS_AS(read_field_csv(path), ConfigError);

    spit(path, "x,y,u,ux,uy,residual,valid\n0,0,zero,0,0,0,1\n");
    REQUIRE_THROWS_AS(read_field_csv(path), ConfigError);

    // five rows, three of them on the first y-line: not a rectangle
    spit(path,
         "x,y,u,ux,uy,residual,valid\n"
         "0,0,0,0,0,0,1\n0.5,0,0,0,0,0,1\n1,0,0,0,0,0,1\n"
         "0,1,0,0,0,0,1\n0.5,1,0,0,0,0,1\n");
    REQUIRE_THROWS_AS(read_field_csv(path), ConfigError);

    REQUIRE_THROWS_AS(read_field_csv(scratch("absent.csv")), ConfigError);
}

TEST_CASE("leaf CSV round-trips grouped paths") {
    FoliationChart chart;
    Leaf a;
    a.seed = {0.1, 0.2};
    a.samples = {{0.0, {0.1, 0.2}, {0.0, 1.0}}, {0.5, {0.1, 0.7}, {0.0, 1.0}}};
    Leaf b;
    b.seed = {0.9, 0.2};
    b.samples = {{0.0, {0.9, 0.2}, {0.0, 1.0}},
                 {0.5, {0.9, 0.7}, {0.0, 1.0}},
                 {1.0, {0.9, 1.2}, {0.0, 1.0}}};
    chart.leaves = {a, b};

    std::string path = scratch("leaves.csv");
    write_leaves_csv(path, chart);
    auto back = read_leaves_csv(path);
    REQUIRE(back.size() == 2);
    REQUIRE(back[0].id == 0);
    REQUIRE(back[0].t.size() == 2);
    REQUIRE(back[1].p.size() == 3);
    REQUIRE(back[1].p[2].y == 1.2);
    REQUIRE(back[0].p[1].x == 0.1);

    spit(path, "leaf,t,x,y\n");
    REQUIRE_THROWS_AS(read_leaves_csv(path), ConfigError);
}

TEST_CASE("report schema tags are enforced") {
    ConeEstimate c;
    c.m_minus = {0.7, 0.7};
    c.m_plus = {-0.7, 0.7};
    c.deviation_bound_D = 1e-7;
    c.integration_length = 100.0;
    std::string path = scratch("cone.json");
    write_json_file(path, cone_to_json(c));

    Json j = read_report(path, "teik-cone-v1");
    ConeEstimate back = cone_from_json(j);
    REQUIRE(back.m_minus.x == c.m_minus.x);
    REQUIRE(back.deviation_bound_D == c.deviation_bound_D);
    REQUIRE(back.integration_length == 100.0);

    REQUIRE_THROWS_AS(read_report(path, "teik-distance-v1"), ConfigError);
    REQUIRE_THROWS_AS(load_json_file(scratch("absent.json")), ConfigError);
    spit(path, "{not json");
    REQUIRE_THROWS_AS(load_json_file(path), ConfigError);
}

TEST_CASE("distance reports serialize status and maximizer") {
    DistanceResult r;
    r.value = 1.25;
    r.status = CausalStatus::chronological;
    Geodesic g;
    g.samples = {{0.0, {0.0, 0.0}, {0.0, 1.0}}, {1.25, {0.0, 1.25}, {0.0, 1.0}}};
    r.maximizer = g;
    Json j = distance_to_json(r);
    REQUIRE(j["schema"] == "teik-distance-v1");
    REQUIRE(j["value"] == 1.25);
    REQUIRE(j["status"] == "chronological");
    REQUIRE(j["maximizer"].size() == 2);

    DistanceResult s;
    s.status = CausalStatus::spacelike;
    Json js = distance_to_json(s);
    REQUIRE(js["maximizer"].empty());
    REQUIRE(js["status"] == "spacelike");
}

TEST_CASE("periodicity reports map absent axes to null") {
    PeriodicityReport r;
    r.defect = 1e-4;
    r.defect_x = 1e-4;
    r.defect_y = std::numeric_limits<double>::quiet_NaN();
    r.value_spread_x = 2e-5;
    r.value_spread_y = std::numeric_limits<double>::quiet_NaN();
    r.pairs_x = 12;
    r.pairs_y = 0;
    Json j = periodicity_to_json(r);
    REQUIRE(j["defect_x"] == Approx(1e-4));
    REQUIRE(j["defect_y"].is_null());
    REQUIRE(j["value_spread_y"].is_null());
    REQUIRE(j["pairs_y"] == 0);
}
