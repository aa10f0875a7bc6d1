#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include "teik/io.hpp"

using namespace teik;
namespace fs = std::filesystem;

namespace {

std::string bin() {
    const char* b = std::getenv("TEIK_BIN");
    REQUIRE(b != nullptr); // set by the test harness
    return b;
}

int run(const std::string& args) {
    std::string cmd = bin() + " " + args + " >/dev/null 2>&1";
    int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    REQUIRE(WIFEXITED(status));
    return WEXITSTATUS(status);
}

fs::path scratch(const std::string& name) {
    fs::path d = fs::temp_directory_path() / "teik_cli_tests" / name;
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

std::string flat_spec(const fs::path& dir) {
    std::string p = (dir / "flat.json").string();
    write_json_file(p, metric_to_json(MetricSpec::flat()));
    return p;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("cone command writes the report and echoes the config") {
    fs::path d = scratch("cone");
    std::string m = flat_spec(d);
    REQUIRE(run("cone --metric " + m + " --out " + (d / "out").string()) == 0);

    Json cj = read_report((d / "out" / "cone.json").string(), "teik-cone-v1");
    ConeEstimate cone = cone_from_json(cj);
    double s = std::sqrt(0.5);
    REQUIRE((cone.m_plus - Vec2{-s, s}).norm() < 1e-6);
    REQUIRE((cone.m_minus - Vec2{s, s}).norm() < 1e-6);
    REQUIRE(cone.deviation_bound_D < 1e-6);

    Json cfg = read_report((d / "out" / "config.json").string(),
                           "teik-config-v1");
    REQUIRE(cfg["metric"] == m);
}

TEST_CASE("distance command reports value and causal status") {
    fs::path d = scratch("distance");
    std::string m = flat_spec(d);
    std::string out = (d / "out").string();
    REQUIRE(run("distance --metric " + m + " --out " + out +
                " --px 0 --py 0 --x 0.5 --y 2") == 0);
    Json j = read_report(out + "/distance.json", "teik-distance-v1");
    REQUIRE(j["value"].get<double>() ==
            Approx(std::sqrt(4.0 - 0.25)).epsilon(1e-6));
    REQUIRE(j["status"] == "chronological");
    REQUIRE(j["maximizer"].size() >= 2);

    REQUIRE(run("distance --metric " + m + " --out " + out +
                " --px 0 --py 0 --x 2 --y 0.1") == 0);
    Json js = read_report(out + "/distance.json", "teik-distance-v1");
    REQUIRE(js["status"] == "spacelike");
    REQUIRE(js["value"].get<double>() == 0.0);
}

TEST_CASE("pole command confirms the flat plane has no conjugate points") {
    fs::path d = scratch("pole");
    std::string m = flat_spec(d);
    std::string out = (d / "out").string();
    REQUIRE(run("pole --metric " + m + " --out " + out +
                " --x 0.5 --y 0.5 --horizon 20 --sweep 8") == 0);
    Json j = read_report(out + "/pole.json", "teik-pole-v1");
    REQUIRE(j["is_pole_up_to_horizon"] == true);
    REQUIRE(j["directions_checked"].get<int>() == 16);
}

TEST_CASE("busemann command is byte-deterministic") {
    fs::path d = scratch("busemann");
    std::string m = flat_spec(d);
    std::string common = "busemann --metric " + m +
                         " --window 0,1,0,1 --res 17,17 --alpha 0,1"
                         " --poles 64 --spacing 5 --tol 1e-3 --step 0.1";
    REQUIRE(run(common + " --out " + (d / "a").string()) == 0);
    REQUIRE(run(common + " --out " + (d / "b").string()) == 0);

    REQUIRE(slurp(d / "a" / "field.csv") == slurp(d / "b" / "field.csv"));
    REQUIRE(slurp(d / "a" / "history.json") == slurp(d / "b" / "history.json"));

    FieldCsv f = read_field_csv((d / "a" / "field.csv").string());
    REQUIRE(f.field.nx == 17);
    REQUIRE(f.field.ny == 17);

    Json h = read_report((d / "a" / "history.json").string(),
                         "teik-history-v1");
    REQUIRE(h["iterations_used"].get<int>() >= 1);
    REQUIRE_FALSE(h["entries"].empty());

    // one lattice period: every shifted pair hits the masked boundary
    Json p = read_report((d / "a" / "periodicity.json").string(),
                         "teik-periodicity-v1");
    REQUIRE(p["available"] == false);
}

TEST_CASE("foliate command consumes a previously written field") {
    fs::path d = scratch("foliate");
    std::string m = flat_spec(d);
    std::string out1 = (d / "field").string();
    REQUIRE(run("busemann --metric " + m +
                " --window 0,1,0,1 --res 17,17 --alpha 0,1"
                " --poles 64 --spacing 5 --tol 1e-3 --step 0.1 --out " +
                out1) == 0);
    std::string out2 = (d / "leaves").string();
    REQUIRE(run("foliate --metric " + m + " --field " + out1 +
                "/field.csv --seeds 4 --horizon 0.7 --out " + out2) == 0);

    auto leaves = read_leaves_csv(out2 + "/leaves.csv");
    REQUIRE(leaves.size() == 4);
    for (const auto& lp : leaves) REQUIRE(lp.t.size() >= 2);

    Json dj = read_report(out2 + "/disjointness.json",
                          "teik-disjointness-v1");
    REQUIRE(dj["n_leaves"].get<int>() == 4);
    REQUIRE(dj["min_separation"].get<double>() > 0.0);

    Json dir = read_report(out2 + "/direction.json", "teik-direction-v1");
    REQUIRE(dir["leaves"].size() == 4);
}

TEST_CASE("numerical failures exit with code 1") {
    fs::path d = scratch("exit1");
    std::string m = flat_spec(d);
    // eight poles cannot push the ladder gap below 1e-9
    REQUIRE(run("busemann --metric " + m +
                " --window 0,1,0,1 --res 9,9 --alpha 0,1"
                " --poles 8 --spacing 5 --tol 1e-9 --step 0.1 --out " +
                (d / "out").string()) == 1);
}

TEST_CASE("configuration failures exit with code 2") {
    fs::path d = scratch("exit2");
    std::string m = flat_spec(d);
    std::string out = " --out " + (d / "out").string();

    REQUIRE(run("cone" + out) == 2); // no metric given

    std::string bad = (d / "bad.json").string();
    {
        std::ofstream o(bad);
        o << "{not json";
    }
    REQUIRE(run("cone --metric " + bad + out) == 2);

    std::string unknown = (d / "unknown.json").string();
    write_json_file(unknown, Json{{"family", "hyperbolic"}});
    REQUIRE(run("cone --metric " + unknown + out) == 2);

    // wrong-signature spec: g22 has the sign of g11
    std::string wrong = (d / "wrong.json").string();
    Json w;
    w["family"] = "raw";
    w["g11"] = Json::array({Json::array({0, 0, 1.0, 0.0})});
    w["g12"] = Json::array();
    w["g22"] = Json::array({Json::array({0, 0, 1.0, 0.0})});
    write_json_file(wrong, w);
    REQUIRE(run("cone --metric " + wrong + out) == 2);

    REQUIRE(run("busemann --metric " + m + " --alpha 0,1 --k 0,1" + out) == 2);
    REQUIRE(run("cone --metric " + m + " --bogus 3" + out) == 2);
    REQUIRE(run("") == 2); // a subcommand is required
}

TEST_CASE("config files drive commands and flags override them") {
    fs::path d = scratch("config");
    std::string m = flat_spec(d);
    RunConfig c;
    c.metric_path = m;
    c.out_dir = (d / "out").string();
    c.length = 50.0;
    std::string cfg = (d / "run.json").string();
    write_json_file(cfg, config_to_json(c));

    REQUIRE(run("cone --config " + cfg) == 0);
    Json echoed = read_report((d / "out" / "config.json").string(),
                              "teik-config-v1");
    REQUIRE(echoed["length"].get<double>() == 50.0);

    // flag wins over the file
    REQUIRE(run("cone --config " + cfg + " --length 25") == 0);
    Json echoed2 = read_report((d / "out" / "config.json").string(),
                               "teik-config-v1");
    REQUIRE(echoed2["length"].get<double>() == 25.0);

    REQUIRE(run("--help") == 0);
}
