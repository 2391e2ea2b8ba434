#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "peeroff/errors.hpp"
#include "peeroff/locations.hpp"
#include "peeroff/random.hpp"
#include "peeroff/scenario.hpp"

using namespace peeroff;
using nlohmann::json;

namespace {

std::string key_of(const json& doc) {
    try {
        parse_scenario_json(doc);
    } catch (const ConfigError& e) {
        return e.key_path();
    }
    return "<accepted>";
}

json minimal() {
    return json::parse(R"({"algorithm": "nop", "horizon_slots": 100, "seed": 1, "stations": [{"id": 0}]})");
}

ScenarioConfig random_config(Rng& rng) {
    auto u = [&] { return uniform01(rng); };
    auto pick = [&](int n) { return static_cast<int>(u() * n); };
    ScenarioConfig c;
    const Algorithm algs[] = {Algorithm::known, Algorithm::wog, Algorithm::wog_observed, Algorithm::nop, Algorithm::greedy};
    c.algorithm = algs[pick(5)];
    c.horizon_slots = pick(100000);
    c.seed = rng();
    c.v = 0.5 + 10.0 * u();
    c.l_max_ms = 50.0 + 30.0 * u();
    c.load_factor = 2.0 * u();
    c.lifting = u() < 0.5 ? LiftingMode::faithful : LiftingMode::eager;
    c.early_refuse = (c.algorithm == Algorithm::wog || c.algorithm == Algorithm::wog_observed) && u() < 0.5;
    c.enforce_deadline = u() < 0.5;
    c.check_bounds = u() < 0.5;
    c.reassign_period = 1 + pick(5000);
    c.trace = u() < 0.5;
    c.output_dir = "out" + std::to_string(pick(100));
    c.punish_blocked = u() < 0.5;
    if (u() < 0.5) c.nop_backlog_cap = 1 + pick(50);
    if (c.algorithm != Algorithm::known && u() < 0.5) {
        c.workload = WorkloadRange{1e6 * u(), 2e6 + 6e6 * u()};
        c.k_classes = 1 + pick(5);
        c.energy_per_cycle_nj = 10.0 * u();
    }
    const int n = 1 + pick(4);
    for (int i = 0; i < n; ++i) {
        StationConfig s;
        s.id = i;
        s.cpu_rate = 1e7 + 1e7 * u();
        s.e_static = 0.01 * u();
        s.e_active = s.e_static + 0.1 + u();
        s.e_budget = s.e_static + 0.05 * u();
        if (u() < 0.5) s.position = GeoPoint{-37.816 + 0.001 * u(), 144.96 + 0.001 * u()};
        switch (pick(3)) {
            case 0: s.utility = UtilitySpec::linear(0.5 + u()); break;
            case 1: s.utility = UtilitySpec::log(0.5 + u()); break;
            default: s.utility = UtilitySpec::piecewise({{0.0, 0.0}, {0.5, 0.5}, {1.0, 0.5 + 0.5 * u()}});
        }
        c.stations.push_back(s);
    }
    if (u() < 0.5) c.lambda.assign(static_cast<std::size_t>(n), u());
    c.topology = TopologySpec{};
    c.topology->delta_slots = pick(4);
    switch (pick(3)) {
        case 0: c.arrivals = BernoulliSpec{{u()}}; break;
        case 1: c.arrivals = PoissonGroupsSpec{{GroupSpec{std::nullopt, {0}}}, u(), 50.0 + 100.0 * u()}; break;
        default:
            c.arrivals = MarkovBurstSpec{{GroupSpec{GeoPoint{-37.816, 144.96}, {}}}, 0.1 + 0.5 * u(), 0.1 + 0.5 * u(), u(), 100.0};
    }
    return c;
}

}  // namespace

TEST_CASE("a minimal config gets the defaults") {
    const auto c = parse_scenario_json(minimal());
    CHECK(c.algorithm == Algorithm::nop);
    CHECK(c.horizon_slots == 100);
    CHECK(c.v == 10.0);
    CHECK(c.k_classes == 1);
    CHECK(c.l_max_ms == 50.0);
    CHECK(c.slot_ms == 1.0);
    CHECK(c.lifting == LiftingMode::faithful);
    REQUIRE(c.stations.size() == 1);
    CHECK(c.stations[0].cpu_rate == 2e7);
}

TEST_CASE("configuration errors name the key") {
    auto doc = minimal();
    doc["v"] = 50;
    doc["enforce_deadline"] = true;
    doc["topology"] = {{"delta_slots", 5}};
    CHECK(key_of(doc) == "v");
    // one station has no trips: the ceiling is 48
    doc["v"] = 38.5;
    CHECK(key_of(doc) == "<accepted>");
    doc["stations"] = json::parse(R"([{"id": 0}, {"id": 1}])");
    doc["v"] = 50;
    CHECK(key_of(doc) == "v");
    doc["v"] = 38;
    CHECK(key_of(doc) == "<accepted>");
    doc["v"] = 38.5;
    CHECK(key_of(doc) == "v");

    doc = minimal();
    doc["arrivals"] = {{"kind", "poisson_groups"}, {"rate", -0.25}, {"groups", {{{"bs", {0}}}}}};
    CHECK(key_of(doc) == "arrivals.rate");

    doc = minimal();
    doc["stations"][0]["e_budget"] = -1.0;
    CHECK(key_of(doc).rfind("stations[0]", 0) == 0);

    doc = minimal();
    doc["stations"][0]["speed"] = 1;
    CHECK(key_of(doc) == "stations[0].speed");

    doc = minimal();
    doc["colour"] = "red";
    CHECK(key_of(doc) == "colour");

    doc = minimal();
    doc["horizon_slots"] = "long";
    CHECK(key_of(doc) == "horizon_slots");

    doc = minimal();
    doc["arrivals"] = {{"kind", "bernoulli"}, {"p", {0.5, 1.5}}};
    CHECK(key_of(doc) == "arrivals.p[1]");

    doc = minimal();
    doc["algorithm"] = "known";
    doc["k_classes"] = 2;
    doc["workload"] = {{"min_cycles", 1e6}, {"max_cycles", 2e6}};
    CHECK(key_of(doc) == "k_classes");

    doc = minimal();
    doc["early_refuse"] = true;
    CHECK(key_of(doc) == "early_refuse");
}

TEST_CASE("emit and parse round-trip") {
    Rng rng = make_stream(21, 9);
    int checked = 0;
    for (int i = 0; i < 300; ++i) {
        const auto c = random_config(rng);
        ScenarioConfig back;
        try {
            back = parse_scenario_json(emit_scenario(c));
        } catch (const ConfigError& e) {
            // random draws may break the deadline ceiling; nothing else may fail
            REQUIRE(e.key_path() == "v");
            continue;
        }
        CHECK(back == c);
        CHECK(emit_scenario(back) == emit_scenario(c));
        ++checked;
    }
    CHECK(checked > 200);
}

TEST_CASE("overrides") {
    const auto c = parse_scenario_json(minimal());
    CHECK(with_override(c, "v", 20).v == 20.0);
    CHECK(with_override(c, "stations.0.e_budget", 0.06).stations[0].e_budget == 0.06);
    auto d = with_override(c, "topology", json::parse(R"({"delta_slots": 2})"));
    CHECK(d.topology->delta_slots == 2);
    CHECK(with_override(d, "topology.delta_slots", 3).topology->delta_slots == 3);
    CHECK_THROWS_AS(with_override(c, "nonsense", 1), ConfigError);
    CHECK_THROWS_AS(with_override(c, "v", -1), ConfigError);
}

TEST_CASE("parse_scenario reads files and resolves dataset paths") {
    const auto dir = std::filesystem::temp_directory_path() / "peeroff_scn_test";
    std::filesystem::create_directories(dir);
    {
        std::ofstream f(dir / "s.json");
        f << R"({"algorithm": "wog", "stations": [{}], "dataset": {"path": "locs.csv"}})";
    }
    const auto c = parse_scenario((dir / "s.json").string());
    REQUIRE(c.dataset.has_value());
    CHECK(c.dataset->path == (dir / "locs.csv").lexically_normal().string());
    CHECK_THROWS_AS(parse_scenario((dir / "missing.json").string()), IoError);
    {
        std::ofstream f(dir / "bad.json");
        f << "{\"v\": ";
    }
    CHECK_THROWS_AS(parse_scenario((dir / "bad.json").string()), ConfigError);
    std::filesystem::remove_all(dir);
}

TEST_CASE("location files") {
    const BoundingBox box;
    // 250 m due north: 250 / 111195 degrees of latitude
    std::istringstream two("id,kind,lat,lon\nA,bs,-37.8175,144.96\nB,Bs,-37.81525172,144.96\nu1,USER,-37.8174,144.96\n");
    const auto set = parse_locations(two, box, "two.csv");
    REQUIRE(set.stations.size() == 2);
    CHECK(set.groups.size() == 1);
    CHECK(great_circle_distance_m(set.stations[0], set.stations[1]) == doctest::Approx(250.0).epsilon(0.002));
    const auto topo = topology_from_positions(set.stations);
    CHECK(topo.delta(0, 1) == 3);
    CHECK(topo.delta(1, 0) == 3);
    const auto attach = attach_groups(set.groups, set.stations, 100.0);
    CHECK(attach == std::vector<std::vector<int>>{{0}});

    std::istringstream outside("id,kind,lat,lon\nA,bs,10.0,10.0\n");
    try {
        parse_locations(outside, box, "far.csv");
        FAIL("expected an error");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("no stations in bounding box") != std::string::npos);
    }

    std::istringstream bad("id,kind,lat,lon\nA,bs,-37.8175,144.96\nB,bs,north,144.96\n");
    try {
        parse_locations(bad, box, "bad.csv");
        FAIL("expected an error");
    } catch (const IoError& e) {
        CHECK(std::string(e.what()).find("bad.csv:3:") == 0);
    }
    std::istringstream kind("id,kind,lat,lon\nA,tower,-37.8175,144.96\n");
    CHECK_THROWS_AS(parse_locations(kind, box, "k.csv"), IoError);
    std::istringstream header("name,lat,lon\n");
    CHECK_THROWS_AS(parse_locations(header, box, "h.csv"), IoError);

    const std::vector<GeoPoint> lonely{{-37.8150, 144.966}};
    try {
        attach_groups(lonely, set.stations, 100.0);
        FAIL("expected an error");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("group(s) 0") != std::string::npos);
    }
}

TEST_CASE("synthetic layouts") {
    const BoundingBox box;
    const auto a = generate_locations(5, 36, 126, box);
    const auto b = generate_locations(5, 36, 126, box);
    CHECK(a.stations == b.stations);
    CHECK(a.groups == b.groups);
    CHECK(a.stations.size() == 36);
    CHECK(a.groups.size() == 126);
    for (const auto& p : a.stations) CHECK(box.contains(p));
    for (const auto& p : a.groups) CHECK(box.contains(p));
    CHECK_NOTHROW(attach_groups(a.groups, a.stations, 100.0));

    std::stringstream csv;
    write_locations_csv(csv, a);
    const auto back = parse_locations(csv, box, "gen.csv");
    REQUIRE(back.stations.size() == 36);
    CHECK(great_circle_distance_m(back.stations[7], a.stations[7]) < 1e-3);
}

TEST_CASE("resolve with a dataset broadcasts a template station") {
    auto doc = json::parse(R"({"algorithm": "wog", "stations": [{"e_budget": 0.07}],
        "dataset": {"n_stations": 8, "n_groups": 20},
        "arrivals": {"kind": "poisson_groups", "rate": 0.1}})");
    const auto rs = resolve_scenario(parse_scenario_json(doc));
    REQUIRE(rs.stations.size() == 8);
    for (const auto& s : rs.stations) {
        CHECK(s.e_budget == 0.07);
        CHECK(s.position.has_value());
    }
    CHECK(rs.group_attach.size() == 20);
    CHECK(rs.topology.n_stations == 8);
    CHECK(rs.l_max_slots == 50);
}
