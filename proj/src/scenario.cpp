#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "peeroff/errors.hpp"
#include "peeroff/locations.hpp"
#include "peeroff/lyapunov.hpp"
#include "peeroff/scenario.hpp"

namespace peeroff {

using nlohmann::json;

const char* to_string(Algorithm a) noexcept {
    switch (a) {
        case Algorithm::known: return "known";
        case Algorithm::wog: return "wog";
        case Algorithm::wog_observed: return "wog-observed";
        case Algorithm::nop: return "nop";
        case Algorithm::greedy: return "greedy";
    }
    return "?";
}

const char* to_string(LiftingMode m) noexcept {
    return m == LiftingMode::faithful ? "faithful" : "eager";
}

namespace {

std::string join(const std::string& base, const std::string& key) {
    return base.empty() ? key : base + "." + key;
}

std::string index(const std::string& base, std::size_t i) {
    return base + "[" + std::to_string(i) + "]";
}

// Strict object reader: typed getters with key paths, unknown keys rejected by done().
class Obj {
public:
    Obj(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
    }

    bool has(const std::string& key) const { return j_.contains(key); }
    std::string path(const std::string& key) const { return join(path_, key); }

    const json* raw(const std::string& key) {
        seen_.insert(key);
        const auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    bool number(const std::string& key, double& out) {
        const json* v = raw(key);
        if (!v) return false;
        if (!v->is_number()) throw ConfigError(path(key), "expected a number");
        out = v->get<double>();
        if (!std::isfinite(out)) throw ConfigError(path(key), "must be finite");
        return true;
    }
    bool integer(const std::string& key, std::int64_t& out) {
        const json* v = raw(key);
        if (!v) return false;
        if (!v->is_number_integer()) throw ConfigError(path(key), "expected an integer");
        out = v->get<std::int64_t>();
        return true;
    }
    bool integer(const std::string& key, int& out) {
        std::int64_t x = 0;
        if (!integer(key, x)) return false;
        if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max())
            throw ConfigError(path(key), "out of range");
        out = static_cast<int>(x);
        return true;
    }
    bool unsigned_int(const std::string& key, std::uint64_t& out) {
        const json* v = raw(key);
        if (!v) return false;
        if (!v->is_number_unsigned()) throw ConfigError(path(key), "expected a non-negative integer");
        out = v->get<std::uint64_t>();
        return true;
    }
    bool boolean(const std::string& key, bool& out) {
        const json* v = raw(key);
        if (!v) return false;
        if (!v->is_boolean()) throw ConfigError(path(key), "expected true or false");
        out = v->get<bool>();
        return true;
    }
    bool string(const std::string& key, std::string& out) {
        const json* v = raw(key);
        if (!v) return false;
        if (!v->is_string()) throw ConfigError(path(key), "expected a string");
        out = v->get<std::string>();
        return true;
    }
    const json& require(const std::string& key) {
        const json* v = raw(key);
        if (!v) throw ConfigError(path(key), "missing required key");
        return *v;
    }

    void done() const {
        for (const auto& [k, v] : j_.items())
            if (!seen_.count(k)) throw ConfigError(path(k), "unknown key");
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

void check(bool ok, const std::string& path, const std::string& msg) {
    if (!ok) throw ConfigError(path, msg);
}

std::vector<double> number_list(const json& j, const std::string& path) {
    check(j.is_array(), path, "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        check(j[i].is_number(), index(path, i), "expected a number");
        out.push_back(j[i].get<double>());
        check(std::isfinite(out.back()), index(path, i), "must be finite");
    }
    return out;
}

std::vector<int> int_list(const json& j, const std::string& path) {
    check(j.is_array(), path, "expected an array of integers");
    std::vector<int> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        check(j[i].is_number_integer(), index(path, i), "expected an integer");
        out.push_back(j[i].get<int>());
    }
    return out;
}

std::vector<std::vector<int>> int_matrix(const json& j, const std::string& path) {
    check(j.is_array(), path, "expected an array of rows");
    std::vector<std::vector<int>> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(int_list(j[i], index(path, i)));
    return out;
}

GeoPoint parse_point(const json& j, const std::string& path) {
    Obj o(j, path);
    GeoPoint p;
    if (!o.number("lat", p.lat)) throw ConfigError(o.path("lat"), "missing required key");
    if (!o.number("lon", p.lon)) throw ConfigError(o.path("lon"), "missing required key");
    check(p.lat >= -90.0 && p.lat <= 90.0, o.path("lat"), "must be in [-90, 90]");
    check(p.lon >= -180.0 && p.lon <= 180.0, o.path("lon"), "must be in [-180, 180]");
    o.done();
    return p;
}

json emit_point(const GeoPoint& p) { return {{"lat", p.lat}, {"lon", p.lon}}; }

UtilitySpec parse_utility(const json& j, const std::string& path) {
    Obj o(j, path);
    std::string kind;
    if (!o.string("kind", kind)) throw ConfigError(o.path("kind"), "missing required key");
    try {
        if (kind == "linear") {
            double slope = 1.0;
            o.number("slope", slope);
            o.done();
            return UtilitySpec::linear(slope);
        }
        if (kind == "log") {
            double scale = 1.0;
            o.number("scale", scale);
            o.done();
            return UtilitySpec::log(scale);
        }
        if (kind == "piecewise") {
            const json& bp = o.require("breakpoints");
            check(bp.is_array(), o.path("breakpoints"), "expected an array of [x, g] pairs");
            std::vector<std::pair<double, double>> pts;
            for (std::size_t i = 0; i < bp.size(); ++i) {
                const auto v = number_list(bp[i], index(o.path("breakpoints"), i));
                check(v.size() == 2, index(o.path("breakpoints"), i), "expected [x, g]");
                pts.emplace_back(v[0], v[1]);
            }
            o.done();
            return UtilitySpec::piecewise(std::move(pts));
        }
    } catch (const ConfigError& e) {
        if (e.key_path().rfind(path, 0) == 0) throw;
        throw ConfigError(path + (e.key_path().empty() ? "" : "." + e.key_path()), e.what());
    }
    throw ConfigError(o.path("kind"), "unknown utility kind '" + kind + "'");
}

json emit_utility(const UtilitySpec& u) {
    return std::visit(
        [](const auto& s) -> json {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, LinearUtility>) {
                return {{"kind", "linear"}, {"slope", s.slope}};
            } else if constexpr (std::is_same_v<T, LogUtility>) {
                return {{"kind", "log"}, {"scale", s.scale}};
            } else {
                json bp = json::array();
                for (const auto& [x, g] : s.breakpoints) bp.push_back({x, g});
                return {{"kind", "piecewise"}, {"breakpoints", bp}};
            }
        },
        u.shape());
}

StationConfig parse_station(const json& j, const std::string& path) {
    Obj o(j, path);
    StationConfig s;
    o.integer("id", s.id);
    if (const json* p = o.raw("position")) s.position = parse_point(*p, o.path("position"));
    o.number("cpu_rate", s.cpu_rate);
    o.number("e_static", s.e_static);
    o.number("e_active", s.e_active);
    o.number("e_budget", s.e_budget);
    if (const json* u = o.raw("utility")) s.utility = parse_utility(*u, o.path("utility"));
    o.done();
    check(s.cpu_rate > 0.0, o.path("cpu_rate"), "must be positive");
    check(s.e_static >= 0.0, o.path("e_static"), "must be non-negative");
    validate_station(s, path);
    return s;
}

json emit_station(const StationConfig& s) {
    json j = {{"id", s.id},
              {"cpu_rate", s.cpu_rate},
              {"e_static", s.e_static},
              {"e_active", s.e_active},
              {"e_budget", s.e_budget},
              {"utility", emit_utility(s.utility)}};
    if (s.position) j["position"] = emit_point(*s.position);
    return j;
}

std::vector<GroupSpec> parse_groups(const json& j, const std::string& path) {
    check(j.is_array(), path, "expected an array of groups");
    std::vector<GroupSpec> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const std::string gp = index(path, i);
        Obj o(j[i], gp);
        GroupSpec g;
        if (const json* p = o.raw("position")) g.position = parse_point(*p, o.path("position"));
        if (const json* b = o.raw("bs")) g.bs = int_list(*b, o.path("bs"));
        o.done();
        check(g.position.has_value() != !g.bs.empty(), gp, "give exactly one of position or a non-empty bs list");
        out.push_back(std::move(g));
    }
    return out;
}

json emit_groups(const std::vector<GroupSpec>& groups) {
    json arr = json::array();
    for (const auto& g : groups) {
        json j = json::object();
        if (g.position) j["position"] = emit_point(*g.position);
        if (!g.bs.empty()) j["bs"] = g.bs;
        arr.push_back(j);
    }
    return arr;
}

ArrivalSpec parse_arrivals(const json& j, const std::string& path) {
    Obj o(j, path);
    std::string kind;
    if (!o.string("kind", kind)) throw ConfigError(o.path("kind"), "missing required key");
    auto prob = [&](double p, const std::string& key) { check(p >= 0.0 && p <= 1.0, o.path(key), "must be in [0, 1]"); };
    if (kind == "bernoulli") {
        BernoulliSpec b;
        b.p = number_list(o.require("p"), o.path("p"));
        check(!b.p.empty(), o.path("p"), "must not be empty");
        for (std::size_t i = 0; i < b.p.size(); ++i)
            check(b.p[i] >= 0.0 && b.p[i] <= 1.0, index(o.path("p"), i), "must be in [0, 1]");
        o.done();
        return b;
    }
    if (kind == "poisson_groups") {
        PoissonGroupsSpec p;
        if (const json* g = o.raw("groups")) p.groups = parse_groups(*g, o.path("groups"));
        o.number("rate", p.rate);
        o.number("attach_radius_m", p.attach_radius_m);
        o.done();
        check(p.rate >= 0.0, o.path("rate"), "must be non-negative");
        check(p.attach_radius_m > 0.0, o.path("attach_radius_m"), "must be positive");
        return p;
    }
    if (kind == "markov_burst") {
        MarkovBurstSpec m;
        if (const json* g = o.raw("groups")) m.groups = parse_groups(*g, o.path("groups"));
        o.number("p_on_to_off", m.p_on_to_off);
        o.number("p_off_to_on", m.p_off_to_on);
        o.number("on_rate", m.on_rate);
        o.number("attach_radius_m", m.attach_radius_m);
        o.done();
        prob(m.p_on_to_off, "p_on_to_off");
        prob(m.p_off_to_on, "p_off_to_on");
        check(m.p_on_to_off + m.p_off_to_on > 0.0, o.path("p_off_to_on"), "chain must move between states");
        check(m.on_rate >= 0.0, o.path("on_rate"), "must be non-negative");
        check(m.attach_radius_m > 0.0, o.path("attach_radius_m"), "must be positive");
        return m;
    }
    throw ConfigError(o.path("kind"), "unknown arrival kind '" + kind + "'");
}

json emit_arrivals(const ArrivalSpec& a) {
    if (const auto* b = std::get_if<BernoulliSpec>(&a)) return {{"kind", "bernoulli"}, {"p", b->p}};
    if (const auto* p = std::get_if<PoissonGroupsSpec>(&a))
        return {{"kind", "poisson_groups"}, {"groups", emit_groups(p->groups)}, {"rate", p->rate},
                {"attach_radius_m", p->attach_radius_m}};
    const auto& m = std::get<MarkovBurstSpec>(a);
    return {{"kind", "markov_burst"},     {"groups", emit_groups(m.groups)}, {"p_on_to_off", m.p_on_to_off},
            {"p_off_to_on", m.p_off_to_on}, {"on_rate", m.on_rate},          {"attach_radius_m", m.attach_radius_m}};
}

std::optional<Algorithm> algorithm_from(const std::string& s) {
    for (auto a : {Algorithm::known, Algorithm::wog, Algorithm::wog_observed, Algorithm::nop, Algorithm::greedy})
        if (s == to_string(a)) return a;
    return std::nullopt;
}

int l_max_slots_of(const ScenarioConfig& cfg) {
    return static_cast<int>(std::floor(cfg.l_max_ms / cfg.slot_ms + 1e-9));
}

// Topology for the configured stations, without touching the file system.
Topology build_topology(const ScenarioConfig& cfg, const std::vector<StationConfig>& stations) {
    const std::size_t n = stations.size();
    Topology topo;
    if (cfg.topology) {
        const auto& ts = *cfg.topology;
        topo = Topology::uniform(n, ts.delta_slots.value_or(0));
        if (!ts.delta_matrix.empty()) {
            check(ts.delta_matrix.size() == n, "topology.delta_matrix", "needs one row per station");
            for (std::size_t r = 0; r < n; ++r) {
                check(ts.delta_matrix[r].size() == n, index("topology.delta_matrix", r), "needs one entry per station");
                for (std::size_t c = 0; c < n; ++c) topo.delta(r, c) = ts.delta_matrix[r][c];
            }
        }
        if (!ts.peer_mask.empty()) {
            check(ts.peer_mask.size() == n, "topology.peer_mask", "needs one row per station");
            for (std::size_t r = 0; r < n; ++r) {
                check(ts.peer_mask[r].size() == n, index("topology.peer_mask", r), "needs one entry per station");
                for (std::size_t c = 0; c < n; ++c) {
                    check(ts.peer_mask[r][c] == 0 || ts.peer_mask[r][c] == 1, index(index("topology.peer_mask", r), c),
                          "must be 0 or 1");
                    topo.peer_mask(r, c) = static_cast<std::uint8_t>(ts.peer_mask[r][c]);
                }
            }
        }
        topo.refresh_delta_max();
        try {
            validate_topology(topo);
        } catch (const Error& e) {
            throw ConfigError("topology", e.what());
        }
        return topo;
    }
    const bool positioned = n > 0 && std::all_of(stations.begin(), stations.end(), [](const auto& s) { return s.position.has_value(); });
    if (positioned) {
        std::vector<GeoPoint> pos;
        for (const auto& s : stations) pos.push_back(*s.position);
        return topology_from_positions(pos, cfg.slot_ms);
    }
    return Topology::uniform(n, 0);
}

void check_deadline(const ScenarioConfig& cfg, const std::vector<StationConfig>& stations, const Topology& topo) {
    if (!cfg.enforce_deadline) return;
    const WogConfig wc = make_wog_config(cfg.v, ArrivalMode::known_lambda, l_max_slots_of(cfg), stations);
    const BoundReport r = deadline_bounds(wc, stations, topo);
    if (cfg.v > r.v_ceiling)
        throw ConfigError("v", "exceeds the deadline ceiling " + std::to_string(r.v_ceiling) +
                                   " (enforce_deadline is set)");
}

}  // namespace

ScenarioConfig parse_scenario_json(const json& doc) {
    Obj o(doc, "");
    ScenarioConfig c;
    std::string s;
    if (o.string("algorithm", s)) {
        auto a = algorithm_from(s);
        check(a.has_value(), "algorithm", "unknown algorithm '" + s + "'");
        c.algorithm = *a;
    }
    o.integer("horizon_slots", c.horizon_slots);
    o.unsigned_int("seed", c.seed);
    o.number("v", c.v);
    o.integer("k_classes", c.k_classes);
    o.number("l_max_ms", c.l_max_ms);
    o.number("slot_ms", c.slot_ms);
    o.number("load_factor", c.load_factor);
    if (o.string("lifting", s)) {
        check(s == "faithful" || s == "eager", "lifting", "must be faithful or eager");
        c.lifting = s == "faithful" ? LiftingMode::faithful : LiftingMode::eager;
    }
    o.boolean("early_refuse", c.early_refuse);
    o.boolean("enforce_deadline", c.enforce_deadline);
    o.boolean("check_bounds", c.check_bounds);
    o.integer("reassign_period", c.reassign_period);
    o.number("energy_per_cycle_nj", c.energy_per_cycle_nj);
    if (const json* w = o.raw("workload")) {
        Obj wo(*w, "workload");
        WorkloadRange r;
        wo.number("min_cycles", r.min_cycles);
        wo.number("max_cycles", r.max_cycles);
        wo.done();
        check(r.min_cycles >= 0.0, "workload.min_cycles", "must be non-negative");
        check(r.max_cycles > r.min_cycles, "workload.max_cycles", "must exceed min_cycles");
        c.workload = r;
    }
    o.boolean("giant_binding", c.giant_binding);
    o.boolean("punish_blocked", c.punish_blocked);
    int cap = 0;
    if (o.integer("nop_backlog_cap", cap)) {
        check(cap >= 1, "nop_backlog_cap", "must be at least 1");
        c.nop_backlog_cap = cap;
    }
    if (const json* l = o.raw("lambda")) c.lambda = number_list(*l, "lambda");
    o.string("output_dir", c.output_dir);
    o.boolean("trace", c.trace);
    if (const json* st = o.raw("stations")) {
        check(st->is_array(), "stations", "expected an array of stations");
        for (std::size_t i = 0; i < st->size(); ++i) c.stations.push_back(parse_station((*st)[i], index("stations", i)));
    }
    if (const json* d = o.raw("dataset")) {
        Obj dob(*d, "dataset");
        DatasetSpec ds;
        dob.string("path", ds.path);
        if (const json* b = dob.raw("box")) {
            Obj bo(*b, "dataset.box");
            bo.number("lat_min", ds.box.lat_min);
            bo.number("lat_max", ds.box.lat_max);
            bo.number("lon_min", ds.box.lon_min);
            bo.number("lon_max", ds.box.lon_max);
            bo.done();
            check(ds.box.lat_min < ds.box.lat_max, "dataset.box.lat_max", "must exceed lat_min");
            check(ds.box.lon_min < ds.box.lon_max, "dataset.box.lon_max", "must exceed lon_min");
        }
        dob.unsigned_int("generate_seed", ds.generate_seed);
        dob.integer("n_stations", ds.n_stations);
        dob.integer("n_groups", ds.n_groups);
        dob.done();
        check(ds.n_stations >= 1, "dataset.n_stations", "must be positive");
        check(ds.n_groups >= 0, "dataset.n_groups", "must be non-negative");
        c.dataset = ds;
    }
    if (const json* t = o.raw("topology")) {
        Obj to(*t, "topology");
        TopologySpec ts;
        int d = 0;
        if (to.integer("delta_slots", d)) {
            check(d >= 0, "topology.delta_slots", "must be non-negative");
            ts.delta_slots = d;
        }
        if (const json* m = to.raw("delta_matrix")) ts.delta_matrix = int_matrix(*m, "topology.delta_matrix");
        if (const json* m = to.raw("peer_mask")) ts.peer_mask = int_matrix(*m, "topology.peer_mask");
        to.done();
        c.topology = ts;
    }
    if (const json* a = o.raw("arrivals")) c.arrivals = parse_arrivals(*a, "arrivals");
    o.done();

    check(c.horizon_slots >= 0, "horizon_slots", "must be non-negative");
    check(c.v > 0.0, "v", "must be positive");
    check(c.k_classes >= 1, "k_classes", "must be at least 1");
    check(c.slot_ms > 0.0, "slot_ms", "must be positive");
    check(c.l_max_ms > 0.0, "l_max_ms", "must be positive");
    check(l_max_slots_of(c) >= 1, "l_max_ms", "must cover at least one slot");
    check(c.load_factor >= 0.0, "load_factor", "must be non-negative");
    check(c.reassign_period >= 1, "reassign_period", "must be at least 1");
    check(c.energy_per_cycle_nj >= 0.0, "energy_per_cycle_nj", "must be non-negative");
    check(c.k_classes == 1 || c.workload.has_value(), "k_classes", "more than one class needs a workload range");
    for (std::size_t i = 0; i < c.lambda.size(); ++i) {
        check(c.lambda[i] >= 0.0, index("lambda", i), "must be non-negative");
        check(!c.giant_binding || c.lambda[i] <= 1.0, index("lambda", i), "must be at most 1 with giant binding");
    }
    if (c.algorithm == Algorithm::known) {
        check(c.k_classes == 1, "k_classes", "the known-rate algorithm runs a single class");
        check(c.giant_binding, "giant_binding", "the known-rate algorithm needs giant binding");
    }
    check(!c.early_refuse || c.algorithm == Algorithm::wog || c.algorithm == Algorithm::wog_observed, "early_refuse",
          "applies to wog and wog-observed only");
    check(!c.stations.empty() || c.dataset.has_value(), "stations", "need an inline list or a dataset");
    if (!c.dataset) {
        if (const auto* b = std::get_if<BernoulliSpec>(&c.arrivals))
            check(b->p.size() == 1 || b->p.size() == c.stations.size(), "arrivals.p", "needs one entry or one per station");
        check(c.lambda.empty() || c.lambda.size() == c.stations.size(), "lambda", "needs one entry per station");
        check_deadline(c, c.stations, build_topology(c, c.stations));
    }
    return c;
}

ScenarioConfig parse_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open scenario file " + path);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("", "invalid JSON in " + path + ": " + e.what());
    }
    ScenarioConfig c = parse_scenario_json(doc);
    if (c.dataset && !c.dataset->path.empty()) {
        std::filesystem::path p(c.dataset->path);
        if (p.is_relative()) c.dataset->path = (std::filesystem::path(path).parent_path() / p).lexically_normal().string();
    }
    return c;
}

json emit_scenario(const ScenarioConfig& c) {
    json j = {{"algorithm", to_string(c.algorithm)},
              {"horizon_slots", c.horizon_slots},
              {"seed", c.seed},
              {"v", c.v},
              {"k_classes", c.k_classes},
              {"l_max_ms", c.l_max_ms},
              {"slot_ms", c.slot_ms},
              {"load_factor", c.load_factor},
              {"lifting", to_string(c.lifting)},
              {"early_refuse", c.early_refuse},
              {"enforce_deadline", c.enforce_deadline},
              {"check_bounds", c.check_bounds},
              {"reassign_period", c.reassign_period},
              {"energy_per_cycle_nj", c.energy_per_cycle_nj},
              {"giant_binding", c.giant_binding},
              {"punish_blocked", c.punish_blocked},
              {"lambda", c.lambda},
              {"output_dir", c.output_dir},
              {"trace", c.trace},
              {"arrivals", emit_arrivals(c.arrivals)}};
    if (c.workload) j["workload"] = {{"min_cycles", c.workload->min_cycles}, {"max_cycles", c.workload->max_cycles}};
    if (c.nop_backlog_cap) j["nop_backlog_cap"] = *c.nop_backlog_cap;
    json st = json::array();
    for (const auto& s : c.stations) st.push_back(emit_station(s));
    j["stations"] = st;
    if (c.dataset) {
        const auto& d = *c.dataset;
        j["dataset"] = {{"path", d.path},
                        {"box", {{"lat_min", d.box.lat_min}, {"lat_max", d.box.lat_max}, {"lon_min", d.box.lon_min}, {"lon_max", d.box.lon_max}}},
                        {"generate_seed", d.generate_seed},
                        {"n_stations", d.n_stations},
                        {"n_groups", d.n_groups}};
    }
    if (c.topology) {
        json t = json::object();
        if (c.topology->delta_slots) t["delta_slots"] = *c.topology->delta_slots;
        if (!c.topology->delta_matrix.empty()) t["delta_matrix"] = c.topology->delta_matrix;
        if (!c.topology->peer_mask.empty()) t["peer_mask"] = c.topology->peer_mask;
        j["topology"] = t;
    }
    return j;
}

ScenarioConfig with_override(const ScenarioConfig& cfg, const std::string& key, const json& value) {
    json doc = emit_scenario(cfg);
    json* node = &doc;
    std::size_t start = 0;
    for (;;) {
        const auto dot = key.find('.', start);
        const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        json* child = nullptr;
        if (node->is_array()) {
            std::size_t i = 0;
            const auto [p, ec] = std::from_chars(part.data(), part.data() + part.size(), i);
            if (ec != std::errc() || p != part.data() + part.size() || i >= node->size())
                throw ConfigError(key.substr(0, dot == std::string::npos ? key.size() : dot), "bad array index");
            child = &(*node)[i];
        } else if (dot == std::string::npos) {
            (*node)[part] = value;
            break;
        } else if (node->contains(part)) {
            child = &(*node)[part];
        }
        if (dot == std::string::npos) {
            *child = value;
            break;
        }
        if (!child || !(child->is_object() || child->is_array()))
            throw ConfigError(key.substr(0, dot), "cannot override inside a missing or scalar key");
        node = child;
        start = dot + 1;
    }
    return parse_scenario_json(doc);
}

ResolvedScenario resolve_scenario(const ScenarioConfig& cfg) {
    ResolvedScenario rs;
    rs.cfg = cfg;
    rs.l_max_slots = l_max_slots_of(cfg);

    std::optional<LocationSet> locs;
    if (cfg.dataset) {
        const auto& d = *cfg.dataset;
        locs = d.path.empty() ? generate_locations(d.generate_seed, d.n_stations, d.n_groups, d.box)
                              : load_locations(d.path, d.box);
        const std::size_t n = locs->stations.size();
        check(cfg.stations.empty() || cfg.stations.size() == 1 || cfg.stations.size() == n, "stations",
              "with a dataset give none, one template, or one entry per dataset station (" + std::to_string(n) + ")");
        for (std::size_t i = 0; i < n; ++i) {
            StationConfig s = cfg.stations.empty() ? StationConfig{} : cfg.stations[cfg.stations.size() == 1 ? 0 : i];
            s.id = static_cast<int>(i);
            s.position = locs->stations[i];
            rs.stations.push_back(s);
        }
    } else {
        rs.stations = cfg.stations;
    }
    const std::size_t n = rs.stations.size();
    rs.topology = build_topology(cfg, rs.stations);

    if (const auto* b = std::get_if<BernoulliSpec>(&cfg.arrivals)) {
        check(b->p.size() == 1 || b->p.size() == n, "arrivals.p", "needs one entry or one per station");
    } else {
        const auto& groups = std::holds_alternative<PoissonGroupsSpec>(cfg.arrivals)
                                 ? std::get<PoissonGroupsSpec>(cfg.arrivals).groups
                                 : std::get<MarkovBurstSpec>(cfg.arrivals).groups;
        const double radius = std::holds_alternative<PoissonGroupsSpec>(cfg.arrivals)
                                  ? std::get<PoissonGroupsSpec>(cfg.arrivals).attach_radius_m
                                  : std::get<MarkovBurstSpec>(cfg.arrivals).attach_radius_m;
        std::vector<GeoPoint> positions;
        for (const auto& s : rs.stations)
            if (s.position) positions.push_back(*s.position);
        if (groups.empty()) {
            check(locs.has_value(), "arrivals.groups", "needed when no dataset supplies user groups");
            rs.group_attach = attach_groups(locs->groups, locs->stations, radius);
        } else {
            for (std::size_t g = 0; g < groups.size(); ++g) {
                const std::string gp = index("arrivals.groups", g);
                if (!groups[g].bs.empty()) {
                    for (int s : groups[g].bs)
                        check(s >= 0 && static_cast<std::size_t>(s) < n, gp + ".bs", "station index out of range");
                    rs.group_attach.push_back(groups[g].bs);
                    continue;
                }
                check(positions.size() == n, gp + ".position", "positioned groups need positioned stations");
                std::vector<int> att;
                for (std::size_t s = 0; s < n; ++s)
                    if (great_circle_distance_m(*groups[g].position, positions[s]) <= radius) att.push_back(static_cast<int>(s));
                check(!att.empty(), gp, "no station within " + std::to_string(radius) + " m");
                rs.group_attach.push_back(std::move(att));
            }
        }
    }
    check(cfg.lambda.empty() || cfg.lambda.size() == n, "lambda", "needs one entry per station");
    check_deadline(cfg, rs.stations, rs.topology);
    return rs;
}

std::vector<double> analytic_lambda(const ResolvedScenario& rs, double class_fraction) {
    const auto& cfg = rs.cfg;
    const std::size_t n = rs.stations.size();
    const double load = cfg.load_factor * class_fraction;
    std::vector<double> out(n, 0.0);
    if (const auto* b = std::get_if<BernoulliSpec>(&cfg.arrivals)) {
        for (std::size_t s = 0; s < n; ++s) {
            const double p = std::min(1.0, (b->p.size() == 1 ? b->p[0] : b->p[s]) * cfg.load_factor);
            out[s] = p * class_fraction;
        }
        return out;
    }
    if (const auto* p = std::get_if<PoissonGroupsSpec>(&cfg.arrivals)) {
        std::vector<double> mean(n, 0.0);
        for (const auto& att : rs.group_attach)
            for (int s : att) mean[static_cast<std::size_t>(s)] += p->rate * load / static_cast<double>(att.size());
        for (std::size_t s = 0; s < n; ++s) out[s] = cfg.giant_binding ? 1.0 - std::exp(-mean[s]) : mean[s];
        return out;
    }
    const auto& m = std::get<MarkovBurstSpec>(cfg.arrivals);
    const double pi_on = m.p_off_to_on / (m.p_off_to_on + m.p_on_to_off);
    std::vector<double> none(n, 1.0), mean(n, 0.0);
    for (const auto& att : rs.group_attach)
        for (int s : att) {
            const double r = m.on_rate * load / static_cast<double>(att.size());
            none[static_cast<std::size_t>(s)] *= (1.0 - pi_on) + pi_on * std::exp(-r);
            mean[static_cast<std::size_t>(s)] += pi_on * r;
        }
    for (std::size_t s = 0; s < n; ++s) out[s] = cfg.giant_binding ? 1.0 - none[s] : mean[s];
    return out;
}

}  // namespace peeroff
