#include "peeroff/report.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "peeroff/errors.hpp"

#ifndef PEEROFF_VERSION_TEXT
#define PEEROFF_VERSION_TEXT "unknown"
#endif

namespace peeroff {

using nlohmann::json;
namespace fs = std::filesystem;

const char* version_text() noexcept { return PEEROFF_VERSION_TEXT; }

namespace {

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string temp_name(const std::string& path) {
    static std::atomic<unsigned> counter{0};
    std::ostringstream os;
    os << path << ".tmp." << std::hash<std::thread::id>{}(std::this_thread::get_id()) << "." << counter++;
    return os.str();
}

double mean(const std::vector<double>& v) {
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

json violation_json(const ViolationStats& v) {
    json p = json::array();
    for (const auto& x : v.p_v_given_e) p.push_back(opt(x));
    return {{"h_max", v.h_max},         {"slots", v.slots},   {"edge_slots", v.edge_slots}, {"p_e", v.p_e},
            {"t_values", v.t_values},   {"p_v_given_e", p},   {"slope", opt(v.slope)},      {"r2", opt(v.r2)},
            {"fit_points", v.fit_points}};
}

json summary_json(const MetricsSummary& m, const ScenarioConfig& cfg) {
    const auto& c = m.counts;
    json counts = {{"arrived", c.arrived},
                   {"served", c.served},
                   {"blocked", c.blocked},
                   {"dropped", c.dropped},
                   {"ontime", c.ontime},
                   {"late", c.late},
                   {"fallback_drops", c.fallback_drops},
                   {"credit_overflow", c.credit_overflow},
                   {"capacity_delayed", c.capacity_delayed},
                   {"phantom_served", c.phantom_served},
                   {"unfinished", c.unfinished}};
    return {{"version", version_text()},
            {"config", emit_scenario(cfg)},
            {"counts", counts},
            {"horizon_slots", m.horizon},
            {"slots_simulated", m.slots_simulated},
            {"slot_ms", m.slot_ms},
            {"l_max_slots", m.l_max_slots},
            {"h_max_g", m.h_max_g},
            {"delta_max", m.delta_max},
            {"mean_response_slots", m.mean_response_slots},
            {"mean_response_ms", m.mean_response_ms},
            {"mean_bound_response_ms", m.mean_bound_response_ms},
            {"max_response_slots", m.max_response_slots},
            {"max_bound_response_slots", m.max_bound_response_slots},
            {"one_slot_fraction", m.one_slot_fraction},
            {"utility", m.utility},
            {"utility_running_mean", m.utility_running_mean},
            {"throughput", m.throughput},
            {"block_rate", m.block_rate},
            {"satisfaction", m.satisfaction},
            {"energy_per_bs", m.energy_per_bs},
            {"service_rate_per_bs", m.service_rate_per_bs},
            {"max_h_per_bs", m.max_h_per_bs},
            {"max_z_per_bs", m.max_z_per_bs},
            {"max_w_per_bs", m.max_w_per_bs},
            {"w_bound_per_bs", m.w_bound_per_bs},
            {"bound_violations", m.bound_violations},
            {"z_star", m.z_star},
            {"violation_stats", violation_json(m.violation)}};
}

json bounds_json(const BoundReport& b) {
    return {{"h_max", b.h_max},       {"z_max", b.z_max},         {"w_max", b.w_max},
            {"h_max_g", b.h_max_g},   {"delta_max", b.delta_max}, {"l_max", b.l_max},
            {"v_ceiling", finite_or_null(b.v_ceiling)},           {"worst_response", b.worst_response}};
}

json pk_json(const PkSolution& s) {
    return {{"y_star", s.y_star}, {"mu_star", s.mu_star}, {"z_star", s.z_star}};
}

void write_file_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = temp_name(path);
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw IoError("cannot write " + tmp);
        out << content;
        if (!out.flush()) throw IoError("write failed for " + tmp);
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw IoError("cannot rename onto " + path);
    }
}

json simulate_to_dir(const ScenarioConfig& cfg, const std::string& out_dir) {
    const ResolvedScenario rs = resolve_scenario(cfg);
    RunOptions opts;
    std::ofstream trace;
    std::string trace_tmp, trace_path;
    if (!out_dir.empty()) {
        std::error_code ec;
        fs::create_directories(out_dir, ec);
        if (ec) throw IoError("cannot create output directory " + out_dir);
        if (cfg.trace) {
            trace_path = (fs::path(out_dir) / "trace.csv").string();
            trace_tmp = temp_name(trace_path);
            trace.open(trace_tmp, std::ios::binary);
            if (!trace) throw IoError("cannot write " + trace_tmp);
            opts.trace = &trace;
        }
    }
    const MetricsSummary m = run_simulation(rs, opts);
    json doc = summary_json(m, cfg);
    if (!out_dir.empty()) {
        if (opts.trace) {
            trace.close();
            std::error_code ec;
            fs::rename(trace_tmp, trace_path, ec);
            if (ec) throw IoError("cannot rename onto " + trace_path);
        }
        write_file_atomic((fs::path(out_dir) / "summary.json").string(), doc.dump(2) + "\n");
    }
    return doc;
}

std::size_t SweepResult::succeeded() const {
    return static_cast<std::size_t>(std::count_if(points.begin(), points.end(), [](const auto& p) { return p.ok; }));
}

int sweep_threads() {
    int n = static_cast<int>(std::thread::hardware_concurrency());
    if (const char* env = std::getenv("MEC_SIM_THREADS")) {
        const int cap = std::atoi(env);
        if (cap > 0) n = n > 0 ? std::min(n, cap) : cap;
    }
    return std::max(1, n);
}

json parse_sweep_value(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error&) {
        return json(text);
    }
}

SweepResult run_sweep(const ScenarioConfig& base, const std::vector<SweepAxis>& axes,
                      const std::string& out_dir, int threads) {
    if (axes.empty()) throw ConfigError("sweep", "no parameter to sweep");
    std::size_t total = 1;
    for (const auto& a : axes) {
        if (a.values.empty()) throw ConfigError("sweep." + a.param, "no values");
        total *= a.values.size();
    }
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create output directory " + out_dir);

    SweepResult res;
    res.points.resize(total);
    for (std::size_t i = 0; i < total; ++i) {
        auto& p = res.points[i];
        p.index = i;
        std::size_t rem = i;
        for (std::size_t a = axes.size(); a-- > 0;) {
            const auto& ax = axes[a];
            p.assignment.insert(p.assignment.begin(), {ax.param, ax.values[rem % ax.values.size()]});
            rem /= ax.values.size();
        }
    }

    std::vector<json> docs(total);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next++) < total;) {
            auto& p = res.points[i];
            try {
                ScenarioConfig cfg = base;
                for (const auto& [k, v] : p.assignment) cfg = with_override(cfg, k, v);
                char name[32];
                std::snprintf(name, sizeof name, "point_%04zu", i);
                const std::string dir = (fs::path(out_dir) / name).string();
                docs[i] = simulate_to_dir(cfg, dir);
                p.summary_path = (fs::path(dir) / "summary.json").string();
                p.ok = true;
            } catch (const std::exception& e) {
                p.error = e.what();
            }
        }
    };
    const int n_threads = std::max(1, std::min<int>(threads > 0 ? threads : sweep_threads(), static_cast<int>(total)));
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    json manifest = {{"version", version_text()}, {"total", total}, {"succeeded", res.succeeded()}};
    json pts = json::array();
    for (const auto& p : res.points) {
        json a = json::object();
        for (const auto& [k, v] : p.assignment) a[k] = v;
        pts.push_back({{"index", p.index},
                       {"params", a},
                       {"status", p.ok ? "ok" : "failed"},
                       {"error", p.ok ? json(nullptr) : json(p.error)},
                       {"summary", p.ok ? json(fs::relative(p.summary_path, out_dir).string()) : json(nullptr)}});
    }
    manifest["points"] = pts;
    res.manifest_path = (fs::path(out_dir) / "manifest.json").string();
    write_file_atomic(res.manifest_path, manifest.dump(2) + "\n");

    std::ostringstream csv;
    csv << "index";
    for (const auto& a : axes) csv << ",param:" << a.param;
    csv << ",algorithm,v,seed,load_factor,utility,utility_running_mean,mean_response_ms,max_response_slots,"
           "block_rate,satisfaction,throughput,mean_energy_j,arrived,served,blocked,dropped,late\n";
    char buf[64];
    auto num = [&](double x) {
        std::snprintf(buf, sizeof buf, "%.10g", x);
        return std::string(buf);
    };
    for (std::size_t i = 0; i < total; ++i) {
        const auto& p = res.points[i];
        if (!p.ok) continue;
        const json& d = docs[i];
        csv << i;
        for (const auto& [k, v] : p.assignment) csv << ',' << (v.is_string() ? v.get<std::string>() : v.dump());
        const auto& c = d["config"];
        const auto& k = d["counts"];
        csv << ',' << c["algorithm"].get<std::string>() << ',' << num(c["v"].get<double>()) << ','
            << c["seed"].get<std::uint64_t>() << ',' << num(c["load_factor"].get<double>()) << ','
            << num(d["utility"].get<double>()) << ',' << num(d["utility_running_mean"].get<double>()) << ','
            << num(d["mean_response_ms"].get<double>()) << ',' << d["max_response_slots"].get<int>() << ','
            << num(d["block_rate"].get<double>()) << ',' << num(d["satisfaction"].get<double>()) << ','
            << num(d["throughput"].get<double>()) << ',' << num(mean(d["energy_per_bs"].get<std::vector<double>>()))
            << ',' << k["arrived"].get<long long>() << ',' << k["served"].get<long long>() << ','
            << k["blocked"].get<long long>() << ',' << k["dropped"].get<long long>() << ','
            << k["late"].get<long long>() << '\n';
    }
    res.csv_path = (fs::path(out_dir) / "combined.csv").string();
    write_file_atomic(res.csv_path, csv.str());
    return res;
}

json validate_scenario(const ScenarioConfig& cfg) {
    json checks = json::array();
    bool all_ok = true;
    auto add = [&](const std::string& name, bool ok, const std::string& detail) {
        checks.push_back({{"name", name}, {"ok", ok}, {"detail", detail}});
        all_ok = all_ok && ok;
    };
    std::optional<ResolvedScenario> rs;
    try {
        rs = resolve_scenario(cfg);
        add("config", true, "scenario resolves");
    } catch (const std::exception& e) {
        add("config", false, e.what());
        return {{"ok", false}, {"checks", checks}};
    }
    ResolvedScenario checked = *rs;
    checked.cfg.check_bounds = true;
    MetricsSummary a, b;
    try {
        a = run_simulation(checked);
        add("run", true, "no invariant failure");
    } catch (const std::exception& e) {
        add("run", false, e.what());
        return {{"ok", false}, {"checks", checks}};
    }
    const auto& c = a.counts;
    add("accounting", c.arrived == c.served + c.blocked + c.dropped,
        "arrived " + std::to_string(c.arrived) + " = served " + std::to_string(c.served) + " + blocked " +
            std::to_string(c.blocked) + " + dropped " + std::to_string(c.dropped));
    add("ratios", a.satisfaction >= 0.0 && a.satisfaction <= 1.0 && a.block_rate >= 0.0 && a.block_rate <= 1.0,
        "satisfaction and block rate in [0, 1]");
    b = run_simulation(checked);
    add("determinism", summary_json(a, cfg).dump() == summary_json(b, cfg).dump(), "second run reproduces the summary");
    const bool wog = cfg.algorithm == Algorithm::wog || cfg.algorithm == Algorithm::wog_observed;
    if (wog && cfg.giant_binding && a.counts.capacity_delayed == 0) {
        const int bound = a.h_max_g + 2 * a.delta_max;
        add("worst_response", a.max_response_slots <= bound,
            "max response " + std::to_string(a.max_response_slots) + " <= " + std::to_string(bound));
    }
    if (cfg.early_refuse)
        add("post_acceptance_drops", c.dropped == 0, std::to_string(c.dropped) + " tasks dropped after admission");
    if (cfg.algorithm == Algorithm::known && a.delta_max == 0)
        add("one_slot_service", c.served == 0 || a.one_slot_fraction == 1.0, "every served task answered in one slot");
    return {{"ok", all_ok}, {"checks", checks}};
}

}  // namespace peeroff
