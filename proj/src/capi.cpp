#include "peeroff/peeroff.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iterator>
#include <memory>
#include <new>
#include <sstream>

#include "peeroff/errors.hpp"
#include "peeroff/locations.hpp"
#include "peeroff/report.hpp"

using nlohmann::json;

struct peeroff_scenario {
    peeroff::ScenarioConfig cfg;
};

struct peeroff_run {
    peeroff::MetricsSummary summary;
    json doc;
};

namespace {

thread_local std::string g_error;
thread_local std::string g_error_key;

peeroff_status fail(peeroff_status st, const std::string& msg, const std::string& key = {}) {
    g_error = msg;
    g_error_key = key;
    return st;
}

peeroff_status status_of(peeroff::ErrorKind k) {
    switch (k) {
        case peeroff::ErrorKind::domain: return PEEROFF_DOMAIN;
        case peeroff::ErrorKind::contract: return PEEROFF_CONTRACT;
        case peeroff::ErrorKind::config: return PEEROFF_CONFIG;
        case peeroff::ErrorKind::infeasible: return PEEROFF_INFEASIBLE;
        case peeroff::ErrorKind::invariant: return PEEROFF_INVARIANT;
        case peeroff::ErrorKind::io: return PEEROFF_IO;
    }
    return PEEROFF_INTERNAL;
}

template <class F>
peeroff_status guarded(F&& f) {
    g_error.clear();
    g_error_key.clear();
    try {
        f();
        return PEEROFF_OK;
    } catch (const peeroff::ConfigError& e) {
        return fail(PEEROFF_CONFIG, e.what(), e.key_path());
    } catch (const peeroff::Error& e) {
        return fail(status_of(e.kind()), e.what());
    } catch (const json::exception& e) {
        return fail(PEEROFF_INVALID_ARGUMENT, e.what());
    } catch (const std::bad_alloc&) {
        return fail(PEEROFF_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return fail(PEEROFF_INTERNAL, e.what());
    } catch (...) {
        return fail(PEEROFF_INTERNAL, "unknown exception");
    }
}

char* dup(const std::string& s) {
    char* p = static_cast<char*>(std::malloc(s.size() + 1));
    if (!p) throw std::bad_alloc();
    std::memcpy(p, s.c_str(), s.size() + 1);
    return p;
}

#define REQUIRE_ARG(cond, name) \
    if (!(cond)) return fail(PEEROFF_INVALID_ARGUMENT, name " must not be null")

}  // namespace

extern "C" {

const char* peeroff_version(void) { return peeroff::version_text(); }

const char* peeroff_status_name(peeroff_status status) {
    switch (status) {
        case PEEROFF_OK: return "ok";
        case PEEROFF_INVALID_ARGUMENT: return "invalid argument";
        case PEEROFF_CONFIG: return "configuration error";
        case PEEROFF_DOMAIN: return "domain error";
        case PEEROFF_CONTRACT: return "contract error";
        case PEEROFF_INFEASIBLE: return "infeasible";
        case PEEROFF_INVARIANT: return "invariant violated";
        case PEEROFF_IO: return "i/o error";
        case PEEROFF_INTERNAL: return "internal error";
    }
    return "unknown status";
}

const char* peeroff_last_error(void) { return g_error.c_str(); }
const char* peeroff_last_error_key(void) { return g_error_key.c_str(); }
void peeroff_string_free(char* s) { std::free(s); }

peeroff_status peeroff_scenario_load(const char* path, peeroff_scenario** out) {
    REQUIRE_ARG(path, "path");
    REQUIRE_ARG(out, "out");
    *out = nullptr;
    return guarded([&] { *out = new peeroff_scenario{peeroff::parse_scenario(path)}; });
}

peeroff_status peeroff_scenario_parse(const char* json_text, peeroff_scenario** out) {
    REQUIRE_ARG(json_text, "json_text");
    REQUIRE_ARG(out, "out");
    *out = nullptr;
    return guarded([&] {
        const json doc = json::parse(json_text);
        *out = new peeroff_scenario{peeroff::parse_scenario_json(doc)};
    });
}

peeroff_status peeroff_scenario_override(peeroff_scenario* sc, const char* key, const char* json_value) {
    REQUIRE_ARG(sc, "scenario");
    REQUIRE_ARG(key, "key");
    REQUIRE_ARG(json_value, "json_value");
    return guarded([&] { sc->cfg = peeroff::with_override(sc->cfg, key, peeroff::parse_sweep_value(json_value)); });
}

peeroff_status peeroff_scenario_to_json(const peeroff_scenario* sc, char** out) {
    REQUIRE_ARG(sc, "scenario");
    REQUIRE_ARG(out, "out");
    return guarded([&] { *out = dup(peeroff::emit_scenario(sc->cfg).dump(2)); });
}

peeroff_status peeroff_scenario_bounds_json(const peeroff_scenario* sc, char** out) {
    REQUIRE_ARG(sc, "scenario");
    REQUIRE_ARG(out, "out");
    return guarded([&] {
        const auto rs = peeroff::resolve_scenario(sc->cfg);
        const auto wc = peeroff::make_wog_config(rs.cfg.v, peeroff::ArrivalMode::known_lambda, rs.l_max_slots, rs.stations);
        *out = dup(peeroff::bounds_json(peeroff::deadline_bounds(wc, rs.stations, rs.topology)).dump(2));
    });
}

peeroff_status peeroff_scenario_solve_pk_json(const peeroff_scenario* sc, char** out) {
    REQUIRE_ARG(sc, "scenario");
    REQUIRE_ARG(out, "out");
    return guarded([&] {
        const auto rs = peeroff::resolve_scenario(sc->cfg);
        const auto lambda = rs.cfg.lambda.empty() ? peeroff::analytic_lambda(rs) : rs.cfg.lambda;
        json doc = peeroff::pk_json(peeroff::solve_pk(rs.stations, lambda));
        doc["lambda"] = lambda;
        *out = dup(doc.dump(2));
    });
}

peeroff_status peeroff_scenario_validate(const peeroff_scenario* sc, int* ok, char** report_json) {
    REQUIRE_ARG(sc, "scenario");
    REQUIRE_ARG(ok, "ok");
    return guarded([&] {
        const json r = peeroff::validate_scenario(sc->cfg);
        *ok = r["ok"].get<bool>() ? 1 : 0;
        if (report_json) *report_json = dup(r.dump(2));
    });
}

void peeroff_scenario_free(peeroff_scenario* sc) { delete sc; }

peeroff_status peeroff_run_simulate(const peeroff_scenario* sc, const char* out_dir, peeroff_run** out) {
    REQUIRE_ARG(sc, "scenario");
    REQUIRE_ARG(out, "out");
    *out = nullptr;
    return guarded([&] {
        auto run = std::make_unique<peeroff_run>();
        run->doc = peeroff::simulate_to_dir(sc->cfg, out_dir ? out_dir : "");
        const auto& c = run->doc["counts"];
        auto& k = run->summary.counts;
        k.arrived = c["arrived"];
        k.served = c["served"];
        k.blocked = c["blocked"];
        k.dropped = c["dropped"];
        k.ontime = c["ontime"];
        k.late = c["late"];
        *out = run.release();
    });
}

peeroff_status peeroff_run_summary_json(const peeroff_run* run, char** out) {
    REQUIRE_ARG(run, "run");
    REQUIRE_ARG(out, "out");
    return guarded([&] { *out = dup(run->doc.dump(2)); });
}

peeroff_status peeroff_run_counts(const peeroff_run* run, peeroff_counts* out) {
    REQUIRE_ARG(run, "run");
    REQUIRE_ARG(out, "out");
    const auto& k = run->summary.counts;
    *out = peeroff_counts{k.arrived, k.served, k.blocked, k.dropped, k.ontime, k.late};
    return PEEROFF_OK;
}

peeroff_status peeroff_run_metric(const peeroff_run* run, const char* path, double* out) {
    REQUIRE_ARG(run, "run");
    REQUIRE_ARG(path, "path");
    REQUIRE_ARG(out, "out");
    return guarded([&] {
        std::string ptr = "/" + std::string(path);
        for (auto& ch : ptr)
            if (ch == '.') ch = '/';
        const json::json_pointer jp(ptr);
        if (!run->doc.contains(jp)) throw peeroff::DomainError(std::string("no summary field '") + path + "'");
        const json& v = run->doc.at(jp);
        if (!v.is_number()) throw peeroff::DomainError(std::string("summary field '") + path + "' is not numeric");
        *out = v.get<double>();
    });
}

void peeroff_run_free(peeroff_run* run) { delete run; }

peeroff_status peeroff_sweep(const peeroff_scenario* sc, const char* axes_json, const char* out_dir, int threads,
                             int* n_ok, int* n_failed, char** manifest_json) {
    REQUIRE_ARG(sc, "scenario");
    REQUIRE_ARG(axes_json, "axes_json");
    REQUIRE_ARG(out_dir, "out_dir");
    return guarded([&] {
        const json axes = json::parse(axes_json);
        if (!axes.is_array()) throw peeroff::ConfigError("sweep", "axes must be an array");
        std::vector<peeroff::SweepAxis> list;
        for (const auto& a : axes) list.push_back({a.at("param").get<std::string>(), a.at("values").get<std::vector<json>>()});
        const auto res = peeroff::run_sweep(sc->cfg, list, out_dir, threads);
        if (n_ok) *n_ok = static_cast<int>(res.succeeded());
        if (n_failed) *n_failed = static_cast<int>(res.points.size() - res.succeeded());
        if (manifest_json) {
            std::ifstream in(res.manifest_path);
            *manifest_json = dup(std::string(std::istreambuf_iterator<char>(in), {}));
        }
    });
}

peeroff_status peeroff_dataset_generate(uint64_t seed, int n_stations, int n_groups, const char* path) {
    REQUIRE_ARG(path, "path");
    return guarded([&] {
        const auto set = peeroff::generate_locations(seed, n_stations, n_groups);
        std::ostringstream os;
        peeroff::write_locations_csv(os, set);
        peeroff::write_file_atomic(path, os.str());
    });
}

peeroff_status peeroff_solve_pk_json(const char* stations_json, const double* lambda, int n, char** out) {
    REQUIRE_ARG(stations_json, "stations_json");
    REQUIRE_ARG(lambda || n == 0, "lambda");
    REQUIRE_ARG(out, "out");
    return guarded([&] {
        const json doc = {{"algorithm", "known"}, {"stations", json::parse(stations_json)}};
        const auto cfg = peeroff::parse_scenario_json(doc);
        if (static_cast<std::size_t>(n) != cfg.stations.size())
            throw peeroff::ConfigError("lambda", "needs one entry per station");
        const std::vector<double> l(lambda, lambda + n);
        *out = dup(peeroff::pk_json(peeroff::solve_pk(cfg.stations, l)).dump(2));
    });
}

}  // extern "C"
