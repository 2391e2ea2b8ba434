// Command-line front end. Talks to the simulator only through the C interface.

#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "peeroff/peeroff.h"

namespace {

constexpr int kExitError = 2;
constexpr int kExitCheckFailed = 1;

struct Owned {
    char* s = nullptr;
    ~Owned() { peeroff_string_free(s); }
};

struct ScenarioHandle {
    peeroff_scenario* p = nullptr;
    ~ScenarioHandle() { peeroff_scenario_free(p); }
};

int report(peeroff_status st) {
    const char* key = peeroff_last_error_key();
    std::fprintf(stderr, "peeroff: %s: %s\n", peeroff_status_name(st), peeroff_last_error());
    if (key && *key) std::fprintf(stderr, "peeroff: offending key: %s\n", key);
    return kExitError;
}

// Loads --config and applies --seed and --set key=value overrides in order.
peeroff_status load(const std::string& path, const std::optional<std::uint64_t>& seed,
                    const std::vector<std::string>& sets, ScenarioHandle& out) {
    peeroff_status st = peeroff_scenario_load(path.c_str(), &out.p);
    if (st != PEEROFF_OK) return st;
    if (seed) {
        const std::string v = std::to_string(*seed);
        if ((st = peeroff_scenario_override(out.p, "seed", v.c_str())) != PEEROFF_OK) return st;
    }
    for (const auto& kv : sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0) {
            std::fprintf(stderr, "peeroff: --set expects key=value, got '%s'\n", kv.c_str());
            return PEEROFF_INVALID_ARGUMENT;
        }
        const std::string key = kv.substr(0, eq), value = kv.substr(eq + 1);
        if ((st = peeroff_scenario_override(out.p, key.c_str(), value.c_str())) != PEEROFF_OK) return st;
    }
    return PEEROFF_OK;
}

std::vector<std::string> split_values(const std::string& s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = s.find(',', start);
        out.push_back(s.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return out;
}

std::string out_dir_for(peeroff_scenario* sc, const std::string& flag) {
    if (!flag.empty()) return flag;
    Owned j;
    if (peeroff_scenario_to_json(sc, &j.s) == PEEROFF_OK) {
        const auto doc = nlohmann::json::parse(j.s);
        const auto dir = doc.value("output_dir", std::string());
        if (!dir.empty()) return dir;
    }
    return "peeroff_out";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Peer offloading simulator for deadline-constrained edge tasks"};
    app.set_version_flag("--version", std::string(peeroff_version()));
    app.require_subcommand(1);

    std::string config, out;
    std::optional<std::uint64_t> seed;
    std::vector<std::string> sets;
    auto scenario_opts = [&](CLI::App* sub) {
        sub->add_option("--config,-c", config, "Scenario JSON file")->required()->check(CLI::ExistingFile);
        sub->add_option("--seed", seed, "Override the scenario seed");
        sub->add_option("--set", sets, "Override a scenario key, key=value (repeatable)");
    };

    auto* simulate = app.add_subcommand("simulate", "Run one scenario; writes summary.json and optional trace.csv");
    scenario_opts(simulate);
    simulate->add_option("--out,-o", out, "Output directory (default: output_dir from the config)");
    bool print = false;
    simulate->add_flag("--print", print, "Also print the summary JSON");

    auto* sweep = app.add_subcommand("sweep", "Cartesian sweep over one or more parameters");
    scenario_opts(sweep);
    sweep->add_option("--out,-o", out, "Output directory");
    std::vector<std::string> params, values;
    sweep->add_option("--param", params, "Swept key (repeatable, paired with --values)")->required();
    sweep->add_option("--values", values, "Comma-separated values for the matching --param")->required();
    int threads = 0;
    sweep->add_option("--threads", threads, "Worker count (default: MEC_SIM_THREADS or the core count)");

    auto* solve = app.add_subcommand("solve-pk", "Solve the known-rate planning problem and print it as JSON");
    scenario_opts(solve);

    auto* bounds = app.add_subcommand("bounds", "Print the queue and deadline bounds as JSON");
    scenario_opts(bounds);

    auto* gen = app.add_subcommand("dataset-gen", "Write a synthetic location CSV");
    std::uint64_t gen_seed = 1;
    int n_bs = 36, n_groups = 126;
    std::string gen_out;
    gen->add_option("--seed", gen_seed, "Generator seed");
    gen->add_option("--stations", n_bs, "Number of base stations")->check(CLI::PositiveNumber);
    gen->add_option("--groups", n_groups, "Number of user groups")->check(CLI::NonNegativeNumber);
    gen->add_option("--out,-o", gen_out, "CSV path")->required();

    auto* validate = app.add_subcommand("validate", "Run the invariant suite; nonzero exit on any violation");
    scenario_opts(validate);

    CLI11_PARSE(app, argc, argv);

    if (gen->parsed()) {
        const auto st = peeroff_dataset_generate(gen_seed, n_bs, n_groups, gen_out.c_str());
        if (st != PEEROFF_OK) return report(st);
        std::printf("wrote %s\n", gen_out.c_str());
        return 0;
    }

    ScenarioHandle sc;
    if (const auto st = load(config, seed, sets, sc); st != PEEROFF_OK) return report(st);

    if (simulate->parsed()) {
        const std::string dir = out_dir_for(sc.p, out);
        peeroff_run* run = nullptr;
        if (const auto st = peeroff_run_simulate(sc.p, dir.c_str(), &run); st != PEEROFF_OK) return report(st);
        if (print) {
            Owned j;
            peeroff_run_summary_json(run, &j.s);
            std::printf("%s\n", j.s);
        } else {
            peeroff_counts c{};
            double utility = 0.0, response = 0.0;
            peeroff_run_counts(run, &c);
            peeroff_run_metric(run, "utility", &utility);
            peeroff_run_metric(run, "mean_response_ms", &response);
            std::printf("arrived %lld served %lld blocked %lld dropped %lld late %lld utility %.6g mean response %.4g ms\n",
                        c.arrived, c.served, c.blocked, c.dropped, c.late, utility, response);
            std::printf("summary: %s/summary.json\n", dir.c_str());
        }
        peeroff_run_free(run);
        return 0;
    }

    if (sweep->parsed()) {
        if (params.size() != values.size()) {
            std::fprintf(stderr, "peeroff: give one --values per --param\n");
            return kExitError;
        }
        nlohmann::json axes = nlohmann::json::array();
        for (std::size_t i = 0; i < params.size(); ++i) {
            nlohmann::json vals = nlohmann::json::array();
            for (const auto& v : split_values(values[i])) {
                try {
                    vals.push_back(nlohmann::json::parse(v));
                } catch (const nlohmann::json::parse_error&) {
                    vals.push_back(v);
                }
            }
            axes.push_back({{"param", params[i]}, {"values", vals}});
        }
        const std::string dir = out_dir_for(sc.p, out);
        int ok = 0, failed = 0;
        const auto st = peeroff_sweep(sc.p, axes.dump().c_str(), dir.c_str(), threads, &ok, &failed, nullptr);
        if (st != PEEROFF_OK) return report(st);
        std::printf("%d of %d points succeeded; manifest: %s/manifest.json, table: %s/combined.csv\n", ok, ok + failed,
                    dir.c_str(), dir.c_str());
        if (failed > 0) {
            std::fprintf(stderr, "peeroff: %d sweep point(s) failed, see the manifest\n", failed);
            return kExitCheckFailed;
        }
        return 0;
    }

    if (solve->parsed() || bounds->parsed()) {
        Owned j;
        const auto st = solve->parsed() ? peeroff_scenario_solve_pk_json(sc.p, &j.s) : peeroff_scenario_bounds_json(sc.p, &j.s);
        if (st != PEEROFF_OK) return report(st);
        std::printf("%s\n", j.s);
        return 0;
    }

    // validate
    int ok = 0;
    Owned j;
    if (const auto st = peeroff_scenario_validate(sc.p, &ok, &j.s); st != PEEROFF_OK) return report(st);
    std::printf("%s\n", j.s);
    return ok ? 0 : kExitCheckFailed;
}
