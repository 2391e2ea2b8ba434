#pragma once

// Result emission: summary JSON, single runs written to a directory, and parameter sweeps
// over a worker pool with atomic file writes.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "peeroff/lyapunov.hpp"
#include "peeroff/planner.hpp"
#include "peeroff/scenario.hpp"
#include "peeroff/sim.hpp"

namespace peeroff {

/// Build version, git-describe style.
const char* version_text() noexcept;

nlohmann::json violation_json(const ViolationStats& v);
nlohmann::json summary_json(const MetricsSummary& m, const ScenarioConfig& cfg);
nlohmann::json bounds_json(const BoundReport& b);
nlohmann::json pk_json(const PkSolution& s);

/// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::string& path, const std::string& content);

/// One run; writes summary.json (and trace.csv when cfg.trace) into `out_dir` if non-empty.
nlohmann::json simulate_to_dir(const ScenarioConfig& cfg, const std::string& out_dir);

struct SweepAxis {
    std::string param;                    // top-level or dotted key
    std::vector<nlohmann::json> values;
};

struct SweepPoint {
    std::size_t index = 0;
    std::vector<std::pair<std::string, nlohmann::json>> assignment;
    bool ok = false;
    std::string error;
    std::string summary_path;
};

struct SweepResult {
    std::vector<SweepPoint> points;
    std::string manifest_path;
    std::string csv_path;
    std::size_t succeeded() const;
};

/// Worker count: MEC_SIM_THREADS when set and positive, else the hardware concurrency.
int sweep_threads();

/// Cartesian product of the axes. Each point gets out_dir/point_NNNN/summary.json; the manifest
/// records every point and the combined CSV has one row per successful point.
SweepResult run_sweep(const ScenarioConfig& base, const std::vector<SweepAxis>& axes,
                      const std::string& out_dir, int threads = 0);

/// Parses a CLI value: JSON when it parses, otherwise a plain string.
nlohmann::json parse_sweep_value(const std::string& text);

/// Runs the scenario twice and checks accounting, bounds, determinism and the
/// mode-specific guarantees. Returns {"ok": bool, "checks": [{name, ok, detail}]}.
nlohmann::json validate_scenario(const ScenarioConfig& cfg);

}  // namespace peeroff
