#pragma once

// Scenario configuration: the in-memory form, JSON parsing with key-path errors,
// emission, and resolution into concrete stations, topology and arrival groups.

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "peeroff/model.hpp"

namespace peeroff {

enum class Algorithm { known, wog, wog_observed, nop, greedy };
enum class LiftingMode { faithful, eager };

const char* to_string(Algorithm a) noexcept;
const char* to_string(LiftingMode m) noexcept;

struct WorkloadRange {
    double min_cycles = 2.5e6;
    double max_cycles = 7.5e6;
    bool operator==(const WorkloadRange&) const = default;
};

struct BoundingBox {
    double lat_min = -37.818166;
    double lat_max = -37.814257;
    double lon_min = 144.958295;
    double lon_max = 144.966824;
    bool contains(GeoPoint p) const {
        return p.lat >= lat_min && p.lat <= lat_max && p.lon >= lon_min && p.lon <= lon_max;
    }
    bool operator==(const BoundingBox&) const = default;
};

/// A user group: either a position (attached by radius) or an explicit BS list.
struct GroupSpec {
    std::optional<GeoPoint> position;
    std::vector<int> bs;
    bool operator==(const GroupSpec&) const = default;
};

struct BernoulliSpec {
    std::vector<double> p;  // one entry broadcasts to all stations
    bool operator==(const BernoulliSpec&) const = default;
};

struct PoissonGroupsSpec {
    std::vector<GroupSpec> groups;  // empty: taken from the dataset
    double rate = 0.25;             // tasks per group per slot
    double attach_radius_m = 100.0;
    bool operator==(const PoissonGroupsSpec&) const = default;
};

struct MarkovBurstSpec {
    std::vector<GroupSpec> groups;
    double p_on_to_off = 0.1;
    double p_off_to_on = 0.1;
    double on_rate = 0.5;
    double attach_radius_m = 100.0;
    bool operator==(const MarkovBurstSpec&) const = default;
};

using ArrivalSpec = std::variant<BernoulliSpec, PoissonGroupsSpec, MarkovBurstSpec>;

struct TopologySpec {
    std::optional<int> delta_slots;                      // uniform one-way delay
    std::vector<std::vector<int>> delta_matrix;          // overrides delta_slots when set
    std::vector<std::vector<int>> peer_mask;             // default: every pair permitted
    bool operator==(const TopologySpec&) const = default;
};

/// Location source. An empty path means a synthetic layout from generate_locations.
struct DatasetSpec {
    std::string path;
    BoundingBox box;
    std::uint64_t generate_seed = 1;
    int n_stations = 36;
    int n_groups = 126;
    bool operator==(const DatasetSpec&) const = default;
};

struct ScenarioConfig {
    Algorithm algorithm = Algorithm::wog;
    std::int64_t horizon_slots = 1000;
    std::uint64_t seed = 1;
    double v = 10.0;
    int k_classes = 1;
    double l_max_ms = 50.0;
    double slot_ms = 1.0;
    double load_factor = 1.0;
    LiftingMode lifting = LiftingMode::faithful;
    bool early_refuse = false;
    bool enforce_deadline = false;
    bool check_bounds = true;
    int reassign_period = 1000;
    double energy_per_cycle_nj = 0.0;  // > 0 with a workload: meter energy per executed cycle
    std::optional<WorkloadRange> workload;
    bool giant_binding = true;
    bool punish_blocked = false;
    std::optional<int> nop_backlog_cap;
    std::vector<double> lambda;  // explicit known rates; computed from arrivals when empty
    std::string output_dir;
    bool trace = false;

    std::vector<StationConfig> stations;
    std::optional<DatasetSpec> dataset;
    std::optional<TopologySpec> topology;
    ArrivalSpec arrivals = BernoulliSpec{{0.5}};

    bool operator==(const ScenarioConfig&) const = default;
};

/// Parses and validates a scenario document; unknown keys are rejected.
/// Throws ConfigError naming the key path.
ScenarioConfig parse_scenario_json(const nlohmann::json& doc);
ScenarioConfig parse_scenario(const std::string& path);
nlohmann::json emit_scenario(const ScenarioConfig& cfg);

/// Applies an override such as ("v", 20) or ("stations.0.e_budget", 0.06) and revalidates.
ScenarioConfig with_override(const ScenarioConfig& cfg, const std::string& key, const nlohmann::json& value);

/// Everything the engine needs, with dataset, groups and topology resolved.
struct ResolvedScenario {
    ScenarioConfig cfg;
    std::vector<StationConfig> stations;
    Topology topology;                            // as configured (ignored by nop)
    std::vector<std::vector<int>> group_attach;   // attached stations per user group
    int l_max_slots = 50;
};

ResolvedScenario resolve_scenario(const ScenarioConfig& cfg);

/// Per-slot giant-task presence probability per station (or mean task count when tasks are
/// not bound), optionally restricted to a workload class covering `class_fraction` of tasks.
std::vector<double> analytic_lambda(const ResolvedScenario& rs, double class_fraction = 1.0);

}  // namespace peeroff
