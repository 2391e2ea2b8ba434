#pragma once

// Slotted simulator: arrival generation, lifting relaxed schedules to the delayed
// network, baseline policies, metric accumulation and the run loop.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "peeroff/extensions.hpp"
#include "peeroff/model.hpp"
#include "peeroff/random.hpp"
#include "peeroff/scenario.hpp"

namespace peeroff {

// ---------------------------------------------------------------------------
// Arrivals

struct RawTask {
    int bs = 0;
    double cycles = 0.0;
};

/// Resolved arrival process with its Markov state.
class ArrivalProcess {
public:
    ArrivalProcess(ArrivalSpec spec, std::size_t n_stations, std::vector<std::vector<int>> group_attach,
                   double load_factor, std::optional<WorkloadRange> workload);

    /// Raw tasks of one slot, each attached to a station.
    std::vector<RawTask> next(Rng& rng);

    std::size_t n_stations() const noexcept { return n_; }
    const ArrivalSpec& spec() const noexcept { return spec_; }

private:
    double draw_cycles(Rng& rng) const;

    ArrivalSpec spec_;
    std::size_t n_;
    std::vector<std::vector<int>> attach_;
    double load_;
    std::optional<WorkloadRange> workload_;
    std::vector<std::uint8_t> on_;  // Markov state per group
    bool started_ = false;
};

struct ArrivalBatch {
    std::vector<int> giant;                     // giant tasks per station (0 or 1)
    std::vector<std::vector<RawTask>> members;  // constituents per station
};

/// One slot of arrivals grouped into at most one giant task per station.
ArrivalBatch generate_arrivals(ArrivalProcess& proc, Rng& rng);

// ---------------------------------------------------------------------------
// Lifting

struct RelaxedServe {
    Slot slot = 0;     // relaxed service slot
    Slot arrival = 0;
    int origin = 0;
    int server = 0;
};

struct LiftedServe {
    Slot exec_slot = 0;       // slot the server runs the task
    Slot done_slot = 0;       // slot the result is back at the origin
    int response = 0;         // reported response in slots
    int bound_response = 0;   // relaxed response + 2 delta_max
};

LiftedServe lift_serve(const RelaxedServe& s, const Topology& topo, LiftingMode mode);
std::vector<LiftedServe> lift_relaxed_schedule(std::span<const RelaxedServe> serves,
                                               const Topology& topo, LiftingMode mode);

// ---------------------------------------------------------------------------
// Baselines

enum class BaselineMode { nop, greedy_latency };

/// Energy guard shared by the baselines: a station may serve only while its energy deficit
/// W is at most l_max (E - e0).
bool energy_guard_ok(const QueueState& q, const StationConfig& cfg, int l_max);

/// nop: each station serves its own head when the guard allows. greedy_latency: max-weight
/// assignment on waiting age over permitted pairs whose server passes the guard, ties going
/// to the shortest trip; no admission control and no energy term in the weights.
SlotDecision baseline_step(BaselineMode mode, std::span<const QueueState> states,
                           std::span<const StationConfig> stations, const Topology& topo, int l_max);

/// Local backlog cap used by nop: max(1, floor(cap * l_max)).
int nop_backlog_cap(const StationConfig& cfg, int l_max);

// ---------------------------------------------------------------------------
// Metrics and run loop

struct Counts {
    long long arrived = 0;
    long long served = 0;
    long long blocked = 0;
    long long dropped = 0;
    long long ontime = 0;
    long long late = 0;
    long long fallback_drops = 0;      // early refuse could not substitute
    long long credit_overflow = 0;
    long long capacity_delayed = 0;    // tasks finished after their service slot (multiplexing)
    long long phantom_served = 0;
    long long unfinished = 0;          // still queued when the drain limit hit (counted as dropped)
};

struct MetricsSummary {
    Counts counts;
    std::int64_t horizon = 0;
    std::int64_t slots_simulated = 0;
    double slot_ms = 1.0;
    int l_max_slots = 0;
    int h_max_g = 0;
    int delta_max = 0;
    double mean_response_slots = 0.0;
    double mean_response_ms = 0.0;
    double mean_bound_response_ms = 0.0;
    int max_response_slots = 0;
    int max_bound_response_slots = 0;
    double one_slot_fraction = 0.0;  // served tasks with response exactly one slot
    double utility = 0.0;             // final
    double utility_running_mean = 0.0;
    double throughput = 0.0;          // served tasks per slot
    double block_rate = 0.0;
    double satisfaction = 0.0;
    std::vector<double> energy_per_bs;   // J per slot over the horizon
    std::vector<double> service_rate_per_bs;
    std::vector<int> max_h_per_bs;
    std::vector<double> max_z_per_bs;
    std::vector<double> max_w_per_bs;
    std::vector<double> w_bound_per_bs;
    long long bound_violations = 0;
    double z_star = 0.0;  // known mode: planner optimum
    ViolationStats violation;
};

struct RunOptions {
    std::ostream* trace = nullptr;  // per-slot CSV rows when set
    std::int64_t drain_limit = 100000;
};

/// Runs one scenario; deterministic in (scenario, seed). Throws InvariantError with a state
/// dump when a hard invariant fails.
MetricsSummary run_simulation(const ResolvedScenario& rs, const RunOptions& opts = {});

inline constexpr const char* kTraceHeader = "slot,bs,class,Q,H,Z,W,eta,D,gamma,energy_j,arrivals";

}  // namespace peeroff
