#pragma once

// Static planner for the known-arrival-rate case: the concave program over
// accepted throughput and service levels, the randomized drop rule and the
// sequential swap steps that realize the planned service levels in one slot.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "peeroff/model.hpp"
#include "peeroff/random.hpp"

namespace peeroff {

struct PkSolution {
    std::vector<double> y_star;   // accepted throughput per station
    std::vector<double> mu_star;  // planned service level per station
    double z_star = 0.0;          // sum of g_n(y_star_n)
};

/// Clipped service caps min(max((E - e0) / (e1 - e0), 0), 1).
std::vector<double> service_caps(std::span<const StationConfig> stations);

/// Maximizes sum g_n(y_n) with 0 <= mu <= cap, y <= lambda, sum y = sum mu.
/// Throws ConfigError for invalid stations, DomainError for lambda outside [0, 1].
PkSolution solve_pk(std::span<const StationConfig> stations, std::span<const double> lambda);

/// 1 with probability 1 - y_star / lambda when a = 1, else 0.
int drop_rule(int a, double lambda, double y_star, Rng& rng);

struct StepState {
    std::vector<std::uint8_t> a;  // current assignment of this slot's tasks
    std::vector<double> expect;   // tracked E(A_j)
    std::size_t i = 0;            // next step to run (0-based)
};

/// One swap step using product-form expectation tracking. Throws InfeasibleError when no
/// window exists.
StepState known_rate_step(StepState state, std::span<const double> mu_star, Rng& rng);

enum class StepKind : std::uint8_t { pass, pull, push };

struct StepRule {
    StepKind kind = StepKind::pass;
    std::size_t window_end = 0;  // position m (inclusive), in plan order
    double boundary_prob = 0.0;  // pull: P_{m->i}; push: P_{i->p}
};

/// Precomputed step rules over a relabeling of the stations. `exact` plans are derived from
/// the full joint distribution of the assignment vector; otherwise from product forms.
struct KnownRatePlan {
    std::vector<std::size_t> order;  // order[pos] = station index
    std::vector<StepRule> rules;     // rules[pos]
    bool exact = false;
    std::vector<double> achieved;    // E(A^N_j) per station predicted by the plan
};

/// Largest N for which plans track the exact joint distribution.
inline constexpr std::size_t kExactPlanMaxStations = 16;

/// True when sum of the k largest mu never exceeds E[min(S, k)], S = sum of independent
/// Bernoulli(accept_prob). Necessary for any one-slot assignment to realize mu.
bool service_levels_achievable(std::span<const double> accept_prob, std::span<const double> mu);

/// Builds a plan for independent arrivals with acceptance probabilities `accept_prob`.
/// Tries the index order first, then other deterministic relabelings.
/// Throws InfeasibleError when no tried order realizes mu_star.
KnownRatePlan build_known_rate_plan(std::span<const double> accept_prob,
                                    std::span<const double> mu_star);

/// Called after each swap step with the step index and the station-indexed vector A^i.
using StepObserver = std::function<void(std::size_t step, std::span<const std::uint8_t> a)>;

/// Applies the plan's N steps to `a` (station-indexed); `origin[j]` tracks which station's
/// task sits at j (-1 for none).
void apply_plan(const KnownRatePlan& plan, std::vector<std::uint8_t>& a, std::vector<int>& origin,
                Rng& rng, const StepObserver& observer = {});

struct KnownRateAssignment {
    std::vector<std::uint8_t> a;       // A^N(t): station j serves a task next slot
    std::vector<int> origin;           // origin station of the task served by j, or -1
    std::vector<std::uint8_t> dropped; // drop-rule outcome per station
};

/// Algorithm 1 for one slot: drop rule then the N swap steps of `plan`.
KnownRateAssignment run_known_rate_slot(std::span<const std::uint8_t> a_t,
                                        std::span<const double> lambda, const PkSolution& sol,
                                        const KnownRatePlan& plan, Rng& rng,
                                        const StepObserver& observer = {});

/// Convenience form that builds the plan on every call.
std::vector<std::uint8_t> run_known_rate_slot(std::span<const std::uint8_t> a_t,
                                              std::span<const double> lambda,
                                              const PkSolution& sol, Rng& rng);

}  // namespace peeroff
