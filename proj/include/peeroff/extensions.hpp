#pragma once

// Practicality layer: turning post-acceptance drops into admission blocks,
// workload classes with their own energy budgets and CPU multiplexing, and
// statistics of the regions where the waiting-time bound is reached or exceeded.

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "peeroff/model.hpp"

namespace peeroff {

// ---------------------------------------------------------------------------
// Early refuse

struct RefuseLedger {
    std::vector<std::deque<int>> block_credits;  // per BS; each credit remembers its substitute server
    SquareMatrix<int> owed;                      // owed(a, b) > 0: a takes one service over from b
    int credit_cap = 0;                          // per-BS credit limit (0 = unlimited)
    long long credit_overflow = 0;

    RefuseLedger() = default;
    RefuseLedger(std::size_t n, int cap) : block_credits(n), owed(n, 0), credit_cap(cap) {}

    std::size_t credits(std::size_t n) const { return block_credits[n].size(); }
    long long owed_total() const;
};

/// Head-of-line entry as seen by the transform.
struct HeadInfo {
    bool present = false;
    bool phantom = false;  // stands in for an arrival that was blocked at admission
    int tag = -1;          // substitute server recorded with the credit
};

struct RefuseOutcome {
    SquareMatrix<std::uint8_t> executed;    // services really carried out (real tasks only)
    std::vector<std::uint8_t> plain_drop;   // drop kept because no idle peer was reachable
    std::vector<int> substitute;            // server taking a would-be dropped task, or -1
    std::vector<std::uint8_t> phantom_done; // head phantom consumed by service or drop
};

/// Replaces each drop of a real head task by service at the lowest-index idle peer (the
/// dropping BS itself only when no other peer is idle) and
/// issues a block credit; phantom services become owed services; owed services are settled
/// when the creditor is busy and the debtor idle. The scheduler's decision is not modified.
RefuseOutcome early_refuse_apply(const SlotDecision& dec, std::span<const HeadInfo> heads,
                                 const Topology& topo, RefuseLedger& ledger);

/// Admission check: consumes a credit of BS n when one exists and returns its tag.
std::optional<int> early_refuse_admit(RefuseLedger& ledger, std::size_t n);

// ---------------------------------------------------------------------------
// Workload classes

struct ClassPlan {
    int k = 1;
    std::vector<double> edges;                 // k + 1 edges; class c covers [edges[c], edges[c+1]]
    std::vector<double> shares;                // per-class share of the dynamic energy budget
    std::vector<std::vector<double>> budgets;  // budgets[n][c] = E_{n,c}
    std::vector<double> mean_cycles;           // per-class mean of the partition samples
    int reassign_period = 1000;

    int class_of(double cycles) const;
};

/// Equal-count quantile partition of `samples` into k classes spanning [lo, hi], budgets split
/// as e0/k + share_c (E - e0) with shares proportional to `class_workload` (or to the sample
/// workload when it is empty or all zero). Degrades k when samples have fewer distinct values.
ClassPlan class_partition_and_budget(std::span<const double> samples, int k, double lo, double hi,
                                     std::span<const double> e_budgets,
                                     std::span<const double> e_static,
                                     std::span<const double> class_workload,
                                     int reassign_period = 1000, std::string* warning = nullptr);

/// Recomputes shares and budgets from observed per-class workload; throws InvariantError
/// if some station's class budgets would exceed its total budget.
void refresh_class_budgets(ClassPlan& plan, std::span<const double> class_workload,
                           std::span<const double> e_budgets, std::span<const double> e_static);

struct MultiplexJob {
    int cls = 0;
    double cycles = 0.0;  // remaining cycles
    std::uint64_t tag = 0;
};

struct MultiplexOutcome {
    std::vector<MultiplexJob> completed;  // in execution order
    std::vector<MultiplexJob> carried;    // remainder, in the order it will resume
    double cycles_used = 0.0;
};

/// One slot of CPU time: carried jobs first, then this slot's requests in ascending class
/// order, until cpu_rate cycles are used. The job that exhausts the slot keeps its remaining
/// cycles.
MultiplexOutcome multiplex_classes(std::span<const MultiplexJob> carry,
                                   std::span<const MultiplexJob> requests, double cpu_rate);

// ---------------------------------------------------------------------------
// Edge and violation regions

struct ViolationStats {
    int h_max = 0;
    long long slots = 0;
    long long edge_slots = 0;
    double p_e = 0.0;
    std::vector<int> t_values;
    std::vector<std::optional<double>> p_v_given_e;  // empty optional when p_e = 0
    std::optional<double> slope;                     // least-squares slope of ln p vs T
    std::optional<double> r2;
    int fit_points = 0;
};

/// Histogram of observed H values feeding violation_stats without keeping whole traces.
class HolHistogram {
public:
    void add(int h);
    void merge(const HolHistogram& other);
    long long total() const noexcept { return total_; }
    long long at_least(int h) const;

private:
    std::vector<long long> counts_;
    long long total_ = 0;
};

ViolationStats violation_stats(std::span<const int> h_trace, int h_max, std::span<const int> t_values);
ViolationStats violation_stats(const HolHistogram& hist, int h_max, std::span<const int> t_values);

}  // namespace peeroff
