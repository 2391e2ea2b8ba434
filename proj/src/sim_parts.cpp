#include <algorithm>
#include <cmath>
#include <random>

#include "peeroff/assignment.hpp"
#include "peeroff/errors.hpp"
#include "peeroff/sim.hpp"

namespace peeroff {

// ---------------------------------------------------------------------------
// Arrivals

ArrivalProcess::ArrivalProcess(ArrivalSpec spec, std::size_t n_stations,
                               std::vector<std::vector<int>> group_attach, double load_factor,
                               std::optional<WorkloadRange> workload)
    : spec_(std::move(spec)),
      n_(n_stations),
      attach_(std::move(group_attach)),
      load_(load_factor),
      workload_(workload) {
    if (!(load_ >= 0.0)) throw ConfigError("load_factor", "must be non-negative");
    if (const auto* b = std::get_if<BernoulliSpec>(&spec_)) {
        if (b->p.size() != 1 && b->p.size() != n_)
            throw ConfigError("arrivals.bernoulli.p", "needs one entry or one per station");
    } else {
        for (std::size_t g = 0; g < attach_.size(); ++g) {
            if (attach_[g].empty())
                throw ConfigError("arrivals.groups[" + std::to_string(g) + "]", "no station in radius");
            for (int s : attach_[g])
                if (s < 0 || static_cast<std::size_t>(s) >= n_)
                    throw ConfigError("arrivals.groups[" + std::to_string(g) + "].bs", "station index out of range");
        }
    }
    if (std::holds_alternative<MarkovBurstSpec>(spec_)) on_.assign(attach_.size(), 0);
}

double ArrivalProcess::draw_cycles(Rng& rng) const {
    if (!workload_) return 0.0;
    return workload_->min_cycles + (workload_->max_cycles - workload_->min_cycles) * uniform01(rng);
}

std::vector<RawTask> ArrivalProcess::next(Rng& rng) {
    std::vector<RawTask> out;
    auto emit_group = [&](std::size_t g, double mean) {
        if (mean <= 0.0) return;
        std::poisson_distribution<int> pois(mean);
        const int count = pois(rng);
        const auto& at = attach_[g];
        for (int i = 0; i < count; ++i) {
            const auto pick = std::min(at.size() - 1, static_cast<std::size_t>(uniform01(rng) * static_cast<double>(at.size())));
            const double cycles = draw_cycles(rng);
            out.push_back({at[pick], cycles});
        }
    };
    if (const auto* b = std::get_if<BernoulliSpec>(&spec_)) {
        for (std::size_t n = 0; n < n_; ++n) {
            const double p = std::min(1.0, (b->p.size() == 1 ? b->p[0] : b->p[n]) * load_);
            if (bernoulli(rng, p)) out.push_back({static_cast<int>(n), draw_cycles(rng)});
        }
    } else if (const auto* pg = std::get_if<PoissonGroupsSpec>(&spec_)) {
        for (std::size_t g = 0; g < attach_.size(); ++g) emit_group(g, pg->rate * load_);
    } else {
        const auto& mb = std::get<MarkovBurstSpec>(spec_);
        if (!started_) {
            const double pi_on = mb.p_off_to_on / (mb.p_off_to_on + mb.p_on_to_off);
            for (auto& s : on_) s = static_cast<std::uint8_t>(bernoulli(rng, pi_on));
            started_ = true;
        }
        for (std::size_t g = 0; g < attach_.size(); ++g) {
            if (on_[g]) emit_group(g, mb.on_rate * load_);
            on_[g] = static_cast<std::uint8_t>(on_[g] ? !bernoulli(rng, mb.p_on_to_off) : bernoulli(rng, mb.p_off_to_on));
        }
    }
    return out;
}

ArrivalBatch generate_arrivals(ArrivalProcess& proc, Rng& rng) {
    ArrivalBatch batch;
    batch.giant.assign(proc.n_stations(), 0);
    batch.members.assign(proc.n_stations(), {});
    for (const auto& t : proc.next(rng)) {
        batch.members[static_cast<std::size_t>(t.bs)].push_back(t);
        batch.giant[static_cast<std::size_t>(t.bs)] = 1;
    }
    return batch;
}

// ---------------------------------------------------------------------------
// Lifting

LiftedServe lift_serve(const RelaxedServe& s, const Topology& topo, LiftingMode mode) {
    const int relaxed = static_cast<int>(s.slot - s.arrival);
    const bool offloaded = s.origin != s.server;
    const int trip = offloaded ? topo.delta(static_cast<std::size_t>(s.origin), static_cast<std::size_t>(s.server)) : 0;
    LiftedServe l;
    l.bound_response = relaxed + 2 * topo.delta_max;
    if (mode == LiftingMode::faithful) {
        l.exec_slot = s.slot + topo.delta_max;
        l.done_slot = l.exec_slot + trip;
        l.response = relaxed + topo.delta_max + trip;
    } else {
        l.exec_slot = s.slot + trip;
        l.done_slot = l.exec_slot + trip;
        l.response = relaxed + 2 * trip;
    }
    return l;
}

std::vector<LiftedServe> lift_relaxed_schedule(std::span<const RelaxedServe> serves,
                                               const Topology& topo, LiftingMode mode) {
    std::vector<LiftedServe> out;
    out.reserve(serves.size());
    for (const auto& s : serves) out.push_back(lift_serve(s, topo, mode));
    return out;
}

// ---------------------------------------------------------------------------
// Baselines

bool energy_guard_ok(const QueueState& q, const StationConfig& cfg, int l_max) {
    return q.w <= static_cast<double>(l_max) * (cfg.e_budget - cfg.e_static) + 1e-12;
}

int nop_backlog_cap(const StationConfig& cfg, int l_max) {
    const double cap = std::clamp(service_cap(cfg), 0.0, 1.0);
    return std::max(1, static_cast<int>(std::floor(cap * l_max + 1e-9)));
}

SlotDecision baseline_step(BaselineMode mode, std::span<const QueueState> states,
                           std::span<const StationConfig> stations, const Topology& topo, int l_max) {
    const std::size_t n = states.size();
    if (stations.size() != n || topo.n_stations != n) throw ContractError("baseline_step: size mismatch");
    SlotDecision dec(n);
    if (mode == BaselineMode::nop) {
        for (std::size_t k = 0; k < n; ++k)
            if (states[k].q_len > 0 && energy_guard_ok(states[k], stations[k], l_max)) dec.b(k, k) = 1;
    } else {
        // waiting age first; ties go to the shortest trip, so local service wins
        SquareMatrix<double> weights(n, 0.0);
        SquareMatrix<std::uint8_t> allowed(n, 0);
        const double step = 1.0 / (2.0 * (topo.delta_max + 1) * static_cast<double>(n));
        for (std::size_t r = 0; r < n; ++r) {
            if (states[r].q_len == 0) continue;
            for (std::size_t c = 0; c < n; ++c) {
                weights(r, c) = static_cast<double>(states[r].h) - step * (topo.delta(r, c) + (r == c ? 0.0 : 0.5));
                allowed(r, c) = topo.peer_mask(r, c) && energy_guard_ok(states[c], stations[c], l_max);
            }
        }
        dec.b = realize_positive(weights, allowed);
    }
    for (std::size_t k = 0; k < n; ++k) dec.energy[k] = energy_of_slot(stations[k], dec.served_by(k));
    return dec;
}

}  // namespace peeroff
