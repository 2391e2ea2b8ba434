#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <memory>
#include <numeric>
#include <ostream>
#include <sstream>

#include "peeroff/errors.hpp"
#include "peeroff/lyapunov.hpp"
#include "peeroff/planner.hpp"
#include "peeroff/sim.hpp"

namespace peeroff {

namespace {

struct GiantTask {
    Slot arrival = 0;
    int n_raw = 0;
    double cycles = 0.0;
    bool phantom = false;
    int tag = -1;
};

struct ExecRecord {
    Slot arrival = 0;
    Slot service_slot = 0;
    int origin = 0;
    int server = 0;
    int n_raw = 0;
    int cls = 0;
    double cycles = 0.0;
};

struct Instance {
    int cls = 0;
    std::vector<StationConfig> params;
    std::vector<QueueState> states;
    std::vector<std::deque<GiantTask>> tasks;
    std::unique_ptr<WogScheduler> wog;
    RefuseLedger ledger;
    std::vector<double> w_bound;
};

constexpr int kViolationTs[] = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};

class Runner {
public:
    Runner(const ResolvedScenario& rs, const RunOptions& opts);
    MetricsSummary run();

private:
    void setup_instances();
    void run_known();
    void run_queued();
    void complete(const ExecRecord& rec, Slot done_slot);
    void account_slot_utility(Slot t);
    void check_bounds(const Instance& inst, Slot t) const;
    std::string dump_states(const Instance& inst, Slot t) const;
    void trace_row(Slot t, std::size_t n, int cls, const QueueState& q, int eta, int d, double gamma,
                   double energy, int arrivals);
    void finish();

    const ResolvedScenario& rs_;
    const ScenarioConfig& cfg_;
    RunOptions opts_;
    std::size_t n_;
    Topology topo_;  // topology the algorithm runs on
    ArrivalProcess proc_;
    Rng arr_rng_, pol_rng_, cls_rng_;
    std::vector<Instance> inst_;
    std::optional<ClassPlan> plan_;
    std::vector<double> class_workload_;
    std::vector<double> per_cycle_j_;
    bool meter_cycles_ = false;
    bool multiplex_ = false;
    bool bounded_ = false;

    MetricsSummary m_;
    std::vector<long long> ontime_by_origin_;
    std::vector<double> energy_sum_;
    std::vector<long long> services_;
    double response_sum_ = 0.0, bound_sum_ = 0.0;
    long long one_slot_ = 0;
    double running_utility_sum_ = 0.0;
    HolHistogram hist_;
    std::vector<std::vector<MultiplexJob>> carry_;
    std::vector<ExecRecord> exec_store_;
};

Runner::Runner(const ResolvedScenario& rs, const RunOptions& opts)
    : rs_(rs),
      cfg_(rs.cfg),
      opts_(opts),
      n_(rs.stations.size()),
      topo_(rs.cfg.algorithm == Algorithm::nop ? Topology::isolated(rs.stations.size()) : rs.topology),
      proc_(rs.cfg.arrivals, rs.stations.size(), rs.group_attach, rs.cfg.load_factor, rs.cfg.workload),
      arr_rng_(make_stream(rs.cfg.seed, 1)),
      pol_rng_(make_stream(rs.cfg.seed, 2)),
      cls_rng_(make_stream(rs.cfg.seed, 3)) {
    m_.horizon = cfg_.horizon_slots;
    m_.slot_ms = cfg_.slot_ms;
    m_.l_max_slots = rs.l_max_slots;
    m_.delta_max = topo_.delta_max;
    m_.h_max_g = h_max_global(cfg_.v, rs.stations);
    ontime_by_origin_.assign(n_, 0);
    energy_sum_.assign(n_, 0.0);
    services_.assign(n_, 0);
    m_.max_h_per_bs.assign(n_, 0);
    m_.max_z_per_bs.assign(n_, 0.0);
    m_.max_w_per_bs.assign(n_, 0.0);
    carry_.assign(n_, {});
    meter_cycles_ = cfg_.energy_per_cycle_nj > 0.0 && cfg_.workload.has_value();
    multiplex_ = cfg_.workload.has_value() && (meter_cycles_ || cfg_.k_classes > 1);
    for (const auto& s : rs.stations)
        per_cycle_j_.push_back(cfg_.energy_per_cycle_nj > 0.0 ? cfg_.energy_per_cycle_nj * 1e-9
                                                              : (s.e_active - s.e_static) / s.cpu_rate);
    bounded_ = cfg_.check_bounds && cfg_.giant_binding &&
               (cfg_.algorithm == Algorithm::wog || cfg_.algorithm == Algorithm::wog_observed);
}

void Runner::setup_instances() {
    const int k = cfg_.k_classes;
    std::vector<double> e_budget, e_static;
    for (const auto& s : rs_.stations) {
        e_budget.push_back(s.e_budget);
        e_static.push_back(s.e_static);
    }
    if (k > 1) {
        std::vector<double> samples(20000);
        for (auto& x : samples)
            x = cfg_.workload->min_cycles + (cfg_.workload->max_cycles - cfg_.workload->min_cycles) * uniform01(cls_rng_);
        plan_ = class_partition_and_budget(samples, k, cfg_.workload->min_cycles, cfg_.workload->max_cycles,
                                           e_budget, e_static, {}, cfg_.reassign_period);
        class_workload_.assign(static_cast<std::size_t>(plan_->k), 0.0);
    }
    const int kc = plan_ ? plan_->k : 1;
    const double span = cfg_.workload ? cfg_.workload->max_cycles - cfg_.workload->min_cycles : 0.0;
    for (int c = 0; c < kc; ++c) {
        Instance inst;
        inst.cls = c;
        inst.params = rs_.stations;
        if (plan_) {
            for (std::size_t s = 0; s < n_; ++s) {
                auto& p = inst.params[s];
                p.e_static = rs_.stations[s].e_static / kc;
                p.e_active = p.e_static + per_cycle_j_[s] * plan_->mean_cycles[static_cast<std::size_t>(c)];
                p.e_budget = plan_->budgets[s][static_cast<std::size_t>(c)];
            }
        }
        inst.states.assign(n_, QueueState{});
        inst.tasks.assign(n_, {});
        if (cfg_.algorithm == Algorithm::wog || cfg_.algorithm == Algorithm::wog_observed) {
            const auto mode = cfg_.algorithm == Algorithm::wog ? ArrivalMode::known_lambda : ArrivalMode::observed;
            WogConfig wc = make_wog_config(cfg_.v, mode, rs_.l_max_slots, inst.params);
            std::vector<double> lambda;
            if (mode == ArrivalMode::known_lambda) {
                if (!cfg_.lambda.empty() && kc == 1) {
                    lambda = cfg_.lambda;
                } else {
                    const double frac = plan_ && span > 0.0
                                            ? (plan_->edges[static_cast<std::size_t>(c) + 1] - plan_->edges[static_cast<std::size_t>(c)]) / span
                                            : 1.0;
                    lambda = analytic_lambda(rs_, frac);
                }
            }
            inst.wog = std::make_unique<WogScheduler>(inst.params, topo_, wc, lambda);
        }
        inst.ledger = RefuseLedger(n_, m_.h_max_g);
        for (const auto& p : inst.params)
            inst.w_bound.push_back(std::ceil(m_.h_max_g / (p.e_active - p.e_static) - 1e-12) + p.e_active - p.e_budget);
        inst_.push_back(std::move(inst));
    }
    if (kc == 1) m_.w_bound_per_bs = inst_[0].w_bound;
}

std::string Runner::dump_states(const Instance& inst, Slot t) const {
    std::ostringstream os;
    os << "slot " << t << " class " << inst.cls << " states:";
    for (std::size_t s = 0; s < n_; ++s) {
        const auto& q = inst.states[s];
        os << "\n  bs " << s << ": Q=" << q.q_len << " H=" << q.h << " Z=" << q.z << " W=" << q.w;
    }
    return os.str();
}

void Runner::check_bounds(const Instance& inst, Slot t) const {
    const double z_tol = 1e-9;
    for (std::size_t s = 0; s < n_; ++s) {
        const auto& q = inst.states[s];
        const int h_cap = static_cast<int>(std::ceil(cfg_.v * inst.params[s].utility.nu() - 1e-12)) + 2;
        std::string what;
        if (q.h > h_cap)
            what = "H above its bound " + std::to_string(h_cap);
        else if (q.q_len > q.h && q.q_len > 0)
            what = "Q above H";
        else if (q.z > h_cap + z_tol)
            what = "Z above its bound " + std::to_string(h_cap);
        else if (!plan_ && q.w > inst.w_bound[s] + z_tol)
            what = "W above its bound";
        if (!what.empty())
            throw InvariantError("bound violated at bs " + std::to_string(s) + ": " + what + "\n" + dump_states(inst, t));
    }
}

void Runner::trace_row(Slot t, std::size_t n, int cls, const QueueState& q, int eta, int d, double gamma,
                       double energy, int arrivals) {
    if (!opts_.trace) return;
    char buf[256];
    std::snprintf(buf, sizeof buf, "%" PRId64 ",%zu,%d,%d,%d,%.10g,%.10g,%d,%d,%.10g,%.10g,%d\n",
                  static_cast<std::int64_t>(t), n, cls, q.q_len, q.h, q.z, q.w, eta, d, gamma, energy, arrivals);
    *opts_.trace << buf;
}

void Runner::complete(const ExecRecord& rec, Slot done_slot) {
    RelaxedServe rsv{done_slot, rec.arrival, rec.origin, rec.server};
    const LiftedServe l = lift_serve(rsv, topo_, cfg_.lifting);
    const long long k = rec.n_raw;
    m_.counts.served += k;
    if (done_slot > rec.service_slot) m_.counts.capacity_delayed += k;
    response_sum_ += static_cast<double>(l.response) * k;
    bound_sum_ += static_cast<double>(l.bound_response) * k;
    m_.max_response_slots = std::max(m_.max_response_slots, l.response);
    m_.max_bound_response_slots = std::max(m_.max_bound_response_slots, l.bound_response);
    if (l.response == 1) one_slot_ += k;
    if (l.response <= rs_.l_max_slots) {
        m_.counts.ontime += k;
        ontime_by_origin_[static_cast<std::size_t>(rec.origin)] += k;
    } else {
        m_.counts.late += k;
    }
}

void Runner::account_slot_utility(Slot t) {
    if (t >= cfg_.horizon_slots) return;
    const double slots = static_cast<double>(t + 1);
    double u = 0.0;
    for (std::size_t s = 0; s < n_; ++s) u += rs_.stations[s].utility.value(ontime_by_origin_[s] / slots);
    u -= 2.0 * static_cast<double>(m_.counts.late) / slots;
    if (cfg_.punish_blocked) u -= 2.0 * static_cast<double>(m_.counts.blocked) / slots;
    running_utility_sum_ += u;
}

void Runner::run_known() {
    Instance& inst = inst_[0];
    std::vector<double> lambda = cfg_.lambda.empty() ? analytic_lambda(rs_) : cfg_.lambda;
    const PkSolution sol = solve_pk(rs_.stations, lambda);
    const KnownRatePlan plan = build_known_rate_plan(sol.y_star, sol.mu_star);
    m_.z_star = sol.z_star;
    std::vector<std::optional<ExecRecord>> pending(n_);
    Slot t = 0;
    for (;; ++t) {
        const bool in_horizon = t < cfg_.horizon_slots;
        const bool any_pending = std::any_of(pending.begin(), pending.end(), [](const auto& p) { return p.has_value(); });
        if (!in_horizon && !any_pending) break;
        // last slot's assignment runs now
        std::vector<int> eta_row(n_, 0);
        for (std::size_t j = 0; j < n_; ++j) {
            const bool busy = pending[j].has_value();
            if (in_horizon) {
                energy_sum_[j] += energy_of_slot(inst.params[j], busy ? 1 : 0);
                services_[j] += busy ? 1 : 0;
            }
            if (busy) {
                eta_row[static_cast<std::size_t>(pending[j]->origin)] = 1;
                complete(*pending[j], t);
                pending[j].reset();
            }
        }
        ArrivalBatch batch;
        batch.giant.assign(n_, 0);
        batch.members.assign(n_, {});
        if (in_horizon) batch = generate_arrivals(proc_, arr_rng_);
        std::vector<std::uint8_t> a(n_, 0);
        for (std::size_t s = 0; s < n_; ++s) {
            a[s] = static_cast<std::uint8_t>(batch.giant[s]);
            m_.counts.arrived += static_cast<long long>(batch.members[s].size());
        }
        const auto out = run_known_rate_slot(a, lambda, sol, plan, pol_rng_);
        for (std::size_t s = 0; s < n_; ++s) {
            const int n_raw = static_cast<int>(batch.members[s].size());
            if (out.dropped[s]) m_.counts.blocked += n_raw;
            trace_row(t, s, 0, QueueState{}, eta_row[s], 0, 0.0,
                      energy_of_slot(inst.params[s], eta_row[s]), a[s]);
        }
        for (std::size_t j = 0; j < n_; ++j) {
            if (!out.a[j]) continue;
            const auto o = static_cast<std::size_t>(out.origin[j]);
            double cycles = 0.0;
            for (const auto& r : batch.members[o]) cycles += r.cycles;
            pending[j] = ExecRecord{t, t + 1, static_cast<int>(o), static_cast<int>(j),
                                    static_cast<int>(batch.members[o].size()), 0, cycles};
        }
        account_slot_utility(t);
    }
    m_.slots_simulated = t;
}

void Runner::run_queued() {
    const bool is_wog = cfg_.algorithm == Algorithm::wog || cfg_.algorithm == Algorithm::wog_observed;
    const std::size_t kc = inst_.size();
    std::vector<int> nop_cap(n_, 0);
    Slot t = 0;
    for (;; ++t) {
        const bool in_horizon = t < cfg_.horizon_slots;
        if (!in_horizon) {
            bool busy = false;
            for (const auto& inst : inst_)
                for (std::size_t s = 0; s < n_ && !busy; ++s) busy = inst.states[s].q_len > 0;
            for (const auto& c : carry_) busy = busy || !c.empty();
            if (!busy) break;
            if (t >= cfg_.horizon_slots + opts_.drain_limit) {
                for (auto& inst : inst_)
                    for (auto& dq : inst.tasks)
                        for (const auto& g : dq)
                            if (!g.phantom) {
                                m_.counts.dropped += g.n_raw;
                                m_.counts.unfinished += g.n_raw;
                            }
                break;
            }
        }
        if (plan_ && t > 0 && t % plan_->reassign_period == 0) {
            std::vector<double> e_budget, e_static;
            for (const auto& s : rs_.stations) {
                e_budget.push_back(s.e_budget);
                e_static.push_back(s.e_static);
            }
            refresh_class_budgets(*plan_, class_workload_, e_budget, e_static);
            for (auto& inst : inst_) {
                std::vector<double> b(n_);
                for (std::size_t s = 0; s < n_; ++s) {
                    b[s] = plan_->budgets[s][static_cast<std::size_t>(inst.cls)];
                    inst.params[s].e_budget = b[s];
                }
                if (inst.wog) inst.wog->set_budgets(b);
            }
        }

        // arrivals, grouped per class instance and station
        std::vector<std::vector<std::vector<GiantTask>>> incoming(kc, std::vector<std::vector<GiantTask>>(n_));
        if (in_horizon) {
            const auto raw = proc_.next(arr_rng_);
            std::vector<std::vector<std::vector<RawTask>>> by(kc, std::vector<std::vector<RawTask>>(n_));
            for (const auto& r : raw) {
                const int c = plan_ ? plan_->class_of(r.cycles) : 0;
                by[static_cast<std::size_t>(c)][static_cast<std::size_t>(r.bs)].push_back(r);
                if (plan_) class_workload_[static_cast<std::size_t>(c)] += r.cycles;
            }
            for (std::size_t c = 0; c < kc; ++c)
                for (std::size_t s = 0; s < n_; ++s) {
                    const auto& list = by[c][s];
                    if (list.empty()) continue;
                    if (cfg_.giant_binding) {
                        GiantTask g{t, static_cast<int>(list.size()), 0.0, false, -1};
                        for (const auto& r : list) g.cycles += r.cycles;
                        incoming[c][s].push_back(g);
                    } else {
                        for (const auto& r : list) incoming[c][s].push_back(GiantTask{t, 1, r.cycles, false, -1});
                    }
                }
        }

        std::vector<std::vector<MultiplexJob>> jobs(n_);
        std::vector<double> binary_extra(n_, 0.0);
        for (auto& inst : inst_) {
            if (in_horizon) {
                for (std::size_t s = 0; s < n_; ++s) {
                    const auto& q = inst.states[s];
                    hist_.add(q.h);
                    m_.max_h_per_bs[s] = std::max(m_.max_h_per_bs[s], q.h);
                    m_.max_z_per_bs[s] = std::max(m_.max_z_per_bs[s], q.z);
                    m_.max_w_per_bs[s] = std::max(m_.max_w_per_bs[s], q.w);
                }
            }
            if (bounded_) check_bounds(inst, t);

            SlotDecision dec = is_wog ? inst.wog->decide(inst.states)
                                      : baseline_step(cfg_.algorithm == Algorithm::nop ? BaselineMode::nop
                                                                                       : BaselineMode::greedy_latency,
                                                      inst.states, inst.params, topo_, rs_.l_max_slots);
            check_decision(dec, inst.states, topo_);

            SquareMatrix<std::uint8_t> executed = dec.b;
            if (cfg_.early_refuse) {
                std::vector<HeadInfo> heads(n_);
                for (std::size_t s = 0; s < n_; ++s)
                    if (!inst.tasks[s].empty())
                        heads[s] = HeadInfo{true, inst.tasks[s].front().phantom, inst.tasks[s].front().tag};
                const long long overflow_before = inst.ledger.credit_overflow;
                auto outcome = early_refuse_apply(dec, heads, topo_, inst.ledger);
                m_.counts.credit_overflow += inst.ledger.credit_overflow - overflow_before;
                executed = std::move(outcome.executed);
            }

            // heads leave the queues
            std::vector<int> eta(n_);
            for (std::size_t s = 0; s < n_; ++s) {
                eta[s] = dec.eta(s);
                if (eta[s] + dec.d[s] == 0) continue;
                const GiantTask head = inst.tasks[s].front();
                inst.tasks[s].pop_front();
                if (head.phantom) {
                    if (eta[s]) m_.counts.phantom_served += 1;
                    continue;
                }
                int server = -1;
                for (std::size_t c = 0; c < n_; ++c)
                    if (executed(s, c)) server = static_cast<int>(c);
                if (server < 0) {
                    m_.counts.dropped += head.n_raw;
                    if (cfg_.early_refuse) m_.counts.fallback_drops += head.n_raw;
                    continue;
                }
                const auto sv = static_cast<std::size_t>(server);
                exec_store_.push_back(ExecRecord{head.arrival, t, static_cast<int>(s), server, head.n_raw, inst.cls, head.cycles});
                jobs[sv].push_back(MultiplexJob{inst.cls, head.cycles, exec_store_.size() - 1});
                binary_extra[sv] += inst.params[sv].e_active - inst.params[sv].e_static;
            }

            // admission
            std::vector<int> admitted(n_, 0);
            std::vector<std::vector<GiantTask>> enq(n_);
            for (std::size_t s = 0; s < n_; ++s) {
                int q_after = inst.states[s].q_len - eta[s] - dec.d[s];
                const int cap = cfg_.algorithm == Algorithm::nop
                                    ? (cfg_.nop_backlog_cap ? *cfg_.nop_backlog_cap : nop_backlog_cap(inst.params[s], rs_.l_max_slots))
                                    : 0;
                for (auto g : incoming[static_cast<std::size_t>(inst.cls)][s]) {
                    m_.counts.arrived += g.n_raw;
                    if (cap > 0 && q_after >= cap) {
                        m_.counts.blocked += g.n_raw;
                        continue;
                    }
                    if (cfg_.early_refuse) {
                        if (auto tag = early_refuse_admit(inst.ledger, s)) {
                            m_.counts.blocked += g.n_raw;
                            g.phantom = true;
                            g.tag = *tag;
                        }
                    }
                    enq[s].push_back(g);
                    ++q_after;
                }
                admitted[s] = static_cast<int>(enq[s].size());
            }

            for (std::size_t s = 0; s < n_; ++s)
                trace_row(t, s, inst.cls, inst.states[s], eta[s], dec.d[s], dec.gamma[s], dec.energy[s], admitted[s]);

            if (inst.wog) {
                inst.wog->update(inst.states, dec, admitted, t);
            } else {
                for (std::size_t s = 0; s < n_; ++s) {
                    update_physical_queue(inst.states[s], eta[s], dec.d[s], admitted[s], t);
                    inst.states[s].w = std::max(inst.states[s].w - inst.params[s].e_budget + dec.energy[s], 0.0);
                }
            }
            for (std::size_t s = 0; s < n_; ++s)
                for (const auto& g : enq[s]) inst.tasks[s].push_back(g);
        }

        // execution
        for (std::size_t s = 0; s < n_; ++s) {
            double energy = rs_.stations[s].e_static;
            if (multiplex_) {
                auto out = multiplex_classes(carry_[s], jobs[s], rs_.stations[s].cpu_rate);
                for (const auto& j : out.completed) complete(exec_store_[j.tag], t);
                carry_[s] = std::move(out.carried);
                if (meter_cycles_) energy += per_cycle_j_[s] * out.cycles_used;
                else energy += binary_extra[s];
            } else {
                for (const auto& j : jobs[s]) complete(exec_store_[j.tag], t);
                energy += binary_extra[s];
            }
            if (in_horizon) {
                energy_sum_[s] += energy;
                services_[s] += static_cast<long long>(jobs[s].size());
            }
        }
        if (!multiplex_) exec_store_.clear();
        account_slot_utility(t);
    }
    m_.slots_simulated = t;
}

void Runner::finish() {
    const double horizon = static_cast<double>(std::max<std::int64_t>(cfg_.horizon_slots, 1));
    auto& c = m_.counts;
    if (c.arrived != c.served + c.blocked + c.dropped) {
        std::ostringstream os;
        os << "task accounting does not close: arrived " << c.arrived << " served " << c.served
           << " blocked " << c.blocked << " dropped " << c.dropped;
        throw InvariantError(os.str());
    }
    m_.mean_response_slots = c.served > 0 ? response_sum_ / static_cast<double>(c.served) : 0.0;
    m_.mean_response_ms = m_.mean_response_slots * cfg_.slot_ms;
    m_.mean_bound_response_ms = c.served > 0 ? bound_sum_ / static_cast<double>(c.served) * cfg_.slot_ms : 0.0;
    m_.one_slot_fraction = c.served > 0 ? static_cast<double>(one_slot_) / static_cast<double>(c.served) : 0.0;
    double u = 0.0;
    for (std::size_t s = 0; s < n_; ++s) u += rs_.stations[s].utility.value(ontime_by_origin_[s] / horizon);
    u -= 2.0 * static_cast<double>(c.late) / horizon;
    if (cfg_.punish_blocked) u -= 2.0 * static_cast<double>(c.blocked) / horizon;
    m_.utility = u;
    m_.utility_running_mean = running_utility_sum_ / horizon;
    m_.throughput = static_cast<double>(c.served) / horizon;
    m_.block_rate = c.arrived > 0 ? static_cast<double>(c.blocked) / static_cast<double>(c.arrived) : 0.0;
    const long long accepted = c.served + c.dropped;
    m_.satisfaction = accepted > 0 ? static_cast<double>(c.ontime) / static_cast<double>(accepted) : 1.0;
    m_.energy_per_bs.resize(n_);
    m_.service_rate_per_bs.resize(n_);
    for (std::size_t s = 0; s < n_; ++s) {
        m_.energy_per_bs[s] = energy_sum_[s] / horizon;
        m_.service_rate_per_bs[s] = static_cast<double>(services_[s]) / horizon;
    }
    m_.violation = violation_stats(hist_, m_.h_max_g, kViolationTs);
}

MetricsSummary Runner::run() {
    setup_instances();
    if (cfg_.algorithm == Algorithm::known)
        run_known();
    else
        run_queued();
    finish();
    return m_;
}

}  // namespace

MetricsSummary run_simulation(const ResolvedScenario& rs, const RunOptions& opts) {
    if (opts.trace) *opts.trace << kTraceHeader << '\n';
    Runner r(rs, opts);
    return r.run();
}

}  // namespace peeroff
