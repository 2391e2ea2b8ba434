#include "peeroff/lyapunov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "peeroff/assignment.hpp"
#include "peeroff/errors.hpp"

namespace peeroff {

namespace {

int ceil_int(double x) { return static_cast<int>(std::ceil(x - 1e-12)); }

double objective(double z, double v, const UtilitySpec& u, double gamma) {
    return v * g_hat_eval(u, gamma) - z * gamma;
}

}  // namespace

int h_max_global(double v, std::span<const StationConfig> stations) {
    int h = 2;
    for (const auto& s : stations) h = std::max(h, ceil_int(v * s.utility.nu()) + 2);
    return h;
}

WogConfig make_wog_config(double v, ArrivalMode mode, int l_max,
                          std::span<const StationConfig> stations) {
    if (!(v > 0.0)) throw ConfigError("v", "must be positive");
    WogConfig cfg;
    cfg.v = v;
    cfg.mode = mode;
    cfg.l_max = l_max;
    cfg.w_window = h_max_global(v, stations);
    return cfg;
}

BoundReport deadline_bounds(const WogConfig& cfg, std::span<const StationConfig> stations,
                            const Topology& topo) {
    if (!(cfg.v > 0.0)) throw ConfigError("v", "must be positive");
    BoundReport r;
    r.delta_max = topo.delta_max;
    r.l_max = cfg.l_max;
    r.h_max_g = h_max_global(cfg.v, stations);
    double nu_max = 0.0;
    for (const auto& s : stations) {
        const int h = ceil_int(cfg.v * s.utility.nu()) + 2;
        r.h_max.push_back(h);
        r.z_max.push_back(h);
        nu_max = std::max(nu_max, s.utility.nu());
    }
    for (const auto& s : stations)
        r.w_max.push_back(std::ceil(r.h_max_g / (s.e_active - s.e_static) - 1e-12) + s.e_active - s.e_budget);
    const int room = cfg.l_max - 2 * topo.delta_max - 2;
    if (room <= 0)
        throw ConfigError("l_max_ms", "deadline " + std::to_string(cfg.l_max) +
                                          " slots leaves no room above 2*delta_max + 2");
    r.v_ceiling = nu_max > 0.0 ? room / nu_max : std::numeric_limits<double>::infinity();
    r.worst_response = r.h_max_g + 2 * topo.delta_max;
    return r;
}

double choose_gamma(double z, double v, const UtilitySpec& utility) {
    const double nu = utility.nu();
    if (const auto* lin = std::get_if<LinearUtility>(&utility.shape())) {
        // below 0 the extension has slope nu = slope, so one comparison decides both sides
        return z <= v * lin->slope ? 1.0 : -1.0;
    }
    if (const auto* lg = std::get_if<LogUtility>(&utility.shape())) {
        if (z > v * nu) return -1.0;
        if (z <= 0.0) return 1.0;
        return std::clamp(v * lg->scale / z - 1.0, -1.0, 1.0);
    }
    // piecewise: the optimum sits on a breakpoint or an end
    std::vector<double> cand{-1.0, 0.0, 1.0};
    for (const auto& [x, _] : std::get<PiecewiseLinearUtility>(utility.shape()).breakpoints)
        if (x > 0.0 && x < 1.0) cand.push_back(x);
    std::sort(cand.begin(), cand.end());
    double best = cand.front();
    double best_val = objective(z, v, utility, best);
    for (double c : cand) {
        const double val = objective(z, v, utility, c);
        if (val >= best_val - 1e-12) {
            best = c;
            best_val = std::max(best_val, val);
        }
    }
    return best;
}

std::vector<std::uint8_t> drop_decisions(std::span<const QueueState> states, std::span<const int> eta) {
    if (states.size() != eta.size()) throw ContractError("drop_decisions: size mismatch");
    std::vector<std::uint8_t> d(states.size(), 0);
    for (std::size_t n = 0; n < states.size(); ++n)
        d[n] = static_cast<std::uint8_t>(eta[n] == 0 && states[n].q_len > 0 &&
                                         static_cast<double>(states[n].h) >= states[n].z);
    return d;
}

WogScheduler::WogScheduler(std::vector<StationConfig> stations, Topology topo, WogConfig cfg,
                           std::vector<double> lambda)
    : stations_(std::move(stations)), topo_(std::move(topo)), cfg_(cfg), lambda_(std::move(lambda)) {
    if (topo_.n_stations != stations_.size())
        throw ConfigError("topology", "station count mismatch");
    if (cfg_.mode == ArrivalMode::known_lambda && lambda_.size() != stations_.size())
        throw ConfigError("lambda", "known-rate mode needs one rate per station");
    if (cfg_.mode == ArrivalMode::observed) {
        if (cfg_.w_window <= 0) cfg_.w_window = h_max_global(cfg_.v, stations_);
        // warm-up: no arrivals before slot 0
        history_.assign(static_cast<std::size_t>(cfg_.w_window), std::vector<int>(stations_.size(), 0));
    }
}

SlotDecision WogScheduler::decide(std::span<const QueueState> states) const {
    const std::size_t n = stations_.size();
    if (states.size() != n) throw ContractError("WogScheduler: state count mismatch");
    SlotDecision dec(n);
    for (std::size_t k = 0; k < n; ++k) dec.gamma[k] = choose_gamma(states[k].z, cfg_.v, stations_[k].utility);
    dec.b = build_schedule(states, stations_, topo_.peer_mask);
    std::vector<int> eta(n);
    for (std::size_t k = 0; k < n; ++k) eta[k] = dec.eta(k);
    dec.d = drop_decisions(states, eta);
    for (std::size_t k = 0; k < n; ++k)
        dec.energy[k] = energy_of_slot(stations_[k], dec.served_by(k));
    return dec;
}

void WogScheduler::update(std::span<QueueState> states, const SlotDecision& dec,
                          std::span<const int> arrivals, Slot t) {
    const std::size_t n = stations_.size();
    if (arrivals.size() != n) throw ContractError("WogScheduler: arrival count mismatch");
    const std::vector<int>* lagged = nullptr;
    if (cfg_.mode == ArrivalMode::observed) {
        history_.emplace_back(arrivals.begin(), arrivals.end());
        // A(t - W): the front after pushing slot t is slot t - W
        lagged = &history_.front();
    }
    for (std::size_t k = 0; k < n; ++k) {
        QueueState& q = states[k];
        const int eta = dec.eta(k);
        update_physical_queue(q, eta, dec.d[k], arrivals[k], t);
        VirtualUpdate u;
        u.d = dec.d[k];
        u.gamma = dec.gamma[k];
        u.energy = dec.energy[k];
        u.e_budget = stations_[k].e_budget;
        u.lambda_or_obs = lagged ? (*lagged)[k] : lambda_[k];
        update_virtual_queues(q, u);
    }
    if (lagged) history_.pop_front();
}

SlotDecision WogScheduler::step(std::span<QueueState> states, std::span<const int> arrivals, Slot t) {
    SlotDecision dec = decide(states);
    check_decision(dec, states, topo_);
    update(states, dec, arrivals, t);
    return dec;
}

void WogScheduler::set_budgets(std::span<const double> e_budget) {
    if (e_budget.size() != stations_.size()) throw ContractError("set_budgets: size mismatch");
    for (std::size_t k = 0; k < stations_.size(); ++k) stations_[k].e_budget = e_budget[k];
}

SlotDecision wog_slot(std::span<QueueState> states, std::span<const int> arrivals,
                      const WogConfig& cfg, std::span<const StationConfig> stations,
                      const Topology& topo, std::span<const double> lambda,
                      std::deque<std::vector<int>>& history, Slot t) {
    WogScheduler sched({stations.begin(), stations.end()}, topo, cfg, {lambda.begin(), lambda.end()});
    SlotDecision dec = sched.decide(states);
    check_decision(dec, states, topo);
    const std::size_t n = stations.size();
    for (std::size_t k = 0; k < n; ++k) {
        QueueState& q = states[k];
        update_physical_queue(q, dec.eta(k), dec.d[k], arrivals[k], t);
        VirtualUpdate u;
        u.d = dec.d[k];
        u.gamma = dec.gamma[k];
        u.energy = dec.energy[k];
        u.e_budget = stations[k].e_budget;
        if (cfg.mode == ArrivalMode::observed) {
            const std::size_t w = static_cast<std::size_t>(std::max(cfg.w_window, 1));
            // history front is slot t - W once full; missing entries count as no arrival
            u.lambda_or_obs = history.size() >= w ? history[history.size() - w][k] : 0.0;
        } else {
            u.lambda_or_obs = lambda[k];
        }
        update_virtual_queues(q, u);
    }
    if (cfg.mode == ArrivalMode::observed) {
        history.emplace_back(arrivals.begin(), arrivals.end());
        while (history.size() > static_cast<std::size_t>(std::max(cfg.w_window, 1))) history.pop_front();
    }
    return dec;
}

}  // namespace peeroff
