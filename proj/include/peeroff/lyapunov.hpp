#pragma once

// Online drift-plus-penalty scheduler: auxiliary variable, assignment schedule,
// head-of-line drop rule and queue updates, plus the closed-form bounds.

#include <cstdint>
#include <deque>
#include <span>
#include <vector>

#include "peeroff/model.hpp"

namespace peeroff {

enum class ArrivalMode { known_lambda, observed };

struct WogConfig {
    double v = 10.0;
    ArrivalMode mode = ArrivalMode::known_lambda;
    int w_window = 0;  // history lag W for the observed-arrivals Z update
    int l_max = 50;    // slots
};

/// max_n ceil(V nu_n) + 2.
int h_max_global(double v, std::span<const StationConfig> stations);

/// Config with w_window filled in as required by the mode.
WogConfig make_wog_config(double v, ArrivalMode mode, int l_max,
                          std::span<const StationConfig> stations);

struct BoundReport {
    std::vector<int> h_max;
    std::vector<int> z_max;
    std::vector<double> w_max;
    int h_max_g = 0;
    int delta_max = 0;
    int l_max = 0;
    double v_ceiling = 0.0;  // +inf when every nu is zero
    int worst_response = 0;  // h_max_g + 2 delta_max
};

/// Throws ConfigError when L^max <= 2 delta^max + 2 (no positive V fits the deadline).
BoundReport deadline_bounds(const WogConfig& cfg, std::span<const StationConfig> stations,
                            const Topology& topo);

/// Maximizer of V g_hat(gamma) - Z gamma over [-1, 1]; the largest maximizer on ties.
double choose_gamma(double z, double v, const UtilitySpec& utility);

/// D_n = 1 iff eta_n = 0, Q_n > 0 and H_n >= Z_n.
std::vector<std::uint8_t> drop_decisions(std::span<const QueueState> states, std::span<const int> eta);

/// Stateful scheduler owning the arrival history needed in observed mode.
class WogScheduler {
public:
    WogScheduler(std::vector<StationConfig> stations, Topology topo, WogConfig cfg,
                 std::vector<double> lambda);

    /// Stages 1-3 for the current states.
    SlotDecision decide(std::span<const QueueState> states) const;

    /// Stage 4: physical and virtual queue updates for slot `t`.
    void update(std::span<QueueState> states, const SlotDecision& dec,
                std::span<const int> arrivals, Slot t);

    /// decide + update.
    SlotDecision step(std::span<QueueState> states, std::span<const int> arrivals, Slot t);

    const WogConfig& config() const noexcept { return cfg_; }
    const std::vector<StationConfig>& stations() const noexcept { return stations_; }
    /// Replaces per-station energy budgets (class budget refresh).
    void set_budgets(std::span<const double> e_budget);

private:
    std::vector<StationConfig> stations_;
    Topology topo_;
    WogConfig cfg_;
    std::vector<double> lambda_;
    std::deque<std::vector<int>> history_;  // arrivals of the last w_window slots, oldest first
};

/// Free-function form of one slot; `history` holds past arrivals (oldest first) in observed mode.
SlotDecision wog_slot(std::span<QueueState> states, std::span<const int> arrivals,
                      const WogConfig& cfg, std::span<const StationConfig> stations,
                      const Topology& topo, std::span<const double> lambda,
                      std::deque<std::vector<int>>& history, Slot t);

}  // namespace peeroff
