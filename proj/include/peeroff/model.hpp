#pragma once

// Domain types shared by every scheduler: station parameters, utilities and
// their concave extension, queue state and the per-slot decision record,
// plus the queue update rules and the binary energy model.

#include <algorithm>
#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace peeroff {

using Slot = std::int64_t;

/// Dense row-major N x N matrix.
template <class T>
class SquareMatrix {
public:
    SquareMatrix() = default;
    explicit SquareMatrix(std::size_t n, T fill = T{}) : n_(n), data_(n * n, fill) {}

    std::size_t size() const noexcept { return n_; }
    T& operator()(std::size_t r, std::size_t c) { return data_[r * n_ + c]; }
    const T& operator()(std::size_t r, std::size_t c) const { return data_[r * n_ + c]; }
    std::span<T> row(std::size_t r) { return {data_.data() + r * n_, n_}; }
    std::span<const T> row(std::size_t r) const { return {data_.data() + r * n_, n_}; }
    void fill(T value) { std::fill(data_.begin(), data_.end(), value); }

    bool operator==(const SquareMatrix&) const = default;

private:
    std::size_t n_ = 0;
    std::vector<T> data_;
};

struct GeoPoint {
    double lat = 0.0;  // degrees
    double lon = 0.0;  // degrees
    bool operator==(const GeoPoint&) const = default;
};

/// Great-circle (haversine) distance in meters on a spherical earth.
double great_circle_distance_m(GeoPoint a, GeoPoint b);

// ---------------------------------------------------------------------------
// Utilities

struct LinearUtility {
    double slope = 1.0;
    bool operator==(const LinearUtility&) const = default;
};

/// g(y) = scale * ln(1 + y)
struct LogUtility {
    double scale = 1.0;
    bool operator==(const LogUtility&) const = default;
};

/// Concave piecewise-linear g through (x, g(x)) points; x runs from 0 to 1.
struct PiecewiseLinearUtility {
    std::vector<std::pair<double, double>> breakpoints;
    bool operator==(const PiecewiseLinearUtility&) const = default;
};

class UtilitySpec {
public:
    using Shape = std::variant<LinearUtility, LogUtility, PiecewiseLinearUtility>;

    UtilitySpec() : shape_(LinearUtility{}), nu_(1.0) {}

    static UtilitySpec linear(double slope);
    static UtilitySpec log(double scale);
    static UtilitySpec piecewise(std::vector<std::pair<double, double>> breakpoints);
    /// Validates and wraps any shape; throws ConfigError when not concave / non-decreasing.
    static UtilitySpec from_shape(Shape shape);

    const Shape& shape() const noexcept { return shape_; }
    /// Upper bound on the right derivative over [0, 1].
    double nu() const noexcept { return nu_; }

    /// g(y) for y >= 0. Beyond 1 the piecewise form continues along its last slope.
    double value(double y) const;
    /// Right derivative of g at y >= 0.
    double right_derivative(double y) const;

    bool operator==(const UtilitySpec& other) const { return shape_ == other.shape_; }

private:
    explicit UtilitySpec(Shape shape, double nu) : shape_(std::move(shape)), nu_(nu) {}

    Shape shape_;
    double nu_ = 1.0;
};

/// Concave extension onto [-1, inf): g([y]_0^1) + nu * min(y, 0).
double g_hat_eval(const UtilitySpec& utility, double y);

// ---------------------------------------------------------------------------
// Stations and topology

struct StationConfig {
    int id = 0;
    std::optional<GeoPoint> position;
    double cpu_rate = 2.0e7;  // cycles per slot
    double e_static = 0.01;   // J per idle slot
    double e_active = 0.174;  // J per busy slot
    double e_budget = 0.05;   // time-average J per slot
    UtilitySpec utility;

    bool operator==(const StationConfig&) const = default;
};

/// Throws ConfigError (key prefix `path`) unless e_static < e_active, e_static <= e_budget, cpu_rate > 0.
void validate_station(const StationConfig& cfg, const std::string& path = "station");

/// Largest sustainable time-average service level (E^aver - e0) / (e1 - e0); not clipped.
double service_cap(const StationConfig& cfg);

/// Energy drawn in one slot by the binary active/idle model.
double energy_of_slot(const StationConfig& cfg, int mu);

struct Topology {
    std::size_t n_stations = 0;
    SquareMatrix<int> delta;         // one-way trip time in slots
    SquareMatrix<std::uint8_t> peer_mask;
    int delta_max = 0;

    /// Every pair permitted with the same one-way delay (0 on the diagonal).
    static Topology uniform(std::size_t n, int delay_slots);
    /// No offloading at all: only the diagonal is permitted.
    static Topology isolated(std::size_t n);
    /// Recomputes delta_max from the permitted off-diagonal entries.
    void refresh_delta_max();

    bool operator==(const Topology&) const = default;
};

void validate_topology(const Topology& topo);

/// One-way trip time for a BS pair at the given distance, in slots; nullopt if not a peer.
/// 3 ms for [0,300] m, 4 ms for (300,600], 5 ms for (600,900]; rescaled by the slot length.
std::optional<int> delta_from_distance(double dist_m, double slot_ms = 1.0);

/// Topology built from station positions using delta_from_distance.
Topology topology_from_positions(std::span<const GeoPoint> positions, double slot_ms = 1.0);

// ---------------------------------------------------------------------------
// Queues and decisions

struct QueueState {
    int q_len = 0;
    std::deque<Slot> arrival_slots;  // oldest first
    double z = 0.0;
    double w = 0.0;
    int h = 0;

    bool operator==(const QueueState&) const = default;
};

/// Relaxed physical queue update for slot `slot`; the result describes slot + 1.
/// Removes the head when eta + d == 1, appends `arrivals` tasks stamped `slot`
/// and recomputes the head-of-line age. Throws ContractError on eta=1 with an empty queue
/// or eta + d > 1.
void update_physical_queue(QueueState& q, int eta, int d, int arrivals, Slot slot);

struct VirtualUpdate {
    int d = 0;
    double gamma = 0.0;
    double energy = 0.0;
    double lambda_or_obs = 0.0;  // lambda_n, or A_n(t - W) in observed mode
    double e_budget = 0.0;
};

/// Z' = max(Z - lambda + D + gamma, 0), W' = max(W - E^aver + e, 0).
void update_virtual_queues(QueueState& q, const VirtualUpdate& u);

/// Head-of-line age recursion written with the realized inter-arrival time `t_inter`:
/// occupied ? max(H + 1 - (eta + D) * T, 0) : A.
int hol_age_rule(int h, bool occupied, int leaving, int t_inter, int arrival);

struct SlotDecision {
    SquareMatrix<std::uint8_t> b;  // b(n, m) = 1: head task of n served by m
    std::vector<std::uint8_t> d;   // drop head-of-line
    std::vector<double> gamma;
    std::vector<double> energy;    // per-station model energy of the slot

    SlotDecision() = default;
    explicit SlotDecision(std::size_t n) : b(n, 0), d(n, 0), gamma(n, 0.0), energy(n, 0.0) {}

    std::size_t size() const noexcept { return d.size(); }
    /// Tasks of queue n served this slot (row sum of b).
    int eta(std::size_t n) const;
    /// Tasks served by station m this slot (column sum of b).
    int served_by(std::size_t m) const;
};

/// Throws ContractError unless eta <= 1, column sums <= 1, eta + D <= 1 and every b(n,m)
/// is a permitted pair with a nonempty queue n.
void check_decision(const SlotDecision& dec, std::span<const QueueState> states,
                    const Topology& topo);

}  // namespace peeroff
