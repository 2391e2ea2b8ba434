#include "peeroff/model.hpp"

#include <cmath>
#include <sstream>

#include "peeroff/errors.hpp"

namespace peeroff {

namespace {

constexpr double kEarthRadiusM = 6371008.8;
constexpr double kSlopeTol = 1e-12;

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double segment_slope(const std::pair<double, double>& a, const std::pair<double, double>& b) {
    return (b.second - a.second) / (b.first - a.first);
}

}  // namespace

const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::domain: return "domain";
        case ErrorKind::contract: return "contract";
        case ErrorKind::config: return "config";
        case ErrorKind::infeasible: return "infeasible";
        case ErrorKind::invariant: return "invariant";
        case ErrorKind::io: return "io";
    }
    return "unknown";
}

double great_circle_distance_m(GeoPoint a, GeoPoint b) {
    constexpr double kDeg = M_PI / 180.0;
    const double dlat = (b.lat - a.lat) * kDeg;
    const double dlon = (b.lon - a.lon) * kDeg;
    const double s = std::sin(dlat / 2) * std::sin(dlat / 2) +
                     std::cos(a.lat * kDeg) * std::cos(b.lat * kDeg) * std::sin(dlon / 2) *
                         std::sin(dlon / 2);
    return 2.0 * kEarthRadiusM * std::asin(std::min(1.0, std::sqrt(s)));
}

// ---------------------------------------------------------------------------
// UtilitySpec

UtilitySpec UtilitySpec::linear(double slope) { return from_shape(LinearUtility{slope}); }

UtilitySpec UtilitySpec::log(double scale) { return from_shape(LogUtility{scale}); }

UtilitySpec UtilitySpec::piecewise(std::vector<std::pair<double, double>> breakpoints) {
    return from_shape(PiecewiseLinearUtility{std::move(breakpoints)});
}

UtilitySpec UtilitySpec::from_shape(Shape shape) {
    const double nu = std::visit(
        Overloaded{
            [](const LinearUtility& u) {
                if (!std::isfinite(u.slope) || u.slope < 0.0)
                    throw ConfigError("utility.slope", "must be finite and non-negative");
                return u.slope;
            },
            [](const LogUtility& u) {
                if (!std::isfinite(u.scale) || u.scale < 0.0)
                    throw ConfigError("utility.scale", "must be finite and non-negative");
                return u.scale;  // derivative of scale*ln(1+y) at 0
            },
            [](const PiecewiseLinearUtility& u) {
                const auto& bp = u.breakpoints;
                if (bp.size() < 2)
                    throw ConfigError("utility.breakpoints", "need at least two points");
                if (bp.front().first != 0.0)
                    throw ConfigError("utility.breakpoints", "first point must have x = 0");
                if (bp.back().first < 1.0)
                    throw ConfigError("utility.breakpoints", "last point must have x >= 1");
                double prev = std::numeric_limits<double>::infinity();
                for (std::size_t i = 1; i < bp.size(); ++i) {
                    if (!(bp[i].first > bp[i - 1].first))
                        throw ConfigError("utility.breakpoints", "x must be strictly increasing");
                    const double s = segment_slope(bp[i - 1], bp[i]);
                    if (s < -kSlopeTol)
                        throw ConfigError("utility.breakpoints", "slopes must be non-negative");
                    if (s > prev + kSlopeTol)
                        throw ConfigError("utility.breakpoints", "slopes must be non-increasing");
                    prev = s;
                }
                return std::max(0.0, segment_slope(bp[0], bp[1]));
            },
        },
        shape);
    return UtilitySpec(std::move(shape), nu);
}

double UtilitySpec::value(double y) const {
    return std::visit(Overloaded{
                          [y](const LinearUtility& u) { return u.slope * y; },
                          [y](const LogUtility& u) { return u.scale * std::log1p(y); },
                          [y](const PiecewiseLinearUtility& u) {
                              const auto& bp = u.breakpoints;
                              std::size_t i = 1;
                              while (i + 1 < bp.size() && y > bp[i].first) ++i;
                              return bp[i - 1].second +
                                     segment_slope(bp[i - 1], bp[i]) * (y - bp[i - 1].first);
                          },
                      },
                      shape_);
}

double UtilitySpec::right_derivative(double y) const {
    return std::visit(Overloaded{
                          [](const LinearUtility& u) { return u.slope; },
                          [y](const LogUtility& u) { return u.scale / (1.0 + y); },
                          [y](const PiecewiseLinearUtility& u) {
                              const auto& bp = u.breakpoints;
                              std::size_t i = 1;
                              while (i + 1 < bp.size() && y >= bp[i].first) ++i;
                              return segment_slope(bp[i - 1], bp[i]);
                          },
                      },
                      shape_);
}

double g_hat_eval(const UtilitySpec& utility, double y) {
    if (!(y >= -1.0)) {
        std::ostringstream os;
        os << "g_hat_eval: y = " << y << " is below -1";
        throw DomainError(os.str());
    }
    const double clipped = std::clamp(y, 0.0, 1.0);
    return utility.value(clipped) + utility.nu() * std::min(y, 0.0);
}

// ---------------------------------------------------------------------------
// Stations

void validate_station(const StationConfig& cfg, const std::string& path) {
    if (!(cfg.cpu_rate > 0.0)) throw ConfigError(path + ".cpu_rate", "must be positive");
    if (!(cfg.e_static >= 0.0)) throw ConfigError(path + ".e_static_j", "must be non-negative");
    if (!(cfg.e_static < cfg.e_active))
        throw ConfigError(path + ".e_active_j", "must exceed e_static_j");
    if (!(cfg.e_static <= cfg.e_budget))
        throw ConfigError(path + ".e_budget_j",
                          "must be at least e_static_j (the station could never be feasible)");
}

double service_cap(const StationConfig& cfg) {
    return (cfg.e_budget - cfg.e_static) / (cfg.e_active - cfg.e_static);
}

double energy_of_slot(const StationConfig& cfg, int mu) {
    if (mu != 0 && mu != 1) throw ContractError("energy_of_slot: mu must be 0 or 1");
    return mu == 1 ? cfg.e_active : cfg.e_static;
}

// ---------------------------------------------------------------------------
// Topology

Topology Topology::uniform(std::size_t n, int delay_slots) {
    Topology t;
    t.n_stations = n;
    t.delta = SquareMatrix<int>(n, delay_slots);
    t.peer_mask = SquareMatrix<std::uint8_t>(n, 1);
    for (std::size_t i = 0; i < n; ++i) t.delta(i, i) = 0;
    t.refresh_delta_max();
    return t;
}

Topology Topology::isolated(std::size_t n) {
    Topology t;
    t.n_stations = n;
    t.delta = SquareMatrix<int>(n, 0);
    t.peer_mask = SquareMatrix<std::uint8_t>(n, 0);
    for (std::size_t i = 0; i < n; ++i) t.peer_mask(i, i) = 1;
    t.delta_max = 0;
    return t;
}

void Topology::refresh_delta_max() {
    delta_max = 0;
    for (std::size_t i = 0; i < n_stations; ++i)
        for (std::size_t j = 0; j < n_stations; ++j)
            if (i != j && peer_mask(i, j)) delta_max = std::max(delta_max, delta(i, j));
}

void validate_topology(const Topology& topo) {
    const std::size_t n = topo.n_stations;
    if (topo.delta.size() != n || topo.peer_mask.size() != n)
        throw ConfigError("topology", "matrix dimensions do not match the station count");
    int dmax = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!topo.peer_mask(i, i)) throw ConfigError("topology.peer_mask", "diagonal must be true");
        if (topo.delta(i, i) != 0) throw ConfigError("topology.delta", "diagonal must be zero");
        for (std::size_t j = 0; j < n; ++j) {
            if (topo.delta(i, j) < 0) throw ConfigError("topology.delta", "negative trip time");
            if (i == j || !topo.peer_mask(i, j)) continue;
            if (topo.peer_mask(j, i) && topo.delta(i, j) != topo.delta(j, i))
                throw ConfigError("topology.delta", "must be symmetric on permitted pairs");
            dmax = std::max(dmax, topo.delta(i, j));
        }
    }
    if (dmax != topo.delta_max) throw ConfigError("topology.delta_max", "inconsistent with delta");
}

std::optional<int> delta_from_distance(double dist_m, double slot_ms) {
    if (!(dist_m >= 0.0)) throw DomainError("delta_from_distance: negative distance");
    if (!(slot_ms > 0.0)) throw DomainError("delta_from_distance: slot length must be positive");
    double ms = 0.0;
    if (dist_m <= 300.0)
        ms = 3.0;
    else if (dist_m <= 600.0)
        ms = 4.0;
    else if (dist_m <= 900.0)
        ms = 5.0;
    else
        return std::nullopt;
    return static_cast<int>(std::ceil(ms / slot_ms - 1e-9));
}

Topology topology_from_positions(std::span<const GeoPoint> positions, double slot_ms) {
    const std::size_t n = positions.size();
    Topology t = Topology::isolated(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            auto d = delta_from_distance(great_circle_distance_m(positions[i], positions[j]),
                                         slot_ms);
            if (d) {
                t.peer_mask(i, j) = 1;
                t.delta(i, j) = *d;
            }
        }
    t.refresh_delta_max();
    return t;
}

// ---------------------------------------------------------------------------
// Queues

void update_physical_queue(QueueState& q, int eta, int d, int arrivals, Slot slot) {
    if (eta < 0 || eta > 1 || d < 0 || d > 1 || eta + d > 1)
        throw ContractError("update_physical_queue: eta + d must be at most 1");
    if (arrivals < 0) throw ContractError("update_physical_queue: negative arrivals");
    if (eta == 1 && q.q_len == 0)
        throw ContractError("update_physical_queue: serving an empty queue");
    if (eta + d == 1 && q.q_len > 0) {
        q.arrival_slots.pop_front();
        --q.q_len;
    }
    for (int i = 0; i < arrivals; ++i) q.arrival_slots.push_back(slot);
    q.q_len += arrivals;
    q.h = q.q_len > 0 ? static_cast<int>(slot + 1 - q.arrival_slots.front()) : 0;
}

void update_virtual_queues(QueueState& q, const VirtualUpdate& u) {
    q.z = std::max(q.z - u.lambda_or_obs + u.d + u.gamma, 0.0);
    q.w = std::max(q.w - u.e_budget + u.energy, 0.0);
}

int hol_age_rule(int h, bool occupied, int leaving, int t_inter, int arrival) {
    if (occupied) return std::max(h + 1 - leaving * t_inter, 0);
    return arrival;
}

// ---------------------------------------------------------------------------
// Decisions

int SlotDecision::eta(std::size_t n) const {
    int s = 0;
    for (auto v : b.row(n)) s += v;
    return s;
}

int SlotDecision::served_by(std::size_t m) const {
    int s = 0;
    for (std::size_t n = 0; n < b.size(); ++n) s += b(n, m);
    return s;
}

void check_decision(const SlotDecision& dec, std::span<const QueueState> states,
                    const Topology& topo) {
    const std::size_t n = dec.size();
    for (std::size_t i = 0; i < n; ++i) {
        const int eta = dec.eta(i);
        if (eta > 1) throw ContractError("decision serves more than one task of a queue");
        if (eta + dec.d[i] > 1) throw ContractError("decision serves and drops the same queue");
        if (dec.served_by(i) > 1) throw ContractError("decision gives a station two tasks");
        for (std::size_t m = 0; m < n; ++m) {
            if (!dec.b(i, m)) continue;
            if (!topo.peer_mask(i, m)) throw ContractError("decision uses a non-peer pair");
            if (states[i].q_len == 0) throw ContractError("decision serves an empty queue");
        }
        if (dec.d[i] && states[i].q_len == 0) throw ContractError("decision drops from an empty queue");
    }
}

}  // namespace peeroff
