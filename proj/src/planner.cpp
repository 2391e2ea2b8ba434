#include "peeroff/planner.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>

#include "peeroff/errors.hpp"

namespace peeroff {

namespace {

constexpr double kProbTol = 1e-9;
constexpr double kMatchTol = 1e-12;
constexpr int kRandomOrders = 48;

bool all_linear(std::span<const StationConfig> stations) {
    return std::all_of(stations.begin(), stations.end(), [](const StationConfig& s) {
        return std::holds_alternative<LinearUtility>(s.utility.shape());
    });
}

// Amount of [0, lambda] on which the marginal utility is > theta (strict) or >= theta.
double demand(const UtilitySpec& u, double lambda, double theta, bool strict) {
    auto above = [&](double slope) { return strict ? slope > theta : slope >= theta; };
    if (const auto* lin = std::get_if<LinearUtility>(&u.shape()))
        return above(lin->slope) ? lambda : 0.0;
    if (const auto* lg = std::get_if<LogUtility>(&u.shape())) {
        if (lg->scale <= 0.0) return (strict || theta > 0.0) ? 0.0 : lambda;
        if (theta <= 0.0) return lambda;
        return std::clamp(lg->scale / theta - 1.0, 0.0, lambda);
    }
    const auto& bp = std::get<PiecewiseLinearUtility>(u.shape()).breakpoints;
    double amount = 0.0;
    for (std::size_t i = 1; i < bp.size(); ++i) {
        const double slope = (bp[i].second - bp[i - 1].second) / (bp[i].first - bp[i - 1].first);
        if (!above(slope)) break;
        amount = bp[i].first;
    }
    // past the last breakpoint the last slope continues
    if (!bp.empty() && bp.size() >= 2) {
        const auto& a = bp[bp.size() - 2];
        const auto& b = bp.back();
        if (above((b.second - a.second) / (b.first - a.first))) amount = lambda;
    }
    return std::min(amount, lambda);
}

std::vector<double> fill_linear(std::span<const StationConfig> stations,
                                std::span<const double> lambda, double budget) {
    const std::size_t n = stations.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return std::get<LinearUtility>(stations[a].utility.shape()).slope >
               std::get<LinearUtility>(stations[b].utility.shape()).slope;
    });
    std::vector<double> y(n, 0.0);
    double rest = budget;
    for (std::size_t k : idx) {
        y[k] = std::min(lambda[k], rest);
        rest -= y[k];
    }
    return y;
}

std::vector<double> fill_concave(std::span<const StationConfig> stations,
                                 std::span<const double> lambda, double budget) {
    const std::size_t n = stations.size();
    double hi = 0.0;
    for (const auto& s : stations) hi = std::max(hi, s.utility.nu());
    hi = hi * 2.0 + 1.0;
    double lo = 0.0;
    auto total = [&](double theta, bool strict) {
        double s = 0.0;
        for (std::size_t k = 0; k < n; ++k) s += demand(stations[k].utility, lambda[k], theta, strict);
        return s;
    };
    for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (total(mid, true) > budget)
            lo = mid;
        else
            hi = mid;
    }
    std::vector<double> y(n), upper(n);
    double used = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        y[k] = demand(stations[k].utility, lambda[k], hi, true);
        upper[k] = demand(stations[k].utility, lambda[k], lo, false);
        used += y[k];
    }
    double rest = budget - used;
    // marginal stations first, lowest index first
    for (std::size_t k = 0; k < n && rest > 0.0; ++k) {
        const double add = std::min(std::max(upper[k] - y[k], 0.0), rest);
        y[k] += add;
        rest -= add;
    }
    for (std::size_t k = 0; k < n && rest > 0.0; ++k) {
        const double add = std::min(lambda[k] - y[k], rest);
        y[k] += add;
        rest -= add;
    }
    return y;
}

std::vector<double> water_fill(std::span<const double> caps, double budget) {
    const std::size_t n = caps.size();
    std::vector<double> sorted(caps.begin(), caps.end());
    std::sort(sorted.begin(), sorted.end());
    double level = 0.0;
    double rest = budget;
    for (std::size_t k = 0; k < n; ++k) {
        const double remaining = static_cast<double>(n - k);
        if (sorted[k] * remaining >= rest) {
            level = rest / remaining;
            rest = 0.0;
            break;
        }
        rest -= sorted[k];
        level = sorted[k];
    }
    std::vector<double> mu(n);
    for (std::size_t k = 0; k < n; ++k) mu[k] = std::min(caps[k], level);
    return mu;
}

void check_probability(double p, const char* what) {
    if (!(p >= -kProbTol && p <= 1.0 + kProbTol)) {
        std::ostringstream os;
        os << what << " = " << p << " outside [0, 1]";
        throw InvariantError(os.str());
    }
}

// ---------------------------------------------------------------------------
// Plan construction

using Mask = std::uint32_t;

inline Mask bits(std::size_t from, std::size_t to) {  // bits from..to inclusive
    return static_cast<Mask>(((std::uint64_t{1} << (to + 1)) - 1) ^ ((std::uint64_t{1} << from) - 1));
}

std::optional<KnownRatePlan> plan_exact(std::span<const double> accept,
                                        std::span<const double> mu_star,
                                        const std::vector<std::size_t>& order) {
    const std::size_t n = order.size();
    const std::size_t states = std::size_t{1} << n;
    std::vector<double> dist(states, 1.0), next(states);
    for (std::size_t s = 0; s < states; ++s)
        for (std::size_t p = 0; p < n; ++p) dist[s] *= (s >> p) & 1 ? accept[order[p]] : 1.0 - accept[order[p]];

    auto prob = [&](auto pred) {
        double sum = 0.0;
        for (std::size_t s = 0; s < states; ++s)
            if (pred(static_cast<Mask>(s))) sum += dist[s];
        return sum;
    };

    KnownRatePlan plan;
    plan.order = order;
    plan.exact = true;
    plan.rules.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Mask bi = Mask{1} << i;
        const double ei = prob([&](Mask s) { return (s & bi) != 0; });
        const double mu = mu_star[order[i]];
        StepRule& rule = plan.rules[i];
        if (std::abs(ei - mu) <= kMatchTol) continue;
        std::fill(next.begin(), next.end(), 0.0);
        if (ei < mu) {
            std::optional<std::size_t> m;
            for (std::size_t c = i + 1; c < n && !m; ++c) {
                const Mask w = bits(i, c);
                if (prob([&](Mask s) { return (s & w) != 0; }) >= mu - kMatchTol) m = c;
            }
            if (!m) return std::nullopt;
            const Mask before = bits(i, *m - 1);
            const Mask bm = Mask{1} << *m;
            const double q_prev = prob([&](Mask s) { return (s & before) != 0; });
            const double den = prob([&](Mask s) { return (s & before) == 0 && (s & bm) != 0; });
            double p = den > 0.0 ? (mu - q_prev) / den : 0.0;
            check_probability(p, "boundary pull probability");
            p = std::clamp(p, 0.0, 1.0);
            rule = {StepKind::pull, *m, p};
            for (std::size_t s = 0; s < states; ++s) {
                const Mask ms = static_cast<Mask>(s);
                if (dist[s] == 0.0) continue;
                const Mask donors = ms & bits(i + 1, *m);
                if ((ms & bi) || donors == 0) {
                    next[s] += dist[s];
                    continue;
                }
                const std::size_t d = static_cast<std::size_t>(__builtin_ctz(donors));
                const Mask swapped = (ms | bi) & ~(Mask{1} << d);
                if (d < *m) {
                    next[swapped] += dist[s];
                } else {
                    next[swapped] += dist[s] * p;
                    next[s] += dist[s] * (1.0 - p);
                }
            }
        } else {
            std::optional<std::size_t> m;
            for (std::size_t c = i + 1; c < n && !m; ++c) {
                const Mask w = bits(i, c);
                if (prob([&](Mask s) { return (s & w) == w; }) <= mu + kMatchTol) m = c;
            }
            if (!m) return std::nullopt;
            const Mask rest = bits(i + 1, *m);
            const double den = prob([&](Mask s) { return (s & bi) != 0 && (s & rest) != rest; });
            double p = den > 0.0 ? (ei - mu) / den : 0.0;
            check_probability(p, "push probability");
            p = std::clamp(p, 0.0, 1.0);
            rule = {StepKind::push, *m, p};
            for (std::size_t s = 0; s < states; ++s) {
                const Mask ms = static_cast<Mask>(s);
                if (dist[s] == 0.0) continue;
                const Mask idle = ~ms & rest;
                if (!(ms & bi) || idle == 0) {
                    next[s] += dist[s];
                    continue;
                }
                const std::size_t d = static_cast<std::size_t>(__builtin_ctz(idle));
                const Mask swapped = (ms & ~bi) | (Mask{1} << d);
                next[swapped] += dist[s] * p;
                next[s] += dist[s] * (1.0 - p);
            }
        }
        dist.swap(next);
    }
    plan.achieved.assign(n, 0.0);
    for (std::size_t p = 0; p < n; ++p) {
        const Mask bp = Mask{1} << p;
        plan.achieved[order[p]] = prob([&](Mask s) { return (s & bp) != 0; });
        if (std::abs(plan.achieved[order[p]] - mu_star[order[p]]) > 1e-9) return std::nullopt;
    }
    return plan;
}

// Product-form counterpart of one step; updates `expect` (position-indexed) in place.
std::optional<StepRule> product_rule(std::vector<double>& e, std::size_t i, double mu) {
    const std::size_t n = e.size();
    const double ei = e[i];
    if (std::abs(ei - mu) <= kMatchTol) return StepRule{};
    if (ei < mu) {
        double none = 1.0 - e[i];
        std::optional<std::size_t> m;
        double none_before = none;
        for (std::size_t c = i + 1; c < n; ++c) {
            none_before = none;
            none *= 1.0 - e[c];
            if (1.0 - none >= mu - kMatchTol) {
                m = c;
                break;
            }
        }
        if (!m) return std::nullopt;
        const double den = none_before * e[*m];
        double p = den > 0.0 ? (mu - (1.0 - none_before)) / den : 0.0;
        check_probability(p, "boundary pull probability");
        p = std::clamp(p, 0.0, 1.0);
        double pr = 1.0 - e[i];
        std::vector<double> upd = e;
        for (std::size_t j = i + 1; j <= *m; ++j) {
            upd[j] -= pr * e[j] * (j < *m ? 1.0 : p);
            pr *= 1.0 - e[j];
        }
        upd[i] = mu;
        e.swap(upd);
        return StepRule{StepKind::pull, *m, p};
    }
    double all = e[i];
    std::optional<std::size_t> m;
    for (std::size_t c = i + 1; c < n; ++c) {
        all *= e[c];
        if (all <= mu + kMatchTol) {
            m = c;
            break;
        }
    }
    if (!m) return std::nullopt;
    double tail = 1.0;
    for (std::size_t j = i + 1; j <= *m; ++j) tail *= e[j];
    const double den = e[i] * (1.0 - tail);
    double p = den > 0.0 ? (ei - mu) / den : 0.0;
    check_probability(p, "push probability");
    p = std::clamp(p, 0.0, 1.0);
    std::vector<double> upd = e;
    double pr = e[i];
    for (std::size_t j = i + 1; j <= *m; ++j) {
        upd[j] += pr * (1.0 - e[j]) * p;
        pr *= e[j];
    }
    upd[i] = mu;
    e.swap(upd);
    return StepRule{StepKind::push, *m, p};
}

std::optional<KnownRatePlan> plan_product(std::span<const double> accept,
                                          std::span<const double> mu_star,
                                          const std::vector<std::size_t>& order) {
    const std::size_t n = order.size();
    std::vector<double> e(n);
    for (std::size_t p = 0; p < n; ++p) e[p] = accept[order[p]];
    KnownRatePlan plan;
    plan.order = order;
    plan.rules.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto rule = product_rule(e, i, mu_star[order[i]]);
        if (!rule) return std::nullopt;
        plan.rules[i] = *rule;
    }
    plan.achieved.assign(n, 0.0);
    for (std::size_t p = 0; p < n; ++p) plan.achieved[order[p]] = e[p];
    return plan;
}

}  // namespace

std::vector<double> service_caps(std::span<const StationConfig> stations) {
    std::vector<double> caps;
    caps.reserve(stations.size());
    for (const auto& s : stations) caps.push_back(std::clamp(service_cap(s), 0.0, 1.0));
    return caps;
}

PkSolution solve_pk(std::span<const StationConfig> stations, std::span<const double> lambda) {
    if (stations.size() != lambda.size())
        throw DomainError("solve_pk: lambda has " + std::to_string(lambda.size()) +
                          " entries for " + std::to_string(stations.size()) + " stations");
    for (std::size_t k = 0; k < stations.size(); ++k) {
        validate_station(stations[k], "stations[" + std::to_string(k) + "]");
        if (!(lambda[k] >= 0.0 && lambda[k] <= 1.0))
            throw DomainError("solve_pk: lambda[" + std::to_string(k) + "] outside [0, 1]");
    }
    const auto caps = service_caps(stations);
    const double budget = std::min(std::accumulate(lambda.begin(), lambda.end(), 0.0),
                                   std::accumulate(caps.begin(), caps.end(), 0.0));
    PkSolution sol;
    sol.y_star = all_linear(stations) ? fill_linear(stations, lambda, budget)
                                      : fill_concave(stations, lambda, budget);
    sol.mu_star = water_fill(caps, std::accumulate(sol.y_star.begin(), sol.y_star.end(), 0.0));
    for (std::size_t k = 0; k < stations.size(); ++k)
        sol.z_star += stations[k].utility.value(sol.y_star[k]);
    return sol;
}

int drop_rule(int a, double lambda, double y_star, Rng& rng) {
    if (y_star > lambda + kMatchTol)
        throw ContractError("drop_rule: accepted rate exceeds the arrival rate");
    if (a == 0) return 0;
    if (!(lambda > 0.0)) throw ContractError("drop_rule: task arrived at a zero-rate station");
    const double p = 1.0 - y_star / lambda;
    if (p <= 0.0) return 0;
    return bernoulli(rng, p) ? 1 : 0;
}

StepState known_rate_step(StepState state, std::span<const double> mu_star, Rng& rng) {
    const std::size_t n = state.a.size();
    if (state.i >= n) throw ContractError("known_rate_step: all steps already applied");
    if (state.expect.size() != n || mu_star.size() != n)
        throw ContractError("known_rate_step: size mismatch");
    const std::size_t i = state.i;
    auto rule = product_rule(state.expect, i, mu_star[i]);
    if (!rule) throw InfeasibleError("known_rate_step: no window realizes the planned service level");
    if (rule->kind == StepKind::pull && !state.a[i]) {
        for (std::size_t p = i + 1; p <= rule->window_end; ++p) {
            if (!state.a[p]) continue;
            if (p < rule->window_end || bernoulli(rng, rule->boundary_prob)) std::swap(state.a[i], state.a[p]);
            break;
        }
    } else if (rule->kind == StepKind::push && state.a[i]) {
        for (std::size_t p = i + 1; p <= rule->window_end; ++p) {
            if (state.a[p]) continue;
            if (bernoulli(rng, rule->boundary_prob)) std::swap(state.a[i], state.a[p]);
            break;
        }
    }
    ++state.i;
    return state;
}

bool service_levels_achievable(std::span<const double> accept_prob, std::span<const double> mu) {
    const std::size_t n = accept_prob.size();
    // Poisson-binomial distribution of the task count
    std::vector<double> pmf(n + 1, 0.0);
    pmf[0] = 1.0;
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t c = k + 2; c-- > 0;) {
            pmf[c] *= 1.0 - accept_prob[k];
            if (c > 0) pmf[c] += pmf[c - 1] * accept_prob[k];
        }
    std::vector<double> sorted(mu.begin(), mu.end());
    std::sort(sorted.rbegin(), sorted.rend());
    double prefix = 0.0;
    for (std::size_t k = 1; k <= n; ++k) {
        prefix += sorted[k - 1];
        double bound = 0.0;
        for (std::size_t c = 0; c <= n; ++c) bound += pmf[c] * static_cast<double>(std::min(c, k));
        if (prefix > bound + 1e-12) return false;
    }
    return true;
}

KnownRatePlan build_known_rate_plan(std::span<const double> accept_prob,
                                    std::span<const double> mu_star) {
    const std::size_t n = accept_prob.size();
    if (mu_star.size() != n) throw ContractError("build_known_rate_plan: size mismatch");
    const bool exact = n <= kExactPlanMaxStations;
    if (exact && !service_levels_achievable(accept_prob, mu_star))
        throw InfeasibleError("planned service levels exceed what one-slot assignment can realize");

    std::vector<std::vector<std::size_t>> orders;
    std::vector<std::size_t> base(n);
    std::iota(base.begin(), base.end(), 0);
    orders.push_back(base);
    auto sorted_by = [&](auto key) {
        auto o = base;
        std::stable_sort(o.begin(), o.end(), [&](std::size_t a, std::size_t b) { return key(a) > key(b); });
        orders.push_back(std::move(o));
    };
    sorted_by([&](std::size_t k) { return mu_star[k]; });
    sorted_by([&](std::size_t k) { return -mu_star[k]; });
    sorted_by([&](std::size_t k) { return accept_prob[k]; });
    sorted_by([&](std::size_t k) { return mu_star[k] - accept_prob[k]; });
    sorted_by([&](std::size_t k) { return accept_prob[k] - mu_star[k]; });
    Rng shuffle_rng = make_stream(0x5eedULL, n);
    for (int r = 0; r < kRandomOrders; ++r) {
        auto o = base;
        std::shuffle(o.begin(), o.end(), shuffle_rng);
        orders.push_back(std::move(o));
    }
    for (const auto& order : orders) {
        auto plan = exact ? plan_exact(accept_prob, mu_star, order)
                          : plan_product(accept_prob, mu_star, order);
        if (plan) return *plan;
    }
    throw InfeasibleError("no station ordering realizes the planned service levels");
}

void apply_plan(const KnownRatePlan& plan, std::vector<std::uint8_t>& a, std::vector<int>& origin,
                Rng& rng, const StepObserver& observer) {
    const std::size_t n = plan.order.size();
    auto at = [&](std::size_t pos) { return plan.order[pos]; };
    auto swap_pos = [&](std::size_t x, std::size_t y) {
        std::swap(a[at(x)], a[at(y)]);
        std::swap(origin[at(x)], origin[at(y)]);
    };
    for (std::size_t i = 0; i < n; ++i) {
        const StepRule& rule = plan.rules[i];
        if (rule.kind == StepKind::pull && !a[at(i)]) {
            for (std::size_t p = i + 1; p <= rule.window_end; ++p) {
                if (!a[at(p)]) continue;
                if (p < rule.window_end || bernoulli(rng, rule.boundary_prob)) swap_pos(i, p);
                break;
            }
        } else if (rule.kind == StepKind::push && a[at(i)]) {
            for (std::size_t p = i + 1; p <= rule.window_end; ++p) {
                if (a[at(p)]) continue;
                if (bernoulli(rng, rule.boundary_prob)) swap_pos(i, p);
                break;
            }
        }
        if (observer) observer(i, a);
    }
}

KnownRateAssignment run_known_rate_slot(std::span<const std::uint8_t> a_t,
                                        std::span<const double> lambda, const PkSolution& sol,
                                        const KnownRatePlan& plan, Rng& rng,
                                        const StepObserver& observer) {
    const std::size_t n = a_t.size();
    if (lambda.size() != n || sol.y_star.size() != n || plan.order.size() != n)
        throw ContractError("run_known_rate_slot: size mismatch");
    KnownRateAssignment out;
    out.a.assign(n, 0);
    out.origin.assign(n, -1);
    out.dropped.assign(n, 0);
    int before = 0;
    for (std::size_t k = 0; k < n; ++k) {
        if (a_t[k] > 1) throw ContractError("run_known_rate_slot: arrivals must be binary");
        if (a_t[k] && lambda[k] > 0.0) out.dropped[k] = static_cast<std::uint8_t>(drop_rule(1, lambda[k], sol.y_star[k], rng));
        out.a[k] = static_cast<std::uint8_t>(a_t[k] && !out.dropped[k]);
        if (out.a[k]) out.origin[k] = static_cast<int>(k);
        before += out.a[k];
    }
    apply_plan(plan, out.a, out.origin, rng, observer);
    int after = 0;
    for (auto v : out.a) after += v;
    if (after != before) throw InvariantError("run_known_rate_slot: task count changed by the swap steps");
    return out;
}

std::vector<std::uint8_t> run_known_rate_slot(std::span<const std::uint8_t> a_t,
                                              std::span<const double> lambda,
                                              const PkSolution& sol, Rng& rng) {
    const auto plan = build_known_rate_plan(sol.y_star, sol.mu_star);
    return run_known_rate_slot(a_t, lambda, sol, plan, rng).a;
}

}  // namespace peeroff
