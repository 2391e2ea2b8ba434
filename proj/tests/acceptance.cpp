// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit when any fails.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <string>
#include <thread>
#include <vector>

#include "peeroff/assignment.hpp"
#include "peeroff/errors.hpp"
#include "peeroff/lyapunov.hpp"
#include "peeroff/planner.hpp"
#include "peeroff/random.hpp"
#include "peeroff/scenario.hpp"
#include "peeroff/sim.hpp"

using namespace peeroff;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

template <class T>
std::vector<T> parallel_map(std::size_t count, const std::function<T(std::size_t)>& fn) {
    std::vector<T> out(count);
    std::atomic<std::size_t> next{0};
    const unsigned workers = std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(), static_cast<unsigned>(count)));
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (unsigned w = 0; w < workers; ++w)
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i; (i = next++) < count;) out[i] = fn(i);
            } catch (...) {
                errors[w] = std::current_exception();
                next = count;
            }
        });
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
};

MeanSe mean_se(const std::vector<double>& xs) {
    MeanSe r;
    const double n = static_cast<double>(xs.size());
    r.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    double ss = 0.0;
    for (double x : xs) ss += (x - r.mean) * (x - r.mean);
    r.se = xs.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
    return r;
}

double pooled(const MeanSe& a, const MeanSe& b) { return std::sqrt(a.se * a.se + b.se * b.se); }

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

StationConfig default_station(int id) {
    StationConfig s;
    s.id = id;
    return s;
}

// Six stations, uniform trip time, six groups each shared by two neighbours.
ScenarioConfig mesh6(int process, double load, Algorithm alg, int delta, std::int64_t horizon, std::uint64_t seed) {
    ScenarioConfig c;
    c.algorithm = alg;
    c.horizon_slots = horizon;
    c.seed = seed;
    c.v = 10.0;
    c.load_factor = load;
    for (int i = 0; i < 6; ++i) c.stations.push_back(default_station(i));
    c.topology = TopologySpec{};
    c.topology->delta_slots = delta;
    std::vector<GroupSpec> groups;
    for (int i = 0; i < 6; ++i) groups.push_back(GroupSpec{std::nullopt, {i, (i + 1) % 6}});
    switch (process) {
        case 0: c.arrivals = BernoulliSpec{{0.3, 0.15, 0.25, 0.1, 0.2, 0.3}}; break;
        case 1: c.arrivals = PoissonGroupsSpec{groups, 0.25, 100.0}; break;
        default: c.arrivals = MarkovBurstSpec{groups, 0.1, 0.1, 0.5, 100.0};
    }
    return c;
}

const char* process_name(int p) { return p == 0 ? "bernoulli" : p == 1 ? "poisson" : "markov"; }

// Synthetic 36-station layout with 126 user groups.
ScenarioConfig desk(Algorithm alg, double load, std::uint64_t seed, std::int64_t horizon) {
    ScenarioConfig c;
    c.algorithm = alg;
    c.horizon_slots = horizon;
    c.seed = seed;
    c.v = 10.0;
    c.k_classes = 5;
    c.energy_per_cycle_nj = 8.2;
    c.workload = WorkloadRange{2.5e6, 7.5e6};
    c.load_factor = load;
    c.stations = {StationConfig{}};
    c.dataset = DatasetSpec{};
    c.arrivals = PoissonGroupsSpec{{}, 0.25, 100.0};
    return c;
}

// ---------------------------------------------------------------------------

Verdict criterion1() {
    ScenarioConfig c;
    c.algorithm = Algorithm::known;
    c.horizon_slots = 1000000;
    c.seed = 1;
    c.stations = {default_station(0), default_station(1)};
    for (auto& s : c.stations) s.e_budget = 0.092;  // cap (0.092 - 0.01) / 0.164 = 0.5
    c.topology = TopologySpec{};
    c.topology->delta_slots = 0;
    c.arrivals = BernoulliSpec{{0.8, 0.2}};
    const auto t0 = std::chrono::steady_clock::now();
    const auto m = run_simulation(resolve_scenario(c));
    const double secs = seconds_since(t0);
    const double mu1 = m.service_rate_per_bs[0], mu2 = m.service_rate_per_bs[1];
    const bool ok = std::abs(mu1 - 0.5) <= 0.005 && std::abs(mu2 - 0.5) <= 0.005 &&
                    std::abs(m.throughput - 1.0) <= 0.005 && m.one_slot_fraction == 1.0 && m.counts.served > 0 &&
                    secs < 30.0;
    return {ok, fmt("mu=(%.4f, %.4f) throughput=%.4f one-slot=%.6f served=%lld runtime=%.1fs", mu1, mu2,
                    m.throughput, m.one_slot_fraction, m.counts.served, secs)};
}

struct PlanCheck {
    bool feasible = false;
    std::size_t n = 0;
    long long eq15 = 0;
    long long eq16 = 0;
    double max_z = 0.0;
    int over3 = 0;
    int components = 0;
};

Verdict criterion2() {
    constexpr int kInstances = 50;
    constexpr int kSlots = 100000;
    const std::size_t sizes[] = {3, 5, 10};
    // draw candidates until 50 have a one-slot feasible plan; infeasible draws are counted
    Rng gen = make_stream(2024, 7);
    struct Instance {
        std::vector<StationConfig> st;
        std::vector<double> lambda;
        std::uint64_t seed;
    };
    std::vector<Instance> inst;
    int rejected = 0;
    while (static_cast<int>(inst.size()) < kInstances) {
        const std::size_t n = sizes[inst.size() % 3];
        Instance x;
        for (std::size_t k = 0; k < n; ++k) {
            StationConfig s = default_station(static_cast<int>(k));
            s.e_budget = s.e_static + (s.e_active - s.e_static) * (0.1 + 0.8 * uniform01(gen));
            const double u = uniform01(gen);
            if (u < 0.4)
                s.utility = UtilitySpec::linear(0.5 + uniform01(gen));
            else if (u < 0.8)
                s.utility = UtilitySpec::log(0.5 + uniform01(gen));
            else
                s.utility = UtilitySpec::piecewise({{0.0, 0.0}, {0.3, 0.6}, {1.0, 0.6 + 0.4 * uniform01(gen)}});
            x.st.push_back(s);
            x.lambda.push_back(0.05 + 0.9 * uniform01(gen));
        }
        x.seed = gen();
        try {
            const auto sol = solve_pk(x.st, x.lambda);
            build_known_rate_plan(sol.y_star, sol.mu_star);
            inst.push_back(std::move(x));
        } catch (const InfeasibleError&) {
            ++rejected;
        }
    }
    const auto res = parallel_map<PlanCheck>(inst.size(), [&](std::size_t i) {
        const auto& x = inst[i];
        PlanCheck pc;
        pc.n = x.st.size();
        const auto sol = solve_pk(x.st, x.lambda);
        const auto plan = build_known_rate_plan(sol.y_star, sol.mu_star);
        pc.feasible = true;
        Rng rng = make_stream(x.seed, 1);
        std::vector<long long> served(pc.n, 0);
        std::vector<std::uint8_t> a(pc.n);
        std::vector<int> counts;
        const StepObserver obs = [&](std::size_t, std::span<const std::uint8_t> v) {
            int count = 0;
            for (auto e : v) {
                if (e > 1) ++pc.eq15;
                count += e;
            }
            counts.push_back(count);
        };
        for (int t = 0; t < kSlots; ++t) {
            for (std::size_t k = 0; k < pc.n; ++k) a[k] = static_cast<std::uint8_t>(bernoulli(rng, x.lambda[k]));
            counts.clear();
            const auto out = run_known_rate_slot(a, x.lambda, sol, plan, rng, obs);
            int accepted = 0;
            for (std::size_t k = 0; k < pc.n; ++k) accepted += a[k] && !out.dropped[k];
            if (counts.size() != pc.n) ++pc.eq16;
            for (int cnt : counts) pc.eq16 += cnt != accepted;
            for (std::size_t k = 0; k < pc.n; ++k) served[k] += out.a[k];
        }
        for (std::size_t k = 0; k < pc.n; ++k) {
            const double mu = sol.mu_star[k];
            const double mean = static_cast<double>(served[k]) / kSlots;
            const double se = std::sqrt(std::max(mu * (1.0 - mu), 1e-12) / kSlots);
            const double z = std::abs(mean - mu) / se;
            pc.max_z = std::max(pc.max_z, z);
            pc.over3 += z > 3.0;
            ++pc.components;
        }
        return pc;
    });
    long long eq15 = 0, eq16 = 0;
    int over3 = 0, comps = 0;
    double max_z = 0.0;
    for (const auto& r : res) {
        eq15 += r.eq15;
        eq16 += r.eq16;
        over3 += r.over3;
        comps += r.components;
        max_z = std::max(max_z, r.max_z);
    }
    const bool ok = eq15 == 0 && eq16 == 0 && over3 == 0;
    return {ok, fmt("%d instances (N=3/5/10), %d infeasible draws skipped; entry>1 violations=%lld, count changes=%lld; "
                    "%d/%d components beyond 3 SE (max %.2f SE)",
                    kInstances, rejected, eq15, eq16, over3, comps, max_z)};
}

struct BoundRun {
    std::string name;
    MetricsSummary m;
    int h_bound = 0;
    BoundReport bounds;
};

std::vector<BoundRun> bound_runs() {
    struct Spec {
        int process;
        double load;
        Algorithm alg;
    };
    std::vector<Spec> specs;
    for (int p = 0; p < 3; ++p)
        for (double l : {0.8, 1.0, 1.5})
            for (auto a : {Algorithm::wog, Algorithm::wog_observed}) specs.push_back({p, l, a});
    return parallel_map<BoundRun>(specs.size(), [&](std::size_t i) {
        const auto& s = specs[i];
        const auto c = mesh6(s.process, s.load, s.alg, 5, 100000, 100 + i);
        const auto rs = resolve_scenario(c);
        BoundRun r;
        r.name = fmt("%s/%.1f/%s", process_name(s.process), s.load, to_string(s.alg));
        r.m = run_simulation(rs);
        const auto wc = make_wog_config(c.v, s.alg == Algorithm::wog ? ArrivalMode::known_lambda : ArrivalMode::observed,
                                        rs.l_max_slots, rs.stations);
        r.bounds = deadline_bounds(wc, rs.stations, rs.topology);
        return r;
    });
}

Verdict criterion3(const std::vector<BoundRun>& runs) {
    int bad = 0;
    int max_h = 0;
    double max_z = 0.0, w_ratio = 0.0;
    long long flagged = 0;
    std::string first;
    for (const auto& r : runs) {
        bool ok = r.m.bound_violations == 0;
        flagged += r.m.bound_violations;
        for (std::size_t n = 0; n < r.m.max_h_per_bs.size(); ++n) {
            max_h = std::max(max_h, r.m.max_h_per_bs[n]);
            max_z = std::max(max_z, r.m.max_z_per_bs[n]);
            w_ratio = std::max(w_ratio, r.m.max_w_per_bs[n] / r.bounds.w_max[n]);
            ok = ok && r.m.max_h_per_bs[n] <= 12 && r.m.max_z_per_bs[n] <= 12.0 + 1e-9 &&
                 r.m.max_w_per_bs[n] <= r.bounds.w_max[n] + 1e-9;
        }
        if (!ok && first.empty()) first = r.name;
        bad += !ok;
    }
    return {bad == 0, fmt("%zu runs x 1e5 slots (3 processes x loads 0.8/1.0/1.5 x known/observed): max H=%d, max Z=%.3f, "
                          "max W/bound=%.3f, in-run violations=%lld%s%s",
                          runs.size(), max_h, max_z, w_ratio, flagged, bad ? ", first failing run " : "", first.c_str())};
}

Verdict criterion4(const std::vector<BoundRun>& runs) {
    int worst = 0;
    bool ok = true;
    for (const auto& r : runs) {
        worst = std::max(worst, r.m.max_response_slots);
        ok = ok && r.m.delta_max == 5 && r.m.max_response_slots <= 22 && r.m.max_bound_response_slots <= 22;
    }
    // the bounds report for the same setting
    const auto c = mesh6(0, 1.0, Algorithm::wog, 5, 10, 1);
    const auto rs = resolve_scenario(c);
    const auto b = deadline_bounds(make_wog_config(10.0, ArrivalMode::known_lambda, 50, rs.stations), rs.stations, rs.topology);
    ok = ok && b.h_max_g == 12 && b.worst_response == 22 && b.worst_response <= 50 && std::floor(b.v_ceiling) == 38.0;
    bool rejected = false;
    try {
        auto strict = c;
        strict.enforce_deadline = true;
        with_override(strict, "v", 50);
    } catch (const ConfigError& e) {
        rejected = e.key_path() == "v";
    }
    ok = ok && rejected;
    return {ok, fmt("max served response %d slots over %zu faithful-lifted runs (delta max 5); bounds: H max %d, worst %d, "
                    "V ceiling %.1f, V=50 %s",
                    worst, runs.size(), b.h_max_g, b.worst_response, b.v_ceiling, rejected ? "rejected" : "accepted")};
}

Verdict criterion5() {
    const double vs[] = {5, 10, 20, 40};
    constexpr int kSeeds = 10;
    struct Point {
        double utility, response;
        long long late;
    };
    const auto t0 = std::chrono::steady_clock::now();
    auto run = [](double load, double v, std::uint64_t seed) {
        auto c = mesh6(0, load, Algorithm::wog, 5, 100000, seed);
        c.v = v;
        const auto m = run_simulation(resolve_scenario(c));
        return Point{m.utility, m.mean_response_ms, m.counts.late};
    };
    auto sweep = [&](double load) {
        return parallel_map<Point>(4 * kSeeds, [&](std::size_t i) { return run(load, vs[i / kSeeds], 1 + i % kSeeds); });
    };
    const auto nominal = sweep(1.0);
    const auto heavy = sweep(1.5);
    auto column = [&](const std::vector<Point>& pts, int v, auto field) {
        std::vector<double> xs;
        for (int s = 0; s < kSeeds; ++s) xs.push_back(field(pts[static_cast<std::size_t>(v * kSeeds + s)]));
        return mean_se(xs);
    };
    auto util = [](const Point& p) { return p.utility; };
    auto resp = [](const Point& p) { return p.response; };
    auto late = [](const Point& p) { return static_cast<double>(p.late); };
    bool ordered = true;
    std::string table;
    for (const auto* pts : {&nominal, &heavy}) {
        for (int v = 0; v < 4; ++v) {
            const auto u = column(*pts, v, util), r = column(*pts, v, resp);
            table += fmt(" %s V=%g: U=%.4f R=%.2fms late=%.0f;", pts == &nominal ? "1.0x" : "1.5x", vs[v], u.mean, r.mean,
                         column(*pts, v, late).mean);
            if (v == 0) continue;
            const auto pu = column(*pts, v - 1, util), pr = column(*pts, v - 1, resp);
            ordered = ordered && u.mean >= pu.mean - pooled(u, pu) && r.mean >= pr.mean;
        }
    }
    const auto h20 = column(heavy, 2, util), h40 = column(heavy, 3, util);
    const bool collapse = h40.mean < h20.mean - pooled(h20, h40) && column(heavy, 3, late).mean > 0.0;
    // one seed just past V=40, reported only
    const auto probe = run(1.5, 44, 1);
    const double secs = seconds_since(t0);
    const bool ok = ordered && collapse && secs < 300.0;
    return {ok, fmt("ordering %s, 1.5x collapse at V=40 %s (V=44 probe: U=%.4f late=%lld), %.1fs;",
                    ordered ? "holds" : "broken", collapse ? "yes" : "no", probe.utility, probe.late, secs) +
                    table};
}

Verdict criterion6() {
    Rng rng = make_stream(6, 6);
    int mismatches = 0;
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const std::size_t n = 1 + static_cast<std::size_t>(i % 7);
        WeightMatrix m(n);
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < n; ++c) m.w(r, c) = (uniform01(rng) - 0.3) * 100.0;
        const auto a = max_weight_assignment(m);
        std::vector<int> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        double best = -1e300;
        do {
            double s = 0.0;
            for (std::size_t r = 0; r < n; ++r) s += m.w(r, static_cast<std::size_t>(perm[r]));
            best = std::max(best, s);
        } while (std::next_permutation(perm.begin(), perm.end()));
        double chosen = 0.0;
        std::vector<int> used(n, 0);
        bool valid = true;
        for (std::size_t r = 0; r < n; ++r) {
            const int c = a.col_of_row[r];
            if (c < 0 || used[static_cast<std::size_t>(c)]++) valid = false;
            else chosen += m.w(r, static_cast<std::size_t>(c));
        }
        const double gap = std::abs(chosen - best);
        worst = std::max(worst, gap);
        mismatches += !valid || gap > 1e-9 * std::max(1.0, std::abs(best)) || std::abs(a.total - chosen) > 1e-9 * std::max(1.0, std::abs(best));
    }
    return {mismatches == 0, fmt("1000 matrices, N=1..7: %d mismatches, largest gap %.3g", mismatches, worst)};
}

Verdict criterion7(const std::vector<BoundRun>& runs) {
    int bad = 0;
    double worst = -1e300;
    for (const auto& r : runs) {
        for (std::size_t n = 0; n < r.m.energy_per_bs.size(); ++n) {
            const double limit = 0.05 + 2.0 * r.bounds.w_max[n] / static_cast<double>(r.m.horizon);
            worst = std::max(worst, r.m.energy_per_bs[n] - limit);
            bad += r.m.energy_per_bs[n] > limit;
        }
    }
    return {bad == 0, fmt("%zu runs: %d station averages above E + 2 w_max / horizon (largest margin %.5f J)", runs.size(), bad,
                          worst)};
}

Verdict criterion8() {
    constexpr int kSeeds = 10;
    struct Pair {
        MetricsSummary off, on;
    };
    const auto pairs = parallel_map<Pair>(kSeeds, [&](std::size_t i) {
        auto c = mesh6(0, 1.5, Algorithm::wog, 1, 100000, 800 + i);
        Pair p;
        p.off = run_simulation(resolve_scenario(c));
        c.early_refuse = true;
        p.on = run_simulation(resolve_scenario(c));
        return p;
    });
    auto rel = [](double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-12}); };
    long long post = 0, drops_off = 0;
    double d_served = 0.0, d_refused = 0.0, d_energy = 0.0;
    for (const auto& p : pairs) {
        post += p.on.counts.dropped;
        drops_off += p.off.counts.dropped;
        d_served = std::max(d_served, rel(static_cast<double>(p.off.counts.served), static_cast<double>(p.on.counts.served)));
        d_refused = std::max(d_refused, rel(static_cast<double>(p.off.counts.blocked + p.off.counts.dropped),
                                            static_cast<double>(p.on.counts.blocked + p.on.counts.dropped)));
        for (std::size_t n = 0; n < p.on.energy_per_bs.size(); ++n)
            d_energy = std::max(d_energy, rel(p.off.energy_per_bs[n], p.on.energy_per_bs[n]));
    }
    const bool ok = post == 0 && drops_off > 0 && d_served <= 1e-3 && d_refused <= 1e-3 && d_energy <= 1e-3;
    return {ok, fmt("%d paired runs: post-acceptance drops %lld with the transform (%lld without); max relative gap served %.2e, "
                    "refused %.2e, per-station energy %.2e",
                    kSeeds, post, drops_off, d_served, d_refused, d_energy)};
}

Verdict criterion9() {
    constexpr int kSeeds = 10;
    const Algorithm algs[] = {Algorithm::wog, Algorithm::nop, Algorithm::greedy};
    struct Point {
        double utility, response;
    };
    auto runs = [&](double load) {
        return parallel_map<Point>(3 * kSeeds, [&](std::size_t i) {
            const auto m = run_simulation(resolve_scenario(desk(algs[i / kSeeds], load, 1 + i % kSeeds, 1000)));
            return Point{m.utility, m.mean_response_ms};
        });
    };
    const auto nominal = runs(1.0), heavy = runs(1.5);
    auto col = [&](const std::vector<Point>& pts, int a, bool utility) {
        std::vector<double> xs;
        for (int s = 0; s < kSeeds; ++s) {
            const auto& p = pts[static_cast<std::size_t>(a * kSeeds + s)];
            xs.push_back(utility ? p.utility : p.response);
        }
        return mean_se(xs);
    };
    const auto r_wog = col(nominal, 0, false), r_nop = col(nominal, 1, false), r_gr = col(nominal, 2, false);
    const auto u_wog = col(heavy, 0, true), u_nop = col(heavy, 1, true), u_gr = col(heavy, 2, true);
    const bool resp_ok = r_nop.mean < r_wog.mean;
    const bool nop_ok = u_wog.mean - u_nop.mean > pooled(u_wog, u_nop);
    const bool greedy_ok = u_wog.mean - u_gr.mean > pooled(u_wog, u_gr);
    return {resp_ok && nop_ok && greedy_ok,
            fmt("nominal response NoP %.2f vs WoG %.2f ms (greedy %.2f) %s; 1.5x utility WoG %.2f (se %.2f), NoP %.2f (se %.2f) "
                "%s, greedy %.2f (se %.2f) %s",
                r_nop.mean, r_wog.mean, r_gr.mean, resp_ok ? "ok" : "NOT lower", u_wog.mean, u_wog.se, u_nop.mean, u_nop.se,
                nop_ok ? "ok" : "NOT exceeded", u_gr.mean, u_gr.se, greedy_ok ? "ok" : "NOT exceeded")};
}

Verdict criterion10() {
    ScenarioConfig c;
    c.algorithm = Algorithm::wog;
    c.horizon_slots = 1000000;
    c.seed = 10;
    c.giant_binding = false;  // several tasks may arrive in one slot
    c.stations = {default_station(0)};
    c.arrivals = PoissonGroupsSpec{{GroupSpec{std::nullopt, {0}}}, 0.5, 100.0};
    const auto m = run_simulation(resolve_scenario(c));
    const auto& v = m.violation;
    std::vector<int> ts;
    std::vector<double> ps;
    bool monotone = true;
    std::string table;
    for (std::size_t i = 0; i < v.t_values.size(); ++i) {
        if (v.t_values[i] < 3 || !v.p_v_given_e[i]) continue;
        ts.push_back(v.t_values[i]);
        ps.push_back(*v.p_v_given_e[i]);
        if (ps.size() > 1 && ps.back() > ps[ps.size() - 2]) monotone = false;
        table += fmt(" %d:%.3g", ts.back(), ps.back());
    }
    // least squares of ln p on T over T = 3..10
    double slope = 0.0, r2 = 0.0;
    int pts = 0;
    {
        double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
        for (std::size_t i = 0; i < ts.size(); ++i) {
            if (ps[i] <= 0.0) continue;
            const double x = ts[i], y = std::log(ps[i]);
            sx += x, sy += y, sxx += x * x, sxy += x * y, syy += y * y;
            ++pts;
        }
        if (pts >= 2) {
            const double n = pts;
            const double vx = sxx - sx * sx / n, vy = syy - sy * sy / n, cxy = sxy - sx * sy / n;
            slope = cxy / vx;
            r2 = vy > 0.0 ? cxy * cxy / (vx * vy) : 1.0;
        }
    }
    const bool ok = v.p_e > 0.0 && ts.size() == 8 && monotone && pts >= 2 && slope < 0.0 && r2 >= 0.8;
    return {ok, fmt("p_e=%.4f, %d fit points, slope %.4f, R2 %.4f, %s;", v.p_e, pts, slope, r2,
                    monotone ? "non-increasing" : "NOT monotone") + table};
}

}  // namespace

int main() {
    int failed = 0;
    auto report = [&](int id, const char* title, const std::function<Verdict()>& fn) {
        Verdict v;
        try {
            v = fn();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        failed += !v.pass;
        std::printf("%s C%d %s: %s\n", v.pass ? "PASS" : "FAIL", id, title, v.detail.c_str());
        std::fflush(stdout);
    };
    report(1, "known-rate optimality", criterion1);
    report(2, "one-slot plan properties", criterion2);
    std::vector<BoundRun> runs;
    try {
        runs = bound_runs();
    } catch (const std::exception& e) {
        std::printf("bound runs aborted: %s\n", e.what());
    }
    report(3, "worst-case queue bounds", [&] { return runs.empty() ? Verdict{false, "no runs"} : criterion3(runs); });
    report(4, "deadline composition", [&] { return runs.empty() ? Verdict{false, "no runs"} : criterion4(runs); });
    report(5, "V trade-off", criterion5);
    report(6, "assignment exactness", criterion6);
    report(7, "energy feasibility", [&] { return runs.empty() ? Verdict{false, "no runs"} : criterion7(runs); });
    report(8, "early-refuse equivalence", criterion8);
    report(9, "baseline orderings", criterion9);
    report(10, "violation decay", criterion10);
    std::printf("%d of 10 criteria passed\n", 10 - failed);
    return failed == 0 ? 0 : 1;
}
