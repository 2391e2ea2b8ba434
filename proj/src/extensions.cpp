#include "peeroff/extensions.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "peeroff/errors.hpp"

namespace peeroff {

long long RefuseLedger::owed_total() const {
    long long s = 0;
    for (std::size_t a = 0; a < owed.size(); ++a)
        for (std::size_t b = 0; b < owed.size(); ++b) s += owed(a, b);
    return s;
}

RefuseOutcome early_refuse_apply(const SlotDecision& dec, std::span<const HeadInfo> heads,
                                 const Topology& topo, RefuseLedger& ledger) {
    const std::size_t n = dec.size();
    if (heads.size() != n || ledger.block_credits.size() != n)
        throw ContractError("early_refuse_apply: size mismatch");
    RefuseOutcome out;
    out.executed = dec.b;
    out.plain_drop.assign(n, 0);
    out.substitute.assign(n, -1);
    out.phantom_done.assign(n, 0);

    auto at_cap = [&](std::size_t r) {
        return ledger.credit_cap > 0 && ledger.credits(r) >= static_cast<std::size_t>(ledger.credit_cap);
    };

    // a phantom head needs no work; its server now owes the substitute one service
    for (std::size_t r = 0; r < n; ++r) {
        if (!heads[r].phantom) continue;
        for (std::size_t c = 0; c < n; ++c) {
            if (!dec.b(r, c)) continue;
            out.executed(r, c) = 0;
            out.phantom_done[r] = 1;
            const int tag = heads[r].tag;
            if (tag >= 0 && static_cast<std::size_t>(tag) != c) ++ledger.owed(c, static_cast<std::size_t>(tag));
        }
    }
    std::vector<char> busy(n, 0);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c)
            if (out.executed(r, c)) busy[c] = 1;

    for (std::size_t r = 0; r < n; ++r) {
        if (!dec.d[r] || !heads[r].present) continue;
        if (heads[r].phantom) {
            // the blocked arrival behind this phantom still needs a partner: issue the credit again
            out.phantom_done[r] = 1;
            if (at_cap(r))
                ++ledger.credit_overflow;
            else
                ledger.block_credits[r].push_back(heads[r].tag);
            continue;
        }
        if (at_cap(r)) {
            ++ledger.credit_overflow;
            out.plain_drop[r] = 1;
            continue;
        }
        // another idle peer first; the dropping BS itself only as the last resort
        std::size_t m = n;
        for (std::size_t c = 0; c < n; ++c)
            if (c != r && topo.peer_mask(r, c) && !busy[c]) {
                m = c;
                break;
            }
        if (m == n && topo.peer_mask(r, r) && !busy[r]) m = r;
        if (m == n) {
            out.plain_drop[r] = 1;
            continue;
        }
        out.executed(r, m) = 1;
        busy[m] = 1;
        out.substitute[r] = static_cast<int>(m);
        ledger.block_credits[r].push_back(static_cast<int>(m));
    }

    // lazy compensation: debtor a takes over a service currently assigned to creditor b
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = 0; b < n && !busy[a]; ++b) {
            if (ledger.owed(a, b) == 0 || !busy[b]) continue;
            for (std::size_t o = 0; o < n; ++o) {
                if (!out.executed(o, b) || !topo.peer_mask(o, a)) continue;
                out.executed(o, b) = 0;
                out.executed(o, a) = 1;
                busy[a] = 1;
                busy[b] = 0;
                --ledger.owed(a, b);
                break;
            }
        }
    }
    return out;
}

std::optional<int> early_refuse_admit(RefuseLedger& ledger, std::size_t n) {
    auto& credits = ledger.block_credits.at(n);
    if (credits.empty()) return std::nullopt;
    const int tag = credits.front();
    credits.pop_front();
    return tag;
}

// ---------------------------------------------------------------------------

int ClassPlan::class_of(double cycles) const {
    if (k <= 1) return 0;
    const auto first = edges.begin() + 1;
    const auto last = edges.end() - 1;
    return static_cast<int>(std::upper_bound(first, last, cycles) - first);
}

void refresh_class_budgets(ClassPlan& plan, std::span<const double> class_workload,
                           std::span<const double> e_budgets, std::span<const double> e_static) {
    const std::size_t k = static_cast<std::size_t>(plan.k);
    double total = 0.0;
    if (class_workload.size() == k) total = std::accumulate(class_workload.begin(), class_workload.end(), 0.0);
    plan.shares.assign(k, 1.0 / static_cast<double>(k));
    if (total > 0.0)
        for (std::size_t c = 0; c < k; ++c) plan.shares[c] = class_workload[c] / total;
    plan.budgets.assign(e_budgets.size(), std::vector<double>(k, 0.0));
    for (std::size_t n = 0; n < e_budgets.size(); ++n) {
        double sum = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
            plan.budgets[n][c] = e_static[n] / static_cast<double>(k) + plan.shares[c] * (e_budgets[n] - e_static[n]);
            sum += plan.budgets[n][c];
        }
        if (sum > e_budgets[n] * (1.0 + 1e-12) + 1e-15) {
            std::ostringstream os;
            os << "class budgets of station " << n << " sum to " << sum << " > " << e_budgets[n];
            throw InvariantError(os.str());
        }
    }
}

ClassPlan class_partition_and_budget(std::span<const double> samples, int k, double lo, double hi,
                                     std::span<const double> e_budgets,
                                     std::span<const double> e_static,
                                     std::span<const double> class_workload, int reassign_period,
                                     std::string* warning) {
    if (k < 1) throw ConfigError("k_classes", "must be at least 1");
    if (samples.empty()) throw DomainError("class_partition_and_budget: no workload samples");
    if (e_budgets.size() != e_static.size()) throw ContractError("class_partition_and_budget: size mismatch");
    if (reassign_period < 1) throw ConfigError("reassign_period", "must be at least 1");
    std::vector<double> s(samples.begin(), samples.end());
    std::sort(s.begin(), s.end());
    std::vector<double> uniq = s;
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    int kk = k;
    if (static_cast<std::size_t>(kk) > uniq.size()) {
        kk = static_cast<int>(uniq.size());
        if (warning)
            *warning = "k_classes reduced from " + std::to_string(k) + " to " + std::to_string(kk) +
                       " (only " + std::to_string(uniq.size()) + " distinct workloads)";
    }
    std::vector<double> inner;
    const std::size_t m = s.size();
    for (int j = 1; j < kk; ++j) {
        const std::size_t idx = static_cast<std::size_t>(j) * m / static_cast<std::size_t>(kk);
        const double edge = 0.5 * (s[idx - 1] + s[idx]);
        if (inner.empty() || edge > inner.back()) inner.push_back(edge);
    }
    if (static_cast<int>(inner.size()) + 1 < kk && warning)
        *warning = "k_classes reduced to " + std::to_string(inner.size() + 1) + " (repeated quantiles)";

    ClassPlan plan;
    plan.k = static_cast<int>(inner.size()) + 1;
    plan.reassign_period = reassign_period;
    plan.edges.push_back(std::min(lo, s.front()));
    plan.edges.insert(plan.edges.end(), inner.begin(), inner.end());
    plan.edges.push_back(std::max(hi, s.back()));

    const std::size_t kc = static_cast<std::size_t>(plan.k);
    std::vector<double> sum(kc, 0.0);
    std::vector<double> cnt(kc, 0.0);
    for (double x : s) {
        const auto c = static_cast<std::size_t>(plan.class_of(x));
        sum[c] += x;
        cnt[c] += 1.0;
    }
    plan.mean_cycles.resize(kc);
    for (std::size_t c = 0; c < kc; ++c)
        plan.mean_cycles[c] = cnt[c] > 0 ? sum[c] / cnt[c] : 0.5 * (plan.edges[c] + plan.edges[c + 1]);

    const bool have_history = class_workload.size() == kc &&
                              std::accumulate(class_workload.begin(), class_workload.end(), 0.0) > 0.0;
    refresh_class_budgets(plan, have_history ? class_workload : std::span<const double>(sum), e_budgets, e_static);
    return plan;
}

MultiplexOutcome multiplex_classes(std::span<const MultiplexJob> carry,
                                   std::span<const MultiplexJob> requests, double cpu_rate) {
    MultiplexOutcome out;
    std::vector<MultiplexJob> order(carry.begin(), carry.end());
    std::vector<MultiplexJob> fresh(requests.begin(), requests.end());
    std::stable_sort(fresh.begin(), fresh.end(),
                     [](const MultiplexJob& a, const MultiplexJob& b) { return a.cls < b.cls; });
    order.insert(order.end(), fresh.begin(), fresh.end());
    double budget = cpu_rate;
    for (auto job : order) {
        if (budget <= 0.0) {
            out.carried.push_back(job);
            continue;
        }
        if (job.cycles <= budget * (1.0 + 1e-12)) {
            const double used = std::min(job.cycles, budget);
            budget -= used;
            out.cycles_used += used;
            job.cycles = 0.0;
            out.completed.push_back(job);
        } else {
            job.cycles -= budget;
            out.cycles_used += budget;
            budget = 0.0;
            out.carried.push_back(job);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------

void HolHistogram::add(int h) {
    if (h < 0) throw ContractError("HolHistogram: negative age");
    if (static_cast<std::size_t>(h) >= counts_.size()) counts_.resize(static_cast<std::size_t>(h) + 1, 0);
    ++counts_[static_cast<std::size_t>(h)];
    ++total_;
}

void HolHistogram::merge(const HolHistogram& other) {
    if (other.counts_.size() > counts_.size()) counts_.resize(other.counts_.size(), 0);
    for (std::size_t i = 0; i < other.counts_.size(); ++i) counts_[i] += other.counts_[i];
    total_ += other.total_;
}

long long HolHistogram::at_least(int h) const {
    long long s = 0;
    for (std::size_t i = static_cast<std::size_t>(std::max(h, 0)); i < counts_.size(); ++i) s += counts_[i];
    return s;
}

ViolationStats violation_stats(const HolHistogram& hist, int h_max, std::span<const int> t_values) {
    ViolationStats st;
    st.h_max = h_max;
    st.slots = hist.total();
    st.edge_slots = hist.at_least(h_max);
    st.p_e = st.slots > 0 ? static_cast<double>(st.edge_slots) / static_cast<double>(st.slots) : 0.0;
    st.t_values.assign(t_values.begin(), t_values.end());
    std::sort(st.t_values.begin(), st.t_values.end());
    st.t_values.erase(std::unique(st.t_values.begin(), st.t_values.end()), st.t_values.end());
    st.p_v_given_e.assign(st.t_values.size(), std::nullopt);
    if (st.edge_slots == 0) return st;

    std::vector<double> xs, ys;
    double prev = 1.0;
    for (std::size_t i = 0; i < st.t_values.size(); ++i) {
        const int t = st.t_values[i];
        const double p = static_cast<double>(hist.at_least(h_max + t)) / static_cast<double>(st.edge_slots);
        if (p > prev + 1e-15) throw InvariantError("violation probability increased with T");
        prev = p;
        st.p_v_given_e[i] = p;
        if (p > 0.0) {
            xs.push_back(t);
            ys.push_back(std::log(p));
        }
    }
    st.fit_points = static_cast<int>(xs.size());
    if (xs.size() < 2) return st;
    const double k = static_cast<double>(xs.size());
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / k;
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / k;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    if (sxx <= 0.0) return st;
    st.slope = sxy / sxx;
    const double intercept = my - *st.slope * mx;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double r = ys[i] - (intercept + *st.slope * xs[i]);
        ss_res += r * r;
    }
    st.r2 = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
    return st;
}

ViolationStats violation_stats(std::span<const int> h_trace, int h_max, std::span<const int> t_values) {
    HolHistogram hist;
    for (int h : h_trace) hist.add(h);
    return violation_stats(hist, h_max, t_values);
}

}  // namespace peeroff
