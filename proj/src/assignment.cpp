#include "peeroff/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "peeroff/errors.hpp"

namespace peeroff {

namespace {

constexpr double kEps = 1e-9;

// Minimum-cost perfect assignment (1-based potentials form). Returns column per row.
std::vector<int> hungarian_min(const SquareMatrix<double>& cost) {
    const std::size_t n = cost.size();
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
    std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
    std::vector<char> used(n + 1);
    for (std::size_t i = 1; i <= n; ++i) {
        p[0] = i;
        std::size_t j0 = 0;
        std::fill(minv.begin(), minv.end(), inf);
        std::fill(used.begin(), used.end(), 0);
        do {
            used[j0] = 1;
            const std::size_t i0 = p[j0];
            double delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j] - kEps) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta - kEps) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<int> col(n, -1);
    for (std::size_t j = 1; j <= n; ++j)
        if (p[j] != 0) col[p[j] - 1] = static_cast<int>(j - 1);
    return col;
}

}  // namespace

Assignment max_weight_assignment(const WeightMatrix& m) {
    const std::size_t n = m.n;
    if (m.w.size() != n || m.forbidden.size() != n)
        throw ContractError("max_weight_assignment: matrix dimensions disagree");
    Assignment out;
    if (n == 0) return out;
    bool any_allowed = false;
    double span = 0.0;
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c) {
            if (m.forbidden(r, c)) continue;
            if (!std::isfinite(m.w(r, c)))
                throw DomainError("max_weight_assignment: non-finite weight");
            any_allowed = true;
            span = std::max(span, std::abs(m.w(r, c)));
        }
    if (!any_allowed) throw InfeasibleError("max_weight_assignment: every cell is forbidden");
    // forbidden cells cost more than any reachable gain
    const double big = (span + 1.0) * static_cast<double>(2 * n + 1);
    SquareMatrix<double> cost(n);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c) cost(r, c) = m.forbidden(r, c) ? big : -m.w(r, c);
    out.col_of_row = hungarian_min(cost);
    for (std::size_t r = 0; r < n; ++r) {
        const int c = out.col_of_row[r];
        if (c < 0 || m.forbidden(r, static_cast<std::size_t>(c))) {
            out.col_of_row[r] = -1;
            continue;
        }
        out.total += m.w(r, static_cast<std::size_t>(c));
    }
    return out;
}

SquareMatrix<std::uint8_t> realize_positive(const SquareMatrix<double>& weights,
                                            const SquareMatrix<std::uint8_t>& allowed) {
    const std::size_t n = weights.size();
    SquareMatrix<std::uint8_t> b(n, 0);
    // only rows and columns with a usable positive cell take part; the rest pad with zeros
    std::vector<std::size_t> rows, cols;
    std::vector<char> col_used(n, 0);
    for (std::size_t r = 0; r < n; ++r) {
        bool any = false;
        for (std::size_t c = 0; c < n; ++c)
            if (allowed(r, c) && weights(r, c) > 0.0) {
                any = true;
                col_used[c] = 1;
            }
        if (any) rows.push_back(r);
    }
    for (std::size_t c = 0; c < n; ++c)
        if (col_used[c]) cols.push_back(c);
    if (rows.empty()) return b;
    const std::size_t k = std::max(rows.size(), cols.size());
    WeightMatrix wm(k);
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j) {
            const std::size_t r = rows[i], c = cols[j];
            wm.w(i, j) = allowed(r, c) && weights(r, c) > 0.0 ? weights(r, c) : 0.0;
        }
    const auto a = max_weight_assignment(wm);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const int j = a.col_of_row[i];
        if (j < 0 || static_cast<std::size_t>(j) >= cols.size()) continue;
        const std::size_t r = rows[i], c = cols[static_cast<std::size_t>(j)];
        if (allowed(r, c) && weights(r, c) > 0.0) b(r, c) = 1;
    }
    return b;
}

SquareMatrix<std::uint8_t> build_schedule(std::span<const QueueState> states,
                                          std::span<const StationConfig> cfgs,
                                          const SquareMatrix<std::uint8_t>& mask) {
    const std::size_t n = states.size();
    if (cfgs.size() != n || mask.size() != n) throw ContractError("build_schedule: size mismatch");
    SquareMatrix<double> weights(n, 0.0);
    SquareMatrix<std::uint8_t> allowed(n, 0);
    for (std::size_t r = 0; r < n; ++r) {
        const double gain = std::min(static_cast<double>(states[r].h), states[r].z);
        for (std::size_t c = 0; c < n; ++c) {
            weights(r, c) = gain - states[c].w * (cfgs[c].e_active - cfgs[c].e_static);
            allowed(r, c) = static_cast<std::uint8_t>(states[r].q_len > 0 && mask(r, c));
        }
    }
    return realize_positive(weights, allowed);
}

}  // namespace peeroff
