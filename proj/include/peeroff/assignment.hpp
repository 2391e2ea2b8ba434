#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "peeroff/model.hpp"

namespace peeroff {

struct WeightMatrix {
    std::size_t n = 0;
    SquareMatrix<double> w;
    SquareMatrix<std::uint8_t> forbidden;

    WeightMatrix() = default;
    explicit WeightMatrix(std::size_t size) : n(size), w(size, 0.0), forbidden(size, 0) {}
};

struct Assignment {
    std::vector<int> col_of_row;  // -1 when the row could only take a forbidden cell
    double total = 0.0;           // over non-forbidden matched cells
};

/// Exact maximum-weight assignment in O(n^3). Forbidden cells are avoided whenever a
/// permutation without them exists; among those, total weight is maximized.
/// Throws InfeasibleError when every cell is forbidden.
Assignment max_weight_assignment(const WeightMatrix& m);

/// Serve matrix from the clamped weights min(H_n, Z_n) - W_m (e1_m - e0_m). Only matches whose
/// unclamped weight is strictly positive and whose queue is nonempty are kept.
SquareMatrix<std::uint8_t> build_schedule(std::span<const QueueState> states,
                                          std::span<const StationConfig> cfgs,
                                          const SquareMatrix<std::uint8_t>& mask);

/// Same realization rule for an arbitrary weight matrix; `allowed(n, m)` gates each cell.
SquareMatrix<std::uint8_t> realize_positive(const SquareMatrix<double>& weights,
                                            const SquareMatrix<std::uint8_t>& allowed);

}  // namespace peeroff
