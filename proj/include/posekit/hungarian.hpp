#pragma once

#include <limits>
#include <vector>

#include "posekit/error.hpp"

namespace posekit {

namespace detail {

// Potential-based shortest augmenting path assignment, O(n^2 m).
// Requires rows <= cols; returns row -> col, minimizing total cost.
inline std::vector<int>
assignment_min_cost_rect(const std::vector<std::vector<double>>& cost) {
    const int n = static_cast<int>(cost.size());
    const int m = n == 0 ? 0 : static_cast<int>(cost[0].size());
    if (n == 0) return {};
    constexpr double kInf = std::numeric_limits<double>::infinity();

    std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
    std::vector<int> p(m + 1, 0), way(m + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(m + 1, kInf);
        std::vector<char> used(m + 1, 0);
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            int j1 = -1;
            double delta = kInf;
            for (int j = 1; j <= m; ++j) {
                if (used[j]) continue;
                const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= m; ++j) {
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
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }

    std::vector<int> row_to_col(n, -1);
    for (int j = 1; j <= m; ++j)
        if (p[j] != 0) row_to_col[p[j] - 1] = j - 1;
    return row_to_col;
}

} // namespace detail

// Maximum-total-affinity one-to-one assignment on a rectangular matrix.
// Returns row -> col with -1 for rows left unmatched (only when rows > cols).
// Every min(rows, cols) pairing is made; weak pairs are the caller's problem.
inline std::vector<int>
max_affinity_assignment(const std::vector<std::vector<double>>& affinity) {
    const int n = static_cast<int>(affinity.size());
    if (n == 0) return {};
    const int m = static_cast<int>(affinity[0].size());
    for (const auto& row : affinity)
        require(static_cast<int>(row.size()) == m, "affinity matrix is ragged");
    if (m == 0) return std::vector<int>(n, -1);

    if (n <= m) {
        std::vector<std::vector<double>> cost(n, std::vector<double>(m));
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < m; ++j) cost[i][j] = -affinity[i][j];
        return detail::assignment_min_cost_rect(cost);
    }
    // transpose so rows <= cols, then invert the mapping
    std::vector<std::vector<double>> cost(m, std::vector<double>(n));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) cost[j][i] = -affinity[i][j];
    const auto col_to_row = detail::assignment_min_cost_rect(cost);
    std::vector<int> row_to_col(n, -1);
    for (int j = 0; j < m; ++j)
        if (col_to_row[j] >= 0) row_to_col[col_to_row[j]] = j;
    return row_to_col;
}

} // namespace posekit
