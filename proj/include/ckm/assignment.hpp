#pragma once

#include <cstddef>
#include <limits>
#include <vector>

#include "ckm/error.hpp"

namespace ckm {

/// Result of a square linear assignment: `column_of_row[i]` is the column
/// matched to row i.
struct AssignmentResult {
  std::vector<std::size_t> column_of_row;
  double total = 0.0;
};

/// Minimum-cost perfect matching on a dense n x n cost matrix (row-major),
/// solved with the shortest-augmenting-path form of the Hungarian method.
/// O(n^3). Ties resolve toward lower column indices.
inline AssignmentResult solve_assignment(const std::vector<double>& cost, std::size_t n) {
  if (cost.size() != n * n) {
    throw InvalidArgument("assignment matrix must be n x n");
  }
  AssignmentResult result;
  if (n == 0) {
    return result;
  }
  constexpr double kInf = std::numeric_limits<double>::infinity();
  // 1-based potentials; column 0 is the virtual root.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> row_of_col(n + 1, 0), way(n + 1, 0);
  for (std::size_t row = 1; row <= n; ++row) {
    row_of_col[0] = row;
    std::size_t col0 = 0;
    std::vector<double> minv(n + 1, kInf);
    std::vector<char> used(n + 1, 0);
    do {
      used[col0] = 1;
      const std::size_t row0 = row_of_col[col0];
      double delta = kInf;
      std::size_t col1 = 0;
      for (std::size_t col = 1; col <= n; ++col) {
        if (used[col]) {
          continue;
        }
        const double cur = cost[(row0 - 1) * n + (col - 1)] - u[row0] - v[col];
        if (cur < minv[col]) {
          minv[col] = cur;
          way[col] = col0;
        }
        if (minv[col] < delta) {
          delta = minv[col];
          col1 = col;
        }
      }
      for (std::size_t col = 0; col <= n; ++col) {
        if (used[col]) {
          u[row_of_col[col]] += delta;
          v[col] -= delta;
        } else {
          minv[col] -= delta;
        }
      }
      col0 = col1;
    } while (row_of_col[col0] != 0);
    do {
      const std::size_t col1 = way[col0];
      row_of_col[col0] = row_of_col[col1];
      col0 = col1;
    } while (col0 != 0);
  }
  result.column_of_row.assign(n, 0);
  for (std::size_t col = 1; col <= n; ++col) {
    result.column_of_row[row_of_col[col] - 1] = col - 1;
  }
  for (std::size_t row = 0; row < n; ++row) {
    result.total += cost[row * n + result.column_of_row[row]];
  }
  return result;
}

}  // namespace ckm
