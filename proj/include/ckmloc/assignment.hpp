// Minimum-cost rectangular assignment (Hungarian algorithm with
// potentials, shortest-augmenting-path form, O(n^2 m)).
#pragma once

#include <Eigen/Dense>

#include <limits>
#include <stdexcept>
#include <vector>

namespace ckmloc {

struct Assignment {
  std::vector<int> row_to_col; // -1 when a row is left unmatched
  double total_cost = 0.0;     // over matched pairs only
};

namespace detail {

// Requires rows <= cols. Ties are resolved deterministically by the
// fixed column scan order (lowest index wins).
inline std::vector<int> hungarian_rows_le_cols(const Eigen::MatrixXd& cost) {
  const int n = static_cast<int>(cost.rows());
  const int m = static_cast<int>(cost.cols());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<int> match(m + 1, 0), way(m + 1, 0);
  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = match[j0];
      int j1 = -1;
      double delta = inf;
      for (int j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
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
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= m; ++j)
    if (match[j] != 0) row_to_col[match[j] - 1] = j - 1;
  return row_to_col;
}

} // namespace detail

/// Injective row -> column map minimizing the summed cost. When there are
/// more rows than columns, the surplus rows whose exclusion minimizes the
/// total are left unmatched (internally: virtual uniform high-cost pad
/// columns), reported as -1.
inline Assignment solve_assignment(const Eigen::MatrixXd& cost) {
  const int rows = static_cast<int>(cost.rows());
  const int cols = static_cast<int>(cost.cols());
  if (rows == 0 || cols == 0) throw std::invalid_argument("solve_assignment: empty cost matrix");
  if (!cost.allFinite() || cost.minCoeff() < 0.0)
    throw std::invalid_argument("solve_assignment: costs must be finite and nonnegative");

  Assignment result;
  if (rows <= cols) {
    result.row_to_col = detail::hungarian_rows_le_cols(cost);
  } else {
    const double pad = 2.0 * cost.maxCoeff() + 1.0;
    Eigen::MatrixXd padded(rows, rows);
    padded.setConstant(pad);
    padded.leftCols(cols) = cost;
    result.row_to_col = detail::hungarian_rows_le_cols(padded);
    for (int& c : result.row_to_col)
      if (c >= cols) c = -1;
  }
  for (int r = 0; r < rows; ++r)
    if (result.row_to_col[r] >= 0) result.total_cost += cost(r, result.row_to_col[r]);
  return result;
}

} // namespace ckmloc
