#include "exact_simplex.hpp"

#include "pcacouple/error.hpp"

namespace pcacouple::detail {

FeasibilityResult solve_feasibility(const std::vector<std::vector<Rational>>& a, const std::vector<Rational>& b) {
  const std::size_t m = a.size();
  if (b.size() != m) throw InvalidInput("simplex: right-hand side length mismatch");
  const std::size_t n = m == 0 ? 0 : a.front().size();
  for (const auto& row : a) {
    if (row.size() != n) throw InvalidInput("simplex: ragged constraint matrix");
  }

  // Columns 0..n-1 original, n..n+m-1 artificial; column n+m is the rhs.
  const std::size_t cols = n + m + 1;
  std::vector<std::vector<Rational>> t(m, std::vector<Rational>(cols, Rational(0)));
  std::vector<int> sign(m, 1);
  for (std::size_t i = 0; i < m; ++i) {
    sign[i] = b[i] < 0 ? -1 : 1;
    for (std::size_t j = 0; j < n; ++j) t[i][j] = sign[i] * a[i][j];
    t[i][n + i] = 1;
    t[i][cols - 1] = sign[i] * b[i];
  }
  std::vector<std::size_t> basis(m);
  for (std::size_t i = 0; i < m; ++i) basis[i] = n + i;

  // Reduced costs of min sum(artificials); last entry is -objective.
  std::vector<Rational> cost(cols, Rational(0));
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) cost[j] -= t[i][j];
    cost[cols - 1] -= t[i][cols - 1];
  }

  for (;;) {
    std::size_t enter = cols;
    for (std::size_t j = 0; j + 1 < cols; ++j) {
      if (cost[j] < 0) {
        enter = j;
        break;
      }
    }
    if (enter == cols) break;

    std::size_t leave = m;
    Rational best_ratio;
    for (std::size_t i = 0; i < m; ++i) {
      if (t[i][enter] <= 0) continue;
      Rational ratio = t[i][cols - 1] / t[i][enter];
      if (leave == m || ratio < best_ratio || (ratio == best_ratio && basis[i] < basis[leave])) {
        leave = i;
        best_ratio = ratio;
      }
    }
    // Phase 1 is bounded below by 0, so an entering column always has a pivot.
    if (leave == m) throw Error("simplex: unbounded phase-1 problem");

    const Rational pivot = t[leave][enter];
    for (auto& v : t[leave]) v /= pivot;
    for (std::size_t i = 0; i < m; ++i) {
      if (i == leave || t[i][enter] == 0) continue;
      const Rational factor = t[i][enter];
      for (std::size_t j = 0; j < cols; ++j) t[i][j] -= factor * t[leave][j];
    }
    if (cost[enter] != 0) {
      const Rational factor = cost[enter];
      for (std::size_t j = 0; j < cols; ++j) cost[j] -= factor * t[leave][j];
    }
    basis[leave] = enter;
  }

  FeasibilityResult result;
  const Rational objective = -cost[cols - 1];
  if (objective == 0) {
    result.feasible = true;
    result.x.assign(n, Rational(0));
    for (std::size_t i = 0; i < m; ++i) {
      if (basis[i] < n) result.x[basis[i]] = t[i][cols - 1];
    }
    return result;
  }
  // Duals from the artificial columns: reduced cost 1 - y_i.
  result.farkas.resize(m);
  for (std::size_t i = 0; i < m; ++i) result.farkas[i] = sign[i] * (1 - cost[n + i]);
  result.farkas_value = objective;
  return result;
}

}  // namespace pcacouple::detail
