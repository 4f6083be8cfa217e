#pragma once

#include <vector>

#include "pcacouple/scalar.hpp"

namespace pcacouple::detail {

struct FeasibilityResult {
  bool feasible = false;
  /// A basic feasible solution when feasible.
  std::vector<Rational> x;
  /// When infeasible: y with y.b > 0 and y.A_j <= 0 for every column j.
  std::vector<Rational> farkas;
  Rational farkas_value;
};

/// Decides {x >= 0 : A x = b} exactly with a phase-1 simplex on a dense
/// tableau, Bland's rule for entering and leaving variables. `a` is row-major
/// with `rows` rows.
FeasibilityResult solve_feasibility(const std::vector<std::vector<Rational>>& a, const std::vector<Rational>& b);

}  // namespace pcacouple::detail
