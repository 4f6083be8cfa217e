#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include "pcacouple/scalar.hpp"
#include "pcacouple/spin_space.hpp"

namespace pcacouple {

/// A monotone map from an index poset to a value poset, as values[alpha].
using MonotoneMap = std::vector<Spin>;

/// All maps alpha -> s_alpha with alpha1 <= alpha2 => s_alpha1 <= s_alpha2.
/// Throws CapExceeded once more than `cap` maps are found.
std::vector<MonotoneMap> enumerate_monotone_maps(const SpinPoset& index, const SpinPoset& values,
                                                 std::uint64_t cap = 1'000'000);

struct RealizableFeasible {
  /// Monotone maps with positive weight and their weights (a joint law on
  /// monotone maps with the requested marginals).
  std::vector<MonotoneMap> maps;
  std::vector<Rational> weights;
};

struct RealizableInfeasible {
  /// Farkas vector y over the marginal constraints, index alpha * |S| + s:
  /// y . b > 0 while sum_{alpha} y[alpha, m(alpha)] <= 0 for every monotone map m.
  std::vector<Rational> certificate;
  Rational certificate_value;
  std::size_t map_count = 0;
};

using RealizabilityResult = std::variant<RealizableFeasible, RealizableInfeasible>;

/// Decides whether the family (dists[alpha])_alpha, indexed by `index` and
/// valued in `values`, is realizable monotone: exhaustive monotone-map
/// enumeration plus an exact phase-1 simplex (Bland's rule) on the marginal
/// constraints. Every distribution must sum to 1.
RealizabilityResult check_realizable_monotone(const SpinPoset& index, const std::vector<std::vector<Rational>>& dists,
                                              const SpinPoset& values, std::uint64_t map_cap = 1'000'000);

/// Independent check of an infeasibility certificate against the full map list.
bool verify_certificate(const SpinPoset& index, const std::vector<std::vector<Rational>>& dists,
                        const SpinPoset& values, const RealizableInfeasible& cert);

}  // namespace pcacouple
