#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pcacouple/local_rules.hpp"
#include "pcacouple/scalar.hpp"
#include "pcacouple/spin_space.hpp"

namespace pcacouple {

/// How distribution functions are taken over the spin space.
///   Total   - chain; F(s) = p({s' <= s}).
///   ClassZ  - linearly ordered space; F(s_i) = p({s_1..s_i}) along the witness.
///   General - any poset; F(G) = p(G) over every up-set G.
enum class OrderMode { Total, ClassZ, General };

std::string to_string(OrderMode mode);
OrderMode order_mode_from_string(const std::string& text);

/// The family of sets whose probabilities make up a distribution function,
/// precomputed once per spin space. Each level carries a kind: down-set
/// levels must be nonincreasing along an increasing tuple, up-set levels
/// nondecreasing.
class OrderContext {
 public:
  /// Throws InvalidInput when the mode does not fit the poset (Total needs a
  /// chain, ClassZ a class-Z space) and CapExceeded for too many elements in
  /// General mode. The context refers to `spin`, which must outlive it.
  static OrderContext make(const SpinPoset& spin, OrderMode mode, std::size_t up_set_cap = kDefaultUpSetCap);

  OrderMode mode() const { return mode_; }
  const SpinPoset& spin() const { return *spin_; }
  std::size_t level_count() const { return sets_.size(); }
  SpinMask level_set(std::size_t i) const { return sets_[i]; }
  SetKind level_kind(std::size_t i) const { return kinds_[i]; }
  /// Spin at each level for Total and ClassZ; empty for General.
  std::span<const Spin> sequence() const { return sequence_; }
  std::string level_name(std::size_t i) const;

 private:
  const SpinPoset* spin_ = nullptr;
  OrderMode mode_ = OrderMode::Total;
  std::vector<SpinMask> sets_;
  std::vector<SetKind> kinds_;
  std::vector<Spin> sequence_;
};

template <class T>
struct DistributionTable {
  OrderMode mode = OrderMode::Total;
  std::vector<Spin> sequence;
  std::vector<SpinMask> sets;
  std::vector<SetKind> kinds;
  std::vector<T> values;
};

/// Distribution function of a probability vector. In Total and ClassZ mode
/// the last value is exactly 1.
template <class T>
DistributionTable<T> distribution_of(std::span<const T> probabilities, const OrderContext& ctx);

template <class T>
DistributionTable<T> distribution_table(const LocalRule& rule, std::span<const Spin> pattern,
                                        const OrderContext& ctx);

/// Convenience overload building the context on the fly (float values).
DistributionTable<double> distribution_table(const LocalRule& rule, std::span<const Spin> pattern,
                                             OrderMode mode);

using RuleRefs = std::vector<std::reference_wrapper<const LocalRule>>;

struct CheckOptions {
  OrderMode mode = OrderMode::Total;
  /// Unset: exact when every rule is exact, float otherwise.
  std::optional<Arithmetic> arithmetic;
  /// Float mode only; a violation must exceed this to be reported.
  double tolerance = 1e-12;
  std::uint64_t pair_cap = 10'000'000;
  std::size_t up_set_cap = kDefaultUpSetCap;
  /// Keep every violation, not just the first.
  bool collect_all = false;
  std::size_t max_collected = 100'000;
};

struct Violation {
  /// Compares rules[component] at lower_pattern with rules[component + 1] at upper_pattern.
  std::size_t component = 0;
  /// Patterns over the common neighbourhood of the verdict.
  std::vector<Spin> lower_pattern;
  std::vector<Spin> upper_pattern;
  std::size_t level = 0;
  SpinMask level_set = 0;
  SetKind level_kind = SetKind::DownSet;
  std::string level_name;
  double lower_value = 0;
  double upper_value = 0;
  /// Exact values when the check ran in exact arithmetic.
  std::string lower_exact;
  std::string upper_exact;
};

struct MonotonicityVerdict {
  bool increasing = true;
  std::string label = "increasing";
  OrderMode mode = OrderMode::Total;
  Arithmetic arithmetic = Arithmetic::Float;
  double tolerance = 0;
  Neighborhood neighborhood;
  std::optional<Violation> witness;
  std::vector<Violation> violations;
  std::uint64_t pairs_checked = 0;
  std::uint64_t comparisons = 0;
  /// Float-mode violations within tolerance.
  std::uint64_t suppressed = 0;
};

/// Union of the rules' neighbourhoods, first rule's offsets first.
Neighborhood common_neighborhood(const RuleRefs& rules);

/// Exhaustive check of the sitewise monotonicity condition for an N-tuple of
/// rules: for every ordered pattern pair zeta <= zeta' and every adjacent
/// pair (i, i+1), p^i(.|zeta) is stochastically below p^{i+1}(.|zeta') in the
/// order selected by `options.mode`. Adjacent pairs suffice because the
/// condition is a chain of pairwise inequalities. Throws CapExceeded when the
/// number of pattern pairs exceeds `options.pair_cap`.
MonotonicityVerdict check_increasing_tuple(const RuleRefs& rules, const CheckOptions& options = {});

/// Attractivity: (rule, rule) is increasing.
MonotonicityVerdict check_attractive(const LocalRule& rule, const CheckOptions& options = {});

/// Recomputes both distribution values of a reported violation from the rule
/// rows and confirms the inequality fails.
bool reverify(const RuleRefs& rules, const CheckOptions& options, const Violation& violation);

/// mu1 <= mu2 stochastically: mu1(G) <= mu2(G) for every up-set G.
template <class T>
bool stochastic_leq_on_spin(std::span<const T> mu1, std::span<const T> mu2, const SpinPoset& poset,
                            double tolerance = 0.0);

}  // namespace pcacouple
