#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pcacouple/scalar.hpp"
#include "pcacouple/spin_space.hpp"

namespace pcacouple {

inline constexpr int kMaxDim = 3;

/// Lattice point or offset in Z^d, d <= 3; unused trailing coordinates are 0.
using Coord = std::array<int, kMaxDim>;

Coord operator+(const Coord& a, const Coord& b);
Coord operator-(const Coord& a);
std::string to_string(const Coord& c, int dim);

/// Finite set of offsets V_0; site k reads the spins at k + offset.
struct Neighborhood {
  int dim = 1;
  std::vector<Coord> offsets;

  /// Validates dimension and distinctness.
  static Neighborhood from_offsets(int dim, std::vector<Coord> offsets);
  /// {±e_1, ..., ±e_d}.
  static Neighborhood nearest(int dim);
  /// {0} (the site itself).
  static Neighborhood self(int dim);

  std::size_t size() const { return offsets.size(); }
  std::optional<std::size_t> find(const Coord& offset) const;
  /// Largest |coordinate| over all offsets.
  int radius() const;

  friend bool operator==(const Neighborhood&, const Neighborhood&) = default;
};

/// Site updating rule p(. | pattern): a probability vector over the spin
/// space for every neighbourhood pattern.
///
/// Patterns are tuples of spins, one per offset, indexed lexicographically
/// with the first offset most significant. Tabulated rules keep both a
/// float table and an exact rational table. For float rules the exact table
/// is the exact binary value of every entry except the largest of each row,
/// which absorbs the rounding so that exact rows sum to 1.
class LocalRule {
 public:
  static LocalRule from_exact_table(std::shared_ptr<const SpinPoset> spin, Neighborhood nbhd,
                                    std::vector<Rational> rows, std::string name);
  static LocalRule from_float_table(std::shared_ptr<const SpinPoset> spin, Neighborhood nbhd,
                                    std::vector<double> rows, std::string name);

  const SpinPoset& spin() const { return *spin_; }
  const std::shared_ptr<const SpinPoset>& spin_ptr() const { return spin_; }
  const Neighborhood& neighborhood() const { return nbhd_; }
  Arithmetic arithmetic() const { return arithmetic_; }
  const std::string& name() const { return name_; }

  std::size_t spin_count() const { return spin_->size(); }
  std::size_t pattern_count() const { return pattern_count_; }
  bool tabulated() const { return !rows_.empty(); }

  std::size_t encode(std::span<const Spin> pattern) const;
  std::vector<Spin> decode(std::size_t pattern_index) const;

  /// Table rows; only for tabulated rules.
  std::span<const double> row(std::size_t pattern_index) const;
  std::span<const Rational> exact_row(std::size_t pattern_index) const;

  /// Probability vector at a pattern. Works for tabulated and on-the-fly rules.
  /// Throws InvalidInput when the pattern does not match the neighbourhood.
  std::vector<double> evaluate(std::span<const Spin> pattern) const;
  std::vector<double> evaluate(std::size_t pattern_index) const;

  /// Scalar-generic access: double rows or exact rows.
  template <class T>
  std::vector<T> evaluate_as(std::size_t pattern_index) const;

 private:
  friend LocalRule ising_rule(double, double, const std::vector<std::pair<Coord, double>>&, int,
                              std::size_t);

  struct OnTheFlyIsing {
    double beta = 0;
    double h = 0;
    std::vector<double> coupling;  // aligned with offsets
  };

  LocalRule() = default;
  void check_pattern_index(std::size_t pattern_index) const;

  std::shared_ptr<const SpinPoset> spin_;
  Neighborhood nbhd_;
  Arithmetic arithmetic_ = Arithmetic::Float;
  std::string name_;
  std::size_t pattern_count_ = 0;
  std::vector<double> rows_;
  std::vector<Rational> exact_rows_;
  std::optional<OnTheFlyIsing> ising_;
};

/// Rules with more offsets than this are evaluated on the fly instead of tabulated.
inline constexpr std::size_t kDefaultMaxTabulatedOffsets = 16;

/// p(s | eta) = 1/2 (1 + s tanh(beta sum_{k'} K(k') eta_{k'} + beta h)) on {-1,+1}.
/// `coupling` lists (offset, K(offset)); it must be symmetric, K(o) = K(-o).
LocalRule ising_rule(double beta, double h, const std::vector<std::pair<Coord, double>>& coupling, int dim,
                     std::size_t max_tabulated_offsets = kDefaultMaxTabulatedOffsets);

/// Ising rule with K = k_value on the nearest neighbours {±e_i}.
LocalRule ising_rule_nearest(double beta, double h, double k_value, int dim);

/// p(s | sigma) proportional to exp(beta N(s, sigma)), N(s, sigma) = number of
/// neighbours with sigma_{k'} >= s, on the chain {1..q}.
LocalRule qstate_rule(double beta, int q, const Neighborhood& nbhd);

enum class Counterexample { A, B };

/// Exact rational rules on the diamond (A, self neighbourhood) and on the
/// "Y" space (B, neighbourhood {0, +1}, d = 1).
LocalRule counterexample_rule(Counterexample which);

/// Site-dependent collection of rules over one spin space.
class Dynamics {
 public:
  static Dynamics homogeneous(std::shared_ptr<const LocalRule> rule);
  /// Sites listed in `overrides` use their own rule, all others `fallback`.
  static Dynamics per_site(std::shared_ptr<const LocalRule> fallback,
                           std::map<Coord, std::shared_ptr<const LocalRule>> overrides);

  bool translation_invariant() const { return overrides_.empty(); }
  const LocalRule& rule_at(const Coord& site) const { return *rule_ptr_at(site); }
  const std::shared_ptr<const LocalRule>& rule_ptr_at(const Coord& site) const;
  const LocalRule& base_rule() const { return *fallback_; }
  const SpinPoset& spin() const { return fallback_->spin(); }
  int dim() const { return fallback_->neighborhood().dim; }
  /// Largest neighbourhood radius over all rules.
  int radius() const;

 private:
  std::shared_ptr<const LocalRule> fallback_;
  std::map<Coord, std::shared_ptr<const LocalRule>> overrides_;
};

}  // namespace pcacouple

namespace pcacouple {

template <>
std::vector<double> LocalRule::evaluate_as<double>(std::size_t pattern_index) const;
template <>
std::vector<Rational> LocalRule::evaluate_as<Rational>(std::size_t pattern_index) const;

}  // namespace pcacouple
