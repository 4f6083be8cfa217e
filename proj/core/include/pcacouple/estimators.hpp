#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "pcacouple/coupling.hpp"
#include "pcacouple/exact_kernel.hpp"
#include "pcacouple/local_rules.hpp"
#include "pcacouple/volume.hpp"

namespace pcacouple {

/// f(sigma) = f(sigma restricted to the support). Values are indexed in mixed
/// radix over the support, first support site most significant.
class LocalFunction {
 public:
  using Evaluator = std::function<double(std::span<const Spin>)>;

  static LocalFunction tabulate(int dim, std::vector<Coord> support, std::shared_ptr<const SpinPoset> spin,
                                const Evaluator& f);
  /// Product of the numeric spin values over `sites` (sigma_0, sigma_0 sigma_1, ...).
  static LocalFunction spin_product(int dim, std::vector<Coord> sites, std::shared_ptr<const SpinPoset> spin);
  static LocalFunction constant(int dim, std::shared_ptr<const SpinPoset> spin, double value);

  int dim() const { return dim_; }
  const std::vector<Coord>& support() const { return support_; }
  const SpinPoset& spin() const { return *spin_; }
  const std::vector<double>& values() const { return values_; }

  double operator()(std::span<const Spin> local) const;
  /// Evaluates on a volume configuration; support sites are wrapped on a
  /// torus and must otherwise lie in the volume.
  double evaluate(const Volume& volume, std::span<const Spin> config) const;
  /// Support indices of the volume, for repeated evaluation.
  std::vector<std::size_t> resolve(const Volume& volume) const;
  double evaluate_resolved(const std::vector<std::size_t>& where, std::span<const Spin> config) const;

  /// Increasing in the coordinatewise order, by exhaustive pair scan.
  bool increasing() const;

 private:
  int dim_ = 1;
  std::vector<Coord> support_;
  std::shared_ptr<const SpinPoset> spin_;
  std::vector<double> values_;
};

struct VariationNorm {
  /// Var_k f for each support site, in support order.
  std::vector<double> per_site;
  /// Sum of per_site.
  double triple_norm = 0;
};

/// Var_k f = sup |f(sigma) - f(eta)| over pairs differing only at k.
VariationNorm variation_norm(const LocalFunction& f);

struct RhoEstimate {
  std::size_t n = 0;
  double estimate = 0;
  /// sqrt(p (1 - p) / R).
  double standard_error = 0;
  std::uint64_t replicas = 0;
  std::uint64_t disagreements = 0;
  /// 95% interval: normal approximation, or Wilson when p < 5 / R.
  double ci_low = 0;
  double ci_high = 0;
  bool wilson = false;
};

struct EstimateOptions {
  std::uint64_t replicas = 1000;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

/// Monte Carlo rho(n), n = 0..n_max: R independent pair couplings of the
/// dynamics with itself from the bottom and top configurations; replica r
/// uses stream (seed, r). A replica stops once its components coalesce.
std::vector<RhoEstimate> estimate_rho(const Dynamics& dynamics, const Volume& volume, const BoundaryCondition& tau,
                                      std::size_t n_max, const EstimateOptions& options);

struct BoundRow {
  std::size_t n = 0;
  /// max over initial configurations of |E[f(omega(n)) | sigma] - nu(f)|.
  double lhs = 0;
  /// 2 |||f||| rho(n).
  double rhs = 0;
  double rho = 0;
  bool ok = false;
  /// Monte Carlo mode only.
  double lhs_standard_error = 0;
  double rho_standard_error = 0;
};

struct BoundReport {
  bool exact = true;
  double triple_norm = 0;
  double nu_f = 0;
  std::vector<BoundRow> rows;
  bool all_ok = true;
};

struct BoundOptions {
  /// Exact kernel evaluation; when false, or over the state cap with
  /// allow_monte_carlo, a Monte Carlo surrogate is used.
  bool exact = true;
  bool allow_monte_carlo = false;
  Arithmetic arithmetic = Arithmetic::Float;
  double tolerance = 1e-10;
  std::uint64_t state_cap = kDefaultStateCap;
  StationaryOptions stationary;
  /// Monte Carlo surrogate: initial configurations are bottom, top and
  /// `random_initial` uniform ones; nu(f) is the time-`burn_in` average from top.
  std::uint64_t replicas = 10000;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::size_t random_initial = 8;
  std::size_t burn_in = 200;
};

/// Checks |E[f(omega(n)) | sigma] - nu(f)| <= 2 |||f||| rho(n) on a torus.
BoundReport ergodicity_bound_check(const Dynamics& dynamics, const Volume& torus, const LocalFunction& f,
                                   const std::vector<std::size_t>& n_list, const BoundOptions& options = {});

struct SandwichRow {
  std::size_t n = 0;
  double e_minus = 0;
  double e_mid = 0;
  double e_plus = 0;
  /// E_minus <= E_mid <= E_plus up to 1e-12, and every trajectory pathwise ordered.
  bool ordered = true;
  /// Disagreement frequencies at the probe site for the inner pair (xi vs
  /// xi_Lambda top), the extremal pair (bottom vs top) and the pinned pair
  /// (P_Lambda^bottom vs P_Lambda^top).
  double rho_inner = 0;
  double rho_extremal = 0;
  double rho_pinned = 0;
};

struct SandwichReport {
  std::vector<SandwichRow> rows;
  /// omega^1(n) <= omega^2(n) <= omega^3(n) along every trajectory and step.
  bool pathwise_order_ok = true;
  /// Inner disagreement implies extremal disagreement implies pinned
  /// disagreement, per trajectory and step.
  bool containment_ok = true;
  std::uint64_t replicas = 0;
  int margin = 0;
};

struct SandwichOptions {
  std::uint64_t replicas = 1000;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  /// Required torus side minus Lambda extent, in neighbourhood radii.
  int margin_radii = 2;
};

/// Couples (P_Lambda^bottom, P, P_Lambda^top) on `torus` from xi_Lambda bottom,
/// xi, xi_Lambda top and reports E[f] under each for n = 0..steps. A second,
/// six-component coupling (P_Lambda^bottom from bottom, P from bottom, P from
/// xi, P from xi_Lambda top, P from top, P_Lambda^top from top) checks the
/// disagreement containment. Throws InvalidInput if f is not increasing or
/// the torus is too small for the margin.
SandwichReport sandwich_check(const Dynamics& dynamics, const Volume& torus, const std::vector<Coord>& lambda,
                              const std::vector<Spin>& xi, std::size_t steps, const LocalFunction& f,
                              const SandwichOptions& options = {});

/// Runs `count` jobs on up to `threads` workers; job i writes only its own slot.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& job);

}  // namespace pcacouple
