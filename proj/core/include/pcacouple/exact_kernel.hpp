#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pcacouple/coupling.hpp"
#include "pcacouple/local_rules.hpp"
#include "pcacouple/scalar.hpp"
#include "pcacouple/volume.hpp"

namespace pcacouple {

inline constexpr std::uint64_t kDefaultStateCap = std::uint64_t{1} << 16;

/// Number of configurations |S|^|Lambda|; throws CapExceeded above `cap`.
std::uint64_t state_count(std::size_t spins, std::size_t sites, std::uint64_t cap);

/// Probability measure on S^Lambda. Configuration index is mixed radix with
/// site 0 most significant.
template <class T>
struct ConfigMeasure {
  Volume volume;
  std::shared_ptr<const SpinPoset> spin;
  std::vector<T> weights;

  std::size_t states() const { return weights.size(); }
  std::vector<Spin> config(std::size_t index) const;
  std::size_t index(std::span<const Spin> config) const;
  T total() const;

  /// Law of the spin at one site.
  std::vector<T> site_marginal(std::size_t site) const;
  /// Image measure on `target`, whose sites must all belong to this volume.
  ConfigMeasure marginal(const Volume& target) const;
  /// Conditional law given spins `values` at `coords`, as a measure on
  /// `onto`. Throws InvalidInput when the event has probability zero.
  ConfigMeasure condition(const std::vector<Coord>& coords, const std::vector<Spin>& values,
                          const Volume& onto) const;

  static ConfigMeasure point_mass(const Volume& volume, std::shared_ptr<const SpinPoset> spin,
                                  std::span<const Spin> config);
};

/// Full transition kernel of a finite-volume dynamics with boundary tau:
/// entry(eta, sigma) = prod_k p_k(sigma_k | eta_Lambda tau_{Lambda^c}).
/// Stored in product form, one site row per (state, site).
template <class T>
class ExactKernel {
 public:
  ExactKernel(const Dynamics& dynamics, Volume volume, const BoundaryCondition& tau,
              std::uint64_t state_cap = kDefaultStateCap);

  std::size_t states() const { return states_; }
  std::size_t sites() const { return volume_.size(); }
  const Volume& volume() const { return volume_; }
  const std::shared_ptr<const SpinPoset>& spin_ptr() const { return spin_; }
  const SpinPoset& spin() const { return *spin_; }

  /// p_k(s | eta) for site k in state eta.
  const T& site_factor(std::size_t from, std::size_t site, Spin s) const {
    return factors_[(from * volume_.size() + site) * spins_ + s];
  }
  T entry(std::size_t from, std::size_t to) const;
  std::vector<T> row(std::size_t from) const;

  /// mu P.
  std::vector<T> apply(const std::vector<T>& mu) const;
  /// P f.
  std::vector<T> apply_function(const std::vector<T>& f) const;

  /// Every entry strictly positive (the non-degeneracy condition).
  bool strictly_positive() const;

  ConfigMeasure<T> measure(std::vector<T> weights) const;
  ConfigMeasure<T> point_mass(std::span<const Spin> config) const;

 private:
  Volume volume_;
  std::shared_ptr<const SpinPoset> spin_;
  std::size_t spins_ = 0;
  std::size_t states_ = 0;
  std::vector<T> factors_;
};

enum class ChainStructure { StrictlyPositive, IrreducibleAperiodic, Reducible, Periodic };
std::string to_string(ChainStructure s);

template <class T>
ChainStructure classify_chain(const ExactKernel<T>& kernel);

struct StationaryOptions {
  /// Proceed on reducible or periodic kernels: the result is supported on the
  /// first closed class and, for periodic kernels, computed from the lazy chain.
  bool force = false;
  /// Float mode: stop when the total-variation increment drops below this.
  double tolerance = 1e-13;
  std::uint64_t max_iterations = 10'000'000;
  /// Exact mode: dense elimination limit.
  std::size_t exact_state_cap = 2048;
};

/// Stationary measure: exact Gaussian elimination for Rational, power
/// iteration for double. Throws InvalidInput for reducible or periodic
/// kernels unless forced.
template <class T>
ConfigMeasure<T> stationary_measure(const ExactKernel<T>& kernel, const StationaryOptions& options = {});

/// Exact N-component coupling on (S^Lambda)^N. The joint site factor is the
/// law of the tuple of inverse transforms of one uniform, obtained by merging
/// the breakpoints of the N distribution functions (Total and ClassZ), or the
/// ordered joint law used by the simulator (General).
template <class T>
class CoupledExactChain {
 public:
  using Distribution = std::map<std::uint64_t, T>;

  CoupledExactChain(Volume volume, std::vector<ComponentSpec> components, std::optional<OrderMode> mode = {},
                    std::uint64_t state_cap = kDefaultStateCap);

  std::size_t components() const { return layouts_.size(); }
  std::size_t config_states() const { return config_states_; }
  const Volume& volume() const { return volume_; }
  OrderMode mode() const { return ctx_.mode(); }

  std::uint64_t encode(const std::vector<std::vector<Spin>>& configs) const;
  std::vector<std::vector<Spin>> decode(std::uint64_t tuple) const;
  Distribution point_mass(std::vector<std::vector<Spin>> configs) const;
  Distribution step(const Distribution& dist) const;

  /// Joint law of the N new spins at `site` given the tuple state, as
  /// (weight, spins) with positive weights.
  std::vector<std::pair<T, std::vector<Spin>>> site_factor(const std::vector<std::vector<Spin>>& configs,
                                                           std::size_t site) const;

  /// Probability that components i and j differ at `site`.
  T disagreement(const Distribution& dist, std::size_t site, std::size_t i, std::size_t j) const;
  /// Law of component i's configuration.
  std::vector<T> component_law(const Distribution& dist, std::size_t i) const;

 private:
  Volume volume_;
  std::shared_ptr<const SpinPoset> spin_;
  std::vector<ComponentLayout> layouts_;
  OrderContext ctx_;
  std::size_t config_states_ = 0;
};

/// rho_Lambda(n), n = 0..n_max: probability that the pair coupling of the
/// dynamics with itself, started from the bottom and top configurations,
/// disagrees at the probe site (the origin, else site 0).
template <class T>
std::vector<T> exact_rho(const Dynamics& dynamics, const Volume& volume, const BoundaryCondition& tau,
                         std::size_t n_max, std::uint64_t state_cap = kDefaultStateCap);

/// mu1 <= mu2 in the coordinatewise order of S^Lambda: existence of a
/// coupling supported on {sigma <= eta}, decided by max-flow on the bipartite
/// order graph. Float mode accepts a flow deficit up to `tolerance`.
template <class T>
bool stochastic_leq_configs(const ConfigMeasure<T>& mu1, const ConfigMeasure<T>& mu2, double tolerance = 0.0,
                            std::uint64_t state_cap = kDefaultStateCap);

struct SubSuperEntry {
  std::vector<Spin> conditioning;
  /// nu_Lambda^bottom <= nu_Lambda'^bottom(. | sigma).
  bool lower_ok = false;
  /// nu_Lambda'^top(. | sigma) <= nu_Lambda^top.
  bool upper_ok = false;
  /// Negative control: nu_Lambda^top <= nu_Lambda'^top(. | sigma).
  bool reversed_upper = false;
  /// Negative control: nu_Lambda'^bottom(. | sigma) <= nu_Lambda^bottom.
  bool reversed_lower = false;
  double conditioning_probability_bottom = 0;
  double conditioning_probability_top = 0;
};

struct SubSuperReport {
  std::vector<Coord> inner;
  std::vector<Coord> outer;
  std::vector<SubSuperEntry> entries;
  bool all_ok = true;
};

struct SubSuperOptions {
  std::uint64_t state_cap = kDefaultStateCap;
  double tolerance = 0.0;
  StationaryOptions stationary;
};

/// For every conditioning sigma on Lambda' \ Lambda, compares the conditional
/// extremal stationary measures on Lambda' with the extremal stationary
/// measures on Lambda (bottom and top boundaries).
template <class T>
SubSuperReport check_sub_super_gibbs(const Dynamics& dynamics, const std::vector<Coord>& inner,
                                     const std::vector<Coord>& outer, const SubSuperOptions& options = {});

struct LimitSpatialRow {
  int L = 0;
  std::size_t sites = 0;
  /// Site-0 marginals (indexed by spin) of nu_{B_L}^top and nu_{B_L}^bottom.
  std::vector<double> top_site0;
  std::vector<double> bottom_site0;
  /// Total variation between the two site-0 marginals.
  double gap = 0;
  /// Against the previous L: proj(nu_{B_L}^top) <= nu_{B_prev}^top and
  /// nu_{B_prev}^bottom <= proj(nu_{B_L}^bottom). True on the first row.
  bool top_projection_ok = true;
  bool bottom_projection_ok = true;
};

struct LimitTemporalRow {
  std::size_t n = 0;
  std::vector<double> top_site0;
  std::vector<double> bottom_site0;
  double gap = 0;
  /// delta_top P^n <= delta_top P^(n-1) and delta_bottom P^(n-1) <= delta_bottom P^n.
  bool top_decreasing = true;
  bool bottom_increasing = true;
};

struct LimitReport {
  std::vector<LimitSpatialRow> spatial;
  std::vector<LimitTemporalRow> temporal;
  bool spatial_monotone = true;
  bool temporal_monotone = true;
};

struct LimitOptions {
  std::uint64_t state_cap = kDefaultStateCap;
  double tolerance = 0.0;
  StationaryOptions stationary;
};

/// Spatial part on the l1 balls B_L with bottom and top boundaries. Temporal
/// part on `volume` for n = 0..n_max, started from the top and bottom
/// configurations; on a non-periodic volume each chain uses the matching
/// constant boundary.
template <class T>
LimitReport limit_sandwich_report(const Dynamics& dynamics, const std::vector<int>& L_list, const Volume& volume,
                                  std::size_t n_max, const LimitOptions& options = {});

}  // namespace pcacouple
