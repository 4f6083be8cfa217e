#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <vector>

#include "pcacouple/local_rules.hpp"
#include "pcacouple/monotonicity.hpp"
#include "pcacouple/uniform_stream.hpp"
#include "pcacouple/volume.hpp"

namespace pcacouple {

/// Generalised inverse inf{s : F(s) >= u} along the table's level sequence
/// (Total or ClassZ mode). The bucket of level i is (F_{i-1}, F_i], so a u
/// sitting exactly on a boundary goes to the lower level. Throws InvalidInput
/// for u outside (0, 1) or a General-mode table.
template <class T>
Spin levy_inverse(const DistributionTable<T>& table, const T& u);

/// One component of a coupling: its dynamics, the exterior configuration tau
/// and an optional restriction Lambda. Sites of the common volume outside
/// Lambda are frozen at tau and never updated.
struct ComponentSpec {
  std::shared_ptr<const Dynamics> dynamics;
  BoundaryCondition tau;
  std::optional<std::vector<Coord>> restrict_to;
};

/// Per-site view of a component on a volume: which rule updates each site,
/// where its neighbours live, and which sites are frozen.
class ComponentLayout {
 public:
  ComponentLayout(const ComponentSpec& spec, const Volume& volume);

  bool active(std::size_t site) const { return active_[site] != 0; }
  Spin frozen_value(std::size_t site) const { return frozen_[site]; }
  std::size_t rule_id(std::size_t site) const { return rule_id_[site]; }
  const LocalRule& rule(std::size_t site) const { return *rules_[rule_id_[site]]; }
  const std::vector<std::shared_ptr<const LocalRule>>& rules() const { return rules_; }
  std::size_t active_count() const;

  /// Pattern index of the rule at `site` read from `config`, with exterior
  /// coordinates taken from tau.
  std::size_t pattern_index(std::size_t site, std::span<const Spin> config) const;

  /// Overwrites frozen sites of `config` with tau.
  void apply_frozen(std::vector<Spin>& config) const;

 private:
  std::vector<std::shared_ptr<const LocalRule>> rules_;
  std::vector<std::size_t> table_of_rule_;
  std::vector<NeighborTable> tables_;
  std::vector<std::vector<Spin>> exterior_values_;  // per table
  std::vector<std::size_t> rule_id_;
  std::vector<std::uint8_t> active_;
  std::vector<Spin> frozen_;
};

struct CouplingOptions {
  /// Unset: Total on chains, ClassZ on class-Z spaces, General otherwise.
  std::optional<OrderMode> mode;
  /// The tuple was certified increasing: an order loss between adjacent
  /// components raises OrderViolation.
  bool certified = false;
  unsigned threads = 1;
  /// Volumes smaller than this are stepped on one thread.
  std::size_t parallel_min_sites = 4096;
  std::uint64_t map_cap = 1'000'000;
};

struct CoupledState {
  std::vector<std::vector<Spin>> components;
  std::uint64_t time = 0;

  friend bool operator==(const CoupledState&, const CoupledState&) = default;
};

struct MonitorReport {
  std::size_t components = 0;
  /// Adjacent components ordered at every observed time.
  bool order_ok = true;
  std::optional<std::uint64_t> first_order_violation;
  /// First time components i < j agreed, indexed by pair_index(i, j).
  std::vector<std::optional<std::uint64_t>> coalescence;
  /// No pair separated after agreeing.
  bool coalescence_permanent = true;
  /// Whenever the tuple was ordered and i, j agreed, every component between them agreed too.
  bool squeeze_ok = true;
  std::uint64_t observations = 0;

  std::size_t pair_index(std::size_t i, std::size_t j) const;
  std::size_t coalesced_pairs() const;
};

/// Synchronous coupling of N finite-volume dynamics on a common volume.
/// At step n every site k draws one u = stream.draw(n, k) and every active
/// component updates its spin at k from that same u.
class CoupledDynamics {
 public:
  CoupledDynamics(Volume volume, std::vector<ComponentSpec> components, CouplingOptions options = {});

  const Volume& volume() const { return volume_; }
  const SpinPoset& spin() const { return *spin_; }
  OrderMode mode() const { return ctx_.mode(); }
  std::size_t components() const { return layouts_.size(); }
  const ComponentLayout& layout(std::size_t i) const { return layouts_[i]; }
  const CouplingOptions& options() const { return options_; }

  /// Validates sizes and spins, then freezes restricted sites at tau.
  CoupledState initial_state(std::vector<std::vector<Spin>> configs) const;

  /// Advances state.time by one. Monitors, if given, observe the new state.
  void step(CoupledState& state, const UniformStream& stream, MonitorReport* monitors = nullptr) const;

  MonitorReport new_report() const;
  void observe(const CoupledState& state, MonitorReport& report) const;
  bool ordered(const CoupledState& state) const;

  /// Index of the observed site: the origin if present, else site 0.
  std::size_t probe_site() const;

 private:
  struct JointLaw {
    std::vector<double> cumulative;
    std::vector<std::vector<Spin>> values;  // one entry per active component
  };
  struct RuleCdf {
    std::vector<double> values;  // pattern * levels + level
    std::size_t levels = 0;
  };

  void update_range(const CoupledState& from, std::vector<std::vector<Spin>>& to, std::size_t begin,
                    std::size_t end, const UniformStream& stream) const;
  Spin sample_one(std::size_t component, std::size_t site, std::size_t pattern, double u) const;
  const JointLaw& joint_law(const std::vector<std::uint64_t>& key, const std::vector<std::size_t>& comps,
                            std::size_t site) const;
  void check_order(const CoupledState& before, const CoupledState& after) const;

  Volume volume_;
  std::vector<ComponentSpec> specs_;
  std::vector<ComponentLayout> layouts_;
  CouplingOptions options_;
  std::shared_ptr<const SpinPoset> spin_;
  OrderContext ctx_;
  std::vector<std::vector<RuleCdf>> cdfs_;  // [component][rule id], tabulated rules only
  mutable std::mutex joint_mutex_;
  mutable std::map<std::vector<std::uint64_t>, std::unique_ptr<JointLaw>> joint_cache_;
};

struct RunOptions {
  std::uint64_t steps = 0;
  /// Trajectory rows are emitted for n = 0, stride, 2 stride, ... and the last step.
  std::uint64_t stride = 1;
  std::uint64_t seed = 0;
  std::uint32_t stream_id = 0;
};

struct TrajectoryRow {
  std::uint64_t n = 0;
  std::size_t component = 0;
  Spin site0 = 0;
  bool order_ok = true;
  std::size_t coalesced_pairs = 0;
};

struct RunResult {
  std::vector<TrajectoryRow> rows;
  MonitorReport report;
  CoupledState final_state;
  /// Whether the first and last components disagree at the probe site, for n = 0..steps.
  std::vector<std::uint8_t> site0_disagreement;
};

RunResult run_coupled(const CoupledDynamics& system, std::vector<std::vector<Spin>> initial,
                      const RunOptions& options);

/// CSV with columns n,component,site0_value,order_ok,coalesced_pairs.
void write_trajectory_csv(std::ostream& out, const RunResult& result, const SpinPoset& spin);

/// Binary snapshot: "PCAC", u32 version, u64 time, u32 components, u64 sites,
/// then components * sites spin bytes. Integers are little-endian.
inline constexpr std::uint32_t kSnapshotVersion = 1;
void write_snapshot(std::ostream& out, const CoupledState& state);
CoupledState read_snapshot(std::istream& in);

}  // namespace pcacouple
