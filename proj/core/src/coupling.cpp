#include "pcacouple/coupling.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>
#include <thread>

#include "pcacouple/error.hpp"
#include "pcacouple/realizable.hpp"

namespace pcacouple {

template <class T>
Spin levy_inverse(const DistributionTable<T>& table, const T& u) {
  if (table.mode == OrderMode::General) throw InvalidInput("inverse transform needs a Total or ClassZ table");
  if (!(u > 0) || !(u < 1)) throw InvalidInput("uniform draw outside (0, 1)");
  for (std::size_t i = 0; i < table.values.size(); ++i) {
    if (table.values[i] >= u) return table.sequence[i];
  }
  return table.sequence.back();
}

template Spin levy_inverse<double>(const DistributionTable<double>&, const double&);
template Spin levy_inverse<Rational>(const DistributionTable<Rational>&, const Rational&);

ComponentLayout::ComponentLayout(const ComponentSpec& spec, const Volume& volume) {
  if (!spec.dynamics) throw InvalidInput("component without dynamics");
  const Dynamics& dyn = *spec.dynamics;
  if (dyn.dim() != volume.dim()) throw InvalidInput("dynamics and volume dimensions differ");
  const std::size_t n = volume.size();
  const std::size_t spins = dyn.spin().size();
  if (spec.tau.fill >= spins) throw InvalidInput("boundary spin out of range");
  for (const auto& [c, s] : spec.tau.overrides)
    if (s >= spins) throw InvalidInput("boundary spin out of range at " + to_string(c, volume.dim()));

  active_.assign(n, 1);
  frozen_.resize(n);
  for (std::size_t i = 0; i < n; ++i) frozen_[i] = spec.tau.at(volume.site(i));
  if (spec.restrict_to) {
    std::fill(active_.begin(), active_.end(), 0);
    for (const auto& c : *spec.restrict_to) {
      auto k = volume.find(c);
      if (!k) throw InvalidInput("restriction site " + to_string(c, volume.dim()) + " is outside the volume");
      active_[*k] = 1;
    }
  }

  rule_id_.resize(n);
  std::map<const LocalRule*, std::size_t> ids;
  std::vector<const Neighborhood*> table_nbhd;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& ptr = dyn.rule_ptr_at(volume.site(i));
    auto [it, inserted] = ids.emplace(ptr.get(), rules_.size());
    if (inserted) {
      rules_.push_back(ptr);
      std::size_t t = 0;
      while (t < table_nbhd.size() && !(*table_nbhd[t] == ptr->neighborhood())) ++t;
      if (t == table_nbhd.size()) {
        table_nbhd.push_back(&ptr->neighborhood());
        tables_.push_back(build_neighbor_table(volume, ptr->neighborhood()));
        std::vector<Spin> ext;
        for (const auto& c : tables_.back().exterior) ext.push_back(spec.tau.at(c));
        exterior_values_.push_back(std::move(ext));
      }
      table_of_rule_.push_back(t);
    }
    rule_id_[i] = it->second;
  }
}

std::size_t ComponentLayout::active_count() const {
  return static_cast<std::size_t>(std::count(active_.begin(), active_.end(), 1));
}

std::size_t ComponentLayout::pattern_index(std::size_t site, std::span<const Spin> config) const {
  const std::size_t r = rule_id_[site];
  const std::size_t t = table_of_rule_[r];
  const NeighborTable& table = tables_[t];
  const std::size_t base = rules_[r]->spin_count();
  const std::int64_t* slots = table.slots.data() + site * table.width;
  std::size_t idx = 0;
  for (std::size_t j = 0; j < table.width; ++j) {
    const std::int64_t slot = slots[j];
    const Spin v = slot >= 0 ? config[static_cast<std::size_t>(slot)] : exterior_values_[t][static_cast<std::size_t>(-1 - slot)];
    idx = idx * base + v;
  }
  return idx;
}

void ComponentLayout::apply_frozen(std::vector<Spin>& config) const {
  for (std::size_t i = 0; i < config.size(); ++i)
    if (!active_[i]) config[i] = frozen_[i];
}

std::size_t MonitorReport::pair_index(std::size_t i, std::size_t j) const {
  if (i >= j || j >= components) throw InvalidInput("pair index needs i < j < N");
  return i * components - i * (i + 1) / 2 + (j - i - 1);
}

std::size_t MonitorReport::coalesced_pairs() const {
  return static_cast<std::size_t>(
      std::count_if(coalescence.begin(), coalescence.end(), [](const auto& c) { return c.has_value(); }));
}

namespace {

OrderMode default_mode(const SpinPoset& spin) {
  if (spin.is_chain()) return OrderMode::Total;
  if (std::holds_alternative<LinearOrderWitness>(classify_class_z(spin))) return OrderMode::ClassZ;
  return OrderMode::General;
}

}  // namespace

CoupledDynamics::CoupledDynamics(Volume volume, std::vector<ComponentSpec> components, CouplingOptions options)
    : volume_(std::move(volume)), specs_(std::move(components)), options_(options) {
  if (specs_.empty()) throw InvalidInput("coupling needs at least one component");
  for (const auto& spec : specs_) {
    if (!spec.dynamics) throw InvalidInput("component without dynamics");
    if (!(spec.dynamics->spin() == specs_.front().dynamics->spin()))
      throw InvalidInput("all components must share one spin space");
  }
  spin_ = specs_.front().dynamics->base_rule().spin_ptr();
  ctx_ = OrderContext::make(*spin_, options_.mode.value_or(default_mode(*spin_)));
  for (const auto& spec : specs_) layouts_.emplace_back(spec, volume_);

  cdfs_.resize(layouts_.size());
  for (std::size_t c = 0; c < layouts_.size(); ++c) {
    for (const auto& rule : layouts_[c].rules()) {
      RuleCdf cdf;
      if (ctx_.mode() != OrderMode::General && rule->tabulated()) {
        cdf.levels = ctx_.level_count();
        cdf.values.reserve(rule->pattern_count() * cdf.levels);
        for (std::size_t p = 0; p < rule->pattern_count(); ++p) {
          const auto row = rule->row(p);
          const auto table = distribution_of<double>(row, ctx_);
          cdf.values.insert(cdf.values.end(), table.values.begin(), table.values.end());
        }
      }
      cdfs_[c].push_back(std::move(cdf));
    }
  }
}

CoupledState CoupledDynamics::initial_state(std::vector<std::vector<Spin>> configs) const {
  if (configs.size() != layouts_.size()) throw InvalidInput("need one initial configuration per component");
  for (std::size_t c = 0; c < configs.size(); ++c) {
    if (configs[c].size() != volume_.size()) throw InvalidInput("initial configuration has the wrong size");
    for (Spin s : configs[c])
      if (s >= spin_->size()) throw InvalidInput("initial configuration holds an unknown spin");
    layouts_[c].apply_frozen(configs[c]);
  }
  return CoupledState{std::move(configs), 0};
}

Spin CoupledDynamics::sample_one(std::size_t component, std::size_t site, std::size_t pattern, double u) const {
  const ComponentLayout& layout = layouts_[component];
  const RuleCdf& cdf = cdfs_[component][layout.rule_id(site)];
  const auto seq = ctx_.sequence();
  if (cdf.levels) {
    const double* f = cdf.values.data() + pattern * cdf.levels;
    for (std::size_t i = 0; i + 1 < cdf.levels; ++i)
      if (f[i] >= u) return seq[i];
    return seq[cdf.levels - 1];
  }
  const auto probs = layout.rule(site).evaluate(pattern);
  const auto table = distribution_of<double>(std::span<const double>(probs), ctx_);
  return levy_inverse<double>(table, u);
}

const CoupledDynamics::JointLaw& CoupledDynamics::joint_law(const std::vector<std::uint64_t>& key,
                                                            const std::vector<std::size_t>& comps,
                                                            std::size_t site) const {
  {
    std::lock_guard lock(joint_mutex_);
    auto it = joint_cache_.find(key);
    if (it != joint_cache_.end()) return *it->second;
  }
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < comps.size(); ++i) labels.push_back(std::to_string(i));
  const SpinPoset index = SpinPoset::chain(labels);
  std::vector<std::vector<Rational>> dists;
  for (std::size_t i = 0; i < comps.size(); ++i) {
    const auto& rule = layouts_[comps[i]].rule(site);
    dists.push_back(rule.evaluate_as<Rational>(static_cast<std::size_t>(key[3 * i + 2])));
  }
  auto result = check_realizable_monotone(index, dists, *spin_, options_.map_cap);
  const auto* feasible = std::get_if<RealizableFeasible>(&result);
  if (!feasible) {
    throw InvalidInput("no ordered joint law for the current pattern tuple at site " +
                       to_string(volume_.site(site), volume_.dim()) +
                       "; the general-poset coupling needs ordered components and an increasing tuple");
  }
  auto law = std::make_unique<JointLaw>();
  Rational acc = 0;
  for (std::size_t j = 0; j < feasible->maps.size(); ++j) {
    acc += feasible->weights[j];
    law->cumulative.push_back(acc.get_d());
    law->values.push_back(feasible->maps[j]);
  }
  law->cumulative.back() = 1.0;
  std::lock_guard lock(joint_mutex_);
  auto [it, inserted] = joint_cache_.emplace(key, std::move(law));
  return *it->second;
}

void CoupledDynamics::update_range(const CoupledState& from, std::vector<std::vector<Spin>>& to, std::size_t begin,
                                   std::size_t end, const UniformStream& stream) const {
  const std::size_t n_comp = layouts_.size();
  std::vector<std::size_t> comps;
  std::vector<std::uint64_t> key;
  for (std::size_t k = begin; k < end; ++k) {
    const double u = stream.draw(from.time, k);
    if (ctx_.mode() != OrderMode::General) {
      for (std::size_t c = 0; c < n_comp; ++c) {
        const ComponentLayout& layout = layouts_[c];
        if (!layout.active(k)) {
          to[c][k] = from.components[c][k];
          continue;
        }
        to[c][k] = sample_one(c, k, layout.pattern_index(k, from.components[c]), u);
      }
      continue;
    }
    comps.clear();
    key.clear();
    for (std::size_t c = 0; c < n_comp; ++c) {
      const ComponentLayout& layout = layouts_[c];
      if (!layout.active(k)) {
        to[c][k] = from.components[c][k];
        continue;
      }
      comps.push_back(c);
      key.push_back(c);
      key.push_back(layout.rule_id(k));
      key.push_back(layout.pattern_index(k, from.components[c]));
    }
    if (comps.empty()) continue;
    const JointLaw& law = joint_law(key, comps, k);
    std::size_t j = 0;
    while (j + 1 < law.cumulative.size() && law.cumulative[j] < u) ++j;
    for (std::size_t i = 0; i < comps.size(); ++i) to[comps[i]][k] = law.values[j][i];
  }
}

bool CoupledDynamics::ordered(const CoupledState& state) const {
  for (std::size_t c = 0; c + 1 < state.components.size(); ++c)
    if (!config_leq(*spin_, state.components[c], state.components[c + 1])) return false;
  return true;
}

void CoupledDynamics::check_order(const CoupledState& before, const CoupledState& after) const {
  if (!ordered(before)) return;
  for (std::size_t c = 0; c + 1 < after.components.size(); ++c) {
    const auto& a = after.components[c];
    const auto& b = after.components[c + 1];
    for (std::size_t k = 0; k < a.size(); ++k) {
      if (spin_->leq(a[k], b[k])) continue;
      std::ostringstream os;
      os << "order lost between components " << c << " and " << c + 1 << " at step " << after.time << ", site "
         << to_string(volume_.site(k), volume_.dim()) << ": " << spin_->label(a[k]) << " vs " << spin_->label(b[k])
         << " (previous " << spin_->label(before.components[c][k]) << " vs "
         << spin_->label(before.components[c + 1][k]) << ")";
      throw OrderViolation(os.str());
    }
  }
}

void CoupledDynamics::step(CoupledState& state, const UniformStream& stream, MonitorReport* monitors) const {
  if (state.components.size() != layouts_.size()) throw InvalidInput("state does not match the coupling");
  std::vector<std::vector<Spin>> next(layouts_.size(), std::vector<Spin>(volume_.size()));
  const std::size_t n = volume_.size();
  const unsigned threads = std::max(1U, options_.threads);
  if (threads > 1 && n >= options_.parallel_min_sites && n > 1) {
    const std::size_t workers = std::min<std::size_t>(threads, n);
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          update_range(state, next, n * w / workers, n * (w + 1) / workers, stream);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  } else {
    update_range(state, next, 0, n, stream);
  }
  CoupledState after{std::move(next), state.time + 1};
  if (options_.certified) check_order(state, after);
  state = std::move(after);
  if (monitors) observe(state, *monitors);
}

MonitorReport CoupledDynamics::new_report() const {
  MonitorReport r;
  r.components = layouts_.size();
  r.coalescence.resize(r.components * (r.components - 1) / 2);
  return r;
}

void CoupledDynamics::observe(const CoupledState& state, MonitorReport& report) const {
  const std::size_t n_comp = state.components.size();
  const bool is_ordered = ordered(state);
  if (!is_ordered && report.order_ok) {
    report.order_ok = false;
    report.first_order_violation = state.time;
  }
  for (std::size_t i = 0; i < n_comp; ++i) {
    for (std::size_t j = i + 1; j < n_comp; ++j) {
      auto& slot = report.coalescence[report.pair_index(i, j)];
      const bool equal = state.components[i] == state.components[j];
      if (equal && !slot) slot = state.time;
      if (!equal && slot) report.coalescence_permanent = false;
      if (equal && is_ordered) {
        for (std::size_t m = i + 1; m < j; ++m)
          if (state.components[m] != state.components[i]) report.squeeze_ok = false;
      }
    }
  }
  ++report.observations;
}

std::size_t CoupledDynamics::probe_site() const {
  auto o = volume_.find(Coord{0, 0, 0});
  return o ? *o : 0;
}

RunResult run_coupled(const CoupledDynamics& system, std::vector<std::vector<Spin>> initial,
                      const RunOptions& options) {
  if (options.stride == 0) throw InvalidInput("stride must be positive");
  const UniformStream stream(options.seed, options.stream_id);
  RunResult result;
  result.report = system.new_report();
  CoupledState state = system.initial_state(std::move(initial));
  const std::size_t probe = system.probe_site();
  const std::size_t last = state.components.size() - 1;

  auto record = [&] {
    result.site0_disagreement.push_back(state.components[0][probe] != state.components[last][probe]);
    if (state.time % options.stride != 0 && state.time != options.steps) return;
    const bool ok = system.ordered(state);
    std::size_t coalesced = 0;
    for (std::size_t i = 0; i <= last; ++i)
      for (std::size_t j = i + 1; j <= last; ++j) coalesced += state.components[i] == state.components[j];
    for (std::size_t c = 0; c <= last; ++c)
      result.rows.push_back({state.time, c, state.components[c][probe], ok, coalesced});
  };

  system.observe(state, result.report);
  record();
  for (std::uint64_t n = 0; n < options.steps; ++n) {
    system.step(state, stream, &result.report);
    record();
  }
  result.final_state = std::move(state);
  return result;
}

void write_trajectory_csv(std::ostream& out, const RunResult& result, const SpinPoset& spin) {
  out << "n,component,site0_value,order_ok,coalesced_pairs\n";
  for (const auto& row : result.rows) {
    out << row.n << ',' << row.component << ',' << spin.label(row.site0) << ',' << (row.order_ok ? 1 : 0) << ','
        << row.coalesced_pairs << '\n';
  }
}

namespace {

template <class U>
void put_le(std::ostream& out, U value) {
  for (std::size_t i = 0; i < sizeof(U); ++i) out.put(static_cast<char>((value >> (8 * i)) & 0xFF));
}

template <class U>
U get_le(std::istream& in) {
  U value = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    const int c = in.get();
    if (c == std::char_traits<char>::eof()) throw InvalidInput("truncated snapshot");
    value |= static_cast<U>(static_cast<unsigned char>(c)) << (8 * i);
  }
  return value;
}

}  // namespace

void write_snapshot(std::ostream& out, const CoupledState& state) {
  out.write("PCAC", 4);
  put_le<std::uint32_t>(out, kSnapshotVersion);
  put_le<std::uint64_t>(out, state.time);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(state.components.size()));
  const std::uint64_t sites = state.components.empty() ? 0 : state.components.front().size();
  put_le<std::uint64_t>(out, sites);
  for (const auto& c : state.components) {
    if (c.size() != sites) throw InvalidInput("components of different sizes");
    out.write(reinterpret_cast<const char*>(c.data()), static_cast<std::streamsize>(c.size()));
  }
}

CoupledState read_snapshot(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::string(magic, 4) != "PCAC") throw InvalidInput("not a snapshot (bad magic)");
  const auto version = get_le<std::uint32_t>(in);
  if (version != kSnapshotVersion) throw InvalidInput("unsupported snapshot version " + std::to_string(version));
  CoupledState state;
  state.time = get_le<std::uint64_t>(in);
  const auto comps = get_le<std::uint32_t>(in);
  const auto sites = get_le<std::uint64_t>(in);
  if (sites > kDefaultMaxSites) throw CapExceeded("snapshot site count", sites, kDefaultMaxSites);
  state.components.assign(comps, std::vector<Spin>(sites));
  for (auto& c : state.components) {
    if (!in.read(reinterpret_cast<char*>(c.data()), static_cast<std::streamsize>(sites)))
      throw InvalidInput("truncated snapshot");
  }
  return state;
}

}  // namespace pcacouple
