#include "pcacouple/exact_kernel.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <limits>
#include <numeric>

#include "pcacouple/error.hpp"
#include "pcacouple/realizable.hpp"

namespace pcacouple {

namespace {

std::shared_ptr<const Dynamics> borrow(const Dynamics& d) {
  return std::shared_ptr<const Dynamics>(&d, [](const Dynamics*) {});
}

std::vector<Spin> decode_config(std::size_t index, std::size_t spins, std::size_t sites) {
  std::vector<Spin> c(sites);
  for (std::size_t i = sites; i-- > 0;) {
    c[i] = static_cast<Spin>(index % spins);
    index /= spins;
  }
  return c;
}

std::size_t encode_config(std::span<const Spin> c, std::size_t spins) {
  std::size_t idx = 0;
  for (Spin s : c) idx = idx * spins + s;
  return idx;
}

template <class T>
bool is_positive(const T& x) {
  return x > 0;
}

OrderMode default_mode(const SpinPoset& spin) {
  if (spin.is_chain()) return OrderMode::Total;
  if (std::holds_alternative<LinearOrderWitness>(classify_class_z(spin))) return OrderMode::ClassZ;
  return OrderMode::General;
}

}  // namespace

std::uint64_t state_count(std::size_t spins, std::size_t sites, std::uint64_t cap) {
  std::uint64_t count = 1;
  for (std::size_t i = 0; i < sites; ++i) {
    if (count > cap / std::max<std::size_t>(spins, 1)) {
      // Report the true size when it fits, otherwise saturate.
      long double full = 1;
      for (std::size_t j = 0; j < sites; ++j) full *= static_cast<long double>(spins);
      const auto requested = full > static_cast<long double>(std::numeric_limits<std::uint64_t>::max())
                                 ? std::numeric_limits<std::uint64_t>::max()
                                 : static_cast<std::uint64_t>(full);
      throw CapExceeded("configuration state count", requested, cap);
    }
    count *= spins;
  }
  if (count > cap) throw CapExceeded("configuration state count", count, cap);
  return count;
}

// ---------------------------------------------------------------------------
// ConfigMeasure

template <class T>
std::vector<Spin> ConfigMeasure<T>::config(std::size_t index) const {
  return decode_config(index, spin->size(), volume.size());
}

template <class T>
std::size_t ConfigMeasure<T>::index(std::span<const Spin> c) const {
  if (c.size() != volume.size()) throw InvalidInput("configuration has the wrong size");
  return encode_config(c, spin->size());
}

template <class T>
T ConfigMeasure<T>::total() const {
  T sum = T(0);
  for (const auto& w : weights) sum += w;
  return sum;
}

template <class T>
std::vector<T> ConfigMeasure<T>::site_marginal(std::size_t site) const {
  if (site >= volume.size()) throw InvalidInput("site out of range");
  std::vector<T> out(spin->size(), T(0));
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] == 0) continue;
    out[config(i)[site]] += weights[i];
  }
  return out;
}

template <class T>
ConfigMeasure<T> ConfigMeasure<T>::marginal(const Volume& target) const {
  std::vector<std::size_t> where;
  for (const auto& c : target.sites()) {
    auto k = volume.find(c);
    if (!k) throw InvalidInput("marginal target site " + to_string(c, volume.dim()) + " is not in the volume");
    where.push_back(*k);
  }
  const std::size_t n = spin->size();
  std::size_t target_states = 1;
  for (std::size_t i = 0; i < where.size(); ++i) target_states *= n;
  ConfigMeasure out{target, spin, std::vector<T>(target_states, T(0))};
  std::vector<Spin> sub(where.size());
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] == 0) continue;
    const auto c = config(i);
    for (std::size_t j = 0; j < where.size(); ++j) sub[j] = c[where[j]];
    out.weights[encode_config(sub, n)] += weights[i];
  }
  return out;
}

template <class T>
ConfigMeasure<T> ConfigMeasure<T>::condition(const std::vector<Coord>& coords, const std::vector<Spin>& values,
                                             const Volume& onto) const {
  if (coords.size() != values.size()) throw InvalidInput("conditioning sites and values differ in length");
  std::vector<std::size_t> where;
  for (const auto& c : coords) {
    auto k = volume.find(c);
    if (!k) throw InvalidInput("conditioning site " + to_string(c, volume.dim()) + " is not in the volume");
    where.push_back(*k);
  }
  ConfigMeasure restricted{volume, spin, std::vector<T>(weights.size(), T(0))};
  T mass = T(0);
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] == 0) continue;
    const auto c = config(i);
    bool match = true;
    for (std::size_t j = 0; j < where.size() && match; ++j) match = c[where[j]] == values[j];
    if (!match) continue;
    restricted.weights[i] = weights[i];
    mass += weights[i];
  }
  if (!(mass > 0)) throw InvalidInput("conditioning event has probability zero");
  for (auto& w : restricted.weights) w /= mass;
  return restricted.marginal(onto);
}

template <class T>
ConfigMeasure<T> ConfigMeasure<T>::point_mass(const Volume& volume, std::shared_ptr<const SpinPoset> spin,
                                              std::span<const Spin> config) {
  const std::size_t states = state_count(spin->size(), volume.size(), std::numeric_limits<std::uint64_t>::max());
  ConfigMeasure m{volume, spin, std::vector<T>(states, T(0))};
  m.weights[m.index(config)] = T(1);
  return m;
}

template struct ConfigMeasure<double>;
template struct ConfigMeasure<Rational>;

// ---------------------------------------------------------------------------
// ExactKernel

template <class T>
ExactKernel<T>::ExactKernel(const Dynamics& dynamics, Volume volume, const BoundaryCondition& tau,
                            std::uint64_t state_cap)
    : volume_(std::move(volume)), spin_(dynamics.base_rule().spin_ptr()) {
  spins_ = spin_->size();
  states_ = state_count(spins_, volume_.size(), state_cap);
  const ComponentLayout layout(ComponentSpec{borrow(dynamics), tau, std::nullopt}, volume_);
  const std::size_t sites = volume_.size();
  factors_.resize(states_ * sites * spins_);
  for (std::size_t from = 0; from < states_; ++from) {
    const auto config = decode_config(from, spins_, sites);
    for (std::size_t k = 0; k < sites; ++k) {
      const auto probs = layout.rule(k).template evaluate_as<T>(layout.pattern_index(k, config));
      std::copy(probs.begin(), probs.end(), factors_.begin() + static_cast<std::ptrdiff_t>((from * sites + k) * spins_));
    }
  }
}

template <class T>
T ExactKernel<T>::entry(std::size_t from, std::size_t to) const {
  const auto c = decode_config(to, spins_, volume_.size());
  T p = T(1);
  for (std::size_t k = 0; k < c.size(); ++k) p *= site_factor(from, k, c[k]);
  return p;
}

template <class T>
std::vector<T> ExactKernel<T>::row(std::size_t from) const {
  std::vector<T> out{T(1)};
  for (std::size_t k = 0; k < volume_.size(); ++k) {
    std::vector<T> next(out.size() * spins_);
    for (std::size_t i = 0; i < out.size(); ++i)
      for (std::size_t s = 0; s < spins_; ++s) next[i * spins_ + s] = out[i] * site_factor(from, k, static_cast<Spin>(s));
    out = std::move(next);
  }
  return out;
}

template <class T>
std::vector<T> ExactKernel<T>::apply(const std::vector<T>& mu) const {
  if (mu.size() != states_) throw InvalidInput("measure has the wrong number of states");
  std::vector<T> out(states_, T(0));
  for (std::size_t from = 0; from < states_; ++from) {
    if (mu[from] == 0) continue;
    const auto r = row(from);
    for (std::size_t to = 0; to < states_; ++to) out[to] += mu[from] * r[to];
  }
  return out;
}

template <class T>
std::vector<T> ExactKernel<T>::apply_function(const std::vector<T>& f) const {
  if (f.size() != states_) throw InvalidInput("function has the wrong number of states");
  std::vector<T> out(states_, T(0));
  for (std::size_t from = 0; from < states_; ++from) {
    const auto r = row(from);
    T acc = T(0);
    for (std::size_t to = 0; to < states_; ++to) acc += r[to] * f[to];
    out[from] = acc;
  }
  return out;
}

template <class T>
bool ExactKernel<T>::strictly_positive() const {
  return std::all_of(factors_.begin(), factors_.end(), [](const T& x) { return is_positive(x); });
}

template <class T>
ConfigMeasure<T> ExactKernel<T>::measure(std::vector<T> weights) const {
  if (weights.size() != states_) throw InvalidInput("measure has the wrong number of states");
  return ConfigMeasure<T>{volume_, spin_, std::move(weights)};
}

template <class T>
ConfigMeasure<T> ExactKernel<T>::point_mass(std::span<const Spin> config) const {
  return ConfigMeasure<T>::point_mass(volume_, spin_, config);
}

template class ExactKernel<double>;
template class ExactKernel<Rational>;

// ---------------------------------------------------------------------------
// Chain structure and stationary measures

std::string to_string(ChainStructure s) {
  switch (s) {
    case ChainStructure::StrictlyPositive: return "strictly-positive";
    case ChainStructure::IrreducibleAperiodic: return "irreducible-aperiodic";
    case ChainStructure::Reducible: return "reducible";
    case ChainStructure::Periodic: return "periodic";
  }
  return "unknown";
}

namespace {

template <class T>
std::vector<std::vector<std::size_t>> successors(const ExactKernel<T>& kernel) {
  std::vector<std::vector<std::size_t>> adj(kernel.states());
  for (std::size_t from = 0; from < kernel.states(); ++from) {
    const auto r = kernel.row(from);
    for (std::size_t to = 0; to < r.size(); ++to)
      if (r[to] > 0) adj[from].push_back(to);
  }
  return adj;
}

/// Tarjan's strongly connected components; component ids in reverse topological order.
std::vector<std::size_t> scc(const std::vector<std::vector<std::size_t>>& adj, std::size_t& count) {
  const std::size_t n = adj.size();
  constexpr std::size_t kUnset = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> index(n, kUnset), low(n, 0), comp(n, kUnset);
  std::vector<std::size_t> stack;
  std::vector<bool> on_stack(n, false);
  std::size_t next = 0;
  count = 0;
  struct Frame {
    std::size_t v;
    std::size_t edge;
  };
  for (std::size_t root = 0; root < n; ++root) {
    if (index[root] != kUnset) continue;
    std::vector<Frame> call{{root, 0}};
    index[root] = low[root] = next++;
    stack.push_back(root);
    on_stack[root] = true;
    while (!call.empty()) {
      Frame& f = call.back();
      if (f.edge < adj[f.v].size()) {
        const std::size_t w = adj[f.v][f.edge++];
        if (index[w] == kUnset) {
          index[w] = low[w] = next++;
          stack.push_back(w);
          on_stack[w] = true;
          call.push_back({w, 0});
        } else if (on_stack[w]) {
          low[f.v] = std::min(low[f.v], index[w]);
        }
        continue;
      }
      const std::size_t v = f.v;
      call.pop_back();
      if (!call.empty()) low[call.back().v] = std::min(low[call.back().v], low[v]);
      if (low[v] == index[v]) {
        std::size_t w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          comp[w] = count;
        } while (w != v);
        ++count;
      }
    }
  }
  return comp;
}

std::size_t period(const std::vector<std::vector<std::size_t>>& adj, const std::vector<std::size_t>& members) {
  constexpr std::size_t kUnset = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> level(adj.size(), kUnset);
  std::vector<bool> inside(adj.size(), false);
  for (auto v : members) inside[v] = true;
  std::deque<std::size_t> queue{members.front()};
  level[members.front()] = 0;
  std::size_t g = 0;
  while (!queue.empty()) {
    const std::size_t v = queue.front();
    queue.pop_front();
    for (auto w : adj[v]) {
      if (!inside[w]) continue;
      if (level[w] == kUnset) {
        level[w] = level[v] + 1;
        queue.push_back(w);
      } else {
        const auto diff = static_cast<long long>(level[v]) + 1 - static_cast<long long>(level[w]);
        g = std::gcd(g, static_cast<std::size_t>(diff < 0 ? -diff : diff));
      }
    }
  }
  return g;
}

struct ClosedClass {
  std::vector<std::size_t> members;
  std::size_t period = 1;
  ChainStructure structure = ChainStructure::IrreducibleAperiodic;
};

template <class T>
ClosedClass analyse(const ExactKernel<T>& kernel) {
  ClosedClass out;
  if (kernel.strictly_positive()) {
    out.members.resize(kernel.states());
    std::iota(out.members.begin(), out.members.end(), 0);
    out.structure = ChainStructure::StrictlyPositive;
    return out;
  }
  const auto adj = successors(kernel);
  std::size_t count = 0;
  const auto comp = scc(adj, count);
  std::vector<bool> closed(count, true);
  for (std::size_t v = 0; v < adj.size(); ++v)
    for (auto w : adj[v])
      if (comp[w] != comp[v]) closed[comp[v]] = false;
  std::size_t chosen = count;
  for (std::size_t v = 0; v < adj.size() && chosen == count; ++v)
    if (closed[comp[v]]) chosen = comp[v];
  for (std::size_t v = 0; v < adj.size(); ++v)
    if (comp[v] == chosen) out.members.push_back(v);
  out.period = period(adj, out.members);
  if (count > 1) {
    out.structure = ChainStructure::Reducible;
  } else if (out.period != 1) {
    out.structure = ChainStructure::Periodic;
  }
  return out;
}

std::vector<Rational> solve_exact(std::vector<std::vector<Rational>> a, std::vector<Rational> b) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    while (pivot < n && a[pivot][col] == 0) ++pivot;
    if (pivot == n) throw Error("singular stationary system");
    std::swap(a[pivot], a[col]);
    std::swap(b[pivot], b[col]);
    const Rational inv = 1 / a[col][col];
    for (std::size_t j = col; j < n; ++j) a[col][j] *= inv;
    b[col] *= inv;
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col || a[r][col] == 0) continue;
      const Rational factor = a[r][col];
      for (std::size_t j = col; j < n; ++j) a[r][j] -= factor * a[col][j];
      b[r] -= factor * b[col];
    }
  }
  return b;
}

}  // namespace

template <class T>
ChainStructure classify_chain(const ExactKernel<T>& kernel) {
  return analyse(kernel).structure;
}

template ChainStructure classify_chain<double>(const ExactKernel<double>&);
template ChainStructure classify_chain<Rational>(const ExactKernel<Rational>&);

template <class T>
ConfigMeasure<T> stationary_measure(const ExactKernel<T>& kernel, const StationaryOptions& options) {
  const ClosedClass cls = analyse(kernel);
  if (!options.force &&
      (cls.structure == ChainStructure::Reducible || cls.structure == ChainStructure::Periodic)) {
    throw InvalidInput("kernel is " + to_string(cls.structure) + "; no unique stationary measure (use force)");
  }
  const std::size_t m = cls.members.size();
  std::vector<T> weights(kernel.states(), T(0));
  if constexpr (is_exact_v<T>) {
    if (m > options.exact_state_cap) throw CapExceeded("exact stationary solve", m, options.exact_state_cap);
    // Rows: sum_i nu_i (P_ij - delta_ij) = 0 for j < m-1, and sum_i nu_i = 1.
    std::vector<std::vector<Rational>> a(m, std::vector<Rational>(m, Rational(0)));
    std::vector<Rational> b(m, Rational(0));
    for (std::size_t i = 0; i < m; ++i) {
      const auto r = kernel.row(cls.members[i]);
      for (std::size_t j = 0; j + 1 < m; ++j) a[j][i] = r[cls.members[j]];
      a[i][i] -= i + 1 < m ? 1 : 0;
    }
    for (std::size_t i = 0; i < m; ++i) a[m - 1][i] = 1;
    b[m - 1] = 1;
    const auto nu = solve_exact(std::move(a), std::move(b));
    for (std::size_t i = 0; i < m; ++i) weights[cls.members[i]] = nu[i];
  } else {
    const bool lazy = cls.period != 1;
    std::vector<std::vector<double>> rows(m);
    for (std::size_t i = 0; i < m; ++i) {
      const auto r = kernel.row(cls.members[i]);
      rows[i].resize(m);
      for (std::size_t j = 0; j < m; ++j) rows[i][j] = r[cls.members[j]];
    }
    std::vector<double> nu(m, 1.0 / static_cast<double>(m));
    bool converged = false;
    for (std::uint64_t it = 0; it < options.max_iterations; ++it) {
      std::vector<double> next(m, 0.0);
      for (std::size_t i = 0; i < m; ++i) {
        if (nu[i] == 0.0) continue;
        for (std::size_t j = 0; j < m; ++j) next[j] += nu[i] * rows[i][j];
      }
      if (lazy)
        for (std::size_t j = 0; j < m; ++j) next[j] = 0.5 * (next[j] + nu[j]);
      double sum = 0.0;
      for (double x : next) sum += x;
      double tv = 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        next[j] /= sum;
        tv += std::fabs(next[j] - nu[j]);
      }
      nu = std::move(next);
      if (0.5 * tv < options.tolerance) {
        converged = true;
        break;
      }
    }
    if (!converged) throw Error("power iteration did not converge");
    for (std::size_t i = 0; i < m; ++i) weights[cls.members[i]] = nu[i];
  }
  return kernel.measure(std::move(weights));
}

template ConfigMeasure<double> stationary_measure<double>(const ExactKernel<double>&, const StationaryOptions&);
template ConfigMeasure<Rational> stationary_measure<Rational>(const ExactKernel<Rational>&, const StationaryOptions&);

// ---------------------------------------------------------------------------
// Exact coupled chain

template <class T>
CoupledExactChain<T>::CoupledExactChain(Volume volume, std::vector<ComponentSpec> components,
                                        std::optional<OrderMode> mode, std::uint64_t state_cap)
    : volume_(std::move(volume)) {
  if (components.empty()) throw InvalidInput("coupling needs at least one component");
  for (const auto& spec : components) {
    if (!spec.dynamics) throw InvalidInput("component without dynamics");
    if (!(spec.dynamics->spin() == components.front().dynamics->spin()))
      throw InvalidInput("all components must share one spin space");
  }
  spin_ = components.front().dynamics->base_rule().spin_ptr();
  ctx_ = OrderContext::make(*spin_, mode.value_or(default_mode(*spin_)));
  config_states_ = state_count(spin_->size(), volume_.size(), state_cap);
  std::uint64_t tuples = 1;
  for (std::size_t c = 0; c < components.size(); ++c) {
    if (tuples > state_cap / config_states_)
      throw CapExceeded("coupled state count", std::numeric_limits<std::uint64_t>::max(), state_cap);
    tuples *= config_states_;
  }
  for (const auto& spec : components) layouts_.emplace_back(spec, volume_);
}

template <class T>
std::uint64_t CoupledExactChain<T>::encode(const std::vector<std::vector<Spin>>& configs) const {
  if (configs.size() != layouts_.size()) throw InvalidInput("need one configuration per component");
  std::uint64_t tuple = 0;
  for (std::size_t c = configs.size(); c-- > 0;) {
    if (configs[c].size() != volume_.size()) throw InvalidInput("configuration has the wrong size");
    tuple = tuple * config_states_ + encode_config(configs[c], spin_->size());
  }
  return tuple;
}

template <class T>
std::vector<std::vector<Spin>> CoupledExactChain<T>::decode(std::uint64_t tuple) const {
  std::vector<std::vector<Spin>> out;
  for (std::size_t c = 0; c < layouts_.size(); ++c) {
    out.push_back(decode_config(static_cast<std::size_t>(tuple % config_states_), spin_->size(), volume_.size()));
    tuple /= config_states_;
  }
  return out;
}

template <class T>
typename CoupledExactChain<T>::Distribution CoupledExactChain<T>::point_mass(
    std::vector<std::vector<Spin>> configs) const {
  if (configs.size() != layouts_.size()) throw InvalidInput("need one configuration per component");
  for (std::size_t c = 0; c < configs.size(); ++c) {
    if (configs[c].size() != volume_.size()) throw InvalidInput("configuration has the wrong size");
    layouts_[c].apply_frozen(configs[c]);
  }
  return Distribution{{encode(configs), T(1)}};
}

template <class T>
std::vector<std::pair<T, std::vector<Spin>>> CoupledExactChain<T>::site_factor(
    const std::vector<std::vector<Spin>>& configs, std::size_t site) const {
  const std::size_t n_comp = layouts_.size();
  std::vector<std::pair<T, std::vector<Spin>>> out;

  if (ctx_.mode() == OrderMode::General) {
    std::vector<std::size_t> active;
    std::vector<std::vector<Rational>> dists;
    for (std::size_t c = 0; c < n_comp; ++c) {
      if (!layouts_[c].active(site)) continue;
      active.push_back(c);
      dists.push_back(layouts_[c].rule(site).template evaluate_as<Rational>(
          layouts_[c].pattern_index(site, configs[c])));
    }
    std::vector<Spin> base(n_comp);
    for (std::size_t c = 0; c < n_comp; ++c) base[c] = configs[c][site];
    if (active.empty()) return {{T(1), base}};
    std::vector<std::string> labels;
    for (std::size_t i = 0; i < active.size(); ++i) labels.push_back(std::to_string(i));
    auto result = check_realizable_monotone(SpinPoset::chain(labels), dists, *spin_);
    const auto* feasible = std::get_if<RealizableFeasible>(&result);
    if (!feasible) throw InvalidInput("no ordered joint law for the current pattern tuple");
    for (std::size_t j = 0; j < feasible->maps.size(); ++j) {
      auto spins = base;
      for (std::size_t i = 0; i < active.size(); ++i) spins[active[i]] = feasible->maps[j][i];
      out.emplace_back(ScalarTraits<T>::from_rational(feasible->weights[j]), std::move(spins));
    }
    return out;
  }

  const auto seq = ctx_.sequence();
  const std::size_t levels = ctx_.level_count();
  std::vector<std::vector<T>> cdf(n_comp);
  std::vector<T> breaks;
  for (std::size_t c = 0; c < n_comp; ++c) {
    if (!layouts_[c].active(site)) {
      const Spin s = configs[c][site];
      for (std::size_t l = 0; l < levels; ++l) {
        bool reached = false;
        for (std::size_t m = 0; m <= l; ++m) reached = reached || seq[m] == s;
        cdf[c].push_back(reached ? T(1) : T(0));
      }
    } else {
      const auto probs =
          layouts_[c].rule(site).template evaluate_as<T>(layouts_[c].pattern_index(site, configs[c]));
      cdf[c] = distribution_of<T>(std::span<const T>(probs), ctx_).values;
    }
    for (const auto& f : cdf[c])
      if (f > 0) breaks.push_back(f);
  }
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
  T prev = T(0);
  for (const auto& b : breaks) {
    if (!(b > prev)) continue;
    std::vector<Spin> spins(n_comp);
    for (std::size_t c = 0; c < n_comp; ++c) {
      std::size_t l = 0;
      while (l + 1 < levels && cdf[c][l] < b) ++l;
      spins[c] = seq[l];
    }
    out.emplace_back(b - prev, std::move(spins));
    prev = b;
    if (!(prev < 1)) break;
  }
  return out;
}

template <class T>
typename CoupledExactChain<T>::Distribution CoupledExactChain<T>::step(const Distribution& dist) const {
  const std::size_t n_comp = layouts_.size();
  const std::size_t sites = volume_.size();
  const std::size_t spins = spin_->size();
  Distribution out;
  struct Partial {
    T weight;
    std::vector<std::uint64_t> index;
  };
  for (const auto& [tuple, mass] : dist) {
    if (mass == 0) continue;
    const auto configs = decode(tuple);
    std::vector<Partial> partial{{mass, std::vector<std::uint64_t>(n_comp, 0)}};
    for (std::size_t k = 0; k < sites; ++k) {
      const auto factor = site_factor(configs, k);
      std::vector<Partial> next;
      next.reserve(partial.size() * factor.size());
      for (const auto& p : partial) {
        for (const auto& [w, s] : factor) {
          Partial q{p.weight * w, p.index};
          for (std::size_t c = 0; c < n_comp; ++c) q.index[c] = q.index[c] * spins + s[c];
          next.push_back(std::move(q));
        }
      }
      partial = std::move(next);
    }
    for (const auto& p : partial) {
      std::uint64_t t = 0;
      for (std::size_t c = n_comp; c-- > 0;) t = t * config_states_ + p.index[c];
      auto [it, inserted] = out.emplace(t, p.weight);
      if (!inserted) it->second += p.weight;
    }
  }
  return out;
}

template <class T>
T CoupledExactChain<T>::disagreement(const Distribution& dist, std::size_t site, std::size_t i,
                                     std::size_t j) const {
  T sum = T(0);
  for (const auto& [tuple, mass] : dist) {
    const auto configs = decode(tuple);
    if (configs[i][site] != configs[j][site]) sum += mass;
  }
  return sum;
}

template <class T>
std::vector<T> CoupledExactChain<T>::component_law(const Distribution& dist, std::size_t i) const {
  std::vector<T> out(config_states_, T(0));
  for (const auto& [tuple, mass] : dist) {
    std::uint64_t t = tuple;
    for (std::size_t c = 0; c < i; ++c) t /= config_states_;
    out[static_cast<std::size_t>(t % config_states_)] += mass;
  }
  return out;
}

template class CoupledExactChain<double>;
template class CoupledExactChain<Rational>;

template <class T>
std::vector<T> exact_rho(const Dynamics& dynamics, const Volume& volume, const BoundaryCondition& tau,
                         std::size_t n_max, std::uint64_t state_cap) {
  const SpinPoset& spin = dynamics.spin();
  const auto bottom = BoundaryCondition::bottom(spin).fill;
  const auto top = BoundaryCondition::top(spin).fill;
  const auto dyn = borrow(dynamics);
  CoupledExactChain<T> chain(volume, {ComponentSpec{dyn, tau, std::nullopt}, ComponentSpec{dyn, tau, std::nullopt}},
                             std::nullopt, state_cap);
  auto dist = chain.point_mass({constant_config(volume, bottom), constant_config(volume, top)});
  auto probe = volume.find(Coord{0, 0, 0});
  const std::size_t site = probe ? *probe : 0;
  std::vector<T> rho;
  rho.push_back(chain.disagreement(dist, site, 0, 1));
  for (std::size_t n = 1; n <= n_max; ++n) {
    dist = chain.step(dist);
    rho.push_back(chain.disagreement(dist, site, 0, 1));
  }
  return rho;
}

template std::vector<double> exact_rho<double>(const Dynamics&, const Volume&, const BoundaryCondition&, std::size_t,
                                               std::uint64_t);
template std::vector<Rational> exact_rho<Rational>(const Dynamics&, const Volume&, const BoundaryCondition&,
                                                   std::size_t, std::uint64_t);

// ---------------------------------------------------------------------------
// Strassen feasibility by max-flow

namespace {

template <class T>
class MaxFlow {
 public:
  explicit MaxFlow(std::size_t nodes) : adj_(nodes) {}

  void add_edge(std::size_t from, std::size_t to, const T& cap) {
    adj_[from].push_back(edges_.size());
    edges_.push_back({to, cap});
    adj_[to].push_back(edges_.size());
    edges_.push_back({from, T(0)});
  }

  /// Edmonds-Karp. Residuals at or below `eps` count as saturated.
  T run(std::size_t s, std::size_t t, const T& eps) {
    T flow = T(0);
    constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
    while (true) {
      std::vector<std::size_t> via(adj_.size(), kNone);
      std::deque<std::size_t> queue{s};
      std::vector<bool> seen(adj_.size(), false);
      seen[s] = true;
      while (!queue.empty() && !seen[t]) {
        const std::size_t v = queue.front();
        queue.pop_front();
        for (auto e : adj_[v]) {
          const std::size_t w = edges_[e].to;
          if (seen[w] || !(edges_[e].cap > eps)) continue;
          seen[w] = true;
          via[w] = e;
          queue.push_back(w);
        }
      }
      if (!seen[t]) return flow;
      T push = edges_[via[t]].cap;
      for (std::size_t v = t; v != s; v = edges_[via[v] ^ 1].to) push = std::min(push, edges_[via[v]].cap);
      for (std::size_t v = t; v != s; v = edges_[via[v] ^ 1].to) {
        edges_[via[v]].cap -= push;
        edges_[via[v] ^ 1].cap += push;
      }
      flow += push;
    }
  }

 private:
  struct Edge {
    std::size_t to;
    T cap;
  };
  std::vector<std::vector<std::size_t>> adj_;
  std::vector<Edge> edges_;
};

}  // namespace

template <class T>
bool stochastic_leq_configs(const ConfigMeasure<T>& mu1, const ConfigMeasure<T>& mu2, double tolerance,
                            std::uint64_t state_cap) {
  if (!(*mu1.spin == *mu2.spin)) throw InvalidInput("measures live on different spin spaces");
  if (mu1.volume.sites() != mu2.volume.sites()) throw InvalidInput("measures live on different volumes");
  if (mu1.states() != mu2.states()) throw InvalidInput("measures have different state counts");
  if (mu1.states() > state_cap) throw CapExceeded("Strassen state count", mu1.states(), state_cap);
  const SpinPoset& spin = *mu1.spin;
  const T tol = ScalarTraits<T>::from_double(tolerance);
  const T total1 = mu1.total();
  const T total2 = mu2.total();
  if (scalar_abs(T(total1 - total2)) > tol) return false;

  std::vector<std::size_t> left, right;
  for (std::size_t i = 0; i < mu1.states(); ++i) {
    if (mu1.weights[i] > 0) left.push_back(i);
    if (mu2.weights[i] > 0) right.push_back(i);
  }
  std::vector<std::vector<Spin>> lc, rc;
  for (auto i : left) lc.push_back(mu1.config(i));
  for (auto j : right) rc.push_back(mu2.config(j));

  const std::size_t source = 0;
  const std::size_t sink = 1;
  MaxFlow<T> graph(2 + left.size() + right.size());
  for (std::size_t a = 0; a < left.size(); ++a) graph.add_edge(source, 2 + a, mu1.weights[left[a]]);
  for (std::size_t b = 0; b < right.size(); ++b) graph.add_edge(2 + left.size() + b, sink, mu2.weights[right[b]]);
  for (std::size_t a = 0; a < left.size(); ++a) {
    for (std::size_t b = 0; b < right.size(); ++b) {
      bool below = true;
      for (std::size_t k = 0; k < lc[a].size() && below; ++k) below = spin.leq(lc[a][k], rc[b][k]);
      if (below) graph.add_edge(2 + a, 2 + left.size() + b, mu1.weights[left[a]]);
    }
  }
  const T eps = is_exact_v<T> ? T(0) : ScalarTraits<T>::from_double(1e-300);
  const T flow = graph.run(source, sink, eps);
  if constexpr (is_exact_v<T>) {
    return tolerance == 0.0 ? flow == total1 : !(total1 - flow > tol);
  } else {
    return !(total1 - flow > tol);
  }
}

template bool stochastic_leq_configs<double>(const ConfigMeasure<double>&, const ConfigMeasure<double>&, double,
                                             std::uint64_t);
template bool stochastic_leq_configs<Rational>(const ConfigMeasure<Rational>&, const ConfigMeasure<Rational>&, double,
                                               std::uint64_t);

// ---------------------------------------------------------------------------
// Sub/super-DLR check

template <class T>
SubSuperReport check_sub_super_gibbs(const Dynamics& dynamics, const std::vector<Coord>& inner,
                                     const std::vector<Coord>& outer, const SubSuperOptions& options) {
  const int dim = dynamics.dim();
  const Volume inner_vol = Volume::from_sites(dim, inner);
  const Volume outer_vol = Volume::from_sites(dim, outer);
  std::vector<Coord> rest;
  for (const auto& c : inner)
    if (!outer_vol.contains(c)) throw InvalidInput("inner volume is not contained in the outer volume");
  for (const auto& c : outer)
    if (!inner_vol.contains(c)) rest.push_back(c);

  const SpinPoset& spin = dynamics.spin();
  const auto bottom = BoundaryCondition::bottom(spin);
  const auto top = BoundaryCondition::top(spin);
  auto stationary = [&](const Volume& v, const BoundaryCondition& tau) {
    ExactKernel<T> kernel(dynamics, v, tau, options.state_cap);
    return stationary_measure(kernel, options.stationary);
  };
  const auto nu_in_bottom = stationary(inner_vol, bottom);
  const auto nu_in_top = stationary(inner_vol, top);
  const auto nu_out_bottom = stationary(outer_vol, bottom);
  const auto nu_out_top = stationary(outer_vol, top);

  SubSuperReport report;
  report.inner = inner;
  report.outer = outer;
  const std::size_t conditionings = state_count(spin.size(), rest.size(), options.state_cap);
  for (std::size_t idx = 0; idx < conditionings; ++idx) {
    SubSuperEntry e;
    e.conditioning = decode_config(idx, spin.size(), rest.size());
    if (!rest.empty()) {
      const Volume rest_vol = Volume::from_sites(dim, rest);
      const auto pb = nu_out_bottom.marginal(rest_vol);
      const auto pt = nu_out_top.marginal(rest_vol);
      e.conditioning_probability_bottom = ScalarTraits<T>::to_double(pb.weights[pb.index(e.conditioning)]);
      e.conditioning_probability_top = ScalarTraits<T>::to_double(pt.weights[pt.index(e.conditioning)]);
    } else {
      e.conditioning_probability_bottom = e.conditioning_probability_top = 1.0;
    }
    const auto cond_bottom = nu_out_bottom.condition(rest, e.conditioning, inner_vol);
    const auto cond_top = nu_out_top.condition(rest, e.conditioning, inner_vol);
    e.lower_ok = stochastic_leq_configs(nu_in_bottom, cond_bottom, options.tolerance, options.state_cap);
    e.upper_ok = stochastic_leq_configs(cond_top, nu_in_top, options.tolerance, options.state_cap);
    e.reversed_upper = stochastic_leq_configs(nu_in_top, cond_top, options.tolerance, options.state_cap);
    e.reversed_lower = stochastic_leq_configs(cond_bottom, nu_in_bottom, options.tolerance, options.state_cap);
    report.all_ok = report.all_ok && e.lower_ok && e.upper_ok;
    report.entries.push_back(std::move(e));
  }
  return report;
}

template SubSuperReport check_sub_super_gibbs<double>(const Dynamics&, const std::vector<Coord>&,
                                                      const std::vector<Coord>&, const SubSuperOptions&);
template SubSuperReport check_sub_super_gibbs<Rational>(const Dynamics&, const std::vector<Coord>&,
                                                        const std::vector<Coord>&, const SubSuperOptions&);

// ---------------------------------------------------------------------------
// Spatial and temporal limits

namespace {

template <class T>
std::vector<double> to_doubles(const std::vector<T>& v) {
  std::vector<double> out;
  for (const auto& x : v) out.push_back(ScalarTraits<T>::to_double(x));
  return out;
}

template <class T>
double tv_distance(const std::vector<T>& a, const std::vector<T>& b) {
  T sum = T(0);
  for (std::size_t i = 0; i < a.size(); ++i) sum += scalar_abs(T(a[i] - b[i]));
  return ScalarTraits<T>::to_double(sum) / 2;
}

}  // namespace

template <class T>
LimitReport limit_sandwich_report(const Dynamics& dynamics, const std::vector<int>& L_list, const Volume& volume,
                                  std::size_t n_max, const LimitOptions& options) {
  const SpinPoset& spin = dynamics.spin();
  const auto bottom = BoundaryCondition::bottom(spin);
  const auto top = BoundaryCondition::top(spin);
  LimitReport report;

  std::optional<ConfigMeasure<T>> prev_top, prev_bottom;
  int prev_L = -1;
  for (int L : L_list) {
    if (L <= prev_L) throw InvalidInput("radii must be strictly increasing");
    const Volume ball = Volume::ball(dynamics.dim(), L);
    ExactKernel<T> k_top(dynamics, ball, top, options.state_cap);
    ExactKernel<T> k_bottom(dynamics, ball, bottom, options.state_cap);
    auto nu_top = stationary_measure(k_top, options.stationary);
    auto nu_bottom = stationary_measure(k_bottom, options.stationary);
    LimitSpatialRow row;
    row.L = L;
    row.sites = ball.size();
    const auto mt = nu_top.site_marginal(ball.origin());
    const auto mb = nu_bottom.site_marginal(ball.origin());
    row.top_site0 = to_doubles(mt);
    row.bottom_site0 = to_doubles(mb);
    row.gap = tv_distance(mt, mb);
    if (prev_top) {
      row.top_projection_ok =
          stochastic_leq_configs(nu_top.marginal(prev_top->volume), *prev_top, options.tolerance, options.state_cap);
      row.bottom_projection_ok = stochastic_leq_configs(*prev_bottom, nu_bottom.marginal(prev_bottom->volume),
                                                        options.tolerance, options.state_cap);
    }
    report.spatial_monotone = report.spatial_monotone && row.top_projection_ok && row.bottom_projection_ok;
    report.spatial.push_back(std::move(row));
    prev_top = std::move(nu_top);
    prev_bottom = std::move(nu_bottom);
    prev_L = L;
  }

  ExactKernel<T> k_top(dynamics, volume, top, options.state_cap);
  ExactKernel<T> k_bottom(dynamics, volume, bottom, options.state_cap);
  const std::size_t probe = volume.find(Coord{0, 0, 0}).value_or(0);
  auto mu_top = k_top.point_mass(constant_config(volume, top.fill));
  auto mu_bottom = k_bottom.point_mass(constant_config(volume, bottom.fill));
  for (std::size_t n = 0; n <= n_max; ++n) {
    LimitTemporalRow row;
    row.n = n;
    if (n > 0) {
      auto next_top = k_top.measure(k_top.apply(mu_top.weights));
      auto next_bottom = k_bottom.measure(k_bottom.apply(mu_bottom.weights));
      row.top_decreasing = stochastic_leq_configs(next_top, mu_top, options.tolerance, options.state_cap);
      row.bottom_increasing = stochastic_leq_configs(mu_bottom, next_bottom, options.tolerance, options.state_cap);
      mu_top = std::move(next_top);
      mu_bottom = std::move(next_bottom);
    }
    const auto mt = mu_top.site_marginal(probe);
    const auto mb = mu_bottom.site_marginal(probe);
    row.top_site0 = to_doubles(mt);
    row.bottom_site0 = to_doubles(mb);
    row.gap = tv_distance(mt, mb);
    report.temporal_monotone = report.temporal_monotone && row.top_decreasing && row.bottom_increasing;
    report.temporal.push_back(std::move(row));
  }
  return report;
}

template LimitReport limit_sandwich_report<double>(const Dynamics&, const std::vector<int>&, const Volume&,
                                                   std::size_t, const LimitOptions&);
template LimitReport limit_sandwich_report<Rational>(const Dynamics&, const std::vector<int>&, const Volume&,
                                                     std::size_t, const LimitOptions&);

}  // namespace pcacouple
