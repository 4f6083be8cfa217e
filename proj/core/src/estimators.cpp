#include "pcacouple/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <thread>

#include "pcacouple/error.hpp"

namespace pcacouple {

namespace {

std::shared_ptr<const Dynamics> borrow(const Dynamics& d) {
  return std::shared_ptr<const Dynamics>(&d, [](const Dynamics*) {});
}

std::size_t pow_size(std::size_t base, std::size_t exp) {
  std::size_t p = 1;
  for (std::size_t i = 0; i < exp; ++i) p *= base;
  return p;
}

std::vector<Spin> decode(std::size_t index, std::size_t spins, std::size_t length) {
  std::vector<Spin> c(length);
  for (std::size_t i = length; i-- > 0;) {
    c[i] = static_cast<Spin>(index % spins);
    index /= spins;
  }
  return c;
}

constexpr std::size_t kMaxSupport = 20;

}  // namespace

void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& job) {
  const std::size_t workers = std::min<std::size_t>(std::max(1U, threads), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) job(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < count; i += workers) job(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

// ---------------------------------------------------------------------------
// LocalFunction

LocalFunction LocalFunction::tabulate(int dim, std::vector<Coord> support, std::shared_ptr<const SpinPoset> spin,
                                      const Evaluator& f) {
  if (!spin) throw InvalidInput("local function without spin space");
  if (support.size() > kMaxSupport) throw CapExceeded("local function support", support.size(), kMaxSupport);
  Neighborhood::from_offsets(dim, support);  // validates dimension and distinctness
  LocalFunction out;
  out.dim_ = dim;
  out.support_ = std::move(support);
  out.spin_ = std::move(spin);
  const std::size_t count = pow_size(out.spin_->size(), out.support_.size());
  out.values_.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto local = decode(i, out.spin_->size(), out.support_.size());
    out.values_.push_back(f(local));
  }
  return out;
}

LocalFunction LocalFunction::spin_product(int dim, std::vector<Coord> sites, std::shared_ptr<const SpinPoset> spin) {
  std::vector<double> numeric;
  for (std::size_t s = 0; s < spin->size(); ++s) numeric.push_back(spin->numeric_value(static_cast<Spin>(s)));
  return tabulate(dim, std::move(sites), spin, [numeric](std::span<const Spin> local) {
    double p = 1.0;
    for (Spin s : local) p *= numeric[s];
    return p;
  });
}

LocalFunction LocalFunction::constant(int dim, std::shared_ptr<const SpinPoset> spin, double value) {
  return tabulate(dim, {}, std::move(spin), [value](std::span<const Spin>) { return value; });
}

double LocalFunction::operator()(std::span<const Spin> local) const {
  if (local.size() != support_.size()) throw InvalidInput("local pattern has the wrong length");
  std::size_t idx = 0;
  for (Spin s : local) idx = idx * spin_->size() + s;
  return values_[idx];
}

std::vector<std::size_t> LocalFunction::resolve(const Volume& volume) const {
  if (volume.dim() != dim_) throw InvalidInput("local function and volume dimensions differ");
  std::vector<std::size_t> where;
  for (const auto& c : support_) {
    auto k = volume.find(c);
    if (!k) throw InvalidInput("support site " + to_string(c, dim_) + " is outside the volume");
    where.push_back(*k);
  }
  return where;
}

double LocalFunction::evaluate_resolved(const std::vector<std::size_t>& where, std::span<const Spin> config) const {
  std::size_t idx = 0;
  for (auto k : where) idx = idx * spin_->size() + config[k];
  return values_[idx];
}

double LocalFunction::evaluate(const Volume& volume, std::span<const Spin> config) const {
  if (config.size() != volume.size()) throw InvalidInput("configuration has the wrong size");
  return evaluate_resolved(resolve(volume), config);
}

bool LocalFunction::increasing() const {
  const std::size_t n = spin_->size();
  const std::size_t m = support_.size();
  for (std::size_t a = 0; a < values_.size(); ++a) {
    const auto ca = decode(a, n, m);
    // Covers of the product order suffice: raise one coordinate along one Hasse edge.
    for (std::size_t k = 0; k < m; ++k) {
      for (Spin up : spin_->upper_covers(ca[k])) {
        auto cb = ca;
        cb[k] = up;
        std::size_t b = 0;
        for (Spin s : cb) b = b * n + s;
        if (values_[a] > values_[b]) return false;
      }
    }
  }
  return true;
}

VariationNorm variation_norm(const LocalFunction& f) {
  const std::size_t n = f.spin().size();
  const std::size_t m = f.support().size();
  VariationNorm out;
  out.per_site.assign(m, 0.0);
  const auto& values = f.values();
  for (std::size_t a = 0; a < values.size(); ++a) {
    const auto ca = decode(a, n, m);
    std::size_t weight = 1;
    for (std::size_t k = m; k-- > 0;) {
      for (std::size_t s = 0; s < n; ++s) {
        if (s == ca[k]) continue;
        const std::size_t b = a - ca[k] * weight + s * weight;
        out.per_site[k] = std::max(out.per_site[k], std::fabs(values[a] - values[b]));
      }
      weight *= n;
    }
  }
  for (double v : out.per_site) out.triple_norm += v;
  return out;
}

// ---------------------------------------------------------------------------
// rho estimation

namespace {

RhoEstimate summarize(std::size_t n, std::uint64_t hits, std::uint64_t replicas) {
  RhoEstimate e;
  e.n = n;
  e.replicas = replicas;
  e.disagreements = hits;
  const double r = static_cast<double>(replicas);
  const double p = replicas ? static_cast<double>(hits) / r : 0.0;
  e.estimate = p;
  e.standard_error = replicas ? std::sqrt(p * (1 - p) / r) : 0.0;
  constexpr double z = 1.959963984540054;
  if (replicas && p < 5.0 / r) {
    e.wilson = true;
    const double denom = 1 + z * z / r;
    const double centre = (p + z * z / (2 * r)) / denom;
    const double half = z * std::sqrt(p * (1 - p) / r + z * z / (4 * r * r)) / denom;
    e.ci_low = std::max(0.0, centre - half);
    e.ci_high = std::min(1.0, centre + half);
  } else {
    e.ci_low = std::max(0.0, p - z * e.standard_error);
    e.ci_high = std::min(1.0, p + z * e.standard_error);
  }
  return e;
}

}  // namespace

std::vector<RhoEstimate> estimate_rho(const Dynamics& dynamics, const Volume& volume, const BoundaryCondition& tau,
                                      std::size_t n_max, const EstimateOptions& options) {
  const auto dyn = borrow(dynamics);
  const SpinPoset& spin = dynamics.spin();
  const Spin bottom = BoundaryCondition::bottom(spin).fill;
  const Spin top = BoundaryCondition::top(spin).fill;
  CouplingOptions copts;
  copts.certified = true;
  const CoupledDynamics system(volume, {ComponentSpec{dyn, tau, std::nullopt}, ComponentSpec{dyn, tau, std::nullopt}},
                               copts);
  const std::size_t probe = system.probe_site();
  const auto initial = system.initial_state({constant_config(volume, bottom), constant_config(volume, top)});

  std::vector<std::uint8_t> hits(options.replicas * (n_max + 1), 0);
  parallel_for(options.replicas, options.threads, [&](std::size_t r) {
    const UniformStream stream(options.seed, static_cast<std::uint32_t>(r));
    CoupledState state = initial;
    std::uint8_t* row = hits.data() + r * (n_max + 1);
    row[0] = state.components[0][probe] != state.components[1][probe];
    for (std::size_t n = 1; n <= n_max; ++n) {
      if (state.components[0] == state.components[1]) break;
      system.step(state, stream);
      row[n] = state.components[0][probe] != state.components[1][probe];
    }
  });

  std::vector<RhoEstimate> out;
  for (std::size_t n = 0; n <= n_max; ++n) {
    std::uint64_t count = 0;
    for (std::uint64_t r = 0; r < options.replicas; ++r) count += hits[r * (n_max + 1) + n];
    out.push_back(summarize(n, count, options.replicas));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Ergodicity bound

namespace {

template <class T>
BoundReport exact_bound(const Dynamics& dynamics, const Volume& torus, const LocalFunction& f,
                        const std::vector<std::size_t>& n_list, const BoundOptions& options, double triple) {
  const auto bottom = BoundaryCondition::bottom(dynamics.spin());
  ExactKernel<T> kernel(dynamics, torus, bottom, options.state_cap);
  const auto nu = stationary_measure(kernel, options.stationary);
  const auto where = f.resolve(torus);
  std::vector<T> g(kernel.states());
  T nu_f = T(0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    g[i] = ScalarTraits<T>::from_double(f.evaluate_resolved(where, nu.config(i)));
    nu_f += nu.weights[i] * g[i];
  }
  const std::size_t n_max = n_list.empty() ? 0 : *std::max_element(n_list.begin(), n_list.end());
  const auto rho = exact_rho<T>(dynamics, torus, bottom, n_max, options.state_cap);

  BoundReport report;
  report.exact = true;
  report.triple_norm = triple;
  report.nu_f = ScalarTraits<T>::to_double(nu_f);
  std::vector<double> lhs(n_max + 1, 0.0);
  for (std::size_t n = 0; n <= n_max; ++n) {
    if (n > 0) g = kernel.apply_function(g);
    T worst = T(0);
    for (const auto& x : g) worst = std::max(worst, scalar_abs(T(x - nu_f)));
    lhs[n] = ScalarTraits<T>::to_double(worst);
  }
  for (auto n : n_list) {
    BoundRow row;
    row.n = n;
    row.lhs = lhs[n];
    row.rho = ScalarTraits<T>::to_double(rho[n]);
    row.rhs = 2 * triple * row.rho;
    row.ok = row.lhs <= row.rhs + options.tolerance;
    report.all_ok = report.all_ok && row.ok;
    report.rows.push_back(row);
  }
  return report;
}

BoundReport monte_carlo_bound(const Dynamics& dynamics, const Volume& torus, const LocalFunction& f,
                              const std::vector<std::size_t>& n_list, const BoundOptions& options, double triple) {
  const auto dyn = borrow(dynamics);
  const SpinPoset& spin = dynamics.spin();
  const auto bottom = BoundaryCondition::bottom(spin);
  const auto top = BoundaryCondition::top(spin);
  const std::size_t n_max = n_list.empty() ? 0 : *std::max_element(n_list.begin(), n_list.end());
  const auto where = f.resolve(torus);
  const std::uint64_t R = options.replicas;

  // Initial configurations: bottom, top, then uniform ones from a dedicated stream.
  std::vector<std::vector<Spin>> starts{constant_config(torus, bottom.fill), constant_config(torus, top.fill)};
  const UniformStream init_stream(options.seed, 0xFFFFFFFFU);
  for (std::size_t i = 0; i < options.random_initial; ++i) {
    std::vector<Spin> c(torus.size());
    for (std::size_t k = 0; k < c.size(); ++k)
      c[k] = static_cast<Spin>(std::min<double>(init_stream.draw(i, k) * spin.size(), spin.size() - 1));
    starts.push_back(std::move(c));
  }

  // Single-chain runs: sums and squares of f at each n, per start.
  const CoupledDynamics single(torus, {ComponentSpec{dyn, bottom, std::nullopt}});
  std::vector<double> fsum(starts.size() * (n_max + 1), 0.0), fsq(starts.size() * (n_max + 1), 0.0);
  std::vector<double> per_replica(R * (n_max + 1));
  for (std::size_t s = 0; s < starts.size(); ++s) {
    const auto init = single.initial_state({starts[s]});
    parallel_for(R, options.threads, [&](std::size_t r) {
      const UniformStream stream(options.seed, static_cast<std::uint32_t>(1 + s * R + r));
      CoupledState state = init;
      per_replica[r * (n_max + 1)] = f.evaluate_resolved(where, state.components[0]);
      for (std::size_t n = 1; n <= n_max; ++n) {
        single.step(state, stream);
        per_replica[r * (n_max + 1) + n] = f.evaluate_resolved(where, state.components[0]);
      }
    });
    for (std::uint64_t r = 0; r < R; ++r)
      for (std::size_t n = 0; n <= n_max; ++n) {
        const double v = per_replica[r * (n_max + 1) + n];
        fsum[s * (n_max + 1) + n] += v;
        fsq[s * (n_max + 1) + n] += v * v;
      }
  }

  // nu(f) from long runs started at top.
  std::vector<double> burn(R);
  {
    const auto init = single.initial_state({starts[1]});
    parallel_for(R, options.threads, [&](std::size_t r) {
      const UniformStream stream(options.seed ^ 0x9E3779B97F4A7C15ULL, static_cast<std::uint32_t>(r));
      CoupledState state = init;
      for (std::size_t n = 0; n < options.burn_in; ++n) single.step(state, stream);
      burn[r] = f.evaluate_resolved(where, state.components[0]);
    });
  }
  double nu_sum = 0, nu_sq = 0;
  for (double v : burn) {
    nu_sum += v;
    nu_sq += v * v;
  }
  const double rd = static_cast<double>(R);
  const double nu_f = nu_sum / rd;
  const double nu_se = std::sqrt(std::max(0.0, nu_sq / rd - nu_f * nu_f) / rd);

  EstimateOptions eopts{R, options.seed ^ 0xD1B54A32D192ED03ULL, options.threads};
  const auto rho = estimate_rho(dynamics, torus, bottom, n_max, eopts);

  BoundReport report;
  report.exact = false;
  report.triple_norm = triple;
  report.nu_f = nu_f;
  for (auto n : n_list) {
    BoundRow row;
    row.n = n;
    for (std::size_t s = 0; s < starts.size(); ++s) {
      const double mean = fsum[s * (n_max + 1) + n] / rd;
      const double var = std::max(0.0, fsq[s * (n_max + 1) + n] / rd - mean * mean);
      const double dev = std::fabs(mean - nu_f);
      if (dev >= row.lhs) {
        row.lhs = dev;
        row.lhs_standard_error = std::sqrt(var / rd) + nu_se;
      }
    }
    row.rho = rho[n].estimate;
    row.rho_standard_error = rho[n].standard_error;
    row.rhs = 2 * triple * row.rho;
    // Sampling noise on both sides is allowed up to three standard errors.
    row.ok = row.lhs <= row.rhs + options.tolerance +
                            3 * (row.lhs_standard_error + 2 * triple * row.rho_standard_error);
    report.all_ok = report.all_ok && row.ok;
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace

BoundReport ergodicity_bound_check(const Dynamics& dynamics, const Volume& torus, const LocalFunction& f,
                                   const std::vector<std::size_t>& n_list, const BoundOptions& options) {
  if (!torus.periodic()) throw InvalidInput("the ergodicity bound check needs a torus");
  if (!dynamics.translation_invariant()) throw InvalidInput("the ergodicity bound check needs translation-invariant dynamics");
  const double triple = variation_norm(f).triple_norm;
  bool exact = options.exact;
  if (exact) {
    try {
      state_count(dynamics.spin().size(), torus.size(), options.state_cap);
      // The pair coupling squares the state count.
      state_count(dynamics.spin().size(), 2 * torus.size(), options.state_cap);
    } catch (const CapExceeded&) {
      if (!options.allow_monte_carlo) throw;
      exact = false;
    }
  }
  if (!exact) return monte_carlo_bound(dynamics, torus, f, n_list, options, triple);
  if (options.arithmetic == Arithmetic::Exact)
    return exact_bound<Rational>(dynamics, torus, f, n_list, options, triple);
  return exact_bound<double>(dynamics, torus, f, n_list, options, triple);
}

// ---------------------------------------------------------------------------
// Sandwich check

SandwichReport sandwich_check(const Dynamics& dynamics, const Volume& torus, const std::vector<Coord>& lambda,
                              const std::vector<Spin>& xi, std::size_t steps, const LocalFunction& f,
                              const SandwichOptions& options) {
  if (!torus.periodic()) throw InvalidInput("the sandwich check needs a torus for the middle chain");
  if (xi.size() != torus.size()) throw InvalidInput("initial configuration has the wrong size");
  if (lambda.empty()) throw InvalidInput("Lambda is empty");
  if (!f.increasing()) throw InvalidInput("f is not increasing");
  const SpinPoset& spin = dynamics.spin();
  for (Spin s : xi)
    if (s >= spin.size()) throw InvalidInput("initial configuration holds an unknown spin");

  // Margin: in every direction the torus exceeds Lambda by margin_radii radii.
  // Lambda coordinates may be negative; they wrap like any torus coordinate.
  const int dim = torus.dim();
  const int radius = dynamics.radius();
  int margin = std::numeric_limits<int>::max();
  for (int d = 0; d < dim; ++d) {
    int lo = std::numeric_limits<int>::max(), hi = std::numeric_limits<int>::min();
    for (const auto& c : lambda) {
      lo = std::min(lo, c[d]);
      hi = std::max(hi, c[d]);
    }
    margin = std::min(margin, torus.sides()[d] - (hi - lo + 1));
  }
  if (margin < options.margin_radii * radius) {
    throw InvalidInput("torus too small: margin " + std::to_string(margin) + " is below " +
                       std::to_string(options.margin_radii) + " neighbourhood radii (" +
                       std::to_string(options.margin_radii * radius) + ")");
  }

  const auto dyn = borrow(dynamics);
  const auto bottom = BoundaryCondition::bottom(spin);
  const auto top = BoundaryCondition::top(spin);
  const ComponentSpec lower{dyn, bottom, lambda};
  const ComponentSpec full{dyn, bottom, std::nullopt};
  const ComponentSpec upper{dyn, top, lambda};
  const CoupledDynamics triple(torus, {lower, full, upper});
  const CoupledDynamics six(torus, {lower, full, full, full, full, upper});

  const auto all_bottom = constant_config(torus, bottom.fill);
  const auto all_top = constant_config(torus, top.fill);
  auto xi_top = xi;
  {
    std::vector<std::uint8_t> inside(torus.size(), 0);
    for (const auto& c : lambda) inside[*torus.find(c)] = 1;
    for (std::size_t k = 0; k < xi_top.size(); ++k)
      if (!inside[k]) xi_top[k] = top.fill;
  }
  const auto triple_init = triple.initial_state({xi, xi, xi});
  const auto six_init = six.initial_state({all_bottom, all_bottom, xi, xi_top, all_top, all_top});
  const auto where = f.resolve(torus);
  const std::size_t probe = triple.probe_site();

  const std::size_t width = steps + 1;
  const std::uint64_t R = options.replicas;
  std::vector<double> fvals(R * width * 3);
  std::vector<std::uint8_t> flags(R * width * 3);  // inner, extremal, pinned disagreement
  std::vector<std::uint8_t> ordered_at(R * width, 1), contain_ok(R, 1);

  parallel_for(R, options.threads, [&](std::size_t r) {
    const UniformStream stream(options.seed, static_cast<std::uint32_t>(r));
    CoupledState a = triple_init;
    CoupledState b = six_init;
    for (std::size_t n = 0; n <= steps; ++n) {
      if (n > 0) {
        triple.step(a, stream);
        six.step(b, stream);
      }
      if (!triple.ordered(a) || !six.ordered(b)) ordered_at[r * width + n] = 0;
      for (std::size_t c = 0; c < 3; ++c) fvals[(r * width + n) * 3 + c] = f.evaluate_resolved(where, a.components[c]);
      const auto& s = b.components;
      const bool inner = s[2][probe] != s[3][probe];
      const bool extremal = s[1][probe] != s[4][probe];
      const bool pinned = s[0][probe] != s[5][probe];
      flags[(r * width + n) * 3 + 0] = inner;
      flags[(r * width + n) * 3 + 1] = extremal;
      flags[(r * width + n) * 3 + 2] = pinned;
      if ((inner && !extremal) || (extremal && !pinned)) contain_ok[r] = 0;
    }
  });

  SandwichReport report;
  report.replicas = R;
  report.margin = margin;
  for (std::uint64_t r = 0; r < R; ++r) report.containment_ok = report.containment_ok && contain_ok[r];
  const double rd = static_cast<double>(std::max<std::uint64_t>(R, 1));
  for (std::size_t n = 0; n <= steps; ++n) {
    double e[3] = {0, 0, 0};
    std::uint64_t cnt[3] = {0, 0, 0};
    bool pathwise = true;
    for (std::uint64_t r = 0; r < R; ++r) {
      pathwise = pathwise && ordered_at[r * width + n];
      for (std::size_t c = 0; c < 3; ++c) {
        e[c] += fvals[(r * width + n) * 3 + c];
        cnt[c] += flags[(r * width + n) * 3 + c];
      }
    }
    SandwichRow row;
    row.n = n;
    row.e_minus = e[0] / rd;
    row.e_mid = e[1] / rd;
    row.e_plus = e[2] / rd;
    report.pathwise_order_ok = report.pathwise_order_ok && pathwise;
    row.ordered = pathwise && row.e_minus <= row.e_mid + 1e-12 && row.e_mid <= row.e_plus + 1e-12;
    row.rho_inner = static_cast<double>(cnt[0]) / rd;
    row.rho_extremal = static_cast<double>(cnt[1]) / rd;
    row.rho_pinned = static_cast<double>(cnt[2]) / rd;
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace pcacouple
