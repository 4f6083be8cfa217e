// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "pcacouple/coupling.hpp"
#include "pcacouple/error.hpp"
#include "pcacouple/estimators.hpp"
#include "pcacouple/exact_kernel.hpp"
#include "pcacouple/monotonicity.hpp"
#include "pcacouple/realizable.hpp"

using namespace pcacouple;

namespace {

struct Check {
  bool ok = true;
  std::string detail;

  void require(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
};

int failures = 0;

void criterion(int id, const char* title, double limit_seconds, const std::function<void(Check&)>& body) {
  Check c;
  const auto start = std::chrono::steady_clock::now();
  try {
    body(c);
  } catch (const std::exception& e) {
    c.require(false, std::string("exception: ") + e.what());
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  c.require(secs < limit_seconds, "runtime " + std::to_string(secs) + " s over the limit");
  if (!c.ok) ++failures;
  std::printf("[%s] AC%d %s (%.2f s / %.0f s)%s%s\n", c.ok ? "PASS" : "FAIL", id, title, secs, limit_seconds,
              c.detail.empty() ? "" : " : ", c.detail.c_str());
  std::fflush(stdout);
}

std::shared_ptr<const Dynamics> homogeneous(LocalRule r) {
  return std::make_shared<const Dynamics>(Dynamics::homogeneous(std::make_shared<const LocalRule>(std::move(r))));
}

ComponentSpec spec(std::shared_ptr<const Dynamics> d) {
  return ComponentSpec{std::move(d), BoundaryCondition::constant(0), std::nullopt};
}

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

Rational random_rational(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> num(-20, 20), den(1, 12);
  Rational q(num(rng), den(rng));
  q.canonicalize();
  return q;
}

std::vector<Rational> random_distribution(std::mt19937_64& rng, std::size_t n) {
  std::uniform_int_distribution<int> w(0, 6);
  std::vector<Rational> p(n);
  Rational total = 0;
  while (total == 0) {
    total = 0;
    for (auto& x : p) total += (x = w(rng));
  }
  for (auto& x : p) {
    x /= total;
    x.canonicalize();
  }
  return p;
}

/// Moves each atom of mu to a uniformly chosen point above it.
std::vector<Rational> push_up(std::mt19937_64& rng, const std::vector<Rational>& mu, const SpinPoset& s) {
  std::vector<Rational> out(mu.size(), Rational(0));
  for (Spin a = 0; a < s.size(); ++a) {
    std::vector<Spin> ups;
    for (Spin b = 0; b < s.size(); ++b)
      if (s.leq(a, b)) ups.push_back(b);
    out[ups[rng() % ups.size()]] += mu[a];
  }
  return out;
}

// Coupling contract run shared by criteria 4 and 10: serialized trajectory
// digest plus counters.
struct ContractRun {
  std::string digest;
  std::uint64_t order_violations = 0;
  bool permanence = true;
  bool marginal_exact = true;
  bool compatible_exact = true;
};

ContractRun contract_run(unsigned threads, std::uint64_t steps, int seeds) {
  const Volume vol = Volume::torus(1, {16});
  const auto d = homogeneous(ising_rule_nearest(1.0, 0.0, 1.0, 1));
  CouplingOptions opt;
  opt.threads = threads;
  opt.parallel_min_sites = threads > 1 ? 1 : 4096;
  const CoupledDynamics four(vol, {spec(d), spec(d), spec(d), spec(d)}, opt);
  const CoupledDynamics one(vol, {spec(d)}, opt);
  const CoupledDynamics pair(vol, {spec(d), spec(d)}, opt);
  ContractRun out;
  std::ostringstream digest;
  for (int s = 0; s < seeds; ++s) {
    const std::uint64_t seed = 1000 + static_cast<std::uint64_t>(s);
    // Ordered start: bottom <= min(a, b) <= max(a, b) <= top from two random configurations.
    std::mt19937_64 rng(seed);
    std::vector<Spin> a(16), b(16), lo(16), hi(16);
    for (int k = 0; k < 16; ++k) {
      a[k] = rng() % 2;
      b[k] = rng() % 2;
      lo[k] = std::min(a[k], b[k]);
      hi[k] = std::max(a[k], b[k]);
    }
    const std::vector<std::vector<Spin>> init{constant_config(vol, 0), lo, hi, constant_config(vol, 1)};
    auto state = four.initial_state(init);
    std::vector<CoupledState> singles;
    for (const auto& c : init) singles.push_back(one.initial_state({c}));
    auto sub = pair.initial_state({init[1], init[3]});
    auto report = four.new_report();
    four.observe(state, report);
    const UniformStream stream(seed);
    for (std::uint64_t n = 0; n < steps; ++n) {
      four.step(state, stream, &report);
      for (std::size_t c = 0; c < 4; ++c) {
        one.step(singles[c], stream);
        if (singles[c].components[0] != state.components[c]) out.marginal_exact = false;
      }
      pair.step(sub, stream);
      if (sub.components[0] != state.components[1] || sub.components[1] != state.components[3])
        out.compatible_exact = false;
      if (!four.ordered(state)) ++out.order_violations;
      if (n % 500 == 499) {
        for (const auto& c : state.components)
          for (Spin x : c) digest << static_cast<int>(x);
        digest << '\n';
      }
    }
    out.permanence = out.permanence && report.coalescence_permanent && report.squeeze_ok;
  }
  out.digest = digest.str();
  return out;
}

std::string rho_digest(const std::vector<RhoEstimate>& est) {
  std::string s;
  for (const auto& e : est) s += std::to_string(e.n) + "," + fmt(e.estimate) + "," + fmt(e.standard_error) + "\n";
  return s;
}

std::vector<RhoEstimate> ac5_estimate(unsigned threads) {
  const auto d = homogeneous(ising_rule_nearest(1.0, 0.0, 1.0, 1));
  return estimate_rho(*d, Volume::torus(1, {4}), BoundaryCondition::constant(0), 12,
                      {.replicas = 100000, .seed = 20240501, .threads = threads});
}

}  // namespace

int main() {
  const unsigned hw = std::max(1U, std::min(4U, std::thread::hardware_concurrency()));

  criterion(1, "attractive iff K >= 0 (ising d=1)", 5, [](Check& c) {
    for (double beta : {0.0, 0.5, 1.0, 3.0})
      for (double h : {-1.0, 0.0, 1.0})
        c.require(check_attractive(ising_rule_nearest(beta, h, 1.0, 1)).increasing,
                  "K=1 beta=" + fmt(beta) + " h=" + fmt(h) + " not attractive");
    const auto neg = ising_rule_nearest(1.0, 0.0, -1.0, 1);
    const auto v = check_attractive(neg);
    c.require(!v.increasing, "K=-1 reported attractive");
    c.require(v.witness && reverify({std::cref(neg), std::cref(neg)}, {}, *v.witness), "witness does not re-verify");
  });

  criterion(2, "non-monotone beta pair with the four/three minus witness", 10, [](Check& c) {
    const auto lo = ising_rule_nearest(0.5, 0.0, 1.0, 2);
    const auto hi = ising_rule_nearest(3.0, 0.0, 1.0, 2);
    CheckOptions opt;
    opt.collect_all = true;
    const RuleRefs refs{std::cref(lo), std::cref(hi)};
    const auto v = check_increasing_tuple(refs, opt);
    c.require(!v.increasing, "pair reported increasing");
    bool found = false;
    for (const auto& w : v.violations) {
      const auto m_lo = std::count(w.lower_pattern.begin(), w.lower_pattern.end(), Spin{0});
      const auto m_hi = std::count(w.upper_pattern.begin(), w.upper_pattern.end(), Spin{0});
      if (m_lo != 4 || m_hi != 3 || w.level_name != "-1") continue;
      found = true;
      const double want_lo = 0.5 * (1 + std::tanh(2.0)), want_hi = 0.5 * (1 + std::tanh(6.0));
      c.require(std::fabs(w.lower_value - want_lo) <= 1e-12, "lower F value off");
      c.require(std::fabs(w.upper_value - want_hi) <= 1e-12, "upper F value off");
      c.require(want_lo < want_hi && w.lower_value < w.upper_value, "F values not in the violating order");
      c.require(reverify(refs, opt, w), "witness does not re-verify");
    }
    c.require(found, "pattern pair not among the violations");
  });

  criterion(3, "counterexamples A and B attractive but not realizable monotone", 10, [](Check& c) {
    CheckOptions general;
    general.mode = OrderMode::General;
    const auto a = counterexample_rule(Counterexample::A);
    const auto b = counterexample_rule(Counterexample::B);
    c.require(check_attractive(a, general).increasing, "A not attractive");
    c.require(check_attractive(b, general).increasing, "B not attractive");

    auto rows = [](const LocalRule& r, const std::vector<std::vector<Spin>>& patterns) {
      std::vector<std::vector<Rational>> out;
      for (const auto& p : patterns) {
        const auto row = r.exact_row(r.encode(p));
        out.emplace_back(row.begin(), row.end());
      }
      return out;
    };
    const auto& sa = a.spin();
    std::vector<std::vector<Spin>> pa;
    for (Spin s = 0; s < sa.size(); ++s) pa.push_back({s});
    const auto da = rows(a, pa);
    const auto ra = check_realizable_monotone(sa, da, sa);
    const auto* ia = std::get_if<RealizableInfeasible>(&ra);
    c.require(ia && verify_certificate(sa, da, sa, *ia), "A not certified infeasible");

    const auto& sb = b.spin();
    const Spin x = sb.index_of("x"), y = sb.index_of("y"), z = sb.index_of("z");
    const auto index = SpinPoset::build({"xy", "xz", "zy", "zz"}, {{"xy", "xz"}, {"xy", "zy"}, {"xz", "zz"}, {"zy", "zz"}});
    const auto db = rows(b, {{x, y}, {x, z}, {z, y}, {z, z}});
    const auto rb = check_realizable_monotone(index, db, sb);
    const auto* ib = std::get_if<RealizableInfeasible>(&rb);
    c.require(ib && verify_certificate(index, db, sb, *ib), "B not certified infeasible");
  });

  ContractRun base;
  criterion(4, "coupling contract on a 16-site torus, N=4, 10^4 steps, 20 seeds", 60, [&](Check& c) {
    base = contract_run(1, 10000, 20);
    c.require(base.order_violations == 0, std::to_string(base.order_violations) + " order violations");
    c.require(base.permanence, "coalescence not permanent or squeeze failed");
    c.require(base.marginal_exact, "component trajectory differs from its single-chain run");
    c.require(base.compatible_exact, "sub-tuple trajectory differs from the full tuple");
  });

  std::vector<RhoEstimate> est;
  criterion(5, "exact rho nonincreasing and Monte Carlo within 3 SE (torus 4, beta=1)", 300, [&](Check& c) {
    const auto d = homogeneous(ising_rule_nearest(1.0, 0.0, 1.0, 1));
    const auto exact = exact_rho<Rational>(*d, Volume::torus(1, {4}), BoundaryCondition::constant(0), 12);
    for (std::size_t n = 1; n < exact.size(); ++n)
      c.require(exact[n] <= exact[n - 1], "rho increases at n=" + std::to_string(n));
    est = ac5_estimate(hw);
    for (std::size_t n = 0; n < exact.size(); ++n) {
      const double diff = std::fabs(est[n].estimate - exact[n].get_d());
      const bool ok = est[n].standard_error > 0 ? diff <= 3 * est[n].standard_error : diff == 0;
      c.require(ok, "n=" + std::to_string(n) + " off by " + fmt(diff) + " (SE " + fmt(est[n].standard_error) + ")");
    }
  });

  criterion(6, "ergodicity bound on a 4-site torus, n <= 6", 120, [](Check& c) {
    auto spin = std::make_shared<const SpinPoset>(spaces::ising());
    const Volume torus = Volume::torus(1, {4});
    const std::vector<std::size_t> ns{0, 1, 2, 3, 4, 5, 6};
    BoundOptions opt;
    opt.tolerance = 1e-10;
    for (double beta : {0.3, 1.0}) {
      const auto d = homogeneous(ising_rule_nearest(beta, 0.0, 1.0, 1));
      for (const auto& f : {LocalFunction::spin_product(1, {Coord{0, 0, 0}}, spin),
                            LocalFunction::spin_product(1, {Coord{0, 0, 0}, Coord{1, 0, 0}}, spin)}) {
        const auto rep = ergodicity_bound_check(*d, torus, f, ns, opt);
        c.require(rep.exact, "not evaluated exactly");
        for (const auto& r : rep.rows)
          c.require(r.lhs <= r.rhs + 1e-10, "beta=" + fmt(beta) + " |supp f|=" + std::to_string(f.support().size()) +
                                                " n=" + std::to_string(r.n) + " lhs " + fmt(r.lhs) + " > rhs " +
                                                fmt(r.rhs));
      }
    }
  });

  criterion(7, "sub/super conditional ordering, {0} inside {0,1}, exact", 30, [](Check& c) {
    const auto d = homogeneous(ising_rule_nearest(1.0, 0.0, 1.0, 1));
    const auto rep = check_sub_super_gibbs<Rational>(*d, {Coord{0, 0, 0}}, {Coord{0, 0, 0}, Coord{1, 0, 0}});
    c.require(rep.entries.size() == 2, "expected two conditioning values");
    for (const auto& e : rep.entries) {
      c.require(e.lower_ok, "lower inequality fails");
      c.require(e.upper_ok, "upper inequality fails");
    }
    c.require(rep.all_ok, "report not ok");
  });

  criterion(8, "limit sandwich: spatial and temporal monotonicity, beta=0 control", 60, [](Check& c) {
    const Volume torus = Volume::torus(1, {4});
    const auto d = homogeneous(ising_rule_nearest(1.0, 0.0, 1.0, 1));
    const auto rep = limit_sandwich_report<Rational>(*d, {0, 1}, torus, 8);
    c.require(rep.spatial_monotone, "projection monotonicity in L fails");
    c.require(rep.temporal_monotone, "temporal monotonicity fails");
    c.require(rep.temporal.size() == 9, "expected rows n=0..8");
    const auto d0 = homogeneous(ising_rule_nearest(0.0, 0.0, 1.0, 1));
    const auto ctrl = limit_sandwich_report<Rational>(*d0, {0, 1}, torus, 8);
    for (const auto& r : ctrl.temporal)
      if (r.n >= 1) c.require(r.gap == 0.0, "beta=0 gap " + fmt(r.gap) + " at n=" + std::to_string(r.n));
    for (const auto& r : ctrl.spatial) c.require(r.gap == 0.0, "beta=0 spatial gap " + fmt(r.gap));
  });

  criterion(9, "up-set criterion vs flow feasibility, distribution-function identity", 30, [](Check& c) {
    std::mt19937_64 rng(99);
    const SpinPoset two = spaces::q_chain(2);
    for (const auto& space : {spaces::diamond(), spaces::y_shape(), spaces::q_chain(3)}) {
      int agree = 0, ordered = 0;
      for (int i = 0; i < 500; ++i) {
        const auto mu1 = random_distribution(rng, space.size());
        const auto mu2 = i % 2 ? random_distribution(rng, space.size()) : push_up(rng, mu1, space);
        const bool kkob = stochastic_leq_on_spin<Rational>(mu1, mu2, space);
        const bool flow =
            std::holds_alternative<RealizableFeasible>(check_realizable_monotone(two, {mu1, mu2}, space));
        agree += kkob == flow;
        ordered += kkob;
      }
      c.require(agree == 500, std::to_string(500 - agree) + " disagreements on a " + std::to_string(space.size()) +
                                  "-point space");
      c.require(ordered > 0 && ordered < 500, "degenerate sample");
    }
    int exact = 0;
    for (int i = 0; i < 500; ++i) {
      const int n = 2 + i % 5;
      const auto chain = spaces::q_chain(n);
      const auto ctx = OrderContext::make(chain, OrderMode::Total);
      const auto p = random_distribution(rng, n);
      std::vector<Rational> f(n);
      for (auto& x : f) x = random_rational(rng);
      const auto F = distribution_of<Rational>(std::span<const Rational>(p), ctx).values;
      Rational lhs = 0, rhs = f[n - 1];
      for (int s = 0; s < n; ++s) lhs += f[s] * p[s];
      for (int s = 0; s + 1 < n; ++s) rhs += (f[s] - f[s + 1]) * F[s];
      exact += lhs == rhs;
    }
    c.require(exact == 500, std::to_string(500 - exact) + " identity failures");
  });

  criterion(10, "determinism across runs and thread counts {1, 4}", 600, [&](Check& c) {
    const auto again = contract_run(1, 10000, 20);
    const auto threaded = contract_run(4, 10000, 20);
    c.require(!base.digest.empty() && again.digest == base.digest, "coupling run differs between executions");
    c.require(threaded.digest == base.digest, "coupling run differs with 4 threads");
    const auto one = rho_digest(ac5_estimate(1));
    const auto four = rho_digest(ac5_estimate(4));
    c.require(!est.empty() && rho_digest(est) == one, "rho estimate differs between executions");
    c.require(one == four, "rho estimate differs with 4 threads");
  });

  std::printf("%s: %d of 10 criteria failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
