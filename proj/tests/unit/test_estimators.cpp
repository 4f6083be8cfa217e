#include <gtest/gtest.h>

#include <atomic>
#include <cmath>

#include "oracles.hpp"
#include "pcacouple/error.hpp"
#include "pcacouple/estimators.hpp"

using namespace pcacouple;

namespace {

std::shared_ptr<const Dynamics> homogeneous(LocalRule r) {
  return std::make_shared<const Dynamics>(Dynamics::homogeneous(std::make_shared<const LocalRule>(std::move(r))));
}

std::shared_ptr<const SpinPoset> ising_space() { return std::make_shared<const SpinPoset>(spaces::ising()); }

/// Var_k by scanning all pairs that differ at k only.
double brute_variation(const std::vector<double>& values, std::size_t sites, std::size_t spins, std::size_t k) {
  double best = 0;
  for (std::size_t a = 0; a < values.size(); ++a)
    for (std::size_t b = 0; b < values.size(); ++b) {
      bool only_k = true;
      std::size_t x = a, y = b;
      for (std::size_t i = sites; i-- > 0;) {
        if (i != k && x % spins != y % spins) only_k = false;
        x /= spins;
        y /= spins;
      }
      if (only_k) best = std::max(best, std::fabs(values[a] - values[b]));
    }
  return best;
}

/// Ising ring of 3 sites: transition matrix from the formula, stationary law
/// by iteration, and max_sigma |E[sigma_0(n) | sigma] - nu(sigma_0)|.
std::vector<double> brute_ergodicity_lhs(double beta, double h, const std::vector<std::size_t>& ns) {
  const int ring = 3;
  const std::size_t states = 8;
  auto spins = [&](std::size_t idx) {
    std::vector<int> s(ring);
    for (int i = ring - 1; i >= 0; --i) {
      s[i] = idx % 2 ? 1 : -1;
      idx /= 2;
    }
    return s;
  };
  std::vector<std::vector<double>> P(states, std::vector<double>(states, 1.0));
  for (std::size_t a = 0; a < states; ++a)
    for (std::size_t b = 0; b < states; ++b) {
      const auto s = spins(a), t = spins(b);
      for (int k = 0; k < ring; ++k) {
        const double plus = oracle::ising_plus(beta, h, s[(k + 2) % 3] + s[(k + 1) % 3]);
        P[a][b] *= t[k] > 0 ? plus : 1 - plus;
      }
    }
  std::vector<double> pi(states, 1.0 / states);
  for (int it = 0; it < 5000; ++it) {
    std::vector<double> next(states, 0.0);
    for (std::size_t a = 0; a < states; ++a)
      for (std::size_t b = 0; b < states; ++b) next[b] += pi[a] * P[a][b];
    pi = next;
  }
  std::vector<double> f(states);
  double nu = 0;
  for (std::size_t a = 0; a < states; ++a) {
    f[a] = spins(a)[0];
    nu += pi[a] * f[a];
  }
  std::vector<double> out;
  std::vector<double> g = f;
  std::size_t at = 0;
  for (std::size_t n : ns) {
    for (; at < n; ++at) {
      std::vector<double> next(states, 0.0);
      for (std::size_t a = 0; a < states; ++a)
        for (std::size_t b = 0; b < states; ++b) next[a] += P[a][b] * g[b];
      g = next;
    }
    double worst = 0;
    for (double x : g) worst = std::max(worst, std::fabs(x - nu));
    out.push_back(worst);
  }
  return out;
}

}  // namespace

TEST(VariationNorm, SpinProductsAndConstants) {
  const auto one = LocalFunction::spin_product(1, {Coord{0, 0, 0}}, ising_space());
  EXPECT_DOUBLE_EQ(variation_norm(one).triple_norm, 2.0);
  EXPECT_TRUE(one.increasing());
  const auto two = LocalFunction::spin_product(1, {Coord{0, 0, 0}, Coord{1, 0, 0}}, ising_space());
  const auto v2 = variation_norm(two);
  EXPECT_EQ(v2.per_site, (std::vector<double>{2.0, 2.0}));
  EXPECT_DOUBLE_EQ(v2.triple_norm, 4.0);
  EXPECT_FALSE(two.increasing());
  EXPECT_DOUBLE_EQ(variation_norm(LocalFunction::constant(1, ising_space(), 3.5)).triple_norm, 0.0);
}

TEST(VariationNorm, MatchesPairScanAndIsSubadditive) {
  std::mt19937_64 rng(61);
  std::uniform_real_distribution<double> val(-2.0, 2.0);
  auto spin = std::make_shared<const SpinPoset>(spaces::q_chain(3));
  const std::vector<Coord> support{Coord{0, 0, 0}, Coord{1, 0, 0}, Coord{0, 1, 0}};
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> a(27), b(27);
    for (auto& x : a) x = val(rng);
    for (auto& x : b) x = val(rng);
    auto index = [](std::span<const Spin> s) { return (s[0] * 3 + s[1]) * 3 + s[2]; };
    const auto fa = LocalFunction::tabulate(2, support, spin, [&](std::span<const Spin> s) { return a[index(s)]; });
    const auto fb = LocalFunction::tabulate(2, support, spin, [&](std::span<const Spin> s) { return b[index(s)]; });
    const auto fs = LocalFunction::tabulate(2, support, spin,
                                            [&](std::span<const Spin> s) { return a[index(s)] + b[index(s)]; });
    const auto va = variation_norm(fa);
    for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(va.per_site[k], brute_variation(a, 3, 3, k), 1e-12);
    EXPECT_LE(variation_norm(fs).triple_norm, va.triple_norm + variation_norm(fb).triple_norm + 1e-12);
  }
}

TEST(LocalFunction, EvaluatesOnATorusWithWrap) {
  const auto f = LocalFunction::spin_product(1, {Coord{-1, 0, 0}, Coord{0, 0, 0}}, ising_space());
  const Volume v = Volume::torus(1, {4});
  EXPECT_DOUBLE_EQ(f.evaluate(v, std::vector<Spin>{1, 0, 0, 0}), -1.0);
  EXPECT_DOUBLE_EQ(f.evaluate(v, std::vector<Spin>{0, 0, 0, 0}), 1.0);
  EXPECT_DOUBLE_EQ(f.evaluate(v, std::vector<Spin>{1, 0, 0, 1}), 1.0);
  EXPECT_DOUBLE_EQ(f.evaluate(v, std::vector<Spin>{0, 0, 0, 1}), -1.0);
  EXPECT_THROW(f.evaluate(Volume::box(1, {4}), std::vector<Spin>{0, 0, 0, 0}), InvalidInput);
}

TEST(EstimateRho, BetaZeroIsZeroAfterOneStep) {
  const auto d = homogeneous(ising_rule_nearest(0.0, 0.0, 1.0, 1));
  const auto est = estimate_rho(*d, Volume::torus(1, {6}), BoundaryCondition::constant(0), 5, {.replicas = 500, .seed = 3});
  ASSERT_EQ(est.size(), 6u);
  EXPECT_DOUBLE_EQ(est[0].estimate, 1.0);
  for (std::size_t n = 1; n < est.size(); ++n) {
    EXPECT_DOUBLE_EQ(est[n].estimate, 0.0);
    EXPECT_TRUE(est[n].wilson);
    EXPECT_GT(est[n].ci_high, 0.0);
  }
}

TEST(EstimateRho, AgreesWithExactValues) {
  // Thirteen comparisons at a fixed seed; four standard errors each.
  const auto d = homogeneous(ising_rule_nearest(1.0, 0.0, 1.0, 1));
  const Volume v = Volume::torus(1, {4});
  const auto exact = exact_rho<double>(*d, v, BoundaryCondition::constant(0), 12);
  const auto est = estimate_rho(*d, v, BoundaryCondition::constant(0), 12, {.replicas = 20000, .seed = 11});
  for (std::size_t n = 0; n <= 12; ++n) {
    const double se = std::max(est[n].standard_error, 1.0 / 20000);
    EXPECT_NEAR(est[n].estimate, exact[n], 4 * se) << n;
    EXPECT_LE(est[n].ci_low, est[n].estimate);
    EXPECT_GE(est[n].ci_high, est[n].estimate);
  }
}

TEST(EstimateRho, ThreadCountDoesNotChangeResults) {
  const auto d = homogeneous(ising_rule_nearest(0.6, 0.0, 1.0, 2));
  const Volume v = Volume::torus(2, {4, 4});
  const auto a = estimate_rho(*d, v, BoundaryCondition::constant(0), 8, {.replicas = 300, .seed = 5, .threads = 1});
  const auto b = estimate_rho(*d, v, BoundaryCondition::constant(0), 8, {.replicas = 300, .seed = 5, .threads = 4});
  for (std::size_t n = 0; n <= 8; ++n) EXPECT_EQ(a[n].disagreements, b[n].disagreements);
}

TEST(ErgodicityBound, ExactHoldsAndMatchesDirectComputation) {
  const double beta = 0.6, h = 0.2;
  const auto d = homogeneous(ising_rule_nearest(beta, h, 1.0, 1));
  const auto f = LocalFunction::spin_product(1, {Coord{0, 0, 0}}, ising_space());
  const std::vector<std::size_t> ns{0, 1, 2, 5, 10};
  const auto rep = ergodicity_bound_check(*d, Volume::torus(1, {3}), f, ns);
  EXPECT_TRUE(rep.exact);
  EXPECT_TRUE(rep.all_ok);
  EXPECT_DOUBLE_EQ(rep.triple_norm, 2.0);
  const auto want = brute_ergodicity_lhs(beta, h, ns);
  const auto rho = exact_rho<double>(*d, Volume::torus(1, {3}), BoundaryCondition::constant(0), 10);
  for (std::size_t i = 0; i < ns.size(); ++i) {
    EXPECT_NEAR(rep.rows[i].lhs, want[i], 1e-9) << ns[i];
    EXPECT_NEAR(rep.rows[i].rho, rho[ns[i]], 1e-12);
    EXPECT_LE(rep.rows[i].lhs, rep.rows[i].rhs + 1e-10);
  }
}

TEST(ErgodicityBound, MonteCarloSurrogateOnLargerTorus) {
  const auto d = homogeneous(ising_rule_nearest(0.5, 0.0, 1.0, 2));
  const auto f = LocalFunction::spin_product(2, {Coord{0, 0, 0}, Coord{1, 0, 0}}, ising_space());
  BoundOptions opt;
  opt.allow_monte_carlo = true;
  opt.replicas = 2000;
  opt.seed = 4;
  opt.random_initial = 4;
  opt.burn_in = 60;
  const auto rep = ergodicity_bound_check(*d, Volume::torus(2, {6, 6}), f, {1, 3, 6}, opt);
  EXPECT_FALSE(rep.exact);
  EXPECT_TRUE(rep.all_ok);
  for (const auto& r : rep.rows) EXPECT_GT(r.rho_standard_error + r.lhs_standard_error, 0.0);
  BoundOptions strict;
  EXPECT_THROW(ergodicity_bound_check(*d, Volume::torus(2, {6, 6}), f, {1}, strict), CapExceeded);
  EXPECT_THROW(ergodicity_bound_check(*d, Volume::box(2, {2, 2}), f, {1}), InvalidInput);
}

TEST(Sandwich, OrderedAndContained) {
  const auto d = homogeneous(ising_rule_nearest(0.8, 0.0, 1.0, 1));
  const Volume v = Volume::torus(1, {12});
  std::mt19937_64 rng(7);
  std::vector<Spin> xi(12);
  for (auto& s : xi) s = rng() % 2;
  const std::vector<Coord> lambda{Coord{-1, 0, 0}, Coord{0, 0, 0}, Coord{1, 0, 0}};
  const auto f = LocalFunction::spin_product(1, {Coord{0, 0, 0}}, ising_space());
  const auto rep = sandwich_check(*d, v, lambda, xi, 10, f, {.replicas = 400, .seed = 3});
  ASSERT_EQ(rep.rows.size(), 11u);
  EXPECT_TRUE(rep.pathwise_order_ok);
  EXPECT_TRUE(rep.containment_ok);
  for (const auto& r : rep.rows) {
    EXPECT_TRUE(r.ordered);
    EXPECT_LE(r.e_minus, r.e_mid + 1e-12);
    EXPECT_LE(r.e_mid, r.e_plus + 1e-12);
    EXPECT_LE(r.rho_inner, r.rho_extremal + 1e-12);
    EXPECT_LE(r.rho_extremal, r.rho_pinned + 1e-12);
  }
}

TEST(Sandwich, RejectsNonIncreasingFunctionsAndSmallTori) {
  const auto d = homogeneous(ising_rule_nearest(0.8, 0.0, 1.0, 1));
  const std::vector<Coord> lambda{Coord{-1, 0, 0}, Coord{0, 0, 0}, Coord{1, 0, 0}};
  const auto two = LocalFunction::spin_product(1, {Coord{0, 0, 0}, Coord{1, 0, 0}}, ising_space());
  const auto one = LocalFunction::spin_product(1, {Coord{0, 0, 0}}, ising_space());
  EXPECT_THROW(sandwich_check(*d, Volume::torus(1, {12}), lambda, std::vector<Spin>(12, 0), 2, two), InvalidInput);
  EXPECT_THROW(sandwich_check(*d, Volume::torus(1, {4}), lambda, std::vector<Spin>(4, 0), 2, one), InvalidInput);
}

TEST(ParallelFor, RunsEveryJobOnceAndPropagatesErrors) {
  std::vector<int> hits(1000, 0);
  parallel_for(hits.size(), 8, [&](std::size_t i) { hits[i] += 1; });
  EXPECT_EQ(std::count(hits.begin(), hits.end(), 1), 1000);
  EXPECT_THROW(parallel_for(10, 4, [](std::size_t i) {
                 if (i == 7) throw InvalidInput("boom");
               }),
               InvalidInput);
}
