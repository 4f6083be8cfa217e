#include <gtest/gtest.h>

#include <random>
#include <variant>

#include "oracles.hpp"
#include "pcacouple/error.hpp"
#include "pcacouple/local_rules.hpp"
#include "pcacouple/monotonicity.hpp"
#include "pcacouple/realizable.hpp"

using namespace pcacouple;

namespace {

/// All maps index -> values, kept when monotone. Plain odometer.
std::vector<std::vector<Spin>> brute_monotone_maps(const SpinPoset& index, const SpinPoset& values) {
  std::vector<std::vector<Spin>> out;
  std::vector<Spin> m(index.size(), 0);
  while (true) {
    bool ok = true;
    for (Spin a = 0; a < index.size() && ok; ++a)
      for (Spin b = 0; b < index.size() && ok; ++b)
        if (index.leq(a, b) && !values.leq(m[a], m[b])) ok = false;
    if (ok) out.push_back(m);
    std::size_t i = 0;
    while (i < m.size() && ++m[i] == values.size()) m[i++] = 0;
    if (i == m.size()) break;
  }
  return out;
}

std::vector<std::vector<Rational>> rows_of(const LocalRule& r, const std::vector<std::vector<const char*>>& patterns) {
  std::vector<std::vector<Rational>> out;
  for (const auto& p : patterns) {
    std::vector<Spin> s;
    for (const char* l : p) s.push_back(r.spin().index_of(l));
    const auto row = r.exact_row(r.encode(s));
    out.emplace_back(row.begin(), row.end());
  }
  return out;
}

/// The certificate separates: y.b > 0 and y evaluates to <= 0 on every monotone map.
void expect_certificate_separates(const SpinPoset& index, const std::vector<std::vector<Rational>>& dists,
                                  const SpinPoset& values, const RealizableInfeasible& cert) {
  const std::size_t n = values.size();
  ASSERT_EQ(cert.certificate.size(), index.size() * n);
  Rational yb = 0;
  for (std::size_t a = 0; a < index.size(); ++a)
    for (std::size_t s = 0; s < n; ++s) yb += cert.certificate[a * n + s] * dists[a][s];
  EXPECT_GT(yb, 0);
  EXPECT_EQ(yb, cert.certificate_value);
  for (const auto& m : brute_monotone_maps(index, values)) {
    Rational v = 0;
    for (std::size_t a = 0; a < index.size(); ++a) v += cert.certificate[a * n + m[a]];
    EXPECT_LE(v, 0);
  }
}

}  // namespace

TEST(MonotoneMaps, MatchOdometerCount) {
  const std::vector<std::pair<SpinPoset, SpinPoset>> cases = {{spaces::diamond(), spaces::diamond()},
                                                              {spaces::diamond(), spaces::y_shape()},
                                                              {spaces::q_chain(3), spaces::y_shape()},
                                                              {spaces::y_shape(), spaces::q_chain(3)}};
  for (const auto& [index, values] : cases) {
    auto got = enumerate_monotone_maps(index, values);
    auto want = brute_monotone_maps(index, values);
    std::sort(got.begin(), got.end());
    std::sort(want.begin(), want.end());
    EXPECT_EQ(got, want);
  }
}

TEST(MonotoneMaps, CapIsEnforced) {
  EXPECT_THROW(enumerate_monotone_maps(spaces::q_chain(5), spaces::q_chain(5), 10), CapExceeded);
}

TEST(Realizable, CounterexampleAIsInfeasible) {
  const auto r = counterexample_rule(Counterexample::A);
  const auto& s = r.spin();
  const auto dists = rows_of(r, {{"00"}, {"01"}, {"10"}, {"11"}});
  const auto result = check_realizable_monotone(s, dists, s);
  ASSERT_TRUE(std::holds_alternative<RealizableInfeasible>(result));
  const auto& cert = std::get<RealizableInfeasible>(result);
  EXPECT_TRUE(verify_certificate(s, dists, s, cert));
  expect_certificate_separates(s, dists, s, cert);
}

TEST(Realizable, CounterexampleBIsInfeasible) {
  const auto r = counterexample_rule(Counterexample::B);
  const auto index = SpinPoset::build({"xy", "xz", "zy", "zz"}, {{"xy", "xz"}, {"xy", "zy"}, {"xz", "zz"}, {"zy", "zz"}});
  const auto dists = rows_of(r, {{"x", "y"}, {"x", "z"}, {"z", "y"}, {"z", "z"}});
  // The family is stochastically monotone along the index order.
  for (Spin a = 0; a < 4; ++a)
    for (Spin b = 0; b < 4; ++b)
      if (index.leq(a, b)) EXPECT_TRUE(stochastic_leq_on_spin<Rational>(dists[a], dists[b], r.spin()));
  const auto result = check_realizable_monotone(index, dists, r.spin());
  ASSERT_TRUE(std::holds_alternative<RealizableInfeasible>(result));
  const auto& cert = std::get<RealizableInfeasible>(result);
  EXPECT_TRUE(verify_certificate(index, dists, r.spin(), cert));
  expect_certificate_separates(index, dists, r.spin(), cert);
}

TEST(Realizable, ChainIndexWithOrderedRowsIsFeasible) {
  std::mt19937_64 rng(41);
  const auto values = spaces::q_chain(4);
  const auto index = spaces::q_chain(3);
  for (int trial = 0; trial < 30; ++trial) {
    // Build a stochastically increasing family by mixing towards the top.
    std::vector<std::vector<Rational>> dists;
    auto base = oracle::random_distribution(rng, 4);
    for (int a = 0; a < 3; ++a) {
      dists.push_back(base);
      std::vector<Rational> next(4, Rational(0));
      for (int s = 0; s < 4; ++s) next[std::min(3, s + 1)] += base[s] * Rational(1, 2);
      for (int s = 0; s < 4; ++s) next[s] += base[s] * Rational(1, 2);
      base = next;
    }
    const auto result = check_realizable_monotone(index, dists, values);
    ASSERT_TRUE(std::holds_alternative<RealizableFeasible>(result));
    const auto& ok = std::get<RealizableFeasible>(result);
    std::vector<std::vector<Rational>> marg(3, std::vector<Rational>(4, Rational(0)));
    for (std::size_t m = 0; m < ok.maps.size(); ++m) {
      EXPECT_GT(ok.weights[m], 0);
      for (Spin a = 0; a < 3; ++a)
        for (Spin b = 0; b < 3; ++b)
          if (index.leq(a, b)) EXPECT_TRUE(values.leq(ok.maps[m][a], ok.maps[m][b]));
      for (int a = 0; a < 3; ++a) marg[a][ok.maps[m][a]] += ok.weights[m];
    }
    EXPECT_EQ(marg, dists);
  }
}

TEST(Realizable, TwoPointIndexMatchesUpSetCriterion) {
  std::mt19937_64 rng(43);
  const auto index = spaces::q_chain(2);
  for (const auto& values : {spaces::diamond(), spaces::y_shape(), spaces::q_chain(3)}) {
    for (int trial = 0; trial < 60; ++trial) {
      const auto mu1 = oracle::random_distribution(rng, values.size(), 3);
      const auto mu2 = oracle::random_distribution(rng, values.size(), 3);
      const bool kkob = stochastic_leq_on_spin<Rational>(mu1, mu2, values);
      const bool strassen = std::holds_alternative<RealizableFeasible>(check_realizable_monotone(index, {mu1, mu2}, values));
      EXPECT_EQ(kkob, strassen);
    }
  }
}

TEST(Realizable, RejectsDistributionsThatDoNotSumToOne) {
  const auto s = spaces::q_chain(2);
  EXPECT_THROW(check_realizable_monotone(s, {{Rational(1, 2), Rational(1, 3)}, {Rational(1), Rational(0)}}, s),
               InvalidInput);
}
