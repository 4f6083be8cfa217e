#include <gtest/gtest.h>

#include <algorithm>
#include <variant>

#include "oracles.hpp"
#include "pcacouple/error.hpp"
#include "pcacouple/spin_space.hpp"

using namespace pcacouple;

namespace {

oracle::Matrix oracle_order(const SpinPoset& p, const std::vector<std::pair<std::string, std::string>>& rel) {
  std::vector<std::pair<int, int>> covers;
  for (const auto& [a, b] : rel) covers.emplace_back(p.index_of(a), p.index_of(b));
  return oracle::closure(p.size(), covers);
}

std::vector<SpinMask> masks(const std::vector<UpSet>& sets) {
  std::vector<SpinMask> out;
  for (const auto& s : sets) out.push_back(s.members);
  return out;
}

SpinMask mask_of(const SpinPoset& p, std::initializer_list<const char*> labels) {
  SpinMask m = 0;
  for (const char* l : labels) m |= SpinMask{1} << p.index_of(l);
  return m;
}

}  // namespace

TEST(SpinPoset, TwoPointChain) {
  const auto p = SpinPoset::build({"-1", "+1"}, {{"-1", "+1"}});
  EXPECT_TRUE(p.is_chain());
  EXPECT_EQ(p.size(), 2u);
  EXPECT_TRUE(p.leq(0, 1));
  EXPECT_FALSE(p.leq(1, 0));
  EXPECT_EQ(p.bottom(), Spin{0});
  EXPECT_EQ(p.top(), Spin{1});
  EXPECT_EQ(enumerate_up_sets(p).size(), 3u);
}

TEST(SpinPoset, DiamondIsNotTotal) {
  const auto d = spaces::diamond();
  EXPECT_FALSE(d.is_chain());
  EXPECT_FALSE(d.comparable(d.index_of("01"), d.index_of("10")));
  EXPECT_TRUE(d.leq(d.index_of("00"), d.index_of("11")));
  EXPECT_EQ(d.label(*d.top()), "11");
  EXPECT_EQ(d.label(*d.bottom()), "00");
}

TEST(SpinPoset, YShapeHasIncomparableMinima) {
  const auto y = spaces::y_shape();
  EXPECT_FALSE(y.is_chain());
  EXPECT_FALSE(y.comparable(y.index_of("x"), y.index_of("y")));
  EXPECT_FALSE(y.bottom().has_value());
  EXPECT_EQ(y.label(*y.top()), "w");
}

TEST(SpinPoset, RejectsCyclesUnknownAndDuplicateLabels) {
  EXPECT_THROW(SpinPoset::build({"a", "b"}, {{"a", "b"}, {"b", "a"}}), InvalidInput);
  EXPECT_THROW(SpinPoset::build({"a", "b"}, {{"a", "c"}}), InvalidInput);
  EXPECT_THROW(SpinPoset::build({"a", "a"}, {}), InvalidInput);
}

TEST(SpinPoset, ClosureMatchesFloydWarshall) {
  const std::vector<std::pair<std::string, std::string>> rel = {{"s1", "s2"}, {"s2", "s3"}, {"s3", "s4"},
                                                                {"s6", "s5"}, {"s5", "s4"}, {"s6", "s7"},
                                                                {"s7", "s8"}, {"s10", "s9"}, {"s9", "s8"}};
  const auto p = spaces::zigzag();
  const auto leq = oracle_order(p, rel);
  for (Spin a = 0; a < p.size(); ++a)
    for (Spin b = 0; b < p.size(); ++b) EXPECT_EQ(p.leq(a, b), leq[a][b]) << p.label(a) << " " << p.label(b);
}

TEST(UpSets, DiamondHasSix) {
  const auto d = spaces::diamond();
  const auto got = masks(enumerate_up_sets(d));
  const std::vector<SpinMask> want = {0,
                                      mask_of(d, {"11"}),
                                      mask_of(d, {"01", "11"}),
                                      mask_of(d, {"10", "11"}),
                                      mask_of(d, {"01", "10", "11"}),
                                      mask_of(d, {"00", "01", "10", "11"})};
  EXPECT_EQ(got.size(), 6u);
  for (auto m : want) EXPECT_NE(std::find(got.begin(), got.end(), m), got.end());
}

TEST(UpSets, YShapeHasSix) {
  const auto y = spaces::y_shape();
  EXPECT_EQ(enumerate_up_sets(y).size(), 6u);
}

TEST(UpSets, MatchSubsetScanOnEveryExampleSpace) {
  const std::vector<SpinPoset> spaces_ = {spaces::ising(), spaces::q_chain(4), spaces::diamond(),
                                          spaces::y_shape(), spaces::zigzag(), spaces::not_class_z()};
  for (const auto& p : spaces_) {
    oracle::Matrix leq(p.size(), std::vector<bool>(p.size()));
    for (Spin a = 0; a < p.size(); ++a)
      for (Spin b = 0; b < p.size(); ++b) leq[a][b] = p.leq(a, b);
    auto got = masks(enumerate_up_sets(p));
    auto want = oracle::up_sets(leq);
    std::sort(got.begin(), got.end());
    EXPECT_EQ(got, want);
    auto downs = masks(enumerate_down_sets(p));
    for (auto m : downs) EXPECT_TRUE(oracle::is_down_set(leq, m));
  }
}

TEST(UpSets, FormALattice) {
  for (const auto& p : {spaces::diamond(), spaces::y_shape(), spaces::not_class_z()}) {
    const auto sets = masks(enumerate_up_sets(p));
    for (auto a : sets)
      for (auto b : sets) {
        EXPECT_NE(std::find(sets.begin(), sets.end(), a | b), sets.end());
        EXPECT_NE(std::find(sets.begin(), sets.end(), a & b), sets.end());
      }
  }
}

TEST(UpSets, IndicatorIsIncreasing) {
  for (const auto& p : {spaces::diamond(), spaces::y_shape(), spaces::zigzag()}) {
    for (const auto& g : enumerate_up_sets(p))
      for (Spin a = 0; a < p.size(); ++a)
        for (Spin b = 0; b < p.size(); ++b)
          if (p.leq(a, b)) EXPECT_LE(g.contains(a), g.contains(b));
  }
}

TEST(UpSets, CapRejectsLargeSpaces) {
  EXPECT_THROW(enumerate_up_sets(spaces::zigzag(), 8), CapExceeded);
}

TEST(ClassZ, ZigzagIsLinearlyOrdered) {
  const auto p = spaces::zigzag();
  const auto r = classify_class_z(p);
  ASSERT_TRUE(std::holds_alternative<LinearOrderWitness>(r));
  const auto& w = std::get<LinearOrderWitness>(r);
  ASSERT_EQ(w.sequence.size(), 10u);
  // Semi-set of s5 is an up-set, that of s6 a down-set.
  const std::size_t i5 = w.position(p.index_of("s5"));
  const std::size_t i6 = w.position(p.index_of("s6"));
  EXPECT_TRUE(p.is_up_set(w.prefix(i5)));
  EXPECT_EQ(w.semi_kinds[i5], SetKind::UpSet);
  EXPECT_TRUE(p.is_down_set(w.prefix(i6)));
  EXPECT_EQ(w.semi_kinds[i6], SetKind::DownSet);
}

TEST(ClassZ, WitnessPrefixesVerifyByDirectScan) {
  for (const auto& p : {spaces::zigzag(), spaces::diamond(), spaces::y_shape(), spaces::q_chain(5)}) {
    const auto r = classify_class_z(p);
    if (!std::holds_alternative<LinearOrderWitness>(r)) continue;
    const auto& w = std::get<LinearOrderWitness>(r);
    oracle::Matrix leq(p.size(), std::vector<bool>(p.size()));
    for (Spin a = 0; a < p.size(); ++a)
      for (Spin b = 0; b < p.size(); ++b) leq[a][b] = p.leq(a, b);
    for (std::size_t i = 0; i < w.sequence.size(); ++i) {
      const auto m = w.prefix(i);
      const bool ok = w.semi_kinds[i] == SetKind::UpSet ? oracle::is_up_set(leq, m) : oracle::is_down_set(leq, m);
      EXPECT_TRUE(ok) << "prefix " << i;
      if (i + 1 < w.sequence.size()) {
        const auto a = w.sequence[i];
        const auto b = w.sequence[i + 1];
        const auto up = p.upper_covers(a);
        const auto down = p.lower_covers(a);
        EXPECT_TRUE(std::find(up.begin(), up.end(), b) != up.end() ||
                    std::find(down.begin(), down.end(), b) != down.end());
      }
    }
  }
}

TEST(ClassZ, NotClassZSpaceIsRejected) {
  const auto r = classify_class_z(spaces::not_class_z());
  ASSERT_TRUE(std::holds_alternative<NotInClassZ>(r));
  EXPECT_FALSE(std::get<NotInClassZ>(r).reason.empty());
}

TEST(ClassZ, ChainsAreTheirOwnWitness) {
  for (int q = 2; q <= 6; ++q) {
    const auto p = spaces::q_chain(q);
    const auto r = classify_class_z(p);
    ASSERT_TRUE(std::holds_alternative<LinearOrderWitness>(r));
    const auto& w = std::get<LinearOrderWitness>(r);
    EXPECT_TRUE(std::equal(w.sequence.begin(), w.sequence.end(), p.chain_order().begin()));
    for (auto k : w.semi_kinds) EXPECT_EQ(k, SetKind::DownSet);
  }
}

TEST(SpinPoset, NumericValues) {
  const auto p = spaces::ising();
  EXPECT_EQ(p.numeric_value(0), -1.0);
  EXPECT_EQ(p.numeric_value(1), 1.0);
  EXPECT_THROW(spaces::y_shape().numeric_value(0), InvalidInput);
}
