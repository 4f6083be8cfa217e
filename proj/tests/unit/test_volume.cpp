#include <gtest/gtest.h>

#include <cstdlib>
#include <set>

#include "pcacouple/error.hpp"
#include "pcacouple/volume.hpp"

using namespace pcacouple;

TEST(Volume, TorusIndexingAndWrap) {
  const auto v = Volume::torus(2, {4, 3});
  EXPECT_EQ(v.size(), 12u);
  EXPECT_TRUE(v.periodic());
  EXPECT_EQ(v.site(0), (Coord{0, 0, 0}));
  EXPECT_EQ(v.site(1), (Coord{0, 1, 0}));
  EXPECT_EQ(v.wrap(Coord{-1, 4, 0}), (Coord{3, 1, 0}));
  EXPECT_EQ(*v.find(Coord{5, -2, 0}), *v.find(Coord{1, 1, 0}));
  EXPECT_EQ(v.origin(), 0u);
}

TEST(Volume, BoxDoesNotWrap) {
  const auto v = Volume::box(1, {5});
  EXPECT_FALSE(v.periodic());
  EXPECT_FALSE(v.contains(Coord{5, 0, 0}));
  EXPECT_FALSE(v.contains(Coord{-1, 0, 0}));
  EXPECT_EQ(v.wrap(Coord{-1, 0, 0}), (Coord{-1, 0, 0}));
}

TEST(Volume, BallSizesMatchCount) {
  for (int d = 1; d <= 3; ++d)
    for (int L = 0; L <= 3; ++L) {
      std::size_t want = 0;
      for (int x = -L; x <= L; ++x)
        for (int y = (d > 1 ? -L : 0); y <= (d > 1 ? L : 0); ++y)
          for (int z = (d > 2 ? -L : 0); z <= (d > 2 ? L : 0); ++z)
            want += std::abs(x) + std::abs(y) + std::abs(z) <= L;
      const auto b = Volume::ball(d, L);
      EXPECT_EQ(b.size(), want) << d << " " << L;
      EXPECT_EQ(b.site(b.origin()), (Coord{0, 0, 0}));
    }
  EXPECT_EQ(Volume::ball(2, 2).size(), 13u);
}

TEST(Volume, ExplicitSitesAndErrors) {
  const auto v = Volume::from_sites(1, {Coord{2, 0, 0}, Coord{-1, 0, 0}});
  EXPECT_EQ(v.size(), 2u);
  EXPECT_THROW(v.origin(), InvalidInput);
  EXPECT_THROW(Volume::from_sites(1, {Coord{0, 0, 0}, Coord{0, 0, 0}}), InvalidInput);
  EXPECT_THROW(Volume::from_sites(1, {Coord{0, 1, 0}}), InvalidInput);
  EXPECT_THROW(Volume::torus(2, {3}), InvalidInput);
  EXPECT_THROW(Volume::torus(1, {0}), InvalidInput);
  EXPECT_THROW(Volume::torus(4, {2, 2, 2, 2}), InvalidInput);
  EXPECT_THROW(Volume::torus(2, {100, 100}, 1000), CapExceeded);
}

TEST(NeighborTable, TorusHasNoExterior) {
  const auto v = Volume::torus(1, {4});
  const auto t = build_neighbor_table(v, Neighborhood::nearest(1));
  EXPECT_TRUE(t.exterior.empty());
  EXPECT_EQ(t.slot(0, 0), 3);
  EXPECT_EQ(t.slot(0, 1), 1);
  EXPECT_EQ(t.slot(3, 1), 0);
}

TEST(NeighborTable, BoxPointsOutsideToExterior) {
  const auto v = Volume::box(1, {3});
  const auto t = build_neighbor_table(v, Neighborhood::nearest(1));
  ASSERT_EQ(t.exterior.size(), 2u);
  const auto left = t.slot(0, 0);
  ASSERT_LT(left, 0);
  EXPECT_EQ(t.exterior[-1 - left], (Coord{-1, 0, 0}));
  const auto right = t.slot(2, 1);
  ASSERT_LT(right, 0);
  EXPECT_EQ(t.exterior[-1 - right], (Coord{3, 0, 0}));
  EXPECT_EQ(t.slot(1, 0), 0);
}

TEST(Boundary, TopBottomAndOverrides) {
  const auto ising = spaces::ising();
  EXPECT_EQ(BoundaryCondition::top(ising).fill, Spin{1});
  EXPECT_EQ(BoundaryCondition::bottom(ising).fill, Spin{0});
  EXPECT_THROW(BoundaryCondition::bottom(spaces::y_shape()), InvalidInput);
  BoundaryCondition b = BoundaryCondition::constant(0);
  b.overrides[Coord{2, 0, 0}] = 1;
  EXPECT_EQ(b.at(Coord{2, 0, 0}), Spin{1});
  EXPECT_EQ(b.at(Coord{3, 0, 0}), Spin{0});
}

TEST(Configs, CoordinatewiseOrder) {
  const auto d = spaces::diamond();
  const Spin s00 = d.index_of("00"), s01 = d.index_of("01"), s10 = d.index_of("10"), s11 = d.index_of("11");
  EXPECT_TRUE(config_leq(d, {s00, s01}, {s01, s11}));
  EXPECT_FALSE(config_leq(d, {s01, s00}, {s10, s11}));
  const auto v = Volume::torus(1, {3});
  EXPECT_EQ(constant_config(v, s10), (std::vector<Spin>{s10, s10, s10}));
  EXPECT_THROW(config_leq(d, {s00}, {s00, s00}), InvalidInput);
}
