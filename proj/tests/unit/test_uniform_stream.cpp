#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "pcacouple/error.hpp"
#include "pcacouple/uniform_stream.hpp"

using namespace pcacouple;

// Known-answer vectors of the Random123 distribution for philox4x32-10.
TEST(Philox, KnownAnswers) {
  using A4 = std::array<std::uint32_t, 4>;
  using A2 = std::array<std::uint32_t, 2>;
  EXPECT_EQ(philox4x32_10(A4{0, 0, 0, 0}, A2{0, 0}), (A4{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
  EXPECT_EQ(philox4x32_10(A4{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, A2{0xffffffff, 0xffffffff}),
            (A4{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
  EXPECT_EQ(philox4x32_10(A4{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, A2{0xa4093822, 0x299f31d0}),
            (A4{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(UniformStream, DrawIsTheDocumentedFunctionOfTheBlock) {
  const std::uint64_t seed = 0x0123456789abcdefULL;
  const UniformStream s(seed, 7);
  for (std::uint64_t n : {0ULL, 1ULL, 99ULL})
    for (std::uint64_t k : {0ULL, 5ULL, (1ULL << 33) + 3}) {
      const auto out = philox4x32_10({static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32),
                                      static_cast<std::uint32_t>(n), 7},
                                     {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)});
      const std::uint64_t x = (std::uint64_t{out[0]} << 32) | out[1];
      EXPECT_EQ(s.bits(n, k), x);
      EXPECT_EQ(s.draw(n, k), (static_cast<double>(x >> 12) + 0.5) * std::ldexp(1.0, -52));
    }
}

TEST(UniformStream, NeverZeroOrOne) {
  EXPECT_GT(UniformStream::to_unit(0), 0.0);
  EXPECT_LT(UniformStream::to_unit(~std::uint64_t{0}), 1.0);
  EXPECT_EQ(UniformStream::to_unit(0), std::ldexp(1.0, -53));
}

TEST(UniformStream, DeterministicAndIndependentOfCallOrder) {
  const UniformStream a(42), b(42);
  std::vector<double> forward, backward;
  for (std::uint64_t k = 0; k < 100; ++k) forward.push_back(a.draw(3, k));
  for (std::uint64_t k = 100; k-- > 0;) backward.push_back(b.draw(3, k));
  std::reverse(backward.begin(), backward.end());
  EXPECT_EQ(forward, backward);
}

TEST(UniformStream, MeanAndVarianceOverAMillionDraws) {
  const UniformStream s(2024);
  double sum = 0, sq = 0;
  const std::uint64_t count = 1'000'000;
  for (std::uint64_t i = 0; i < count; ++i) {
    const double u = s.draw(i / 1000, i % 1000);
    sum += u;
    sq += u * u;
  }
  const double mean = sum / count;
  EXPECT_NEAR(mean, 0.5, 0.002);
  EXPECT_NEAR(sq / count - mean * mean, 1.0 / 12, 0.002);
}

TEST(UniformStream, DistinctSeedsAndStreamsDiffer) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t seed = 0; seed < 50; ++seed)
    for (std::uint32_t id = 0; id < 4; ++id) seen.insert(UniformStream(seed, id).bits(0, 0));
  EXPECT_EQ(seen.size(), 200u);
  const UniformStream s(5);
  EXPECT_EQ(s.substream(3).bits(1, 1), UniformStream(5, 3).bits(1, 1));
  EXPECT_NE(s.bits(1, 2), s.bits(2, 1));
}

TEST(UniformStream, RejectsStepBeyondCounterWord) {
  EXPECT_THROW(UniformStream(1).draw(std::uint64_t{1} << 32, 0), InvalidInput);
}
