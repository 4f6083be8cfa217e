#pragma once

#include <array>
#include <cstdint>

namespace pcacouple {

/// Philox4x32-10 block function (Salmon et al., Random123).
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter, std::array<std::uint32_t, 2> key);

/// Counter-based source of the shared uniforms U_k(n).
///
/// draw(n, k) = (floor(x / 2^12) + 1/2) / 2^52 where x is the 64-bit word
/// (out[0] << 32 | out[1]) of Philox4x32-10 with
///   key     = (seed & 0xffffffff, seed >> 32)
///   counter = (k & 0xffffffff, k >> 32, n, stream_id).
/// The result lies in [2^-53, 1 - 2^-53]: never 0 or 1. Identical (seed,
/// stream_id, n, k) give identical draws on every platform and thread count.
/// Changing this mapping is a breaking change; golden tests pin it.
class UniformStream {
 public:
  explicit UniformStream(std::uint64_t seed, std::uint32_t stream_id = 0) : seed_(seed), stream_id_(stream_id) {}

  /// Throws InvalidInput for n >= 2^32.
  double draw(std::uint64_t n, std::uint64_t k) const;
  std::uint64_t bits(std::uint64_t n, std::uint64_t k) const;

  std::uint64_t seed() const { return seed_; }
  std::uint32_t stream_id() const { return stream_id_; }
  UniformStream substream(std::uint32_t id) const { return UniformStream(seed_, id); }

  static double to_unit(std::uint64_t bits);

 private:
  std::uint64_t seed_;
  std::uint32_t stream_id_;
};

inline double uniform_draw(const UniformStream& stream, std::uint64_t n, std::uint64_t k) { return stream.draw(n, k); }

inline constexpr const char* kRngName = "philox4x32-10";

}  // namespace pcacouple
