#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace pcacouple {

/// Index of an element inside a SpinPoset. Configurations store these.
using Spin = std::uint8_t;

/// Largest spin space we accept; order rows are 64-bit masks.
inline constexpr std::size_t kMaxSpinElements = 64;

/// Default limit on the element count for up-set enumeration (2^n scan).
inline constexpr std::size_t kDefaultUpSetCap = 16;

/// Bit set over the elements of a SpinPoset.
using SpinMask = std::uint64_t;

enum class SetKind { UpSet, DownSet };

struct UpSet {
  SpinMask members = 0;
  SetKind kind = SetKind::UpSet;

  bool contains(Spin s) const { return (members >> s) & 1U; }
  friend bool operator==(const UpSet&, const UpSet&) = default;
};

/// Finite spin set with a partial order.
///
/// The order is stored as its reflexive-transitive closure, one bit mask per
/// element (`leq(a, b)` iff bit b of row a is set). The Hasse diagram (cover
/// pairs) is recomputed from the closure, so callers may pass any generating
/// set of relations. Immutable after construction.
class SpinPoset {
 public:
  using Relation = std::pair<std::string, std::string>;

  /// Builds the closure of `relations` (pairs lower, upper) over `labels`.
  /// Throws InvalidInput on duplicate labels, unknown labels or cycles.
  static SpinPoset build(std::vector<std::string> labels, const std::vector<Relation>& relations);

  /// Chain labels[0] < labels[1] < ...
  static SpinPoset chain(std::vector<std::string> labels);

  std::size_t size() const { return labels_.size(); }
  const std::string& label(Spin s) const { return labels_.at(s); }
  const std::vector<std::string>& labels() const { return labels_; }
  std::optional<Spin> find(std::string_view label) const;
  /// Like find(), but throws InvalidInput for an unknown label.
  Spin index_of(std::string_view label) const;

  bool leq(Spin a, Spin b) const { return (leq_[a] >> b) & 1U; }
  bool less(Spin a, Spin b) const { return a != b && leq(a, b); }
  bool comparable(Spin a, Spin b) const { return leq(a, b) || leq(b, a); }

  /// Mask of elements >= s, resp. <= s.
  SpinMask above(Spin s) const { return leq_[s]; }
  SpinMask below(Spin s) const { return geq_[s]; }

  /// Cover pairs (lower, upper) of the Hasse diagram, sorted.
  const std::vector<std::pair<Spin, Spin>>& covers() const { return covers_; }
  std::vector<Spin> upper_covers(Spin s) const;
  std::vector<Spin> lower_covers(Spin s) const;

  bool is_chain() const { return !chain_order_.empty(); }
  /// Bottom-to-top enumeration; empty unless the order is total.
  std::span<const Spin> chain_order() const { return chain_order_; }

  std::optional<Spin> top() const { return top_; }
  std::optional<Spin> bottom() const { return bottom_; }

  bool is_up_set(SpinMask m) const;
  bool is_down_set(SpinMask m) const;
  SpinMask full_mask() const;

  /// Numeric reading of a label ("-1", "+1", "3"); throws InvalidInput otherwise.
  double numeric_value(Spin s) const;

  friend bool operator==(const SpinPoset& a, const SpinPoset& b) {
    return a.labels_ == b.labels_ && a.leq_ == b.leq_;
  }

 private:
  SpinPoset() = default;

  std::vector<std::string> labels_;
  std::vector<SpinMask> leq_;  // row a: elements b with a <= b
  std::vector<SpinMask> geq_;  // row a: elements b with b <= a
  std::vector<std::pair<Spin, Spin>> covers_;
  std::vector<Spin> chain_order_;
  std::optional<Spin> top_;
  std::optional<Spin> bottom_;
};

/// All upward-closed subsets, including the empty set and the whole space,
/// in increasing order of their member mask. Throws CapExceeded when the
/// element count exceeds `cap`.
std::vector<UpSet> enumerate_up_sets(const SpinPoset& poset, std::size_t cap = kDefaultUpSetCap);

/// Same, for downward-closed subsets (tagged DownSet).
std::vector<UpSet> enumerate_down_sets(const SpinPoset& poset, std::size_t cap = kDefaultUpSetCap);

/// Linear enumeration s_1, ..., s_n of a class-Z space where consecutive
/// elements are cover-related and every prefix {s_1..s_i} is an up-set or a
/// down-set of the original order.
struct LinearOrderWitness {
  std::vector<Spin> sequence;
  /// Kind of the prefix ending at sequence[i]. A prefix that is both
  /// (the whole space) is tagged DownSet.
  std::vector<SetKind> semi_kinds;

  /// Mask of the prefix {s_1, ..., s_{i+1}}.
  SpinMask prefix(std::size_t i) const;
  /// Position of element s in the enumeration.
  std::size_t position(Spin s) const;
};

struct NotInClassZ {
  /// First element (by index) with too many covers, when that is the reason.
  std::optional<Spin> violating_element;
  std::string reason;
};

using ClassZResult = std::variant<LinearOrderWitness, NotInClassZ>;

/// Decides membership in class Z and returns the enumeration. Among all
/// valid enumerations, those starting at a minimal element are preferred,
/// then the lexicographically smallest index sequence.
ClassZResult classify_class_z(const SpinPoset& poset);

/// The spaces used throughout the examples: the two-point chain {-1,+1},
/// the chain {1..q}, the diamond {00,01,10,11}, the "Y" space {x,y,z,w},
/// the ten-element zigzag s1..s10 and the six-element space {x,y,z,u,v,w}.
namespace spaces {
SpinPoset ising();
SpinPoset q_chain(int q);
SpinPoset diamond();
SpinPoset y_shape();
SpinPoset zigzag();
SpinPoset not_class_z();
}  // namespace spaces

}  // namespace pcacouple
