#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pcacouple/local_rules.hpp"
#include "pcacouple/spin_space.hpp"

namespace pcacouple {

inline constexpr std::size_t kDefaultMaxSites = std::size_t{1} << 22;

/// Finite set of lattice sites.
///
/// Torus: coordinates 0..side-1 in each dimension with periodic wrap.
/// Box:   coordinates 0..side-1, no wrap.
/// Ball:  the l1 ball {x : |x_1| + ... + |x_d| <= L} around the origin.
/// Sites: an explicit list, no wrap.
/// Torus, box and ball sites are listed in lexicographic coordinate order.
class Volume {
 public:
  enum class Shape { Torus, Box, Ball, Sites };

  static Volume torus(int dim, const std::vector<int>& sides, std::size_t max_sites = kDefaultMaxSites);
  static Volume box(int dim, const std::vector<int>& sides, std::size_t max_sites = kDefaultMaxSites);
  static Volume ball(int dim, int radius, std::size_t max_sites = kDefaultMaxSites);
  static Volume from_sites(int dim, std::vector<Coord> sites, std::size_t max_sites = kDefaultMaxSites);

  Shape shape() const { return shape_; }
  bool periodic() const { return shape_ == Shape::Torus; }
  int dim() const { return dim_; }
  std::size_t size() const { return sites_.size(); }
  const Coord& site(std::size_t i) const { return sites_[i]; }
  const std::vector<Coord>& sites() const { return sites_; }
  /// Side lengths (torus, box) or the radius repeated (ball).
  const std::vector<int>& sides() const { return sides_; }

  /// Index of a coordinate, reduced modulo the sides on a torus.
  std::optional<std::size_t> find(const Coord& c) const;
  bool contains(const Coord& c) const { return find(c).has_value(); }
  /// Canonical representative of c (wrapped on a torus, unchanged otherwise).
  Coord wrap(const Coord& c) const;
  /// Index of the origin; throws InvalidInput if it is not a site.
  std::size_t origin() const;

  std::string describe() const;

 private:
  Volume() = default;
  void index_sites(std::size_t max_sites);

  Shape shape_ = Shape::Sites;
  int dim_ = 1;
  std::vector<int> sides_;
  std::vector<Coord> sites_;
  std::map<Coord, std::size_t> index_;
};

/// Exterior configuration tau: `fill` everywhere except the listed overrides.
struct BoundaryCondition {
  Spin fill = 0;
  std::map<Coord, Spin> overrides;

  Spin at(const Coord& c) const;

  static BoundaryCondition constant(Spin s) { return BoundaryCondition{s, {}}; }
  /// Constant top / bottom configuration; throws InvalidInput if the poset has none.
  static BoundaryCondition top(const SpinPoset& spin);
  static BoundaryCondition bottom(const SpinPoset& spin);
};

/// Resolution of a neighbourhood on a volume. slot(site, j) >= 0 is the index
/// of the neighbour site; a negative value -1 - e points into `exterior[e]`,
/// a coordinate outside the volume whose spin comes from the boundary.
struct NeighborTable {
  std::size_t width = 0;
  std::vector<std::int64_t> slots;
  std::vector<Coord> exterior;

  std::int64_t slot(std::size_t site, std::size_t j) const { return slots[site * width + j]; }
};

NeighborTable build_neighbor_table(const Volume& volume, const Neighborhood& nbhd);

/// Configuration helpers.
std::vector<Spin> constant_config(const Volume& volume, Spin s);
bool config_leq(const SpinPoset& spin, const std::vector<Spin>& a, const std::vector<Spin>& b);

}  // namespace pcacouple
