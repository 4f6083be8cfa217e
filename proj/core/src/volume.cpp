#include "pcacouple/volume.hpp"

#include <algorithm>
#include <cstdlib>
#include <sstream>

#include "pcacouple/error.hpp"

namespace pcacouple {

namespace {

void check_dim(int dim) {
  if (dim < 1 || dim > kMaxDim) throw InvalidInput("lattice dimension must be 1, 2 or 3");
}

void check_sides(int dim, const std::vector<int>& sides) {
  check_dim(dim);
  if (static_cast<int>(sides.size()) != dim) throw InvalidInput("need one side length per dimension");
  for (int s : sides)
    if (s < 1) throw InvalidInput("side lengths must be positive");
}

std::uint64_t product(const std::vector<int>& sides) {
  std::uint64_t p = 1;
  for (int s : sides) p *= static_cast<std::uint64_t>(s);
  return p;
}

std::vector<Coord> grid(int dim, const std::vector<int>& sides) {
  std::vector<Coord> out;
  Coord c{0, 0, 0};
  const std::uint64_t total = product(sides);
  out.reserve(total);
  for (std::uint64_t i = 0; i < total; ++i) {
    out.push_back(c);
    for (int d = dim - 1; d >= 0; --d) {
      if (++c[d] < sides[d]) break;
      c[d] = 0;
    }
  }
  return out;
}

}  // namespace

void Volume::index_sites(std::size_t max_sites) {
  if (sites_.size() > max_sites) throw CapExceeded("volume site count", sites_.size(), max_sites);
  for (std::size_t i = 0; i < sites_.size(); ++i) {
    if (!index_.emplace(sites_[i], i).second)
      throw InvalidInput("duplicate site " + to_string(sites_[i], dim_));
  }
}

Volume Volume::torus(int dim, const std::vector<int>& sides, std::size_t max_sites) {
  check_sides(dim, sides);
  if (product(sides) > max_sites) throw CapExceeded("volume site count", product(sides), max_sites);
  Volume v;
  v.shape_ = Shape::Torus;
  v.dim_ = dim;
  v.sides_ = sides;
  v.sites_ = grid(dim, sides);
  v.index_sites(max_sites);
  return v;
}

Volume Volume::box(int dim, const std::vector<int>& sides, std::size_t max_sites) {
  check_sides(dim, sides);
  if (product(sides) > max_sites) throw CapExceeded("volume site count", product(sides), max_sites);
  Volume v;
  v.shape_ = Shape::Box;
  v.dim_ = dim;
  v.sides_ = sides;
  v.sites_ = grid(dim, sides);
  v.index_sites(max_sites);
  return v;
}

Volume Volume::ball(int dim, int radius, std::size_t max_sites) {
  check_dim(dim);
  if (radius < 0) throw InvalidInput("ball radius must be nonnegative");
  Volume v;
  v.shape_ = Shape::Ball;
  v.dim_ = dim;
  v.sides_.assign(dim, radius);
  std::vector<int> cube(dim, 2 * radius + 1);
  if (product(cube) > std::uint64_t{1} << 40) throw CapExceeded("volume site count", product(cube), max_sites);
  for (Coord c : grid(dim, cube)) {
    int norm = 0;
    for (int d = 0; d < dim; ++d) {
      c[d] -= radius;
      norm += std::abs(c[d]);
    }
    if (norm <= radius) v.sites_.push_back(c);
    if (v.sites_.size() > max_sites) throw CapExceeded("volume site count", v.sites_.size(), max_sites);
  }
  v.index_sites(max_sites);
  return v;
}

Volume Volume::from_sites(int dim, std::vector<Coord> sites, std::size_t max_sites) {
  check_dim(dim);
  if (sites.empty()) throw InvalidInput("volume needs at least one site");
  for (const auto& c : sites)
    for (int d = dim; d < kMaxDim; ++d)
      if (c[d] != 0) throw InvalidInput("site has coordinates beyond the lattice dimension");
  Volume v;
  v.shape_ = Shape::Sites;
  v.dim_ = dim;
  v.sites_ = std::move(sites);
  v.index_sites(max_sites);
  return v;
}

Coord Volume::wrap(const Coord& c) const {
  if (!periodic()) return c;
  Coord w = c;
  for (int d = 0; d < dim_; ++d) {
    w[d] %= sides_[d];
    if (w[d] < 0) w[d] += sides_[d];
  }
  return w;
}

std::optional<std::size_t> Volume::find(const Coord& c) const {
  auto it = index_.find(wrap(c));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t Volume::origin() const {
  auto o = find(Coord{0, 0, 0});
  if (!o) throw InvalidInput("the origin is not a site of the volume");
  return *o;
}

std::string Volume::describe() const {
  std::ostringstream os;
  auto join = [&](const std::vector<int>& v) {
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "x" : "") << v[i];
  };
  switch (shape_) {
    case Shape::Torus:
      os << "torus:";
      join(sides_);
      break;
    case Shape::Box:
      os << "box:";
      join(sides_);
      break;
    case Shape::Ball:
      os << "ball:d=" << dim_ << ",L=" << sides_.front();
      break;
    case Shape::Sites:
      os << "sites:" << sites_.size();
      break;
  }
  return os.str();
}

Spin BoundaryCondition::at(const Coord& c) const {
  auto it = overrides.find(c);
  return it == overrides.end() ? fill : it->second;
}

BoundaryCondition BoundaryCondition::top(const SpinPoset& spin) {
  if (!spin.top()) throw InvalidInput("spin space has no top element");
  return constant(*spin.top());
}

BoundaryCondition BoundaryCondition::bottom(const SpinPoset& spin) {
  if (!spin.bottom()) throw InvalidInput("spin space has no bottom element");
  return constant(*spin.bottom());
}

NeighborTable build_neighbor_table(const Volume& volume, const Neighborhood& nbhd) {
  if (nbhd.dim != volume.dim()) throw InvalidInput("neighbourhood and volume dimensions differ");
  NeighborTable table;
  table.width = nbhd.size();
  table.slots.resize(volume.size() * table.width);
  std::map<Coord, std::int64_t> exterior_index;
  for (std::size_t i = 0; i < volume.size(); ++i) {
    for (std::size_t j = 0; j < table.width; ++j) {
      const Coord c = volume.site(i) + nbhd.offsets[j];
      if (auto k = volume.find(c)) {
        table.slots[i * table.width + j] = static_cast<std::int64_t>(*k);
      } else {
        auto [it, inserted] = exterior_index.emplace(c, static_cast<std::int64_t>(table.exterior.size()));
        if (inserted) table.exterior.push_back(c);
        table.slots[i * table.width + j] = -1 - it->second;
      }
    }
  }
  return table;
}

std::vector<Spin> constant_config(const Volume& volume, Spin s) { return std::vector<Spin>(volume.size(), s); }

bool config_leq(const SpinPoset& spin, const std::vector<Spin>& a, const std::vector<Spin>& b) {
  if (a.size() != b.size()) throw InvalidInput("configurations of different sizes");
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!spin.leq(a[i], b[i])) return false;
  return true;
}

}  // namespace pcacouple
