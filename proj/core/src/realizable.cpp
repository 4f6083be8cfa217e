#include "pcacouple/realizable.hpp"

#include <algorithm>
#include <bit>

#include "exact_simplex.hpp"
#include "pcacouple/error.hpp"

namespace pcacouple {

std::vector<MonotoneMap> enumerate_monotone_maps(const SpinPoset& index, const SpinPoset& values, std::uint64_t cap) {
  const std::size_t m = index.size();
  const std::size_t n = values.size();
  // Assign in a linear extension of the index order so every constraint
  // involves an already assigned element.
  std::vector<Spin> order(m);
  for (std::size_t i = 0; i < m; ++i) order[i] = static_cast<Spin>(i);
  std::stable_sort(order.begin(), order.end(), [&](Spin a, Spin b) {
    return std::popcount(index.below(a)) < std::popcount(index.below(b));
  });

  std::vector<MonotoneMap> out;
  MonotoneMap current(m, 0);
  std::vector<bool> assigned(m, false);
  auto rec = [&](auto&& self, std::size_t depth) -> void {
    if (depth == m) {
      if (out.size() >= cap) throw CapExceeded("monotone maps", out.size() + 1, cap);
      out.push_back(current);
      return;
    }
    const Spin alpha = order[depth];
    for (std::size_t v = 0; v < n; ++v) {
      bool ok = true;
      for (std::size_t beta = 0; beta < m && ok; ++beta) {
        if (!assigned[beta]) continue;
        const Spin b = static_cast<Spin>(beta);
        if (index.leq(b, alpha) && !values.leq(current[beta], static_cast<Spin>(v))) ok = false;
        if (index.leq(alpha, b) && !values.leq(static_cast<Spin>(v), current[beta])) ok = false;
      }
      if (!ok) continue;
      current[alpha] = static_cast<Spin>(v);
      assigned[alpha] = true;
      self(self, depth + 1);
      assigned[alpha] = false;
    }
  };
  rec(rec, 0);
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

void validate_dists(const SpinPoset& index, const std::vector<std::vector<Rational>>& dists, const SpinPoset& values) {
  if (dists.size() != index.size()) throw InvalidInput("one distribution per index element is required");
  for (const auto& d : dists) {
    if (d.size() != values.size()) throw InvalidInput("distribution length differs from the value space size");
    Rational sum = 0;
    for (const auto& p : d) {
      if (p < 0) throw InvalidInput("negative probability");
      sum += p;
    }
    if (sum != 1) throw InvalidInput("distribution sums to " + sum.get_str() + ", not 1");
  }
}

}  // namespace

RealizabilityResult check_realizable_monotone(const SpinPoset& index, const std::vector<std::vector<Rational>>& dists,
                                              const SpinPoset& values, std::uint64_t map_cap) {
  validate_dists(index, dists, values);
  const auto maps = enumerate_monotone_maps(index, values, map_cap);
  const std::size_t m = index.size();
  const std::size_t n = values.size();

  // One constraint per (alpha, s): total weight of maps with m(alpha) = s.
  std::vector<std::vector<Rational>> a(m * n, std::vector<Rational>(maps.size(), Rational(0)));
  std::vector<Rational> b(m * n);
  for (std::size_t alpha = 0; alpha < m; ++alpha) {
    for (std::size_t s = 0; s < n; ++s) b[alpha * n + s] = dists[alpha][s];
  }
  for (std::size_t j = 0; j < maps.size(); ++j) {
    for (std::size_t alpha = 0; alpha < m; ++alpha) a[alpha * n + maps[j][alpha]][j] = 1;
  }

  auto lp = detail::solve_feasibility(a, b);
  if (lp.feasible) {
    RealizableFeasible f;
    for (std::size_t j = 0; j < maps.size(); ++j) {
      if (lp.x[j] > 0) {
        f.maps.push_back(maps[j]);
        f.weights.push_back(lp.x[j]);
      }
    }
    return f;
  }
  RealizableInfeasible inf;
  inf.certificate = std::move(lp.farkas);
  inf.certificate_value = lp.farkas_value;
  inf.map_count = maps.size();
  return inf;
}

bool verify_certificate(const SpinPoset& index, const std::vector<std::vector<Rational>>& dists,
                        const SpinPoset& values, const RealizableInfeasible& cert) {
  validate_dists(index, dists, values);
  const std::size_t m = index.size();
  const std::size_t n = values.size();
  if (cert.certificate.size() != m * n) return false;
  Rational yb = 0;
  for (std::size_t alpha = 0; alpha < m; ++alpha) {
    for (std::size_t s = 0; s < n; ++s) yb += cert.certificate[alpha * n + s] * dists[alpha][s];
  }
  if (!(yb > 0)) return false;
  for (const auto& map : enumerate_monotone_maps(index, values, std::uint64_t{1} << 40)) {
    Rational ya = 0;
    for (std::size_t alpha = 0; alpha < m; ++alpha) ya += cert.certificate[alpha * n + map[alpha]];
    if (ya > 0) return false;
  }
  return true;
}

}  // namespace pcacouple
