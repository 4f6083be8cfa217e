#pragma once

// Brute-force reference implementations used by the unit tests. They are
// written directly from the definitions and share no code with the library.

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <gmpxx.h>

namespace oracle {

using Q = mpq_class;
using Matrix = std::vector<std::vector<bool>>;

/// Reflexive-transitive closure of cover pairs by Floyd-Warshall.
inline Matrix closure(std::size_t n, const std::vector<std::pair<int, int>>& covers) {
  Matrix leq(n, std::vector<bool>(n, false));
  for (std::size_t i = 0; i < n; ++i) leq[i][i] = true;
  for (auto [a, b] : covers) leq[a][b] = true;
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (leq[i][k] && leq[k][j]) leq[i][j] = true;
  return leq;
}

inline bool is_up_set(const Matrix& leq, std::uint64_t mask) {
  const std::size_t n = leq.size();
  for (std::size_t a = 0; a < n; ++a) {
    if (!((mask >> a) & 1U)) continue;
    for (std::size_t b = 0; b < n; ++b)
      if (leq[a][b] && !((mask >> b) & 1U)) return false;
  }
  return true;
}

inline bool is_down_set(const Matrix& leq, std::uint64_t mask) {
  const std::size_t n = leq.size();
  for (std::size_t a = 0; a < n; ++a) {
    if (!((mask >> a) & 1U)) continue;
    for (std::size_t b = 0; b < n; ++b)
      if (leq[b][a] && !((mask >> b) & 1U)) return false;
  }
  return true;
}

/// Every subset checked for upward closure.
inline std::vector<std::uint64_t> up_sets(const Matrix& leq) {
  std::vector<std::uint64_t> out;
  for (std::uint64_t m = 0; m < (std::uint64_t{1} << leq.size()); ++m)
    if (is_up_set(leq, m)) out.push_back(m);
  return out;
}

template <class T>
T mass(const std::vector<T>& mu, std::uint64_t mask) {
  T s = 0;
  for (std::size_t i = 0; i < mu.size(); ++i)
    if ((mask >> i) & 1U) s += mu[i];
  return s;
}

/// mu1 <= mu2 iff mu1(G) <= mu2(G) on every up-set G.
template <class T>
bool leq_by_up_sets(const std::vector<T>& mu1, const std::vector<T>& mu2, const Matrix& leq, double tol = 0) {
  for (auto g : up_sets(leq))
    if (mass(mu1, g) > mass(mu2, g) + T(tol)) return false;
  return true;
}

/// Coordinatewise order on S^n with configurations in mixed radix, first site most significant.
inline Matrix product_order(const Matrix& leq, std::size_t sites) {
  const std::size_t s = leq.size();
  std::size_t states = 1;
  for (std::size_t i = 0; i < sites; ++i) states *= s;
  auto digits = [&](std::size_t x) {
    std::vector<std::size_t> d(sites);
    for (std::size_t i = sites; i-- > 0;) {
      d[i] = x % s;
      x /= s;
    }
    return d;
  };
  Matrix out(states, std::vector<bool>(states, false));
  for (std::size_t a = 0; a < states; ++a)
    for (std::size_t b = 0; b < states; ++b) {
      const auto da = digits(a);
      const auto db = digits(b);
      bool ok = true;
      for (std::size_t i = 0; i < sites; ++i) ok = ok && leq[da[i]][db[i]];
      out[a][b] = ok;
    }
  return out;
}

inline Q random_rational(std::mt19937_64& rng, int max_num = 20, int max_den = 12) {
  std::uniform_int_distribution<int> num(-max_num, max_num);
  std::uniform_int_distribution<int> den(1, max_den);
  Q q(num(rng), den(rng));
  q.canonicalize();
  return q;
}

/// Random probability vector with rational entries.
inline std::vector<Q> random_distribution(std::mt19937_64& rng, std::size_t n, int granularity = 12) {
  std::uniform_int_distribution<int> w(0, granularity);
  std::vector<Q> p(n);
  Q total = 0;
  while (total == 0) {
    total = 0;
    for (auto& x : p) {
      x = w(rng);
      total += x;
    }
  }
  for (auto& x : p) {
    x /= total;
    x.canonicalize();
  }
  return p;
}

inline double ising_plus(double beta, double h, double field) { return 0.5 * (1.0 + std::tanh(beta * field + beta * h)); }

}  // namespace oracle
