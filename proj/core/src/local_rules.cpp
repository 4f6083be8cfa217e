#include "pcacouple/local_rules.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "pcacouple/error.hpp"

namespace pcacouple {

Coord operator+(const Coord& a, const Coord& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }

Coord operator-(const Coord& a) { return {-a[0], -a[1], -a[2]}; }

std::string to_string(const Coord& c, int dim) {
  std::string out = "(";
  for (int i = 0; i < dim; ++i) {
    if (i) out += ",";
    out += std::to_string(c[static_cast<std::size_t>(i)]);
  }
  return out + ")";
}

Neighborhood Neighborhood::from_offsets(int dim, std::vector<Coord> offsets) {
  if (dim < 1 || dim > kMaxDim) throw InvalidInput("lattice dimension must be 1, 2 or 3");
  std::set<Coord> seen;
  for (const auto& o : offsets) {
    for (int i = dim; i < kMaxDim; ++i) {
      if (o[static_cast<std::size_t>(i)] != 0) throw InvalidInput("offset has coordinates beyond dimension");
    }
    if (!seen.insert(o).second) throw InvalidInput("duplicate neighbourhood offset " + to_string(o, dim));
  }
  return Neighborhood{dim, std::move(offsets)};
}

Neighborhood Neighborhood::nearest(int dim) {
  std::vector<Coord> offsets;
  for (int i = 0; i < dim; ++i) {
    Coord e{0, 0, 0};
    e[static_cast<std::size_t>(i)] = 1;
    offsets.push_back(-e);
    offsets.push_back(e);
  }
  return from_offsets(dim, std::move(offsets));
}

Neighborhood Neighborhood::self(int dim) { return from_offsets(dim, {Coord{0, 0, 0}}); }

std::optional<std::size_t> Neighborhood::find(const Coord& offset) const {
  for (std::size_t i = 0; i < offsets.size(); ++i) {
    if (offsets[i] == offset) return i;
  }
  return std::nullopt;
}

int Neighborhood::radius() const {
  int r = 0;
  for (const auto& o : offsets) {
    for (int c : o) r = std::max(r, std::abs(c));
  }
  return r;
}

namespace {

std::size_t checked_pattern_count(std::size_t spins, std::size_t offsets) {
  std::size_t count = 1;
  for (std::size_t i = 0; i < offsets; ++i) {
    if (count > (std::size_t{1} << 40) / spins) {
      throw CapExceeded("neighbourhood pattern count", count * spins, std::size_t{1} << 40);
    }
    count *= spins;
  }
  return count;
}

}  // namespace

LocalRule LocalRule::from_exact_table(std::shared_ptr<const SpinPoset> spin, Neighborhood nbhd,
                                      std::vector<Rational> rows, std::string name) {
  LocalRule r;
  r.spin_ = std::move(spin);
  r.nbhd_ = std::move(nbhd);
  r.arithmetic_ = Arithmetic::Exact;
  r.name_ = std::move(name);
  const std::size_t n = r.spin_->size();
  r.pattern_count_ = checked_pattern_count(n, r.nbhd_.size());
  if (rows.size() != r.pattern_count_ * n) {
    throw InvalidInput("rule table for '" + r.name_ + "' has " + std::to_string(rows.size()) +
                       " entries, expected " + std::to_string(r.pattern_count_ * n));
  }
  for (std::size_t p = 0; p < r.pattern_count_; ++p) {
    Rational sum = 0;
    for (std::size_t s = 0; s < n; ++s) {
      Rational& q = rows[p * n + s];
      q.canonicalize();
      if (q < 0) throw InvalidInput("negative probability in rule '" + r.name_ + "'");
      sum += q;
    }
    if (sum != 1) {
      throw InvalidInput("row " + std::to_string(p) + " of rule '" + r.name_ + "' sums to " + sum.get_str());
    }
  }
  r.rows_.reserve(rows.size());
  for (const auto& q : rows) r.rows_.push_back(q.get_d());
  r.exact_rows_ = std::move(rows);
  return r;
}

LocalRule LocalRule::from_float_table(std::shared_ptr<const SpinPoset> spin, Neighborhood nbhd,
                                      std::vector<double> rows, std::string name) {
  LocalRule r;
  r.spin_ = std::move(spin);
  r.nbhd_ = std::move(nbhd);
  r.arithmetic_ = Arithmetic::Float;
  r.name_ = std::move(name);
  const std::size_t n = r.spin_->size();
  r.pattern_count_ = checked_pattern_count(n, r.nbhd_.size());
  if (rows.size() != r.pattern_count_ * n) {
    throw InvalidInput("rule table for '" + r.name_ + "' has " + std::to_string(rows.size()) +
                       " entries, expected " + std::to_string(r.pattern_count_ * n));
  }
  r.exact_rows_.resize(rows.size());
  for (std::size_t p = 0; p < r.pattern_count_; ++p) {
    const double* row = rows.data() + p * n;
    double sum = 0.0;
    std::size_t largest = 0;
    for (std::size_t s = 0; s < n; ++s) {
      if (!(row[s] >= 0.0) || !std::isfinite(row[s])) {
        throw InvalidInput("invalid probability in rule '" + r.name_ + "'");
      }
      sum += row[s];
      if (row[s] > row[largest]) largest = s;
    }
    if (std::fabs(sum - 1.0) > 1e-12) {
      throw InvalidInput("row " + std::to_string(p) + " of rule '" + r.name_ + "' sums to " +
                         ScalarTraits<double>::to_string(sum));
    }
    Rational rest = 1;
    for (std::size_t s = 0; s < n; ++s) {
      if (s == largest) continue;
      r.exact_rows_[p * n + s] = Rational(row[s]);
      rest -= r.exact_rows_[p * n + s];
    }
    r.exact_rows_[p * n + largest] = rest;
  }
  r.rows_ = std::move(rows);
  return r;
}

std::size_t LocalRule::encode(std::span<const Spin> pattern) const {
  if (pattern.size() != nbhd_.size()) {
    throw InvalidInput("pattern of length " + std::to_string(pattern.size()) + " for a neighbourhood of size " +
                       std::to_string(nbhd_.size()));
  }
  const std::size_t n = spin_->size();
  std::size_t idx = 0;
  for (Spin s : pattern) {
    if (s >= n) throw InvalidInput("pattern spin out of range");
    idx = idx * n + s;
  }
  return idx;
}

std::vector<Spin> LocalRule::decode(std::size_t pattern_index) const {
  check_pattern_index(pattern_index);
  const std::size_t n = spin_->size();
  std::vector<Spin> out(nbhd_.size());
  for (std::size_t j = out.size(); j-- > 0;) {
    out[j] = static_cast<Spin>(pattern_index % n);
    pattern_index /= n;
  }
  return out;
}

void LocalRule::check_pattern_index(std::size_t pattern_index) const {
  if (pattern_index >= pattern_count_) throw InvalidInput("unknown pattern index for rule '" + name_ + "'");
}

std::span<const double> LocalRule::row(std::size_t pattern_index) const {
  check_pattern_index(pattern_index);
  if (!tabulated()) throw InvalidInput("rule '" + name_ + "' is evaluated on the fly; no table row");
  const std::size_t n = spin_->size();
  return {rows_.data() + pattern_index * n, n};
}

std::span<const Rational> LocalRule::exact_row(std::size_t pattern_index) const {
  check_pattern_index(pattern_index);
  if (!tabulated()) throw InvalidInput("rule '" + name_ + "' is evaluated on the fly; no exact row");
  const std::size_t n = spin_->size();
  return {exact_rows_.data() + pattern_index * n, n};
}

std::vector<double> LocalRule::evaluate(std::span<const Spin> pattern) const {
  return evaluate(encode(pattern));
}

namespace {

std::pair<double, double> ising_probabilities(double field) {
  const double t = std::tanh(field);
  return {0.5 * (1.0 - t), 0.5 * (1.0 + t)};
}

}  // namespace

std::vector<double> LocalRule::evaluate(std::size_t pattern_index) const {
  if (tabulated()) {
    auto r = row(pattern_index);
    return {r.begin(), r.end()};
  }
  const auto pattern = decode(pattern_index);
  double sum = 0.0;
  for (std::size_t j = 0; j < pattern.size(); ++j) {
    sum += ising_->coupling[j] * (pattern[j] == 0 ? -1.0 : 1.0);
  }
  auto [minus, plus] = ising_probabilities(ising_->beta * sum + ising_->beta * ising_->h);
  return {minus, plus};
}

template <>
std::vector<double> LocalRule::evaluate_as<double>(std::size_t pattern_index) const {
  return evaluate(pattern_index);
}

template <>
std::vector<Rational> LocalRule::evaluate_as<Rational>(std::size_t pattern_index) const {
  auto r = exact_row(pattern_index);
  return {r.begin(), r.end()};
}

LocalRule ising_rule(double beta, double h, const std::vector<std::pair<Coord, double>>& coupling, int dim,
                     std::size_t max_tabulated_offsets) {
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw InvalidInput("ising rule needs beta >= 0");
  if (!std::isfinite(h)) throw InvalidInput("ising rule needs a finite field h");
  std::vector<Coord> offsets;
  std::vector<double> k_values;
  for (const auto& [o, k] : coupling) {
    offsets.push_back(o);
    k_values.push_back(k);
  }
  auto nbhd = Neighborhood::from_offsets(dim, offsets);
  for (std::size_t j = 0; j < offsets.size(); ++j) {
    auto mirror = nbhd.find(-offsets[j]);
    if (!mirror || k_values[*mirror] != k_values[j]) {
      throw InvalidInput("interaction K is not symmetric at offset " + to_string(offsets[j], dim));
    }
  }

  auto spin = std::make_shared<const SpinPoset>(spaces::ising());
  char name[96];
  std::snprintf(name, sizeof(name), "ising(beta=%g,h=%g)", beta, h);

  if (offsets.size() > max_tabulated_offsets) {
    LocalRule r;
    r.spin_ = std::move(spin);
    r.nbhd_ = std::move(nbhd);
    r.arithmetic_ = Arithmetic::Float;
    r.name_ = name;
    r.pattern_count_ = checked_pattern_count(2, r.nbhd_.size());
    r.ising_ = LocalRule::OnTheFlyIsing{beta, h, k_values};
    return r;
  }

  const std::size_t patterns = std::size_t{1} << offsets.size();
  std::vector<double> rows(patterns * 2);
  for (std::size_t p = 0; p < patterns; ++p) {
    double sum = 0.0;
    for (std::size_t j = 0; j < offsets.size(); ++j) {
      // first offset is the most significant digit
      const bool plus = (p >> (offsets.size() - 1 - j)) & 1U;
      sum += k_values[j] * (plus ? 1.0 : -1.0);
    }
    auto [minus, plus] = ising_probabilities(beta * sum + beta * h);
    rows[2 * p] = minus;
    rows[2 * p + 1] = plus;
  }
  return LocalRule::from_float_table(std::move(spin), std::move(nbhd), std::move(rows), name);
}

LocalRule ising_rule_nearest(double beta, double h, double k_value, int dim) {
  std::vector<std::pair<Coord, double>> coupling;
  for (const auto& o : Neighborhood::nearest(dim).offsets) coupling.emplace_back(o, k_value);
  return ising_rule(beta, h, coupling, dim);
}

LocalRule qstate_rule(double beta, int q, const Neighborhood& nbhd) {
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw InvalidInput("q-state rule needs beta >= 0");
  auto spin = std::make_shared<const SpinPoset>(spaces::q_chain(q));
  const std::size_t n = static_cast<std::size_t>(q);
  const std::size_t patterns = checked_pattern_count(n, nbhd.size());
  std::vector<double> rows(patterns * n);
  std::vector<Spin> pattern(nbhd.size());
  for (std::size_t p = 0; p < patterns; ++p) {
    std::size_t rest = p;
    for (std::size_t j = pattern.size(); j-- > 0;) {
      pattern[j] = static_cast<Spin>(rest % n);
      rest /= n;
    }
    // N(s) is nonincreasing in s, so N(bottom) = |V| is the max exponent.
    double norm = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
      const auto count = std::count_if(pattern.begin(), pattern.end(), [&](Spin v) { return v >= s; });
      rows[p * n + s] = std::exp(beta * (static_cast<double>(count) - static_cast<double>(pattern.size())));
      norm += rows[p * n + s];
    }
    for (std::size_t s = 0; s < n; ++s) rows[p * n + s] /= norm;
  }
  char name[64];
  std::snprintf(name, sizeof(name), "qstate(beta=%g,q=%d)", beta, q);
  return LocalRule::from_float_table(std::move(spin), nbhd, std::move(rows), name);
}

LocalRule counterexample_rule(Counterexample which) {
  const Rational half(1, 2);
  if (which == Counterexample::A) {
    auto spin = std::make_shared<const SpinPoset>(spaces::diamond());
    auto idx = [&](const char* l) { return static_cast<std::size_t>(spin->index_of(l)); };
    std::vector<Rational> rows(16, Rational(0));
    auto set = [&](const char* from, const char* a, const char* b) {
      rows[idx(from) * 4 + idx(a)] += half;
      rows[idx(from) * 4 + idx(b)] += half;
    };
    set("00", "00", "10");
    set("10", "00", "11");
    set("01", "01", "10");
    set("11", "10", "11");
    return LocalRule::from_exact_table(spin, Neighborhood::self(1), std::move(rows), "counterexample_A");
  }

  auto spin = std::make_shared<const SpinPoset>(spaces::y_shape());
  auto idx = [&](const char* l) { return static_cast<std::size_t>(spin->index_of(l)); };
  const std::size_t n = 4;
  std::vector<Rational> rows(n * n * n, Rational(0));
  std::vector<bool> listed(n * n, false);
  auto set = [&](const char* left, const char* right, const char* a, const char* b) {
    const std::size_t p = idx(left) * n + idx(right);
    listed[p] = true;
    if (std::string(a) == b) {
      rows[p * n + idx(a)] = 1;
    } else {
      rows[p * n + idx(a)] = half;
      rows[p * n + idx(b)] = half;
    }
  };
  set("x", "y", "x", "y");
  set("x", "z", "x", "w");
  set("z", "y", "y", "w");
  set("z", "z", "z", "w");
  set("y", "y", "y", "y");
  set("y", "z", "z", "z");
  set("z", "x", "z", "z");
  set("x", "x", "x", "x");
  set("y", "x", "z", "z");
  for (std::size_t p = 0; p < n * n; ++p) {
    if (!listed[p]) rows[p * n + idx("w")] = 1;
  }
  auto nbhd = Neighborhood::from_offsets(1, {Coord{0, 0, 0}, Coord{1, 0, 0}});
  return LocalRule::from_exact_table(spin, std::move(nbhd), std::move(rows), "counterexample_B");
}

Dynamics Dynamics::homogeneous(std::shared_ptr<const LocalRule> rule) {
  if (!rule) throw InvalidInput("null rule");
  Dynamics d;
  d.fallback_ = std::move(rule);
  return d;
}

Dynamics Dynamics::per_site(std::shared_ptr<const LocalRule> fallback,
                            std::map<Coord, std::shared_ptr<const LocalRule>> overrides) {
  Dynamics d = homogeneous(std::move(fallback));
  for (const auto& [site, rule] : overrides) {
    if (!rule) throw InvalidInput("null rule");
    if (!(rule->spin() == d.fallback_->spin())) throw InvalidInput("per-site rules must share the spin space");
    if (rule->neighborhood().dim != d.dim()) throw InvalidInput("per-site rules must share the dimension");
  }
  d.overrides_ = std::move(overrides);
  return d;
}

const std::shared_ptr<const LocalRule>& Dynamics::rule_ptr_at(const Coord& site) const {
  if (!overrides_.empty()) {
    if (auto it = overrides_.find(site); it != overrides_.end()) return it->second;
  }
  return fallback_;
}

int Dynamics::radius() const {
  int r = fallback_->neighborhood().radius();
  for (const auto& [site, rule] : overrides_) r = std::max(r, rule->neighborhood().radius());
  return r;
}

}  // namespace pcacouple
