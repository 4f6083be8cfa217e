#include "pcacouple/monotonicity.hpp"

#include <algorithm>
#include <bit>
#include <memory>

#include "pcacouple/error.hpp"

namespace pcacouple {

std::string to_string(OrderMode mode) {
  switch (mode) {
    case OrderMode::Total:
      return "total";
    case OrderMode::ClassZ:
      return "class_z";
    case OrderMode::General:
      return "general";
  }
  return "?";
}

OrderMode order_mode_from_string(const std::string& text) {
  if (text == "total") return OrderMode::Total;
  if (text == "class_z" || text == "class-z") return OrderMode::ClassZ;
  if (text == "general") return OrderMode::General;
  throw InvalidInput("unknown order mode '" + text + "' (total | class_z | general)");
}

OrderContext OrderContext::make(const SpinPoset& spin, OrderMode mode, std::size_t up_set_cap) {
  OrderContext ctx;
  ctx.spin_ = &spin;
  ctx.mode_ = mode;
  switch (mode) {
    case OrderMode::Total: {
      if (!spin.is_chain()) throw InvalidInput("total-order mode needs a totally ordered spin space");
      SpinMask m = 0;
      for (Spin s : spin.chain_order()) {
        m |= SpinMask{1} << s;
        ctx.sets_.push_back(m);
        ctx.kinds_.push_back(SetKind::DownSet);
        ctx.sequence_.push_back(s);
      }
      break;
    }
    case OrderMode::ClassZ: {
      auto result = classify_class_z(spin);
      if (auto* no = std::get_if<NotInClassZ>(&result)) {
        throw InvalidInput("class-Z mode needs a linearly ordered spin space: " + no->reason);
      }
      const auto& w = std::get<LinearOrderWitness>(result);
      for (std::size_t i = 0; i < w.sequence.size(); ++i) {
        ctx.sets_.push_back(w.prefix(i));
        ctx.kinds_.push_back(w.semi_kinds[i]);
      }
      ctx.sequence_ = w.sequence;
      break;
    }
    case OrderMode::General: {
      for (const auto& g : enumerate_up_sets(spin, up_set_cap)) {
        ctx.sets_.push_back(g.members);
        ctx.kinds_.push_back(SetKind::UpSet);
      }
      break;
    }
  }
  return ctx;
}

std::string OrderContext::level_name(std::size_t i) const {
  if (!sequence_.empty()) return spin_->label(sequence_[i]);
  std::string out = "{";
  bool first = true;
  for (std::size_t s = 0; s < spin_->size(); ++s) {
    if ((sets_[i] >> s) & 1U) {
      if (!first) out += ",";
      out += spin_->label(static_cast<Spin>(s));
      first = false;
    }
  }
  return out + "}";
}

template <class T>
DistributionTable<T> distribution_of(std::span<const T> probabilities, const OrderContext& ctx) {
  if (probabilities.size() != ctx.spin().size()) throw InvalidInput("probability vector has the wrong length");
  DistributionTable<T> t;
  t.mode = ctx.mode();
  t.sequence.assign(ctx.sequence().begin(), ctx.sequence().end());
  t.values.reserve(ctx.level_count());
  for (std::size_t i = 0; i < ctx.level_count(); ++i) {
    t.sets.push_back(ctx.level_set(i));
    t.kinds.push_back(ctx.level_kind(i));
    T sum = T(0);
    for (std::size_t s = 0; s < probabilities.size(); ++s) {
      if ((ctx.level_set(i) >> s) & 1U) sum += probabilities[s];
    }
    t.values.push_back(sum);
  }
  if (ctx.mode() != OrderMode::General && !t.values.empty()) t.values.back() = T(1);
  return t;
}

template <class T>
DistributionTable<T> distribution_table(const LocalRule& rule, std::span<const Spin> pattern,
                                        const OrderContext& ctx) {
  const auto probs = rule.evaluate_as<T>(rule.encode(pattern));
  return distribution_of<T>(std::span<const T>(probs), ctx);
}

DistributionTable<double> distribution_table(const LocalRule& rule, std::span<const Spin> pattern, OrderMode mode) {
  const auto ctx = OrderContext::make(rule.spin(), mode);
  return distribution_table<double>(rule, pattern, ctx);
}

template DistributionTable<double> distribution_of<double>(std::span<const double>, const OrderContext&);
template DistributionTable<Rational> distribution_of<Rational>(std::span<const Rational>, const OrderContext&);
template DistributionTable<double> distribution_table<double>(const LocalRule&, std::span<const Spin>,
                                                              const OrderContext&);
template DistributionTable<Rational> distribution_table<Rational>(const LocalRule&, std::span<const Spin>,
                                                                  const OrderContext&);

Neighborhood common_neighborhood(const RuleRefs& rules) {
  if (rules.empty()) throw InvalidInput("empty rule tuple");
  const int dim = rules.front().get().neighborhood().dim;
  std::vector<Coord> offsets;
  for (const auto& r : rules) {
    if (r.get().neighborhood().dim != dim) throw InvalidInput("rules live in different dimensions");
    for (const auto& o : r.get().neighborhood().offsets) {
      if (std::find(offsets.begin(), offsets.end(), o) == offsets.end()) offsets.push_back(o);
    }
  }
  return Neighborhood{dim, std::move(offsets)};
}

namespace {

struct TupleLayout {
  Neighborhood common;
  /// positions[r][j]: index in the common neighbourhood of rule r's j-th offset.
  std::vector<std::vector<std::size_t>> positions;
};

TupleLayout layout_for(const RuleRefs& rules) {
  TupleLayout layout;
  layout.common = common_neighborhood(rules);
  const SpinPoset& spin = rules.front().get().spin();
  for (const auto& r : rules) {
    if (!(r.get().spin() == spin)) throw InvalidInput("rules in a tuple must share the spin space");
    std::vector<std::size_t> pos;
    for (const auto& o : r.get().neighborhood().offsets) pos.push_back(*layout.common.find(o));
    layout.positions.push_back(std::move(pos));
  }
  return layout;
}

std::size_t own_pattern(const LocalRule& rule, const std::vector<std::size_t>& positions,
                        std::span<const Spin> common_pattern) {
  const std::size_t n = rule.spin_count();
  std::size_t idx = 0;
  for (std::size_t p : positions) idx = idx * n + common_pattern[p];
  return idx;
}

Arithmetic resolve_arithmetic(const RuleRefs& rules, const CheckOptions& options) {
  if (options.arithmetic) return *options.arithmetic;
  const bool all_exact = std::all_of(rules.begin(), rules.end(),
                                     [](const auto& r) { return r.get().arithmetic() == Arithmetic::Exact; });
  return all_exact ? Arithmetic::Exact : Arithmetic::Float;
}

/// Signed amount by which `lower` and `upper` violate the level's inequality;
/// positive means violated.
template <class T>
T violation_amount(const T& lower, const T& upper, SetKind kind) {
  return kind == SetKind::DownSet ? T(upper - lower) : T(lower - upper);
}

template <class T>
void run_check(const RuleRefs& rules, const OrderContext& ctx, const TupleLayout& layout, const CheckOptions& options,
               MonotonicityVerdict& verdict) {
  const SpinPoset& spin = ctx.spin();
  const std::size_t n = spin.size();
  const std::size_t levels = ctx.level_count();
  const std::size_t width = layout.common.size();

  // Distribution tables for every own pattern of every rule.
  std::vector<std::vector<T>> tables;
  for (const auto& r : rules) {
    const LocalRule& rule = r.get();
    std::vector<T> table(rule.pattern_count() * levels);
    for (std::size_t p = 0; p < rule.pattern_count(); ++p) {
      const auto probs = rule.evaluate_as<T>(p);
      const auto dist = distribution_of<T>(std::span<const T>(probs), ctx);
      std::copy(dist.values.begin(), dist.values.end(), table.begin() + static_cast<std::ptrdiff_t>(p * levels));
    }
    tables.push_back(std::move(table));
  }

  std::vector<std::vector<Spin>> above(n);
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t t = 0; t < n; ++t) {
      if (spin.leq(static_cast<Spin>(s), static_cast<Spin>(t))) above[s].push_back(static_cast<Spin>(t));
    }
  }

  std::vector<Spin> lower(width, 0);
  std::vector<Spin> upper(width, 0);
  std::vector<std::size_t> cursor(width, 0);
  std::vector<std::size_t> lower_idx(rules.size());
  const T tolerance = ScalarTraits<T>::from_double(is_exact_v<T> ? 0.0 : options.tolerance);
  bool stop = false;

  auto examine_pair = [&] {
    ++verdict.pairs_checked;
    for (std::size_t i = 0; i + 1 < rules.size(); ++i) {
      const std::size_t hi = own_pattern(rules[i + 1].get(), layout.positions[i + 1], upper);
      const T* lo_row = tables[i].data() + lower_idx[i] * levels;
      const T* hi_row = tables[i + 1].data() + hi * levels;
      for (std::size_t l = 0; l < levels; ++l) {
        ++verdict.comparisons;
        const T amount = violation_amount(lo_row[l], hi_row[l], ctx.level_kind(l));
        if (!(amount > 0)) continue;
        if (!(amount > tolerance)) {
          ++verdict.suppressed;
          continue;
        }
        Violation v;
        v.component = i;
        v.lower_pattern = lower;
        v.upper_pattern = upper;
        v.level = l;
        v.level_set = ctx.level_set(l);
        v.level_kind = ctx.level_kind(l);
        v.level_name = ctx.level_name(l);
        v.lower_value = ScalarTraits<T>::to_double(lo_row[l]);
        v.upper_value = ScalarTraits<T>::to_double(hi_row[l]);
        if constexpr (is_exact_v<T>) {
          v.lower_exact = ScalarTraits<T>::to_string(lo_row[l]);
          v.upper_exact = ScalarTraits<T>::to_string(hi_row[l]);
        }
        verdict.increasing = false;
        if (!verdict.witness) verdict.witness = v;
        if (!options.collect_all) {
          stop = true;
          return;
        }
        if (verdict.violations.size() < options.max_collected) verdict.violations.push_back(std::move(v));
      }
    }
  };

  // Odometer over lower patterns, then over upper patterns above them.
  for (;;) {
    for (std::size_t i = 0; i < rules.size(); ++i) {
      lower_idx[i] = own_pattern(rules[i].get(), layout.positions[i], lower);
    }
    std::fill(cursor.begin(), cursor.end(), 0);
    for (std::size_t j = 0; j < width; ++j) upper[j] = above[lower[j]][0];
    for (;;) {
      examine_pair();
      if (stop) return;
      bool wrapped = true;
      for (std::size_t j = width; j-- > 0;) {
        if (++cursor[j] < above[lower[j]].size()) {
          upper[j] = above[lower[j]][cursor[j]];
          wrapped = false;
          break;
        }
        cursor[j] = 0;
        upper[j] = above[lower[j]][0];
      }
      if (wrapped) break;
    }
    bool wrapped = true;
    for (std::size_t j = width; j-- > 0;) {
      if (++lower[j] < n) {
        wrapped = false;
        break;
      }
      lower[j] = 0;
    }
    if (wrapped) return;
  }
}

}  // namespace

MonotonicityVerdict check_increasing_tuple(const RuleRefs& rules, const CheckOptions& options) {
  if (rules.size() < 2) throw InvalidInput("an increasing tuple needs at least two rules");
  const auto layout = layout_for(rules);
  const SpinPoset& spin = rules.front().get().spin();
  const auto ctx = OrderContext::make(spin, options.mode, options.up_set_cap);

  std::uint64_t comparable = 0;
  for (std::size_t s = 0; s < spin.size(); ++s) comparable += static_cast<std::uint64_t>(std::popcount(spin.above(static_cast<Spin>(s))));
  std::uint64_t pairs = 1;
  for (std::size_t j = 0; j < layout.common.size(); ++j) {
    if (pairs > options.pair_cap / comparable) {
      throw CapExceeded("ordered pattern pairs to check", pairs * comparable, options.pair_cap);
    }
    pairs *= comparable;
  }
  if (pairs > options.pair_cap) throw CapExceeded("ordered pattern pairs to check", pairs, options.pair_cap);

  MonotonicityVerdict verdict;
  verdict.mode = options.mode;
  verdict.arithmetic = resolve_arithmetic(rules, options);
  verdict.tolerance = verdict.arithmetic == Arithmetic::Exact ? 0.0 : options.tolerance;
  verdict.neighborhood = layout.common;
  if (verdict.arithmetic == Arithmetic::Exact) {
    run_check<Rational>(rules, ctx, layout, options, verdict);
  } else {
    run_check<double>(rules, ctx, layout, options, verdict);
  }
  if (options.collect_all && verdict.violations.empty() && verdict.witness) verdict.violations.push_back(*verdict.witness);
  return verdict;
}

MonotonicityVerdict check_attractive(const LocalRule& rule, const CheckOptions& options) {
  auto verdict = check_increasing_tuple(RuleRefs{std::cref(rule), std::cref(rule)}, options);
  verdict.label = "attractive";
  return verdict;
}

namespace {

template <class T>
bool reverify_impl(const RuleRefs& rules, const CheckOptions& options, const Violation& v) {
  const auto layout = layout_for(rules);
  if (v.component + 1 >= rules.size()) return false;
  if (v.lower_pattern.size() != layout.common.size() || v.upper_pattern.size() != layout.common.size()) return false;
  const SpinPoset& spin = rules.front().get().spin();
  for (std::size_t j = 0; j < v.lower_pattern.size(); ++j) {
    if (!spin.leq(v.lower_pattern[j], v.upper_pattern[j])) return false;
  }
  const auto ctx = OrderContext::make(spin, options.mode, options.up_set_cap);
  const LocalRule& lo_rule = rules[v.component].get();
  const LocalRule& hi_rule = rules[v.component + 1].get();
  const auto lo_probs = lo_rule.evaluate_as<T>(own_pattern(lo_rule, layout.positions[v.component], v.lower_pattern));
  const auto hi_probs = hi_rule.evaluate_as<T>(own_pattern(hi_rule, layout.positions[v.component + 1], v.upper_pattern));
  // Sum over the reported set directly rather than through the cached table.
  T lo = T(0);
  T hi = T(0);
  for (std::size_t s = 0; s < spin.size(); ++s) {
    if ((v.level_set >> s) & 1U) {
      lo += lo_probs[s];
      hi += hi_probs[s];
    }
  }
  const T amount = violation_amount(lo, hi, v.level_kind);
  const T tol = ScalarTraits<T>::from_double(is_exact_v<T> ? 0.0 : options.tolerance);
  return amount > tol;
}

}  // namespace

bool reverify(const RuleRefs& rules, const CheckOptions& options, const Violation& violation) {
  if (resolve_arithmetic(rules, options) == Arithmetic::Exact) return reverify_impl<Rational>(rules, options, violation);
  return reverify_impl<double>(rules, options, violation);
}

template <class T>
bool stochastic_leq_on_spin(std::span<const T> mu1, std::span<const T> mu2, const SpinPoset& poset, double tolerance) {
  if (mu1.size() != poset.size() || mu2.size() != poset.size()) throw InvalidInput("measure has the wrong length");
  const T tol = ScalarTraits<T>::from_double(tolerance);
  for (const auto& g : enumerate_up_sets(poset, kMaxSpinElements)) {
    T a = T(0);
    T b = T(0);
    for (std::size_t s = 0; s < poset.size(); ++s) {
      if (g.contains(static_cast<Spin>(s))) {
        a += mu1[s];
        b += mu2[s];
      }
    }
    if (a > b + tol) return false;
  }
  return true;
}

template bool stochastic_leq_on_spin<double>(std::span<const double>, std::span<const double>, const SpinPoset&,
                                             double);
template bool stochastic_leq_on_spin<Rational>(std::span<const Rational>, std::span<const Rational>,
                                               const SpinPoset&, double);

}  // namespace pcacouple
