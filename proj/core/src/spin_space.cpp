#include "pcacouple/spin_space.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <set>

#include "pcacouple/error.hpp"

namespace pcacouple {

namespace {

SpinMask bit(std::size_t i) { return SpinMask{1} << i; }

}  // namespace

SpinPoset SpinPoset::build(std::vector<std::string> labels, const std::vector<Relation>& relations) {
  const std::size_t n = labels.size();
  if (n == 0) throw InvalidInput("spin space must have at least one element");
  if (n > kMaxSpinElements) {
    throw InvalidInput("spin space has " + std::to_string(n) + " elements; at most " +
                       std::to_string(kMaxSpinElements) + " supported");
  }
  {
    std::set<std::string> seen;
    for (const auto& l : labels) {
      if (l.empty()) throw InvalidInput("empty spin label");
      if (!seen.insert(l).second) throw InvalidInput("duplicate spin label '" + l + "'");
    }
  }

  SpinPoset p;
  p.labels_ = std::move(labels);
  p.leq_.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) p.leq_[i] = bit(i);
  for (const auto& [lo, hi] : relations) {
    const Spin a = p.index_of(lo);
    const Spin b = p.index_of(hi);
    if (a == b) throw InvalidInput("self relation on '" + lo + "'");
    p.leq_[a] |= bit(b);
  }
  // Warshall closure on bit rows.
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      if (p.leq_[i] & bit(k)) p.leq_[i] |= p.leq_[k];
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if ((p.leq_[i] & bit(j)) && (p.leq_[j] & bit(i))) {
        throw InvalidInput("order relations contain a cycle through '" + p.labels_[i] + "' and '" +
                           p.labels_[j] + "'");
      }
    }
  }
  p.geq_.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (p.leq_[j] & bit(i)) p.geq_[i] |= bit(j);
    }
  }
  // a < b is a cover iff no c with a < c < b.
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      if (a == b || !(p.leq_[a] & bit(b))) continue;
      const SpinMask between = (p.leq_[a] & p.geq_[b]) & ~(bit(a) | bit(b));
      if (between == 0) p.covers_.emplace_back(static_cast<Spin>(a), static_cast<Spin>(b));
    }
  }

  bool total = true;
  for (std::size_t i = 0; i < n && total; ++i) {
    total = ((p.leq_[i] | p.geq_[i]) == p.full_mask());
  }
  if (total) {
    p.chain_order_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      p.chain_order_[static_cast<std::size_t>(std::popcount(p.geq_[i])) - 1] = static_cast<Spin>(i);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (p.leq_[i] == p.full_mask()) p.bottom_ = static_cast<Spin>(i);
    if (p.geq_[i] == p.full_mask()) p.top_ = static_cast<Spin>(i);
  }
  return p;
}

SpinPoset SpinPoset::chain(std::vector<std::string> labels) {
  std::vector<Relation> rel;
  for (std::size_t i = 0; i + 1 < labels.size(); ++i) rel.emplace_back(labels[i], labels[i + 1]);
  return build(std::move(labels), rel);
}

std::optional<Spin> SpinPoset::find(std::string_view label) const {
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] == label) return static_cast<Spin>(i);
  }
  return std::nullopt;
}

Spin SpinPoset::index_of(std::string_view label) const {
  if (auto s = find(label)) return *s;
  throw InvalidInput("unknown spin label '" + std::string(label) + "'");
}

std::vector<Spin> SpinPoset::upper_covers(Spin s) const {
  std::vector<Spin> out;
  for (const auto& [a, b] : covers_) {
    if (a == s) out.push_back(b);
  }
  return out;
}

std::vector<Spin> SpinPoset::lower_covers(Spin s) const {
  std::vector<Spin> out;
  for (const auto& [a, b] : covers_) {
    if (b == s) out.push_back(a);
  }
  std::sort(out.begin(), out.end());
  return out;
}

SpinMask SpinPoset::full_mask() const {
  return size() == 64 ? ~SpinMask{0} : (bit(size()) - 1);
}

bool SpinPoset::is_up_set(SpinMask m) const {
  for (std::size_t s = 0; s < size(); ++s) {
    if ((m & bit(s)) && (leq_[s] & ~m)) return false;
  }
  return true;
}

bool SpinPoset::is_down_set(SpinMask m) const {
  for (std::size_t s = 0; s < size(); ++s) {
    if ((m & bit(s)) && (geq_[s] & ~m)) return false;
  }
  return true;
}

double SpinPoset::numeric_value(Spin s) const {
  std::string_view text = label(s);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw InvalidInput("spin label '" + label(s) + "' has no numeric value");
  }
  return v;
}

namespace {

std::vector<UpSet> enumerate_closed(const SpinPoset& poset, std::size_t cap, SetKind kind) {
  const std::size_t n = poset.size();
  if (n > cap) throw CapExceeded("up-set enumeration over spin elements", n, cap);
  if (n >= 63) throw CapExceeded("up-set enumeration over spin elements", n, 62);
  std::vector<UpSet> out;
  const SpinMask end = SpinMask{1} << n;
  for (SpinMask m = 0; m < end; ++m) {
    const bool closed = kind == SetKind::UpSet ? poset.is_up_set(m) : poset.is_down_set(m);
    if (closed) out.push_back(UpSet{m, kind});
  }
  return out;
}

}  // namespace

std::vector<UpSet> enumerate_up_sets(const SpinPoset& poset, std::size_t cap) {
  return enumerate_closed(poset, cap, SetKind::UpSet);
}

std::vector<UpSet> enumerate_down_sets(const SpinPoset& poset, std::size_t cap) {
  return enumerate_closed(poset, cap, SetKind::DownSet);
}

SpinMask LinearOrderWitness::prefix(std::size_t i) const {
  SpinMask m = 0;
  for (std::size_t j = 0; j <= i && j < sequence.size(); ++j) m |= bit(sequence[j]);
  return m;
}

std::size_t LinearOrderWitness::position(Spin s) const {
  auto it = std::find(sequence.begin(), sequence.end(), s);
  if (it == sequence.end()) throw InvalidInput("element not in linear order witness");
  return static_cast<std::size_t>(it - sequence.begin());
}

ClassZResult classify_class_z(const SpinPoset& poset) {
  const std::size_t n = poset.size();
  std::vector<std::vector<Spin>> neighbours(n);
  for (std::size_t s = 0; s < n; ++s) {
    const auto up = poset.upper_covers(static_cast<Spin>(s));
    const auto down = poset.lower_covers(static_cast<Spin>(s));
    const bool ok = (up.size() == 1 && down.size() == 1) || (down.empty() && up.size() <= 2) ||
                    (up.empty() && down.size() <= 2);
    if (!ok) {
      return NotInClassZ{static_cast<Spin>(s), "element '" + poset.label(static_cast<Spin>(s)) + "' has " +
                                                   std::to_string(up.size()) + " upper and " +
                                                   std::to_string(down.size()) + " lower covers"};
    }
    neighbours[s] = up;
    neighbours[s].insert(neighbours[s].end(), down.begin(), down.end());
    std::sort(neighbours[s].begin(), neighbours[s].end());
  }

  // Every element has at most two cover neighbours, so each start admits at
  // most two Hamiltonian paths; plain DFS is enough.
  std::vector<LinearOrderWitness> candidates;
  std::vector<Spin> path;
  SpinMask used = 0;
  auto dfs = [&](auto&& self) -> void {
    const SpinMask prefix = [&] {
      SpinMask m = 0;
      for (Spin s : path) m |= bit(s);
      return m;
    }();
    if (path.size() < n && !poset.is_up_set(prefix) && !poset.is_down_set(prefix)) return;
    if (path.size() == n) {
      LinearOrderWitness w;
      w.sequence = path;
      SpinMask m = 0;
      for (Spin s : path) {
        m |= bit(s);
        w.semi_kinds.push_back(poset.is_down_set(m) ? SetKind::DownSet : SetKind::UpSet);
      }
      candidates.push_back(std::move(w));
      return;
    }
    for (Spin next : neighbours[path.back()]) {
      if (used & bit(next)) continue;
      used |= bit(next);
      path.push_back(next);
      self(self);
      path.pop_back();
      used &= ~bit(next);
    }
  };
  for (std::size_t start = 0; start < n; ++start) {
    path = {static_cast<Spin>(start)};
    used = bit(start);
    dfs(dfs);
  }
  if (candidates.empty()) {
    return NotInClassZ{std::nullopt,
                       "no successor/predecessor enumeration whose prefixes are all up-sets or down-sets"};
  }
  auto starts_minimal = [&](const LinearOrderWitness& w) {
    return poset.lower_covers(w.sequence.front()).empty();
  };
  return *std::min_element(candidates.begin(), candidates.end(),
                           [&](const LinearOrderWitness& a, const LinearOrderWitness& b) {
                             const bool ma = starts_minimal(a);
                             const bool mb = starts_minimal(b);
                             if (ma != mb) return ma;
                             return a.sequence < b.sequence;
                           });
}

namespace spaces {

SpinPoset ising() { return SpinPoset::chain({"-1", "+1"}); }

SpinPoset q_chain(int q) {
  if (q < 2) throw InvalidInput("q must be at least 2");
  std::vector<std::string> labels;
  for (int i = 1; i <= q; ++i) labels.push_back(std::to_string(i));
  return SpinPoset::chain(std::move(labels));
}

SpinPoset diamond() {
  return SpinPoset::build({"00", "01", "10", "11"},
                          {{"00", "01"}, {"00", "10"}, {"01", "11"}, {"10", "11"}});
}

SpinPoset y_shape() {
  return SpinPoset::build({"x", "y", "z", "w"}, {{"x", "z"}, {"y", "z"}, {"z", "w"}});
}

SpinPoset zigzag() {
  std::vector<std::string> labels;
  for (int i = 1; i <= 10; ++i) labels.push_back("s" + std::to_string(i));
  return SpinPoset::build(std::move(labels), {{"s1", "s2"},
                                              {"s2", "s3"},
                                              {"s3", "s4"},
                                              {"s6", "s5"},
                                              {"s5", "s4"},
                                              {"s6", "s7"},
                                              {"s7", "s8"},
                                              {"s10", "s9"},
                                              {"s9", "s8"}});
}

SpinPoset not_class_z() {
  return SpinPoset::build({"x", "y", "z", "u", "v", "w"},
                          {{"y", "z"}, {"x", "z"}, {"w", "z"}, {"w", "u"}, {"w", "v"}});
}

}  // namespace spaces

}  // namespace pcacouple
