#include "pcacouple_cli/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "pcacouple/error.hpp"

namespace pcacouple::cli {

namespace pt = boost::property_tree;

namespace {

std::vector<std::string> split_ws(const std::string& text) {
  std::istringstream is(text);
  std::vector<std::string> out;
  for (std::string tok; is >> tok;) out.push_back(tok);
  return out;
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? sep : "") + parts[i];
  return out;
}

double parse_double(const std::string& text, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw InvalidInput("bad number for " + what + ": '" + text + "'");
  }
}

template <class I>
I parse_int(const std::string& text, const std::string& what) {
  I v{};
  const auto* end = text.data() + text.size();
  auto [p, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || p != end) throw InvalidInput("bad integer for " + what + ": '" + text + "'");
  return v;
}

bool parse_bool(const std::string& text, const std::string& what) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw InvalidInput("bad boolean for " + what + ": '" + text + "'");
}

class Section {
 public:
  Section(const pt::ptree& tree, std::string name) : tree_(tree), name_(std::move(name)) {}

  std::optional<std::string> get(const std::string& key) {
    seen_.push_back(key);
    auto it = tree_.find(key);
    if (it == tree_.not_found()) return std::nullopt;
    return it->second.data();
  }
  template <class F>
  void read(const std::string& key, F&& apply) {
    if (auto v = get(key)) apply(*v, name_ + "." + key);
  }
  void finish() const {
    for (const auto& [key, value] : tree_) {
      if (key.rfind("row.", 0) == 0 && name_.rfind("rule:", 0) == 0) continue;
      if (std::find(seen_.begin(), seen_.end(), key) == seen_.end())
        throw InvalidInput("unknown key '" + key + "' in section [" + name_ + "]");
    }
  }

 private:
  const pt::ptree& tree_;
  std::string name_;
  std::vector<std::string> seen_;
};

std::vector<std::uint64_t> parse_u64_list(const std::string& text, const std::string& what) {
  std::vector<std::uint64_t> out;
  for (const auto& tok : split_ws(text)) out.push_back(parse_int<std::uint64_t>(tok, what));
  return out;
}

std::string format_coords(const std::vector<Coord>& cs, int dim) {
  std::vector<std::string> parts;
  for (const auto& c : cs) parts.push_back(format_coord(c, dim));
  return join(parts, " ");
}

template <class T>
std::string format_list(const std::vector<T>& xs) {
  std::vector<std::string> parts;
  for (const auto& x : xs) parts.push_back(std::to_string(x));
  return join(parts, " ");
}

}  // namespace

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  // Prefer the shortest representation that reads back identically.
  for (int prec = 1; prec <= 17; ++prec) {
    char shorter[40];
    std::snprintf(shorter, sizeof(shorter), "%.*g", prec, x);
    if (std::stod(shorter) == x) return shorter;
  }
  return buf;
}

Coord parse_coord(const std::string& text, int dim) {
  const auto parts = split(text, ',');
  if (static_cast<int>(parts.size()) != dim)
    throw InvalidInput("coordinate '" + text + "' needs " + std::to_string(dim) + " components");
  Coord c{0, 0, 0};
  for (int d = 0; d < dim; ++d) c[d] = parse_int<int>(parts[d], "coordinate");
  return c;
}

std::vector<Coord> parse_coords(const std::string& text, int dim) {
  std::vector<Coord> out;
  for (const auto& tok : split_ws(text)) out.push_back(parse_coord(tok, dim));
  return out;
}

std::string format_coord(const Coord& c, int dim) {
  std::string out;
  for (int d = 0; d < dim; ++d) out += (d ? "," : "") + std::to_string(c[d]);
  return out;
}

const RuleSpec& ExperimentConfig::rule(const std::string& name) const {
  for (const auto& r : rules)
    if (r.name == name) return r;
  throw InvalidInput("unknown rule '" + name + "'");
}

ExperimentConfig parse_config(std::istream& in) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw InvalidInput(std::string("config: ") + e.message() + " at line " + std::to_string(e.line()));
  }
  ExperimentConfig cfg;
  std::map<std::size_t, ComponentConfig> components;
  for (const auto& [name, body] : tree) {
    if (!body.data().empty()) throw InvalidInput("config: key '" + name + "' outside any section");
    Section s(body, name);
    if (name == "spin") {
      s.read("builtin", [&](const std::string& v, const auto&) { cfg.spin.builtin = v; });
      s.read("labels", [&](const std::string& v, const auto&) { cfg.spin.labels = split_ws(v); });
      s.read("covers", [&](const std::string& v, const std::string& what) {
        for (const auto& tok : split_ws(v)) {
          const auto parts = split(tok, '<');
          if (parts.size() != 2) throw InvalidInput("bad cover '" + tok + "' in " + what);
          cfg.spin.covers.emplace_back(parts[0], parts[1]);
        }
      });
    } else if (name.rfind("rule:", 0) == 0) {
      RuleSpec r;
      r.name = name.substr(5);
      if (r.name.empty()) throw InvalidInput("config: rule section without a name");
      s.read("kind", [&](const std::string& v, const auto&) { r.kind = v; });
      s.read("beta", [&](const std::string& v, const std::string& w) { r.beta = parse_double(v, w); });
      s.read("h", [&](const std::string& v, const std::string& w) { r.h = parse_double(v, w); });
      s.read("dim", [&](const std::string& v, const std::string& w) { r.dim = parse_int<int>(v, w); });
      s.read("K", [&](const std::string& v, const std::string& w) { r.k_nearest = parse_double(v, w); });
      s.read("coupling", [&](const std::string& v, const std::string& w) {
        for (const auto& tok : split_ws(v)) {
          const auto parts = split(tok, '@');
          if (parts.size() != 2) throw InvalidInput("bad coupling entry '" + tok + "' in " + w);
          r.coupling.emplace_back(parse_coord(parts[0], r.dim), parse_double(parts[1], w));
        }
      });
      s.read("q", [&](const std::string& v, const std::string& w) { r.q = parse_int<int>(v, w); });
      s.read("offsets", [&](const std::string& v, const auto&) { r.offsets = parse_coords(v, r.dim); });
      s.read("arithmetic", [&](const std::string& v, const auto&) { r.arithmetic = v; });
      s.read("default", [&](const std::string& v, const auto&) { r.default_row = v; });
      for (const auto& [key, value] : body)
        if (key.rfind("row.", 0) == 0) r.rows[key.substr(4)] = value.data();
      s.finish();
      cfg.rules.push_back(std::move(r));
      continue;
    } else if (name == "volume") {
      s.read("shape", [&](const std::string& v, const auto&) { cfg.volume.shape = v; });
      s.read("dim", [&](const std::string& v, const std::string& w) { cfg.volume.dim = parse_int<int>(v, w); });
      s.read("sides", [&](const std::string& v, const std::string& w) {
        cfg.volume.sides.clear();
        for (auto x : parse_u64_list(v, w)) cfg.volume.sides.push_back(static_cast<int>(x));
      });
      s.read("radius", [&](const std::string& v, const std::string& w) { cfg.volume.radius = parse_int<int>(v, w); });
      s.read("sites", [&](const std::string& v, const auto&) { cfg.volume.sites = parse_coords(v, cfg.volume.dim); });
    } else if (name.rfind("component:", 0) == 0) {
      const auto idx = parse_int<std::size_t>(name.substr(10), "component index");
      ComponentConfig c;
      s.read("rule", [&](const std::string& v, const auto&) { c.rule = v; });
      s.read("boundary", [&](const std::string& v, const auto&) { c.boundary = v; });
      s.read("initial", [&](const std::string& v, const auto&) { c.initial = v; });
      s.read("restrict", [&](const std::string& v, const auto&) { c.restrict_to = parse_coords(v, cfg.volume.dim); });
      if (!components.emplace(idx, std::move(c)).second) throw InvalidInput("duplicate component " + name);
    } else if (name == "run") {
      s.read("steps", [&](const std::string& v, const std::string& w) { cfg.run.steps = parse_int<std::uint64_t>(v, w); });
      s.read("stride", [&](const std::string& v, const std::string& w) { cfg.run.stride = parse_int<std::uint64_t>(v, w); });
      s.read("replicas", [&](const std::string& v, const std::string& w) { cfg.run.replicas = parse_int<std::uint64_t>(v, w); });
      s.read("seed", [&](const std::string& v, const std::string& w) { cfg.run.seed = parse_int<std::uint64_t>(v, w); });
      s.read("threads", [&](const std::string& v, const std::string& w) { cfg.run.threads = parse_int<unsigned>(v, w); });
      s.read("certify", [&](const std::string& v, const std::string& w) { cfg.run.certify = parse_bool(v, w); });
    } else if (name == "check") {
      s.read("mode", [&](const std::string& v, const auto&) { cfg.check.mode = v; });
      s.read("tolerance", [&](const std::string& v, const std::string& w) { cfg.check.tolerance = parse_double(v, w); });
      s.read("arithmetic", [&](const std::string& v, const auto&) { cfg.check.arithmetic = v; });
      s.read("state_cap", [&](const std::string& v, const std::string& w) { cfg.check.state_cap = parse_int<std::uint64_t>(v, w); });
      s.read("up_set_cap", [&](const std::string& v, const std::string& w) { cfg.check.up_set_cap = parse_int<std::uint64_t>(v, w); });
      s.read("pair_cap", [&](const std::string& v, const std::string& w) { cfg.check.pair_cap = parse_int<std::uint64_t>(v, w); });
      s.read("map_cap", [&](const std::string& v, const std::string& w) { cfg.check.map_cap = parse_int<std::uint64_t>(v, w); });
      s.read("tuple", [&](const std::string& v, const auto&) { cfg.check.tuple = split_ws(v); });
    } else if (name == "analysis") {
      const int dim = cfg.volume.dim;
      s.read("n_max", [&](const std::string& v, const std::string& w) { cfg.analysis.n_max = parse_int<std::uint64_t>(v, w); });
      s.read("n_list", [&](const std::string& v, const std::string& w) { cfg.analysis.n_list = parse_u64_list(v, w); });
      s.read("L_list", [&](const std::string& v, const std::string& w) {
        for (auto x : parse_u64_list(v, w)) cfg.analysis.L_list.push_back(static_cast<int>(x));
      });
      s.read("lambda", [&](const std::string& v, const auto&) { cfg.analysis.lambda = parse_coords(v, dim); });
      s.read("xi", [&](const std::string& v, const auto&) { cfg.analysis.xi = v; });
      s.read("function", [&](const std::string& v, const auto&) { cfg.analysis.function = v; });
      s.read("inner", [&](const std::string& v, const auto&) { cfg.analysis.inner = parse_coords(v, dim); });
      s.read("outer", [&](const std::string& v, const auto&) { cfg.analysis.outer = parse_coords(v, dim); });
      s.read("patterns", [&](const std::string& v, const auto&) { cfg.analysis.patterns = split_ws(v); });
      s.read("margin", [&](const std::string& v, const std::string& w) { cfg.analysis.margin = parse_int<int>(v, w); });
    } else if (name == "output") {
      s.read("csv", [&](const std::string& v, const auto&) { cfg.output.csv = v; });
      s.read("json", [&](const std::string& v, const auto&) { cfg.output.json = v; });
      s.read("snapshot", [&](const std::string& v, const auto&) { cfg.output.snapshot = v; });
    } else {
      throw InvalidInput("config: unknown section [" + name + "]");
    }
    s.finish();
  }
  std::size_t expected = 0;
  for (auto& [idx, c] : components) {
    if (idx != expected++) throw InvalidInput("config: component indices must be 0, 1, 2, ...");
    cfg.components.push_back(std::move(c));
  }
  return cfg;
}

ExperimentConfig parse_config_string(const std::string& text) {
  std::istringstream is(text);
  return parse_config(is);
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open config file '" + path + "'");
  return parse_config(in);
}

void write_config(std::ostream& out, const ExperimentConfig& cfg) {
  // Sections are emitted in a fixed order, volume first so later sections
  // can read coordinates with the right dimension.
  pt::ptree tree;
  auto section = [&](const std::string& name) -> pt::ptree& {
    return tree.push_back({name, pt::ptree()})->second;
  };
  {
    auto& v = section("volume");
    v.put("shape", cfg.volume.shape);
    v.put("dim", cfg.volume.dim);
    v.put("sides", format_list(cfg.volume.sides));
    v.put("radius", cfg.volume.radius);
    if (!cfg.volume.sites.empty()) v.put("sites", format_coords(cfg.volume.sites, cfg.volume.dim));
  }
  if (!cfg.spin.builtin.empty() || !cfg.spin.labels.empty()) {
    auto& s = section("spin");
    if (!cfg.spin.builtin.empty()) s.put("builtin", cfg.spin.builtin);
    if (!cfg.spin.labels.empty()) s.put("labels", join(cfg.spin.labels, " "));
    if (!cfg.spin.covers.empty()) {
      std::vector<std::string> parts;
      for (const auto& [a, b] : cfg.spin.covers) parts.push_back(a + "<" + b);
      s.put("covers", join(parts, " "));
    }
  }
  for (const auto& r : cfg.rules) {
    auto& s = section("rule:" + r.name);
    s.push_back({"kind", pt::ptree(r.kind)});
    s.push_back({"dim", pt::ptree(std::to_string(r.dim))});
    s.push_back({"beta", pt::ptree(format_double(r.beta))});
    s.push_back({"h", pt::ptree(format_double(r.h))});
    if (r.k_nearest) s.push_back({"K", pt::ptree(format_double(*r.k_nearest))});
    if (!r.coupling.empty()) {
      std::vector<std::string> parts;
      for (const auto& [c, k] : r.coupling) parts.push_back(format_coord(c, r.dim) + "@" + format_double(k));
      s.push_back({"coupling", pt::ptree(join(parts, " "))});
    }
    s.push_back({"q", pt::ptree(std::to_string(r.q))});
    if (!r.offsets.empty()) s.push_back({"offsets", pt::ptree(format_coords(r.offsets, r.dim))});
    s.push_back({"arithmetic", pt::ptree(r.arithmetic)});
    if (!r.default_row.empty()) s.push_back({"default", pt::ptree(r.default_row)});
    for (const auto& [k, v] : r.rows) s.push_back({"row." + k, pt::ptree(v)});
  }
  for (std::size_t i = 0; i < cfg.components.size(); ++i) {
    const auto& c = cfg.components[i];
    auto& s = section("component:" + std::to_string(i));
    s.put("rule", c.rule);
    s.put("boundary", c.boundary);
    s.put("initial", c.initial);
    if (c.restrict_to) s.put("restrict", format_coords(*c.restrict_to, cfg.volume.dim));
  }
  {
    auto& s = section("run");
    s.put("steps", cfg.run.steps);
    s.put("stride", cfg.run.stride);
    s.put("replicas", cfg.run.replicas);
    if (cfg.run.seed) s.put("seed", *cfg.run.seed);
    s.put("threads", cfg.run.threads);
    s.put("certify", cfg.run.certify ? "true" : "false");
  }
  {
    auto& s = section("check");
    s.put("mode", cfg.check.mode);
    s.put("tolerance", format_double(cfg.check.tolerance));
    s.put("arithmetic", cfg.check.arithmetic);
    s.put("state_cap", cfg.check.state_cap);
    s.put("up_set_cap", cfg.check.up_set_cap);
    s.put("pair_cap", cfg.check.pair_cap);
    s.put("map_cap", cfg.check.map_cap);
    if (!cfg.check.tuple.empty()) s.put("tuple", join(cfg.check.tuple, " "));
  }
  {
    const int dim = cfg.volume.dim;
    auto& s = section("analysis");
    s.put("n_max", cfg.analysis.n_max);
    if (!cfg.analysis.n_list.empty()) s.put("n_list", format_list(cfg.analysis.n_list));
    if (!cfg.analysis.L_list.empty()) s.put("L_list", format_list(cfg.analysis.L_list));
    if (!cfg.analysis.lambda.empty()) s.put("lambda", format_coords(cfg.analysis.lambda, dim));
    s.put("xi", cfg.analysis.xi);
    if (!cfg.analysis.function.empty()) s.put("function", cfg.analysis.function);
    if (!cfg.analysis.inner.empty()) s.put("inner", format_coords(cfg.analysis.inner, dim));
    if (!cfg.analysis.outer.empty()) s.put("outer", format_coords(cfg.analysis.outer, dim));
    if (!cfg.analysis.patterns.empty()) s.put("patterns", join(cfg.analysis.patterns, " "));
    s.put("margin", cfg.analysis.margin);
  }
  if (!cfg.output.csv.empty() || !cfg.output.json.empty() || !cfg.output.snapshot.empty()) {
    auto& s = section("output");
    if (!cfg.output.csv.empty()) s.put("csv", cfg.output.csv);
    if (!cfg.output.json.empty()) s.put("json", cfg.output.json);
    if (!cfg.output.snapshot.empty()) s.put("snapshot", cfg.output.snapshot);
  }
  pt::write_ini(out, tree);
}

std::string config_to_string(const ExperimentConfig& config) {
  std::ostringstream os;
  write_config(os, config);
  return os.str();
}

// ---------------------------------------------------------------------------
// Materialization

SpinPoset build_spin(const SpinSpec& spec) {
  if (!spec.builtin.empty()) {
    const auto& b = spec.builtin;
    if (b == "ising") return spaces::ising();
    if (b == "diamond" || b == "S_A") return spaces::diamond();
    if (b == "y_shape" || b == "S_B") return spaces::y_shape();
    if (b == "zigzag" || b == "S_C") return spaces::zigzag();
    if (b == "not_class_z" || b == "S_D") return spaces::not_class_z();
    if (b.rfind("chain:", 0) == 0) return spaces::q_chain(parse_int<int>(b.substr(6), "chain size"));
    throw InvalidInput("unknown builtin spin space '" + b + "'");
  }
  if (spec.labels.empty()) throw InvalidInput("spin space needs a builtin or a label list");
  return SpinPoset::build(spec.labels, spec.covers);
}

LocalRule build_rule(const RuleSpec& r, const std::shared_ptr<const SpinPoset>& spin) {
  if (r.kind == "ising") {
    if (!r.coupling.empty()) return ising_rule(r.beta, r.h, r.coupling, r.dim);
    return ising_rule_nearest(r.beta, r.h, r.k_nearest.value_or(1.0), r.dim);
  }
  if (r.kind == "qstate") {
    auto offsets = r.offsets;
    if (offsets.empty()) offsets = Neighborhood::nearest(r.dim).offsets;
    return qstate_rule(r.beta, r.q, Neighborhood::from_offsets(r.dim, offsets));
  }
  if (r.kind == "counterexample_A") return counterexample_rule(Counterexample::A);
  if (r.kind == "counterexample_B") return counterexample_rule(Counterexample::B);
  if (r.kind == "table") {
    if (!spin) throw InvalidInput("table rule '" + r.name + "' needs a [spin] section");
    auto nbhd = Neighborhood::from_offsets(r.dim, r.offsets.empty() ? Neighborhood::self(r.dim).offsets : r.offsets);
    const std::size_t n = spin->size();
    std::size_t patterns = 1;
    for (std::size_t j = 0; j < nbhd.size(); ++j) patterns *= n;
    std::vector<std::string> row_text(patterns, r.default_row);
    for (const auto& [key, value] : r.rows) {
      const auto labels = split(key, '|');
      if (labels.size() != nbhd.size()) throw InvalidInput("row key '" + key + "' does not match the neighbourhood");
      std::size_t idx = 0;
      for (const auto& l : labels) idx = idx * n + spin->index_of(l);
      row_text[idx] = value;
    }
    const bool exact = r.arithmetic == "exact";
    if (!exact && r.arithmetic != "float") throw InvalidInput("table arithmetic must be exact or float");
    std::vector<Rational> qrows;
    std::vector<double> drows;
    for (std::size_t p = 0; p < patterns; ++p) {
      const auto toks = split_ws(row_text[p]);
      if (toks.size() != n) throw InvalidInput("rule '" + r.name + "': row " + std::to_string(p) + " needs " +
                                               std::to_string(n) + " probabilities");
      for (const auto& t : toks) {
        if (exact) {
          qrows.push_back(parse_rational(t));
        } else {
          drows.push_back(parse_double(t, "table entry"));
        }
      }
    }
    if (exact) return LocalRule::from_exact_table(spin, std::move(nbhd), std::move(qrows), r.name);
    return LocalRule::from_float_table(spin, std::move(nbhd), std::move(drows), r.name);
  }
  throw InvalidInput("unknown rule kind '" + r.kind + "'");
}

Volume build_volume(const VolumeSpec& v) {
  if (v.shape == "torus") return Volume::torus(v.dim, v.sides);
  if (v.shape == "box") return Volume::box(v.dim, v.sides);
  if (v.shape == "ball") return Volume::ball(v.dim, v.radius);
  if (v.shape == "sites") return Volume::from_sites(v.dim, v.sites);
  throw InvalidInput("unknown volume shape '" + v.shape + "'");
}

VolumeSpec parse_volume_flag(const std::string& text, int dim) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw InvalidInput("volume flag must look like torus:4, box:3, ball:1 or sites:0;1");
  VolumeSpec v;
  v.shape = text.substr(0, colon);
  v.dim = dim;
  const std::string arg = text.substr(colon + 1);
  if (v.shape == "torus" || v.shape == "box") {
    v.sides.clear();
    for (const auto& tok : split(arg, 'x')) v.sides.push_back(parse_int<int>(tok, "side"));
    v.dim = static_cast<int>(v.sides.size());
  } else if (v.shape == "ball") {
    v.radius = parse_int<int>(arg, "radius");
    v.sides.assign(dim, 2 * v.radius + 1);
  } else if (v.shape == "sites") {
    for (const auto& tok : split(arg, ';')) v.sites.push_back(parse_coord(tok, dim));
  } else {
    throw InvalidInput("unknown volume shape '" + v.shape + "'");
  }
  return v;
}

std::vector<Spin> initial_config(const std::string& text, const Volume& volume, const SpinPoset& spin,
                                 std::uint64_t seed, std::uint32_t salt) {
  if (text == "bottom") return constant_config(volume, BoundaryCondition::bottom(spin).fill);
  if (text == "top") return constant_config(volume, BoundaryCondition::top(spin).fill);
  if (text == "random") {
    const UniformStream stream(seed, 0xFFFF0000U + salt);
    std::vector<Spin> c(volume.size());
    for (std::size_t k = 0; k < c.size(); ++k) {
      const auto s = static_cast<std::size_t>(stream.draw(0, k) * static_cast<double>(spin.size()));
      c[k] = static_cast<Spin>(std::min(s, spin.size() - 1));
    }
    return c;
  }
  if (text.rfind("ramp:", 0) == 0) {
    // ramp:I:N is top on the first I/(N-1) of the sites and bottom elsewhere,
    // so ramp:0:N <= ramp:1:N <= ... <= ramp:N-1:N.
    const auto parts = split(text, ':');
    if (parts.size() != 3) throw InvalidInput("ramp initial configuration must look like ramp:I:N");
    const auto i = parse_int<std::size_t>(parts[1], "ramp index");
    const auto n = parse_int<std::size_t>(parts[2], "ramp count");
    if (n < 2 || i >= n) throw InvalidInput("ramp needs N >= 2 and I < N");
    auto c = constant_config(volume, BoundaryCondition::bottom(spin).fill);
    const Spin top = BoundaryCondition::top(spin).fill;
    const std::size_t cut = i * volume.size() / (n - 1);
    for (std::size_t k = 0; k < cut; ++k) c[k] = top;
    return c;
  }
  const auto labels = split_ws(text);
  if (labels.size() == 1) return constant_config(volume, spin.index_of(labels[0]));
  if (labels.size() != volume.size())
    throw InvalidInput("initial configuration lists " + std::to_string(labels.size()) + " spins for " +
                       std::to_string(volume.size()) + " sites");
  std::vector<Spin> c;
  for (const auto& l : labels) c.push_back(spin.index_of(l));
  return c;
}

LocalFunction build_function(const std::string& text, int dim, const std::shared_ptr<const SpinPoset>& spin) {
  const auto toks = split_ws(text);
  if (toks.empty()) return LocalFunction::spin_product(dim, {Coord{0, 0, 0}}, spin);
  if (toks[0] == "constant") {
    if (toks.size() != 2) throw InvalidInput("constant function takes one value");
    return LocalFunction::constant(dim, spin, parse_double(toks[1], "constant"));
  }
  if (toks[0] == "spin" || toks[0] == "product") {
    std::vector<Coord> sites;
    for (std::size_t i = 1; i < toks.size(); ++i) sites.push_back(parse_coord(toks[i], dim));
    if (sites.empty()) throw InvalidInput("function needs at least one site");
    if (toks[0] == "spin" && sites.size() != 1) throw InvalidInput("spin function takes one site");
    return LocalFunction::spin_product(dim, sites, spin);
  }
  throw InvalidInput("unknown function '" + toks[0] + "' (use spin, product or constant)");
}

Experiment materialize(const ExperimentConfig& config) {
  Experiment ex;
  if (!config.spin.builtin.empty() || !config.spin.labels.empty())
    ex.spin = std::make_shared<const SpinPoset>(build_spin(config.spin));
  for (const auto& r : config.rules) {
    if (ex.rules.count(r.name)) throw InvalidInput("duplicate rule '" + r.name + "'");
    auto rule = std::make_shared<const LocalRule>(build_rule(r, ex.spin));
    if (!ex.spin) ex.spin = rule->spin_ptr();
    ex.rules[r.name] = rule;
    ex.dynamics[r.name] = std::make_shared<const Dynamics>(Dynamics::homogeneous(rule));
  }
  ex.volume = build_volume(config.volume);
  for (const auto& c : config.components) {
    auto it = ex.dynamics.find(c.rule);
    if (it == ex.dynamics.end()) throw InvalidInput("component refers to unknown rule '" + c.rule + "'");
    const SpinPoset& spin = it->second->spin();
    BoundaryCondition tau;
    if (c.boundary == "bottom") {
      tau = BoundaryCondition::bottom(spin);
    } else if (c.boundary == "top") {
      tau = BoundaryCondition::top(spin);
    } else {
      tau = BoundaryCondition::constant(spin.index_of(c.boundary));
    }
    ex.components.push_back(ComponentSpec{it->second, tau, c.restrict_to});
    ex.component_rules.push_back(c.rule);
  }
  return ex;
}

}  // namespace pcacouple::cli
