#include "pcacouple_cli/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "pcacouple/coupling.hpp"
#include "pcacouple/error.hpp"
#include "pcacouple/estimators.hpp"
#include "pcacouple/exact_kernel.hpp"
#include "pcacouple/monotonicity.hpp"
#include "pcacouple/realizable.hpp"
#include "pcacouple/uniform_stream.hpp"
#include "pcacouple_cli/builtins.hpp"
#include "pcacouple_cli/config.hpp"

#ifndef PCACOUPLE_VERSION
#define PCACOUPLE_VERSION "0.0.0"
#endif

namespace pcacouple::cli {

using nlohmann::json;

const char* version() { return PCACOUPLE_VERSION; }

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Flags {
  std::string config;
  std::string builtin;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::optional<std::string> rule;
  std::optional<double> beta;
  std::optional<double> h;
  std::optional<double> k;
  std::optional<int> dim;
  std::optional<int> q;
  std::optional<std::size_t> n;
  std::optional<std::uint64_t> steps;
  std::optional<std::uint64_t> stride;
  std::optional<std::uint64_t> replicas;
  std::optional<std::uint64_t> n_max;
  std::vector<std::uint64_t> n_list;
  std::vector<int> L_list;
  std::optional<std::string> volume;
  std::optional<int> margin;
  std::optional<std::string> mode;
  std::optional<std::string> arithmetic;
  std::optional<double> tolerance;
  std::optional<std::uint64_t> state_cap;
  std::optional<std::string> function;
  std::optional<std::string> lambda;
  std::optional<std::string> xi;
  std::optional<std::string> inner;
  std::optional<std::string> outer;
  std::vector<std::string> tuple;
  std::vector<std::string> patterns;
  std::string csv;
  std::string json_path;
  std::string golden;
  bool update_golden = false;
  bool all = false;
  bool force = false;
  bool monte_carlo = false;
  bool no_certify = false;
  bool dump_config = false;
};

struct Resolved {
  ExperimentConfig cfg;
  Experiment ex;
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
};

/// Primary output of a command and its verdict.
struct Outcome {
  std::string text;
  bool json = false;
  bool verdict = true;
};

std::string header(const Resolved& r, const std::string& command, const std::string& extra = {}) {
  std::string h = std::string("# pcacouple ") + version() + " command=" + command;
  if (r.seed) h += " seed=" + std::to_string(*r.seed) + " rng=" + kRngName;
  if (!extra.empty()) h += " " + extra;
  return h + "\n";
}

std::uint64_t require_seed(const Resolved& r) {
  if (!r.seed) throw InvalidInput("this command is stochastic and needs a seed (--seed, " + std::string(kSeedEnv) +
                                  " or [run] seed)");
  return *r.seed;
}

std::string labels_of(const SpinPoset& spin, std::span<const Spin> config, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < config.size(); ++i) out += (i ? sep : "") + spin.label(config[i]);
  return out;
}

OrderMode resolve_mode(const std::string& text, const SpinPoset& spin) {
  if (text != "auto") return order_mode_from_string(text);
  if (spin.is_chain()) return OrderMode::Total;
  if (std::holds_alternative<LinearOrderWitness>(classify_class_z(spin))) return OrderMode::ClassZ;
  return OrderMode::General;
}

std::optional<Arithmetic> resolve_arithmetic(const std::string& text) {
  if (text == "auto") return std::nullopt;
  if (text == "exact") return Arithmetic::Exact;
  if (text == "float") return Arithmetic::Float;
  throw InvalidInput("arithmetic must be auto, exact or float");
}

bool exact_for(const Resolved& r, const LocalRule& rule) {
  auto a = resolve_arithmetic(r.cfg.check.arithmetic);
  return a ? *a == Arithmetic::Exact : rule.arithmetic() == Arithmetic::Exact;
}

const std::string& primary_rule_name(const ExperimentConfig& cfg) {
  if (!cfg.check.tuple.empty()) return cfg.check.tuple.front();
  if (!cfg.components.empty()) return cfg.components.front().rule;
  if (cfg.rules.empty()) throw InvalidInput("no rule given (use --rule, --builtin or --config)");
  return cfg.rules.front().name;
}

const Dynamics& primary_dynamics(const Resolved& r) { return *r.ex.dynamics.at(primary_rule_name(r.cfg)); }

const Volume& volume_of(const Resolved& r) {
  if (!r.ex.volume) throw InvalidInput("no volume given");
  return *r.ex.volume;
}

BoundaryCondition primary_boundary(const Resolved& r) {
  if (!r.ex.components.empty()) return r.ex.components.front().tau;
  return BoundaryCondition::bottom(primary_dynamics(r).spin());
}

std::vector<Coord> parse_coord_list(const std::string& text, int dim) { return parse_coords(text, dim); }

// ---------------------------------------------------------------------------
// Configuration assembly

ExperimentConfig assemble(const Flags& f) {
  if (!f.config.empty() && !f.builtin.empty()) throw UsageError("--config and --builtin are exclusive");
  ExperimentConfig cfg;
  if (!f.config.empty()) cfg = load_config(f.config);
  if (!f.builtin.empty()) cfg = builtin_config(f.builtin);

  if (f.rule) {
    RuleSpec r;
    r.name = *f.rule;
    if (*f.rule == "ising" || *f.rule == "qstate") {
      r.kind = *f.rule;
    } else if (*f.rule == "counterexample-A" || *f.rule == "counterexample_A") {
      r.kind = "counterexample_A";
    } else if (*f.rule == "counterexample-B" || *f.rule == "counterexample_B") {
      r.kind = "counterexample_B";
    } else {
      throw UsageError("--rule must be ising, qstate, counterexample-A or counterexample-B");
    }
    r.dim = f.dim.value_or(1);
    if (r.kind == "qstate") r.offsets = Neighborhood::nearest(r.dim).offsets;
    cfg.rules = {r};
    cfg.components.clear();
    cfg.check.tuple = {r.name, r.name};
    if (!f.volume) {
      cfg.volume = VolumeSpec{};
      cfg.volume.dim = r.dim;
      cfg.volume.sides.assign(r.dim, 4);
    }
  }
  for (auto& r : cfg.rules) {
    if (f.beta) r.beta = *f.beta;
    if (f.h) r.h = *f.h;
    if (f.k) r.k_nearest = *f.k;
    if (f.q) r.q = *f.q;
    if (f.dim && f.rule) r.dim = *f.dim;
  }
  if (f.volume) {
    const int dim = f.dim.value_or(cfg.rules.empty() ? cfg.volume.dim : cfg.rules.front().dim);
    cfg.volume = parse_volume_flag(*f.volume, dim);
  }
  if (!f.tuple.empty()) cfg.check.tuple = f.tuple;

  if (f.n || (cfg.components.empty() && !cfg.rules.empty())) {
    const std::size_t n = f.n.value_or(2);
    if (n < 1) throw UsageError("--n must be at least 1");
    const std::string rule = primary_rule_name(cfg);
    cfg.components.clear();
    for (std::size_t i = 0; i < n; ++i) {
      ComponentConfig c;
      c.rule = rule;
      c.initial = n == 1 ? "bottom" : "ramp:" + std::to_string(i) + ":" + std::to_string(n);
      cfg.components.push_back(c);
    }
    if (f.tuple.empty() && f.n) cfg.check.tuple.assign(n, rule);
  }

  if (f.steps) cfg.run.steps = *f.steps;
  if (f.stride) cfg.run.stride = *f.stride;
  if (f.replicas) cfg.run.replicas = *f.replicas;
  if (f.threads) cfg.run.threads = *f.threads;
  if (f.no_certify) cfg.run.certify = false;
  if (f.mode) cfg.check.mode = *f.mode;
  if (f.arithmetic) cfg.check.arithmetic = *f.arithmetic;
  if (f.tolerance) cfg.check.tolerance = *f.tolerance;
  if (f.state_cap) cfg.check.state_cap = *f.state_cap;
  if (f.n_max) cfg.analysis.n_max = *f.n_max;
  if (!f.n_list.empty()) cfg.analysis.n_list = f.n_list;
  if (!f.L_list.empty()) cfg.analysis.L_list = f.L_list;
  if (f.margin) cfg.analysis.margin = *f.margin;
  if (f.function) cfg.analysis.function = *f.function;
  if (f.xi) cfg.analysis.xi = *f.xi;
  if (!f.patterns.empty()) cfg.analysis.patterns = f.patterns;
  const int dim = cfg.volume.dim;
  if (f.lambda) cfg.analysis.lambda = parse_coord_list(*f.lambda, dim);
  if (f.inner) cfg.analysis.inner = parse_coord_list(*f.inner, dim);
  if (f.outer) cfg.analysis.outer = parse_coord_list(*f.outer, dim);
  if (!f.csv.empty()) cfg.output.csv = f.csv;
  if (!f.json_path.empty()) cfg.output.json = f.json_path;

  if (cfg.run.threads == 0) throw InvalidInput("threads must be positive");
  if (cfg.run.stride == 0) throw InvalidInput("stride must be positive");
  if (cfg.check.state_cap == 0 || cfg.check.pair_cap == 0 || cfg.check.map_cap == 0 || cfg.check.up_set_cap == 0)
    throw InvalidInput("caps must be positive");
  return cfg;
}

std::optional<std::uint64_t> resolve_seed(const Flags& f, const ExperimentConfig& cfg) {
  if (f.seed) return f.seed;
  if (const char* env = std::getenv(kSeedEnv); env && *env) {
    std::uint64_t v = 0;
    std::istringstream is(env);
    if (!(is >> v) || !is.eof()) throw InvalidInput(std::string(kSeedEnv) + " is not an unsigned integer");
    return v;
  }
  return cfg.run.seed;
}

// ---------------------------------------------------------------------------
// Reports

json violation_json(const Violation& v, const Neighborhood& nbhd, const SpinPoset& spin, bool reverified) {
  json j;
  j["component"] = v.component;
  j["lower_pattern"] = labels_of(spin, v.lower_pattern, "|");
  j["upper_pattern"] = labels_of(spin, v.upper_pattern, "|");
  std::vector<std::string> offsets;
  for (const auto& o : nbhd.offsets) offsets.push_back(format_coord(o, nbhd.dim));
  j["offsets"] = offsets;
  j["level"] = v.level;
  j["level_name"] = v.level_name;
  j["level_kind"] = v.level_kind == SetKind::UpSet ? "up-set" : "down-set";
  j["lower_value"] = v.lower_value;
  j["upper_value"] = v.upper_value;
  if (!v.lower_exact.empty()) {
    j["lower_exact"] = v.lower_exact;
    j["upper_exact"] = v.upper_exact;
  }
  j["reverified"] = reverified;
  return j;
}

json verdict_json(const MonotonicityVerdict& v, const RuleRefs& rules, const CheckOptions& options) {
  json j;
  j["verdict"] = v.increasing;
  j["label"] = v.label;
  j["mode"] = to_string(v.mode);
  j["arithmetic"] = v.arithmetic == Arithmetic::Exact ? "exact" : "float";
  j["tolerance"] = v.tolerance;
  j["pairs_checked"] = v.pairs_checked;
  j["comparisons"] = v.comparisons;
  j["suppressed"] = v.suppressed;
  const auto& spin = rules.front().get().spin();
  if (v.witness) j["witness"] = violation_json(*v.witness, v.neighborhood, spin, reverify(rules, options, *v.witness));
  if (options.collect_all) {
    j["violation_count"] = v.violations.size();
    json all = json::array();
    for (const auto& w : v.violations) all.push_back(violation_json(w, v.neighborhood, spin, true));
    j["violations"] = all;
  }
  return j;
}

CheckOptions check_options(const Resolved& r, const SpinPoset& spin, bool all) {
  CheckOptions o;
  o.mode = resolve_mode(r.cfg.check.mode, spin);
  o.arithmetic = resolve_arithmetic(r.cfg.check.arithmetic);
  o.tolerance = r.cfg.check.tolerance;
  o.pair_cap = r.cfg.check.pair_cap;
  o.up_set_cap = r.cfg.check.up_set_cap;
  o.collect_all = all;
  return o;
}

Outcome cmd_check_attractive(const Resolved& r, const Flags& f) {
  json report;
  report["command"] = "check-attractive";
  json rules = json::array();
  bool all_ok = true;
  std::set<std::string> seen;
  std::vector<std::string> names;
  for (const auto& name : r.cfg.check.tuple) names.push_back(name);
  for (const auto& rule : r.cfg.rules) names.push_back(rule.name);
  for (const auto& name : names) {
    if (!seen.insert(name).second) continue;
    const LocalRule& rule = *r.ex.rules.at(name);
    const auto options = check_options(r, rule.spin(), f.all);
    const auto v = check_attractive(rule, options);
    json j = verdict_json(v, RuleRefs{std::cref(rule), std::cref(rule)}, options);
    j["rule"] = name;
    rules.push_back(j);
    all_ok = all_ok && v.increasing;
  }
  report["verdict"] = all_ok;
  report["rules"] = rules;
  return {report.dump(2) + "\n", true, all_ok};
}

Outcome cmd_check_increasing(const Resolved& r, const Flags& f) {
  if (r.cfg.check.tuple.empty()) throw InvalidInput("check-increasing needs a rule tuple (--tuple or [check] tuple)");
  RuleRefs refs;
  for (const auto& name : r.cfg.check.tuple) {
    auto it = r.ex.rules.find(name);
    if (it == r.ex.rules.end()) throw InvalidInput("tuple refers to unknown rule '" + name + "'");
    refs.push_back(std::cref(*it->second));
  }
  const auto options = check_options(r, refs.front().get().spin(), f.all);
  const auto v = check_increasing_tuple(refs, options);
  json report = verdict_json(v, refs, options);
  report["command"] = "check-increasing";
  report["tuple"] = r.cfg.check.tuple;
  return {report.dump(2) + "\n", true, v.increasing};
}

Outcome cmd_check_realizable(const Resolved& r, const Flags&) {
  const LocalRule& rule = *r.ex.rules.at(primary_rule_name(r.cfg));
  const SpinPoset& spin = rule.spin();
  std::vector<std::size_t> patterns;
  if (r.cfg.analysis.patterns.empty()) {
    for (std::size_t p = 0; p < rule.pattern_count(); ++p) patterns.push_back(p);
  } else {
    for (const auto& text : r.cfg.analysis.patterns) {
      std::vector<Spin> pattern;
      std::string cur;
      for (char c : text + "|") {
        if (c == '|') {
          pattern.push_back(spin.index_of(cur));
          cur.clear();
        } else {
          cur += c;
        }
      }
      patterns.push_back(rule.encode(pattern));
    }
  }
  if (patterns.size() > kMaxSpinElements) throw CapExceeded("index poset size", patterns.size(), kMaxSpinElements);
  if (!rule.tabulated()) throw InvalidInput("check-realizable needs a tabulated rule");

  std::vector<std::string> labels;
  std::vector<std::vector<Spin>> decoded;
  for (auto p : patterns) {
    decoded.push_back(rule.decode(p));
    labels.push_back(labels_of(spin, decoded.back(), "|"));
  }
  std::vector<SpinPoset::Relation> relations;
  for (std::size_t a = 0; a < patterns.size(); ++a)
    for (std::size_t b = 0; b < patterns.size(); ++b) {
      if (a == b) continue;
      bool leq = true;
      for (std::size_t j = 0; j < decoded[a].size(); ++j) leq = leq && spin.leq(decoded[a][j], decoded[b][j]);
      if (leq) relations.emplace_back(labels[a], labels[b]);
    }
  const SpinPoset index = SpinPoset::build(labels, relations);
  std::vector<std::vector<Rational>> dists;
  for (auto p : patterns) {
    const auto row = rule.exact_row(p);
    dists.emplace_back(row.begin(), row.end());
  }
  const auto result = check_realizable_monotone(index, dists, spin, r.cfg.check.map_cap);

  json report;
  report["command"] = "check-realizable";
  report["rule"] = rule.name();
  report["arithmetic"] = "exact";
  report["index"] = labels;
  json covers = json::array();
  for (const auto& [lo, hi] : index.covers()) covers.push_back(index.label(lo) + "<" + index.label(hi));
  report["index_covers"] = covers;
  bool feasible = false;
  if (const auto* ok = std::get_if<RealizableFeasible>(&result)) {
    feasible = true;
    report["result"] = "Feasible";
    json maps = json::array();
    for (std::size_t i = 0; i < ok->maps.size(); ++i) {
      json m;
      m["map"] = labels_of(spin, ok->maps[i], " ");
      m["weight"] = ok->weights[i].get_str();
      maps.push_back(m);
    }
    report["maps"] = maps;
  } else {
    const auto& bad = std::get<RealizableInfeasible>(result);
    report["result"] = "Infeasible";
    report["map_count"] = bad.map_count;
    std::vector<std::string> cert;
    for (const auto& y : bad.certificate) cert.push_back(y.get_str());
    report["certificate"] = cert;
    report["certificate_value"] = bad.certificate_value.get_str();
    report["certificate_verified"] = verify_certificate(index, dists, spin, bad);
  }
  report["verdict"] = feasible;
  return {report.dump(2) + "\n", true, feasible};
}

Outcome cmd_classify_poset(const Resolved& r, const Flags&) {
  if (!r.ex.spin) throw InvalidInput("no spin space given");
  const SpinPoset& spin = *r.ex.spin;
  json report;
  report["command"] = "classify-poset";
  report["labels"] = spin.labels();
  json covers = json::array();
  for (const auto& [lo, hi] : spin.covers()) covers.push_back(spin.label(lo) + "<" + spin.label(hi));
  report["covers"] = covers;
  report["total"] = spin.is_chain();
  if (spin.size() <= r.cfg.check.up_set_cap) report["up_sets"] = enumerate_up_sets(spin, r.cfg.check.up_set_cap).size();
  const auto z = classify_class_z(spin);
  bool in_z = false;
  if (const auto* w = std::get_if<LinearOrderWitness>(&z)) {
    in_z = true;
    report["class_z"] = true;
    json seq = json::array();
    for (std::size_t i = 0; i < w->sequence.size(); ++i)
      seq.push_back({{"element", spin.label(w->sequence[i])},
                     {"prefix", w->semi_kinds[i] == SetKind::UpSet ? "up-set" : "down-set"}});
    report["witness"] = seq;
  } else {
    const auto& no = std::get<NotInClassZ>(z);
    report["class_z"] = false;
    report["reason"] = no.reason;
    if (no.violating_element) report["violating_element"] = spin.label(*no.violating_element);
  }
  report["verdict"] = in_z;
  return {report.dump(2) + "\n", true, in_z};
}

Outcome cmd_simulate(const Resolved& r, const Flags&) {
  const auto seed = require_seed(r);
  const Volume& volume = volume_of(r);
  if (r.ex.components.empty()) throw InvalidInput("simulate needs at least one component");
  const SpinPoset& spin = r.ex.components.front().dynamics->spin();

  CouplingOptions copt;
  const auto mode = resolve_mode(r.cfg.check.mode, spin);
  copt.mode = mode;
  copt.threads = r.threads;
  copt.map_cap = r.cfg.check.map_cap;
  bool certified = false;
  if (r.cfg.run.certify) {
    RuleRefs refs;
    for (const auto& c : r.ex.components) refs.push_back(std::cref(c.dynamics->base_rule()));
    if (refs.size() == 1) refs.push_back(refs.front());
    CheckOptions o = check_options(r, spin, false);
    o.mode = mode;
    certified = check_increasing_tuple(refs, o).increasing;
  }
  copt.certified = certified;
  const CoupledDynamics system(volume, r.ex.components, copt);

  std::vector<std::vector<Spin>> initial;
  for (std::size_t i = 0; i < r.cfg.components.size(); ++i)
    initial.push_back(initial_config(r.cfg.components[i].initial, volume, spin, seed, static_cast<std::uint32_t>(i)));

  RunOptions ropt;
  ropt.steps = r.cfg.run.steps;
  ropt.stride = r.cfg.run.stride;
  ropt.seed = seed;
  const auto result = run_coupled(system, std::move(initial), ropt);

  std::ostringstream os;
  os << header(r, "simulate",
               "components=" + std::to_string(system.components()) + " volume=" + volume.describe() +
                   " certified=" + (certified ? "true" : "false"));
  write_trajectory_csv(os, result, spin);
  if (!r.cfg.output.snapshot.empty()) {
    std::ofstream snap(r.cfg.output.snapshot, std::ios::binary);
    if (!snap) throw InvalidInput("cannot write snapshot '" + r.cfg.output.snapshot + "'");
    write_snapshot(snap, result.final_state);
  }
  return {os.str(), false, !certified || result.report.order_ok};
}

Outcome cmd_rho(const Resolved& r, const Flags&) {
  EstimateOptions opt;
  opt.seed = require_seed(r);
  opt.replicas = r.cfg.run.replicas;
  opt.threads = r.threads;
  const auto est = estimate_rho(primary_dynamics(r), volume_of(r), primary_boundary(r), r.cfg.analysis.n_max, opt);
  std::ostringstream os;
  os << header(r, "rho", "volume=" + volume_of(r).describe());
  os << "n,rho_hat,se,replicas\n";
  for (const auto& e : est)
    os << e.n << ',' << format_double(e.estimate) << ',' << format_double(e.standard_error) << ',' << e.replicas
       << '\n';
  return {os.str(), false, true};
}

template <class T>
Outcome exact_rho_impl(const Resolved& r) {
  const auto rho = exact_rho<T>(primary_dynamics(r), volume_of(r), primary_boundary(r), r.cfg.analysis.n_max,
                                r.cfg.check.state_cap);
  std::ostringstream os;
  constexpr bool exact = is_exact_v<T>;
  os << header(r, "exact-rho", std::string("arithmetic=") + (exact ? "exact" : "float") +
                                    " volume=" + volume_of(r).describe());
  os << (exact ? "n,rho_exact,rho\n" : "n,rho\n");
  for (std::size_t n = 0; n < rho.size(); ++n) {
    if constexpr (exact) {
      os << n << ',' << rho[n].get_str() << ',' << format_double(rho[n].get_d()) << '\n';
    } else {
      os << n << ',' << format_double(rho[n]) << '\n';
    }
  }
  return {os.str(), false, true};
}

Outcome cmd_exact_rho(const Resolved& r, const Flags&) {
  return exact_for(r, primary_dynamics(r).base_rule()) ? exact_rho_impl<Rational>(r) : exact_rho_impl<double>(r);
}

template <class T>
Outcome stationary_impl(const Resolved& r, const Flags& f) {
  const ExactKernel<T> kernel(primary_dynamics(r), volume_of(r), primary_boundary(r), r.cfg.check.state_cap);
  const auto structure = classify_chain(kernel);
  StationaryOptions so;
  so.force = f.force;
  const auto nu = stationary_measure(kernel, so);
  std::ostringstream os;
  constexpr bool exact = is_exact_v<T>;
  os << header(r, "stationary", std::string("arithmetic=") + (exact ? "exact" : "float") +
                                     " structure=" + to_string(structure) + " volume=" + volume_of(r).describe());
  os << (exact ? "config,probability_exact,probability\n" : "config,probability\n");
  for (std::size_t i = 0; i < nu.states(); ++i) {
    os << labels_of(kernel.spin(), nu.config(i), " ") << ',';
    if constexpr (exact) {
      os << nu.weights[i].get_str() << ',' << format_double(nu.weights[i].get_d()) << '\n';
    } else {
      os << format_double(nu.weights[i]) << '\n';
    }
  }
  return {os.str(), false, true};
}

Outcome cmd_stationary(const Resolved& r, const Flags& f) {
  return exact_for(r, primary_dynamics(r).base_rule()) ? stationary_impl<Rational>(r, f)
                                                        : stationary_impl<double>(r, f);
}

Outcome cmd_sub_super(const Resolved& r, const Flags& f) {
  const Dynamics& dyn = primary_dynamics(r);
  const int dim = dyn.dim();
  auto inner = r.cfg.analysis.inner;
  auto outer = r.cfg.analysis.outer;
  if (inner.empty()) inner = {Coord{0, 0, 0}};
  if (outer.empty()) outer = {Coord{0, 0, 0}, Coord{1, 0, 0}};
  SubSuperOptions opt;
  opt.state_cap = r.cfg.check.state_cap;
  opt.stationary.force = f.force;
  const bool exact = exact_for(r, dyn.base_rule());
  if (!exact) opt.tolerance = r.cfg.check.tolerance;
  const auto rep = exact ? check_sub_super_gibbs<Rational>(dyn, inner, outer, opt)
                         : check_sub_super_gibbs<double>(dyn, inner, outer, opt);
  json report;
  report["command"] = "sub-super-gibbs";
  report["arithmetic"] = exact ? "exact" : "float";
  std::vector<std::string> in, out;
  for (const auto& c : rep.inner) in.push_back(format_coord(c, dim));
  for (const auto& c : rep.outer) out.push_back(format_coord(c, dim));
  report["inner"] = in;
  report["outer"] = out;
  json entries = json::array();
  for (const auto& e : rep.entries) {
    entries.push_back({{"conditioning", labels_of(dyn.spin(), e.conditioning, " ")},
                       {"lower_ok", e.lower_ok},
                       {"upper_ok", e.upper_ok},
                       {"reversed_lower", e.reversed_lower},
                       {"reversed_upper", e.reversed_upper},
                       {"probability_bottom", e.conditioning_probability_bottom},
                       {"probability_top", e.conditioning_probability_top}});
  }
  report["entries"] = entries;
  report["verdict"] = rep.all_ok;
  return {report.dump(2) + "\n", true, rep.all_ok};
}

/// Three-site segment along the first axis, centred at the origin.
std::vector<Coord> default_lambda() { return {Coord{-1, 0, 0}, Coord{0, 0, 0}, Coord{1, 0, 0}}; }

LocalFunction function_of(const Resolved& r, int dim, const std::shared_ptr<const SpinPoset>& spin) {
  return build_function(r.cfg.analysis.function, dim, spin);
}

Outcome cmd_sandwich(const Resolved& r, const Flags&) {
  SandwichOptions opt;
  opt.seed = require_seed(r);
  opt.replicas = r.cfg.run.replicas;
  opt.threads = r.threads;
  opt.margin_radii = r.cfg.analysis.margin;
  const Dynamics& dyn = primary_dynamics(r);
  const Volume& torus = volume_of(r);
  const auto spin = dyn.base_rule().spin_ptr();
  const auto lambda = r.cfg.analysis.lambda.empty() ? default_lambda() : r.cfg.analysis.lambda;
  const auto xi = initial_config(r.cfg.analysis.xi, torus, *spin, opt.seed, 0xA5A5U);
  const auto f = function_of(r, torus.dim(), spin);
  const auto rep = sandwich_check(dyn, torus, lambda, xi, r.cfg.run.steps, f, opt);
  std::ostringstream os;
  os << header(r, "sandwich",
               "replicas=" + std::to_string(rep.replicas) + " margin=" + std::to_string(rep.margin) +
                   " pathwise_order=" + (rep.pathwise_order_ok ? "true" : "false") +
                   " containment=" + (rep.containment_ok ? "true" : "false"));
  os << "n,E_minus,E_mid,E_plus,ordered\n";
  bool ok = rep.pathwise_order_ok && rep.containment_ok;
  for (const auto& row : rep.rows) {
    os << row.n << ',' << format_double(row.e_minus) << ',' << format_double(row.e_mid) << ','
       << format_double(row.e_plus) << ',' << (row.ordered ? 1 : 0) << '\n';
    ok = ok && row.ordered;
  }
  return {os.str(), false, ok};
}

Outcome cmd_ergodicity(const Resolved& r, const Flags& f) {
  const Dynamics& dyn = primary_dynamics(r);
  const Volume& torus = volume_of(r);
  const auto spin = dyn.base_rule().spin_ptr();
  const auto fn = function_of(r, torus.dim(), spin);
  std::vector<std::size_t> n_list(r.cfg.analysis.n_list.begin(), r.cfg.analysis.n_list.end());
  if (n_list.empty())
    for (std::size_t n = 0; n <= r.cfg.analysis.n_max; ++n) n_list.push_back(n);
  BoundOptions opt;
  opt.exact = !f.monte_carlo;
  opt.allow_monte_carlo = true;
  opt.arithmetic = exact_for(r, dyn.base_rule()) ? Arithmetic::Exact : Arithmetic::Float;
  opt.tolerance = r.cfg.check.tolerance;
  opt.state_cap = r.cfg.check.state_cap;
  opt.stationary.force = f.force;
  opt.replicas = r.cfg.run.replicas;
  opt.threads = r.threads;
  if (f.monte_carlo) opt.seed = require_seed(r);
  else if (r.seed) opt.seed = *r.seed;
  const auto rep = ergodicity_bound_check(dyn, torus, fn, n_list, opt);
  std::ostringstream os;
  Resolved shown = r;
  if (rep.exact) shown.seed.reset();
  os << header(shown, "ergodicity-bound",
               std::string("mode=") + (rep.exact ? "exact" : "monte-carlo") +
                   " triple_norm=" + format_double(rep.triple_norm) + " nu_f=" + format_double(rep.nu_f));
  os << (rep.exact ? "n,lhs,rhs,rho,ok\n" : "n,lhs,rhs,rho,ok,lhs_se,rho_se\n");
  for (const auto& row : rep.rows) {
    os << row.n << ',' << format_double(row.lhs) << ',' << format_double(row.rhs) << ',' << format_double(row.rho)
       << ',' << (row.ok ? 1 : 0);
    if (!rep.exact) os << ',' << format_double(row.lhs_standard_error) << ',' << format_double(row.rho_standard_error);
    os << '\n';
  }
  return {os.str(), false, rep.all_ok};
}

Outcome cmd_limits(const Resolved& r, const Flags& f) {
  const Dynamics& dyn = primary_dynamics(r);
  auto L_list = r.cfg.analysis.L_list;
  if (L_list.empty()) L_list = {0, 1};
  LimitOptions opt;
  opt.state_cap = r.cfg.check.state_cap;
  opt.stationary.force = f.force;
  const bool exact = exact_for(r, dyn.base_rule());
  if (!exact) opt.tolerance = r.cfg.check.tolerance;
  const auto rep = exact ? limit_sandwich_report<Rational>(dyn, L_list, volume_of(r), r.cfg.analysis.n_max, opt)
                         : limit_sandwich_report<double>(dyn, L_list, volume_of(r), r.cfg.analysis.n_max, opt);
  json report;
  report["command"] = "limits";
  report["arithmetic"] = exact ? "exact" : "float";
  json spatial = json::array();
  for (const auto& s : rep.spatial)
    spatial.push_back({{"L", s.L},
                       {"sites", s.sites},
                       {"top_site0", s.top_site0},
                       {"bottom_site0", s.bottom_site0},
                       {"gap", s.gap},
                       {"top_projection_ok", s.top_projection_ok},
                       {"bottom_projection_ok", s.bottom_projection_ok}});
  json temporal = json::array();
  for (const auto& t : rep.temporal)
    temporal.push_back({{"n", t.n},
                        {"top_site0", t.top_site0},
                        {"bottom_site0", t.bottom_site0},
                        {"gap", t.gap},
                        {"top_decreasing", t.top_decreasing},
                        {"bottom_increasing", t.bottom_increasing}});
  report["spatial"] = spatial;
  report["temporal"] = temporal;
  report["spatial_monotone"] = rep.spatial_monotone;
  report["temporal_monotone"] = rep.temporal_monotone;
  const bool ok = rep.spatial_monotone && rep.temporal_monotone;
  report["verdict"] = ok;
  return {report.dump(2) + "\n", true, ok};
}

using Command = std::function<Outcome(const Resolved&, const Flags&)>;

const std::vector<std::pair<std::string, std::pair<std::string, Command>>>& commands() {
  static const std::vector<std::pair<std::string, std::pair<std::string, Command>>> table = {
      {"check-attractive", {"Check that every rule is attractive", cmd_check_attractive}},
      {"check-increasing", {"Check that a rule tuple is increasing", cmd_check_increasing}},
      {"check-realizable", {"Decide realizable monotonicity of a rule family", cmd_check_realizable}},
      {"classify-poset", {"Report the order structure of the spin space", cmd_classify_poset}},
      {"simulate", {"Run the coupled dynamics and write the trajectory CSV", cmd_simulate}},
      {"rho", {"Monte Carlo estimate of the site-0 disagreement rho(n)", cmd_rho}},
      {"exact-rho", {"Exact rho(n) from the coupled transition kernel", cmd_exact_rho}},
      {"stationary", {"Stationary measure of the finite-volume chain", cmd_stationary}},
      {"sub-super-gibbs", {"Compare conditional extremal stationary measures", cmd_sub_super}},
      {"sandwich", {"Coupled finite-volume sandwich and disagreement containment", cmd_sandwich}},
      {"ergodicity-bound", {"Check the ergodicity bound against rho(n)", cmd_ergodicity}},
      {"limits", {"Spatial and temporal monotonicity of the extremal limits", cmd_limits}},
  };
  return table;
}

void add_flags(CLI::App& sub, Flags& f) {
  sub.add_option("--config", f.config, "Experiment config file");
  sub.add_option("--builtin", f.builtin, "Builtin experiment");
  sub.add_option("--seed", f.seed, "Seed (overrides PCACOUPLE_SEED and the config)");
  sub.add_option("--threads", f.threads, "Worker cap");
  sub.add_option("--rule", f.rule, "ising | qstate | counterexample-A | counterexample-B");
  sub.add_option("--beta", f.beta, "Inverse temperature");
  sub.add_option("--h", f.h, "External field");
  sub.add_option("--K", f.k, "Nearest-neighbour coupling");
  sub.add_option("--dim", f.dim, "Lattice dimension");
  sub.add_option("--q", f.q, "Number of states (qstate)");
  sub.add_option("--n", f.n, "Number of coupled components");
  sub.add_option("--steps", f.steps, "Time steps");
  sub.add_option("--stride", f.stride, "Trajectory output stride");
  sub.add_option("--replicas", f.replicas, "Monte Carlo replicas");
  sub.add_option("--n-max", f.n_max, "Largest time for rho and limits");
  sub.add_option("--n-list", f.n_list, "Times for the ergodicity bound");
  sub.add_option("--L", f.L_list, "Ball radii for limits");
  sub.add_option("--volume", f.volume, "torus:4, torus:4x4, box:3, ball:1 or sites:0;1");
  sub.add_option("--margin", f.margin, "Sandwich margin in neighbourhood radii");
  sub.add_option("--mode", f.mode, "auto | total | class_z | general");
  sub.add_option("--arithmetic", f.arithmetic, "auto | exact | float");
  sub.add_option("--tolerance", f.tolerance, "Float tolerance");
  sub.add_option("--state-cap", f.state_cap, "Exact state-space cap");
  sub.add_option("--function", f.function, "spin X | product X Y ... | constant C");
  sub.add_option("--lambda", f.lambda, "Sites of Lambda, space separated");
  sub.add_option("--xi", f.xi, "Sandwich middle start: random | top | bottom | labels");
  sub.add_option("--inner", f.inner, "Inner volume sites");
  sub.add_option("--outer", f.outer, "Outer volume sites");
  sub.add_option("--tuple", f.tuple, "Rule names of the tuple");
  sub.add_option("--patterns", f.patterns, "Patterns for check-realizable, labels joined by |");
  sub.add_option("--csv", f.csv, "Write CSV output here instead of stdout");
  sub.add_option("--json", f.json_path, "Write the JSON report here instead of stdout");
  sub.add_option("--golden", f.golden, "Compare the output with this file byte for byte");
  sub.add_flag("--update-golden", f.update_golden, "Rewrite the golden file instead of comparing");
  sub.add_flag("--all", f.all, "Report every violation");
  sub.add_flag("--force", f.force, "Proceed on reducible or periodic kernels");
  sub.add_flag("--monte-carlo", f.monte_carlo, "Use the Monte Carlo surrogate");
  sub.add_flag("--no-certify", f.no_certify, "Do not certify the tuple before simulating");
  sub.add_flag("--dump-config", f.dump_config, "Print the resolved config and exit");
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InvalidInput("cannot write '" + path + "'");
  os << text;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Increasing couplings of probabilistic cellular automata", "pcacouple"};
  app.set_help_flag("--help", "Print this help message and exit");
  app.set_version_flag("--version", std::string(version()));
  app.require_subcommand(1);
  Flags flags;
  std::map<const CLI::App*, const Command*> dispatch;
  for (const auto& [name, entry] : commands()) {
    auto* sub = app.add_subcommand(name, entry.first);
    add_flags(*sub, flags);
    dispatch[sub] = &entry.second;
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }
  const CLI::App* chosen = app.get_subcommands().front();

  try {
    Resolved r;
    r.cfg = assemble(flags);
    if (flags.dump_config) {
      out << config_to_string(r.cfg);
      return kExitOk;
    }
    r.seed = resolve_seed(flags, r.cfg);
    r.threads = r.cfg.run.threads;
    r.ex = materialize(r.cfg);

    const Outcome outcome = (*dispatch.at(chosen))(r, flags);
    int code = outcome.verdict ? kExitOk : kExitVerdictFalse;

    const std::string& target = outcome.json ? r.cfg.output.json : r.cfg.output.csv;
    if (target.empty()) {
      out << outcome.text;
    } else {
      write_file(target, outcome.text);
    }
    if (!flags.golden.empty()) {
      if (flags.update_golden) {
        write_file(flags.golden, outcome.text);
      } else {
        std::ifstream g(flags.golden, std::ios::binary);
        if (!g) throw InvalidInput("cannot read golden file '" + flags.golden + "'");
        const std::string expected((std::istreambuf_iterator<char>(g)), std::istreambuf_iterator<char>());
        if (expected != outcome.text) {
          err << "output differs from golden file " << flags.golden << "\n";
          code = kExitVerdictFalse;
        }
      }
    }
    return code;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const OrderViolation& e) {
    err << "order violation: " << e.what() << "\n";
    return kExitVerdictFalse;
  } catch (const CapExceeded& e) {
    err << "cap exceeded: " << e.what() << "\n";
    return kExitValidation;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }
}

}  // namespace pcacouple::cli
