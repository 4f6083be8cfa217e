#include "pcacouple_cli/builtins.hpp"

#include "pcacouple/error.hpp"

namespace pcacouple::cli {

namespace {

RuleSpec ising(std::string name, double beta, double h, int dim, double k) {
  RuleSpec r;
  r.name = std::move(name);
  r.kind = "ising";
  r.beta = beta;
  r.h = h;
  r.dim = dim;
  r.k_nearest = k;
  return r;
}

ComponentConfig component(std::string rule, std::string initial) {
  ComponentConfig c;
  c.rule = std::move(rule);
  c.initial = std::move(initial);
  return c;
}

ExperimentConfig pair_of(RuleSpec rule, VolumeSpec volume) {
  ExperimentConfig cfg;
  cfg.volume = std::move(volume);
  cfg.components = {component(rule.name, "bottom"), component(rule.name, "top")};
  cfg.check.tuple = {rule.name, rule.name};
  cfg.rules.push_back(std::move(rule));
  return cfg;
}

VolumeSpec torus(int dim, std::vector<int> sides) {
  VolumeSpec v;
  v.shape = "torus";
  v.dim = dim;
  v.sides = std::move(sides);
  return v;
}

}  // namespace

std::vector<std::string> builtin_names() {
  return {"example1-h", "example1-beta", "example2", "example2-negative", "example3",
          "counterexample-A", "counterexample-B", "S_A", "S_B", "S_C", "S_D"};
}

ExperimentConfig builtin_config(const std::string& name) {
  if (name == "example1-h") {
    ExperimentConfig cfg;
    cfg.volume = torus(1, {8});
    cfg.rules = {ising("h_minus", 1, -1, 1, 1), ising("h_zero", 1, 0, 1, 1), ising("h_plus", 1, 1, 1, 1)};
    for (const auto& r : cfg.rules) {
      cfg.components.push_back(component(r.name, "bottom"));
      cfg.check.tuple.push_back(r.name);
    }
    return cfg;
  }
  if (name == "example1-beta") {
    ExperimentConfig cfg;
    cfg.volume = torus(2, {4, 4});
    cfg.rules = {ising("beta_half", 0.5, 0, 2, 1), ising("beta_three", 3, 0, 2, 1)};
    cfg.components = {component("beta_half", "bottom"), component("beta_three", "bottom")};
    cfg.check.tuple = {"beta_half", "beta_three"};
    return cfg;
  }
  if (name == "example2") return pair_of(ising("ising", 1, 0, 1, 1), torus(1, {4}));
  if (name == "example2-negative") return pair_of(ising("ising", 1, 0, 1, -1), torus(1, {4}));
  if (name == "example3") {
    RuleSpec r;
    r.name = "potts";
    r.kind = "qstate";
    r.beta = 2;
    r.q = 3;
    r.dim = 1;
    r.offsets = {Coord{-1, 0, 0}, Coord{1, 0, 0}};
    return pair_of(std::move(r), torus(1, {4}));
  }
  if (name == "counterexample-A" || name == "counterexample-B") {
    const bool a = name == "counterexample-A";
    RuleSpec r;
    r.name = a ? "counterexample_A" : "counterexample_B";
    r.kind = r.name;
    VolumeSpec v = torus(1, {4});
    ExperimentConfig cfg = pair_of(std::move(r), std::move(v));
    cfg.check.mode = "general";
    if (!a) {
      // The Y space has no bottom element.
      cfg.analysis.patterns = {"x|y", "x|z", "z|y", "z|z"};
      for (auto& c : cfg.components) c.boundary = c.initial = "w";
    }
    return cfg;
  }
  if (name == "S_A" || name == "S_B" || name == "S_C" || name == "S_D") {
    ExperimentConfig cfg;
    cfg.spin.builtin = name;
    return cfg;
  }
  throw InvalidInput("unknown builtin '" + name + "'");
}

}  // namespace pcacouple::cli
