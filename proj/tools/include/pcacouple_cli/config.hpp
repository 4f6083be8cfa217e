#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "pcacouple/coupling.hpp"
#include "pcacouple/estimators.hpp"
#include "pcacouple/local_rules.hpp"
#include "pcacouple/spin_space.hpp"
#include "pcacouple/volume.hpp"

namespace pcacouple::cli {

// Experiment configuration, stored as an INI-style file:
//
//   [spin]            builtin = ising | diamond | y_shape | zigzag | not_class_z | chain:Q
//                     or labels = a b c, covers = a<b b<c
//   [rule:NAME]       kind = ising | qstate | table | counterexample_A | counterexample_B
//                     ising:   beta, h, dim, K (nearest neighbours) or coupling = x@K ...
//                     qstate:  beta, q, dim, offsets = x ...
//                     table:   dim, offsets, arithmetic = exact | float,
//                              row.<l1|l2|...> = p1 p2 ..., default = p1 p2 ...
//   [volume]          shape = torus | box | ball | sites, dim, sides = 4 4, radius, sites = x,y ...
//   [component:I]     rule, boundary = bottom | top | LABEL, initial = bottom | top | random | ramp:I:N | l1 l2 ...,
//                     restrict = x,y ...
//   [run]             steps, stride, replicas, seed, threads, certify
//   [check]           mode, tolerance, arithmetic, state_cap, up_set_cap, pair_cap, map_cap, tuple
//   [analysis]        n_max, n_list, L_list, lambda, xi, function, inner, outer, patterns, margin
//   [output]          csv, json, snapshot
//
// Coordinates are comma separated ("1,0"), lists are space separated.

struct SpinSpec {
  std::string builtin;
  std::vector<std::string> labels;
  std::vector<std::pair<std::string, std::string>> covers;

  friend bool operator==(const SpinSpec&, const SpinSpec&) = default;
};

struct RuleSpec {
  std::string name;
  std::string kind = "ising";
  double beta = 0;
  double h = 0;
  int dim = 1;
  std::optional<double> k_nearest;
  std::vector<std::pair<Coord, double>> coupling;
  int q = 2;
  std::vector<Coord> offsets;
  std::string arithmetic = "exact";
  std::map<std::string, std::string> rows;
  std::string default_row;

  friend bool operator==(const RuleSpec&, const RuleSpec&) = default;
};

struct VolumeSpec {
  std::string shape = "torus";
  int dim = 1;
  std::vector<int> sides{4};
  int radius = 0;
  std::vector<Coord> sites;

  friend bool operator==(const VolumeSpec&, const VolumeSpec&) = default;
};

struct ComponentConfig {
  std::string rule;
  std::string boundary = "bottom";
  std::string initial = "bottom";
  std::optional<std::vector<Coord>> restrict_to;

  friend bool operator==(const ComponentConfig&, const ComponentConfig&) = default;
};

struct RunSpec {
  std::uint64_t steps = 10;
  std::uint64_t stride = 1;
  std::uint64_t replicas = 1000;
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
  bool certify = true;

  friend bool operator==(const RunSpec&, const RunSpec&) = default;
};

struct CheckSpec {
  std::string mode = "auto";
  double tolerance = 1e-12;
  std::string arithmetic = "auto";
  std::uint64_t state_cap = kDefaultStateCap;
  std::uint64_t up_set_cap = kDefaultUpSetCap;
  std::uint64_t pair_cap = 10'000'000;
  std::uint64_t map_cap = 1'000'000;
  std::vector<std::string> tuple;

  friend bool operator==(const CheckSpec&, const CheckSpec&) = default;
};

struct AnalysisSpec {
  std::uint64_t n_max = 10;
  std::vector<std::uint64_t> n_list;
  std::vector<int> L_list;
  std::vector<Coord> lambda;
  std::string xi = "random";
  /// Empty: the spin at the origin.
  std::string function;
  std::vector<Coord> inner;
  std::vector<Coord> outer;
  std::vector<std::string> patterns;
  int margin = 2;

  friend bool operator==(const AnalysisSpec&, const AnalysisSpec&) = default;
};

struct OutputSpec {
  std::string csv;
  std::string json;
  std::string snapshot;

  friend bool operator==(const OutputSpec&, const OutputSpec&) = default;
};

struct ExperimentConfig {
  SpinSpec spin;
  std::vector<RuleSpec> rules;
  VolumeSpec volume;
  std::vector<ComponentConfig> components;
  RunSpec run;
  CheckSpec check;
  AnalysisSpec analysis;
  OutputSpec output;

  const RuleSpec& rule(const std::string& name) const;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Throws InvalidInput on malformed input.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig parse_config_string(const std::string& text);
ExperimentConfig load_config(const std::string& path);
void write_config(std::ostream& out, const ExperimentConfig& config);
std::string config_to_string(const ExperimentConfig& config);

/// Validates references and builds the objects.
struct Experiment {
  std::shared_ptr<const SpinPoset> spin;
  std::map<std::string, std::shared_ptr<const LocalRule>> rules;
  std::map<std::string, std::shared_ptr<const Dynamics>> dynamics;
  std::optional<Volume> volume;
  std::vector<ComponentSpec> components;
  std::vector<std::string> component_rules;
};

Experiment materialize(const ExperimentConfig& config);

SpinPoset build_spin(const SpinSpec& spec);
LocalRule build_rule(const RuleSpec& spec, const std::shared_ptr<const SpinPoset>& spin);
Volume build_volume(const VolumeSpec& spec);

/// Initial configuration of component i: "bottom", "top", "random",
/// "ramp:I:N" (top on the first I/(N-1) of the sites) or a label list.
std::vector<Spin> initial_config(const std::string& text, const Volume& volume, const SpinPoset& spin,
                                 std::uint64_t seed, std::uint32_t salt);

/// "spin 0", "product 0 1", "constant 3" (sites as coordinates).
LocalFunction build_function(const std::string& text, int dim, const std::shared_ptr<const SpinPoset>& spin);

Coord parse_coord(const std::string& text, int dim);
std::vector<Coord> parse_coords(const std::string& text, int dim);
std::string format_coord(const Coord& c, int dim);
std::string format_double(double x);
/// "torus:4", "torus:4x4", "box:3", "ball:1" (d from `dim`), "sites:0;1;2".
VolumeSpec parse_volume_flag(const std::string& text, int dim);

}  // namespace pcacouple::cli
