#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "rbsde/generator.hpp"
#include "rbsde/lattice.hpp"

namespace rbsde {

/// Terminal-value specification.
///  - "constant": value a;
///  - "walk": a + b * B_N + c * |B_N|;
///  - "blend": L_N + frac * (U_N - L_N), always admissible.
struct TerminalSpec {
  std::string type = "constant";
  double a = 0.0, b = 0.0, c = 0.0;
  double frac = 0.5;
};

/// Barrier specification. Types:
///  - "constant": value;
///  - "walk": a + b * B + c * |B| + d * t;
///  - "piecewise": explicit deterministic values (and optional posts).
/// right_jumps is a list of (level, delta) applied uniformly across the
/// level's nodes: post = value + delta there.
struct BarrierSpec {
  std::string type = "constant";
  double value = 0.0;
  double a = 0.0, b = 0.0, c = 0.0, d = 0.0;
  std::vector<double> values;
  std::vector<double> posts;
  std::vector<std::pair<int, double>> right_jumps;
};

/// Deterministic piecewise-constant forcing given by its jump lists.
struct ForcingSpec {
  std::vector<std::pair<int, double>> right_jumps;
  std::vector<std::pair<int, double>> left_jumps;
};

struct Scenario {
  double horizon = 1.0;
  int steps = 8;
  uint64_t seed = 0;
  double p = 2.0;
  std::string generator_family = "zero";
  std::map<std::string, double> generator_params;
  TerminalSpec terminal;
  ForcingSpec forcing;
  BarrierSpec lower;
  BarrierSpec upper;
};

Scenario load_scenario(const std::string& path);
void save_scenario(const Scenario& sc, const std::string& path);
std::string scenario_to_json_string(const Scenario& sc);
Scenario scenario_from_json_string(const std::string& text);

/// Scenario data materialized on the tree, validated: barriers ordered at
/// every slot and terminal between the terminal barriers (violations are
/// reported with the node location).
struct MaterializedScenario {
  BinomialTree tree;
  std::vector<double> terminal;
  TreeProcess forcing;
  TreeProcess lower;
  TreeProcess upper;
  Generator gen;
  double p = 2.0;
  uint64_t seed = 0;

  explicit MaterializedScenario(const BinomialTree& t) : tree(t) {}
};

MaterializedScenario materialize(const Scenario& sc);

}  // namespace rbsde
