#include "rbsde/scenario.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "rbsde/errors.hpp"

namespace rbsde {

using nlohmann::json;

namespace {

json jumps_to_json(const std::vector<std::pair<int, double>>& jl) {
  json out = json::array();
  for (const auto& [k, d] : jl) out.push_back(json::array({k, d}));
  return out;
}

std::vector<std::pair<int, double>> jumps_from_json(const json& j) {
  std::vector<std::pair<int, double>> out;
  for (const auto& e : j) out.emplace_back(e.at(0).get<int>(), e.at(1).get<double>());
  return out;
}

json barrier_to_json(const BarrierSpec& b) {
  json out;
  out["type"] = b.type;
  if (b.type == "constant") out["value"] = b.value;
  if (b.type == "walk") {
    out["a"] = b.a;
    out["b"] = b.b;
    out["c"] = b.c;
    out["d"] = b.d;
  }
  if (b.type == "piecewise") {
    out["values"] = b.values;
    if (!b.posts.empty()) out["posts"] = b.posts;
  }
  if (!b.right_jumps.empty()) out["right_jumps"] = jumps_to_json(b.right_jumps);
  return out;
}

BarrierSpec barrier_from_json(const json& j) {
  BarrierSpec b;
  b.type = j.at("type").get<std::string>();
  if (b.type == "constant")
    b.value = j.at("value").get<double>();
  else if (b.type == "walk") {
    b.a = j.value("a", 0.0);
    b.b = j.value("b", 0.0);
    b.c = j.value("c", 0.0);
    b.d = j.value("d", 0.0);
  } else if (b.type == "piecewise") {
    b.values = j.at("values").get<std::vector<double>>();
    if (j.contains("posts")) b.posts = j.at("posts").get<std::vector<double>>();
  } else {
    throw ScenarioError("barrier: unknown type " + b.type);
  }
  if (j.contains("right_jumps")) b.right_jumps = jumps_from_json(j.at("right_jumps"));
  return b;
}

}  // namespace

std::string scenario_to_json_string(const Scenario& sc) {
  json j;
  j["grid"] = {{"T", sc.horizon}, {"N", sc.steps}};
  j["seed"] = sc.seed;
  j["p"] = sc.p;
  json gen;
  gen["family"] = sc.generator_family;
  for (const auto& [k, v] : sc.generator_params) gen[k] = v;
  j["generator"] = gen;
  json term;
  term["type"] = sc.terminal.type;
  if (sc.terminal.type == "constant") term["a"] = sc.terminal.a;
  if (sc.terminal.type == "walk") {
    term["a"] = sc.terminal.a;
    term["b"] = sc.terminal.b;
    term["c"] = sc.terminal.c;
  }
  if (sc.terminal.type == "blend") term["frac"] = sc.terminal.frac;
  j["terminal"] = term;
  json forcing;
  forcing["right_jumps"] = jumps_to_json(sc.forcing.right_jumps);
  forcing["left_jumps"] = jumps_to_json(sc.forcing.left_jumps);
  j["forcing"] = forcing;
  j["lower"] = barrier_to_json(sc.lower);
  j["upper"] = barrier_to_json(sc.upper);
  return j.dump(2);
}

Scenario scenario_from_json_string(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ScenarioError(std::string("scenario parse error: ") + e.what());
  }
  try {
    Scenario sc;
    sc.horizon = j.at("grid").at("T").get<double>();
    sc.steps = j.at("grid").at("N").get<int>();
    sc.seed = j.value("seed", 0ull);
    sc.p = j.value("p", 2.0);
    if (j.contains("generator")) {
      const json& g = j.at("generator");
      sc.generator_family = g.at("family").get<std::string>();
      for (auto it = g.begin(); it != g.end(); ++it)
        if (it.key() != "family") sc.generator_params[it.key()] = it.value().get<double>();
    }
    if (j.contains("terminal")) {
      const json& t = j.at("terminal");
      sc.terminal.type = t.at("type").get<std::string>();
      sc.terminal.a = t.value("a", 0.0);
      sc.terminal.b = t.value("b", 0.0);
      sc.terminal.c = t.value("c", 0.0);
      sc.terminal.frac = t.value("frac", 0.5);
    }
    if (j.contains("forcing")) {
      const json& f = j.at("forcing");
      if (f.contains("right_jumps")) sc.forcing.right_jumps = jumps_from_json(f.at("right_jumps"));
      if (f.contains("left_jumps")) sc.forcing.left_jumps = jumps_from_json(f.at("left_jumps"));
    }
    sc.lower = barrier_from_json(j.at("lower"));
    sc.upper = barrier_from_json(j.at("upper"));
    return sc;
  } catch (const json::exception& e) {
    throw ScenarioError(std::string("scenario schema error: ") + e.what());
  }
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open scenario file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return scenario_from_json_string(ss.str());
}

void save_scenario(const Scenario& sc, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ScenarioError("cannot write scenario file: " + path);
  out << scenario_to_json_string(sc) << "\n";
}

namespace {

TreeProcess materialize_barrier(const BinomialTree& tree, const BarrierSpec& b,
                                const std::string& which) {
  const int n = tree.steps();
  TreeProcess x;
  if (b.type == "constant") {
    x = TreeProcess::constant(tree, b.value);
  } else if (b.type == "walk") {
    x = TreeProcess::from_node_fn(tree, [&](int k, int, double w) {
      return b.a + b.b * w + b.c * std::abs(w) + b.d * tree.time(k);
    });
  } else if (b.type == "piecewise") {
    if (static_cast<int>(b.values.size()) != n + 1)
      throw ScenarioError(which + " barrier: piecewise values must have N+1 entries");
    if (!b.posts.empty() && b.posts.size() != b.values.size())
      throw ScenarioError(which + " barrier: posts must match values");
    x = TreeProcess::from_node_fn(tree, [&](int k, int, double) { return b.values[k]; });
    if (!b.posts.empty())
      for (int k = 0; k <= n; ++k)
        for (int j = 0; j <= k; ++j) x.post[k][j] = b.posts[k];
  } else {
    throw ScenarioError(which + " barrier: unknown type " + b.type);
  }
  for (const auto& [k, d] : b.right_jumps) {
    if (k < 0 || k >= n) throw ScenarioError(which + " barrier: right jump level out of range");
    for (int j = 0; j <= k; ++j) x.post[k][j] = x.val[k][j] + d;
  }
  for (int j = 0; j <= n; ++j) x.post[n][j] = x.val[n][j];
  return x;
}

}  // namespace

MaterializedScenario materialize(const Scenario& sc) {
  const BinomialTree tree(TimeGrid(sc.horizon, sc.steps));
  MaterializedScenario m(tree);
  m.p = sc.p;
  m.seed = sc.seed;
  m.gen = Generator::from_config(sc.generator_family, sc.generator_params);
  const int n = sc.steps;

  // Deterministic piecewise-constant forcing from its jump lists.
  RegulatedPath vp(n, 0.0);
  std::map<int, double> rj, lj;
  for (const auto& [k, d] : sc.forcing.right_jumps) {
    if (k < 0 || k >= n) throw ScenarioError("forcing: right jump level out of range");
    rj[k] += d;
  }
  for (const auto& [k, d] : sc.forcing.left_jumps) {
    if (k < 1 || k > n) throw ScenarioError("forcing: left jump level out of range");
    lj[k] += d;
  }
  double cur = 0.0;
  for (int k = 0; k <= n; ++k) {
    if (k > 0 && lj.count(k)) cur += lj[k];
    vp.value[k] = cur;
    if (k < n && rj.count(k)) cur += rj[k];
    vp.post[k] = cur;
  }
  vp.normalize_tail();
  m.forcing = TreeProcess::from_node_fn(tree, [&](int k, int, double) { return vp.value[k]; });
  for (int k = 0; k <= n; ++k)
    for (int j = 0; j <= k; ++j) m.forcing.post[k][j] = vp.post[k];

  m.lower = materialize_barrier(tree, sc.lower, "lower");
  m.upper = materialize_barrier(tree, sc.upper, "upper");

  for (int k = 0; k <= n; ++k)
    for (int j = 0; j <= k; ++j) {
      if (m.lower.val[k][j] > m.upper.val[k][j])
        throw ScenarioError("barriers cross (value slot) at node (" + std::to_string(k) + "," +
                            std::to_string(j) + ")");
      if (m.lower.post[k][j] > m.upper.post[k][j])
        throw ScenarioError("barriers cross (post slot) at node (" + std::to_string(k) + "," +
                            std::to_string(j) + ")");
    }

  m.terminal.resize(static_cast<size_t>(n) + 1);
  for (int j = 0; j <= n; ++j) {
    const double w = tree.walk(n, j);
    double xi;
    if (sc.terminal.type == "constant")
      xi = sc.terminal.a;
    else if (sc.terminal.type == "walk")
      xi = sc.terminal.a + sc.terminal.b * w + sc.terminal.c * std::abs(w);
    else if (sc.terminal.type == "blend")
      xi = m.lower.val[n][j] +
           sc.terminal.frac * (m.upper.val[n][j] - m.lower.val[n][j]);
    else
      throw ScenarioError("terminal: unknown type " + sc.terminal.type);
    m.terminal[j] = xi;
    if (xi < m.lower.val[n][j] || xi > m.upper.val[n][j])
      throw ScenarioError("terminal value outside barriers at node (" + std::to_string(n) + "," +
                          std::to_string(j) + ")");
  }
  return m;
}

}  // namespace rbsde
