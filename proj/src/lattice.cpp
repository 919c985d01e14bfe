#include "rbsde/lattice.hpp"

#include <cmath>
#include <cstdlib>

#include "rbsde/errors.hpp"

namespace rbsde {

LevelField make_level_field(int n_steps, double c) {
  LevelField f(static_cast<size_t>(n_steps) + 1);
  for (int k = 0; k <= n_steps; ++k) f[k].assign(static_cast<size_t>(k) + 1, c);
  return f;
}

NodeMask make_node_mask(int n_steps, uint8_t c) {
  NodeMask m(static_cast<size_t>(n_steps) + 1);
  for (int k = 0; k <= n_steps; ++k) m[k].assign(static_cast<size_t>(k) + 1, c);
  return m;
}

BinomialTree::BinomialTree(TimeGrid grid) : grid_(grid), sqrt_dt_(std::sqrt(grid.dt())) {}

double BinomialTree::node_probability(int k, int j) const {
  // C(k, j) / 2^k, evaluated multiplicatively to stay exact in double for
  // the tree sizes used here.
  double p = 1.0;
  for (int i = 1; i <= j; ++i) p *= static_cast<double>(k - j + i) / i;
  return p * std::ldexp(1.0, -k);
}

TreeProcess TreeProcess::constant(const BinomialTree& tree, double c) {
  TreeProcess x;
  x.val = make_level_field(tree.steps(), c);
  x.post = x.val;
  return x;
}

TreeProcess TreeProcess::from_node_fn(const BinomialTree& tree,
                                      const std::function<double(int, int, double)>& g) {
  TreeProcess x;
  const int n = tree.steps();
  x.val = make_level_field(n);
  for (int k = 0; k <= n; ++k)
    for (int j = 0; j <= k; ++j) x.val[k][j] = g(k, j, tree.walk(k, j));
  x.post = x.val;
  return x;
}

RegulatedPath TreeProcess::along_path(const std::vector<int>& node_index) const {
  const int n = last_level();
  RegulatedPath p(n, 0.0);
  for (int k = 0; k <= n; ++k) {
    p.value[k] = val[k][node_index[k]];
    p.post[k] = post[k][node_index[k]];
  }
  p.normalize_tail();
  return p;
}

TreeProcess tp_linear(const TreeProcess& a, double ca, const TreeProcess& b, double cb) {
  TreeProcess out = a;
  for (size_t k = 0; k < out.val.size(); ++k)
    for (size_t j = 0; j < out.val[k].size(); ++j) {
      out.val[k][j] = ca * a.val[k][j] + cb * b.val[k][j];
      out.post[k][j] = ca * a.post[k][j] + cb * b.post[k][j];
    }
  return out;
}

std::vector<double> cond_expect(const std::vector<double>& next_level) {
  if (next_level.size() < 2) throw ScenarioError("cond_expect: level must have >= 2 nodes");
  std::vector<double> out(next_level.size() - 1);
  for (size_t j = 0; j < out.size(); ++j) out[j] = 0.5 * (next_level[j + 1] + next_level[j]);
  return out;
}

LevelField martingale_representation(const BinomialTree& tree, const LevelField& m) {
  const int n = tree.steps();
  if (static_cast<int>(m.size()) != n + 1)
    throw ScenarioError("martingale_representation: level count mismatch");
  double scale = 0.0;
  for (const auto& lv : m)
    for (double v : lv) scale = std::max(scale, std::abs(v));
  const double tol = 1e-12 * std::max(scale, 1e-300);
  LevelField z(static_cast<size_t>(n));
  for (int k = 0; k < n; ++k) {
    z[k].resize(static_cast<size_t>(k) + 1);
    for (int j = 0; j <= k; ++j) {
      const double up = m[k + 1][j + 1];
      const double dn = m[k + 1][j];
      if (std::abs(0.5 * (up + dn) - m[k][j]) > tol)
        throw SolverError("martingale_representation: input is not a martingale");
      z[k][j] = (up - dn) / (2.0 * tree.sqrt_dt());
    }
  }
  return z;
}

StoppingTime::StoppingTime(int n_steps) : stop(make_node_mask(n_steps, 0)) {
  for (auto& v : stop.back()) v = 1;  // forced stop at the horizon
}

int StoppingTime::first_stop(const std::vector<int>& node_index) const {
  const int n = static_cast<int>(stop.size()) - 1;
  for (int k = 0; k < n; ++k)
    if (stop[k][node_index[k]]) return k;
  return n;
}

SnellResult snell_envelope(const BinomialTree& tree, const TreeProcess& g) {
  const int n = tree.steps();
  SnellResult res(n);
  TreeProcess s;
  s.val = make_level_field(n);
  s.val[n] = g.val[n];
  for (int j = 0; j <= n; ++j) res.optimal_rule.stop[n][j] = 1;
  for (int k = n - 1; k >= 0; --k) {
    const std::vector<double> cont = cond_expect(s.val[k + 1]);
    for (int j = 0; j <= k; ++j) {
      const double exercise = g.val[k][j];
      s.val[k][j] = std::max(exercise, cont[j]);
      res.optimal_rule.stop[k][j] = (s.val[k][j] == exercise) ? 1 : 0;
    }
  }
  s.post = s.val;
  res.envelope = std::move(s);
  return res;
}

void for_each_path(const BinomialTree& tree,
                   const std::function<void(const std::vector<int>&, double)>& f) {
  const int n = tree.steps();
  if (n > 24) throw ScenarioError("for_each_path: exact enumeration capped at 24 steps");
  const double w = std::ldexp(1.0, -n);
  std::vector<int> node_index(static_cast<size_t>(n) + 1, 0);
  const uint32_t npaths = 1u << n;
  for (uint32_t p = 0; p < npaths; ++p) {
    int j = 0;
    node_index[0] = 0;
    for (int k = 0; k < n; ++k) {
      j += (p >> k) & 1u;
      node_index[k + 1] = j;
    }
    f(node_index, w);
  }
}

std::vector<double> evaluate_at_stopping_time(const BinomialTree& tree, const TreeProcess& x,
                                              const StoppingTime& tau) {
  std::vector<double> out;
  out.reserve(1u << tree.steps());
  for_each_path(tree, [&](const std::vector<int>& idx, double) {
    const int k = tau.first_stop(idx);
    out.push_back(x.val[k][idx[k]]);
  });
  return out;
}

double expectation_at_stopping_time(const BinomialTree& tree, const TreeProcess& x,
                                    const StoppingTime& tau) {
  const int n = tree.steps();
  std::vector<double> alive(1, 1.0);  // unstopped probability mass per node
  double acc = 0.0;
  for (int k = 0; k <= n; ++k) {
    std::vector<double> next(static_cast<size_t>(k) + 2, 0.0);
    for (int j = 0; j <= k; ++j) {
      if (alive[j] == 0.0) continue;
      if (tau.stop[k][j] || k == n) {
        acc += alive[j] * x.val[k][j];
      } else {
        next[j] += 0.5 * alive[j];
        next[j + 1] += 0.5 * alive[j];
      }
    }
    alive = std::move(next);
  }
  return acc;
}

}  // namespace rbsde
