#include "rbsde/norms.hpp"

#include <algorithm>
#include <cmath>

#include "rbsde/errors.hpp"

namespace rbsde {

double sp_norm(const BinomialTree& tree, const TreeProcess& x, double p) {
  if (p < 1.0) throw ScenarioError("sp_norm: p must be >= 1 (use classd_norm for p = 1 stopping)");
  double acc = 0.0;
  for_each_path(tree, [&](const std::vector<int>& idx, double w) {
    double sup = 0.0;
    for (size_t k = 0; k < idx.size(); ++k) {
      sup = std::max(sup, std::abs(x.val[k][idx[k]]));
      sup = std::max(sup, std::abs(x.post[k][idx[k]]));
    }
    acc += w * std::pow(sup, p);
  });
  return std::pow(acc, 1.0 / p);
}

double hp_norm(const BinomialTree& tree, const LevelField& z, double p) {
  if (!(p > 0.0)) throw ScenarioError("hp_norm: p must be positive");
  const double dt = tree.dt();
  double acc = 0.0;
  for_each_path(tree, [&](const std::vector<int>& idx, double w) {
    double quad = 0.0;
    for (size_t k = 0; k < z.size(); ++k) quad += z[k][idx[k]] * z[k][idx[k]] * dt;
    acc += w * std::pow(quad, 0.5 * p);
  });
  return p >= 1.0 ? std::pow(acc, 1.0 / p) : acc;
}

double classd_norm(const BinomialTree& tree, const TreeProcess& x) {
  const int n = tree.steps();
  std::vector<double> s(static_cast<size_t>(n) + 1);
  for (int j = 0; j <= n; ++j) s[j] = std::abs(x.val[n][j]);
  for (int k = n - 1; k >= 0; --k) {
    const std::vector<double> cont = cond_expect(s);
    s.resize(static_cast<size_t>(k) + 1);
    for (int j = 0; j <= k; ++j)
      s[j] = std::max({std::abs(x.val[k][j]), std::abs(x.post[k][j]), cont[j]});
  }
  return s[0];
}

MomentBoundCheck classd_sup_moment_bound(const BinomialTree& tree, const TreeProcess& x,
                                         double q) {
  if (!(q > 0.0 && q < 1.0)) throw ScenarioError("classd_sup_moment_bound: q must be in (0,1)");
  MomentBoundCheck chk;
  double acc = 0.0;
  for_each_path(tree, [&](const std::vector<int>& idx, double w) {
    double sup = 0.0;
    for (size_t k = 0; k < idx.size(); ++k) {
      sup = std::max(sup, std::abs(x.val[k][idx[k]]));
      sup = std::max(sup, std::abs(x.post[k][idx[k]]));
    }
    acc += w * std::pow(sup, q);
  });
  chk.lhs = acc;
  chk.rhs = std::pow(classd_norm(tree, x), q) / (1.0 - q);
  chk.ok = chk.lhs <= chk.rhs + 1e-12;
  return chk;
}

double vp_norm(const BinomialTree& tree, const TreeProcess& v, double p) {
  double acc = 0.0;
  for_each_path(tree, [&](const std::vector<int>& idx, double w) {
    double var = 0.0;
    for (size_t k = 0; k < idx.size(); ++k) {
      var += std::abs(v.post[k][idx[k]] - v.val[k][idx[k]]);
      if (k + 1 < idx.size()) var += std::abs(v.val[k + 1][idx[k + 1]] - v.post[k][idx[k]]);
    }
    acc += w * std::pow(var, p);
  });
  return p >= 1.0 ? std::pow(acc, 1.0 / p) : acc;
}

TreeProcess make_sandwich_witness(const TreeProcess& lower, const TreeProcess& upper) {
  TreeProcess x = lower;
  for (size_t k = 0; k < x.val.size(); ++k)
    for (size_t j = 0; j < x.val[k].size(); ++j) {
      x.val[k][j] = std::min(std::max(lower.val[k][j], 0.0), upper.val[k][j]);
      x.post[k][j] = std::min(std::max(lower.post[k][j], 0.0), upper.post[k][j]);
    }
  return x;
}

SandwichWitnessReport sandwich_witness_check(const BinomialTree& tree, const TreeProcess& x,
                                             const TreeProcess& lower, const TreeProcess& upper,
                                             const Generator& gen, double p) {
  const int n = tree.steps();
  SandwichWitnessReport rep;
  rep.sandwich_ok = true;
  for (int k = 0; k <= n && rep.sandwich_ok; ++k)
    for (int j = 0; j <= k; ++j) {
      if (x.val[k][j] < lower.val[k][j] || x.val[k][j] > upper.val[k][j]) {
        rep.sandwich_ok = false;
        rep.violation_level = k;
        rep.violation_node = j;
        rep.violation_slot = "value";
        break;
      }
      if (x.post[k][j] < lower.post[k][j] || x.post[k][j] > upper.post[k][j]) {
        rep.sandwich_ok = false;
        rep.violation_level = k;
        rep.violation_node = j;
        rep.violation_slot = "post";
        break;
      }
    }

  rep.x_norm = p > 1.0 ? sp_norm(tree, x, p) : classd_norm(tree, x);

  // Martingale + predictable finite-variation split: the compensator absorbs
  // the predictable one-step drift and the right jumps.
  double fv_acc = 0.0;
  const double dt = tree.dt();
  double drift_acc = 0.0;
  for_each_path(tree, [&](const std::vector<int>& idx, double w) {
    double var = 0.0;
    double drift = 0.0;
    for (int k = 0; k < n; ++k) {
      const int j = idx[k];
      var += std::abs(x.post[k][j] - x.val[k][j]);
      const double mean_next = 0.5 * (x.val[k + 1][j + 1] + x.val[k + 1][j]);
      var += std::abs(mean_next - x.post[k][j]);
      drift += std::abs(gen(tree.time(k), x.val[k][j], 0.0)) * dt;
    }
    fv_acc += w * std::pow(var, p);
    drift_acc += w * std::pow(drift, p);
  });
  rep.fv_part_moment = p >= 1.0 ? std::pow(fv_acc, 1.0 / p) : fv_acc;
  rep.driver_moment = p >= 1.0 ? std::pow(drift_acc, 1.0 / p) : drift_acc;
  return rep;
}

}  // namespace rbsde
