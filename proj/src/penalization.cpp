#include "rbsde/penalization.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "rbsde/bsde.hpp"
#include "rbsde/errors.hpp"
#include "rbsde/reflected_one.hpp"

namespace rbsde {

using detail::BackwardInput;
using detail::BarrierMode;
using detail::PushMasses;

namespace {

bool qualifies_down(const TreeProcess& x, const TreeProcess& v, int k, int j, double thr) {
  return x.right_jump(k, j) < -thr || v.right_jump(k, j) < -thr;
}

StoppingArray build_array(const BinomialTree& tree, const TreeProcess& a, const TreeProcess& b,
                          int n, int budget, bool down) {
  if (n < 1) throw ScenarioError("stopping array: level must be >= 1");
  const int steps = tree.steps();
  StoppingArray arr;
  arr.level = n;
  arr.threshold = 1.0 / n;
  arr.member = make_node_mask(steps, 0);
  for (auto& v : arr.member[steps]) v = 1;

  auto qualifies = [&](int k, int j, double thr) {
    if (down) return qualifies_down(a, b, k, j, thr);
    return a.right_jump(k, j) > thr || b.right_jump(k, j) > thr;
  };

  // Level-uniformity scan (whole level qualifies or none).
  arr.level_uniform = true;
  std::vector<char> level_hits(static_cast<size_t>(steps), 0);
  for (int k = 0; k < steps; ++k) {
    int hits = 0;
    for (int j = 0; j <= k; ++j)
      if (qualifies(k, j, arr.threshold)) ++hits;
    if (hits > 0 && hits < k + 1) arr.level_uniform = false;
    level_hits[k] = hits == k + 1 ? 1 : (hits > 0 ? 2 : 0);
  }

  if (budget < 0) {
    for (int k = 0; k < steps; ++k)
      for (int j = 0; j <= k; ++j)
        if (qualifies(k, j, arr.threshold)) arr.member[k][j] = 1;
    if (arr.level_uniform) {
      for (int k = 0; k < steps; ++k)
        if (level_hits[k] == 1) arr.times.push_back(k);
      arr.count = static_cast<int>(arr.times.size()) + 1;
    } else {
      int lv = 0;
      for (int k = 0; k < steps; ++k)
        if (level_hits[k] != 0) ++lv;
      arr.count = lv + 1;
    }
    return arr;
  }

  if (!arr.level_uniform)
    throw ScenarioError("stopping array: truncation budget needs level-uniform jumps");

  // Inductive construction with a per-level budget and the join-merge of the
  // previous level.
  std::set<int> kept;
  double tail = 0.0;
  for (int m = 1; m <= n; ++m) {
    const double thr = 1.0 / m;
    std::vector<int> q;
    for (int k = 0; k < steps; ++k)
      for (int j = 0; j <= k; ++j)
        if (qualifies(k, j, thr)) {
          q.push_back(k);
          break;
        }
    const int take = std::min<int>(budget, static_cast<int>(q.size()));
    std::set<int> next(q.begin(), q.begin() + take);
    tail = take < static_cast<int>(q.size()) ? 1.0 : 0.0;
    const int anchor = next.empty() ? -1 : *next.rbegin();
    for (int s : kept) next.insert(std::max(anchor, s));
    next.erase(-1);
    kept = std::move(next);
  }
  arr.times.assign(kept.begin(), kept.end());
  arr.count = static_cast<int>(arr.times.size()) + 1;
  arr.tail_probability = tail;
  for (int k : arr.times)
    for (int j = 0; j <= k; ++j) arr.member[k][j] = 1;
  return arr;
}

}  // namespace

StoppingArray exhaust_down_jumps(const BinomialTree& tree, const TreeProcess& lower,
                                 const TreeProcess& forcing, int n, int budget) {
  return build_array(tree, lower, forcing, n, budget, /*down=*/true);
}

StoppingArray exhaust_up_jumps(const BinomialTree& tree, const TreeProcess& upper,
                               const TreeProcess& forcing, int n, int budget) {
  return build_array(tree, upper, forcing, n, budget, /*down=*/false);
}

MergedGrid merge_jump_grids(const StoppingArray& down, const StoppingArray& up) {
  if (down.level != up.level) throw ScenarioError("merge_jump_grids: level mismatch");
  MergedGrid g;
  const size_t levels = down.member.size();
  g.member.resize(levels);
  for (size_t k = 0; k < levels; ++k) {
    g.member[k].resize(down.member[k].size());
    for (size_t j = 0; j < g.member[k].size(); ++j)
      g.member[k][j] = down.member[k][j] | up.member[k][j];
  }
  std::set<int> times(down.times.begin(), down.times.end());
  times.insert(up.times.begin(), up.times.end());
  g.times.assign(times.begin(), times.end());
  g.count = static_cast<int>(g.times.size()) + 1;
  return g;
}

std::string scheme_name(PenalScheme s) {
  switch (s) {
    case PenalScheme::kUpperReflected: return "upper";
    case PenalScheme::kLowerReflected: return "lower";
    case PenalScheme::kPlain: return "bsde";
  }
  return "?";
}

PenalizedSolution solve_upper_penalized(const BinomialTree& tree,
                                        const std::vector<double>& terminal, const Generator& gen,
                                        const TreeProcess& forcing, const TreeProcess& lower,
                                        const TreeProcess& upper, int n) {
  PenalizedSolution sol;
  sol.scheme = PenalScheme::kUpperReflected;
  sol.level = n;
  if (n == 0) {
    OneBarrierSolution base = solve_upper(tree, terminal, gen, forcing, upper);
    sol.y = std::move(base.y);
    sol.z = std::move(base.z);
    sol.k = PushMasses::zeros(tree.steps());
    sol.a = std::move(base.k);
    return sol;
  }
  const StoppingArray arr = exhaust_down_jumps(tree, lower, forcing, n);
  BackwardInput in;
  in.tree = &tree;
  in.terminal = terminal;
  in.drift = detail::wrap_generator(gen);
  in.drift_monotone_y = gen.monotone_y;
  in.drv = &forcing;
  in.lower.mode = BarrierMode::kJumpMasked;
  in.lower.barrier = &lower;
  in.lower.penalty_rate = static_cast<double>(n);
  in.lower.jump_nodes = &arr.member;
  in.upper.mode = BarrierMode::kClampAll;
  in.upper.barrier = &upper;
  auto out = detail::run_backward(in);
  sol.y = std::move(out.y);
  sol.z = std::move(out.z);
  sol.k = std::move(out.lower_push);
  sol.a = std::move(out.upper_push);
  return sol;
}

namespace {

Generator mirror_generator(const Generator& gen) {
  Generator m;
  m.name = gen.name + "_mirror";
  m.lipschitz_z = gen.lipschitz_z;
  m.monotone_y = gen.monotone_y;
  const auto f = gen.f;
  m.f = [f](double t, double y, double z) { return -f(t, -y, -z); };
  return m;
}

TreeProcess negate(const TreeProcess& x) {
  TreeProcess out = x;
  for (auto& lv : out.val)
    for (auto& v : lv) v = -v;
  for (auto& lv : out.post)
    for (auto& v : lv) v = -v;
  return out;
}

}  // namespace

PenalizedSolution solve_lower_penalized(const BinomialTree& tree,
                                        const std::vector<double>& terminal, const Generator& gen,
                                        const TreeProcess& forcing, const TreeProcess& lower,
                                        const TreeProcess& upper, int n) {
  std::vector<double> neg_terminal(terminal.size());
  for (size_t j = 0; j < terminal.size(); ++j) neg_terminal[j] = -terminal[j];
  const TreeProcess neg_v = negate(forcing);
  const TreeProcess neg_l = negate(upper);  // mirrored lower barrier
  const TreeProcess neg_u = negate(lower);  // mirrored upper barrier
  PenalizedSolution m =
      solve_upper_penalized(tree, neg_terminal, mirror_generator(gen), neg_v, neg_l, neg_u, n);
  PenalizedSolution sol;
  sol.scheme = PenalScheme::kLowerReflected;
  sol.level = n;
  sol.y = negate(m.y);
  sol.z = m.z;
  for (auto& lv : sol.z)
    for (auto& v : lv) v = -v;
  sol.k = std::move(m.a);  // mirrored upper reflection = lower reflection here
  sol.a = std::move(m.k);  // mirrored lower penalty = upper penalty here
  return sol;
}

PenalizedSolution solve_bsde_penalized(const BinomialTree& tree,
                                       const std::vector<double>& terminal, const Generator& gen,
                                       const TreeProcess& forcing, const TreeProcess& lower,
                                       const TreeProcess& upper, int n) {
  PenalizedSolution sol;
  sol.scheme = PenalScheme::kPlain;
  sol.level = n;
  if (n == 0) {
    BsdeSolution base = solve_bsde(tree, terminal, gen, forcing);
    sol.y = std::move(base.y);
    sol.z = std::move(base.z);
    sol.k = PushMasses::zeros(tree.steps());
    sol.a = PushMasses::zeros(tree.steps());
    return sol;
  }
  const StoppingArray down = exhaust_down_jumps(tree, lower, forcing, n);
  const StoppingArray up = exhaust_up_jumps(tree, upper, forcing, n);
  BackwardInput in;
  in.tree = &tree;
  in.terminal = terminal;
  in.drift = detail::wrap_generator(gen);
  in.drift_monotone_y = gen.monotone_y;
  in.drv = &forcing;
  in.lower.mode = BarrierMode::kJumpMasked;
  in.lower.barrier = &lower;
  in.lower.penalty_rate = static_cast<double>(n);
  in.lower.jump_nodes = &down.member;
  in.upper.mode = BarrierMode::kJumpMasked;
  in.upper.barrier = &upper;
  in.upper.penalty_rate = static_cast<double>(n);
  in.upper.jump_nodes = &up.member;
  auto out = detail::run_backward(in);
  sol.y = std::move(out.y);
  sol.z = std::move(out.z);
  sol.k = std::move(out.lower_push);
  sol.a = std::move(out.upper_push);
  return sol;
}

OrderingReport check_push_monotone(const PushMasses& smaller, const PushMasses& larger,
                                   double tol) {
  OrderingReport rep;
  for (size_t k = 0; k < smaller.flow.size(); ++k)
    for (size_t j = 0; j < smaller.flow[k].size(); ++j)
      rep.max_violation = std::max(rep.max_violation, smaller.flow[k][j] - larger.flow[k][j]);
  for (size_t k = 0; k < smaller.jump.size(); ++k)
    for (size_t j = 0; j < smaller.jump[k].size(); ++j)
      rep.max_violation = std::max(rep.max_violation, smaller.jump[k][j] - larger.jump[k][j]);
  rep.max_violation = std::max(rep.max_violation, 0.0);
  rep.ok = rep.max_violation <= tol;
  return rep;
}

namespace {

TreeProcess slot_min(const TreeProcess& a, const TreeProcess& b) {
  TreeProcess out = a;
  for (size_t k = 0; k < out.val.size(); ++k)
    for (size_t j = 0; j < out.val[k].size(); ++j) {
      out.val[k][j] = std::min(a.val[k][j], b.val[k][j]);
      out.post[k][j] = std::min(a.post[k][j], b.post[k][j]);
    }
  return out;
}

TreeProcess slot_max(const TreeProcess& a, const TreeProcess& b) {
  TreeProcess out = a;
  for (size_t k = 0; k < out.val.size(); ++k)
    for (size_t j = 0; j < out.val[k].size(); ++j) {
      out.val[k][j] = std::max(a.val[k][j], b.val[k][j]);
      out.post[k][j] = std::max(a.post[k][j], b.post[k][j]);
    }
  return out;
}

}  // namespace

double penalized_shifted_minimality(const BinomialTree& tree, const PenalizedSolution& sol,
                                    const TreeProcess& lower, const TreeProcess& upper) {
  TreeProcess lo = lower, up = upper;
  if (sol.scheme == PenalScheme::kUpperReflected || sol.scheme == PenalScheme::kPlain)
    lo = slot_min(lower, sol.y);
  if (sol.scheme == PenalScheme::kLowerReflected || sol.scheme == PenalScheme::kPlain)
    up = slot_max(upper, sol.y);
  const auto [a, b] = minimality_terms(tree, sol.y, sol.k, sol.a, lo, up);
  return std::max(a, b);
}

double atomic_push_undershoot_lower(const BinomialTree& tree, const TreeProcess& y,
                                    const TreeProcess& forcing, const TreeProcess& lower) {
  const int n = tree.steps();
  double worst = 0.0;
  for (int k = 0; k < n; ++k)
    for (int j = 0; j <= k; ++j) {
      const double a_up = y.val[k + 1][j + 1] + forcing.val[k + 1][j + 1] - forcing.post[k][j];
      const double a_dn = y.val[k + 1][j] + forcing.val[k + 1][j] - forcing.post[k][j];
      worst = std::max(worst, lower.post[k][j] - 0.5 * (a_up + a_dn));
    }
  return std::max(worst, 0.0);
}

double atomic_push_undershoot_upper(const BinomialTree& tree, const TreeProcess& y,
                                    const TreeProcess& forcing, const TreeProcess& upper) {
  const int n = tree.steps();
  double worst = 0.0;
  for (int k = 0; k < n; ++k)
    for (int j = 0; j <= k; ++j) {
      const double a_up = y.val[k + 1][j + 1] + forcing.val[k + 1][j + 1] - forcing.post[k][j];
      const double a_dn = y.val[k + 1][j] + forcing.val[k + 1][j] - forcing.post[k][j];
      worst = std::max(worst, 0.5 * (a_up + a_dn) - upper.post[k][j]);
    }
  return std::max(worst, 0.0);
}

namespace {

double sp_error(const BinomialTree& tree, const TreeProcess& a, const TreeProcess& b, double p) {
  double acc = 0.0;
  for_each_path(tree, [&](const std::vector<int>& idx, double w) {
    double sup = 0.0;
    for (size_t k = 0; k < idx.size(); ++k) {
      sup = std::max(sup, std::abs(a.val[k][idx[k]] - b.val[k][idx[k]]));
      sup = std::max(sup, std::abs(a.post[k][idx[k]] - b.post[k][idx[k]]));
    }
    acc += w * std::pow(sup, p);
  });
  return p >= 1.0 ? std::pow(acc, 1.0 / p) : acc;
}

double hgamma_error(const BinomialTree& tree, const LevelField& a, const LevelField& b,
                    double gamma, double p) {
  const double dt = tree.dt();
  double acc = 0.0;
  for_each_path(tree, [&](const std::vector<int>& idx, double w) {
    double integral = 0.0;
    for (size_t k = 0; k < a.size(); ++k)
      integral += std::pow(std::abs(a[k][idx[k]] - b[k][idx[k]]), gamma) * dt;
    acc += w * std::pow(integral, 0.5 * p);
  });
  return p >= 1.0 ? std::pow(acc, 1.0 / p) : acc;
}

// Node-wise comparison a <= b + tol over both slots.
bool tp_below(const TreeProcess& a, const TreeProcess& b, double tol) {
  for (size_t k = 0; k < a.val.size(); ++k)
    for (size_t j = 0; j < a.val[k].size(); ++j) {
      if (a.val[k][j] > b.val[k][j] + tol) return false;
      if (a.post[k][j] > b.post[k][j] + tol) return false;
    }
  return true;
}

}  // namespace

ConvergenceTable convergence_report(const BinomialTree& tree, const std::vector<double>& terminal,
                                    const Generator& gen, const TreeProcess& forcing,
                                    const TreeProcess& lower, const TreeProcess& upper,
                                    const std::vector<int>& n_list, double p) {
  ConvergenceTable table;
  const TwoBarrierSolution ref =
      solve_clamped(tree, terminal, gen, forcing, lower, upper, /*attach_report=*/false);

  double scale = 1.0;
  for (const auto& lv : ref.y.val)
    for (double v : lv) scale = std::max(scale, std::abs(v));
  const double eps = 1e-12 * scale;
  const double under_lo = atomic_push_undershoot_lower(tree, ref.y, forcing, lower);
  const double under_up = atomic_push_undershoot_upper(tree, ref.y, forcing, upper);
  table.left_jumps_absent_plus = under_lo <= eps;
  table.left_jumps_absent_minus = under_up <= eps;
  table.left_jumps_absent_net = table.left_jumps_absent_plus && table.left_jumps_absent_minus;

  const TreeProcess* prev_upper = nullptr;
  const TreeProcess* prev_lower = nullptr;
  std::vector<PenalizedSolution> keep;  // stable storage for prev pointers
  keep.reserve(n_list.size() * 3);

  for (int n : n_list) {
    PenalizedSolution su = solve_upper_penalized(tree, terminal, gen, forcing, lower, upper, n);
    PenalizedSolution sl = solve_lower_penalized(tree, terminal, gen, forcing, lower, upper, n);
    PenalizedSolution sb = solve_bsde_penalized(tree, terminal, gen, forcing, lower, upper, n);
    const bool sandwich = tp_below(su.y, sb.y, eps) && tp_below(sb.y, sl.y, eps);
    const bool mono_u = prev_upper == nullptr || tp_below(*prev_upper, su.y, eps);
    const bool mono_l = prev_lower == nullptr || tp_below(sl.y, *prev_lower, eps);

    const PenalizedSolution* trio[3] = {&su, &sl, &sb};
    const bool mono[3] = {mono_u, mono_l, mono_u && mono_l};
    for (int i = 0; i < 3; ++i) {
      const PenalizedSolution& s = *trio[i];
      ConvergenceRow row;
      row.scheme = scheme_name(s.scheme);
      row.n = n;
      row.sup_err = sp_error(tree, s.y, ref.y, p);
      row.h_err_g1 = hgamma_error(tree, s.z, ref.z, 1.0, p);
      row.h_err_g15 = hgamma_error(tree, s.z, ref.z, 1.5, p);
      row.h_err_g2 = hgamma_error(tree, s.z, ref.z, 2.0, p);
      row.minimality_residual = penalized_shifted_minimality(tree, s, lower, upper);
      row.sandwich_ok = sandwich;
      row.monotone_ok = mono[i];
      table.rows.push_back(std::move(row));
    }
    keep.push_back(std::move(su));
    keep.push_back(std::move(sl));
    prev_upper = &keep[keep.size() - 2].y;
    prev_lower = &keep[keep.size() - 1].y;
  }
  return table;
}

std::string ConvergenceTable::to_csv() const {
  std::string out =
      "scheme,n,sup_err,h_err_g1,h_err_g15,h_err_g2,minimality_residual,sandwich_ok,monotone_ok\n";
  char buf[512];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%s,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%d,%d\n",
                  r.scheme.c_str(), r.n, r.sup_err, r.h_err_g1, r.h_err_g15, r.h_err_g2,
                  r.minimality_residual, r.sandwich_ok ? 1 : 0, r.monotone_ok ? 1 : 0);
    out += buf;
  }
  return out;
}

}  // namespace rbsde
