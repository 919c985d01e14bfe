#include "rbsde/reflected_two.hpp"

#include <algorithm>
#include <cmath>

#include "rbsde/errors.hpp"
#include "rbsde/reflected_one.hpp"

namespace rbsde {

using detail::BackwardInput;
using detail::BarrierMode;
using detail::NodeDrift;
using detail::PushMasses;

double SolutionReport::worst() const {
  double w = dynamics;
  w = std::max(w, flow_lower_identity);
  w = std::max(w, flow_upper_identity);
  w = std::max(w, jump_lower_identity);
  w = std::max(w, jump_upper_identity);
  w = std::max(w, minimality_lower);
  w = std::max(w, minimality_upper);
  w = std::max(w, barrier_violation);
  w = std::max(w, common_mass);
  return w;
}

double sup_distance(const TreeProcess& a, const TreeProcess& b) {
  double m = 0.0;
  for (size_t k = 0; k < a.val.size(); ++k)
    for (size_t j = 0; j < a.val[k].size(); ++j) {
      m = std::max(m, std::abs(a.val[k][j] - b.val[k][j]));
      m = std::max(m, std::abs(a.post[k][j] - b.post[k][j]));
    }
  return m;
}

double sup_distance(const LevelField& a, const LevelField& b) {
  double m = 0.0;
  for (size_t k = 0; k < a.size(); ++k)
    for (size_t j = 0; j < a[k].size(); ++j) m = std::max(m, std::abs(a[k][j] - b[k][j]));
  return m;
}

namespace {

TwoBarrierSolution assemble_from_net(TreeProcess y, LevelField z, const PushMasses& plus,
                                     const PushMasses& minus, int n) {
  TwoBarrierSolution sol;
  sol.y = std::move(y);
  sol.z = std::move(z);
  sol.rp = PushMasses::zeros(n);
  sol.rm = PushMasses::zeros(n);
  for (int k = 0; k < n; ++k)
    for (int j = 0; j <= k; ++j) {
      const double net = plus.flow[k][j] - minus.flow[k][j];
      sol.rp.flow[k][j] = std::max(net, 0.0);
      sol.rm.flow[k][j] = std::max(-net, 0.0);
    }
  for (int k = 0; k <= n; ++k)
    for (int j = 0; j <= k; ++j) {
      const double net = plus.jump[k][j] - minus.jump[k][j];
      sol.rp.jump[k][j] = std::max(net, 0.0);
      sol.rm.jump[k][j] = std::max(-net, 0.0);
    }
  return sol;
}

}  // namespace

TwoBarrierSolution solve_clamped(const BinomialTree& tree, const std::vector<double>& terminal,
                                 const Generator& gen, const TreeProcess& forcing,
                                 const TreeProcess& lower, const TreeProcess& upper,
                                 bool attach_report, double report_p) {
  BackwardInput in;
  in.tree = &tree;
  in.terminal = terminal;
  in.drift = detail::wrap_generator(gen);
  in.drift_monotone_y = gen.monotone_y;
  in.drv = &forcing;
  in.lower.mode = BarrierMode::kClampAll;
  in.lower.barrier = &lower;
  in.upper.mode = BarrierMode::kClampAll;
  in.upper.barrier = &upper;
  auto out = detail::run_backward(in);
  TwoBarrierSolution sol{std::move(out.y), std::move(out.z), std::move(out.lower_push),
                         std::move(out.upper_push), std::nullopt};
  if (attach_report)
    sol.report = verify_solution(tree, sol, terminal, gen, forcing, lower, upper, report_p);
  return sol;
}

namespace {

struct DecoupledIterate {
  TreeProcess y;
  LevelField z;
  PushMasses k;
};

TwoBarrierSolution solve_decoupled_node_drift(const BinomialTree& tree,
                                              const std::vector<double>& terminal,
                                              const NodeDrift& base_drift, double mu,
                                              const TreeProcess& forcing,
                                              const TreeProcess& lower, const TreeProcess& upper,
                                              int max_iter, double tol, DecouplingTrace* trace) {
  const int n = tree.steps();
  const TreeProcess zero_v = TreeProcess::constant(tree, 0.0);
  const std::vector<double> zero_terminal(static_cast<size_t>(n) + 1, 0.0);
  const Generator zero_gen = Generator::zero();

  DecouplingTrace local_trace;
  DecouplingTrace& tr = trace ? *trace : local_trace;
  tr = DecouplingTrace{};

  // First iterate: plain solve for y1, zero for y2.
  DecoupledIterate y1;
  {
    BackwardInput in;
    in.tree = &tree;
    in.terminal = terminal;
    in.drift = base_drift;
    in.drift_monotone_y = mu;
    in.drv = &forcing;
    auto out = detail::run_backward(in);
    y1 = DecoupledIterate{std::move(out.y), std::move(out.z), PushMasses::zeros(n)};
  }
  DecoupledIterate y2;
  y2.y = TreeProcess::constant(tree, 0.0);
  y2.z = LevelField(static_cast<size_t>(n));
  for (int k = 0; k < n; ++k) y2.z[k].assign(static_cast<size_t>(k) + 1, 0.0);
  y2.k = PushMasses::zeros(n);

  double scale = 0.0;
  for (const auto& lv : y1.y.val)
    for (double v : lv) scale = std::max(scale, std::abs(v));
  const double eps_mono = 1e-12 * (1.0 + scale);

  bool converged = false;
  for (int it = 1; it <= max_iter; ++it) {
    // y1-problem: lower barrier L + y2_prev, driver offset by y2_prev.
    const TreeProcess barrier1 = tp_linear(lower, 1.0, y2.y, 1.0);
    const TreeProcess& y2_prev = y2.y;
    NodeDrift drift1 = [&base_drift, &y2_prev](int k, int j, double t, double y, double z) {
      return base_drift(k, j, t, y - y2_prev.post[k][j], z);
    };
    OneBarrierSolution next1 =
        detail::solve_lower_node_drift(tree, terminal, drift1, mu, forcing, barrier1);

    // y2-problem: lower barrier y1_prev - U, zero data.
    const TreeProcess barrier2 = tp_linear(y1.y, 1.0, upper, -1.0);
    OneBarrierSolution next2 = detail::solve_lower_node_drift(
        tree, zero_terminal, detail::wrap_generator(zero_gen), 0.0, zero_v, barrier2);

    double viol1 = 0.0, viol2 = 0.0;
    for (int k = 0; k <= n; ++k)
      for (int j = 0; j <= k; ++j) {
        viol1 = std::max(viol1, y1.y.val[k][j] - next1.y.val[k][j]);
        viol1 = std::max(viol1, y1.y.post[k][j] - next1.y.post[k][j]);
        viol2 = std::max(viol2, y2.y.val[k][j] - next2.y.val[k][j]);
        viol2 = std::max(viol2, y2.y.post[k][j] - next2.y.post[k][j]);
      }
    if (viol1 > eps_mono) tr.monotone_y1 = false;
    if (viol2 > eps_mono) tr.monotone_y2 = false;

    const double incr =
        std::max(sup_distance(next1.y, y1.y), sup_distance(next2.y, y2.y));
    tr.increments.push_back(incr);
    tr.iterations = it;
    y1 = DecoupledIterate{std::move(next1.y), std::move(next1.z), std::move(next1.k)};
    y2 = DecoupledIterate{std::move(next2.y), std::move(next2.z), std::move(next2.k)};
    if (incr <= tol) {
      converged = true;
      break;
    }
  }
  tr.converged = converged;
  if (!converged)
    throw SolverError("solve_decoupled: iteration limit reached, last increment " +
                      std::to_string(tr.increments.empty() ? 0.0 : tr.increments.back()));

  TreeProcess y = tp_linear(y1.y, 1.0, y2.y, -1.0);
  LevelField z(static_cast<size_t>(n));
  for (int k = 0; k < n; ++k) {
    z[k].resize(static_cast<size_t>(k) + 1);
    for (int j = 0; j <= k; ++j) z[k][j] = y1.z[k][j] - y2.z[k][j];
  }
  return assemble_from_net(std::move(y), std::move(z), y1.k, y2.k, n);
}

}  // namespace

TwoBarrierSolution solve_decoupled(const BinomialTree& tree, const std::vector<double>& terminal,
                                   const Generator& gen, const TreeProcess& forcing,
                                   const TreeProcess& lower, const TreeProcess& upper,
                                   int max_iter, double tol, DecouplingTrace* trace) {
  if (gen.depends_on_z())
    throw ScenarioError("solve_decoupled: driver must not depend on z (lipschitz_z == 0)");
  return solve_decoupled_node_drift(tree, terminal, detail::wrap_generator(gen), gen.monotone_y,
                                    forcing, lower, upper, max_iter, tol, trace);
}

TwoBarrierSolution picard_solve(const BinomialTree& tree, const std::vector<double>& terminal,
                                const Generator& gen, const TreeProcess& forcing,
                                const TreeProcess& lower, const TreeProcess& upper,
                                const PicardOptions& opt, PicardTrace* trace) {
  const int n = tree.steps();
  const double big_t = tree.grid().horizon;

  PicardTrace local;
  PicardTrace& tr = trace ? *trace : local;
  tr = PicardTrace{};

  int m = 1;
  if (opt.forced_subintervals > 0) {
    m = std::min(opt.forced_subintervals, n);
  } else if (opt.allow_subdivision && gen.lipschitz_z * std::sqrt(big_t) > 0.5) {
    m = static_cast<int>(
        std::ceil(4.0 * gen.lipschitz_z * gen.lipschitz_z * big_t - 1e-12));
    m = std::max(1, std::min(m, n));
  }
  tr.subintervals = m;

  // Chunk boundaries in levels, ascending, first = 0, last = N.
  std::vector<int> cut(static_cast<size_t>(m) + 1);
  for (int i = 0; i <= m; ++i) cut[i] = static_cast<int>(std::llround(static_cast<double>(i) * n / m));

  TreeProcess y;
  y.val = make_level_field(n);
  y.post = make_level_field(n);
  LevelField z(static_cast<size_t>(n));
  for (int k = 0; k < n; ++k) z[k].assign(static_cast<size_t>(k) + 1, 0.0);
  PushMasses rp = PushMasses::zeros(n), rm = PushMasses::zeros(n);

  std::vector<double> chunk_terminal = terminal;
  bool all_converged = true;

  for (int ci = m - 1; ci >= 0; --ci) {
    const int lo = cut[ci], hi = cut[ci + 1];
    if (lo == hi) continue;
    LevelField z_prev(static_cast<size_t>(n));
    for (int k = 0; k < n; ++k) z_prev[k].assign(static_cast<size_t>(k) + 1, 0.0);
    bool chunk_converged = false;

    TreeProcess y_prev_chunk = TreeProcess::constant(tree, 0.0);
    detail::BackwardOutput out;
    for (int it = 1; it <= opt.max_iter; ++it) {
      NodeDrift frozen = [&gen, &z_prev](int k, int j, double t, double yv, double) {
        return gen(t, yv, z_prev[k][j]);
      };
      if (opt.inner == InnerSolver::kClamped) {
        BackwardInput in;
        in.tree = &tree;
        in.terminal = chunk_terminal;
        in.drift = frozen;
        in.drift_monotone_y = gen.monotone_y;
        in.drv = &forcing;
        in.lower.mode = BarrierMode::kClampAll;
        in.lower.barrier = &lower;
        in.upper.mode = BarrierMode::kClampAll;
        in.upper.barrier = &upper;
        in.terminal_level = hi;
        in.stop_level = lo;
        out = detail::run_backward(in);
      } else {
        // Decoupled inner solver; only supported on whole-interval solves.
        if (m != 1)
          throw ScenarioError("picard_solve: decoupled inner solver requires one subinterval");
        TwoBarrierSolution inner = solve_decoupled_node_drift(
            tree, chunk_terminal, frozen, gen.monotone_y, forcing, lower, upper, opt.max_iter,
            opt.tol, nullptr);
        out.y = inner.y;
        out.z = inner.z;
        out.lower_push = inner.rp;
        out.upper_push = inner.rm;
      }
      tr.outer_iterations += 1;

      double dz = 0.0, dy = 0.0;
      for (int k = lo; k < hi; ++k)
        for (int j = 0; j <= k; ++j) {
          const double d = out.z[k][j] - z_prev[k][j];
          dz += tree.node_probability(k, j) * d * d * tree.dt();
          dy = std::max(dy, std::abs(out.y.val[k][j] - y_prev_chunk.val[k][j]));
          dy = std::max(dy, std::abs(out.y.post[k][j] - y_prev_chunk.post[k][j]));
        }
      const double incr = dy + std::sqrt(dz);
      tr.increments.push_back(incr);
      for (int k = lo; k < hi; ++k) {
        z_prev[k] = out.z[k];
        y_prev_chunk.val[k] = out.y.val[k];
        y_prev_chunk.post[k] = out.y.post[k];
      }
      // A z-free driver never feeds back: the first pass is the fixed point.
      if (incr <= opt.tol || !gen.depends_on_z()) {
        chunk_converged = true;
        break;
      }
    }
    if (!chunk_converged) all_converged = false;

    for (int k = lo; k < hi; ++k) {
      y.val[k] = out.y.val[k];
      y.post[k] = out.y.post[k];
      z[k] = out.z[k];
      rp.flow[k] = out.lower_push.flow[k];
      rm.flow[k] = out.upper_push.flow[k];
      rp.jump[k] = out.lower_push.jump[k];
      rm.jump[k] = out.upper_push.jump[k];
    }
    chunk_terminal = out.y.val[lo];
    chunk_terminal.resize(static_cast<size_t>(lo) + 1);
  }
  // Terminal level: the jump slot at the horizon carries no mass.
  y.val[n] = terminal;
  y.post[n] = terminal;

  tr.converged = all_converged;
  if (!all_converged)
    throw SolverError("picard_solve: iteration limit reached, last increment " +
                      std::to_string(tr.increments.empty() ? 0.0 : tr.increments.back()));

  TwoBarrierSolution sol;
  sol.y = std::move(y);
  sol.z = std::move(z);
  sol.rp = std::move(rp);
  sol.rm = std::move(rm);
  return sol;
}

namespace {

// All adapted stopping rules of the subtree rooted at depth k, each as the
// vector of stop levels over its 2^(N-k) local paths (LSB = next step).
std::vector<std::vector<int>> enumerate_stop_rules(int k, int n) {
  if (k == n) return {{n}};
  const auto sub = enumerate_stop_rules(k + 1, n);
  const size_t npaths = static_cast<size_t>(1) << (n - k);
  std::vector<std::vector<int>> rules;
  rules.emplace_back(npaths, k);  // stop everywhere now
  for (const auto& dn : sub)
    for (const auto& up : sub) {
      std::vector<int> r(npaths);
      for (size_t l = 0; l < npaths; ++l) {
        const size_t rest = l >> 1;
        r[l] = (l & 1u) ? up[rest] : dn[rest];
      }
      rules.push_back(std::move(r));
    }
  return rules;
}

}  // namespace

double dynkin_oracle(const BinomialTree& tree, const std::vector<double>& terminal,
                     const TreeProcess& lower, const TreeProcess& upper,
                     const TreeProcess& forcing) {
  const int n = tree.steps();
  if (n > 12) throw ScenarioError("dynkin_oracle: enumeration cost caps steps at 12");
  for (int k = 0; k <= n; ++k)
    for (int j = 0; j <= k; ++j)
      if (forcing.val[k][j] != 0.0 || forcing.post[k][j] != 0.0)
        throw ScenarioError("dynkin_oracle: requires zero forcing");

  // Backward minimax clamp on the value slots.
  std::vector<double> v = terminal;
  for (int k = n - 1; k >= 0; --k) {
    const std::vector<double> cont = cond_expect(v);
    v.resize(static_cast<size_t>(k) + 1);
    for (int j = 0; j <= k; ++j)
      v[j] = std::min(std::max(cont[j], lower.val[k][j]), upper.val[k][j]);
  }
  const double value = v[0];

  if (n <= 4) {
    const auto rules = enumerate_stop_rules(0, n);
    const size_t npaths = static_cast<size_t>(1) << n;
    const double w = 1.0 / static_cast<double>(npaths);
    // Node index along each path at each level.
    std::vector<std::vector<int>> idx(npaths, std::vector<int>(static_cast<size_t>(n) + 1, 0));
    for (size_t p = 0; p < npaths; ++p)
      for (int k = 0; k < n; ++k) idx[p][k + 1] = idx[p][k] + static_cast<int>((p >> k) & 1u);

    const size_t nr = rules.size();
    std::vector<std::vector<double>> payoff(nr, std::vector<double>(nr, 0.0));
    for (size_t a = 0; a < nr; ++a)
      for (size_t b = 0; b < nr; ++b) {
        double acc = 0.0;
        for (size_t p = 0; p < npaths; ++p) {
          const int tp = rules[a][p], sp = rules[b][p];
          double pay;
          if (tp < n && tp <= sp)
            pay = lower.val[tp][idx[p][tp]];
          else if (sp < tp)
            pay = upper.val[sp][idx[p][sp]];
          else
            pay = terminal[idx[p][n]];
          acc += pay;
        }
        payoff[a][b] = acc * w;
      }
    double lower_value = -1e308;
    for (size_t a = 0; a < nr; ++a) {
      double worst = 1e308;
      for (size_t b = 0; b < nr; ++b) worst = std::min(worst, payoff[a][b]);
      lower_value = std::max(lower_value, worst);
    }
    double upper_value = 1e308;
    for (size_t b = 0; b < nr; ++b) {
      double best = -1e308;
      for (size_t a = 0; a < nr; ++a) best = std::max(best, payoff[a][b]);
      upper_value = std::min(upper_value, best);
    }
    if (std::abs(lower_value - upper_value) > 1e-10 || std::abs(lower_value - value) > 1e-10)
      throw SolverError("dynkin_oracle: saddle check failed");
  }
  return value;
}

SolutionReport verify_solution(const BinomialTree& tree, const TwoBarrierSolution& sol,
                               const std::vector<double>& terminal, const Generator& gen,
                               const TreeProcess& forcing, const TreeProcess& lower,
                               const TreeProcess& upper, double p) {
  const int n = tree.steps();
  const double dt = tree.dt();
  const double sdt = tree.sqrt_dt();
  SolutionReport rep;

  for (int j = 0; j <= n; ++j)
    rep.dynamics = std::max(rep.dynamics, std::abs(sol.y.val[n][j] - terminal[j]));

  for (int k = n - 1; k >= 0; --k) {
    const double t = tree.time(k);
    for (int j = 0; j <= k; ++j) {
      const double vpost = forcing.post[k][j];
      const double a_up = sol.y.val[k + 1][j + 1] + forcing.val[k + 1][j + 1] - vpost;
      const double a_dn = sol.y.val[k + 1][j] + forcing.val[k + 1][j] - vpost;
      const double m = 0.5 * (a_up + a_dn);
      const double z = sol.z[k][j];
      rep.dynamics = std::max(rep.dynamics, std::abs((a_up - a_dn) / (2.0 * sdt) - z));

      const auto drift = [&](double yv) { return gen(t, yv, z); };
      const double ytilde = implicit_flow_root(m, dt, drift);
      const double lo_post = lower.post[k][j], up_post = upper.post[k][j];
      double req_flow_lo = 0.0, req_flow_up = 0.0;
      if (ytilde < lo_post)
        req_flow_lo = lo_post - m - dt * drift(lo_post);
      else if (ytilde > up_post)
        req_flow_up = m + dt * drift(up_post) - up_post;
      rep.flow_lower_identity =
          std::max(rep.flow_lower_identity, std::abs(sol.rp.flow[k][j] - req_flow_lo));
      rep.flow_upper_identity =
          std::max(rep.flow_upper_identity, std::abs(sol.rm.flow[k][j] - req_flow_up));

      // Branch-wise dynamics with the stored masses. The two branch
      // relations are equivalent to the representation residual above plus
      // the flow relation against the branch mean.
      const double ypost = sol.y.post[k][j];
      const double flow_net = sol.rp.flow[k][j] - sol.rm.flow[k][j];
      const double fdt = dt * gen(t, ypost, z);
      rep.dynamics = std::max(rep.dynamics, std::abs(ypost - m - fdt - flow_net));

      // Right-jump identities at t_k (paper form, post-value as candidate).
      const double dvp = forcing.post[k][j] - forcing.val[k][j];
      const double y0 = ypost + dvp;
      const double req_jump_lo = std::max(lower.val[k][j] - y0, 0.0);
      const double req_jump_up = std::max(y0 - upper.val[k][j], 0.0);
      rep.jump_lower_identity =
          std::max(rep.jump_lower_identity, std::abs(sol.rp.jump[k][j] - req_jump_lo));
      rep.jump_upper_identity =
          std::max(rep.jump_upper_identity, std::abs(sol.rm.jump[k][j] - req_jump_up));
      rep.dynamics = std::max(
          rep.dynamics,
          std::abs(sol.y.val[k][j] - (y0 + sol.rp.jump[k][j] - sol.rm.jump[k][j])));
    }
  }

  const auto [min_lo, min_up] = minimality_terms(tree, sol.y, sol.rp, sol.rm, lower, upper);
  rep.minimality_lower = min_lo;
  rep.minimality_upper = min_up;

  for (int k = 0; k <= n; ++k)
    for (int j = 0; j <= k; ++j) {
      rep.barrier_violation = std::max(rep.barrier_violation, lower.val[k][j] - sol.y.val[k][j]);
      rep.barrier_violation = std::max(rep.barrier_violation, sol.y.val[k][j] - upper.val[k][j]);
      rep.barrier_violation = std::max(rep.barrier_violation, lower.post[k][j] - sol.y.post[k][j]);
      rep.barrier_violation = std::max(rep.barrier_violation, sol.y.post[k][j] - upper.post[k][j]);
      rep.common_mass = std::max(rep.common_mass, std::min(sol.rp.jump[k][j], sol.rm.jump[k][j]));
      if (k < n)
        rep.common_mass = std::max(rep.common_mass, std::min(sol.rp.flow[k][j], sol.rm.flow[k][j]));
    }
  rep.barrier_violation = std::max(rep.barrier_violation, 0.0);

  if (n <= 24) rep.driver_moment = driver_l1_moment(tree, sol.y, sol.z, gen, p);
  return rep;
}

std::pair<double, double> minimality_terms(const BinomialTree& tree, const TreeProcess& y,
                                           const detail::PushMasses& rp,
                                           const detail::PushMasses& rm, const TreeProcess& lower,
                                           const TreeProcess& upper) {
  const int n = tree.steps();
  double lo = 0.0, up = 0.0;
  for (int k = 0; k <= n; ++k)
    for (int j = 0; j <= k; ++j) {
      if (k < n) {
        lo = std::max(lo, std::abs((y.post[k][j] - lower.post[k][j]) * rp.flow[k][j]));
        up = std::max(up, std::abs((upper.post[k][j] - y.post[k][j]) * rm.flow[k][j]));
      }
      lo = std::max(lo, std::abs((y.val[k][j] - lower.val[k][j]) * rp.jump[k][j]));
      up = std::max(up, std::abs((upper.val[k][j] - y.val[k][j]) * rm.jump[k][j]));
    }
  return {lo, up};
}

double net_push_distance(const TwoBarrierSolution& a, const TwoBarrierSolution& b) {
  double m = 0.0;
  for (size_t k = 0; k < a.rp.flow.size(); ++k)
    for (size_t j = 0; j < a.rp.flow[k].size(); ++j) {
      const double na = a.rp.flow[k][j] - a.rm.flow[k][j];
      const double nb = b.rp.flow[k][j] - b.rm.flow[k][j];
      m = std::max(m, std::abs(na - nb));
    }
  for (size_t k = 0; k < a.rp.jump.size(); ++k)
    for (size_t j = 0; j < a.rp.jump[k].size(); ++j) {
      const double na = a.rp.jump[k][j] - a.rm.jump[k][j];
      const double nb = b.rp.jump[k][j] - b.rm.jump[k][j];
      m = std::max(m, std::abs(na - nb));
    }
  return m;
}

}  // namespace rbsde
