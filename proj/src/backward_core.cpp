#include "rbsde/backward_core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rbsde/errors.hpp"

namespace rbsde::detail {

PushMasses PushMasses::zeros(int n_steps) {
  PushMasses p;
  p.flow.resize(static_cast<size_t>(n_steps));
  for (int k = 0; k < n_steps; ++k) p.flow[k].assign(static_cast<size_t>(k) + 1, 0.0);
  p.jump = make_level_field(n_steps, 0.0);
  return p;
}

double PushMasses::total_max() const {
  double m = 0.0;
  for (const auto& lv : flow)
    for (double v : lv) m = std::max(m, std::abs(v));
  for (const auto& lv : jump)
    for (double v : lv) m = std::max(m, std::abs(v));
  return m;
}

NodeDrift wrap_generator(const Generator& gen) {
  return [gen](int, int, double t, double y, double z) { return gen(t, y, z); };
}

namespace {

void validate(const BackwardInput& in, int term_level) {
  const int n = in.tree->steps();
  if (term_level < 1 || term_level > n || in.stop_level < 0 || in.stop_level >= term_level)
    throw ScenarioError("run_backward: bad level range");
  if (static_cast<int>(in.terminal.size()) != term_level + 1)
    throw ScenarioError("run_backward: terminal size mismatch");
  for (int j = 0; j <= term_level; ++j) {
    if (in.lower.mode == BarrierMode::kClampAll &&
        in.terminal[j] < in.lower.barrier->val[term_level][j])
      throw ScenarioError("terminal value below lower barrier at node (" +
                          std::to_string(term_level) + "," + std::to_string(j) + ")");
    if (in.upper.mode == BarrierMode::kClampAll &&
        in.terminal[j] > in.upper.barrier->val[term_level][j])
      throw ScenarioError("terminal value above upper barrier at node (" +
                          std::to_string(term_level) + "," + std::to_string(j) + ")");
  }
  if (in.lower.mode == BarrierMode::kClampAll && in.upper.mode == BarrierMode::kClampAll) {
    for (int k = in.stop_level; k <= term_level; ++k)
      for (int j = 0; j <= k; ++j) {
        if (in.lower.barrier->val[k][j] > in.upper.barrier->val[k][j] ||
            in.lower.barrier->post[k][j] > in.upper.barrier->post[k][j])
          throw ScenarioError("barriers cross at node (" + std::to_string(k) + "," +
                              std::to_string(j) + ")");
      }
  }
}

}  // namespace

BackwardOutput run_backward(const BackwardInput& in) {
  const BinomialTree& tree = *in.tree;
  const int n = tree.steps();
  const int term = in.terminal_level < 0 ? n : in.terminal_level;
  const double dt = tree.dt();
  const double sdt = tree.sqrt_dt();
  if (dt * std::max(0.0, in.drift_monotone_y) >= 1.0)
    throw ScenarioError("run_backward: requires dt * max(0, monotone_y) < 1");
  validate(in, term);

  BackwardOutput out;
  out.y.val = make_level_field(n);
  out.y.post = make_level_field(n);
  out.z.resize(static_cast<size_t>(n));
  for (int k = 0; k < n; ++k) out.z[k].assign(static_cast<size_t>(k) + 1, 0.0);
  out.lower_push = PushMasses::zeros(n);
  out.upper_push = PushMasses::zeros(n);

  out.y.val[term] = in.terminal;
  out.y.post[term] = in.terminal;

  const bool clamp_lo = in.lower.mode == BarrierMode::kClampAll;
  const bool clamp_up = in.upper.mode == BarrierMode::kClampAll;
  const bool pen_lo = in.lower.penalty_rate > 0.0;
  const bool pen_up = in.upper.penalty_rate > 0.0;

  for (int k = term - 1; k >= in.stop_level; --k) {
    const double t = tree.time(k);
    for (int j = 0; j <= k; ++j) {
      const double vpost = in.drv ? in.drv->post[k][j] : 0.0;
      const double a_up =
          out.y.val[k + 1][j + 1] + (in.drv ? in.drv->val[k + 1][j + 1] : 0.0) - vpost;
      const double a_dn = out.y.val[k + 1][j] + (in.drv ? in.drv->val[k + 1][j] : 0.0) - vpost;
      const double m = 0.5 * (a_up + a_dn);
      const double z = (a_up - a_dn) / (2.0 * sdt);
      out.z[k][j] = z;

      const double lo_pen_b = pen_lo ? in.lower.pen_barrier()->post[k][j] : 0.0;
      const double up_pen_b = pen_up ? in.upper.pen_barrier()->post[k][j] : 0.0;
      const auto drift = [&](double y) {
        double g = in.drift(k, j, t, y, z);
        if (pen_lo) g += in.lower.penalty_rate * std::max(lo_pen_b - y, 0.0);
        if (pen_up) g -= in.upper.penalty_rate * std::max(y - up_pen_b, 0.0);
        return g;
      };
      const double ytilde = implicit_flow_root(m, dt, drift);

      double ypost = ytilde;
      if (clamp_lo && ytilde < in.lower.barrier->post[k][j]) {
        ypost = in.lower.barrier->post[k][j];
        out.lower_push.flow[k][j] = ypost - m - dt * drift(ypost);
      } else if (clamp_up && ytilde > in.upper.barrier->post[k][j]) {
        ypost = in.upper.barrier->post[k][j];
        out.upper_push.flow[k][j] = m + dt * drift(ypost) - ypost;
      }
      out.y.post[k][j] = ypost;

      // Soft-penalty mass belongs to the cadlag part of the push process.
      if (pen_lo)
        out.lower_push.flow[k][j] += in.lower.penalty_rate * dt * std::max(lo_pen_b - ypost, 0.0);
      if (pen_up)
        out.upper_push.flow[k][j] += in.upper.penalty_rate * dt * std::max(ypost - up_pen_b, 0.0);

      // Right-jump slot at t_k. Clamps select the barrier value itself so
      // the constraint holds bit-exactly; the stored mass is the rounded
      // defect.
      const double dvp = in.drv ? (in.drv->post[k][j] - in.drv->val[k][j]) : 0.0;
      double y0 = ypost + dvp;
      const bool lo_jump_applies =
          clamp_lo || (in.lower.mode == BarrierMode::kJumpMasked && in.lower.jump_nodes &&
                       (*in.lower.jump_nodes)[k][j]);
      if (lo_jump_applies && y0 < in.lower.barrier->val[k][j]) {
        out.lower_push.jump[k][j] = in.lower.barrier->val[k][j] - y0;
        y0 = in.lower.barrier->val[k][j];
      }
      const bool up_jump_applies =
          clamp_up || (in.upper.mode == BarrierMode::kJumpMasked && in.upper.jump_nodes &&
                       (*in.upper.jump_nodes)[k][j]);
      if (up_jump_applies && y0 > in.upper.barrier->val[k][j]) {
        out.upper_push.jump[k][j] = y0 - in.upper.barrier->val[k][j];
        y0 = in.upper.barrier->val[k][j];
      }
      out.y.val[k][j] = y0;
    }
  }
  return out;
}

}  // namespace rbsde::detail
