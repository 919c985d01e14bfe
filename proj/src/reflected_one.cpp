#include "rbsde/reflected_one.hpp"

#include <cmath>

namespace rbsde {

namespace detail {

OneBarrierSolution solve_lower_node_drift(const BinomialTree& tree,
                                          const std::vector<double>& terminal,
                                          const NodeDrift& drift, double drift_monotone_y,
                                          const TreeProcess& forcing, const TreeProcess& lower) {
  BackwardInput in;
  in.tree = &tree;
  in.terminal = terminal;
  in.drift = drift;
  in.drift_monotone_y = drift_monotone_y;
  in.drv = &forcing;
  in.lower.mode = BarrierMode::kClampAll;
  in.lower.barrier = &lower;
  auto out = run_backward(in);
  return OneBarrierSolution{std::move(out.y), std::move(out.z), std::move(out.lower_push)};
}

}  // namespace detail

OneBarrierSolution solve_lower(const BinomialTree& tree, const std::vector<double>& terminal,
                               const Generator& gen, const TreeProcess& forcing,
                               const TreeProcess& lower) {
  return detail::solve_lower_node_drift(tree, terminal, detail::wrap_generator(gen),
                                        gen.monotone_y, forcing, lower);
}

OneBarrierSolution solve_upper(const BinomialTree& tree, const std::vector<double>& terminal,
                               const Generator& gen, const TreeProcess& forcing,
                               const TreeProcess& upper) {
  detail::BackwardInput in;
  in.tree = &tree;
  in.terminal = terminal;
  in.drift = detail::wrap_generator(gen);
  in.drift_monotone_y = gen.monotone_y;
  in.drv = &forcing;
  in.upper.mode = detail::BarrierMode::kClampAll;
  in.upper.barrier = &upper;
  auto out = detail::run_backward(in);
  return OneBarrierSolution{std::move(out.y), std::move(out.z), std::move(out.upper_push)};
}

namespace {

double push_residual(const BinomialTree& tree, const TreeProcess& y,
                     const detail::PushMasses& push, const TreeProcess& barrier, bool lower_side) {
  const int n = tree.steps();
  double worst = 0.0;
  for (int k = 0; k <= n; ++k) {
    for (int j = 0; j <= k; ++j) {
      if (k < n) {
        const double gap = lower_side ? y.post[k][j] - barrier.post[k][j]
                                      : barrier.post[k][j] - y.post[k][j];
        worst = std::max(worst, std::abs(gap * push.flow[k][j]));
      }
      const double gap_v =
          lower_side ? y.val[k][j] - barrier.val[k][j] : barrier.val[k][j] - y.val[k][j];
      worst = std::max(worst, std::abs(gap_v * push.jump[k][j]));
    }
  }
  return worst;
}

}  // namespace

double minimality_residual_lower(const BinomialTree& tree, const OneBarrierSolution& sol,
                                 const TreeProcess& lower) {
  return push_residual(tree, sol.y, sol.k, lower, /*lower_side=*/true);
}

double minimality_residual_upper(const BinomialTree& tree, const OneBarrierSolution& sol,
                                 const TreeProcess& upper) {
  return push_residual(tree, sol.y, sol.k, upper, /*lower_side=*/false);
}

double driver_l1_moment(const BinomialTree& tree, const TreeProcess& y, const LevelField& z,
                        const Generator& gen, double p) {
  const int n = tree.steps();
  const double dt = tree.dt();
  double acc = 0.0;
  for_each_path(tree, [&](const std::vector<int>& idx, double w) {
    double integral = 0.0;
    for (int k = 0; k < n; ++k)
      integral += std::abs(gen(tree.time(k), y.post[k][idx[k]], z[k][idx[k]])) * dt;
    acc += w * std::pow(integral, p);
  });
  return p >= 1.0 ? std::pow(acc, 1.0 / p) : acc;
}

double required_lower_jump_mass(double candidate, double barrier) {
  return std::max(barrier - candidate, 0.0);
}

double required_upper_jump_mass(double candidate, double barrier) {
  return std::max(candidate - barrier, 0.0);
}

}  // namespace rbsde
