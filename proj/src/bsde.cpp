#include "rbsde/bsde.hpp"

#include <cmath>

namespace rbsde {

BsdeSolution solve_bsde(const BinomialTree& tree, const std::vector<double>& terminal,
                        const Generator& gen, const TreeProcess& forcing) {
  detail::BackwardInput in;
  in.tree = &tree;
  in.terminal = terminal;
  in.drift = detail::wrap_generator(gen);
  in.drift_monotone_y = gen.monotone_y;
  in.drv = &forcing;
  auto out = detail::run_backward(in);
  return BsdeSolution{std::move(out.y), std::move(out.z)};
}

double bsde_dynamics_residual(const BinomialTree& tree, const BsdeSolution& sol,
                              const Generator& gen, const TreeProcess& forcing) {
  const int n = tree.steps();
  const double dt = tree.dt();
  const double sdt = tree.sqrt_dt();
  double worst = 0.0;
  for (int k = 0; k < n; ++k) {
    const double t = tree.time(k);
    for (int j = 0; j <= k; ++j) {
      const double ypost = sol.y.post[k][j];
      const double drift = gen(t, ypost, sol.z[k][j]) * dt;
      for (int up = 0; up <= 1; ++up) {
        const int s = j + up;
        const double dv = forcing.val[k + 1][s] - forcing.post[k][j];
        const double db = up ? sdt : -sdt;
        const double r = ypost - (sol.y.val[k + 1][s] + drift + dv - sol.z[k][j] * db);
        worst = std::max(worst, std::abs(r));
      }
      const double rj = sol.y.val[k][j] - (ypost + forcing.post[k][j] - forcing.val[k][j]);
      worst = std::max(worst, std::abs(rj));
    }
  }
  return worst;
}

}  // namespace rbsde
