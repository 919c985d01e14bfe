#pragma once

#include <string>
#include <vector>

#include "rbsde/backward_core.hpp"
#include "rbsde/generator.hpp"
#include "rbsde/lattice.hpp"
#include "rbsde/reflected_two.hpp"

namespace rbsde {

/// Array of stopping times exhausting qualifying right jumps of the data at
/// refinement level n (threshold 1/n). Represented through the union of its
/// graphs: a node belongs to `member` iff some array time passes through it;
/// the horizon always belongs. When the qualifying set is the same for every
/// node of a level (the scenario format guarantees this), `times` lists the
/// qualifying levels and the truncated construction is available.
struct StoppingArray {
  int level = 1;            // n
  double threshold = 1.0;   // 1/n
  NodeMask member;          // union of graphs, horizon included
  bool level_uniform = true;
  std::vector<int> times;   // qualifying levels below the horizon (uniform case)
  int count = 0;            // number of stopping times including the horizon
  double tail_probability = 0.0;  // P(last kept time < T) under a budget
};

/// Times where the lower barrier or the forcing jumps down across -1/n:
/// right_jump < -1/n (strict). `budget`, if non-negative, caps the number of
/// newly found times per refinement level and merges the previous level in,
/// mirroring the inductive construction; requires a level-uniform
/// qualifying set.
StoppingArray exhaust_down_jumps(const BinomialTree& tree, const TreeProcess& lower,
                                 const TreeProcess& forcing, int n, int budget = -1);

/// Mirror: right jumps of the upper barrier or forcing above +1/n.
StoppingArray exhaust_up_jumps(const BinomialTree& tree, const TreeProcess& upper,
                               const TreeProcess& forcing, int n, int budget = -1);

/// Interleaved union of a down- and an up-array of the same level; the union
/// of graphs of the two inputs equals the union of graphs of the output.
struct MergedGrid {
  NodeMask member;
  std::vector<int> times;
  int count = 0;
};

MergedGrid merge_jump_grids(const StoppingArray& down, const StoppingArray& up);

enum class PenalScheme { kUpperReflected, kLowerReflected, kPlain };

std::string scheme_name(PenalScheme s);

/// Solution of one penalized equation at level n. `k` collects the upward
/// pushes (penalty flow mass n(Y-L)^- dt plus the right-jump corrections at
/// the array times, or the full lower reflection depending on the scheme),
/// `a` the downward ones.
struct PenalizedSolution {
  PenalScheme scheme = PenalScheme::kPlain;
  int level = 0;  // n; 0 means no penalty and no corrections
  TreeProcess y;
  LevelField z;
  detail::PushMasses k;
  detail::PushMasses a;
};

/// Upper-reflected equation with lower penalty: hard reflection at U at
/// every slot, penalty n(y - L)^- in the flow, corrections
/// (Y^+ + jumpV - L)^- at the down-array nodes. Y increases to the
/// two-barrier solution as n grows.
PenalizedSolution solve_upper_penalized(const BinomialTree& tree,
                                        const std::vector<double>& terminal, const Generator& gen,
                                        const TreeProcess& forcing, const TreeProcess& lower,
                                        const TreeProcess& upper, int n);

/// Mirror scheme: hard reflection at L, penalty at U; decreases to the
/// solution. Implemented through the sign-mirror of the upper scheme.
PenalizedSolution solve_lower_penalized(const BinomialTree& tree,
                                        const std::vector<double>& terminal, const Generator& gen,
                                        const TreeProcess& forcing, const TreeProcess& lower,
                                        const TreeProcess& upper, int n);

/// Plain equation with both penalties and both correction families; sits
/// between the two reflected schemes node-wise.
PenalizedSolution solve_bsde_penalized(const BinomialTree& tree,
                                       const std::vector<double>& terminal, const Generator& gen,
                                       const TreeProcess& forcing, const TreeProcess& lower,
                                       const TreeProcess& upper, int n);

struct OrderingReport {
  double max_violation = 0.0;
  bool ok = false;
};

/// Slot-wise ordering of the downward-push measures of two solutions
/// (cadlag-part increments and right jumps separately).
OrderingReport check_push_monotone(const detail::PushMasses& smaller,
                                   const detail::PushMasses& larger, double tol = 1e-12);

/// Largest term of the minimality sums of the penalized triple against the
/// shifted barriers (lower barrier L /\ Y for the upper scheme, upper
/// barrier U \/ Y for the lower scheme, both for the plain scheme).
double penalized_shifted_minimality(const BinomialTree& tree, const PenalizedSolution& sol,
                                    const TreeProcess& lower, const TreeProcess& upper);

struct ConvergenceRow {
  std::string scheme;
  int n = 0;
  double sup_err = 0.0;
  double h_err_g1 = 0.0;
  double h_err_g15 = 0.0;
  double h_err_g2 = 0.0;
  double minimality_residual = 0.0;
  bool sandwich_ok = false;
  bool monotone_ok = false;
};

struct ConvergenceTable {
  std::vector<ConvergenceRow> rows;
  // Whether the reference solution never needs an atomic push at a grid
  // time (the discrete stand-in for "no left jumps of R+/R-"); gates the
  // gamma = 2 column of the theory.
  bool left_jumps_absent_plus = true;
  bool left_jumps_absent_minus = true;
  bool left_jumps_absent_net = true;

  std::string to_csv() const;
};

/// Runs all three schemes over n_list against the clamped reference and
/// tabulates S^p errors, H^p errors for gamma in {1, 1.5, 2}, shifted
/// minimality residuals and the ordering flags.
ConvergenceTable convergence_report(const BinomialTree& tree, const std::vector<double>& terminal,
                                    const Generator& gen, const TreeProcess& forcing,
                                    const TreeProcess& lower, const TreeProcess& upper,
                                    const std::vector<int>& n_list, double p);

/// Max over nodes of the undershoot (L^+_k - E_k[Y_{k+1} + dV])^+ of the
/// reference solution: positive where the upward push must act atomically.
double atomic_push_undershoot_lower(const BinomialTree& tree, const TreeProcess& y,
                                    const TreeProcess& forcing, const TreeProcess& lower);
double atomic_push_undershoot_upper(const BinomialTree& tree, const TreeProcess& y,
                                    const TreeProcess& forcing, const TreeProcess& upper);

}  // namespace rbsde
