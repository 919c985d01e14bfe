#pragma once

#include <vector>

#include "rbsde/backward_core.hpp"
#include "rbsde/generator.hpp"
#include "rbsde/lattice.hpp"

namespace rbsde {

/// Solution of the one-barrier reflected equation. The increasing process K
/// splits into its cadlag part (flow masses over the open intervals) and its
/// right jumps (masses at the nodes); both act only when Y sits on the
/// barrier, so the two minimality sums vanish by construction.
struct OneBarrierSolution {
  TreeProcess y;
  LevelField z;
  detail::PushMasses k;  // k.flow = K* increments, k.jump = right jumps of K
};

/// Lower reflection: Y >= L at every value and post-value slot.
/// Requires L_N <= terminal path-wise.
OneBarrierSolution solve_lower(const BinomialTree& tree, const std::vector<double>& terminal,
                               const Generator& gen, const TreeProcess& forcing,
                               const TreeProcess& lower);

/// Upper reflection: Y <= U. Equals minus the lower solution of the
/// mirrored data (terminal -xi, drift -f(t,-y,-z), forcing -V, barrier -U);
/// implemented directly, the mirror identity is a test.
OneBarrierSolution solve_upper(const BinomialTree& tree, const std::vector<double>& terminal,
                               const Generator& gen, const TreeProcess& forcing,
                               const TreeProcess& upper);

/// Largest single term of the two minimality sums
///   sum (Y_{r-} - L_{r-}) dK*  +  sum_{r<T} (Y_r - L_r) dK^d,
/// with left limits read from the post-value slots. Zero (to rounding) for
/// solver output; strictly positive if K mass is injected off the barrier.
double minimality_residual_lower(const BinomialTree& tree, const OneBarrierSolution& sol,
                                 const TreeProcess& lower);

double minimality_residual_upper(const BinomialTree& tree, const OneBarrierSolution& sol,
                                 const TreeProcess& upper);

/// E[(sum_k |f(t_k, Y^+_k, Z_k)| dt)^p]^(1 and 1/p): the integrability
/// diagnostic attached to every reflected solve.
double driver_l1_moment(const BinomialTree& tree, const TreeProcess& y, const LevelField& z,
                        const Generator& gen, double p);

/// Required right-jump mass of the lower push at a node: (y_plus - barrier)^-
/// where y_plus is the post-value-plus-forcing-jump candidate. The flow-slot
/// analogue takes the unreflected flow root as candidate.
double required_lower_jump_mass(double candidate, double barrier);
double required_upper_jump_mass(double candidate, double barrier);

namespace detail {
/// Lower solve with an arbitrary node-contextual drift (used by the
/// decoupled system and the penalized schemes).
OneBarrierSolution solve_lower_node_drift(const BinomialTree& tree,
                                          const std::vector<double>& terminal,
                                          const NodeDrift& drift, double drift_monotone_y,
                                          const TreeProcess& forcing, const TreeProcess& lower);
}  // namespace detail

}  // namespace rbsde
