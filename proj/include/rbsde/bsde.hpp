#pragma once

#include <vector>

#include "rbsde/backward_core.hpp"
#include "rbsde/generator.hpp"
#include "rbsde/lattice.hpp"

namespace rbsde {

/// Solution of the plain backward equation with forcing f dr + dV:
/// branch-wise,
///   Y^+_k = Y_{k+1} + f(t_k, Y^+_k, Z_k) dt + (V_{k+1} - V^+_k) - Z_k dB_{k+1},
///   Y_k   = Y^+_k + (V^+_k - V_k),
/// so right jumps of V shift Y instantaneously at the node while the flow
/// runs over the open interval.
struct BsdeSolution {
  TreeProcess y;
  LevelField z;  // levels 0..N-1
};

BsdeSolution solve_bsde(const BinomialTree& tree, const std::vector<double>& terminal,
                        const Generator& gen, const TreeProcess& forcing);

/// Largest branch-wise defect of the two relations above; ~1e-15 * scale
/// for solver output.
double bsde_dynamics_residual(const BinomialTree& tree, const BsdeSolution& sol,
                              const Generator& gen, const TreeProcess& forcing);

}  // namespace rbsde
