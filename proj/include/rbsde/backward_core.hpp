#pragma once

#include <functional>
#include <vector>

#include "rbsde/generator.hpp"
#include "rbsde/lattice.hpp"

namespace rbsde::detail {

/// How one side of the constraint acts in a backward solve.
enum class BarrierMode {
  kNone,       // unconstrained on this side
  kClampAll,   // hard reflection at every slot (flow and right-jump)
  kJumpMasked  // soft penalty in the flow, hard corrections only at masked
               // right-jump nodes
};

struct SideSpec {
  BarrierMode mode = BarrierMode::kNone;
  const TreeProcess* barrier = nullptr;       // reflection / correction barrier
  double penalty_rate = 0.0;                  // n of the n(y-L)^- flow penalty
  const TreeProcess* penalty_barrier = nullptr;  // defaults to `barrier`
  const NodeMask* jump_nodes = nullptr;       // right-jump correction set

  const TreeProcess* pen_barrier() const { return penalty_barrier ? penalty_barrier : barrier; }
};

/// Driver with node context; used to freeze integrands or to offset the
/// state by another adapted process.
using NodeDrift = std::function<double(int k, int j, double t, double y, double z)>;

struct BackwardInput {
  const BinomialTree* tree = nullptr;
  std::vector<double> terminal;  // values at terminal_level
  NodeDrift drift;
  double drift_monotone_y = 0.0;  // for the dt * mu < 1 guard
  const TreeProcess* drv = nullptr;  // bounded-variation forcing V (may be null)
  SideSpec lower;
  SideSpec upper;
  int terminal_level = -1;  // default: tree steps
  int stop_level = 0;       // lowest level swept (inclusive)
};

/// Increasing-push bookkeeping for one side. `flow[k][j]` is the mass the
/// solver injects over the window (t_k, t_{k+1}) (the cadlag part of the
/// push), `jump[k][j]` the right jump injected at t_k. Level N carries no
/// jump mass.
struct PushMasses {
  LevelField flow;  // levels 0..N-1
  LevelField jump;  // levels 0..N

  static PushMasses zeros(int n_steps);
  double total_max() const;
};

struct BackwardOutput {
  TreeProcess y;
  LevelField z;  // levels 0..N-1
  PushMasses lower_push;
  PushMasses upper_push;
};

/// One backward sweep of the discrete dynamics. Per node (k, j):
///   1. edge candidates a_e = Y_{k+1,e} + (V_{k+1,e} - V^+_{k,j}),
///      m = mean(a), z = (a_up - a_dn) / (2 sqrt(dt));
///   2. flow: root of y = m + drift(y) dt (plus penalty terms), then hard
///      clamps per SideSpec, masses into flow slots;
///   3. right jump at t_k: candidate Y^+ + (V^+_k - V_k) with hard clamps
///      or masked corrections, masses into jump slots.
/// Branch-wise dynamics hold exactly with the stored masses.
BackwardOutput run_backward(const BackwardInput& in);

NodeDrift wrap_generator(const Generator& gen);

}  // namespace rbsde::detail
