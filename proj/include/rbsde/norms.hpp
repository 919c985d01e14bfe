#pragma once

#include <string>

#include "rbsde/generator.hpp"
#include "rbsde/lattice.hpp"

namespace rbsde {

/// E[ sup_t |X_t|^p ]^(1/p) with the running sup taken over value and
/// post-value slots, computed as an exact sum over all paths. p >= 1.
double sp_norm(const BinomialTree& tree, const TreeProcess& x, double p);

/// E[ (sum_k Z_k^2 dt)^(p/2) ]^(1 and 1/p), exact over paths; p in (0, 1)
/// is allowed here (moment functional rather than a norm).
double hp_norm(const BinomialTree& tree, const LevelField& z, double p);

/// sup over stopping rules of E|X_tau|, the class-(D) norm. The stopper may
/// stop on a value slot or immediately after it (post slot); both decisions
/// use the same information. Computed as the optimal-stopping value of the
/// absolute path over the slot sequence.
double classd_norm(const BinomialTree& tree, const TreeProcess& x);

struct MomentBoundCheck {
  double lhs = 0.0;  // E sup |X|^q
  double rhs = 0.0;  // classd^q / (1 - q)
  bool ok = false;
};

/// The class-(D) moment bound E sup|X|^q <= |X|_1^q / (1-q) for q in (0,1);
/// exact both sides.
MomentBoundCheck classd_sup_moment_bound(const BinomialTree& tree, const TreeProcess& x, double q);

struct NormReport {
  double sp = 0.0;
  double hp = 0.0;
  double vp = 0.0;  // E[|V|_T^p]^(1 and 1/p), total-variation moment
  double classd = 0.0;
};

/// Total-variation moment of an adapted path process.
double vp_norm(const BinomialTree& tree, const TreeProcess& v, double p);

struct SandwichWitnessReport {
  bool sandwich_ok = false;
  int violation_level = -1;
  int violation_node = -1;
  std::string violation_slot;  // "value" or "post"
  double x_norm = 0.0;          // |X|_p (classd for p = 1)
  double driver_moment = 0.0;   // E[(sum |f(t_k, X_k, 0)| dt)^p]^(1 and 1/p)
  double fv_part_moment = 0.0;  // variation moment of the predictable part
};

/// Checks a candidate semimartingale witness X for L <= X <= U (all slots),
/// splits X into martingale + predictable finite-variation parts, and
/// reports the integrability quantities. On a finite grid a witness always
/// exists; see make_sandwich_witness.
SandwichWitnessReport sandwich_witness_check(const BinomialTree& tree, const TreeProcess& x,
                                             const TreeProcess& lower, const TreeProcess& upper,
                                             const Generator& gen, double p);

/// median(L, 0, U) slot-wise: a valid witness for any ordered barriers.
TreeProcess make_sandwich_witness(const TreeProcess& lower, const TreeProcess& upper);

}  // namespace rbsde
