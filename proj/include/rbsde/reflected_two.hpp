#pragma once

#include <optional>
#include <vector>

#include "rbsde/backward_core.hpp"
#include "rbsde/generator.hpp"
#include "rbsde/lattice.hpp"

namespace rbsde {

/// Residuals of everything a two-barrier solution must satisfy. All values
/// are maxima over nodes / branches and are expected below 1e-10 * scale for
/// solver output.
struct SolutionReport {
  double dynamics = 0.0;           // branch-wise defect of the backward relations
  double flow_lower_identity = 0.0;   // |stored - required| cadlag-part R+ mass
  double flow_upper_identity = 0.0;   // same for R-
  double jump_lower_identity = 0.0;   // |stored - (Y^+ - L + jump V)^-| right jumps
  double jump_upper_identity = 0.0;   // |stored - (Y^+ - U + jump V)^+|
  double minimality_lower = 0.0;   // largest term of the lower minimality sum
  double minimality_upper = 0.0;
  double barrier_violation = 0.0;  // max(L - Y, Y - U, 0) over all slots
  double common_mass = 0.0;        // slot-wise min(dR+, dR-)
  double driver_moment = 0.0;      // E[(int |f(t,Y,Z)| dt)^p]^(1 and 1/p)

  double worst() const;
};

/// (Y, Z, R) with R split into its increasing parts: rp = upward pushes,
/// rm = downward pushes, each with cadlag-part (flow) and right-jump masses.
struct TwoBarrierSolution {
  TreeProcess y;
  LevelField z;
  detail::PushMasses rp;
  detail::PushMasses rm;
  std::optional<SolutionReport> report;
};

/// Direct backward induction with two-sided clamping. Handles general
/// z-dependent drivers (the representation integrand is known before the
/// implicit flow solve).
TwoBarrierSolution solve_clamped(const BinomialTree& tree, const std::vector<double>& terminal,
                                 const Generator& gen, const TreeProcess& forcing,
                                 const TreeProcess& lower, const TreeProcess& upper,
                                 bool attach_report = true, double report_p = 2.0);

/// One iterate pair of the decoupled system.
struct DecouplingTrace {
  int iterations = 0;
  bool converged = false;
  bool monotone_y1 = true;  // iterates non-decreasing node-wise
  bool monotone_y2 = true;
  std::vector<double> increments;  // sup-norm step per iteration
};

/// Coupled optimal-stopping iteration for z-free drivers:
///   Y1^n solves the lower-reflected problem with terminal xi, barrier
///        L + Y2^{n-1} and driver f(t, y - Y2^{n-1});
///   Y2^n solves the lower-reflected problem with terminal 0, zero driver
///        and barrier Y1^{n-1} - U.
/// Started from Y1^0 = plain solution, Y2^0 = 0; both sequences increase.
/// Returns Y = Y1 - Y2, Z = Z1 - Z2 and the slot-wise minimal split of
/// K1 - K2.
TwoBarrierSolution solve_decoupled(const BinomialTree& tree, const std::vector<double>& terminal,
                                   const Generator& gen, const TreeProcess& forcing,
                                   const TreeProcess& lower, const TreeProcess& upper,
                                   int max_iter, double tol, DecouplingTrace* trace = nullptr);

enum class InnerSolver { kClamped, kDecoupled };

struct PicardOptions {
  int max_iter = 200;
  double tol = 1e-11;
  InnerSolver inner = InnerSolver::kClamped;
  bool allow_subdivision = true;
  int forced_subintervals = 0;  // > 0 overrides the automatic choice
};

struct PicardTrace {
  int outer_iterations = 0;  // summed over subintervals
  int subintervals = 1;
  bool converged = false;
  std::vector<double> increments;  // ||dY||_S + ||dZ||_H per outer pass
};

/// Fixed-point loop freezing the integrand in the driver: each pass solves
/// the two-barrier problem with drift f(t, y, Z_prev). When the contraction
/// surrogate lambda * sqrt(T) exceeds 1/2, [0, T] is split into the smallest
/// m with lambda * sqrt(T/m) <= 1/2 and the loop runs piece by piece,
/// backward.
TwoBarrierSolution picard_solve(const BinomialTree& tree, const std::vector<double>& terminal,
                                const Generator& gen, const TreeProcess& forcing,
                                const TreeProcess& lower, const TreeProcess& upper,
                                const PicardOptions& opt = {}, PicardTrace* trace = nullptr);

/// Value at time zero of the two-player stopping game with payoffs L (stop
/// first, maximizer), U (opponent stops first) and terminal xi. Computed by
/// a backward minimax clamp; for N <= 4 also by exhaustive enumeration over
/// all pairs of adapted stopping rules with a saddle check, and the two
/// results are asserted equal. Requires a z-free zero driver and zero
/// forcing.
double dynkin_oracle(const BinomialTree& tree, const std::vector<double>& terminal,
                     const TreeProcess& lower, const TreeProcess& upper,
                     const TreeProcess& forcing);

/// Full residual audit of a candidate solution against the data.
SolutionReport verify_solution(const BinomialTree& tree, const TwoBarrierSolution& sol,
                               const std::vector<double>& terminal, const Generator& gen,
                               const TreeProcess& forcing, const TreeProcess& lower,
                               const TreeProcess& upper, double p = 2.0);

/// Minimality sums alone, for (possibly penalized) masses against arbitrary
/// barriers; returns the largest single term of each sum.
std::pair<double, double> minimality_terms(const BinomialTree& tree, const TreeProcess& y,
                                           const detail::PushMasses& rp,
                                           const detail::PushMasses& rm, const TreeProcess& lower,
                                           const TreeProcess& upper);

/// Net push comparison (rp - rm), slot-wise max difference between two
/// solutions; the uniqueness surrogate for route agreement.
double net_push_distance(const TwoBarrierSolution& a, const TwoBarrierSolution& b);

double sup_distance(const TreeProcess& a, const TreeProcess& b);
double sup_distance(const LevelField& a, const LevelField& b);

}  // namespace rbsde
