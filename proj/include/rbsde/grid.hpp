#pragma once

#include <utility>
#include <vector>

namespace rbsde {

/// Uniform partition of [0, T] into `steps` intervals.
struct TimeGrid {
  double horizon = 1.0;
  int steps = 1;

  TimeGrid() = default;
  TimeGrid(double horizon_, int steps_);

  double dt() const { return horizon / steps; }
  double time(int k) const { return horizon * k / steps; }
};

/// A path with finite one-sided limits at every grid time, stored as one
/// (value, post-value) pair per grid index. The path is constant on each
/// open interval (t_k, t_{k+1}), where it equals the post-value at k.
/// The post-value at the last index always equals the value there, so the
/// right jump at the horizon is zero, and the left jump at index 0 is zero
/// by convention.
struct RegulatedPath {
  std::vector<double> value;  // v_k
  std::vector<double> post;   // v_k^+, value on (t_k, t_{k+1})

  RegulatedPath() = default;
  explicit RegulatedPath(int n_steps, double c = 0.0);
  RegulatedPath(std::vector<double> values, std::vector<double> posts);

  int last_index() const { return static_cast<int>(value.size()) - 1; }
  /// Forces post[N] = value[N].
  void normalize_tail();
};

/// v_k^+ - v_k; zero at the last index.
double right_jump(const RegulatedPath& x, int k);

/// v_k - v_{k-1}^+; zero at index 0.
double left_jump(const RegulatedPath& x, int k);

/// The right-continuous envelope: value_k := v_k^+ for k < N, v_N at N.
/// Has zero right jumps, is idempotent and order preserving.
RegulatedPath cadlag_envelope(const RegulatedPath& x);

/// Adapted finite-variation path, value[0] == 0.
struct FvPath {
  RegulatedPath path;

  FvPath() = default;
  explicit FvPath(RegulatedPath p);
  explicit FvPath(int n_steps) : FvPath(RegulatedPath(n_steps, 0.0)) {}

  int last_index() const { return path.last_index(); }

  /// Increment slots in path order: right jump at 0, left jump at 1,
  /// right jump at 1, ..., left jump at N. Size 2N.
  std::vector<double> slot_increments() const;

  /// Rebuild a path from slot increments (inverse of slot_increments).
  static FvPath from_slot_increments(int n_steps, const std::vector<double>& slots);
};

/// Minimal (no common mass) decomposition R = plus - minus with both parts
/// non-decreasing in every slot. At each increment slot,
/// min(d plus, d minus) = 0.
std::pair<FvPath, FvPath> jordan_decompose(const FvPath& r);

/// Splits V = Vstar + Vd where Vd_t = sum_{s<t} of the right jumps of V and
/// Vstar carries everything else (and has zero right jumps).
std::pair<FvPath, FvPath> split_cadlag_jump_parts(const FvPath& v);

}  // namespace rbsde
