#include "rbsde/grid.hpp"

#include <cmath>
#include <stdexcept>

#include "rbsde/errors.hpp"

namespace rbsde {

TimeGrid::TimeGrid(double horizon_, int steps_) : horizon(horizon_), steps(steps_) {
  if (!(horizon > 0.0)) throw ScenarioError("TimeGrid: horizon must be positive");
  if (steps < 1) throw ScenarioError("TimeGrid: need at least one step");
}

RegulatedPath::RegulatedPath(int n_steps, double c)
    : value(static_cast<size_t>(n_steps) + 1, c), post(static_cast<size_t>(n_steps) + 1, c) {}

RegulatedPath::RegulatedPath(std::vector<double> values, std::vector<double> posts)
    : value(std::move(values)), post(std::move(posts)) {
  if (value.size() != post.size() || value.empty())
    throw ScenarioError("RegulatedPath: value/post size mismatch");
  normalize_tail();
}

void RegulatedPath::normalize_tail() {
  if (!value.empty()) post.back() = value.back();
}

static void check_index(const RegulatedPath& x, int k) {
  if (k < 0 || k > x.last_index()) throw std::out_of_range("RegulatedPath: index out of range");
}

double right_jump(const RegulatedPath& x, int k) {
  check_index(x, k);
  if (k == x.last_index()) return 0.0;
  return x.post[k] - x.value[k];
}

double left_jump(const RegulatedPath& x, int k) {
  check_index(x, k);
  if (k == 0) return 0.0;
  return x.value[k] - x.post[k - 1];
}

RegulatedPath cadlag_envelope(const RegulatedPath& x) {
  RegulatedPath out = x;
  const int n = x.last_index();
  for (int k = 0; k < n; ++k) {
    out.value[k] = x.post[k];
    out.post[k] = x.post[k];
  }
  out.value[n] = x.value[n];
  out.post[n] = x.value[n];
  return out;
}

FvPath::FvPath(RegulatedPath p) : path(std::move(p)) {
  if (path.value.empty() || path.value.front() != 0.0)
    throw ScenarioError("FvPath: must start at zero");
  path.normalize_tail();
}

std::vector<double> FvPath::slot_increments() const {
  const int n = last_index();
  std::vector<double> slots;
  slots.reserve(static_cast<size_t>(2 * n));
  for (int k = 0; k < n; ++k) {
    slots.push_back(right_jump(path, k));
    slots.push_back(left_jump(path, k + 1));
  }
  return slots;
}

FvPath FvPath::from_slot_increments(int n_steps, const std::vector<double>& slots) {
  if (slots.size() != static_cast<size_t>(2 * n_steps))
    throw ScenarioError("FvPath: wrong slot count");
  RegulatedPath p(n_steps, 0.0);
  double cur = 0.0;
  for (int k = 0; k < n_steps; ++k) {
    p.value[k] = cur;
    cur += slots[static_cast<size_t>(2 * k)];
    p.post[k] = cur;
    cur += slots[static_cast<size_t>(2 * k) + 1];
  }
  p.value[n_steps] = cur;
  p.post[n_steps] = cur;
  return FvPath(std::move(p));
}

std::pair<FvPath, FvPath> jordan_decompose(const FvPath& r) {
  const int n = r.last_index();
  std::vector<double> slots = r.slot_increments();
  std::vector<double> pos(slots.size()), neg(slots.size());
  for (size_t i = 0; i < slots.size(); ++i) {
    pos[i] = slots[i] > 0.0 ? slots[i] : 0.0;
    neg[i] = slots[i] < 0.0 ? -slots[i] : 0.0;
  }
  return {FvPath::from_slot_increments(n, pos), FvPath::from_slot_increments(n, neg)};
}

std::pair<FvPath, FvPath> split_cadlag_jump_parts(const FvPath& v) {
  const int n = v.last_index();
  RegulatedPath d(n, 0.0);
  double acc = 0.0;  // sum of right jumps strictly before t_k
  for (int k = 0; k <= n; ++k) {
    d.value[k] = acc;
    acc += right_jump(v.path, k);
    d.post[k] = acc;
  }
  d.normalize_tail();
  RegulatedPath star(n, 0.0);
  for (int k = 0; k <= n; ++k) {
    star.value[k] = v.path.value[k] - d.value[k];
    star.post[k] = v.path.post[k] - d.post[k];
  }
  return {FvPath(std::move(star)), FvPath(std::move(d))};
}

}  // namespace rbsde
