#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "rbsde/grid.hpp"

namespace rbsde {

/// One vector of node values per level; field[k] has k+1 entries.
using LevelField = std::vector<std::vector<double>>;
/// Node indicator per level, same shape as LevelField.
using NodeMask = std::vector<std::vector<uint8_t>>;

LevelField make_level_field(int n_steps, double c = 0.0);
NodeMask make_node_mask(int n_steps, uint8_t c = 0);

/// Recombining symmetric random walk: from node (k, j) the increment over
/// the next step is +sqrt(dt) (to (k+1, j+1)) or -sqrt(dt) (to (k+1, j)),
/// each with probability 1/2. Increments have exact mean zero and
/// variance dt conditionally on every node.
class BinomialTree {
 public:
  explicit BinomialTree(TimeGrid grid);

  const TimeGrid& grid() const { return grid_; }
  int steps() const { return grid_.steps; }
  double dt() const { return grid_.dt(); }
  double sqrt_dt() const { return sqrt_dt_; }
  double time(int k) const { return grid_.time(k); }
  /// Walk value at node (k, j): (2j - k) * sqrt(dt).
  double walk(int k, int j) const { return (2.0 * j - k) * sqrt_dt_; }
  /// Probability of reaching node (k, j): C(k, j) / 2^k.
  double node_probability(int k, int j) const;

 private:
  TimeGrid grid_;
  double sqrt_dt_;
};

/// Adapted regulated process on the tree: a (value, post-value) pair per
/// node. Post-values at the last level equal the values there.
struct TreeProcess {
  LevelField val;
  LevelField post;

  TreeProcess() = default;

  int levels() const { return static_cast<int>(val.size()); }
  int last_level() const { return levels() - 1; }
  double right_jump(int k, int j) const { return post[k][j] - val[k][j]; }

  static TreeProcess constant(const BinomialTree& tree, double c);
  /// Builds from a node function g(k, j, walk); post = value (no right jumps).
  static TreeProcess from_node_fn(const BinomialTree& tree,
                                  const std::function<double(int, int, double)>& g);
  /// Extracts the regulated path along one trajectory; `ups[k]` is 1 if the
  /// step k -> k+1 moves up.
  RegulatedPath along_path(const std::vector<int>& node_index) const;
};

/// Slot-wise linear combination ca * a + cb * b.
TreeProcess tp_linear(const TreeProcess& a, double ca, const TreeProcess& b, double cb);

/// One-step conditional expectation: result[j] = (next[j+1] + next[j]) / 2.
std::vector<double> cond_expect(const std::vector<double>& next_level);

/// Checks that `m` (values per level, 0..N) is a martingale under the tree
/// and returns the unique representation integrand
///     z[k][j] = (m[k+1][j+1] - m[k+1][j]) / (2 sqrt(dt)),
/// so that m_{k+1} = m_k + z_k * dB_{k+1} holds branch-wise exactly.
/// Rejects inputs whose one-step martingale residual exceeds
/// 1e-12 * max|m|.
LevelField martingale_representation(const BinomialTree& tree, const LevelField& m);

/// Adapted stopping rule: stop at the first node along the path whose
/// indicator is set; always stops at the last level.
struct StoppingTime {
  NodeMask stop;

  explicit StoppingTime(int n_steps);
  /// First stopping level along a path given by node indexes per level.
  int first_stop(const std::vector<int>& node_index) const;
};

struct SnellResult {
  TreeProcess envelope;      // smallest dominating supermartingale
  StoppingTime optimal_rule; // first time envelope touches the payoff

  explicit SnellResult(int n_steps) : optimal_rule(n_steps) {}
};

/// Value process of optimal stopping of the payoff values g.val:
/// S_N = G_N, S_k = max(G_k, E_k[S_{k+1}]). S_0 equals the supremum of
/// E[G_tau] over all adapted stopping rules.
SnellResult snell_envelope(const BinomialTree& tree, const TreeProcess& g);

/// Value of X at the first stopping node, one entry per path (2^N paths,
/// path p's step k goes up iff bit k of p is set).
std::vector<double> evaluate_at_stopping_time(const BinomialTree& tree, const TreeProcess& x,
                                              const StoppingTime& tau);

/// E[X_tau] without path enumeration (forward sweep of unstopped mass).
double expectation_at_stopping_time(const BinomialTree& tree, const TreeProcess& x,
                                    const StoppingTime& tau);

/// Calls f(node_index, weight) for every path; node_index[k] is the node at
/// level k, weight = 2^-N. Throws for N > 24.
void for_each_path(const BinomialTree& tree,
                   const std::function<void(const std::vector<int>&, double)>& f);

}  // namespace rbsde
