#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>

#include "doctest.h"
#include "rbsde/bsde.hpp"
#include "rbsde/errors.hpp"
#include "rbsde/penalization.hpp"
#include "rbsde/reflected_one.hpp"
#include "test_support.hpp"

using namespace rbsde;

namespace {

// Reference scenario with regulated barriers carrying right jumps.
testsup::ScenarioData reference_scenario(int steps, uint64_t seed) {
  testsup::ScenarioOptions o;
  o.z_free = true;
  o.jump_scale = 0.6;
  return testsup::random_scenario(steps, 1.0, seed, o);
}

TreeProcess with_right_jump(const TreeProcess& base, int level, double delta) {
  TreeProcess out = base;
  for (size_t j = 0; j < out.post[level].size(); ++j)
    out.post[level][j] = out.val[level][j] + delta;
  return out;
}

}  // namespace

TEST_CASE("down-jump array construction") {
  const BinomialTree tree{TimeGrid(1.0, 8)};
  const TreeProcess flat = TreeProcess::constant(tree, 0.0);
  SUBCASE("no qualifying jumps leaves only the horizon") {
    const StoppingArray arr = exhaust_down_jumps(tree, flat, flat, 1);
    CHECK(arr.times.empty());
    CHECK(arr.count == 1);
    for (int k = 0; k < 8; ++k)
      for (int j = 0; j <= k; ++j) CHECK(arr.member[k][j] == 0);
    for (int j = 0; j <= 8; ++j) CHECK(arr.member[8][j] == 1);
  }
  SUBCASE("one deep jump is caught at level one and stays nested") {
    const TreeProcess l = with_right_jump(flat, 3, -1.5);
    const StoppingArray a1 = exhaust_down_jumps(tree, l, flat, 1);
    CHECK(a1.times == std::vector<int>{3});
    const StoppingArray a2 = exhaust_down_jumps(tree, l, flat, 2);
    CHECK(a2.times == std::vector<int>{3});
  }
  SUBCASE("a shallow jump appears once the threshold passes it") {
    const TreeProcess l = with_right_jump(flat, 3, -0.6);
    CHECK(exhaust_down_jumps(tree, l, flat, 1).times.empty());
    CHECK(exhaust_down_jumps(tree, l, flat, 2).times == std::vector<int>{3});
  }
  SUBCASE("threshold coverage is exact and levels nest, random jumps in (-1, 0)") {
    std::mt19937_64 rng(15);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
      TreeProcess l = flat;
      for (int k = 0; k < 8; ++k)
        if (u(rng) < 0.6) {
          const double d = -0.999 * u(rng);
          for (int j = 0; j <= k; ++j) l.post[k][j] = l.val[k][j] + d;
        }
      NodeMask prev;
      for (int n = 1; n <= 8; ++n) {
        const StoppingArray arr = exhaust_down_jumps(tree, l, flat, n);
        for (int k = 0; k < 8; ++k)
          for (int j = 0; j <= k; ++j) {
            const bool qualifies = l.right_jump(k, j) < -1.0 / n;
            CHECK(static_cast<bool>(arr.member[k][j]) == qualifies);
          }
        if (n > 1) {
          for (int k = 0; k <= 8; ++k)
            for (int j = 0; j <= k; ++j)
              if (prev[k][j]) CHECK(arr.member[k][j] == 1);
        }
        prev = arr.member;
      }
    }
  }
  SUBCASE("adapted (node-dependent) jumps are supported without a budget") {
    TreeProcess l = flat;
    l.post[4][2] = l.val[4][2] - 2.0;  // only one node of the level jumps
    const StoppingArray arr = exhaust_down_jumps(tree, l, flat, 1);
    CHECK_FALSE(arr.level_uniform);
    CHECK(arr.member[4][2] == 1);
    CHECK(arr.member[4][1] == 0);
    CHECK_THROWS_AS(exhaust_down_jumps(tree, l, flat, 1, /*budget=*/1), ScenarioError);
  }
  SUBCASE("truncation budget keeps the join-merge nesting") {
    TreeProcess l = flat;
    for (int k : {1, 3, 5, 6}) l = with_right_jump(l, k, -1.5);
    StoppingArray prev = exhaust_down_jumps(tree, l, flat, 1, /*budget=*/2);
    CHECK(prev.tail_probability == 1.0);  // jumps remain beyond the budget
    for (int n = 2; n <= 6; ++n) {
      const StoppingArray arr = exhaust_down_jumps(tree, l, flat, n, /*budget=*/2);
      for (int t : prev.times) {
        bool covered = false;
        for (int s : arr.times) covered = covered || s == t;
        CHECK(covered);
      }
      prev = arr;
    }
  }
}

TEST_CASE("up-jump array mirrors the construction") {
  const BinomialTree tree{TimeGrid(1.0, 8)};
  const TreeProcess flat = TreeProcess::constant(tree, 0.0);
  CHECK(exhaust_up_jumps(tree, with_right_jump(flat, 5, -0.8), flat, 1).times.empty());
  CHECK(exhaust_up_jumps(tree, with_right_jump(flat, 5, 1.5), flat, 1).times ==
        std::vector<int>{5});
  CHECK(exhaust_up_jumps(tree, with_right_jump(flat, 5, 0.6), flat, 2).times ==
        std::vector<int>{5});
}

TEST_CASE("merged grid carries exactly the union of graphs") {
  const BinomialTree tree{TimeGrid(1.0, 8)};
  const TreeProcess flat = TreeProcess::constant(tree, 0.0);
  SUBCASE("one-sided merge returns the other grid") {
    const StoppingArray down = exhaust_down_jumps(tree, with_right_jump(flat, 2, -1.5), flat, 1);
    const StoppingArray up = exhaust_up_jumps(tree, flat, flat, 1);
    const MergedGrid g = merge_jump_grids(down, up);
    CHECK(g.times == down.times);
  }
  SUBCASE("disjoint jump levels interleave in order") {
    const StoppingArray down = exhaust_down_jumps(tree, with_right_jump(flat, 2, -1.5), flat, 1);
    const StoppingArray up = exhaust_up_jumps(tree, with_right_jump(flat, 5, 1.5), flat, 1);
    const MergedGrid g = merge_jump_grids(down, up);
    CHECK(g.times == std::vector<int>{2, 5});
    CHECK(g.count == 3);
  }
  SUBCASE("random arrays: node-wise union identity") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
      TreeProcess l = flat, up_b = flat;
      for (int k = 0; k < 8; ++k) {
        if (u(rng) < 0.4) l.post[k][static_cast<size_t>(u(rng) * k)] -= 2.0;
        if (u(rng) < 0.4) up_b.post[k][static_cast<size_t>(u(rng) * k)] += 2.0;
      }
      const StoppingArray down = exhaust_down_jumps(tree, l, flat, 1);
      const StoppingArray up = exhaust_up_jumps(tree, up_b, flat, 1);
      const MergedGrid g = merge_jump_grids(down, up);
      for (int k = 0; k <= 8; ++k)
        for (int j = 0; j <= k; ++j)
          CHECK(g.member[k][j] == (down.member[k][j] | up.member[k][j]));
    }
  }
}

TEST_CASE("upper-reflected penalized scheme") {
  SUBCASE("inactive lower barrier leaves the penalty idle") {
    const testsup::ScenarioData sc = reference_scenario(8, 40);
    const TreeProcess far = TreeProcess::constant(sc.tree, -1e9);
    const PenalizedSolution pen =
        solve_upper_penalized(sc.tree, sc.terminal, sc.gen, sc.forcing, far, sc.upper, 8);
    const OneBarrierSolution ref =
        solve_upper(sc.tree, sc.terminal, sc.gen, sc.forcing, sc.upper);
    CHECK(sup_distance(pen.y, ref.y) <= 1e-10 * testsup::tree_scale(ref.y));
    CHECK(pen.k.total_max() == 0.0);
  }
  SUBCASE("level zero is the plain upper reflection") {
    const testsup::ScenarioData sc = reference_scenario(8, 41);
    const PenalizedSolution pen =
        solve_upper_penalized(sc.tree, sc.terminal, sc.gen, sc.forcing, sc.lower, sc.upper, 0);
    const OneBarrierSolution ref =
        solve_upper(sc.tree, sc.terminal, sc.gen, sc.forcing, sc.upper);
    CHECK(sup_distance(pen.y, ref.y) == 0.0);
  }
  SUBCASE("increases with the penalty level and stays below the solution") {
    const testsup::ScenarioData sc = reference_scenario(10, 42);
    const TwoBarrierSolution ref =
        solve_clamped(sc.tree, sc.terminal, sc.gen, sc.forcing, sc.lower, sc.upper, false);
    const double eps = 1e-11 * testsup::tree_scale(ref.y);
    TreeProcess prev;
    bool have_prev = false;
    for (int n : {1, 2, 4, 8, 16, 32, 64, 128, 256}) {
      const PenalizedSolution pen =
          solve_upper_penalized(sc.tree, sc.terminal, sc.gen, sc.forcing, sc.lower, sc.upper, n);
      for (int k = 0; k <= 10; ++k)
        for (int j = 0; j <= k; ++j) {
          CHECK(pen.y.val[k][j] <= ref.y.val[k][j] + eps);
          CHECK(pen.y.post[k][j] <= ref.y.post[k][j] + eps);
          if (have_prev) {
            CHECK(prev.val[k][j] <= pen.y.val[k][j] + eps);
            CHECK(prev.post[k][j] <= pen.y.post[k][j] + eps);
          }
        }
      prev = pen.y;
      have_prev = true;
    }
  }
}

TEST_CASE("lower-reflected penalized scheme mirrors and decreases") {
  const testsup::ScenarioData sc = reference_scenario(10, 43);
  const TwoBarrierSolution ref =
      solve_clamped(sc.tree, sc.terminal, sc.gen, sc.forcing, sc.lower, sc.upper, false);
  const double eps = 1e-11 * testsup::tree_scale(ref.y);
  SUBCASE("inactive upper barrier reduces to the lower reflection") {
    const TreeProcess far = TreeProcess::constant(sc.tree, 1e9);
    const PenalizedSolution pen =
        solve_lower_penalized(sc.tree, sc.terminal, sc.gen, sc.forcing, sc.lower, far, 8);
    const OneBarrierSolution one =
        solve_lower(sc.tree, sc.terminal, sc.gen, sc.forcing, sc.lower);
    CHECK(sup_distance(pen.y, one.y) <= 1e-10 * testsup::tree_scale(one.y));
    CHECK(pen.a.total_max() == 0.0);
  }
  SUBCASE("stays above the solution, respects the lower barrier, decreases in n") {
    TreeProcess prev;
    bool have_prev = false;
    for (int n : {1, 2, 4, 8, 16, 32, 64, 128, 256}) {
      const PenalizedSolution pen =
          solve_lower_penalized(sc.tree, sc.terminal, sc.gen, sc.forcing, sc.lower, sc.upper, n);
      for (int k = 0; k <= 10; ++k)
        for (int j = 0; j <= k; ++j) {
          CHECK(pen.y.val[k][j] >= ref.y.val[k][j] - eps);
          CHECK(pen.y.val[k][j] >= sc.lower.val[k][j] - eps);
          CHECK(pen.y.post[k][j] >= sc.lower.post[k][j] - eps);
          if (have_prev) CHECK(pen.y.val[k][j] <= prev.val[k][j] + eps);
        }
      prev = pen.y;
      have_prev = true;
    }
  }
}

TEST_CASE("plain penalized scheme") {
  SUBCASE("inactive barriers reduce to the plain solve") {
    const testsup::ScenarioData sc = reference_scenario(8, 44);
    const TreeProcess lo = TreeProcess::constant(sc.tree, -1e9);
    const TreeProcess hi = TreeProcess::constant(sc.tree, 1e9);
    const PenalizedSolution pen =
        solve_bsde_penalized(sc.tree, sc.terminal, sc.gen, sc.forcing, lo, hi, 16);
    const BsdeSolution ref = solve_bsde(sc.tree, sc.terminal, sc.gen, sc.forcing);
    CHECK(sup_distance(pen.y, ref.y) <= 1e-10 * testsup::tree_scale(ref.y));
  }
  SUBCASE("sits between the two reflected schemes at every level") {
    const testsup::ScenarioData sc = reference_scenario(10, 45);
    const double eps = 1e-11;
    for (int n : {1, 4, 16, 64, 256}) {
      const PenalizedSolution up =
          solve_upper_penalized(sc.tree, sc.terminal, sc.gen, sc.forcing, sc.lower, sc.upper, n);
      const PenalizedSolution lo =
          solve_lower_penalized(sc.tree, sc.terminal, sc.gen, sc.forcing, sc.lower, sc.upper, n);
      const PenalizedSolution mid =
          solve_bsde_penalized(sc.tree, sc.terminal, sc.gen, sc.forcing, sc.lower, sc.upper, n);
      for (int k = 0; k <= 10; ++k)
        for (int j = 0; j <= k; ++j) {
          CHECK(up.y.val[k][j] <= mid.y.val[k][j] + eps);
          CHECK(mid.y.val[k][j] <= lo.y.val[k][j] + eps);
        }
    }
  }
  SUBCASE("converges to the clamped solution on a smooth scenario") {
    testsup::ScenarioOptions o;
    o.z_free = true;
    o.cadlag_barriers = true;
    o.cadlag_forcing = true;
    const testsup::ScenarioData sc = testsup::random_scenario(16, 1.0, 46, o);
    const TwoBarrierSolution ref =
        solve_clamped(sc.tree, sc.terminal, sc.gen, sc.forcing, sc.lower, sc.upper, false);
    const PenalizedSolution pen =
        solve_bsde_penalized(sc.tree, sc.terminal, sc.gen, sc.forcing, sc.lower, sc.upper, 4096);
    CHECK(sup_distance(pen.y, ref.y) <= 1e-2);
  }
}

TEST_CASE("hand-swapped push measures are flagged") {
  const testsup::ScenarioData sc = reference_scenario(10, 52);
  const PenalizedSolution pen =
      solve_upper_penalized(sc.tree, sc.terminal, sc.gen, sc.forcing, sc.lower, sc.upper, 8);
  detail::PushMasses bumped = pen.a;
  bumped.jump[4][2] += 1.0;
  CHECK(check_push_monotone(pen.a, bumped, 1e-11).ok);
  CHECK_FALSE(check_push_monotone(bumped, pen.a, 1e-11).ok);
}

TEST_CASE("downward-push measures are ordered in the penalty level") {
  const testsup::ScenarioData sc = reference_scenario(10, 47);
  PenalizedSolution prev =
      solve_upper_penalized(sc.tree, sc.terminal, sc.gen, sc.forcing, sc.lower, sc.upper, 1);
  for (int n : {2, 4, 8, 16, 32}) {
    const PenalizedSolution cur =
        solve_upper_penalized(sc.tree, sc.terminal, sc.gen, sc.forcing, sc.lower, sc.upper, n);
    const OrderingReport rep = check_push_monotone(prev.a, cur.a, 1e-11);
    CHECK(rep.ok);
    prev = cur;
  }
}

TEST_CASE("penalized triple satisfies the shifted-barrier minimality") {
  const testsup::ScenarioData sc = reference_scenario(10, 48);
  for (int n : {1, 8, 64}) {
    const PenalizedSolution up =
        solve_upper_penalized(sc.tree, sc.terminal, sc.gen, sc.forcing, sc.lower, sc.upper, n);
    const PenalizedSolution lo =
        solve_lower_penalized(sc.tree, sc.terminal, sc.gen, sc.forcing, sc.lower, sc.upper, n);
    const PenalizedSolution mid =
        solve_bsde_penalized(sc.tree, sc.terminal, sc.gen, sc.forcing, sc.lower, sc.upper, n);
    CHECK(penalized_shifted_minimality(sc.tree, up, sc.lower, sc.upper) <= 1e-10);
    CHECK(penalized_shifted_minimality(sc.tree, lo, sc.lower, sc.upper) <= 1e-10);
    CHECK(penalized_shifted_minimality(sc.tree, mid, sc.lower, sc.upper) <= 1e-10);
  }
}

TEST_CASE("convergence table") {
  SUBCASE("smooth scenario: flags set, single row has no trend assertion") {
    testsup::ScenarioOptions o;
    o.z_free = true;
    o.cadlag_barriers = true;
    o.cadlag_forcing = true;
    const testsup::ScenarioData sc = testsup::random_scenario(10, 1.0, 49, o);
    const ConvergenceTable t = convergence_report(sc.tree, sc.terminal, sc.gen, sc.forcing,
                                                  sc.lower, sc.upper, {8}, 2.0);
    CHECK(t.rows.size() == 3);
    for (const auto& r : t.rows) {
      CHECK(r.sandwich_ok);
      CHECK(r.monotone_ok);
      CHECK(r.minimality_residual <= 1e-10);
    }
    const std::string csv = t.to_csv();
    CHECK(csv.find("scheme,n,sup_err,h_err_g1,h_err_g15,h_err_g2,minimality_residual,"
                   "sandwich_ok,monotone_ok") == 0);
  }
  SUBCASE("columns shrink with n on the reference scenario") {
    const testsup::ScenarioData sc = reference_scenario(10, 50);
    const ConvergenceTable t = convergence_report(sc.tree, sc.terminal, sc.gen, sc.forcing,
                                                  sc.lower, sc.upper, {1, 4, 16, 64, 256}, 2.0);
    double prev_upper = 1e300, prev_lower = 1e300;
    for (const auto& r : t.rows) {
      CHECK(r.sandwich_ok);
      CHECK(r.monotone_ok);
      if (r.scheme == "upper") {
        CHECK(r.sup_err <= prev_upper + 1e-12);
        prev_upper = r.sup_err;
      }
      if (r.scheme == "lower") {
        CHECK(r.sup_err <= prev_lower + 1e-12);
        prev_lower = r.sup_err;
      }
    }
  }
  SUBCASE("atomic-push flags distinguish jumpy from smooth scenarios") {
    // Walk-linked barriers without drift: the barrier mean is constant along
    // the tree, so the reflection never has to act atomically.
    const BinomialTree smooth_tree{TimeGrid(1.0, 8)};
    const TreeProcess slo = TreeProcess::from_node_fn(
        smooth_tree, [](int, int, double w) { return -1.0 + 0.3 * w; });
    const TreeProcess shi = TreeProcess::from_node_fn(
        smooth_tree, [](int, int, double w) { return 1.0 + 0.3 * w; });
    const TreeProcess sv = TreeProcess::constant(smooth_tree, 0.0);
    std::vector<double> sxi(9);
    for (int j = 0; j <= 8; ++j)
      sxi[j] = slo.val[8][j] + 0.4 * (shi.val[8][j] - slo.val[8][j]);
    const ConvergenceTable ta = convergence_report(
        smooth_tree, sxi, Generator::linear(0.1, -0.5, 0.0), sv, slo, shi, {4}, 2.0);
    CHECK(ta.left_jumps_absent_net);

    // A hard downward left jump of the lower barrier that the solution must
    // ride produces an atomic upward push.
    const BinomialTree tree{TimeGrid(1.0, 8)};
    TreeProcess lo = TreeProcess::constant(tree, 0.0);
    for (int k = 0; k <= 3; ++k)
      for (int j = 0; j <= k; ++j) {
        lo.val[k][j] = 2.0;
        lo.post[k][j] = 2.0;
      }
    lo.post[3][0] = 2.0;
    for (int k = 4; k <= 8; ++k)
      for (int j = 0; j <= k; ++j) {
        lo.val[k][j] = -3.0;
        lo.post[k][j] = -3.0;
      }
    const TreeProcess hi = TreeProcess::constant(tree, 6.0);
    const TreeProcess v0 = TreeProcess::constant(tree, 0.0);
    const std::vector<double> xi(9, -1.0);
    const ConvergenceTable tb =
        convergence_report(tree, xi, Generator::zero(), v0, lo, hi, {4}, 2.0);
    CHECK_FALSE(tb.left_jumps_absent_plus);
  }
}
