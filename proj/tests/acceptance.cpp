// Acceptance suite: one pass/fail line per criterion, all tolerances pinned
// in code. Exits with the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "rbsde/bsde.hpp"
#include "rbsde/harness.hpp"
#include "rbsde/norms.hpp"
#include "rbsde/penalization.hpp"
#include "rbsde/reflected_two.hpp"
#include "rbsde/scenario.hpp"
#include "test_support.hpp"

using namespace rbsde;

namespace {

struct Check {
  bool ok = true;
  std::string detail;  // failure reason when !ok, otherwise summary note

  void require(bool cond, const std::string& msg) {
    if (!cond && ok) {
      ok = false;
      detail = msg;
    }
  }
  void note(const std::string& msg) {
    if (ok) detail = msg;
  }
};

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

// ---------------------------------------------------------------- criteria

Check c1_martingale_representation() {
  Check c;
  const BinomialTree tree{TimeGrid(1.0, 16)};
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    LevelField m = make_level_field(16);
    double scale = 0.0;
    for (int j = 0; j <= 16; ++j) {
      m[16][j] = u(rng);
      scale = std::max(scale, std::abs(m[16][j]));
    }
    for (int k = 15; k >= 0; --k) m[k] = cond_expect(m[k + 1]);
    const LevelField z = martingale_representation(tree, m);
    for (int k = 0; k < 16; ++k)
      for (int j = 0; j <= k; ++j) {
        const double up = m[k][j] + z[k][j] * tree.sqrt_dt() - m[k + 1][j + 1];
        const double dn = m[k][j] - z[k][j] * tree.sqrt_dt() - m[k + 1][j];
        worst = std::max(worst, std::max(std::abs(up), std::abs(dn)) / scale);
      }
  }
  c.require(worst <= 1e-12, "reconstruction residual " + fmt(worst));
  c.note("max branch residual " + fmt(worst));
  return c;
}

Check c2_snell_oracle() {
  Check c;
  const BinomialTree tree{TimeGrid(1.0, 4)};
  std::mt19937_64 rng(202);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    TreeProcess g = TreeProcess::constant(tree, 0.0);
    for (int k = 0; k <= 4; ++k)
      for (int j = 0; j <= k; ++j) g.val[k][j] = u(rng);
    const SnellResult s = snell_envelope(tree, g);
    const double brute = testsup::best_stopping_value(tree, g);
    worst = std::max(worst, std::abs(s.envelope.val[0][0] - brute));
  }
  c.require(worst <= 1e-12, "gap to exhaustive enumeration " + fmt(worst));
  c.note("max gap " + fmt(worst));
  return c;
}

Check c3_dynkin_equivalence() {
  Check c;
  double worst = 0.0;
  for (uint64_t seed = 0; seed < 100; ++seed) {
    testsup::ScenarioOptions o;
    o.cadlag_barriers = true;
    o.zero_forcing = true;
    testsup::ScenarioData sc = testsup::random_scenario(4, 1.0, 3000 + seed, o);
    sc.gen = Generator::zero();
    const TwoBarrierSolution sol =
        solve_clamped(sc.tree, sc.terminal, sc.gen, sc.forcing, sc.lower, sc.upper, false);
    const double oracle = dynkin_oracle(sc.tree, sc.terminal, sc.lower, sc.upper, sc.forcing);
    bool saddle_ok = false;
    const double brute =
        testsup::saddle_game_value(sc.tree, sc.terminal, sc.lower, sc.upper, &saddle_ok);
    if (!saddle_ok) {
      c.require(false, "saddle check failed at seed " + std::to_string(seed));
      return c;
    }
    worst = std::max(worst, std::abs(sol.y.val[0][0] - oracle));
    worst = std::max(worst, std::abs(oracle - brute));
  }
  c.require(worst <= 1e-10, "triple agreement gap " + fmt(worst));
  c.note("max gap " + fmt(worst));
  return c;
}

Check c4_route_agreement() {
  Check c;
  const auto start = std::chrono::steady_clock::now();
  double worst_dec = 0.0;
  for (uint64_t seed = 0; seed < 50; ++seed) {
    testsup::ScenarioOptions o;
    o.z_free = true;
    const testsup::ScenarioData sc = testsup::random_scenario(8, 1.0, 4000 + seed, o);
    const TwoBarrierSolution direct =
        solve_clamped(sc.tree, sc.terminal, sc.gen, sc.forcing, sc.lower, sc.upper, false);
    const TwoBarrierSolution dec = solve_decoupled(sc.tree, sc.terminal, sc.gen, sc.forcing,
                                                   sc.lower, sc.upper, 5000, 1e-11);
    const double scale = std::max(1.0, testsup::tree_scale(direct.y));
    worst_dec = std::max(worst_dec, sup_distance(direct.y, dec.y) / scale);
    worst_dec = std::max(worst_dec, sup_distance(direct.z, dec.z) / scale);
    worst_dec = std::max(worst_dec, net_push_distance(direct, dec) / scale);
  }
  double worst_pic = 0.0;
  for (uint64_t seed = 0; seed < 50; ++seed) {
    testsup::ScenarioOptions o;
    o.lambda_max = 0.5;  // lambda sqrt(T) <= 1/2
    const testsup::ScenarioData sc = testsup::random_scenario(8, 1.0, 4100 + seed, o);
    const TwoBarrierSolution direct =
        solve_clamped(sc.tree, sc.terminal, sc.gen, sc.forcing, sc.lower, sc.upper, false);
    PicardOptions opt;
    opt.tol = 1e-11;
    const TwoBarrierSolution pic =
        picard_solve(sc.tree, sc.terminal, sc.gen, sc.forcing, sc.lower, sc.upper, opt);
    const double scale = std::max(1.0, testsup::tree_scale(direct.y));
    worst_pic = std::max(worst_pic, sup_distance(direct.y, pic.y) / scale);
    worst_pic = std::max(worst_pic, sup_distance(direct.z, pic.z) / scale);
    worst_pic = std::max(worst_pic, net_push_distance(direct, pic) / scale);
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  c.require(worst_dec <= 1e-8, "decoupled route gap " + fmt(worst_dec));
  c.require(worst_pic <= 1e-8, "fixed-point route gap " + fmt(worst_pic));
  c.require(secs < 60.0, "runtime " + fmt(secs) + " s");
  c.note("decoupled gap " + fmt(worst_dec) + ", fixed-point gap " + fmt(worst_pic) + ", " +
         fmt(secs) + " s");
  return c;
}

void jump_scenarios_worst(double* identity, double* minimality) {
  *identity = 0.0;
  *minimality = 0.0;
  for (uint64_t seed = 0; seed < 200; ++seed) {
    const testsup::ScenarioData sc = testsup::random_scenario(12, 1.0, 5000 + seed);
    const TwoBarrierSolution sol =
        solve_clamped(sc.tree, sc.terminal, sc.gen, sc.forcing, sc.lower, sc.upper, true);
    const double scale = std::max(1.0, testsup::tree_scale(sol.y));
    const SolutionReport& r = *sol.report;
    *identity = std::max({*identity, r.flow_lower_identity / scale, r.flow_upper_identity / scale,
                          r.jump_lower_identity / scale, r.jump_upper_identity / scale});
    *minimality =
        std::max({*minimality, r.minimality_lower / scale, r.minimality_upper / scale});
  }
}

Check c5_jump_identities() {
  Check c;
  double identity = 0.0, minimality = 0.0;
  jump_scenarios_worst(&identity, &minimality);
  c.require(identity <= 1e-10, "identity residual " + fmt(identity));
  c.note("max identity residual " + fmt(identity));
  return c;
}

Check c6_minimality() {
  Check c;
  double identity = 0.0, minimality = 0.0;
  jump_scenarios_worst(&identity, &minimality);
  c.require(minimality <= 1e-10, "minimality residual " + fmt(minimality));
  c.note("max minimality term " + fmt(minimality));
  return c;
}

Check c7_comparison() {
  Check c;
  std::mt19937_64 rng(707);
  std::uniform_real_distribution<double> u(0.0, 0.5);
  double worst = -1e300;
  for (uint64_t seed = 0; seed < 200; ++seed) {
    const testsup::ScenarioData sc = testsup::random_scenario(10, 1.0, 7000 + seed);
    const double e = u(rng), df = u(rng);
    std::vector<double> xi2 = sc.terminal;
    for (auto& v : xi2) v += e;
    TreeProcess u2 = sc.upper;
    for (auto& lv : u2.val)
      for (auto& v : lv) v += e;
    for (auto& lv : u2.post)
      for (auto& v : lv) v += e;
    Generator g2 = sc.gen;
    const auto f1 = sc.gen.f;
    g2.f = [f1, df](double t, double y, double z) { return f1(t, y, z) + df; };
    const TwoBarrierSolution a =
        solve_clamped(sc.tree, sc.terminal, sc.gen, sc.forcing, sc.lower, sc.upper, false);
    const TwoBarrierSolution b = solve_clamped(sc.tree, xi2, g2, sc.forcing, sc.lower, u2, false);
    const double eps = 1e-12 * std::max(1.0, testsup::tree_scale(a.y));
    for (int k = 0; k <= 10; ++k)
      for (int j = 0; j <= k; ++j) {
        worst = std::max(worst, a.y.val[k][j] - b.y.val[k][j] - eps);
        worst = std::max(worst, a.y.post[k][j] - b.y.post[k][j] - eps);
      }
  }
  c.require(worst <= 0.0, "ordering violation " + fmt(worst));
  c.note("worst signed gap " + fmt(worst));
  return c;
}

// A narrow tube between the barriers with a strong downward drift and a
// terminal near the upper barrier: the solution rides both barriers, so the
// penalties genuinely work. The smooth variant keeps the barrier means
// constant along the tree (no drift, no jumps, no forcing), which makes the
// reflection flow-only; the jumping variant adds two-sided jump structure.
Scenario reference_sweep_scenario(bool with_jumps) {
  Scenario sc;
  sc.horizon = 1.0;
  sc.steps = 16;
  sc.p = 2.0;
  sc.generator_family = "cubic_monotone";
  sc.generator_params = {{"a", 0.0}, {"b", 1.5}, {"c", 0.0}};
  sc.terminal.type = "blend";
  sc.terminal.frac = 0.5;
  sc.lower.type = "walk";
  sc.lower.a = -0.15;
  sc.lower.b = 0.4;
  sc.upper.type = "walk";
  sc.upper.a = 0.2;
  sc.upper.b = 0.4;
  if (with_jumps) {
    sc.lower.d = -0.1;
    sc.upper.d = 0.1;
    sc.lower.right_jumps = {{3, -0.45}, {7, 0.25}, {11, -0.6}};
    sc.upper.right_jumps = {{5, 0.4}, {9, -0.25}, {13, 0.5}};
    sc.forcing.right_jumps = {{4, -0.3}, {10, 0.2}};
    sc.forcing.left_jumps = {{6, 0.15}, {12, -0.25}};
  }
  return sc;
}

Check c8_penalization_sweep() {
  Check c;
  const auto start = std::chrono::steady_clock::now();
  const std::vector<int> n_list{1, 2, 4, 8, 16, 32, 64, 128, 256};

  const MaterializedScenario m = materialize(reference_sweep_scenario(true));
  const ConvergenceTable t = convergence_report(m.tree, m.terminal, m.gen, m.forcing, m.lower,
                                                m.upper, n_list, m.p);
  double prev_err[3] = {1e300, 1e300, 1e300};
  for (size_t i = 0; i < t.rows.size(); ++i) {
    const ConvergenceRow& r = t.rows[i];
    c.require(r.sandwich_ok, "sandwich violated at n=" + std::to_string(r.n));
    c.require(r.monotone_ok, "scheme monotonicity violated at n=" + std::to_string(r.n));
    const int s = i % 3;  // upper, lower, bsde
    c.require(r.sup_err <= prev_err[s] + 1e-12,
              r.scheme + " sup error grew at n=" + std::to_string(r.n));
    prev_err[s] = r.sup_err;
  }

  const MaterializedScenario ms = materialize(reference_sweep_scenario(false));
  const TwoBarrierSolution ref =
      solve_clamped(ms.tree, ms.terminal, ms.gen, ms.forcing, ms.lower, ms.upper, false);
  double final_err = 0.0;
  {
    const PenalizedSolution up =
        solve_upper_penalized(ms.tree, ms.terminal, ms.gen, ms.forcing, ms.lower, ms.upper, 4096);
    const PenalizedSolution lo =
        solve_lower_penalized(ms.tree, ms.terminal, ms.gen, ms.forcing, ms.lower, ms.upper, 4096);
    const PenalizedSolution mid =
        solve_bsde_penalized(ms.tree, ms.terminal, ms.gen, ms.forcing, ms.lower, ms.upper, 4096);
    final_err = std::max({sup_distance(up.y, ref.y), sup_distance(lo.y, ref.y),
                          sup_distance(mid.y, ref.y)});
  }
  c.require(final_err <= 1e-2, "error at n=4096 is " + fmt(final_err));
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  c.require(secs < 120.0, "runtime " + fmt(secs) + " s");
  c.note("error at n=4096: " + fmt(final_err) + ", " + fmt(secs) + " s");
  return c;
}

Check c9_gamma2_gating() {
  Check c;
  const std::vector<int> n_list{1, 4, 16, 64, 256, 1024, 4096};
  const MaterializedScenario ms = materialize(reference_sweep_scenario(false));
  const ConvergenceTable smooth = convergence_report(ms.tree, ms.terminal, ms.gen, ms.forcing,
                                                     ms.lower, ms.upper, n_list, ms.p);
  c.require(smooth.left_jumps_absent_net, "smooth scenario flagged as jumping");
  double prev_g2 = 1e300, last_sup = 1e300;
  for (size_t i = 0; i < smooth.rows.size(); i += 3) {  // upper-scheme rows
    const ConvergenceRow& r = smooth.rows[i];
    c.require(r.h_err_g2 <= prev_g2 + 1e-12, "gamma=2 column grew at n=" + std::to_string(r.n));
    prev_g2 = r.h_err_g2;
    last_sup = r.sup_err;
  }
  c.require(last_sup <= 1e-2, "sup error at n=4096 is " + fmt(last_sup));

  const MaterializedScenario mj = materialize(reference_sweep_scenario(true));
  const ConvergenceTable jumpy =
      convergence_report(mj.tree, mj.terminal, mj.gen, mj.forcing, mj.lower, mj.upper, {4}, mj.p);
  c.require(!jumpy.left_jumps_absent_net, "jumpy scenario not flagged");
  c.note("smooth sup err " + fmt(last_sup) + ", jump flag works");
  return c;
}

Check c10_arrays() {
  Check c;
  const BinomialTree tree{TimeGrid(1.0, 10)};
  std::mt19937_64 rng(1010);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    TreeProcess l = TreeProcess::constant(tree, 0.0);
    TreeProcess up = TreeProcess::constant(tree, 2.0);
    TreeProcess v = TreeProcess::constant(tree, 0.0);
    for (int k = 0; k < 10; ++k) {
      if (u(rng) < 0.5)
        for (int j = 0; j <= k; ++j) l.post[k][j] = l.val[k][j] - 1.2 * u(rng);
      if (u(rng) < 0.5)
        for (int j = 0; j <= k; ++j) up.post[k][j] = up.val[k][j] + 1.2 * u(rng);
      if (u(rng) < 0.3)
        for (int j = 0; j <= k; ++j) v.post[k][j] = v.val[k][j] + 1.2 * (u(rng) - 0.5);
    }
    NodeMask prev_down, prev_up;
    for (int n = 1; n <= 8; ++n) {
      const StoppingArray down = exhaust_down_jumps(tree, l, v, n);
      const StoppingArray upa = exhaust_up_jumps(tree, up, v, n);
      for (int k = 0; k < 10; ++k)
        for (int j = 0; j <= k; ++j) {
          const bool qd = l.right_jump(k, j) < -1.0 / n || v.right_jump(k, j) < -1.0 / n;
          const bool qu = up.right_jump(k, j) > 1.0 / n || v.right_jump(k, j) > 1.0 / n;
          if (static_cast<bool>(down.member[k][j]) != qd)
            c.require(false, "down coverage mismatch");
          if (static_cast<bool>(upa.member[k][j]) != qu) c.require(false, "up coverage mismatch");
          if (n > 1 && prev_down[k][j] && !down.member[k][j])
            c.require(false, "down nesting broken");
          if (n > 1 && prev_up[k][j] && !upa.member[k][j]) c.require(false, "up nesting broken");
        }
      const MergedGrid g = merge_jump_grids(down, upa);
      for (int k = 0; k <= 10; ++k)
        for (int j = 0; j <= k; ++j)
          if (g.member[k][j] != (down.member[k][j] | upa.member[k][j]))
            c.require(false, "merged union identity broken");
      prev_down = down.member;
      prev_up = upa.member;
    }
  }
  c.note("coverage, nesting and union identity exact");
  return c;
}

Check c11_moment_bound() {
  Check c;
  const BinomialTree tree{TimeGrid(1.0, 6)};
  std::mt19937_64 rng(1111);
  std::uniform_real_distribution<double> u(-4.0, 4.0);
  for (int trial = 0; trial < 100; ++trial) {
    TreeProcess x = TreeProcess::constant(tree, 0.0);
    for (int k = 0; k <= 6; ++k)
      for (int j = 0; j <= k; ++j) {
        x.val[k][j] = u(rng);
        x.post[k][j] = u(rng);
      }
    for (int j = 0; j <= 6; ++j) x.post[6][j] = x.val[6][j];
    for (double q : {0.25, 0.5, 0.75}) {
      const MomentBoundCheck chk = classd_sup_moment_bound(tree, x, q);
      if (!chk.ok)
        c.require(false, "bound failed: lhs " + fmt(chk.lhs) + " rhs " + fmt(chk.rhs) + " q " +
                             fmt(q));
    }
  }
  c.note("bound holds for q in {0.25, 0.5, 0.75}");
  return c;
}

Check c12_determinism() {
  Check c;
  const Scenario sc = reference_sweep_scenario(true);
  RunConfig cfg;
  cfg.cmd = Command::kSweep;
  cfg.n_list = {1, 2, 4, 8, 16, 32, 64, 128, 256};
  const ResultBundle a = run(sc, cfg);
  const ResultBundle b = run(sc, cfg);
  c.require(a.csv == b.csv, "CSV payloads differ between reruns");
  c.require(a.payload_json == b.payload_json, "JSON payloads differ between reruns");
  c.note("byte-identical CSV across reruns (" + std::to_string(a.csv.size()) + " bytes)");
  return c;
}

}  // namespace

int main() {
  struct Entry {
    const char* name;
    std::function<Check()> fn;
  };
  const std::vector<Entry> criteria{
      {"martingale representation exactness", c1_martingale_representation},
      {"optimal-stopping enumeration oracle", c2_snell_oracle},
      {"two-player game oracle equivalence", c3_dynkin_equivalence},
      {"solver route agreement", c4_route_agreement},
      {"jump identities", c5_jump_identities},
      {"push minimality", c6_minimality},
      {"comparison of ordered scenarios", c7_comparison},
      {"penalization monotonicity and sandwich", c8_penalization_sweep},
      {"gamma=2 convergence gating", c9_gamma2_gating},
      {"stopping-array construction", c10_arrays},
      {"small-exponent moment bound", c11_moment_bound},
      {"sweep determinism", c12_determinism},
  };

  int failures = 0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Check c;
    try {
      c = criteria[i].fn();
    } catch (const std::exception& e) {
      c.ok = false;
      c.detail = std::string("exception: ") + e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("[%s] criterion %2zu: %s (%.2f s)%s%s\n", c.ok ? "PASS" : "FAIL", i + 1,
                criteria[i].name, secs, c.detail.empty() ? "" : " -- ", c.detail.c_str());
    if (!c.ok) ++failures;
  }
  return failures;
}
