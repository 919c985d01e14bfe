#include "rbsde/harness.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "rbsde/errors.hpp"
#include "rbsde/norms.hpp"
#include "rbsde/penalization.hpp"
#include "rbsde/reflected_two.hpp"

namespace rbsde {

using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

json field_to_json(const LevelField& f) {
  json out = json::array();
  for (const auto& lv : f) out.push_back(lv);
  return out;
}

json tree_process_to_json(const TreeProcess& x) {
  json out;
  out["value"] = field_to_json(x.val);
  out["post"] = field_to_json(x.post);
  return out;
}

json masses_to_json(const detail::PushMasses& m) {
  json out;
  out["flow"] = field_to_json(m.flow);
  out["jump"] = field_to_json(m.jump);
  return out;
}

json report_to_json(const SolutionReport& r) {
  json out;
  out["dynamics"] = r.dynamics;
  out["flow_lower_identity"] = r.flow_lower_identity;
  out["flow_upper_identity"] = r.flow_upper_identity;
  out["jump_lower_identity"] = r.jump_lower_identity;
  out["jump_upper_identity"] = r.jump_upper_identity;
  out["minimality_lower"] = r.minimality_lower;
  out["minimality_upper"] = r.minimality_upper;
  out["barrier_violation"] = r.barrier_violation;
  out["common_mass"] = r.common_mass;
  out["driver_moment"] = r.driver_moment;
  return out;
}

json solution_to_json(const TwoBarrierSolution& sol) {
  json out;
  out["y"] = tree_process_to_json(sol.y);
  out["z"] = field_to_json(sol.z);
  out["r_plus"] = masses_to_json(sol.rp);
  out["r_minus"] = masses_to_json(sol.rm);
  out["y0"] = sol.y.val[0][0];
  out["r_plus_max"] = sol.rp.total_max();
  out["r_minus_max"] = sol.rm.total_max();
  if (sol.report) out["report"] = report_to_json(*sol.report);
  return out;
}

double solution_scale(const TwoBarrierSolution& sol) {
  double s = 1.0;
  for (const auto& lv : sol.y.val)
    for (double v : lv) s = std::max(s, std::abs(v));
  return s;
}

}  // namespace

std::string ResultBundle::bundle_json() const {
  json j;
  j["payload"] = json::parse(payload_json);
  j["metadata"] = json::parse(metadata_json);
  return j.dump(2);
}

ResultBundle run(const Scenario& sc_in, const RunConfig& cfg) {
  Scenario sc = sc_in;
  if (cfg.steps_override > 0) sc.steps = cfg.steps_override;
  if (cfg.p_override > 0) sc.p = cfg.p_override;
  if (cfg.seed_override >= 0) sc.seed = static_cast<uint64_t>(cfg.seed_override);

  const auto t0 = std::chrono::steady_clock::now();
  MaterializedScenario m = materialize(sc);

  ResultBundle bundle;
  json payload;

  switch (cfg.cmd) {
    case Command::kSolve: {
      TwoBarrierSolution sol = solve_clamped(m.tree, m.terminal, m.gen, m.forcing, m.lower,
                                             m.upper, /*attach_report=*/true, m.p);
      payload = solution_to_json(sol);
      break;
    }
    case Command::kDecouple: {
      DecouplingTrace trace;
      TwoBarrierSolution sol = solve_decoupled(m.tree, m.terminal, m.gen, m.forcing, m.lower,
                                               m.upper, cfg.max_iter, cfg.tol, &trace);
      sol.report =
          verify_solution(m.tree, sol, m.terminal, m.gen, m.forcing, m.lower, m.upper, m.p);
      payload = solution_to_json(sol);
      payload["trace"] = {{"iterations", trace.iterations},
                          {"monotone_y1", trace.monotone_y1},
                          {"monotone_y2", trace.monotone_y2},
                          {"increments", trace.increments}};
      break;
    }
    case Command::kPicard: {
      PicardTrace trace;
      PicardOptions opt;
      opt.max_iter = cfg.max_iter;
      opt.tol = cfg.tol;
      TwoBarrierSolution sol =
          picard_solve(m.tree, m.terminal, m.gen, m.forcing, m.lower, m.upper, opt, &trace);
      sol.report =
          verify_solution(m.tree, sol, m.terminal, m.gen, m.forcing, m.lower, m.upper, m.p);
      payload = solution_to_json(sol);
      payload["trace"] = {{"outer_iterations", trace.outer_iterations},
                          {"subintervals", trace.subintervals},
                          {"increments", trace.increments}};
      break;
    }
    case Command::kPenalize: {
      const int n = cfg.n_list.empty() ? 1 : cfg.n_list.front();
      PenalizedSolution sol;
      if (cfg.scheme == "upper")
        sol = solve_upper_penalized(m.tree, m.terminal, m.gen, m.forcing, m.lower, m.upper, n);
      else if (cfg.scheme == "lower")
        sol = solve_lower_penalized(m.tree, m.terminal, m.gen, m.forcing, m.lower, m.upper, n);
      else if (cfg.scheme == "bsde")
        sol = solve_bsde_penalized(m.tree, m.terminal, m.gen, m.forcing, m.lower, m.upper, n);
      else
        throw ScenarioError("penalize: unknown scheme " + cfg.scheme);
      payload["scheme"] = scheme_name(sol.scheme);
      payload["n"] = sol.level;
      payload["y"] = tree_process_to_json(sol.y);
      payload["z"] = field_to_json(sol.z);
      payload["k"] = masses_to_json(sol.k);
      payload["a"] = masses_to_json(sol.a);
      payload["y0"] = sol.y.val[0][0];
      payload["shifted_minimality"] =
          penalized_shifted_minimality(m.tree, sol, m.lower, m.upper);
      break;
    }
    case Command::kVerify: {
      TwoBarrierSolution sol = solve_clamped(m.tree, m.terminal, m.gen, m.forcing, m.lower,
                                             m.upper, /*attach_report=*/true, m.p);
      payload["report"] = report_to_json(*sol.report);
      payload["y0"] = sol.y.val[0][0];
      const double threshold = 1e-10 * solution_scale(sol);
      payload["threshold"] = threshold;
      bundle.verification_failed = sol.report->worst() > threshold;
      payload["pass"] = !bundle.verification_failed;
      break;
    }
    case Command::kNorms: {
      TwoBarrierSolution sol = solve_clamped(m.tree, m.terminal, m.gen, m.forcing, m.lower,
                                             m.upper, /*attach_report=*/false);
      const double p = std::max(m.p, 1.0);
      json rows = json::array();
      rows.push_back({{"process", "Y"},
                      {"sp", sp_norm(m.tree, sol.y, p)},
                      {"classd", classd_norm(m.tree, sol.y)}});
      rows.push_back({{"process", "Z"}, {"hp", hp_norm(m.tree, sol.z, m.p)}});
      rows.push_back({{"process", "V"}, {"vp", vp_norm(m.tree, m.forcing, p)}});
      payload["norms"] = rows;
      const TreeProcess witness = make_sandwich_witness(m.lower, m.upper);
      const auto wrep = sandwich_witness_check(m.tree, witness, m.lower, m.upper, m.gen, p);
      payload["witness"] = {{"sandwich_ok", wrep.sandwich_ok},
                            {"x_norm", wrep.x_norm},
                            {"driver_moment", wrep.driver_moment},
                            {"fv_part_moment", wrep.fv_part_moment}};
      char buf[256];
      std::string csv = "process,sp,hp,vp,classd\n";
      std::snprintf(buf, sizeof buf, "Y,%.17g,,,%.17g\n", sp_norm(m.tree, sol.y, p),
                    classd_norm(m.tree, sol.y));
      csv += buf;
      std::snprintf(buf, sizeof buf, "Z,,%.17g,,\n", hp_norm(m.tree, sol.z, m.p));
      csv += buf;
      std::snprintf(buf, sizeof buf, "V,,,%.17g,\n", vp_norm(m.tree, m.forcing, p));
      csv += buf;
      bundle.csv = csv;
      break;
    }
    case Command::kSweep: {
      ConvergenceTable table = convergence_report(m.tree, m.terminal, m.gen, m.forcing, m.lower,
                                                  m.upper, cfg.n_list, m.p);
      bundle.csv = table.to_csv();
      payload["left_jumps_absent_plus"] = table.left_jumps_absent_plus;
      payload["left_jumps_absent_minus"] = table.left_jumps_absent_minus;
      payload["left_jumps_absent_net"] = table.left_jumps_absent_net;
      payload["rows"] = table.rows.size();
      break;
    }
  }

  const auto t1 = std::chrono::steady_clock::now();
  json meta;
  meta["version"] = kVersion;
  meta["seed"] = sc.seed;
  meta["wall_ms"] = std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count();
  bundle.payload_json = payload.dump(2);
  bundle.metadata_json = meta.dump(2);
  return bundle;
}

void persist(const ResultBundle& bundle, const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  {
    std::ofstream out(fs::path(out_dir) / "bundle.json");
    out << bundle.bundle_json() << "\n";
  }
  if (!bundle.csv.empty()) {
    std::ofstream out(fs::path(out_dir) / "table.csv");
    out << bundle.csv;
  }
}

}  // namespace rbsde
