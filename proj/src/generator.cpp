#include "rbsde/generator.hpp"

#include <cmath>
#include <random>

#include "rbsde/errors.hpp"

namespace rbsde {

Generator Generator::zero() { return Generator{}; }

Generator Generator::linear(double a, double b, double c) {
  Generator g;
  g.name = "linear";
  g.lipschitz_z = std::abs(c);
  g.monotone_y = b;
  g.f = [a, b, c](double, double y, double z) { return a + b * y + c * z; };
  return g;
}

Generator Generator::cubic_monotone(double a, double b, double c) {
  if (b < 0.0) throw ScenarioError("cubic_monotone: damping coefficient must be >= 0");
  Generator g;
  g.name = "cubic_monotone";
  g.lipschitz_z = std::abs(c);
  g.monotone_y = 0.0;
  g.f = [a, b, c](double, double y, double z) { return a - b * y * y * y + c * z; };
  return g;
}

Generator Generator::trig_z(double a, double b, double c) {
  Generator g;
  g.name = "trig_z";
  g.lipschitz_z = std::abs(c);
  g.monotone_y = b;
  g.f = [a, b, c](double, double y, double z) { return a + b * y + c * std::sin(z); };
  return g;
}

Generator Generator::from_config(const std::string& family,
                                 const std::map<std::string, double>& p) {
  auto get = [&p](const std::string& key, double fallback) {
    auto it = p.find(key);
    return it == p.end() ? fallback : it->second;
  };
  const double a = get("a", 0.0), b = get("b", 0.0), c = get("c", 0.0);
  Generator g;
  if (family == "zero")
    g = zero();
  else if (family == "linear")
    g = linear(a, b, c);
  else if (family == "cubic_monotone")
    g = cubic_monotone(a, b, c);
  else if (family == "trig_z")
    g = trig_z(a, b, c);
  else
    throw ScenarioError("unknown generator family: " + family);
  if (p.count("gamma") || p.count("alpha") || p.count("g0")) {
    ZGrowth zg;
    zg.gamma = get("gamma", 0.0);
    zg.alpha = get("alpha", 0.0);
    zg.g0 = get("g0", 0.0);
    if (zg.alpha < 0.0 || zg.alpha >= 1.0) throw ScenarioError("zgrowth: alpha must be in [0,1)");
    if (zg.gamma < 0.0 || zg.g0 < 0.0) throw ScenarioError("zgrowth: gamma, g0 must be >= 0");
    g.zgrowth = zg;
  }
  return g;
}

double implicit_flow_root(double a, double dt, const std::function<double(double)>& drift) {
  const auto psi = [&](double y) { return y - a - dt * drift(y); };
  // Bracket the root; psi is strictly increasing for admissible drifts.
  double lo = a, hi = a;
  const double guess = a + dt * drift(a);
  lo = std::min(lo, guess);
  hi = std::max(hi, guess);
  double width = dt * (std::abs(drift(a)) + 1.0) + 1e-12 * (1.0 + std::abs(a));
  int budget = 128;
  while (psi(lo) > 0.0) {
    lo -= width;
    width *= 2.0;
    if (--budget == 0) throw SolverError("implicit step: failed to bracket root (low side)");
  }
  width = dt * (std::abs(drift(a)) + 1.0) + 1e-12 * (1.0 + std::abs(a));
  while (psi(hi) < 0.0) {
    hi += width;
    width *= 2.0;
    if (--budget == 0) throw SolverError("implicit step: failed to bracket root (high side)");
  }
  // Bisect to one ulp.
  for (int it = 0; it < 200; ++it) {
    const double mid = lo + 0.5 * (hi - lo);
    if (mid <= lo || mid >= hi) break;
    if (psi(mid) <= 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return std::abs(psi(lo)) <= std::abs(psi(hi)) ? lo : hi;
}

double implicit_step(double a, double z, double t, double dt, const Generator& gen) {
  if (dt * std::max(0.0, gen.monotone_y) >= 1.0)
    throw ScenarioError("implicit step: requires dt * max(0, monotone_y) < 1");
  return implicit_flow_root(a, dt, [&](double y) { return gen(t, y, z); });
}

AssumptionReport verify_assumptions(const Generator& gen, int samples, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 3.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  AssumptionReport rep;
  for (int i = 0; i < samples; ++i) {
    const double t = unif(rng);
    const double y = gauss(rng), yp = gauss(rng);
    const double z = gauss(rng), zp = gauss(rng);
    const double lip = std::abs(gen(t, y, z) - gen(t, y, zp)) - gen.lipschitz_z * std::abs(z - zp);
    rep.lipschitz_violation = std::max(rep.lipschitz_violation, lip);
    const double dy = y - yp;
    const double mon = dy * (gen(t, y, z) - gen(t, yp, z)) - gen.monotone_y * dy * dy;
    rep.monotone_violation = std::max(rep.monotone_violation, mon);
    if (gen.zgrowth) {
      const auto& zg = *gen.zgrowth;
      const double grow = std::abs(gen(t, y, z) - gen(t, y, 0.0)) -
                          zg.gamma * std::pow(zg.g0 + std::abs(y) + std::abs(z), zg.alpha);
      rep.zgrowth_violation = std::max(rep.zgrowth_violation, grow);
    }
  }
  rep.pass = rep.lipschitz_violation <= 1e-9 && rep.monotone_violation <= 1e-9 &&
             rep.zgrowth_violation <= 1e-9;
  return rep;
}

}  // namespace rbsde
