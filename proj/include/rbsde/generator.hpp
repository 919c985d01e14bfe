#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>

namespace rbsde {

/// Sub-linear growth of f in z around z = 0:
/// |f(t,y,z) - f(t,y,0)| <= gamma * (g0 + |y| + |z|)^alpha.
struct ZGrowth {
  double gamma = 0.0;
  double alpha = 0.0;  // in [0, 1)
  double g0 = 0.0;     // non-negative bound process, constant here
};

/// Driver f(t, y, z) together with its declared structural constants:
/// `lipschitz_z` bounds |f(t,y,z)-f(t,y,z')| / |z-z'| and `monotone_y`
/// bounds (y-y')(f(t,y,z)-f(t,y',z)) / (y-y')^2. The constants are
/// declarations, spot-checkable by sampling (verify_assumptions).
struct Generator {
  std::string name = "zero";
  double lipschitz_z = 0.0;
  double monotone_y = 0.0;
  std::optional<ZGrowth> zgrowth;
  std::function<double(double, double, double)> f = [](double, double, double) { return 0.0; };

  double operator()(double t, double y, double z) const { return f(t, y, z); }
  bool depends_on_z() const { return lipschitz_z > 0.0; }

  static Generator zero();
  /// f = a + b y + c z, monotone_y = b, lipschitz_z = |c|.
  static Generator linear(double a, double b, double c);
  /// f = a - b y^3 + c z with b >= 0, monotone_y = 0, lipschitz_z = |c|.
  static Generator cubic_monotone(double a, double b, double c);
  /// f = a + b y + c sin(z), monotone_y = b, lipschitz_z = |c|.
  static Generator trig_z(double a, double b, double c);
  /// Catalogue lookup used by scenario files.
  static Generator from_config(const std::string& family, const std::map<std::string, double>& p);
};

/// Solves y = a + f(t, y, z) * dt for the unique root. Requires
/// dt * max(0, monotone_y) < 1, which makes y |-> y - f(t,y,z) dt strictly
/// increasing. Bracketing plus bisection down to one ulp.
double implicit_step(double a, double z, double t, double dt, const Generator& gen);

/// Root of y = a + g(y) * dt for a caller-supplied drift (used by the
/// penalized solvers, whose drift includes the penalty terms).
double implicit_flow_root(double a, double dt, const std::function<double(double)>& drift);

struct AssumptionReport {
  double lipschitz_violation = 0.0;
  double monotone_violation = 0.0;
  double zgrowth_violation = 0.0;
  bool pass = false;
};

/// Samples (t, y, y', z, z') tuples and reports the largest observed
/// violation of the declared constants. Pass iff all <= 1e-9.
AssumptionReport verify_assumptions(const Generator& gen, int samples, uint64_t seed);

}  // namespace rbsde
