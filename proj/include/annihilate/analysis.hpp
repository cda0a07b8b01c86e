#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "annihilate/continuum.hpp"
#include "annihilate/dynamics.hpp"
#include "annihilate/initial_data.hpp"
#include "annihilate/measures.hpp"

namespace annihilate {

struct CheckContext {
  int n = 0;
  double T = 0.0;
  std::string scenario;
};

/// slack = bound - measured; pass iff slack >= -tolerance.
struct CheckReport {
  std::string name;
  bool pass = false;
  double measured = 0.0;
  double bound = 0.0;
  double slack = 0.0;
  double tolerance = 0.0;
  CheckContext context;
  std::string detail;

  static CheckReport make(std::string name, double measured, double bound, double tolerance, CheckContext ctx,
                          std::string detail = {});
};

CheckContext context_of(const Trajectory& traj, std::string scenario = {});

/// Largest energy increase between consecutive samples with no collision in between.
CheckReport check_energy_monotone(const Trajectory& traj, double tolerance, std::string scenario = {});

/// Constant C of E(t) - E(0) + (1/n) int_0^t |xdot|^2 <= C (t + M2(0) + 1).
double edi_constant(const KernelPair& pair);
CheckReport check_edi(const Trajectory& traj, const KernelPair& pair, double tolerance, std::string scenario = {});

/// Per-event jump of the energy against
/// (Cq/n)(gamma M2(t_k) + sum_{i in Gamma_k} x_i^2) + gamma |W(0)| / (2 n^2).
CheckReport check_jump_bound(const Trajectory& traj, const KernelPair& pair, double tolerance,
                             std::string scenario = {});

/// Rate in M2(t) <= M2(0) + C t.
double m2_rate(const KernelPair& pair);
/// C4 in M4(t) <= M4(0) + C4 t (M2(0) + t).
double m4_constant(const KernelPair& pair);
/// Two reports, "moments_m2" and "moments_m4".
std::vector<CheckReport> check_moments(const Trajectory& traj, const KernelPair& pair, double tolerance = 1e-8,
                                       std::string scenario = {});

/// For `pairs` random sample pairs s < t checks
/// pair_distance_upper^2 <= coupling_bound^2 <= (t - s)(D(t) - D(s)).
/// measured is the worst violation of either inequality (<= 0 when both hold).
CheckReport check_metric_bound(const Trajectory& traj, int pairs = 100, std::uint64_t seed = 0,
                               double tolerance = 1e-8, std::string scenario = {});

/// Largest increase of the block count L between consecutive samples (exact).
CheckReport check_block_monotone(const Trajectory& traj, std::string scenario = {});

/// Even gamma_k, valid pairings, total bound, and bitwise-frozen positions.
CheckReport check_events(const Trajectory& traj, std::string scenario = {});

/// Same-sign active gaps stay positive and same-sign order never changes.
CheckReport check_same_sign_separation(const Trajectory& traj, std::string scenario = {});

/// mu+ mass constant and |kappa|(R) non-increasing.
CheckReport check_mass(const Trajectory& traj, std::string scenario = {});

// ---------------------------------------------------------------------------
// Weak form.

/// phi(t, x) = eta(t) (1 + tilt z) B(z), z = (x - centre)/width, with eta a
/// C^1 polynomial bump on [t0, t1] (eta = 1 if t0 == t1) and B the cubic B-spline.
struct TestFunction {
  double t0 = 0.0, t1 = 0.0;
  double centre = 0.0, width = 1.0, tilt = 0.0;

  double eta(double t) const;
  double eta_dot(double t) const;
  double space(double x) const;
  double space_prime(double x) const;

  double value(double t, double x) const { return eta(t) * space(x); }
  double dt(double t, double x) const { return eta_dot(t) * space(x); }
  double dx(double t, double x) const { return eta(t) * space_prime(x); }
};

/// LeftHeld integrates the time-derivative term exactly along positions held
/// at the left sample and uses the left-point rule for the interaction terms
/// (first order in the stride). Trapezoid uses the trapezoid rule throughout.
enum class TimeQuadrature { LeftHeld, Trapezoid };

/// Residual of the weak form for one species (initial-charge membership):
///   int phi(T) dmu(T) - int phi(0) dmu(0) - int int d_t phi dmu dt
///   + int [ 1/2 sum_{[k]_s x [k]_s} (phi'(x) - phi'(y)) V'(x - y) + sum_{[k]_s x [k]_-s} phi'(x) W'(x - y) ] dt.
std::vector<double> weak_form_residuals(const Trajectory& traj, const KernelPair& pair,
                                        const std::vector<TestFunction>& fns, Species species,
                                        TimeQuadrature quad = TimeQuadrature::LeftHeld);

/// measured = max |residual| over functions and both species; bound = 0.
CheckReport weak_form_residual(const Trajectory& traj, const KernelPair& pair, const std::vector<TestFunction>& fns,
                               double tolerance, TimeQuadrature quad = TimeQuadrature::LeftHeld,
                               std::string scenario = {});

/// Five test functions spread over [x_lo, x_hi] x [0, T].
std::vector<TestFunction> default_test_functions(double T, double x_lo, double x_hi);

// ---------------------------------------------------------------------------
// Convergence study.

enum class Reference { SelfDoubling, Continuum };

Reference parse_reference(const std::string& text);
std::string reference_name(Reference r);

struct ConvergenceSetup {
  std::string name;
  std::vector<DensityBlock> blocks;
  KernelPair pair;
  SimConfig config;  // T and sample_times define the comparison times
  std::uint64_t seed = 0;
  Grid grid;         // continuum reference only
  double cfl = 0.5;
};

struct ConvergenceRow {
  int n = 0;
  double sup_distance = 0.0;
  double ratio = std::numeric_limits<double>::quiet_NaN();
  double annihilated_mass = 0.0;  // (annihilated particles)/n at T
};

struct ConvergenceTable {
  Reference reference = Reference::SelfDoubling;
  std::vector<ConvergenceRow> rows;
  /// |kappa| mass lost by the continuum solution on [0, T] (NaN unless computed).
  double continuum_kappa_loss = std::numeric_limits<double>::quiet_NaN();

  bool strictly_decreasing() const;
};

/// Runs the particle system for every n (and 2n for self-doubling) and
/// records sup over comparison times of pair_distance_upper against the
/// reference. Independent runs are spread over `jobs` threads; the result
/// does not depend on `jobs`.
ConvergenceTable convergence_study(const ConvergenceSetup& setup, std::vector<int> n_list, Reference reference,
                                   int jobs = 1);

/// |kappa| mass lost on [0, T] by the continuum solver on the setup grid.
double continuum_kappa_loss(const ConvergenceSetup& setup);

/// CSV: n,sup_distance,ratio,annihilated_mass.
void write_convergence_csv(std::ostream& os, const ConvergenceTable& table);

// ---------------------------------------------------------------------------
// Scenario suite.

struct SuiteScenario {
  std::string name;
  ParticleState initial;
  KernelPair pair;
  SimConfig config;
  bool negative_control = false;
};

/// Ten scenarios covering every kernel family, n from 2 to 400.
std::vector<SuiteScenario> default_suite();

/// Opposite pair integrated with a fixed step far above the stability limit.
SuiteScenario negative_control_scenario();

/// All trajectory checks with their standard tolerances.
std::vector<CheckReport> standard_checks(const Trajectory& traj, const KernelPair& pair, const SimConfig& config,
                                         const std::string& scenario, std::uint64_t seed = 0);

struct SuiteRun {
  std::string name;
  bool negative_control = false;
  Trajectory trajectory;
  std::vector<CheckReport> checks;
};

std::vector<SuiteRun> run_suite(const std::vector<SuiteScenario>& suite, int jobs = 1, std::uint64_t seed = 0);

/// Runs f(i) for i in [0, count) on up to `jobs` threads.
void parallel_for(int count, int jobs, const std::function<void(int)>& f);

}  // namespace annihilate
