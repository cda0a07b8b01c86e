#pragma once

#include <Eigen/Core>

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "annihilate/kernels.hpp"

namespace annihilate {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
using ChargeVector = Eigen::VectorXi;

/// Discrete state (x, b) plus the bookkeeping of the annihilation rule.
///
/// Charges follow b_i(t) = b0_i H(tau_i - t) with H(0) = 0, so a particle
/// annihilated at tau_i already carries charge 0 at t = tau_i. Annihilated
/// particles stay in the arrays with their position frozen.
struct ParticleState {
  Eigen::VectorXd x;
  ChargeVector b;
  ChargeVector b0;
  Eigen::VectorXd tau;
  double t = 0.0;

  /// Fresh state at t = 0 with b = b0 and every tau = +infinity.
  static ParticleState initial(Eigen::VectorXd positions, ChargeVector charges);

  Eigen::Index size() const { return x.size(); }
  bool active(Eigen::Index i) const { return b[i] != 0; }
  Eigen::Index active_count() const;
};

/// Throws std::invalid_argument unless the state is a valid initial datum:
/// charges all +-1 and positions strictly increasing.
void require_initial_datum(const ParticleState& state);

struct CollisionEvent {
  double t = 0.0;
  std::vector<int> indices;                 // Gamma_k, ascending
  std::vector<std::pair<int, int>> pairs;   // (positive, negative) initial-charge indices
  double energy_before = 0.0;               // E_n(x(t_k); b(t_k-))
  double energy_after = 0.0;                // E_n(x(t_k); b(t_k))
  bool degenerate = false;                  // >2 particles within threshold

  int gamma() const { return static_cast<int>(indices.size()); }
  double jump() const { return energy_after - energy_before; }
};

struct EventLog {
  std::vector<CollisionEvent> events;

  int annihilated_particles() const;
  int annihilated_pairs() const { return annihilated_particles() / 2; }
};

struct SimConfig {
  double T = 1.0;
  double dt_init = 1e-3;
  double dt_min = 1e-14;
  double tol_step = 1e-10;
  double eps_annihilate = 1e-9;
  double eps_bisect = 1e-12;
  /// Record a sample every record_every accepted steps; 0 disables stride sampling.
  int record_every = 1;
  /// Times the integrator lands on exactly and records.
  std::vector<double> sample_times;
  /// Coefficient of the same-sign gap guard dt <= guard_factor n g_min^2 / sup|rV'|.
  double guard_factor = 0.1;
  /// Negative-control mode: if > 0, every step uses this dt with no error
  /// control, no gap guard and no ordering check.
  double fixed_dt = 0.0;
  /// If false, sample and event energies are left as NaN (skips O(n^2) work
  /// per recorded sample in long convergence runs).
  bool track_energy = true;

  /// Throws std::invalid_argument on inconsistent settings.
  void validate() const;
};

struct Sample {
  double t = 0.0;
  ParticleState state;
  double energy = 0.0;
  double dissipation = 0.0;  // (1/n) int_0^t |xdot|^2
  double m2 = 0.0;
  double m4 = 0.0;
};

/// Samples are recorded at t = 0, on the stride, at every requested sample
/// time, at every collision time (post-annihilation, matching the
/// left-continuity convention) and at T.
struct Trajectory {
  std::vector<Sample> samples;
  EventLog events;
  double dissipation_integral = 0.0;
  long accepted_steps = 0;
  long rejected_steps = 0;

  const Sample& front() const { return samples.front(); }
  const Sample& back() const { return samples.back(); }
  /// Sample recorded at exactly time t. Throws std::out_of_range.
  const Sample& at(double t) const;
  /// True if some collision time lies in (t0, t1].
  bool event_in(double t0, double t1) const;
};

struct StepFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Energy, drift and moments (scalar-templated for high-precision oracles).

/// Interaction energy E_n(x; b) = 1/(2n^2) sum_i [sum_{j != i, b_i b_j = 1} V(x_i - x_j)
/// + sum_{b_i b_j = -1} W(x_i - x_j)]; +infinity iff two same-sign active
/// particles coincide.
template <typename Scalar>
Scalar energy(const Vector<Scalar>& x, const ChargeVector& b, const KernelPair& pair) {
  const Eigen::Index n = x.size();
  Scalar sum(0);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (b[i] == 0) continue;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const int s = b[i] * b[j];
      if (s == 0) continue;
      const Scalar r = x[i] - x[j];
      if (s == 1) {
        if (r == Scalar(0)) return std::numeric_limits<Scalar>::infinity();
        sum += eval(pair.V, r);
      } else {
        sum += eval(pair.W, r);
      }
    }
  }
  // Each unordered pair appears twice in the ordered double sum.
  return sum / (Scalar(n) * Scalar(n));
}

inline double energy(const ParticleState& state, const KernelPair& pair) {
  return energy<double>(state.x, state.b, pair);
}

/// Drift v_i = -(1/n) sum_{b_i b_j = 1} V'(x_i - x_j) - (1/n) sum_{b_i b_j = -1} W'(x_i - x_j),
/// i.e. -n grad E_n. Zero for annihilated particles. Throws std::domain_error
/// if two same-sign active particles coincide.
template <typename Scalar>
Vector<Scalar> velocity(const Vector<Scalar>& x, const ChargeVector& b, const KernelPair& pair) {
  const Eigen::Index n = x.size();
  Vector<Scalar> v = Vector<Scalar>::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (b[i] == 0) continue;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const int s = b[i] * b[j];
      if (s == 0) continue;
      const Scalar r = x[i] - x[j];
      if (s == 1 && r == Scalar(0))
        throw std::domain_error("velocity: same-sign particles coincide (infinite energy)");
      const Scalar f = s == 1 ? eval_prime(pair.V, r) : eval_prime(pair.W, r);
      v[i] -= f;
      v[j] += f;
    }
  }
  return v / Scalar(n);
}

Eigen::VectorXd velocity(const ParticleState& state, const KernelPair& pair);

/// M_k(x) = (1/n) sum_i |x_i|^k over all particles, annihilated ones included.
template <typename Scalar>
Scalar moment(const Vector<Scalar>& x, int k) {
  using std::abs, std::pow;
  if (x.size() == 0) return Scalar(0);
  return x.array().abs().pow(Scalar(k)).sum() / Scalar(x.size());
}

/// Restricted to k in {1, 2, 4}; throws std::invalid_argument otherwise.
double moments(const ParticleState& state, int k);

// ---------------------------------------------------------------------------
// Time stepping.

struct StepResult {
  ParticleState state;
  double dt_used = 0.0;
  double error_estimate = 0.0;  // scaled local error, <= 1 when accepted
  double dt_next = 0.0;
  double dissipation = 0.0;     // (1/n) int |xdot|^2 over the step, same stages as the update
  int rejections = 0;
  /// Stage data for dense output over the accepted step.
  std::vector<Eigen::VectorXd> stages;
};

/// One accepted Dormand-Prince 5(4) step starting with dt_try. Local error is
/// measured against tol (1 + |x|) per particle and against tol times the gap
/// for neighbouring opposite-sign pairs. Rejects and shrinks on local error,
/// on the same-sign gap guard and on any same-sign
/// ordering change. Throws StepFailure (with a state dump) if dt would fall
/// below dt_min.
StepResult step(const ParticleState& state, const KernelPair& pair, const SimConfig& config, double dt_try);

/// Positions at t0 + theta * dt from the step's dense output, theta in [0, 1].
Eigen::VectorXd dense_positions(const ParticleState& before, const StepResult& step, double theta);

struct AnnihilationOutcome {
  std::optional<ParticleState> state_at_event;
  std::vector<CollisionEvent> events;
  double dissipation = 0.0;  // accumulated over [t_before, t_event]
};

/// Detects opposite-sign adjacent active pairs whose gap fell to
/// eps_annihilate (or crossed) during an accepted step, locates the first
/// such time to eps_bisect, and annihilates every pair within the threshold
/// there. Clusters are paired greedily from the left. Positions of each
/// annihilated pair are set to their common midpoint and frozen.
AnnihilationOutcome detect_and_annihilate(const ParticleState& before, const StepResult& accepted,
                                          const KernelPair& pair, const SimConfig& config);

/// Annihilates all threshold-close opposite pairs in `state` at its current
/// time. Returns the event (empty indices if none).
CollisionEvent annihilate_close_pairs(ParticleState& state, const KernelPair& pair, double eps_annihilate);

/// Solves the particle problem on [0, T] with the annihilation rule,
/// restarting the integrator with dt_init after each collision time.
Trajectory run(const ParticleState& initial, const KernelPair& pair, const SimConfig& config);

/// Smallest gap between consecutive same-sign active particles (+inf if none).
double min_same_sign_gap(const ParticleState& state);

}  // namespace annihilate
