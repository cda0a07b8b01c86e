#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace annihilate {

// Interaction potential families. Each family is a small value type with
// scalar-templated value/derivative so the same kernel can be evaluated in
// double or long double (the latter is used by finite-difference oracles).

/// V(r) = -log|r|, V'(r) = -1/r.
struct LogRepulsive {
  template <typename Scalar>
  Scalar value(Scalar r) const {
    using std::abs, std::log;
    return -log(abs(r));
  }
  template <typename Scalar>
  Scalar prime(Scalar r) const {
    return r == Scalar(0) ? Scalar(0) : Scalar(-1) / r;
  }
};

/// Dislocation-wall potential V(r) = r coth r - log|2 sinh r|.
///
/// Written as 2a/expm1(2a) - log(1 - e^{-2a}) with a = |r|, which has no
/// cancellation on (0, inf). Below |r| = 1e-4 the series
/// 1 - log 2 - log|r| + r^2/6 - r^4/60 is used instead.
struct WallRepulsive {
  static constexpr double series_cutoff = 1e-4;

  template <typename Scalar>
  Scalar value(Scalar r) const {
    using std::abs, std::log, std::expm1, std::exp, std::log1p;
    const Scalar a = abs(r);
    if (a < Scalar(series_cutoff)) {
      const Scalar a2 = a * a;
      return Scalar(1) - log(Scalar(2)) - log(a) + a2 / Scalar(6) - a2 * a2 / Scalar(60);
    }
    const Scalar head = Scalar(2) * a / expm1(Scalar(2) * a);
    if (a > Scalar(0.5)) return head - log1p(-exp(Scalar(-2) * a));
    return head - log(-expm1(Scalar(-2) * a));
  }

  /// V'(r) = -r / sinh^2 r, evaluated as -4 r e^{-2|r|} / (1 - e^{-2|r|})^2.
  template <typename Scalar>
  Scalar prime(Scalar r) const {
    using std::abs, std::exp, std::expm1;
    if (r == Scalar(0)) return Scalar(0);
    const Scalar a = abs(r);
    const Scalar s = -expm1(Scalar(-2) * a);
    return Scalar(-4) * r * exp(Scalar(-2) * a) / (s * s);
  }
};

/// W(r) = 1/2 log(r^2 + delta^2), a regularisation of +log|r|.
struct RegularizedLogAttractive {
  double delta = 1.0;

  template <typename Scalar>
  Scalar value(Scalar r) const {
    using std::log;
    const Scalar d = Scalar(delta);
    return log(r * r + d * d) / Scalar(2);
  }
  template <typename Scalar>
  Scalar prime(Scalar r) const {
    const Scalar d = Scalar(delta);
    return r / (r * r + d * d);
  }
};

struct ZeroKernel {
  template <typename Scalar>
  Scalar value(Scalar) const {
    return Scalar(0);
  }
  template <typename Scalar>
  Scalar prime(Scalar) const {
    return Scalar(0);
  }
};

using KernelFamily = std::variant<LogRepulsive, WallRepulsive, RegularizedLogAttractive, ZeroKernel>;

enum class KernelRole { V, W };

/// A kernel family together with the role (same-sign V or opposite-sign W)
/// it plays. Construction does not enforce role admissibility so that
/// invalid pairs can still be handed to validate_assumptions; use
/// KernelPair::checked for the enforcing path.
struct KernelSpec {
  KernelFamily family;
  KernelRole role = KernelRole::V;

  static KernelSpec log_repulsive(KernelRole role = KernelRole::V) { return {LogRepulsive{}, role}; }
  static KernelSpec wall_repulsive(KernelRole role = KernelRole::V) { return {WallRepulsive{}, role}; }
  static KernelSpec regularized_log(double delta, KernelRole role = KernelRole::W);
  static KernelSpec zero(KernelRole role = KernelRole::W) { return {ZeroKernel{}, role}; }

  /// True for families with V(r) -> +inf as r -> 0.
  bool singular_at_zero() const;

  /// Role admissibility: V-kernels singular at 0, W-kernels finite and C^1.
  bool admissible() const;

  /// Config-file spelling: "log", "wall", "reglog(<delta>)", "zero".
  std::string name() const;
};

/// Parses "log" | "wall" | "reglog(delta)" | "zero". Throws std::invalid_argument.
KernelSpec parse_kernel(const std::string& text, KernelRole role);

/// Kernel value. Throws std::domain_error at r = 0 for singular families.
template <typename Scalar>
Scalar eval(const KernelSpec& kernel, Scalar r) {
  if (r == Scalar(0) && kernel.singular_at_zero())
    throw std::domain_error("kernel " + kernel.name() + " is singular at r = 0");
  return std::visit([r](const auto& k) { return k.template value<Scalar>(r); }, kernel.family);
}

/// Kernel derivative with the convention K'(0) = 0 for every family.
template <typename Scalar>
Scalar eval_prime(const KernelSpec& kernel, Scalar r) {
  return std::visit([r](const auto& k) { return k.template prime<Scalar>(r); }, kernel.family);
}

/// V/W pair with the constants derived from it.
///
/// bound_rVprime / bound_rWprime are sup|r K'(r)|, taken as the maximum of a
/// dense log-spaced grid and the known limits at 0 and infinity.
/// growth_constant is C with |V| + |W| <= C(|log|r|| + 1), obtained by
/// integrating the r K' bounds from r = 1. quadratic_constant is C with
/// (V + W)(r) >= -C r^2, estimated by grid maximisation and local refinement.
struct KernelPair {
  KernelSpec V;
  KernelSpec W;
  double bound_rVprime = 0.0;
  double bound_rWprime = 0.0;
  double bound_W0 = 0.0;
  double growth_constant = 0.0;
  double quadratic_constant = 0.0;

  /// Log repulsion with W = 0.
  KernelPair() : KernelPair(KernelSpec::log_repulsive(), KernelSpec::zero()) {}
  KernelPair(KernelSpec v, KernelSpec w);

  /// As the constructor, but throws std::invalid_argument if either kernel
  /// is not admissible in its role.
  static KernelPair checked(KernelSpec v, KernelSpec w);

  bool admissible() const { return V.admissible() && W.admissible(); }
};

struct ValidationClause {
  std::string name;
  bool pass = false;
  double value = 0.0;
  std::string detail;
};

struct ValidationReport {
  std::vector<ValidationClause> clauses;

  bool all_pass() const;
  const ValidationClause& clause(const std::string& name) const;
};

/// Default sample grid: +-r for 400 log-spaced |r| in [1e-8, 1e4].
std::vector<double> default_sample_grid();

/// Machine-checks the standing kernel assumptions on a sample grid.
/// Failures are reported as data, never thrown.
ValidationReport validate_assumptions(const KernelPair& pair, std::span<const double> sample_grid);

}  // namespace annihilate
