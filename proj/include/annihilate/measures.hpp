#pragma once

#include <Eigen/Core>

#include <iosfwd>
#include <vector>

#include "annihilate/dynamics.hpp"

namespace annihilate {

struct Atom {
  double position = 0.0;
  double weight = 0.0;
};

/// Nonnegative finite sum of Dirac masses. Atoms need not be distinct or sorted.
struct WeightedAtoms {
  std::vector<Atom> atoms;

  double mass() const;
  bool empty() const { return atoms.empty(); }
};

/// Signed sum of Dirac masses.
struct SignedAtoms {
  std::vector<Atom> atoms;

  double total_variation() const;
  double net_mass() const;
};

/// Pair (mu+, mu-) of nonnegative measures with total mass 1 and mass_plus = mu+(R).
struct EmpiricalPair {
  WeightedAtoms mu_plus;
  WeightedAtoms mu_minus;
  double mass_plus = 0.0;
};

struct EmpiricalMeasures {
  EmpiricalPair mu;           // species membership by initial charge
  SignedAtoms kappa;          // current charges
  WeightedAtoms kappa_plus;   // [kappa]_+
  WeightedAtoms kappa_minus;  // [kappa]_-
};

EmpiricalMeasures from_state(const ParticleState& state);

/// Squared 2-Wasserstein distance (unnormalised quadratic cost) by monotone
/// matching. Throws std::invalid_argument if the masses differ by more than
/// mass_tol * max(1, mass).
double wasserstein2_squared(const WeightedAtoms& a, const WeightedAtoms& b, double mass_tol = 1e-12);
double wasserstein2(const WeightedAtoms& a, const WeightedAtoms& b, double mass_tol = 1e-12);

/// sqrt(W2^2(a+, b+) + W2^2(a-, b-)). Throws if the mass classes differ.
double pair_distance_upper(const EmpiricalPair& a, const EmpiricalPair& b);

/// sqrt((1/n) sum_i (x_i(s) - x_i(t))^2). Throws if sizes or initial charges differ.
double coupling_bound(const ParticleState& s, const ParticleState& t);

/// Boundaries a_0 <= ... <= a_{2L}. Interval k = [a_{k-1}, a_k], k = 1..2L,
/// holds positive particles for odd k and negative ones for even k.
struct BlockStructure {
  std::vector<double> boundaries;
  int L = 0;
};

/// Minimal block structure of the active particles by the midpoint
/// construction; L = 0 if no particle is active.
BlockStructure block_structure(const ParticleState& state);

/// True iff every active particle lies in an interval of its own sign.
bool satisfies_separation(const ParticleState& state, const BlockStructure& blocks);

/// sup supp a <= inf supp b. Empty measures are separated from anything.
bool supports_separated(const WeightedAtoms& a, const WeightedAtoms& b);

/// Symmetric matrix of pair_distance_upper between the given pairs.
Eigen::MatrixXd distance_matrix(const std::vector<EmpiricalPair>& pairs);

/// CSV: position,weight,species with species in {mu_plus, mu_minus, kappa_plus, kappa_minus}.
void write_measures_csv(std::ostream& os, const EmpiricalMeasures& m);

/// CSV: header "t,t=<t_0>,...", then one row per time starting with that time.
void write_distance_matrix_csv(std::ostream& os, const std::vector<double>& times, const Eigen::MatrixXd& d);

}  // namespace annihilate
