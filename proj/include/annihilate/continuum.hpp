#pragma once

#include <Eigen/Core>

#include <iosfwd>
#include <stdexcept>
#include <vector>

#include "annihilate/kernels.hpp"
#include "annihilate/measures.hpp"

namespace annihilate {

struct Grid {
  double x_min = -1.0;
  double x_max = 1.0;
  int cells = 100;

  /// Throws std::invalid_argument unless x_min < x_max and cells >= 2.
  static Grid uniform(double x_min, double x_max, int cells);

  double dx() const { return (x_max - x_min) / cells; }
  double center(int i) const { return x_min + (i + 0.5) * dx(); }
  Eigen::VectorXd centers() const;
};

enum class Species { Plus, Minus };

/// Cell averages of (rho+, rho-) at time t.
struct GridDensityPair {
  Grid grid;
  Eigen::VectorXd rho_plus;
  Eigen::VectorXd rho_minus;
  double t = 0.0;

  static GridDensityPair zero(const Grid& grid);

  Eigen::VectorXd kappa() const { return rho_plus - rho_minus; }
  Eigen::VectorXd kappa_plus() const { return kappa().cwiseMax(0.0); }
  Eigen::VectorXd kappa_minus() const { return (-kappa()).cwiseMax(0.0); }
  double mass(Species s) const;
  double abs_kappa_mass() const;
};

/// Face velocities (cells + 1 entries, boundary faces zero) obtained by
/// averaging the cell-centre fields
///   u(x_i) = -sum_{j != i} [k]_s(x_j) V'(x_i - x_j) dx - sum_j [k]_{-s}(x_j) W'(x_i - x_j) dx.
Eigen::VectorXd force_field(const GridDensityPair& dens, const KernelPair& pair, Species species);

/// Cell-centre velocities (same sums as force_field, before face averaging).
Eigen::VectorXd cell_velocity(const GridDensityPair& dens, const KernelPair& pair, Species species);

struct CflViolation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Largest admissible explicit step, cfl * dx / max|u| (+inf if nothing moves).
double stable_dt(const GridDensityPair& dens, const KernelPair& pair, double cfl = 0.5);

/// One explicit upwind step. Throws CflViolation if dt > 0.5 dx / max|u|.
GridDensityPair step_fv(const GridDensityPair& dens, const KernelPair& pair, double dt);

/// Integrates to T with dt = cfl dx / max|u|, landing on each snapshot time.
/// Returns the initial state, one snapshot per requested time in (0, T) and
/// the state at T, in time order.
std::vector<GridDensityPair> run_continuum(const GridDensityPair& init, const KernelPair& pair, double T,
                                           double cfl = 0.5, std::vector<double> snapshot_times = {});

/// Cell centres as atoms with weight rho dx (zero cells skipped).
WeightedAtoms to_measure(const GridDensityPair& dens, Species species);

/// Both species as an EmpiricalPair.
EmpiricalPair to_pair(const GridDensityPair& dens);

/// CSV: x,rho_plus,rho_minus,kappa.
void write_snapshot_csv(std::ostream& os, const GridDensityPair& dens);

}  // namespace annihilate
