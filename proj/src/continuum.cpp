#include "annihilate/continuum.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "annihilate/io.hpp"

namespace annihilate {

namespace {

// Derivative tables K'(k dx) for k = -(N-1) .. N-1, stored at offset N-1.
struct DerivativeTable {
  Eigen::VectorXd v, w;
  int offset = 0;
};

DerivativeTable tabulate(const Grid& g, const KernelPair& pair) {
  DerivativeTable tab;
  tab.offset = g.cells - 1;
  const int m = 2 * g.cells - 1;
  tab.v.resize(m);
  tab.w.resize(m);
  for (int k = 0; k < m; ++k) {
    const double r = (k - tab.offset) * g.dx();
    tab.v[k] = k == tab.offset ? 0.0 : eval_prime(pair.V, r);
    tab.w[k] = eval_prime(pair.W, r);
  }
  return tab;
}

Eigen::VectorXd centre_field(const DerivativeTable& tab, const Eigen::VectorXd& same, const Eigen::VectorXd& other,
                             double dx) {
  const auto n = static_cast<int>(same.size());
  Eigen::VectorXd u(n);
  for (int i = 0; i < n; ++i) {
    double acc = 0.0;
    const double* vrow = tab.v.data() + tab.offset + i;
    const double* wrow = tab.w.data() + tab.offset + i;
    for (int j = 0; j < n; ++j) acc += same[j] * vrow[-j] + other[j] * wrow[-j];
    u[i] = -acc * dx;
  }
  return u;
}

Eigen::VectorXd faces_from_centres(const Eigen::VectorXd& uc) {
  const auto n = uc.size();
  Eigen::VectorXd f = Eigen::VectorXd::Zero(n + 1);
  for (Eigen::Index i = 1; i < n; ++i) f[i] = 0.5 * (uc[i - 1] + uc[i]);
  return f;
}

struct Fields {
  Eigen::VectorXd plus, minus;  // face velocities
};

Fields both_fields(const GridDensityPair& d, const DerivativeTable& tab) {
  const Eigen::VectorXd kp = d.kappa_plus(), km = d.kappa_minus();
  const double dx = d.grid.dx();
  return {faces_from_centres(centre_field(tab, kp, km, dx)), faces_from_centres(centre_field(tab, km, kp, dx))};
}

double max_speed(const Fields& f) {
  return std::max(f.plus.cwiseAbs().maxCoeff(), f.minus.cwiseAbs().maxCoeff());
}

GridDensityPair advance(const GridDensityPair& d, const Fields& f, double dt) {
  const Eigen::VectorXd kp = d.kappa_plus(), km = d.kappa_minus();
  const auto n = d.grid.cells;
  const double lam = dt / d.grid.dx();
  GridDensityPair out = d;
  auto update = [&](Eigen::VectorXd& rho, const Eigen::VectorXd& k, const Eigen::VectorXd& u) {
    Eigen::VectorXd flux = Eigen::VectorXd::Zero(n + 1);
    for (int i = 1; i < n; ++i) flux[i] = u[i] * (u[i] > 0.0 ? k[i - 1] : k[i]);
    for (int i = 0; i < n; ++i) rho[i] -= lam * (flux[i + 1] - flux[i]);
    rho = rho.cwiseMax(0.0);
  };
  update(out.rho_plus, kp, f.plus);
  update(out.rho_minus, km, f.minus);
  out.t = d.t + dt;
  return out;
}

}  // namespace

Grid Grid::uniform(double x_min, double x_max, int cells) {
  if (!(x_min < x_max) || !std::isfinite(x_min) || !std::isfinite(x_max))
    throw std::invalid_argument("grid: need finite x_min < x_max");
  if (cells < 2) throw std::invalid_argument("grid: need at least 2 cells");
  return {x_min, x_max, cells};
}

Eigen::VectorXd Grid::centers() const {
  Eigen::VectorXd c(cells);
  for (int i = 0; i < cells; ++i) c[i] = center(i);
  return c;
}

GridDensityPair GridDensityPair::zero(const Grid& grid) {
  GridDensityPair d;
  d.grid = grid;
  d.rho_plus = Eigen::VectorXd::Zero(grid.cells);
  d.rho_minus = Eigen::VectorXd::Zero(grid.cells);
  return d;
}

double GridDensityPair::mass(Species s) const {
  return (s == Species::Plus ? rho_plus : rho_minus).sum() * grid.dx();
}

double GridDensityPair::abs_kappa_mass() const { return kappa().cwiseAbs().sum() * grid.dx(); }

Eigen::VectorXd cell_velocity(const GridDensityPair& dens, const KernelPair& pair, Species species) {
  const auto tab = tabulate(dens.grid, pair);
  const Eigen::VectorXd kp = dens.kappa_plus(), km = dens.kappa_minus();
  return species == Species::Plus ? centre_field(tab, kp, km, dens.grid.dx())
                                  : centre_field(tab, km, kp, dens.grid.dx());
}

Eigen::VectorXd force_field(const GridDensityPair& dens, const KernelPair& pair, Species species) {
  return faces_from_centres(cell_velocity(dens, pair, species));
}

double stable_dt(const GridDensityPair& dens, const KernelPair& pair, double cfl) {
  const double s = max_speed(both_fields(dens, tabulate(dens.grid, pair)));
  return s > 0.0 ? cfl * dens.grid.dx() / s : std::numeric_limits<double>::infinity();
}

GridDensityPair step_fv(const GridDensityPair& dens, const KernelPair& pair, double dt) {
  if (!(dt >= 0.0)) throw std::invalid_argument("step_fv: dt must be >= 0");
  const Fields f = both_fields(dens, tabulate(dens.grid, pair));
  const double s = max_speed(f);
  if (dt * s > 0.5 * dens.grid.dx() * (1.0 + 1e-12))
    throw CflViolation("step_fv: dt = " + format_double(dt) + " exceeds the CFL limit " +
                       format_double(0.5 * dens.grid.dx() / s));
  return advance(dens, f, dt);
}

std::vector<GridDensityPair> run_continuum(const GridDensityPair& init, const KernelPair& pair, double T, double cfl,
                                           std::vector<double> snapshot_times) {
  if (!(cfl > 0.0 && cfl <= 0.5)) throw std::invalid_argument("run_continuum: cfl must lie in (0, 0.5]");
  if (!(T > init.t)) throw std::invalid_argument("run_continuum: T must exceed the initial time");
  std::erase_if(snapshot_times, [&](double t) { return !(t > init.t && t < T); });
  std::sort(snapshot_times.begin(), snapshot_times.end());
  snapshot_times.erase(std::unique(snapshot_times.begin(), snapshot_times.end()), snapshot_times.end());
  snapshot_times.push_back(T);

  const auto tab = tabulate(init.grid, pair);
  std::vector<GridDensityPair> out{init};
  GridDensityPair cur = init;
  for (double target : snapshot_times) {
    while (cur.t < target) {
      const Fields f = both_fields(cur, tab);
      const double s = max_speed(f);
      const double remaining = target - cur.t;
      const double dt = s > 0.0 ? std::min(remaining, cfl * cur.grid.dx() / s) : remaining;
      cur = advance(cur, f, dt);
      if (dt == remaining) cur.t = target;
    }
    out.push_back(cur);
  }
  return out;
}

WeightedAtoms to_measure(const GridDensityPair& dens, Species species) {
  const Eigen::VectorXd& rho = species == Species::Plus ? dens.rho_plus : dens.rho_minus;
  WeightedAtoms m;
  const double dx = dens.grid.dx();
  for (int i = 0; i < dens.grid.cells; ++i)
    if (rho[i] > 0.0) m.atoms.push_back({dens.grid.center(i), rho[i] * dx});
  return m;
}

EmpiricalPair to_pair(const GridDensityPair& dens) {
  EmpiricalPair p;
  p.mu_plus = to_measure(dens, Species::Plus);
  p.mu_minus = to_measure(dens, Species::Minus);
  p.mass_plus = p.mu_plus.mass();
  return p;
}

void write_snapshot_csv(std::ostream& os, const GridDensityPair& dens) {
  os << "x,rho_plus,rho_minus,kappa\n";
  for (int i = 0; i < dens.grid.cells; ++i)
    os << format_double(dens.grid.center(i)) << ',' << format_double(dens.rho_plus[i]) << ','
       << format_double(dens.rho_minus[i]) << ',' << format_double(dens.rho_plus[i] - dens.rho_minus[i]) << '\n';
}

}  // namespace annihilate
