#include "annihilate/measures.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "annihilate/io.hpp"

namespace annihilate {

namespace {

// Sorted by position with duplicates merged. stable_sort keeps index order on ties.
std::vector<Atom> canonical(const WeightedAtoms& m) {
  std::vector<Atom> a = m.atoms;
  std::stable_sort(a.begin(), a.end(), [](const Atom& p, const Atom& q) { return p.position < q.position; });
  std::vector<Atom> out;
  for (const Atom& at : a) {
    if (at.weight <= 0.0) continue;
    if (!out.empty() && out.back().position == at.position)
      out.back().weight += at.weight;
    else
      out.push_back(at);
  }
  return out;
}

}  // namespace

double WeightedAtoms::mass() const {
  double m = 0.0;
  for (const Atom& a : atoms) m += a.weight;
  return m;
}

double SignedAtoms::total_variation() const {
  double m = 0.0;
  for (const Atom& a : atoms) m += std::abs(a.weight);
  return m;
}

double SignedAtoms::net_mass() const {
  double m = 0.0;
  for (const Atom& a : atoms) m += a.weight;
  return m;
}

EmpiricalMeasures from_state(const ParticleState& state) {
  EmpiricalMeasures m;
  const Eigen::Index n = state.size();
  if (n == 0) return m;
  const double w = 1.0 / static_cast<double>(n);
  int n_plus = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = state.x[i];
    if (state.b0[i] > 0) {
      m.mu.mu_plus.atoms.push_back({x, w});
      ++n_plus;
    } else {
      m.mu.mu_minus.atoms.push_back({x, w});
    }
    if (state.b[i] != 0) {
      m.kappa.atoms.push_back({x, state.b[i] * w});
      (state.b[i] > 0 ? m.kappa_plus : m.kappa_minus).atoms.push_back({x, w});
    }
  }
  m.mu.mass_plus = static_cast<double>(n_plus) / static_cast<double>(n);
  return m;
}

double wasserstein2_squared(const WeightedAtoms& a, const WeightedAtoms& b, double mass_tol) {
  const double ma = a.mass(), mb = b.mass();
  if (std::abs(ma - mb) > mass_tol * std::max(1.0, std::max(ma, mb)))
    throw std::invalid_argument("wasserstein2: masses differ (" + format_double(ma) + " vs " + format_double(mb) +
                                ")");
  const auto pa = canonical(a), pb = canonical(b);
  double cost = 0.0;
  std::size_t i = 0, j = 0;
  double ra = pa.empty() ? 0.0 : pa[0].weight;
  double rb = pb.empty() ? 0.0 : pb[0].weight;
  while (i < pa.size() && j < pb.size()) {
    const double d = pa[i].position - pb[j].position;
    if (ra <= rb) {
      cost += ra * d * d;
      rb -= ra;
      if (++i < pa.size()) ra = pa[i].weight;
      if (rb <= 0.0 && ++j < pb.size()) rb = pb[j].weight;
    } else {
      cost += rb * d * d;
      ra -= rb;
      if (++j < pb.size()) rb = pb[j].weight;
    }
  }
  return cost;
}

double wasserstein2(const WeightedAtoms& a, const WeightedAtoms& b, double mass_tol) {
  return std::sqrt(wasserstein2_squared(a, b, mass_tol));
}

double pair_distance_upper(const EmpiricalPair& a, const EmpiricalPair& b) {
  if (std::abs(a.mass_plus - b.mass_plus) > 1e-12)
    throw std::invalid_argument("pair_distance_upper: mass classes differ (" + format_double(a.mass_plus) + " vs " +
                                format_double(b.mass_plus) + ")");
  return std::sqrt(wasserstein2_squared(a.mu_plus, b.mu_plus) + wasserstein2_squared(a.mu_minus, b.mu_minus));
}

double coupling_bound(const ParticleState& s, const ParticleState& t) {
  if (s.size() != t.size()) throw std::invalid_argument("coupling_bound: particle counts differ");
  if (s.b0 != t.b0) throw std::invalid_argument("coupling_bound: initial charges differ");
  if (s.size() == 0) return 0.0;
  return std::sqrt((s.x - t.x).squaredNorm() / static_cast<double>(s.size()));
}

BlockStructure block_structure(const ParticleState& state) {
  BlockStructure bs;
  std::vector<Eigen::Index> act;
  for (Eigen::Index i = 0; i < state.size(); ++i)
    if (state.b[i] != 0) act.push_back(i);
  if (act.empty()) return bs;

  auto& a = bs.boundaries;
  const double first = state.x[act.front()], last = state.x[act.back()];
  a.push_back(first - 1.0);
  if (state.b[act.front()] < 0) a.push_back(first - 1.0);
  for (std::size_t p = 0; p + 1 < act.size(); ++p)
    if (state.b[act[p]] != state.b[act[p + 1]]) a.push_back(0.5 * (state.x[act[p]] + state.x[act[p + 1]]));
  a.push_back(last + 1.0);
  if ((a.size() - 1) % 2 == 1) a.push_back(last + 1.0);
  bs.L = static_cast<int>((a.size() - 1) / 2);
  return bs;
}

bool satisfies_separation(const ParticleState& state, const BlockStructure& blocks) {
  const auto& a = blocks.boundaries;
  for (Eigen::Index i = 0; i < state.size(); ++i) {
    if (state.b[i] == 0) continue;
    bool found = false;
    for (std::size_t k = 1; k < a.size() && !found; ++k) {
      const bool positive_interval = k % 2 == 1;
      if ((state.b[i] > 0) == positive_interval && a[k - 1] <= state.x[i] && state.x[i] <= a[k]) found = true;
    }
    if (!found) return false;
  }
  return true;
}

bool supports_separated(const WeightedAtoms& a, const WeightedAtoms& b) {
  double sup_a = -std::numeric_limits<double>::infinity();
  double inf_b = std::numeric_limits<double>::infinity();
  for (const Atom& at : a.atoms)
    if (at.weight > 0.0) sup_a = std::max(sup_a, at.position);
  for (const Atom& at : b.atoms)
    if (at.weight > 0.0) inf_b = std::min(inf_b, at.position);
  return sup_a <= inf_b;
}

Eigen::MatrixXd distance_matrix(const std::vector<EmpiricalPair>& pairs) {
  const auto k = static_cast<Eigen::Index>(pairs.size());
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = i + 1; j < k; ++j) d(i, j) = d(j, i) = pair_distance_upper(pairs[i], pairs[j]);
  return d;
}

void write_measures_csv(std::ostream& os, const EmpiricalMeasures& m) {
  os << "position,weight,species\n";
  auto dump = [&](const WeightedAtoms& w, const char* name) {
    for (const Atom& a : w.atoms) os << format_double(a.position) << ',' << format_double(a.weight) << ',' << name << '\n';
  };
  dump(m.mu.mu_plus, "mu_plus");
  dump(m.mu.mu_minus, "mu_minus");
  dump(m.kappa_plus, "kappa_plus");
  dump(m.kappa_minus, "kappa_minus");
}

void write_distance_matrix_csv(std::ostream& os, const std::vector<double>& times, const Eigen::MatrixXd& d) {
  os << "t";
  for (double t : times) os << ",t=" << format_double(t);
  os << '\n';
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    os << format_double(times[static_cast<std::size_t>(i)]);
    for (Eigen::Index j = 0; j < d.cols(); ++j) os << ',' << format_double(d(i, j));
    os << '\n';
  }
}

}  // namespace annihilate
