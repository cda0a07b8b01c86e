#include "annihilate/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "annihilate/io.hpp"

namespace annihilate {

namespace {

std::string join_detail(std::initializer_list<std::pair<const char*, double>> items) {
  std::ostringstream os;
  bool first = true;
  for (const auto& [k, v] : items) {
    os << (first ? "" : ", ") << k << " = " << format_double(v);
    first = false;
  }
  return os.str();
}

double cubic_bspline(double z) {
  const double a = std::abs(z);
  if (a >= 2.0) return 0.0;
  if (a >= 1.0) return (2.0 - a) * (2.0 - a) * (2.0 - a) / 6.0;
  return 2.0 / 3.0 - a * a + 0.5 * a * a * a;
}

double cubic_bspline_prime(double z) {
  const double a = std::abs(z);
  if (a >= 2.0) return 0.0;
  const double s = z < 0.0 ? -1.0 : 1.0;
  if (a >= 1.0) return -s * 0.5 * (2.0 - a) * (2.0 - a);
  return -2.0 * z + 1.5 * z * a;
}

// (1/n^2) [1/2 sum (phi'_i - phi'_j) V' + sum phi'_i W'] over the current charges.
double interaction_term(const Eigen::VectorXd& x, const ChargeVector& b, int sign, const KernelPair& pair,
                        const TestFunction& f, double t) {
  const Eigen::Index n = x.size();
  std::vector<Eigen::Index> same, other;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (b[i] == sign) same.push_back(i);
    if (b[i] == -sign) other.push_back(i);
  }
  double acc = 0.0;
  for (std::size_t p = 0; p < same.size(); ++p) {
    const Eigen::Index i = same[p];
    const double di = f.dx(t, x[i]);
    // Ordered double sum: each unordered pair counted twice, times 1/2.
    for (std::size_t q = p + 1; q < same.size(); ++q) {
      const Eigen::Index j = same[q];
      acc += (di - f.dx(t, x[j])) * eval_prime(pair.V, x[i] - x[j]);
    }
    for (Eigen::Index j : other) acc += di * eval_prime(pair.W, x[i] - x[j]);
  }
  return acc / (static_cast<double>(n) * static_cast<double>(n));
}

double species_integral(const Eigen::VectorXd& x, const ChargeVector& b0, int sign,
                        const std::function<double(double)>& g) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (b0[i] == sign) acc += g(x[i]);
  return acc / static_cast<double>(x.size());
}

}  // namespace

CheckReport CheckReport::make(std::string name, double measured, double bound, double tolerance, CheckContext ctx,
                              std::string detail) {
  CheckReport r;
  r.name = std::move(name);
  r.measured = measured;
  r.bound = bound;
  r.slack = bound - measured;
  r.tolerance = tolerance;
  r.pass = std::isfinite(r.slack) ? r.slack >= -tolerance : r.slack > 0.0;
  r.context = std::move(ctx);
  r.detail = std::move(detail);
  return r;
}

CheckContext context_of(const Trajectory& traj, std::string scenario) {
  CheckContext c;
  if (!traj.samples.empty()) {
    c.n = static_cast<int>(traj.front().state.size());
    c.T = traj.back().t;
  }
  c.scenario = std::move(scenario);
  return c;
}

CheckReport check_energy_monotone(const Trajectory& traj, double tolerance, std::string scenario) {
  double worst = 0.0;
  double at = 0.0;
  bool missing = false;
  for (std::size_t m = 0; m + 1 < traj.samples.size(); ++m) {
    const auto& a = traj.samples[m];
    const auto& b = traj.samples[m + 1];
    if (traj.event_in(a.t, b.t)) continue;
    if (std::isnan(a.energy) || std::isnan(b.energy)) {
      missing = true;
      continue;
    }
    const double inc = b.energy - a.energy;
    if (inc > worst) worst = inc, at = b.t;
  }
  auto ctx = context_of(traj, std::move(scenario));
  if (missing) return CheckReport::make("energy_monotone", std::numeric_limits<double>::infinity(), 0.0, tolerance, ctx,
                                        "trajectory has no energy trace");
  return CheckReport::make("energy_monotone", worst, 0.0, tolerance, ctx,
                           "largest inter-event energy increase; " + join_detail({{"at t", at}}));
}

double m2_rate(const KernelPair& pair) { return 2.0 * (pair.bound_rVprime + pair.bound_rWprime); }

double m4_constant(const KernelPair& pair) {
  return 6.0 * std::max(pair.bound_rVprime, pair.bound_rWprime) * std::max(1.0, 0.5 * m2_rate(pair));
}

double edi_constant(const KernelPair& pair) {
  const double cq = pair.quadratic_constant;
  return std::max({2.0 * cq * m2_rate(pair), 2.0 * cq, 0.25 * std::abs(pair.bound_W0)});
}

CheckReport check_edi(const Trajectory& traj, const KernelPair& pair, double tolerance, std::string scenario) {
  auto ctx = context_of(traj, std::move(scenario));
  const auto& s0 = traj.front();
  const double c = edi_constant(pair);
  double best_slack = std::numeric_limits<double>::infinity();
  double measured = 0.0, bound = 0.0, at = 0.0;
  for (const auto& s : traj.samples) {
    if (std::isnan(s.energy))
      return CheckReport::make("edi", std::numeric_limits<double>::infinity(), 0.0, tolerance, ctx,
                               "trajectory has no energy trace");
    const double lhs = s.energy - s0.energy + s.dissipation;
    const double rhs = c * (s.t + s0.m2 + 1.0);
    if (rhs - lhs < best_slack) best_slack = rhs - lhs, measured = lhs, bound = rhs, at = s.t;
  }
  return CheckReport::make("edi", measured, bound, tolerance, ctx,
                           "E(t) - E(0) + dissipation against C (t + M2(0) + 1); " +
                               join_detail({{"C", c}, {"at t", at}}));
}

CheckReport check_jump_bound(const Trajectory& traj, const KernelPair& pair, double tolerance, std::string scenario) {
  auto ctx = context_of(traj, std::move(scenario));
  const double n = ctx.n;
  const double cq = pair.quadratic_constant;
  const double w0 = std::abs(pair.bound_W0);
  double best_slack = std::numeric_limits<double>::infinity();
  double measured = 0.0, bound = 0.0, at = 0.0;
  for (const auto& ev : traj.events.events) {
    if (std::isnan(ev.energy_before))
      return CheckReport::make("jump_bound", std::numeric_limits<double>::infinity(), 0.0, tolerance, ctx,
                               "events carry no energies");
    const auto& s = traj.at(ev.t);
    double sq = 0.0;
    for (int i : ev.indices) sq += s.state.x[i] * s.state.x[i];
    const double g = ev.gamma();
    const double rhs = cq / n * (g * s.m2 + sq) + g * w0 / (2.0 * n * n);
    if (rhs - ev.jump() < best_slack) best_slack = rhs - ev.jump(), measured = ev.jump(), bound = rhs, at = ev.t;
  }
  return CheckReport::make("jump_bound", measured, bound, tolerance, ctx,
                           "largest energy jump relative to its bound; " +
                               join_detail({{"events", static_cast<double>(traj.events.events.size())}, {"at t", at}}));
}

std::vector<CheckReport> check_moments(const Trajectory& traj, const KernelPair& pair, double tolerance,
                                       std::string scenario) {
  auto ctx = context_of(traj, std::move(scenario));
  const auto& s0 = traj.front();
  const double c2 = m2_rate(pair), c4 = m4_constant(pair);
  double slack2 = std::numeric_limits<double>::infinity(), slack4 = slack2;
  double meas2 = s0.m2, bnd2 = s0.m2, meas4 = s0.m4, bnd4 = s0.m4;
  for (const auto& s : traj.samples) {
    const double b2 = s0.m2 + c2 * s.t;
    const double b4 = s0.m4 + c4 * s.t * (s0.m2 + s.t);
    if (b2 - s.m2 < slack2) slack2 = b2 - s.m2, meas2 = s.m2, bnd2 = b2;
    if (b4 - s.m4 < slack4) slack4 = b4 - s.m4, meas4 = s.m4, bnd4 = b4;
  }
  return {CheckReport::make("moments_m2", meas2, bnd2, tolerance, ctx, join_detail({{"C", c2}})),
          CheckReport::make("moments_m4", meas4, bnd4, tolerance, ctx, join_detail({{"C4", c4}}))};
}

CheckReport check_metric_bound(const Trajectory& traj, int pairs, std::uint64_t seed, double tolerance,
                               std::string scenario) {
  auto ctx = context_of(traj, std::move(scenario));
  const auto m = static_cast<int>(traj.samples.size());
  if (m < 2) return CheckReport::make("metric_bound", 0.0, 0.0, tolerance, ctx, "fewer than two samples");
  std::vector<EmpiricalPair> mu(m);
  for (int i = 0; i < m; ++i) mu[i] = from_state(traj.samples[i].state).mu;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, m - 1);
  double worst = -std::numeric_limits<double>::infinity();
  double w_chain = 0.0, w_coupling = 0.0;
  for (int k = 0; k < pairs; ++k) {
    int i = pick(rng), j = pick(rng);
    while (j == i) j = pick(rng);
    if (i > j) std::swap(i, j);
    const auto& s = traj.samples[i];
    const auto& t = traj.samples[j];
    const double d = pair_distance_upper(mu[i], mu[j]);
    const double c = coupling_bound(s.state, t.state);
    const double chain = (t.t - s.t) * (t.dissipation - s.dissipation);
    const double viol = std::max(d * d - c * c, c * c - chain);
    if (viol > worst) worst = viol, w_chain = chain, w_coupling = c * c;
  }
  return CheckReport::make("metric_bound", worst, 0.0, tolerance, ctx,
                           "worst violation of W^2 <= coupling^2 <= (t-s) int |xdot|^2 / n; " +
                               join_detail({{"coupling^2", w_coupling}, {"chain", w_chain}}));
}

CheckReport check_block_monotone(const Trajectory& traj, std::string scenario) {
  int worst = 0;
  int prev = -1;
  int l0 = 0, lT = 0;
  for (const auto& s : traj.samples) {
    const int l = block_structure(s.state).L;
    if (prev < 0) l0 = l;
    if (prev >= 0) worst = std::max(worst, l - prev);
    prev = lT = l;
  }
  return CheckReport::make("block_monotone", worst, 0.0, 0.0, context_of(traj, std::move(scenario)),
                           join_detail({{"L(0)", static_cast<double>(l0)}, {"L(T)", static_cast<double>(lT)}}));
}

CheckReport check_events(const Trajectory& traj, std::string scenario) {
  auto ctx = context_of(traj, std::move(scenario));
  int violations = 0;
  std::vector<std::string> notes;
  const auto& init = traj.front().state;
  const Eigen::Index n = init.size();
  std::set<int> seen;
  int total = 0;
  for (const auto& ev : traj.events.events) {
    if (ev.gamma() % 2 != 0 || ev.gamma() == 0) ++violations, notes.push_back("odd or empty gamma");
    if (2 * static_cast<int>(ev.pairs.size()) != ev.gamma()) ++violations, notes.push_back("pairing size");
    std::set<int> in_pairs;
    for (auto [p, q] : ev.pairs) {
      if (init.b0[p] != 1 || init.b0[q] != -1) ++violations, notes.push_back("pair charges");
      in_pairs.insert(p);
      in_pairs.insert(q);
    }
    if (in_pairs != std::set<int>(ev.indices.begin(), ev.indices.end())) ++violations, notes.push_back("bijection");
    for (int i : ev.indices)
      if (!seen.insert(i).second) ++violations, notes.push_back("particle annihilated twice");
    total += ev.gamma();
  }
  if (total > n) ++violations, notes.push_back("more than n annihilated");

  // Frozen positions: bitwise equal to the position at tau_i.
  const auto& last = traj.back().state;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!std::isfinite(last.tau[i])) continue;
    const double xi = traj.at(last.tau[i]).state.x[i];
    for (const auto& s : traj.samples) {
      if (s.t < last.tau[i]) continue;
      if (s.state.b[i] != 0 || s.state.x[i] != xi || s.state.tau[i] != last.tau[i]) {
        ++violations;
        notes.push_back("particle " + std::to_string(i) + " moved or revived after annihilation");
        break;
      }
    }
  }
  std::string detail = "events = " + std::to_string(traj.events.events.size()) +
                       ", annihilated = " + std::to_string(total);
  if (!notes.empty()) detail += "; first violation: " + notes.front();
  return CheckReport::make("events", violations, 0.0, 0.0, ctx, detail);
}

CheckReport check_same_sign_separation(const Trajectory& traj, std::string scenario) {
  double min_gap = std::numeric_limits<double>::infinity();
  int violations = 0;
  for (const auto& s : traj.samples) {
    const double g = min_same_sign_gap(s.state);
    min_gap = std::min(min_gap, g);
    if (!(g > 0.0)) ++violations;
  }
  return CheckReport::make("same_sign_separation", violations, 0.0, 0.0, context_of(traj, std::move(scenario)),
                           join_detail({{"min gap", min_gap}}));
}

CheckReport check_mass(const Trajectory& traj, std::string scenario) {
  int violations = 0;
  double m0 = std::numeric_limits<double>::quiet_NaN();
  double prev_tv = std::numeric_limits<double>::infinity();
  for (const auto& s : traj.samples) {
    const auto m = from_state(s.state);
    const double mp = m.mu.mu_plus.mass();
    if (std::isnan(m0)) m0 = mp;
    if (std::abs(mp - m0) > 1e-14) ++violations;
    const double tv = m.kappa.total_variation();
    if (tv > prev_tv + 1e-14) ++violations;
    prev_tv = tv;
  }
  return CheckReport::make("mass", violations, 0.0, 0.0, context_of(traj, std::move(scenario)),
                           join_detail({{"mu+ mass", m0}, {"|kappa|(T)", prev_tv}}));
}

// ---------------------------------------------------------------------------

double TestFunction::eta(double t) const {
  if (t1 <= t0) return 1.0;
  if (t <= t0 || t >= t1) return 0.0;
  const double s = (t - t0) / (t1 - t0);
  const double q = 4.0 * s * (1.0 - s);
  return q * q;
}

double TestFunction::eta_dot(double t) const {
  if (t1 <= t0 || t <= t0 || t >= t1) return 0.0;
  const double s = (t - t0) / (t1 - t0);
  const double q = 4.0 * s * (1.0 - s);
  return 2.0 * q * 4.0 * (1.0 - 2.0 * s) / (t1 - t0);
}

double TestFunction::space(double x) const {
  const double z = (x - centre) / width;
  return (1.0 + tilt * z) * cubic_bspline(z);
}

double TestFunction::space_prime(double x) const {
  const double z = (x - centre) / width;
  return (tilt * cubic_bspline(z) + (1.0 + tilt * z) * cubic_bspline_prime(z)) / width;
}

std::vector<double> weak_form_residuals(const Trajectory& traj, const KernelPair& pair,
                                        const std::vector<TestFunction>& fns, Species species, TimeQuadrature quad) {
  const int sign = species == Species::Plus ? 1 : -1;
  const auto& samples = traj.samples;
  std::vector<double> out;
  out.reserve(fns.size());
  const ChargeVector& b0 = traj.front().state.b0;
  for (const auto& f : fns) {
    const auto& first = samples.front();
    const auto& last = samples.back();
    double r = species_integral(last.state.x, b0, sign, [&](double x) { return f.value(last.t, x); }) -
               species_integral(first.state.x, b0, sign, [&](double x) { return f.value(first.t, x); });
    for (std::size_t m = 0; m + 1 < samples.size(); ++m) {
      const auto& a = samples[m];
      const auto& b = samples[m + 1];
      const double h = b.t - a.t;
      if (quad == TimeQuadrature::LeftHeld) {
        r -= species_integral(a.state.x, b0, sign, [&](double x) { return f.value(b.t, x) - f.value(a.t, x); });
        r += h * interaction_term(a.state.x, a.state.b, sign, pair, f, a.t);
      } else {
        const double ga = species_integral(a.state.x, b0, sign, [&](double x) { return f.dt(a.t, x); });
        const double gb = species_integral(b.state.x, b0, sign, [&](double x) { return f.dt(b.t, x); });
        r -= 0.5 * h * (ga + gb);
        // Charges are constant on (t_m, t_{m+1}) and equal to those recorded at t_m.
        r += 0.5 * h *
             (interaction_term(a.state.x, a.state.b, sign, pair, f, a.t) +
              interaction_term(b.state.x, a.state.b, sign, pair, f, b.t));
      }
    }
    out.push_back(r);
  }
  return out;
}

CheckReport weak_form_residual(const Trajectory& traj, const KernelPair& pair, const std::vector<TestFunction>& fns,
                               double tolerance, TimeQuadrature quad, std::string scenario) {
  double worst = 0.0;
  for (Species s : {Species::Plus, Species::Minus})
    for (double r : weak_form_residuals(traj, pair, fns, s, quad)) worst = std::max(worst, std::abs(r));
  return CheckReport::make("weak_form_residual", worst, 0.0, tolerance, context_of(traj, std::move(scenario)),
                           "max |residual| over " + std::to_string(fns.size()) + " test functions and both species");
}

std::vector<TestFunction> default_test_functions(double T, double x_lo, double x_hi) {
  const double len = x_hi - x_lo;
  const double w = len / 4.0;
  const double mid = 0.5 * (x_lo + x_hi);
  return {
      {0.0, T, mid, w, 0.0},
      {0.0, 0.0, x_lo + 0.3 * len, w, 0.5},
      {0.1 * T, 0.9 * T, x_hi - 0.3 * len, w, -0.5},
      {0.0, 0.0, mid, w, 1.0},
      {0.0, 0.6 * T, x_lo + 0.6 * len, 1.5 * w, 0.25},
  };
}

// ---------------------------------------------------------------------------

Reference parse_reference(const std::string& text) {
  if (text == "self-doubling") return Reference::SelfDoubling;
  if (text == "continuum") return Reference::Continuum;
  throw std::invalid_argument("unknown reference '" + text + "' (expected self-doubling or continuum)");
}

std::string reference_name(Reference r) { return r == Reference::SelfDoubling ? "self-doubling" : "continuum"; }

bool ConvergenceTable::strictly_decreasing() const {
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (!(rows[i].sup_distance < rows[i - 1].sup_distance)) return false;
  return true;
}

void parallel_for(int count, int jobs, const std::function<void(int)>& f) {
  jobs = std::max(1, std::min(jobs, count));
  if (jobs == 1) {
    for (int i = 0; i < count; ++i) f(i);
    return;
  }
  std::mutex mu;
  int next = 0;
  std::exception_ptr error;
  auto worker = [&] {
    for (;;) {
      int i;
      {
        std::lock_guard lock(mu);
        if (next >= count || error) return;
        i = next++;
      }
      try {
        f(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

namespace {

std::vector<double> comparison_times(const SimConfig& cfg) {
  std::vector<double> ts{0.0};
  for (double t : cfg.sample_times)
    if (t > 0.0 && t < cfg.T) ts.push_back(t);
  ts.push_back(cfg.T);
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
  return ts;
}

std::vector<GridDensityPair> continuum_reference(const ConvergenceSetup& setup) {
  return run_continuum(cell_averages(setup.blocks, setup.grid), setup.pair, setup.config.T, setup.cfl,
                       setup.config.sample_times);
}

}  // namespace

double continuum_kappa_loss(const ConvergenceSetup& setup) {
  const auto snaps = continuum_reference(setup);
  return snaps.front().abs_kappa_mass() - snaps.back().abs_kappa_mass();
}

ConvergenceTable convergence_study(const ConvergenceSetup& setup, std::vector<int> n_list, Reference reference,
                                   int jobs) {
  std::sort(n_list.begin(), n_list.end());
  n_list.erase(std::unique(n_list.begin(), n_list.end()), n_list.end());
  if (n_list.empty()) throw std::invalid_argument("convergence_study: empty n_list");

  std::vector<int> run_ns = n_list;
  if (reference == Reference::SelfDoubling)
    for (int n : n_list) run_ns.push_back(2 * n);
  std::sort(run_ns.begin(), run_ns.end());
  run_ns.erase(std::unique(run_ns.begin(), run_ns.end()), run_ns.end());

  SimConfig cfg = setup.config;
  cfg.record_every = 0;
  cfg.track_energy = false;
  const auto times = comparison_times(cfg);
  cfg.sample_times = times;

  // Largest runs first so the slowest jobs start early.
  std::vector<Trajectory> runs(run_ns.size());
  parallel_for(static_cast<int>(run_ns.size()), jobs, [&](int k) {
    const int idx = static_cast<int>(run_ns.size()) - 1 - k;
    runs[idx] = run(quantile_state(setup.blocks, run_ns[idx], setup.seed), setup.pair, cfg);
  });
  auto traj_for = [&](int n) -> const Trajectory& {
    return runs[std::lower_bound(run_ns.begin(), run_ns.end(), n) - run_ns.begin()];
  };

  ConvergenceTable table;
  table.reference = reference;
  std::vector<EmpiricalPair> ref_cont;
  if (reference == Reference::Continuum) {
    const auto snaps = continuum_reference(setup);
    for (const auto& s : snaps) ref_cont.push_back(to_pair(s));
    table.continuum_kappa_loss = snaps.front().abs_kappa_mass() - snaps.back().abs_kappa_mass();
  }

  for (int n : n_list) {
    const Trajectory& tr = traj_for(n);
    ConvergenceRow row;
    row.n = n;
    double sup = 0.0;
    for (std::size_t k = 0; k < times.size(); ++k) {
      const auto mine = from_state(tr.at(times[k]).state).mu;
      const EmpiricalPair other =
          reference == Reference::SelfDoubling ? from_state(traj_for(2 * n).at(times[k]).state).mu : ref_cont[k];
      sup = std::max(sup, reference == Reference::SelfDoubling
                              ? pair_distance_upper(mine, other)
                              : std::sqrt(wasserstein2_squared(mine.mu_plus, other.mu_plus, 1e-9) +
                                          wasserstein2_squared(mine.mu_minus, other.mu_minus, 1e-9)));
    }
    row.sup_distance = sup;
    row.annihilated_mass = static_cast<double>(tr.events.annihilated_particles()) / n;
    if (!table.rows.empty()) row.ratio = sup / table.rows.back().sup_distance;
    table.rows.push_back(row);
  }
  return table;
}

void write_convergence_csv(std::ostream& os, const ConvergenceTable& table) {
  os << "n,sup_distance,ratio,annihilated_mass\n";
  for (const auto& r : table.rows)
    os << r.n << ',' << format_double(r.sup_distance) << ',' << format_double(r.ratio) << ','
       << format_double(r.annihilated_mass) << '\n';
}

// ---------------------------------------------------------------------------

namespace {

SuiteScenario explicit_scenario(std::string name, std::vector<double> x, std::vector<int> b, KernelPair pair,
                                SimConfig cfg) {
  Eigen::VectorXd xv = Eigen::Map<Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
  Eigen::VectorXi bv = Eigen::Map<Eigen::VectorXi>(b.data(), static_cast<Eigen::Index>(b.size()));
  return {std::move(name), ParticleState::initial(xv, bv), std::move(pair), std::move(cfg), false};
}

SuiteScenario block_scenario(std::string name, std::vector<DensityBlock> blocks, int n, KernelPair pair,
                             SimConfig cfg) {
  return {std::move(name), quantile_state(blocks, n), std::move(pair), std::move(cfg), false};
}

SimConfig suite_config(double T, int record_every, double eps = 1e-9) {
  SimConfig c;
  c.T = T;
  c.record_every = record_every;
  c.eps_annihilate = eps;
  for (int k = 1; k < 20; ++k) c.sample_times.push_back(T * k / 20.0);
  return c;
}

}  // namespace

std::vector<SuiteScenario> default_suite() {
  using K = KernelSpec;
  const auto U = Profile::Uniform, C = Profile::Cosine, S = Profile::Semicircle;
  std::vector<SuiteScenario> s;
  s.push_back(explicit_scenario("pair_same_sign_log", {0.0, 1.0}, {1, 1}, KernelPair(K::log_repulsive(), K::zero()),
                                suite_config(2.0, 1)));
  s.push_back(explicit_scenario("pair_opposite_reglog", {-0.5, 0.5}, {1, -1},
                                KernelPair(K::log_repulsive(), K::regularized_log(0.1)), suite_config(5.0, 1)));
  s.push_back(explicit_scenario("interleaved_four", {0.0, 0.05, 0.5, 0.6}, {1, -1, 1, -1},
                                KernelPair(K::log_repulsive(), K::regularized_log(0.1)), suite_config(5.0, 1, 1e-8)));
  s.push_back(block_scenario("two_block_log_zero", {{1, -1.0, 0.0, 0.5, U}, {-1, 0.0, 1.0, 0.5, U}}, 100,
                             KernelPair(K::log_repulsive(), K::zero()), suite_config(1.0, 2)));
  s.push_back(block_scenario("two_block_log_reglog", {{1, -1.0, -0.1, 0.5, C}, {-1, 0.1, 1.0, 0.5, C}}, 200,
                             KernelPair(K::log_repulsive(), K::regularized_log(0.3)), suite_config(1.0, 4)));
  s.push_back(block_scenario("single_wall_reglog", {{1, -1.0, 1.0, 1.0, S}}, 100,
                             KernelPair(K::wall_repulsive(), K::regularized_log(0.5)), suite_config(1.0, 2)));
  s.push_back(block_scenario("alternating_wall_zero",
                             {{1, -2.0, -1.0, 0.25, U}, {-1, -1.0, 0.0, 0.25, U}, {1, 0.0, 1.0, 0.25, U},
                              {-1, 1.0, 2.0, 0.25, U}},
                             120, KernelPair(K::wall_repulsive(), K::zero()), suite_config(1.0, 2)));
  s.push_back(block_scenario("alternating_log_reglog",
                             {{1, -2.0, -1.0, 0.25, C}, {-1, -1.0, 0.0, 0.25, C}, {1, 0.0, 1.0, 0.25, C},
                              {-1, 1.0, 2.0, 0.25, C}},
                             400, KernelPair(K::log_repulsive(), K::regularized_log(0.2)), suite_config(0.5, 8)));
  s.push_back(block_scenario("single_log_cosine", {{1, -1.0, 1.0, 1.0, C}}, 400,
                             KernelPair(K::log_repulsive(), K::zero()), suite_config(1.0, 8)));
  s.push_back(block_scenario("two_block_wall_reglog", {{-1, -1.0, 0.0, 0.5, S}, {1, 0.0, 1.0, 0.5, S}}, 200,
                             KernelPair(K::wall_repulsive(), K::regularized_log(0.3)), suite_config(1.0, 4)));
  return s;
}

SuiteScenario negative_control_scenario() {
  // Opposite pair deep in the linear attraction regime, rate about 1/delta^2.
  // dt * rate is near 4, where the scheme amplifies the gap and the energy rises.
  SimConfig cfg;
  cfg.T = 0.4;
  cfg.fixed_dt = 0.04;
  cfg.dt_init = 0.04;
  cfg.record_every = 1;
  auto sc = explicit_scenario("negative_control_fixed_dt", {-0.005, 0.005}, {1, -1},
                              KernelPair(KernelSpec::log_repulsive(), KernelSpec::regularized_log(0.1)), cfg);
  sc.negative_control = true;
  return sc;
}

std::vector<CheckReport> standard_checks(const Trajectory& traj, const KernelPair& pair, const SimConfig& config,
                                         const std::string& scenario, std::uint64_t seed) {
  std::vector<CheckReport> out;
  out.push_back(check_energy_monotone(traj, 10.0 * config.tol_step, scenario));
  out.push_back(check_edi(traj, pair, 1e-8, scenario));
  out.push_back(check_jump_bound(traj, pair, 1e-8, scenario));
  for (auto& r : check_moments(traj, pair, 1e-8, scenario)) out.push_back(std::move(r));
  out.push_back(check_metric_bound(traj, 100, seed, 1e-8, scenario));
  out.push_back(check_block_monotone(traj, scenario));
  out.push_back(check_events(traj, scenario));
  out.push_back(check_same_sign_separation(traj, scenario));
  out.push_back(check_mass(traj, scenario));
  return out;
}

std::vector<SuiteRun> run_suite(const std::vector<SuiteScenario>& suite, int jobs, std::uint64_t seed) {
  std::vector<SuiteRun> out(suite.size());
  parallel_for(static_cast<int>(suite.size()), jobs, [&](int i) {
    const auto& sc = suite[i];
    SuiteRun r;
    r.name = sc.name;
    r.negative_control = sc.negative_control;
    r.trajectory = run(sc.initial, sc.pair, sc.config);
    r.checks = standard_checks(r.trajectory, sc.pair, sc.config, sc.name, seed);
    out[i] = std::move(r);
  });
  return out;
}

}  // namespace annihilate
