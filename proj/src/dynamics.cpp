#include "annihilate/dynamics.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <sstream>

namespace annihilate {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr std::array<double, 7> c = {0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr std::array<double, 7> b5 = {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84, 0.0};
constexpr std::array<double, 7> b4 = {5179.0 / 57600,    0.0,          7571.0 / 16695, 393.0 / 640,
                                      -92097.0 / 339200, 187.0 / 2100, 1.0 / 40};

// Dense-output polynomial coefficients: y(t0 + theta h) = y0 + h sum_s k_s sum_p P[s][p] theta^(p+1).
constexpr double P[7][4] = {
    {1.0, -8048581381.0 / 2820520608, 8663915743.0 / 2820520608, -12715105075.0 / 11282082432},
    {0.0, 0.0, 0.0, 0.0},
    {0.0, 131558114200.0 / 32700410799, -68118460800.0 / 10900136933, 87487479700.0 / 32700410799},
    {0.0, -1754552775.0 / 470086768, 14199869525.0 / 1410260304, -10690763975.0 / 1880347072},
    {0.0, 127303824393.0 / 49829197408, -318862633887.0 / 49829197408, 701980252875.0 / 199316789632},
    {0.0, -282668133.0 / 205662961, 2019193451.0 / 616988883, -1453857185.0 / 822651844},
    {0.0, 40617522.0 / 29380423, -110615467.0 / 29380423, 69997945.0 / 29380423},
};

std::vector<int> active_indices(const ChargeVector& b) {
  std::vector<int> act;
  for (Eigen::Index i = 0; i < b.size(); ++i)
    if (b[i] != 0) act.push_back(static_cast<int>(i));
  return act;
}

// Drift over the active set. Returns false on a same-sign coincidence.
// The kernel families are resolved once so the pair loop is monomorphic.
bool drift(const Eigen::VectorXd& x, const ChargeVector& b, const std::vector<int>& act, const KernelPair& pair,
           Eigen::VectorXd& v) {
  v.setZero(x.size());
  const double inv_n = 1.0 / static_cast<double>(x.size());
  return std::visit(
      [&](const auto& kv, const auto& kw) {
        const std::size_t m = act.size();
        for (std::size_t p = 0; p < m; ++p) {
          const int i = act[p];
          const double xi = x[i];
          const int bi = b[i];
          double vi = 0.0;
          for (std::size_t q = p + 1; q < m; ++q) {
            const int j = act[q];
            const double r = xi - x[j];
            double f;
            if (bi == b[j]) {
              if (r == 0.0) return false;
              f = kv.template prime<double>(r);
            } else {
              f = kw.template prime<double>(r);
            }
            vi -= f;
            v[j] += f;
          }
          v[i] += vi;
        }
        v *= inv_n;
        return true;
      },
      pair.V.family, pair.W.family);
}

// Same-sign active particles keep their strict order.
bool same_sign_order_preserved(const Eigen::VectorXd& y, const ChargeVector& b, const std::vector<int>& act) {
  int last_pos = -1, last_neg = -1;
  for (int i : act) {
    int& last = b[i] > 0 ? last_pos : last_neg;
    if (last >= 0 && !(y[i] > y[last])) return false;
    last = i;
  }
  return true;
}

struct Trial {
  Eigen::VectorXd y;
  double error = 0.0;
  double dissipation = 0.0;
  std::vector<Eigen::VectorXd> k;
  bool ok = false;
};

// One Dormand-Prince trial of size h from x, given k1 = f(x).
Trial rk_trial(const ParticleState& s, const std::vector<int>& act, const KernelPair& pair, const Eigen::VectorXd& k1,
               double h, double tol, double gap_floor = 0.0) {
  Trial tr;
  tr.k.assign(7, Eigen::VectorXd());
  tr.k[0] = k1;
  const Eigen::VectorXd& x = s.x;
  auto stage = [&](int idx, const Eigen::VectorXd& arg) { return drift(arg, s.b, act, pair, tr.k[idx]); };
  auto& k = tr.k;
  if (!stage(1, x + h * (a21 * k[0]))) return tr;
  if (!stage(2, x + h * (a31 * k[0] + a32 * k[1]))) return tr;
  if (!stage(3, x + h * (a41 * k[0] + a42 * k[1] + a43 * k[2]))) return tr;
  if (!stage(4, x + h * (a51 * k[0] + a52 * k[1] + a53 * k[2] + a54 * k[3]))) return tr;
  if (!stage(5, x + h * (a61 * k[0] + a62 * k[1] + a63 * k[2] + a64 * k[3] + a65 * k[4]))) return tr;
  Eigen::VectorXd incr = b5[0] * k[0] + b5[2] * k[2] + b5[3] * k[3] + b5[4] * k[4] + b5[5] * k[5];
  tr.y = x;
  for (int i : act) tr.y[i] = x[i] + h * incr[i];
  if (!stage(6, tr.y)) return tr;

  Eigen::VectorXd err = Eigen::VectorXd::Zero(x.size());
  for (int sidx = 0; sidx < 7; ++sidx) err += (b5[sidx] - b4[sidx]) * k[sidx];
  double worst = 0.0;
  for (int i : act) {
    const double scale = tol * (1.0 + std::max(std::abs(x[i]), std::abs(tr.y[i])));
    worst = std::max(worst, std::abs(h * err[i]) / scale);
  }
  // Approaching opposite pairs are resolved relative to their gap.
  for (std::size_t p = 0; p + 1 < act.size(); ++p) {
    const int i = act[p], j = act[p + 1];
    if (s.b[i] * s.b[j] != -1) continue;
    const double gap = std::max({std::abs(x[j] - x[i]), std::abs(tr.y[j] - tr.y[i]), gap_floor});
    const double noise = 64.0 * std::numeric_limits<double>::epsilon() *
                         std::max({std::abs(x[i]), std::abs(x[j]), std::abs(tr.y[i]), std::abs(tr.y[j])});
    worst = std::max(worst, std::abs(h * (err[j] - err[i])) / (tol * gap + noise));
  }
  tr.error = worst;

  double diss = 0.0;
  for (int sidx = 0; sidx < 6; ++sidx)
    if (b5[sidx] != 0.0) diss += b5[sidx] * k[sidx].squaredNorm();
  tr.dissipation = h * diss / static_cast<double>(x.size());
  tr.ok = true;
  return tr;
}

std::string dump_state(const ParticleState& s, double dt) {
  std::ostringstream os;
  os.precision(17);
  os << "step failure at t = " << s.t << " (dt = " << dt << ", n = " << s.size()
     << ", min same-sign gap = " << min_same_sign_gap(s) << ")\n  x = [";
  for (Eigen::Index i = 0; i < s.size(); ++i) os << (i ? ", " : "") << s.x[i];
  os << "]\n  b = [";
  for (Eigen::Index i = 0; i < s.size(); ++i) os << (i ? ", " : "") << s.b[i];
  os << "]";
  return os.str();
}

// Consecutive active pairs of opposite sign.
std::vector<std::pair<int, int>> opposite_neighbours(const ChargeVector& b, const std::vector<int>& act) {
  std::vector<std::pair<int, int>> out;
  for (std::size_t p = 0; p + 1 < act.size(); ++p)
    if (b[act[p]] * b[act[p + 1]] == -1) out.emplace_back(act[p], act[p + 1]);
  return out;
}

bool any_within(const std::vector<std::pair<int, int>>& cand, const Eigen::VectorXd& y, double eps) {
  for (auto [i, j] : cand)
    if (y[j] - y[i] <= eps) return true;
  return false;
}

}  // namespace

ParticleState ParticleState::initial(Eigen::VectorXd positions, ChargeVector charges) {
  ParticleState s;
  s.x = std::move(positions);
  s.b0 = std::move(charges);
  s.b = s.b0;
  s.tau = Eigen::VectorXd::Constant(s.x.size(), std::numeric_limits<double>::infinity());
  s.t = 0.0;
  return s;
}

Eigen::Index ParticleState::active_count() const { return (b.array() != 0).count(); }

void require_initial_datum(const ParticleState& state) {
  const Eigen::Index n = state.size();
  if (n < 2) throw std::invalid_argument("initial datum: need at least two particles");
  if (state.b0.size() != n || state.b.size() != n || state.tau.size() != n)
    throw std::invalid_argument("initial datum: array sizes differ");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (state.b0[i] != 1 && state.b0[i] != -1)
      throw std::invalid_argument("initial datum: charge of particle " + std::to_string(i) + " is not +-1");
    if (!std::isfinite(state.x[i]))
      throw std::invalid_argument("initial datum: position " + std::to_string(i) + " is not finite");
    if (i > 0 && !(state.x[i] > state.x[i - 1]))
      throw std::invalid_argument("initial datum: positions must be strictly increasing (particles " +
                                  std::to_string(i - 1) + ", " + std::to_string(i) + ")");
  }
}

int EventLog::annihilated_particles() const {
  int total = 0;
  for (const auto& e : events) total += e.gamma();
  return total;
}

void SimConfig::validate() const {
  if (!(T > 0.0)) throw std::invalid_argument("SimConfig: T must be positive");
  if (!(dt_min > 0.0 && dt_min <= dt_init)) throw std::invalid_argument("SimConfig: need 0 < dt_min <= dt_init");
  if (!(tol_step > 0.0)) throw std::invalid_argument("SimConfig: tol_step must be positive");
  if (!(eps_annihilate >= 0.0)) throw std::invalid_argument("SimConfig: eps_annihilate must be >= 0");
  if (!(eps_bisect > 0.0)) throw std::invalid_argument("SimConfig: eps_bisect must be positive");
  if (record_every < 0) throw std::invalid_argument("SimConfig: record_every must be >= 0");
  if (!(guard_factor > 0.0)) throw std::invalid_argument("SimConfig: guard_factor must be positive");
  if (!(fixed_dt >= 0.0)) throw std::invalid_argument("SimConfig: fixed_dt must be >= 0");
}

const Sample& Trajectory::at(double t) const {
  auto it = std::lower_bound(samples.begin(), samples.end(), t, [](const Sample& s, double v) { return s.t < v; });
  if (it == samples.end() || it->t != t) throw std::out_of_range("trajectory has no sample at the requested time");
  return *it;
}

bool Trajectory::event_in(double t0, double t1) const {
  return std::any_of(events.events.begin(), events.events.end(),
                     [&](const CollisionEvent& e) { return e.t > t0 && e.t <= t1; });
}

Eigen::VectorXd velocity(const ParticleState& state, const KernelPair& pair) {
  Eigen::VectorXd v;
  if (!drift(state.x, state.b, active_indices(state.b), pair, v))
    throw std::domain_error("velocity: same-sign particles coincide (infinite energy)");
  return v;
}

double moments(const ParticleState& state, int k) {
  if (k != 1 && k != 2 && k != 4) throw std::invalid_argument("moments: k must be 1, 2 or 4");
  return moment<double>(state.x, k);
}

double min_same_sign_gap(const ParticleState& state) {
  double gap = std::numeric_limits<double>::infinity();
  int last_pos = -1, last_neg = -1;
  for (Eigen::Index i = 0; i < state.size(); ++i) {
    if (state.b[i] == 0) continue;
    int& last = state.b[i] > 0 ? last_pos : last_neg;
    if (last >= 0) gap = std::min(gap, state.x[i] - state.x[last]);
    last = static_cast<int>(i);
  }
  return gap;
}

StepResult step(const ParticleState& state, const KernelPair& pair, const SimConfig& config, double dt_try) {
  const auto act = active_indices(state.b);
  const Eigen::Index n = state.size();
  StepResult res;

  Eigen::VectorXd k1;
  if (!drift(state.x, state.b, act, pair, k1))
    throw StepFailure("step: same-sign coincidence in the start state\n" + dump_state(state, dt_try));

  const bool fixed = config.fixed_dt > 0.0;
  double dt = dt_try;
  if (!fixed) {
    const double gap = min_same_sign_gap(state);
    if (std::isfinite(gap) && pair.bound_rVprime > 0.0)
      dt = std::min(dt, config.guard_factor * static_cast<double>(n) * gap * gap / pair.bound_rVprime);
  }
  const double floor = std::min(config.dt_min, dt_try);

  for (;;) {
    if (dt < floor) throw StepFailure("step: dt fell below dt_min\n" + dump_state(state, dt));
    Trial tr = rk_trial(state, act, pair, k1, dt, config.tol_step, config.eps_annihilate);
    if (!fixed) {
      if (!tr.ok || !same_sign_order_preserved(tr.y, state.b, act)) {
        dt *= 0.5;
        ++res.rejections;
        continue;
      }
      if (tr.error > 1.0) {
        dt *= std::max(0.2, 0.9 * std::pow(tr.error, -0.2));
        ++res.rejections;
        continue;
      }
    } else if (!tr.ok) {
      throw StepFailure("step: fixed-dt trial hit a same-sign coincidence\n" + dump_state(state, dt));
    }
    res.state = state;
    res.state.x = std::move(tr.y);
    res.state.t = state.t + dt;
    res.dt_used = dt;
    res.error_estimate = tr.error;
    res.dissipation = tr.dissipation;
    const double grow = tr.error > 0.0 ? 0.9 * std::pow(tr.error, -0.2) : 5.0;
    res.dt_next = fixed ? config.fixed_dt : dt * std::clamp(grow, 0.2, 5.0);
    res.stages = std::move(tr.k);
    return res;
  }
}

Eigen::VectorXd dense_positions(const ParticleState& before, const StepResult& st, double theta) {
  Eigen::VectorXd y = before.x;
  if (st.stages.empty()) return y;
  std::array<double, 7> q{};
  for (int s = 0; s < 7; ++s) {
    double acc = 0.0, pw = theta;
    for (int p = 0; p < 4; ++p, pw *= theta) acc += P[s][p] * pw;
    q[s] = acc;
  }
  Eigen::VectorXd incr = Eigen::VectorXd::Zero(y.size());
  for (int s = 0; s < 7; ++s)
    if (q[s] != 0.0) incr += q[s] * st.stages[s];
  for (Eigen::Index i = 0; i < y.size(); ++i)
    if (before.b[i] != 0) y[i] += st.dt_used * incr[i];
  return y;
}

CollisionEvent annihilate_close_pairs(ParticleState& state, const KernelPair& pair, double eps_annihilate) {
  CollisionEvent ev;
  ev.t = state.t;
  ev.energy_before = energy(state, pair);
  int passes = 0;
  for (;;) {
    const auto act = active_indices(state.b);
    bool changed = false;
    for (std::size_t p = 0; p + 1 < act.size();) {
      const int i = act[p], j = act[p + 1];
      if (state.b[i] * state.b[j] == -1 && state.x[j] - state.x[i] <= eps_annihilate) {
        // A third active particle within the threshold makes this a cluster.
        if (p + 2 < act.size() && state.x[act[p + 2]] - state.x[j] <= eps_annihilate) ev.degenerate = true;
        if (p > 0 && state.x[i] - state.x[act[p - 1]] <= eps_annihilate) ev.degenerate = true;
        const double mid = 0.5 * (state.x[i] + state.x[j]);
        state.x[i] = state.x[j] = mid;
        state.b[i] = state.b[j] = 0;
        state.tau[i] = state.tau[j] = state.t;
        ev.indices.push_back(i);
        ev.indices.push_back(j);
        ev.pairs.emplace_back(state.b0[i] > 0 ? i : j, state.b0[i] > 0 ? j : i);
        changed = true;
        p += 2;
      } else {
        ++p;
      }
    }
    if (!changed) break;
    if (++passes > 1) ev.degenerate = true;
  }
  std::sort(ev.indices.begin(), ev.indices.end());
  ev.energy_after = ev.indices.empty() ? ev.energy_before : energy(state, pair);
  return ev;
}

AnnihilationOutcome detect_and_annihilate(const ParticleState& before, const StepResult& accepted,
                                          const KernelPair& pair, const SimConfig& config) {
  AnnihilationOutcome out;
  const auto act = active_indices(before.b);
  const auto cand = opposite_neighbours(before.b, act);
  const double eps = config.eps_annihilate;
  if (cand.empty() || !any_within(cand, accepted.state.x, eps)) return out;

  // Bisection on the dense output, evaluated for the candidate pairs only.
  const double h = accepted.dt_used;
  auto close_at = [&](double theta) {
    std::array<double, 7> q{};
    for (int s = 0; s < 7; ++s) {
      double acc = 0.0, pw = theta;
      for (int p = 0; p < 4; ++p, pw *= theta) acc += P[s][p] * pw;
      q[s] = acc;
    }
    auto pos = [&](int i) {
      double incr = 0.0;
      for (int s = 0; s < 7; ++s) incr += q[s] * accepted.stages[s][i];
      return before.x[i] + h * incr;
    };
    for (auto [i, j] : cand)
      if (pos(j) - pos(i) <= eps) return true;
    return false;
  };
  double lo = 0.0, hi = 1.0;
  while ((hi - lo) * h > config.eps_bisect) {
    const double mid = 0.5 * (lo + hi);
    (close_at(mid) ? hi : lo) = mid;
  }

  Eigen::VectorXd k1;
  drift(before.x, before.b, act, pair, k1);
  Trial tr = rk_trial(before, act, pair, k1, hi * h, config.tol_step);
  double t_hit = hi * h;
  if (!tr.ok || !any_within(cand, tr.y, eps)) {
    // Dense output and a direct step disagree near the root: bisect with direct steps.
    double lo_t = t_hit, hi_t = h;
    Trial best = rk_trial(before, act, pair, k1, hi_t, config.tol_step);
    while (hi_t - lo_t > config.eps_bisect) {
      const double mid = 0.5 * (lo_t + hi_t);
      Trial m = rk_trial(before, act, pair, k1, mid, config.tol_step);
      if (m.ok && any_within(cand, m.y, eps)) {
        hi_t = mid;
        best = std::move(m);
      } else {
        lo_t = mid;
      }
    }
    tr = std::move(best);
    t_hit = hi_t;
  }

  ParticleState at = before;
  at.x = tr.y;
  at.t = before.t + t_hit;
  out.dissipation = tr.dissipation;
  CollisionEvent ev = annihilate_close_pairs(at, pair, eps);
  out.events.push_back(std::move(ev));
  out.state_at_event = std::move(at);
  return out;
}

namespace {

Sample make_sample(const ParticleState& s, const KernelPair& pair, double dissipation, bool with_energy) {
  Sample smp;
  smp.t = s.t;
  smp.state = s;
  smp.energy = with_energy ? energy(s, pair) : std::numeric_limits<double>::quiet_NaN();
  smp.dissipation = dissipation;
  smp.m2 = moment<double>(s.x, 2);
  smp.m4 = moment<double>(s.x, 4);
  return smp;
}

}  // namespace

Trajectory run(const ParticleState& initial, const KernelPair& pair, const SimConfig& config) {
  config.validate();
  require_initial_datum(initial);
  if (!pair.admissible()) throw std::invalid_argument("run: kernel pair violates the role requirements on V and W");
  {
    const auto act = active_indices(initial.b);
    for (auto [i, j] : opposite_neighbours(initial.b, act))
      if (initial.x[j] - initial.x[i] <= config.eps_annihilate)
        throw std::invalid_argument("run: opposite-sign particles " + std::to_string(i) + " and " +
                                    std::to_string(j) + " start within the annihilation threshold");
  }

  std::vector<double> targets;
  for (double t : config.sample_times)
    if (t > 0.0 && t < config.T) targets.push_back(t);
  std::sort(targets.begin(), targets.end());
  targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
  targets.push_back(config.T);
  std::size_t next_target = 0;

  const bool fixed = config.fixed_dt > 0.0;
  const bool with_energy = config.track_energy;
  Trajectory traj;
  ParticleState state = initial;
  double diss = 0.0;
  traj.samples.push_back(make_sample(state, pair, diss, with_energy));

  double dt = fixed ? config.fixed_dt : config.dt_init;
  long since_record = 0;
  while (next_target < targets.size()) {
    const double target = targets[next_target];
    const double remaining = target - state.t;
    const double dt_try = std::min(dt, remaining);
    StepResult res = step(state, pair, config, dt_try);
    traj.rejected_steps += res.rejections;
    ++traj.accepted_steps;

    AnnihilationOutcome ann = detect_and_annihilate(state, res, pair, config);
    if (ann.state_at_event) {
      diss += ann.dissipation;
      state = std::move(*ann.state_at_event);
      for (auto& ev : ann.events) {
        if (!with_energy) ev.energy_before = ev.energy_after = std::numeric_limits<double>::quiet_NaN();
        traj.events.events.push_back(std::move(ev));
      }
      traj.samples.push_back(make_sample(state, pair, diss, with_energy));
      since_record = 0;
      dt = fixed ? config.fixed_dt : config.dt_init;
      if (state.t >= target) ++next_target;
      continue;
    }

    diss += res.dissipation;
    const bool landed = res.dt_used == remaining;
    state = std::move(res.state);
    if (landed) state.t = target;
    ++since_record;
    if (landed || (config.record_every > 0 && since_record >= config.record_every)) {
      traj.samples.push_back(make_sample(state, pair, diss, with_energy));
      since_record = 0;
    }
    if (landed) ++next_target;
    dt = res.dt_next;
  }
  traj.dissipation_integral = diss;
  return traj;
}

}  // namespace annihilate
