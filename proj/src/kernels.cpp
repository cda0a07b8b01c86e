#include "annihilate/kernels.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <sstream>

namespace annihilate {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// Limits of |r K'(r)| as r -> 0 and r -> infinity.
std::pair<double, double> rprime_limits(const KernelFamily& family) {
  return std::visit(overloaded{
                        [](const LogRepulsive&) { return std::pair{1.0, 1.0}; },
                        [](const WallRepulsive&) { return std::pair{1.0, 0.0}; },
                        [](const RegularizedLogAttractive&) { return std::pair{0.0, 1.0}; },
                        [](const ZeroKernel&) { return std::pair{0.0, 0.0}; },
                    },
                    family);
}

std::vector<double> log_grid(double lo, double hi, int count) {
  std::vector<double> r(count);
  const double a = std::log(lo), b = std::log(hi);
  for (int i = 0; i < count; ++i) r[i] = std::exp(a + (b - a) * i / (count - 1));
  return r;
}

double sup_rprime(const KernelSpec& k) {
  const auto [at_zero, at_inf] = rprime_limits(k.family);
  double sup = std::max(at_zero, at_inf);
  for (double r : log_grid(1e-10, 1e6, 4000)) sup = std::max(sup, std::abs(r * eval_prime(k, r)));
  return sup;
}

double neg_sum_over_r2(const KernelSpec& v, const KernelSpec& w, double r) {
  return -(eval(v, r) + eval(w, r)) / (r * r);
}

double estimate_quadratic_constant(const KernelSpec& v, const KernelSpec& w) {
  const auto grid = log_grid(1e-8, 1e6, 4000);
  std::size_t arg = 0;
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double val = neg_sum_over_r2(v, w, grid[i]);
    if (val > best) best = val, arg = i;
  }
  // Refine between the neighbouring grid points of the maximiser.
  const double lo = grid[arg == 0 ? 0 : arg - 1];
  const double hi = grid[std::min(arg + 1, grid.size() - 1)];
  for (int i = 0; i <= 400; ++i) best = std::max(best, neg_sum_over_r2(v, w, lo + (hi - lo) * i / 400.0));
  return std::max(0.0, best);
}

}  // namespace

KernelSpec KernelSpec::regularized_log(double delta, KernelRole role) {
  if (!(delta > 0.0) || !std::isfinite(delta))
    throw std::invalid_argument("reglog: delta must be a positive length");
  return {RegularizedLogAttractive{delta}, role};
}

bool KernelSpec::singular_at_zero() const {
  return std::holds_alternative<LogRepulsive>(family) || std::holds_alternative<WallRepulsive>(family);
}

bool KernelSpec::admissible() const {
  return role == KernelRole::V ? singular_at_zero() : !singular_at_zero();
}

std::string KernelSpec::name() const {
  return std::visit(overloaded{
                        [](const LogRepulsive&) { return std::string("log"); },
                        [](const WallRepulsive&) { return std::string("wall"); },
                        [](const RegularizedLogAttractive& k) {
                          std::ostringstream os;
                          os.precision(17);
                          os << "reglog(" << k.delta << ")";
                          return os.str();
                        },
                        [](const ZeroKernel&) { return std::string("zero"); },
                    },
                    family);
}

KernelSpec parse_kernel(const std::string& text, KernelRole role) {
  std::string s;
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c))) s.push_back(static_cast<char>(std::tolower(c)));
  if (s == "log") return KernelSpec::log_repulsive(role);
  if (s == "wall") return KernelSpec::wall_repulsive(role);
  if (s == "zero") return KernelSpec::zero(role);
  if (s.starts_with("reglog(") && s.ends_with(")")) {
    const std::string arg = s.substr(7, s.size() - 8);
    char* end = nullptr;
    const double delta = std::strtod(arg.c_str(), &end);
    if (arg.empty() || end != arg.c_str() + arg.size())
      throw std::invalid_argument("kernel '" + text + "': bad reglog parameter");
    return KernelSpec::regularized_log(delta, role);
  }
  throw std::invalid_argument("unknown kernel '" + text + "' (expected log, wall, reglog(delta) or zero)");
}

KernelPair::KernelPair(KernelSpec v, KernelSpec w) : V(std::move(v)), W(std::move(w)) {
  V.role = KernelRole::V;
  W.role = KernelRole::W;
  bound_rVprime = sup_rprime(V);
  bound_rWprime = sup_rprime(W);
  bound_W0 = W.singular_at_zero() ? std::numeric_limits<double>::infinity() : eval(W, 0.0);
  // |K(r) - K(1)| <= sup|s K'(s)| |log r|, hence the growth constant.
  growth_constant = std::max(bound_rVprime + bound_rWprime, std::abs(eval(V, 1.0)) + std::abs(eval(W, 1.0)));
  quadratic_constant = estimate_quadratic_constant(V, W);
}

KernelPair KernelPair::checked(KernelSpec v, KernelSpec w) {
  v.role = KernelRole::V;
  w.role = KernelRole::W;
  if (!v.admissible())
    throw std::invalid_argument("kernel '" + v.name() + "' cannot be a V-kernel: V must diverge at 0");
  if (!w.admissible())
    throw std::invalid_argument("kernel '" + w.name() + "' cannot be a W-kernel: W must be finite at 0");
  return KernelPair(std::move(v), std::move(w));
}

bool ValidationReport::all_pass() const {
  return std::all_of(clauses.begin(), clauses.end(), [](const auto& c) { return c.pass; });
}

const ValidationClause& ValidationReport::clause(const std::string& name) const {
  for (const auto& c : clauses)
    if (c.name == name) return c;
  throw std::out_of_range("no validation clause named " + name);
}

std::vector<double> default_sample_grid() {
  std::vector<double> grid;
  for (double r : log_grid(1e-8, 1e4, 400)) {
    grid.push_back(r);
    grid.push_back(-r);
  }
  return grid;
}

ValidationReport validate_assumptions(const KernelPair& pair, std::span<const double> sample_grid) {
  ValidationReport report;
  std::vector<double> radii;
  for (double r : sample_grid)
    if (r != 0.0 && std::isfinite(r)) radii.push_back(std::abs(r));
  std::sort(radii.begin(), radii.end());
  radii.erase(std::unique(radii.begin(), radii.end()), radii.end());
  if (radii.empty()) {
    report.clauses.push_back({"sample_grid", false, 0.0, "no nonzero sample points"});
    return report;
  }

  // Evenness of K and oddness of K'.
  {
    double worst = 0.0;
    for (const KernelSpec* k : {&pair.V, &pair.W}) {
      for (double r : radii) {
        try {
          const double a = eval(*k, r), b = eval(*k, -r);
          worst = std::max(worst, std::abs(a - b) / std::max(1.0, std::abs(a)));
        } catch (const std::domain_error&) {
        }
        const double da = eval_prime(*k, r), db = eval_prime(*k, -r);
        worst = std::max(worst, std::abs(da + db) / std::max(1.0, std::abs(da)));
      }
    }
    report.clauses.push_back({"evenness", worst <= 1e-14, worst, "max relative asymmetry of K(r), K'(r)"});
  }

  auto rprime_clause = [&](const char* name, const KernelSpec& k, double stored) {
    double sup = 0.0;
    for (double r : radii) sup = std::max(sup, std::abs(r * eval_prime(k, r)));
    const bool ok = std::isfinite(sup) && sup <= stored * (1 + 1e-12) + 1e-300;
    std::ostringstream os;
    os << "empirical sup |r K'(r)| (stored bound " << stored << ")";
    report.clauses.push_back({name, ok, sup, os.str()});
  };
  rprime_clause("rVprime_bounded", pair.V, pair.bound_rVprime);
  rprime_clause("rWprime_bounded", pair.W, pair.bound_rWprime);

  // V must blow up as r -> 0: strictly increasing over the smallest decades.
  {
    const double r0 = radii.front();
    bool ok = false;
    double v0 = 0.0;
    try {
      v0 = eval(pair.V, r0);
      const double v2 = eval(pair.V, r0 * 1e2), v4 = eval(pair.V, r0 * 1e4);
      ok = v0 > v2 && v2 > v4 && v0 - v4 > 1.0;
    } catch (const std::domain_error&) {
    }
    report.clauses.push_back({"V_singular_at_zero", ok, v0, "V at the smallest sampled |r|"});
  }

  // W finite and continuous at 0.
  {
    bool ok = false;
    double w0 = std::numeric_limits<double>::infinity();
    if (!pair.W.singular_at_zero()) {
      w0 = eval(pair.W, 0.0);
      const double r0 = radii.front();
      ok = std::isfinite(w0) && std::abs(eval(pair.W, r0) - w0) <= 1e-6 && std::isfinite(eval_prime(pair.W, r0));
    }
    report.clauses.push_back({"W_regular_at_zero", ok, w0, "W(0)"});
  }

  // |V| + |W| <= C (|log r| + 1).
  {
    double worst = 0.0;
    for (double r : radii) {
      const double lhs = std::abs(eval(pair.V, r)) + std::abs(eval(pair.W, r));
      worst = std::max(worst, lhs / (std::abs(std::log(r)) + 1.0));
    }
    const bool ok = std::isfinite(worst) && worst <= pair.growth_constant * (1 + 1e-9);
    std::ostringstream os;
    os << "max (|V|+|W|)/(|log r|+1) against C = " << pair.growth_constant;
    report.clauses.push_back({"log_growth", ok, worst, os.str()});
  }

  // (V + W)(r) >= -C r^2, with C estimated on the grid.
  {
    double worst = -std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    for (std::size_t i = 0; i < radii.size(); ++i) {
      const double val = neg_sum_over_r2(pair.V, pair.W, radii[i]);
      if (val > worst) worst = val, arg = i;
    }
    const double estimate = std::max(0.0, worst);
    const bool interior = worst <= 0.0 || arg > 0;
    const bool ok = std::isfinite(estimate) && interior && estimate <= pair.quadratic_constant * (1 + 1e-6) + 1e-12;
    std::ostringstream os;
    os << "estimated C in (V+W)(r) >= -C r^2 (stored " << pair.quadratic_constant << ")";
    report.clauses.push_back({"quadratic_lower_bound", ok, estimate, os.str()});
  }
  return report;
}

}  // namespace annihilate
