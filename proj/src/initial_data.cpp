#include "annihilate/initial_data.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace annihilate {

namespace {

double profile_cdf(Profile p, double s) {
  s = std::clamp(s, 0.0, 1.0);
  switch (p) {
    case Profile::Uniform:
      return s;
    case Profile::Cosine:
      return s - std::sin(2.0 * std::numbers::pi * s) / (2.0 * std::numbers::pi);
    case Profile::Semicircle: {
      const double u = 2.0 * s - 1.0;
      return 0.5 + (u * std::sqrt(std::max(0.0, 1.0 - u * u)) + std::asin(u)) / std::numbers::pi;
    }
  }
  return s;
}

double profile_density(Profile p, double s) {
  if (s < 0.0 || s > 1.0) return 0.0;
  switch (p) {
    case Profile::Uniform:
      return 1.0;
    case Profile::Cosine:
      return 1.0 - std::cos(2.0 * std::numbers::pi * s);
    case Profile::Semicircle: {
      const double u = 2.0 * s - 1.0;
      return 4.0 / std::numbers::pi * std::sqrt(std::max(0.0, 1.0 - u * u));
    }
  }
  return 0.0;
}

}  // namespace

Profile parse_profile(const std::string& text) {
  if (text == "uniform") return Profile::Uniform;
  if (text == "cosine") return Profile::Cosine;
  if (text == "semicircle") return Profile::Semicircle;
  throw std::invalid_argument("unknown profile '" + text + "' (expected uniform, cosine or semicircle)");
}

std::string profile_name(Profile p) {
  switch (p) {
    case Profile::Uniform:
      return "uniform";
    case Profile::Cosine:
      return "cosine";
    case Profile::Semicircle:
      return "semicircle";
  }
  return "uniform";
}

double DensityBlock::cdf(double x) const { return profile_cdf(profile, (x - lo) / (hi - lo)); }

double DensityBlock::density(double x) const {
  return mass * profile_density(profile, (x - lo) / (hi - lo)) / (hi - lo);
}

double DensityBlock::quantile(double u) const {
  double a = lo, b = hi;
  for (int it = 0; it < 200 && b - a > 0.0; ++it) {
    const double m = 0.5 * (a + b);
    if (m <= a || m >= b) break;
    (cdf(m) < u ? a : b) = m;
  }
  return 0.5 * (a + b);
}

void validate_blocks(const std::vector<DensityBlock>& blocks) {
  if (blocks.empty()) throw std::invalid_argument("initial data: no blocks");
  double total = 0.0;
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    const auto& b = blocks[k];
    const std::string tag = "block " + std::to_string(k);
    if (b.species != 1 && b.species != -1) throw std::invalid_argument(tag + ": species must be +1 or -1");
    if (!(b.lo < b.hi)) throw std::invalid_argument(tag + ": need lo < hi");
    if (!(b.mass > 0.0)) throw std::invalid_argument(tag + ": mass must be positive");
    if (!(b.jitter >= 0.0 && b.jitter < 0.5)) throw std::invalid_argument(tag + ": jitter must lie in [0, 0.5)");
    if (k > 0 && blocks[k - 1].hi > b.lo)
      throw std::invalid_argument(tag + ": overlaps block " + std::to_string(k - 1) + " (blocks must be ordered)");
    total += b.mass;
  }
  if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("initial data: block masses must sum to 1");
}

std::vector<int> block_counts(const std::vector<DensityBlock>& blocks, int n) {
  std::vector<int> counts;
  int total = 0;
  for (const auto& b : blocks) {
    const int c = static_cast<int>(std::lround(b.mass * n));
    if (c < 1) throw std::invalid_argument("initial data: a block receives no particle at n = " + std::to_string(n));
    counts.push_back(c);
    total += c;
  }
  if (total != n)
    throw std::invalid_argument("initial data: rounded block counts sum to " + std::to_string(total) +
                                ", not n = " + std::to_string(n));
  return counts;
}

ParticleState quantile_state(const std::vector<DensityBlock>& blocks, int n, std::uint64_t seed) {
  validate_blocks(blocks);
  const auto counts = block_counts(blocks, n);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  Eigen::VectorXd x(n);
  Eigen::VectorXi b(n);
  int idx = 0;
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    const auto& blk = blocks[k];
    const int nb = counts[k];
    for (int q = 0; q < nb; ++q) {
      double level = (q + 0.5) / nb;
      if (blk.jitter > 0.0) level += blk.jitter * unit(rng) / nb;
      x[idx] = blk.quantile(level);
      b[idx] = blk.species;
      ++idx;
    }
  }
  return ParticleState::initial(std::move(x), std::move(b));
}

GridDensityPair cell_averages(const std::vector<DensityBlock>& blocks, const Grid& grid) {
  validate_blocks(blocks);
  if (blocks.front().lo < grid.x_min || blocks.back().hi > grid.x_max)
    throw std::invalid_argument("initial data: blocks extend outside the continuum grid");
  GridDensityPair d = GridDensityPair::zero(grid);
  const double dx = grid.dx();
  for (const auto& blk : blocks) {
    Eigen::VectorXd& rho = blk.species > 0 ? d.rho_plus : d.rho_minus;
    for (int i = 0; i < grid.cells; ++i) {
      const double a = grid.x_min + i * dx, c = a + dx;
      if (c <= blk.lo || a >= blk.hi) continue;
      rho[i] += blk.mass * (blk.cdf(c) - blk.cdf(a)) / dx;
    }
  }
  return d;
}

}  // namespace annihilate
