#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "annihilate/continuum.hpp"
#include "annihilate/dynamics.hpp"

namespace annihilate {

enum class Profile { Uniform, Cosine, Semicircle };

Profile parse_profile(const std::string& text);
std::string profile_name(Profile p);

/// Species density supported on [lo, hi] with total mass `mass`.
/// jitter in [0, 0.5) perturbs the quantile levels by up to jitter/n_b.
struct DensityBlock {
  int species = 1;
  double lo = 0.0;
  double hi = 1.0;
  double mass = 1.0;
  Profile profile = Profile::Uniform;
  double jitter = 0.0;

  /// Normalised CDF of the profile in s = (x - lo)/(hi - lo), on [0, 1].
  double cdf(double x) const;
  double density(double x) const;
  /// Inverse CDF by bisection to full double precision.
  double quantile(double u) const;
};

/// Blocks must be ordered with hi_k <= lo_{k+1}, species +-1, masses > 0
/// summing to 1. Throws std::invalid_argument otherwise.
void validate_blocks(const std::vector<DensityBlock>& blocks);

/// Number of particles per block, round(mass * n). Throws if they do not sum to n.
std::vector<int> block_counts(const std::vector<DensityBlock>& blocks, int n);

/// n particles placed at the midpoint quantiles (k - 1/2)/n_b of each block.
ParticleState quantile_state(const std::vector<DensityBlock>& blocks, int n, std::uint64_t seed = 0);

/// Exact cell averages of the block densities.
GridDensityPair cell_averages(const std::vector<DensityBlock>& blocks, const Grid& grid);

}  // namespace annihilate
