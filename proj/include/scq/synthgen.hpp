#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "scq/geometry.hpp"
#include "scq/sampling.hpp"

namespace scq {

/// kRank gives cluster i a share proportional to i^-alpha. kSampled draws K
/// Zipf(alpha) variates and rescales them to n.
enum class SizeMode { kRank, kSampled };

struct SynthConfig {
  std::size_t n = 1'000'000;
  std::size_t k = 100;
  double alpha = 2.5;
  double sigma = 0.3;
  double box = 5.0;
  std::size_t dim = 10;
  double rho = 0.1;
  double p_collision = 0.0;
  std::uint64_t seed = 1;
  SizeMode sizes = SizeMode::kRank;

  void validate() const;
};

/// Scales positive weights to integers summing to n: floors first, then the
/// leftover units go to the largest fractional parts (ties to the lower
/// index). Zero entries are then raised to 1, each unit taken from the
/// current largest entry. Requires n >= weights.size().
std::vector<std::size_t> apportion(const std::vector<double>& weights, std::size_t n);

/// K i.i.d. Zipf(alpha) variates on {1..n} by inverse CDF, apportioned to n.
std::vector<std::size_t> zipf_sizes(std::size_t k, double alpha, std::size_t n, Rng& rng);

/// Deterministic variant: weight i^-alpha for rank i.
std::vector<std::size_t> rank_zipf_sizes(std::size_t k, double alpha, std::size_t n);

/// Connected components of an Erdos-Renyi graph on clusters 1..K with edge
/// probability p. Components are ordered by their smallest member; members
/// ascend. The first member leads.
std::vector<std::vector<ClusterId>> collision_groups(std::size_t k, double p, Rng& rng);

/// Uniform point in the ball of the given radius around the origin.
Point uniform_in_ball(std::size_t dim, double radius, Rng& rng);

struct SynthDataset {
  PointSet points;
  /// centers[i - 1] generated cluster i.
  std::vector<Point> centers;
  std::vector<std::size_t> sizes;
  std::vector<std::vector<ClusterId>> groups;
};

SynthDataset generate(const SynthConfig& config);

/// Writes coordinates as columns x1..xd followed by a `label` column.
void write_csv(const PointSet& points, const std::string& path);

}  // namespace scq
