#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "scq/geometry.hpp"
#include "scq/oracle.hpp"
#include "scq/recovery.hpp"

namespace scq {

struct NoisyConfig {
  /// Must match the session's error probability.
  double p = 0.1;
  /// Representative sets hold ceil(rep_size_const * K / eps) points while they
  /// classify.
  double rep_size_const = 8.0;
  /// Recovered clusters keep ceil(retain_const * K / eps) representatives.
  double retain_const = 8.0;
  /// Phase 2 draws phase2_const * eps^-2 * q^2 * max(1, ln((k + q) / eps))^2.
  double phase2_const = 16.0;
  /// Groups smaller than min_cluster_frac * sqrt(T) * log2(T) are dropped.
  double min_cluster_frac = 1.0;
  /// Phase 2 gives up after this many doublings of q.
  std::size_t max_q_doublings = 4;

  void validate() const;
};

/// True when 1 - 2p is so small that majority votes need very large
/// representative sets (p > 0.45).
bool query_blowup_expected(double p);

std::size_t rep_size_cap(const NoisyConfig& config, std::size_t k_guess, double eps);
std::size_t retain_cap(const NoisyConfig& config, std::size_t k_guess, double eps);
double phase2_draws(const NoisyConfig& config, double eps, std::size_t k, std::size_t q);

/// min_cluster_frac * sqrt(t) * log2(t); 0 for t < 2.
double size_cutoff(std::size_t t, double min_cluster_frac);

struct FoundClusters {
  /// Surviving groups in opening order; members in sample order.
  std::vector<std::vector<std::size_t>> groups;
  double cutoff = 0.0;
  std::size_t dropped = 0;
};

/// Greedy majority linkage. Each sample joins the first open group for which
/// strictly more than half of its first `probe_cap` members answer "same",
/// otherwise it opens a new group. Groups below size_cutoff(basis) are
/// dropped, where basis defaults to samples.size().
///
/// This stands in for a stochastic-block-model recovery routine. It keeps the
/// interface (large groups out, quadratic queries at worst) but not its
/// guarantees.
FoundClusters find_clusters(std::span<const std::size_t> samples, OracleSession& session,
                            const NoisyConfig& config, std::size_t probe_cap,
                            std::size_t basis = 0);

/// Called at the end of every round with the representative sets.
using NoisyRoundObserver = std::function<void(std::size_t round, std::size_t k_guess,
                                              const Representatives& reps,
                                              const std::vector<RecoveredCluster>& recovered)>;

/// Recovery with a noisy oracle. Membership questions go through majority
/// votes against representative sets; new clusters are found by grouping a
/// batch of D^2 samples. Uses `recovery.eps`, `draw_cap`, `seed`,
/// `target_recovered` and the acceptance scale of `recovery.profile`.
RecoveryResult run_noisy(const PointSet& x, OracleSession& session,
                         const RecoveryConfig& recovery, const NoisyConfig& config,
                         NoisyRoundObserver observer = {});

}  // namespace scq
