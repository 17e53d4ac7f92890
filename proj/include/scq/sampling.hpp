#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "scq/geometry.hpp"
#include "scq/oracle.hpp"

namespace scq {

using Rng = std::mt19937_64;

/// Uniform double in [0, 1) built from the top 53 bits of one draw.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform index in [0, n).
std::size_t uniform_index(Rng& rng, std::size_t n);

/// One classified draw: the element (x, i) of the sample multiset S.
struct SampleRecord {
  std::size_t point = 0;
  ClusterId cluster = 0;
};

/// D^2-sampling weights Phi({x}, C), maintained incrementally as centers are
/// added. With no centers every weight is 1 and draws are uniform.
class SamplerState {
 public:
  explicit SamplerState(const PointSet& points);

  void add_center(std::span<const double> center);

  /// Draws x with probability weight(x) / total(). Returns nullopt when a
  /// non-empty C covers every point exactly (total is 0).
  std::optional<std::size_t> d2_sample(Rng& rng);

  double weight(std::size_t i) const { return weights_[i]; }
  std::span<const double> weights() const { return weights_; }
  double total() const { return total_; }
  bool has_centers() const { return centers_ > 0; }
  std::size_t centers_version() const { return centers_; }
  const PointSet& points() const { return *points_; }

 private:
  void rebuild_prefix();

  const PointSet* points_;
  std::vector<double> weights_;
  std::vector<double> prefix_;
  double total_ = 0.0;
  std::size_t centers_ = 0;
  bool prefix_stale_ = true;
};

/// The candidate with the smallest current weight; ties go to the lowest
/// point index.
std::size_t reference_point(std::span<const std::size_t> candidates,
                            const SamplerState& state);

/// min(1, scale * w_ref / w_x). A zero-weight x sits on a center and is
/// always accepted.
double acceptance_probability(double w_ref, double w_x, double scale);

/// Returns a cluster index for a point, or nullopt when the classifier cannot
/// place it (noisy majority votes).
using ClassifyFn = std::function<std::optional<ClusterId>(std::size_t)>;

struct RejectionRequest {
  std::vector<ClusterId> targets;
  std::map<ClusterId, std::size_t> references;
  std::size_t quota = 0;
  /// Uniform points a target already holds; they count toward its quota.
  std::map<ClusterId, std::size_t> have;
  /// eps / 128 in the analysed algorithm.
  double scale = 1.0;
  std::uint64_t draw_cap = 100'000'000;
  /// Ends the loop once this many targets hold their quota; 0 waits for all.
  std::size_t stop_after = 0;
};

/// A draw rej_samp paid to classify. It passed the coin against `ceiling`,
/// the largest reference weight among targets still short of quota, so for
/// any other cluster a reference weight capped at `ceiling` settles the same
/// coin without bias.
struct ClassifiedDraw {
  std::size_t point = 0;
  ClusterId cluster = 0;
  double coin = 0.0;
  double ceiling = 0.0;
};

struct RejectionResult {
  std::map<ClusterId, std::vector<std::size_t>> accepted;
  /// Every draw that was classified, in order.
  std::vector<ClassifiedDraw> classified;
  std::uint64_t draws = 0;
  std::uint64_t queries = 0;
  /// Targets whose quota was not met when the loop ended.
  std::vector<ClusterId> starved;
  /// The oracle budget ran out mid-loop; `accepted` holds what came before.
  bool budget_exhausted = false;
  bool complete() const { return starved.empty(); }
};

/// Rejection sampling on a set of target clusters: D^2 draws landing in
/// target j are kept with probability acceptance_probability(w(x_j*), w(x)),
/// which makes kept points uniform over X_j. Runs until every target holds
/// `quota` points, counting request.have.
///
/// The acceptance coin is tossed before the oracle is consulted and a draw
/// is classified only if it could be kept by some target. The kept sets have
/// the same distribution as classify-then-toss; rejected draws cost no
/// queries.
RejectionResult rej_samp(SamplerState& state, const ClassifyFn& classify_fn,
                         const OracleSession& session,
                         const RejectionRequest& request, Rng& rng);

}  // namespace scq
