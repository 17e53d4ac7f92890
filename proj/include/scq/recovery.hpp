#pragma once

#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "scq/geometry.hpp"
#include "scq/oracle.hpp"
#include "scq/sampling.hpp"

namespace scq {

enum class Algorithm { kUniform, kBasic, kImproved, kImprovedSimple, kNoisy };

/// kTheory runs the analysed thresholds verbatim. kExperimental runs the
/// practical variant used for measurements: a cluster is recovered once it
/// holds `heavy_threshold` samples, classification visits clusters by
/// distance to their running centers, and rejection sampling accepts with
/// w(x*)/w(x).
enum class Profile { kTheory, kExperimental };

std::string_view to_string(Algorithm a);
std::string_view to_string(Profile p);
std::optional<Algorithm> parse_algorithm(std::string_view s);
std::optional<Profile> parse_profile(std::string_view s);

struct RecoveryConfig {
  double eps = 0.5;
  std::size_t heavy_threshold = 10;
  bool reuse_samples = true;
  std::uint64_t draw_cap = 100'000'000;
  std::uint64_t seed = 1;
  Algorithm algorithm = Algorithm::kBasic;
  Profile profile = Profile::kExperimental;
  /// Overrides the rejection acceptance scale (eps/128 for kTheory, 1 for
  /// kExperimental).
  std::optional<double> acceptance_scale;
  /// Stop as soon as this many clusters are recovered; 0 runs to termination.
  std::size_t target_recovered = 0;

  void validate() const;
  double effective_acceptance_scale() const;
  bool nearest_center_order() const { return profile == Profile::kExperimental; }
};

/// Sampling thresholds of the basic and improved algorithms. Logarithms of
/// cluster counts are base 2, rounded up, and at least 1.
namespace thresholds {
std::size_t log2_ceil(std::size_t q);
double phase1(double eps, std::size_t k);
double basic_phase2(double eps, std::size_t k, std::size_t q);
double basic_t2(double eps, std::size_t k, std::size_t q);
double basic_t3(double eps, std::size_t round);
double improved_phase2(double eps, std::size_t k, std::size_t q, std::size_t w);
double improved_t2(double eps, std::size_t k, std::size_t q, std::size_t w);
double improved_t3(double eps, std::size_t k_guess);
}  // namespace thresholds

/// Dyadic bands of empirical frequencies. bands[l-1] holds B_l for
/// l = 1..levels; bands[levels] is the tail.
struct BandPartition {
  std::size_t levels = 0;
  std::vector<std::vector<ClusterId>> bands;
  std::vector<double> mass;
  std::vector<bool> heavy;

  std::vector<ClusterId> heavy_clusters() const;
  /// 1-based band number; levels + 1 for the tail.
  std::size_t band_of(ClusterId id) const;
};

/// The l with 2^-l < p <= 2^(1-l), for p in (0, 1].
std::size_t dyadic_band(double p);

/// Splits clusters by p_hat into levels = max(1, ceil(3 log2 q)) bands plus a
/// tail. For q >= 2 the tail holds exactly p_hat <= 1/q^3; with q = 1 there
/// is no tail. A band is heavy when its mass is at least 1/(3 levels); the
/// tail is never heavy.
BandPartition split_bands(const std::map<ClusterId, double>& p_hat,
                          std::size_t q);

enum class StopReason { kTerminated, kTargetReached, kBudgetExhausted, kDrawCap };
std::string_view to_string(StopReason r);

struct RecoveredCluster {
  ClusterId id = 0;
  std::size_t representative = 0;
  Point center;
  /// Number of uniform samples averaged into `center`.
  std::size_t support = 0;
  std::size_t round = 0;
  std::uint64_t queries_at = 0;
  std::uint64_t draws_at = 0;
  std::optional<ClusterId> truth_label;
  std::optional<double> error;
};

struct RoundLog {
  std::size_t round = 0;
  std::size_t k_guess = 0;
  std::uint64_t draws = 0;
  std::uint64_t queries = 0;
  std::size_t discovered = 0;
  std::size_t recovered = 0;
  std::size_t selected = 0;
};

struct RecoveryResult {
  Algorithm algorithm = Algorithm::kBasic;
  Profile profile = Profile::kExperimental;
  CenterSet centers;
  /// In recovery order.
  std::vector<RecoveredCluster> recovered;
  /// Clusters given up on because rejection sampling ran dry.
  std::vector<ClusterId> starved;
  std::size_t discovered = 0;
  std::uint64_t queries_total = 0;
  std::uint64_t samples_total = 0;
  std::uint64_t rounds_total = 0;
  std::vector<RoundLog> rounds;
  StopReason stop = StopReason::kTerminated;

  std::size_t k_recovered() const { return recovered.size(); }
  bool complete() const {
    return stop == StopReason::kTerminated || stop == StopReason::kTargetReached;
  }
};

/// Canonical serialisation; identical runs produce identical strings.
std::string to_json(const RecoveryResult& result);

/// Fills `error` for every recovered cluster with a truth label.
void evaluate_errors(RecoveryResult& result, const PointSet& x);

class RecoveryEngine;

/// kSelected fires once W is fixed and before recovery; kEnded closes a round.
enum class RoundStage { kSelected, kEnded };

struct RoundSnapshot {
  RoundStage stage;
  const RecoveryEngine& engine;
};
using RoundObserver = std::function<void(const RoundSnapshot&)>;

/// Thrown by engine primitives to end a run early.
class RunStopped : public std::exception {
 public:
  explicit RunStopped(StopReason reason) : reason_(reason) {}
  StopReason reason() const { return reason_; }
  const char* what() const noexcept override { return "recovery run stopped"; }

 private:
  StopReason reason_;
};

/// Shared machinery of the exact-oracle algorithms: the sample multiset S,
/// recovered set I, the round's newly discovered set Q, and the phase
/// primitives. Algorithms are written against this class; tests drive the
/// phases directly.
///
/// With reuse_samples, every D^2 draw made by sample() carries an acceptance
/// coin that is settled when its cluster is recovered, against the reference
/// point weighted under the centers present at draw time. Draws that pass
/// are uniform over their cluster and count toward the rejection quota.
class RecoveryEngine {
 public:
  RecoveryEngine(const PointSet& x, OracleSession& session, RecoveryConfig config,
                 RoundObserver observer = {});

  void begin_round(std::size_t k_guess = 0);
  void end_round();
  /// Notifies the observer that W is fixed.
  void announce_selection();

  /// Draws until a sample lands outside I (and outside given-up clusters) or
  /// floor(T1) + 1 draws were made this round; the experimental profile
  /// allows floor(h * T1) + 1. Returns whether Q is non-empty.
  bool phase1_probe();

  /// One D^2 draw, classified and recorded.
  SampleRecord sample();

  /// One uniform draw, classified and recorded (the uniform baseline).
  SampleRecord sample_uniform();

  /// Picks a reference point per target, tops its pool of uniform points up
  /// to `quota` by rejection sampling, and recovers every target that met
  /// its quota with the centroid of the pool.
  /// Returns the recovered ids.
  std::vector<ClusterId> recover(std::span<const ClusterId> targets,
                                 std::size_t quota);

  /// Records a cluster as recovered with the given center.
  void mark_recovered(ClusterId id, Point center, std::size_t support);
  /// Mean of every classified draw of cluster `id` so far.
  Point running_mean(ClusterId id) const;
  void give_up(std::span<const ClusterId> ids);

  std::size_t round() const { return round_; }
  std::size_t k() const { return recovered_.size(); }
  const std::set<ClusterId>& newly_discovered() const { return q_; }
  std::vector<ClusterId>& selected() { return w_; }
  const std::vector<ClusterId>& selected() const { return w_; }
  std::size_t k_guess() const { return k_guess_; }
  bool is_given_up(ClusterId id) const { return given_up_.count(id) != 0; }
  std::uint64_t sample_size() const { return s_total_; }
  std::uint64_t round_draws() const { return round_draws_; }
  std::uint64_t count(ClusterId id) const;
  /// Uniform points held for cluster `id` (settled coins plus earlier
  /// rejection rounds).
  std::size_t pooled(ClusterId id) const;
  std::uint64_t draws() const { return draws_; }
  std::uint64_t queries() const;
  bool is_recovered(ClusterId id) const { return recovered_ids_.count(id) != 0; }
  const std::vector<RecoveredCluster>& recovered() const { return recovered_; }
  const SamplerState& sampler() const { return sampler_; }
  const Representatives& representatives() const { return reps_; }
  const RecoveryConfig& config() const { return config_; }

  /// s_i / sum of s_j over unrecovered clusters, for every unrecovered
  /// cluster with samples in S.
  std::map<ClusterId, double> p_hat() const;

  /// Largest-count cluster in Q; ties go to the lowest index. 0 if Q holds
  /// nothing eligible.
  ClusterId argmax_newly_discovered() const;

  RecoveryResult finish(StopReason reason);

 private:
  ClusterId classify_point(std::size_t point);
  void record(std::size_t point, ClusterId id);
  void update_order_center(ClusterId id, std::size_t point);
  void check_target();
  void grow(ClusterId id);
  /// Phi({x}, first `centers` recovered centers); 1 with no centers.
  double weight_under(std::size_t point, std::size_t centers) const;

  struct PendingDraw {
    std::size_t point;
    double coin;
    std::size_t centers;
    double weight;
    double ceiling;
  };

  const PointSet& x_;
  OracleSession& session_;
  RecoveryConfig config_;
  RoundObserver observer_;
  Rng rng_;
  SamplerState sampler_;
  Representatives reps_;

  CenterSet order_centers_;
  std::vector<std::vector<double>> running_sums_;
  std::vector<std::uint64_t> classified_counts_;

  std::vector<std::uint64_t> s_counts_;
  std::vector<std::vector<std::size_t>> s_points_;
  std::vector<char> in_s_;
  std::uint64_t s_total_ = 0;
  std::vector<std::vector<PendingDraw>> pending_;
  std::vector<std::vector<std::size_t>> pool_;
  std::vector<Point> center_history_;

  std::vector<RecoveredCluster> recovered_;
  std::set<ClusterId> recovered_ids_;
  std::set<ClusterId> given_up_;
  CenterSet centers_;

  std::size_t round_ = 0;
  std::size_t k_guess_ = 0;
  std::set<ClusterId> q_;
  std::vector<ClusterId> w_;
  bool round_open_ = false;
  std::uint64_t round_draws_ = 0;
  std::uint64_t round_draw_start_ = 0;
  std::uint64_t round_query_start_ = 0;
  std::uint64_t draws_ = 0;
  std::uint64_t ledger_start_ = 0;
  std::vector<RoundLog> logs_;
};

RecoveryResult run_basic(const PointSet& x, OracleSession& session,
                         const RecoveryConfig& config, RoundObserver observer = {});
RecoveryResult run_improved(const PointSet& x, OracleSession& session,
                            const RecoveryConfig& config,
                            RoundObserver observer = {});
RecoveryResult run_improved_simplified(const PointSet& x, OracleSession& session,
                                       const RecoveryConfig& config,
                                       RoundObserver observer = {});
RecoveryResult run_uniform(const PointSet& x, OracleSession& session,
                           const RecoveryConfig& config);

}  // namespace scq
