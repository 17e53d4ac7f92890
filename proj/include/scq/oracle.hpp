#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "scq/geometry.hpp"

namespace scq {

/// Thrown by OracleSession when a query would push the ledger past its budget.
class BudgetExhausted : public std::runtime_error {
 public:
  BudgetExhausted() : std::runtime_error("oracle query budget exhausted") {}
};

/// The only gateway to cluster identity. Answers come from ground-truth
/// labels, optionally flipped with probability `error_prob`; a noisy answer is
/// drawn once per unordered pair and replayed on repetition.
class OracleSession {
 public:
  explicit OracleSession(std::vector<ClusterId> truth, double error_prob = 0.0,
                         std::uint64_t seed = 0);

  bool same_cluster(std::size_t i, std::size_t j);

  std::uint64_t ledger() const { return ledger_; }
  double error_prob() const { return error_prob_; }
  bool noisy() const { return error_prob_ > 0.0; }
  std::size_t size() const { return truth_.size(); }

  /// Queries beyond `limit` throw BudgetExhausted; the ledger never exceeds it.
  void set_budget(std::optional<std::uint64_t> limit) { budget_ = limit; }
  std::optional<std::uint64_t> budget() const { return budget_; }

  /// Ground truth for evaluation code. Recovery algorithms never call this.
  ClusterId ground_truth(std::size_t i) const { return truth_.at(i); }

 private:
  std::vector<ClusterId> truth_;
  double error_prob_;
  std::mt19937_64 rng_;
  std::unordered_map<std::uint64_t, bool> answers_;
  std::uint64_t ledger_ = 0;
  std::optional<std::uint64_t> budget_;
};

/// Per discovered cluster, the point indices used to answer membership
/// questions: a single z_i for exact oracles, a set Z_i for noisy ones.
class Representatives {
 public:
  /// Opens cluster L+1 with `first` as its representative; returns L+1.
  ClusterId open(std::size_t first);
  void add(ClusterId id, std::size_t member);
  void truncate(ClusterId id, std::size_t cap);

  const std::vector<std::size_t>& members(ClusterId id) const {
    return sets_.at(static_cast<std::size_t>(id - 1));
  }
  std::size_t representative(ClusterId id) const { return members(id).front(); }
  std::size_t discovered_count() const { return sets_.size(); }

 private:
  std::vector<std::vector<std::size_t>> sets_;
};

/// Queries z_1..z_L in order and returns the first match, or opens a new
/// cluster with x as its representative. Uses at most L queries.
ClusterId classify(OracleSession& session, std::size_t x, Representatives& reps);

struct HeuristicOutcome {
  ClusterId cluster = 0;
  std::size_t queries_used = 0;
  bool opened = false;
};

/// Visits discovered clusters by increasing distance from x to their
/// approximate centers (ties by cluster index) and queries each one's
/// representative until a match. Every discovered cluster must have a center.
/// When nothing matches a new cluster is opened; the caller owns its center.
HeuristicOutcome heuristic_classify(OracleSession& session, const PointSet& x,
                                    std::size_t point, const CenterSet& centers,
                                    Representatives& reps);

/// Majority vote of x against each Z_i, i in `candidates` order. Returns the
/// first i for which strictly more than half of Z_i answers "same".
///
/// With `early_exit` the vote over Z_i stops as soon as the outcome is
/// decided; the decision is unchanged.
std::optional<ClusterId> check_cluster(OracleSession& session, std::size_t x,
                                       const Representatives& reps,
                                       std::span<const ClusterId> candidates,
                                       bool early_exit = false);

}  // namespace scq
