#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "scq/datasets.hpp"
#include "scq/geometry.hpp"
#include "scq/noisy.hpp"
#include "scq/recovery.hpp"
#include "scq/synthgen.hpp"

namespace scq {

enum class Mode {
  kFixedBudget,
  kFixedRecovery,
  kErrorReport,
  kClassifyStudy,
  kReducibilityCheck
};
std::string_view to_string(Mode m);

/// Where a trial's points come from. Synthetic data is regenerated per trial
/// with seed synth.seed + trial; a file is loaded once.
struct DataSource {
  std::optional<SynthConfig> synth;
  std::optional<DatasetSpec> file;
};

struct ExperimentPlan {
  Mode mode = Mode::kFixedRecovery;
  std::vector<Algorithm> algorithms{Algorithm::kUniform, Algorithm::kBasic,
                                    Algorithm::kImprovedSimple};
  /// Budgets (fixed_budget) or recovery targets (the other modes).
  std::vector<std::uint64_t> points;
  std::size_t trials = 100;
  std::uint64_t seed = 1;
  /// eps, heavy_threshold, reuse_samples, profile and draw_cap apply to every
  /// run; seed and target are set per trial.
  RecoveryConfig recovery;
  double noise_p = 0.0;
  NoisyConfig noisy;
  DataSource data;

  void validate() const;
};

struct TrialRecord {
  Algorithm algorithm = Algorithm::kBasic;
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  /// Budget or target this record measures; 0 when the mode has none.
  std::uint64_t x = 0;
  /// Clusters recovered (fixed_budget), queries (fixed_recovery), median
  /// centroid error (error_report), share of single-query points
  /// (classify_study), or 1/0 pass (reducibility_check).
  double value = 0.0;
  bool censored = false;
  std::uint64_t queries = 0;
  std::uint64_t samples = 0;
  std::size_t clusters_recovered = 0;
  std::size_t clusters_discovered = 0;
  std::uint64_t rounds = 0;
  std::vector<double> errors;
  std::map<std::size_t, std::uint64_t> classify_histogram;
  /// classify_study: points whose assigned cluster carries their true label.
  std::size_t classified_correct = 0;
  std::size_t classified_points = 0;
  /// reducibility_check: the largest violation ratio.
  std::optional<double> worst_ratio;
  double wall_seconds = 0.0;
};

struct TableRow {
  Algorithm algorithm = Algorithm::kBasic;
  std::uint64_t x = 0;
  /// Over uncensored trials; NaN when every trial was censored.
  double mean = 0.0;
  double sd = 0.0;
  std::size_t trials = 0;
  std::size_t censored = 0;

  bool operator==(const TableRow&) const = default;
};
using Table = std::vector<TableRow>;

struct ExperimentOutput {
  std::vector<TrialRecord> trials;
  Table table;
};

/// Runs one algorithm; `noisy` is only read by Algorithm::kNoisy.
RecoveryResult run_algorithm(Algorithm algorithm, const PointSet& x, OracleSession& session,
                             const RecoveryConfig& config, const NoisyConfig& noisy = {});

/// Groups records by (algorithm, x) in first-appearance order. sd is the
/// sample standard deviation (0 for a single trial).
Table aggregate(const std::vector<TrialRecord>& records);

/// Dispatches on plan.mode.
ExperimentOutput run_experiment(const ExperimentPlan& plan);

/// Clusters recovered at each budget. A run is stopped before the first
/// query past the budget; recoveries still in flight do not count.
ExperimentOutput run_fixed_budget(const ExperimentPlan& plan);
/// Oracle ledger at the moment the target count is reached; runs that never
/// reach it are censored.
ExperimentOutput run_fixed_recovery(const ExperimentPlan& plan);
/// Per trial, the median centroid error of clusters recovered when the
/// target was reached.
ExperimentOutput run_error_report(const ExperimentPlan& plan);
ExperimentOutput run_classify_study(const ExperimentPlan& plan);
ExperimentOutput run_reducibility_check(const ExperimentPlan& plan);

/// Mean of the middle pair for even sizes; NaN for an empty input.
double median(std::vector<double> values);

struct ClassifyStudy {
  std::map<std::size_t, std::uint64_t> histogram;
  std::size_t points = 0;
  std::size_t correct = 0;
  std::size_t opened = 0;
  double single_query_share() const;
};

/// Pushes every point through heuristic_classify against the recovered
/// clusters, in a fresh exact session. Representatives and centers come from
/// `result`; clusters opened along the way are centered on the running mean
/// of their members. `correct` counts points whose assigned cluster has the
/// point's ground-truth label.
ClassifyStudy classify_study(const PointSet& x, const RecoveryResult& result);

struct ReducibilityReport {
  bool pass = true;
  std::optional<ClusterId> worst;
  double worst_ratio = 0.0;
  /// I was empty and every ratio used the no-center cost convention.
  bool empty_recovered = false;
  std::map<ClusterId, double> ratios;
};

/// For each label l outside `recovered`, the ratio
/// Phi(X_l, {mu_i : i in I}) / (eps * sum_{i in I} Phi(X_i, mu_i)) with true
/// centroids mu_i. Passes when every ratio is at most 1.
ReducibilityReport check_reducibility(const PointSet& x, const std::set<ClusterId>& recovered,
                                      double eps);

/// `algorithm,x,mean,sd,trials,censored` with %.17g numbers.
std::string table_to_csv(const Table& table);
Table table_from_csv(const std::string& text);

/// {"plan": ..., "trials": [...], "table": [...]}. Non-finite numbers are
/// written as the strings "inf", "-inf" and "nan".
std::string experiment_to_json(const ExperimentPlan& plan, const ExperimentOutput& out);
std::vector<TrialRecord> trials_from_json(const std::string& text);

}  // namespace scq
