#include "scq/noisy.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <utility>

#include "scq/sampling.hpp"

namespace scq {

void NoisyConfig::validate() const {
  if (!(p >= 0.0 && p < 0.5)) throw std::invalid_argument("noise probability must be in [0, 0.5)");
  if (!(rep_size_const > 0.0) || !(retain_const > 0.0) || !(phase2_const > 0.0)) {
    throw std::invalid_argument("noisy constants must be positive");
  }
  if (!(min_cluster_frac >= 0.0)) throw std::invalid_argument("min_cluster_frac must be >= 0");
}

bool query_blowup_expected(double p) { return p > 0.45; }

std::size_t rep_size_cap(const NoisyConfig& config, std::size_t k_guess, double eps) {
  return std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(config.rep_size_const *
                                            static_cast<double>(k_guess) / eps)));
}

std::size_t retain_cap(const NoisyConfig& config, std::size_t k_guess, double eps) {
  return std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(config.retain_const *
                                            static_cast<double>(k_guess) / eps)));
}

double phase2_draws(const NoisyConfig& config, double eps, std::size_t k, std::size_t q) {
  const double qd = static_cast<double>(q);
  const double l = std::max(1.0, std::log(static_cast<double>(k + q) / eps));
  return config.phase2_const * qd * qd * l * l / (eps * eps);
}

double size_cutoff(std::size_t t, double min_cluster_frac) {
  if (t < 2) return 0.0;
  const double td = static_cast<double>(t);
  return min_cluster_frac * std::sqrt(td) * std::log2(td);
}

FoundClusters find_clusters(std::span<const std::size_t> samples, OracleSession& session,
                            const NoisyConfig& config, std::size_t probe_cap,
                            std::size_t basis) {
  if (probe_cap == 0) throw std::invalid_argument("probe cap must be positive");
  std::vector<std::vector<std::size_t>> groups;
  for (std::size_t s : samples) {
    bool placed = false;
    for (auto& g : groups) {
      const std::size_t probes = std::min(g.size(), probe_cap);
      std::size_t yes = 0;
      for (std::size_t i = 0; i < probes; ++i) {
        if (session.same_cluster(s, g[i])) ++yes;
        // Stop once the vote is decided either way.
        if (2 * yes > probes || 2 * (yes + probes - i - 1) <= probes) break;
      }
      if (2 * yes > probes) {
        g.push_back(s);
        placed = true;
        break;
      }
    }
    if (!placed) groups.push_back({s});
  }

  FoundClusters out;
  out.cutoff = size_cutoff(basis == 0 ? samples.size() : basis, config.min_cluster_frac);
  for (auto& g : groups) {
    if (static_cast<double>(g.size()) >= out.cutoff) {
      out.groups.push_back(std::move(g));
    } else {
      ++out.dropped;
    }
  }
  return out;
}

namespace {

class NoisyRun {
 public:
  NoisyRun(const PointSet& x, OracleSession& session, const RecoveryConfig& rc,
           const NoisyConfig& nc, NoisyRoundObserver observer)
      : x_(x),
        session_(session),
        rc_(rc),
        nc_(nc),
        observer_(std::move(observer)),
        rng_(rc.seed),
        sampler_(x),
        centers_(x.dim()),
        ledger_start_(session.ledger()) {
    rc_.validate();
    nc_.validate();
    if (session.size() != x.size()) throw std::invalid_argument("oracle and point set sizes differ");
    if (session.error_prob() != nc_.p) {
      throw std::invalid_argument("noisy config p differs from the oracle's error probability");
    }
  }

  void run() {
    std::size_t k_guess = 1;
    for (;;) {
      bool q_empty = false;
      do {
        q_empty = !round(k_guess);
      } while (!(q_empty || k() >= k_guess));
      if (q_empty && k() <= k_guess) return;
      k_guess *= 2;
    }
  }

  RecoveryResult finish(StopReason reason) {
    close_round();
    RecoveryResult out;
    out.algorithm = Algorithm::kNoisy;
    out.profile = rc_.profile;
    out.centers = centers_;
    out.recovered = recovered_;
    evaluate_errors(out, x_);
    out.starved = starved_;
    out.discovered = reps_.discovered_count();
    out.queries_total = queries();
    out.samples_total = draws_;
    out.rounds_total = round_;
    out.rounds = logs_;
    out.stop = reason;
    return out;
  }

 private:
  std::uint64_t queries() const { return session_.ledger() - ledger_start_; }
  std::size_t k() const { return recovered_.size(); }

  std::size_t draw() {
    if (draws_ >= rc_.draw_cap) throw RunStopped(StopReason::kDrawCap);
    const auto x = sampler_.d2_sample(rng_);
    if (!x) throw RunStopped(StopReason::kTerminated);
    ++draws_;
    return *x;
  }

  std::optional<ClusterId> check(std::size_t x, std::span<const ClusterId> candidates) {
    return check_cluster(session_, x, reps_, candidates, true);
  }

  void open_round(std::size_t k_guess) {
    ++round_;
    k_guess_ = k_guess;
    selected_ = 0;
    round_draw_start_ = draws_;
    round_query_start_ = queries();
    round_open_ = true;
  }

  void close_round() {
    if (!round_open_) return;
    round_open_ = false;
    logs_.push_back({round_, k_guess_, draws_ - round_draw_start_,
                     queries() - round_query_start_, reps_.discovered_count(), k(),
                     selected_});
    if (observer_) observer_(round_, k_guess_, reps_, recovered_);
  }

  // One round; returns whether new clusters were found.
  bool round(std::size_t k_guess) {
    open_round(k_guess);
    const double eps = rc_.eps;

    const auto t1 = static_cast<std::uint64_t>(std::ceil(thresholds::phase1(eps, k())));
    bool fresh = false;
    for (std::uint64_t i = 0; i < t1 && !fresh; ++i) {
      fresh = !check(draw(), recovered_ids_);
    }
    if (!fresh) {
      close_round();
      return false;
    }

    const std::size_t probe_cap = 2 * rep_size_cap(nc_, k_guess, eps);
    FoundClusters found;
    std::size_t unassigned = 0;
    bool ok = false;
    std::size_t q = 1;
    for (std::size_t d = 0; d <= nc_.max_q_doublings && !ok; ++d, q *= 2) {
      const auto t = static_cast<std::size_t>(std::ceil(phase2_draws(nc_, eps, k(), q)));
      std::vector<std::size_t> s;
      for (std::size_t i = 0; i < t; ++i) {
        const std::size_t x = draw();
        if (!check(x, recovered_ids_)) s.push_back(x);
      }
      found = find_clusters(s, session_, nc_, probe_cap, t);
      unassigned = s.size();
      ok = !found.groups.empty() && 2 * found.groups.size() >= q;
    }
    if (!ok) {
      close_round();
      return false;
    }

    std::map<ClusterId, double> p_hat;
    for (std::size_t g = 0; g < found.groups.size(); ++g) {
      p_hat[static_cast<ClusterId>(g + 1)] =
          static_cast<double>(found.groups[g].size()) / static_cast<double>(unassigned);
    }
    const auto bands = split_bands(p_hat, found.groups.size());
    const auto heavy = bands.heavy_clusters();
    selected_ = heavy.size();

    const std::size_t cap = rep_size_cap(nc_, k_guess, eps);
    std::vector<ClusterId> targets;
    RejectionRequest req;
    std::map<ClusterId, std::optional<ClusterId>> truth;
    for (ClusterId g : heavy) {
      const auto& z = found.groups[static_cast<std::size_t>(g - 1)];
      const ClusterId id = reps_.open(z.front());
      for (std::size_t i = 1; i < z.size() && i < cap; ++i) reps_.add(id, z[i]);
      targets.push_back(id);
      // x_j* comes from the group itself; the ideal pivot set is not
      // observable through the oracle.
      req.references[id] = reference_point(z, sampler_);
      truth[id] = majority_label(z);
    }
    req.targets = targets;
    req.quota = static_cast<std::size_t>(std::ceil(thresholds::improved_t3(eps, k_guess)));
    req.scale = rc_.effective_acceptance_scale();
    req.draw_cap = rc_.draw_cap - std::min(rc_.draw_cap, draws_);
    if (rc_.target_recovered > k()) req.stop_after = rc_.target_recovered - k();

    std::vector<ClusterId> candidates = recovered_ids_;
    candidates.insert(candidates.end(), targets.begin(), targets.end());
    std::sort(candidates.begin(), candidates.end());
    const ClassifyFn fn = [&](std::size_t p) { return check(p, candidates); };

    RejectionResult res;
    if (req.draw_cap > 0) res = rej_samp(sampler_, fn, session_, req, rng_);
    else res.starved = targets;
    draws_ += res.draws;

    const bool cut_short =
        res.budget_exhausted ||
        (req.stop_after > 0 && targets.size() - res.starved.size() >= req.stop_after);
    for (ClusterId id : targets) {
      if (std::find(res.starved.begin(), res.starved.end(), id) != res.starved.end()) {
        if (!cut_short) starved_.push_back(id);
        continue;
      }
      const auto& acc = res.accepted.at(id);
      RecoveredCluster c;
      c.id = id;
      c.representative = reps_.representative(id);
      c.center = centroid(x_, acc);
      c.support = acc.size();
      c.round = round_;
      c.queries_at = queries();
      c.draws_at = draws_;
      c.truth_label = truth[id];
      sampler_.add_center(c.center);
      centers_.set(id, c.center);
      recovered_.push_back(std::move(c));
      recovered_ids_.push_back(id);
      reps_.truncate(id, retain_cap(nc_, k_guess, eps));
    }
    std::sort(recovered_ids_.begin(), recovered_ids_.end());
    if (res.budget_exhausted) throw BudgetExhausted();
    if (!res.starved.empty() && draws_ >= rc_.draw_cap) throw RunStopped(StopReason::kDrawCap);
    close_round();
    if (rc_.target_recovered > 0 && k() >= rc_.target_recovered) {
      throw RunStopped(StopReason::kTargetReached);
    }
    return true;
  }

  // Evaluation only: the dominant ground-truth label among group members.
  std::optional<ClusterId> majority_label(const std::vector<std::size_t>& z) const {
    if (!x_.has_labels()) return std::nullopt;
    std::map<ClusterId, std::size_t> votes;
    for (std::size_t m : z) ++votes[x_.label(m)];
    return std::max_element(votes.begin(), votes.end(),
                            [](const auto& a, const auto& b) { return a.second < b.second; })
        ->first;
  }

  const PointSet& x_;
  OracleSession& session_;
  RecoveryConfig rc_;
  NoisyConfig nc_;
  NoisyRoundObserver observer_;
  Rng rng_;
  SamplerState sampler_;
  Representatives reps_;
  CenterSet centers_;
  std::vector<RecoveredCluster> recovered_;
  std::vector<ClusterId> recovered_ids_;
  std::vector<ClusterId> starved_;
  std::vector<RoundLog> logs_;
  std::size_t round_ = 0;
  std::size_t k_guess_ = 0;
  std::size_t selected_ = 0;
  bool round_open_ = false;
  std::uint64_t draws_ = 0;
  std::uint64_t round_draw_start_ = 0;
  std::uint64_t round_query_start_ = 0;
  std::uint64_t ledger_start_ = 0;
};

}  // namespace

RecoveryResult run_noisy(const PointSet& x, OracleSession& session,
                         const RecoveryConfig& recovery, const NoisyConfig& config,
                         NoisyRoundObserver observer) {
  RecoveryConfig rc = recovery;
  rc.algorithm = Algorithm::kNoisy;
  NoisyRun run(x, session, rc, config, std::move(observer));
  StopReason reason = StopReason::kTerminated;
  try {
    run.run();
  } catch (const RunStopped& s) {
    reason = s.reason();
  } catch (const BudgetExhausted&) {
    reason = StopReason::kBudgetExhausted;
  }
  return run.finish(reason);
}

}  // namespace scq
