#include "scq/recovery.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

#include "json.hpp"

namespace scq {

std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::kUniform: return "uniform";
    case Algorithm::kBasic: return "basic";
    case Algorithm::kImproved: return "improved";
    case Algorithm::kImprovedSimple: return "improved_simple";
    case Algorithm::kNoisy: return "noisy";
  }
  return "unknown";
}

std::string_view to_string(Profile p) {
  return p == Profile::kTheory ? "theory" : "experimental";
}

std::string_view to_string(StopReason r) {
  switch (r) {
    case StopReason::kTerminated: return "terminated";
    case StopReason::kTargetReached: return "target_reached";
    case StopReason::kBudgetExhausted: return "budget_exhausted";
    case StopReason::kDrawCap: return "draw_cap";
  }
  return "unknown";
}

std::optional<Algorithm> parse_algorithm(std::string_view s) {
  for (auto a : {Algorithm::kUniform, Algorithm::kBasic, Algorithm::kImproved,
                 Algorithm::kImprovedSimple, Algorithm::kNoisy}) {
    if (s == to_string(a)) return a;
  }
  return std::nullopt;
}

std::optional<Profile> parse_profile(std::string_view s) {
  if (s == "theory") return Profile::kTheory;
  if (s == "experimental") return Profile::kExperimental;
  return std::nullopt;
}

void RecoveryConfig::validate() const {
  if (!(eps > 0.0 && eps <= 1.0)) throw std::invalid_argument("eps must be in (0, 1]");
  if (heavy_threshold == 0) throw std::invalid_argument("heavy threshold must be positive");
  if (draw_cap == 0) throw std::invalid_argument("draw cap must be positive");
  if (acceptance_scale && !(*acceptance_scale > 0.0)) {
    throw std::invalid_argument("acceptance scale must be positive");
  }
}

double RecoveryConfig::effective_acceptance_scale() const {
  if (acceptance_scale) return *acceptance_scale;
  return profile == Profile::kTheory ? eps / 128.0 : 1.0;
}

namespace thresholds {

std::size_t log2_ceil(std::size_t q) {
  if (q <= 2) return 1;
  std::size_t bits = 0;
  std::size_t v = q - 1;
  while (v > 0) {
    ++bits;
    v >>= 1;
  }
  return bits;
}

static double ln10(std::size_t n) { return std::log(10.0 * static_cast<double>(n)); }

double phase1(double eps, std::size_t k) { return 8.0 / eps * ln10(k + 1); }

double basic_phase2(double eps, std::size_t k, std::size_t q) {
  return 96.0 * static_cast<double>(q) * ln10(k + q) / eps;
}

double basic_t2(double eps, std::size_t k, std::size_t q) {
  return 4096.0 * static_cast<double>(q) * ln10(k + q) / (eps * eps);
}

double basic_t3(double eps, std::size_t round) {
  const double l = ln10(round);
  return 20.0 / eps * static_cast<double>(round) * l * l;
}

double improved_phase2(double eps, std::size_t k, std::size_t q, std::size_t w) {
  return 1600.0 * static_cast<double>(w) * static_cast<double>(log2_ceil(q)) *
         ln10(k + q) / eps;
}

double improved_t2(double eps, std::size_t k, std::size_t q, std::size_t w) {
  return 131072.0 * static_cast<double>(w) * static_cast<double>(log2_ceil(q)) *
         ln10(k + q) / (eps * eps);
}

double improved_t3(double eps, std::size_t k_guess) {
  return 30.0 * static_cast<double>(k_guess) / eps;
}

}  // namespace thresholds

std::size_t dyadic_band(double p) {
  if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("band frequency must be in (0, 1]");
  int e = 0;
  const double m = std::frexp(p, &e);  // p = m * 2^e, m in [0.5, 1)
  return static_cast<std::size_t>(m == 0.5 ? 2 - e : 1 - e);
}

BandPartition split_bands(const std::map<ClusterId, double>& p_hat, std::size_t q) {
  if (q == 0) throw std::invalid_argument("split_bands needs q >= 1");
  BandPartition out;
  const double qd = static_cast<double>(q);
  out.levels = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(3.0 * std::log2(qd))));
  out.bands.assign(out.levels + 1, {});
  out.mass.assign(out.levels + 1, 0.0);
  out.heavy.assign(out.levels + 1, false);

  const double tail_cut = 1.0 / (qd * qd * qd);
  for (const auto& [id, p] : p_hat) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("p_hat outside [0, 1]");
    std::size_t slot = out.levels;
    const bool tail = p <= 0.0 || (q >= 2 && p <= tail_cut);
    if (!tail) slot = std::min(dyadic_band(p), out.levels + 1) - 1;
    out.bands[slot].push_back(id);
    out.mass[slot] += p;
  }
  const double heavy_cut = 1.0 / (3.0 * static_cast<double>(out.levels));
  for (std::size_t l = 0; l < out.levels; ++l) out.heavy[l] = out.mass[l] >= heavy_cut;
  return out;
}

std::vector<ClusterId> BandPartition::heavy_clusters() const {
  std::vector<ClusterId> out;
  for (std::size_t l = 0; l < bands.size(); ++l) {
    if (heavy[l]) out.insert(out.end(), bands[l].begin(), bands[l].end());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::size_t BandPartition::band_of(ClusterId id) const {
  for (std::size_t l = 0; l < bands.size(); ++l) {
    if (std::find(bands[l].begin(), bands[l].end(), id) != bands[l].end()) return l + 1;
  }
  throw std::out_of_range("cluster not in any band");
}

namespace {

nlohmann::json point_json(const Point& p) { return nlohmann::json(p); }

}  // namespace

std::string to_json(const RecoveryResult& r) {
  nlohmann::json j;
  j["algorithm"] = to_string(r.algorithm);
  j["profile"] = to_string(r.profile);
  j["stop"] = to_string(r.stop);
  j["discovered"] = r.discovered;
  j["queries_total"] = r.queries_total;
  j["samples_total"] = r.samples_total;
  j["rounds_total"] = r.rounds_total;
  j["starved"] = r.starved;
  auto& rec = j["recovered"] = nlohmann::json::array();
  for (const auto& c : r.recovered) {
    nlohmann::json e;
    e["id"] = c.id;
    e["representative"] = c.representative;
    e["center"] = point_json(c.center);
    e["support"] = c.support;
    e["round"] = c.round;
    e["queries_at"] = c.queries_at;
    e["draws_at"] = c.draws_at;
    e["truth_label"] = c.truth_label ? nlohmann::json(*c.truth_label) : nlohmann::json();
    e["error"] = c.error && std::isfinite(*c.error) ? nlohmann::json(*c.error)
                                                    : nlohmann::json();
    rec.push_back(std::move(e));
  }
  auto& rounds = j["rounds"] = nlohmann::json::array();
  for (const auto& l : r.rounds) {
    rounds.push_back({{"round", l.round},
                      {"k_guess", l.k_guess},
                      {"draws", l.draws},
                      {"queries", l.queries},
                      {"discovered", l.discovered},
                      {"recovered", l.recovered},
                      {"selected", l.selected}});
  }
  return j.dump();
}

void evaluate_errors(RecoveryResult& result, const PointSet& x) {
  if (!x.has_labels()) return;
  const auto members = x.members_by_label();
  for (auto& c : result.recovered) {
    if (!c.truth_label) continue;
    auto it = members.find(*c.truth_label);
    if (it == members.end()) continue;
    c.error = centroid_error(x, it->second, c.center);
  }
}

RecoveryEngine::RecoveryEngine(const PointSet& x, OracleSession& session,
                               RecoveryConfig config, RoundObserver observer)
    : x_(x),
      session_(session),
      config_(std::move(config)),
      observer_(std::move(observer)),
      rng_(config_.seed),
      sampler_(x),
      order_centers_(x.dim()),
      in_s_(x.size(), 0),
      centers_(x.dim()),
      ledger_start_(session.ledger()) {
  config_.validate();
  if (session.size() != x.size()) {
    throw std::invalid_argument("oracle and point set sizes differ");
  }
}

std::uint64_t RecoveryEngine::queries() const { return session_.ledger() - ledger_start_; }

std::uint64_t RecoveryEngine::count(ClusterId id) const {
  const auto i = static_cast<std::size_t>(id - 1);
  return i < s_counts_.size() ? s_counts_[i] : 0;
}

void RecoveryEngine::begin_round(std::size_t k_guess) {
  if (round_open_) end_round();
  ++round_;
  k_guess_ = k_guess;
  q_.clear();
  w_.clear();
  round_draws_ = 0;
  round_draw_start_ = draws_;
  round_query_start_ = queries();
  round_open_ = true;
  if (!config_.reuse_samples) {
    for (auto& pts : s_points_) {
      for (std::size_t p : pts) in_s_[p] = 0;
      pts.clear();
    }
    std::fill(s_counts_.begin(), s_counts_.end(), 0);
    s_total_ = 0;
    for (auto& v : pending_) v.clear();
    for (auto& v : pool_) v.clear();
  }
}

void RecoveryEngine::end_round() {
  if (!round_open_) return;
  round_open_ = false;
  logs_.push_back({round_, k_guess_, draws_ - round_draw_start_,
                   queries() - round_query_start_, reps_.discovered_count(), k(),
                   w_.size()});
  if (observer_) observer_({RoundStage::kEnded, *this});
}

void RecoveryEngine::announce_selection() {
  if (observer_) observer_({RoundStage::kSelected, *this});
}

ClusterId RecoveryEngine::classify_point(std::size_t point) {
  ClusterId id = 0;
  if (config_.nearest_center_order()) {
    id = heuristic_classify(session_, x_, point, order_centers_, reps_).cluster;
  } else {
    id = classify(session_, point, reps_);
  }
  grow(id);
  update_order_center(id, point);
  return id;
}

void RecoveryEngine::grow(ClusterId id) {
  const auto slot = static_cast<std::size_t>(id);
  if (slot <= s_counts_.size()) return;
  s_counts_.resize(slot, 0);
  s_points_.resize(slot);
  pending_.resize(slot);
  pool_.resize(slot);
  running_sums_.resize(slot, std::vector<double>(x_.dim(), 0.0));
  classified_counts_.resize(slot, 0);
}

std::size_t RecoveryEngine::pooled(ClusterId id) const {
  const auto i = static_cast<std::size_t>(id - 1);
  return i < pool_.size() ? pool_[i].size() : 0;
}

double RecoveryEngine::weight_under(std::size_t point, std::size_t centers) const {
  if (centers == 0) return 1.0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centers; ++c) {
    best = std::min(best, squared_distance(x_[point], center_history_[c]));
  }
  return best;
}

void RecoveryEngine::update_order_center(ClusterId id, std::size_t point) {
  const auto i = static_cast<std::size_t>(id - 1);
  auto& sum = running_sums_[i];
  const auto p = x_[point];
  for (std::size_t d = 0; d < sum.size(); ++d) sum[d] += p[d];
  ++classified_counts_[i];
  if (!config_.nearest_center_order() || is_recovered(id)) return;
  if (!order_centers_.contains(id)) {
    order_centers_.set(id, Point(p.begin(), p.end()));
    return;
  }
  auto& c = order_centers_.at(id);
  const double n = static_cast<double>(classified_counts_[i]);
  for (std::size_t d = 0; d < c.size(); ++d) c[d] = sum[d] / n;
}

Point RecoveryEngine::running_mean(ClusterId id) const {
  const auto i = static_cast<std::size_t>(id - 1);
  if (i >= classified_counts_.size() || classified_counts_[i] == 0) {
    throw std::logic_error("running mean of a cluster without draws");
  }
  Point out = running_sums_[i];
  for (double& v : out) v /= static_cast<double>(classified_counts_[i]);
  return out;
}

void RecoveryEngine::record(std::size_t point, ClusterId id) {
  const auto i = static_cast<std::size_t>(id - 1);
  ++s_counts_[i];
  ++s_total_;
  if (is_recovered(id) || is_given_up(id)) return;
  if (!in_s_[point]) {
    in_s_[point] = 1;
    s_points_[i].push_back(point);
  }
  q_.insert(id);
}

SampleRecord RecoveryEngine::sample() {
  if (draws_ >= config_.draw_cap) throw RunStopped(StopReason::kDrawCap);
  const auto x = sampler_.d2_sample(rng_);
  if (!x) throw RunStopped(StopReason::kTerminated);
  ++draws_;
  ++round_draws_;
  const ClusterId id = classify_point(*x);
  record(*x, id);
  if (config_.reuse_samples && !is_recovered(id) && !is_given_up(id)) {
    pending_[static_cast<std::size_t>(id - 1)].push_back(
        {*x, uniform01(rng_), sampler_.centers_version(), sampler_.weight(*x),
         std::numeric_limits<double>::infinity()});
  }
  return {*x, id};
}

SampleRecord RecoveryEngine::sample_uniform() {
  if (draws_ >= config_.draw_cap) throw RunStopped(StopReason::kDrawCap);
  const std::size_t x = uniform_index(rng_, x_.size());
  ++draws_;
  ++round_draws_;
  const ClusterId id = classify_point(x);
  record(x, id);
  return {x, id};
}

bool RecoveryEngine::phase1_probe() {
  double t1 = thresholds::phase1(config_.eps, k());
  if (config_.profile == Profile::kExperimental) {
    t1 *= static_cast<double>(config_.heavy_threshold);
  }
  const auto limit = static_cast<std::uint64_t>(std::floor(t1)) + 1;
  while (q_.empty() && round_draws_ < limit) sample();
  return !q_.empty();
}

std::map<ClusterId, double> RecoveryEngine::p_hat() const {
  std::map<ClusterId, double> out;
  double total = 0.0;
  for (std::size_t i = 0; i < s_counts_.size(); ++i) {
    const auto id = static_cast<ClusterId>(i + 1);
    if (s_counts_[i] == 0 || is_recovered(id) || is_given_up(id)) continue;
    out[id] = static_cast<double>(s_counts_[i]);
    total += out[id];
  }
  for (auto& [id, v] : out) v /= total;
  return out;
}

ClusterId RecoveryEngine::argmax_newly_discovered() const {
  ClusterId best = 0;
  std::uint64_t best_count = 0;
  for (ClusterId id : q_) {
    if (is_recovered(id) || is_given_up(id)) continue;
    if (best == 0 || count(id) > best_count) {
      best = id;
      best_count = count(id);
    }
  }
  return best;
}

void RecoveryEngine::check_target() {
  if (config_.target_recovered > 0 && k() >= config_.target_recovered) {
    throw RunStopped(StopReason::kTargetReached);
  }
}

void RecoveryEngine::mark_recovered(ClusterId id, Point center, std::size_t support) {
  if (is_recovered(id)) throw std::logic_error("cluster recovered twice");
  RecoveredCluster rc;
  rc.id = id;
  rc.representative = reps_.representative(id);
  rc.center = center;
  rc.support = support;
  rc.round = round_;
  rc.queries_at = queries();
  rc.draws_at = draws_;
  sampler_.add_center(center);
  center_history_.push_back(center);
  if (config_.nearest_center_order()) order_centers_.set(id, center);
  centers_.set(id, std::move(center));
  recovered_ids_.insert(id);
  recovered_.push_back(std::move(rc));
  grow(id);
  const auto i = static_cast<std::size_t>(id - 1);
  s_points_[i] = {};
  pending_[i] = {};
  pool_[i] = {};
}

void RecoveryEngine::give_up(std::span<const ClusterId> ids) {
  for (ClusterId id : ids) {
    if (!is_recovered(id)) given_up_.insert(id);
  }
}

std::vector<ClusterId> RecoveryEngine::recover(std::span<const ClusterId> targets,
                                               std::size_t quota) {
  if (targets.empty()) return {};
  RejectionRequest req;
  req.targets.assign(targets.begin(), targets.end());
  req.quota = quota;
  req.scale = config_.effective_acceptance_scale();
  for (ClusterId j : targets) {
    const auto i = static_cast<std::size_t>(j - 1);
    const std::size_t ref = reference_point(s_points_.at(i), sampler_);
    req.references[j] = ref;
    for (const auto& d : pending_[i]) {
      const double w_ref = std::min(weight_under(ref, d.centers), d.ceiling);
      if (d.coin < acceptance_probability(w_ref, d.weight, req.scale)) {
        pool_[i].push_back(d.point);
      }
    }
    pending_[i].clear();
    req.have[j] = pool_[i].size();
  }
  req.draw_cap = config_.draw_cap > draws_ ? config_.draw_cap - draws_ : 0;
  // Under a recovery target the batch ends as soon as enough clusters fill.
  if (config_.target_recovered > k()) req.stop_after = config_.target_recovered - k();

  const ClassifyFn fn = [this](std::size_t p) -> std::optional<ClusterId> {
    const ClusterId id = classify_point(p);
    if (config_.reuse_samples) record(p, id);
    return id;
  };
  RejectionResult res;
  if (req.draw_cap > 0) res = rej_samp(sampler_, fn, session_, req, rng_);
  else res.starved = req.targets;
  draws_ += res.draws;
  round_draws_ += res.draws;

  if (config_.reuse_samples) {
    for (const auto& d : res.classified) {
      if (req.references.count(d.cluster) || is_recovered(d.cluster) ||
          is_given_up(d.cluster)) {
        continue;
      }
      pending_[static_cast<std::size_t>(d.cluster - 1)].push_back(
          {d.point, d.coin, sampler_.centers_version(), sampler_.weight(d.point), d.ceiling});
    }
  }

  std::vector<ClusterId> done;
  for (ClusterId j : req.targets) {
    auto& pool = pool_[static_cast<std::size_t>(j - 1)];
    const auto& acc = res.accepted.at(j);
    pool.insert(pool.end(), acc.begin(), acc.end());
    if (std::find(res.starved.begin(), res.starved.end(), j) != res.starved.end()) continue;
    const std::vector<std::size_t> support = pool;
    mark_recovered(j, centroid(x_, support), support.size());
    done.push_back(j);
  }
  if (res.budget_exhausted) throw BudgetExhausted();
  check_target();
  if (!res.starved.empty()) {
    if (draws_ >= config_.draw_cap) throw RunStopped(StopReason::kDrawCap);
    give_up(res.starved);
  }
  return done;
}

RecoveryResult RecoveryEngine::finish(StopReason reason) {
  end_round();
  RecoveryResult out;
  out.algorithm = config_.algorithm;
  out.profile = config_.profile;
  out.centers = centers_;
  out.recovered = recovered_;
  if (x_.has_labels()) {
    for (auto& c : out.recovered) c.truth_label = x_.label(c.representative);
    evaluate_errors(out, x_);
  }
  out.starved.assign(given_up_.begin(), given_up_.end());
  out.discovered = reps_.discovered_count();
  out.queries_total = queries();
  out.samples_total = draws_;
  out.rounds_total = round_;
  out.rounds = logs_;
  out.stop = reason;
  return out;
}

namespace {

template <class Body>
RecoveryResult drive(RecoveryEngine& engine, Body&& body) {
  StopReason reason = StopReason::kTerminated;
  try {
    body();
  } catch (const RunStopped& s) {
    reason = s.reason();
  } catch (const BudgetExhausted&) {
    reason = StopReason::kBudgetExhausted;
  }
  return engine.finish(reason);
}

RecoveryConfig with_algorithm(RecoveryConfig c, Algorithm a) {
  c.algorithm = a;
  return c;
}

// Draws the experimental profile spends waiting for a cluster to turn heavy
// before closing the round.
std::uint64_t heaviness_wait_cap(const RecoveryEngine& e) {
  const auto& c = e.config();
  const double q = static_cast<double>(std::max<std::size_t>(1, e.newly_discovered().size()));
  return static_cast<std::uint64_t>(
      std::ceil(static_cast<double>(c.heavy_threshold) * thresholds::phase1(c.eps, e.k()) * q));
}

std::vector<ClusterId> eligible_newly_discovered(const RecoveryEngine& e) {
  std::vector<ClusterId> out;
  for (ClusterId id : e.newly_discovered()) {
    if (!e.is_recovered(id) && !e.is_given_up(id)) out.push_back(id);
  }
  return out;
}

std::size_t quota_of(double t) { return static_cast<std::size_t>(std::ceil(t)); }

}  // namespace

RecoveryResult run_basic(const PointSet& x, OracleSession& session,
                         const RecoveryConfig& config, RoundObserver observer) {
  RecoveryEngine e(x, session, with_algorithm(config, Algorithm::kBasic),
                   std::move(observer));
  const double eps = config.eps;
  const std::size_t h = config.heavy_threshold;
  return drive(e, [&] {
    for (;;) {
      e.begin_round();
      if (!e.phase1_probe()) return;

      std::size_t quota = h;
      ClusterId j = 0;
      if (config.profile == Profile::kTheory) {
        while (static_cast<double>(e.sample_size()) <=
               thresholds::basic_phase2(eps, e.k(), e.newly_discovered().size())) {
          e.sample();
        }
        j = e.argmax_newly_discovered();
        const std::size_t q = e.newly_discovered().size();
        const double t2 = thresholds::basic_t2(eps, e.k(), q);
        while (static_cast<double>(e.sample_size()) <= t2) e.sample();
        quota = quota_of(thresholds::basic_t3(eps, e.round()));
      } else {
        while (e.count(e.argmax_newly_discovered()) < h &&
               e.round_draws() <= heaviness_wait_cap(e)) {
          e.sample();
        }
        // Timed out: the counts carry over, so the next round resumes the wait.
        if (e.count(e.argmax_newly_discovered()) < h) {
          e.end_round();
          continue;
        }
        j = e.argmax_newly_discovered();
      }
      if (j == 0) {
        e.end_round();
        continue;
      }
      e.selected() = {j};
      e.announce_selection();
      e.recover(e.selected(), quota);
      e.end_round();
    }
  });
}

RecoveryResult run_improved(const PointSet& x, OracleSession& session,
                            const RecoveryConfig& config, RoundObserver observer) {
  RecoveryEngine e(x, session, with_algorithm(config, Algorithm::kImproved),
                   std::move(observer));
  const double eps = config.eps;
  const std::size_t h = config.heavy_threshold;

  const auto select = [&] {
    const std::size_t q = e.newly_discovered().size();
    const auto bands = split_bands(e.p_hat(), std::max<std::size_t>(q, 1));
    std::vector<ClusterId> w;
    for (ClusterId id : bands.heavy_clusters()) {
      if (e.newly_discovered().count(id)) w.push_back(id);
    }
    return w;
  };
  const auto all_heavy = [&](const std::vector<ClusterId>& w) {
    return std::all_of(w.begin(), w.end(), [&](ClusterId id) { return e.count(id) >= h; });
  };

  return drive(e, [&] {
    std::size_t k_guess = 1;
    for (;;) {
      bool q_empty = false;
      do {
        e.begin_round(k_guess);
        q_empty = !e.phase1_probe();
        if (!q_empty && e.k() < k_guess) {
          std::vector<ClusterId> w;
          std::size_t quota = h;
          if (config.profile == Profile::kTheory) {
            do {
              e.sample();
              w = select();
            } while (static_cast<double>(e.sample_size()) <
                     thresholds::improved_phase2(eps, e.k(), e.newly_discovered().size(),
                                                 w.size()));
            const std::size_t q = e.newly_discovered().size();
            const double t2 = thresholds::improved_t2(eps, e.k(), q, w.size());
            while (static_cast<double>(e.sample_size()) <= t2) e.sample();
            quota = quota_of(thresholds::improved_t3(eps, k_guess));
          } else {
            do {
              e.sample();
              w = select();
            } while ((w.empty() || !all_heavy(w)) && e.round_draws() <= heaviness_wait_cap(e));
            std::erase_if(w, [&](ClusterId id) { return e.count(id) < h; });
          }
          e.selected() = w;
          e.announce_selection();
          e.recover(e.selected(), quota);
        }
        e.end_round();
      } while (!(q_empty || e.k() >= k_guess));
      if (q_empty && e.k() <= k_guess) return;
      k_guess *= 2;
    }
  });
}

RecoveryResult run_improved_simplified(const PointSet& x, OracleSession& session,
                                       const RecoveryConfig& config,
                                       RoundObserver observer) {
  RecoveryEngine e(x, session, with_algorithm(config, Algorithm::kImprovedSimple),
                   std::move(observer));
  const std::size_t h = config.heavy_threshold;

  const auto heavy_share = [&] {
    std::uint64_t heavy = 0;
    std::uint64_t total = 0;
    for (ClusterId id : eligible_newly_discovered(e)) {
      total += e.count(id);
      if (e.count(id) >= h) heavy += e.count(id);
    }
    return total == 0 ? 0.0 : static_cast<double>(heavy) / static_cast<double>(total);
  };

  return drive(e, [&] {
    for (;;) {
      e.begin_round();
      if (!e.phase1_probe()) return;
      while (heavy_share() <= 0.5 && e.round_draws() <= heaviness_wait_cap(e)) e.sample();

      std::vector<ClusterId> w;
      for (ClusterId id : eligible_newly_discovered(e)) {
        if (e.count(id) >= h) w.push_back(id);
      }
      e.selected() = w;
      e.announce_selection();
      e.recover(e.selected(), h);
      e.end_round();
    }
  });
}

RecoveryResult run_uniform(const PointSet& x, OracleSession& session,
                           const RecoveryConfig& config) {
  RecoveryEngine e(x, session, with_algorithm(config, Algorithm::kUniform));
  const std::size_t h = config.heavy_threshold;
  return drive(e, [&] {
    e.begin_round();
    for (;;) {
      const auto s = e.sample_uniform();
      const std::uint64_t n = e.count(s.cluster);
      // The center is the mean of the first h samples and stays fixed.
      if (!e.is_recovered(s.cluster) && n >= h) {
        e.mark_recovered(s.cluster, e.running_mean(s.cluster), n);
        if (config.target_recovered > 0 && e.k() >= config.target_recovered) {
          throw RunStopped(StopReason::kTargetReached);
        }
      }
    }
  });
}

}  // namespace scq
