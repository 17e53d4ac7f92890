#include "scq/oracle.hpp"

#include <algorithm>
#include <utility>

namespace scq {

OracleSession::OracleSession(std::vector<ClusterId> truth, double error_prob,
                             std::uint64_t seed)
    : truth_(std::move(truth)), error_prob_(error_prob), rng_(seed) {
  if (!(error_prob >= 0.0 && error_prob < 0.5)) {
    throw std::invalid_argument("oracle error probability must be in [0, 0.5)");
  }
}

bool OracleSession::same_cluster(std::size_t i, std::size_t j) {
  if (i >= truth_.size() || j >= truth_.size()) {
    throw std::out_of_range("oracle query with an invalid point index");
  }
  if (budget_ && ledger_ >= *budget_) throw BudgetExhausted();
  ++ledger_;

  const bool truth = truth_[i] == truth_[j];
  if (error_prob_ == 0.0) return truth;

  const auto lo = static_cast<std::uint64_t>(std::min(i, j));
  const auto hi = static_cast<std::uint64_t>(std::max(i, j));
  const std::uint64_t key = (lo << 32) | hi;
  if (auto it = answers_.find(key); it != answers_.end()) return it->second;

  const double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
  const bool answer = u < error_prob_ ? !truth : truth;
  answers_.emplace(key, answer);
  return answer;
}

ClusterId Representatives::open(std::size_t first) {
  sets_.push_back({first});
  return static_cast<ClusterId>(sets_.size());
}

void Representatives::add(ClusterId id, std::size_t member) {
  sets_.at(static_cast<std::size_t>(id - 1)).push_back(member);
}

void Representatives::truncate(ClusterId id, std::size_t cap) {
  auto& s = sets_.at(static_cast<std::size_t>(id - 1));
  if (s.size() > cap) s.resize(std::max<std::size_t>(cap, 1));
}

ClusterId classify(OracleSession& session, std::size_t x,
                   Representatives& reps) {
  const auto discovered = static_cast<ClusterId>(reps.discovered_count());
  for (ClusterId i = 1; i <= discovered; ++i) {
    if (session.same_cluster(x, reps.representative(i))) return i;
  }
  return reps.open(x);
}

HeuristicOutcome heuristic_classify(OracleSession& session, const PointSet& x,
                                    std::size_t point, const CenterSet& centers,
                                    Representatives& reps) {
  const auto discovered = static_cast<ClusterId>(reps.discovered_count());
  std::vector<std::pair<double, ClusterId>> order;
  order.reserve(static_cast<std::size_t>(discovered));
  for (ClusterId i = 1; i <= discovered; ++i) {
    order.emplace_back(squared_distance(x[point], centers.at(i)), i);
  }
  std::sort(order.begin(), order.end());

  HeuristicOutcome out;
  for (const auto& [dist, id] : order) {
    ++out.queries_used;
    if (session.same_cluster(point, reps.representative(id))) {
      out.cluster = id;
      return out;
    }
  }
  out.cluster = reps.open(point);
  out.opened = true;
  return out;
}

std::optional<ClusterId> check_cluster(OracleSession& session, std::size_t x,
                                       const Representatives& reps,
                                       std::span<const ClusterId> candidates,
                                       bool early_exit) {
  for (ClusterId i : candidates) {
    const auto& z = reps.members(i);
    const std::size_t need = z.size() / 2 + 1;
    std::size_t yes = 0;
    std::size_t asked = 0;
    for (std::size_t member : z) {
      ++asked;
      if (session.same_cluster(x, member)) ++yes;
      if (early_exit && (yes >= need || yes + (z.size() - asked) < need)) break;
    }
    if (yes >= need) return i;
  }
  return std::nullopt;
}

}  // namespace scq
