#include "scq/sampling.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace scq {

std::size_t uniform_index(Rng& rng, std::size_t n) {
  if (n == 0) throw std::invalid_argument("uniform_index over an empty range");
  const auto idx = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n));
  return std::min(idx, n - 1);
}

SamplerState::SamplerState(const PointSet& points)
    : points_(&points), weights_(points.size(), 1.0) {
  if (points.empty()) throw std::invalid_argument("sampler over an empty set");
  total_ = static_cast<double>(points.size());
}

void SamplerState::add_center(std::span<const double> center) {
  if (center.size() != points_->dim()) {
    throw std::invalid_argument("center dimension mismatch");
  }
  const bool first = centers_ == 0;
  total_ = 0.0;
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    const double d = squared_distance((*points_)[i], center);
    weights_[i] = first ? d : std::min(weights_[i], d);
    total_ += weights_[i];
  }
  ++centers_;
  prefix_stale_ = true;
}

void SamplerState::rebuild_prefix() {
  prefix_.resize(weights_.size());
  double running = 0.0;
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    running += weights_[i];
    prefix_[i] = running;
  }
  total_ = running;
  prefix_stale_ = false;
}

std::optional<std::size_t> SamplerState::d2_sample(Rng& rng) {
  if (centers_ == 0) return uniform_index(rng, weights_.size());
  if (prefix_stale_) rebuild_prefix();
  if (total_ <= 0.0) return std::nullopt;

  const double target = uniform01(rng) * total_;
  // First index whose running sum exceeds the target; it has positive weight.
  auto it = std::upper_bound(prefix_.begin(), prefix_.end(), target);
  if (it == prefix_.end()) {
    // target rounded up to the total; take the last positive-weight point.
    auto last = std::find_if(weights_.rbegin(), weights_.rend(),
                             [](double w) { return w > 0.0; });
    return static_cast<std::size_t>(weights_.rend() - last - 1);
  }
  return static_cast<std::size_t>(it - prefix_.begin());
}

std::size_t reference_point(std::span<const std::size_t> candidates,
                            const SamplerState& state) {
  if (candidates.empty()) {
    throw std::logic_error("reference point requested for a cluster without samples");
  }
  std::size_t best = candidates.front();
  for (std::size_t c : candidates) {
    const double w = state.weight(c);
    const double wb = state.weight(best);
    if (w < wb || (w == wb && c < best)) best = c;
  }
  return best;
}

double acceptance_probability(double w_ref, double w_x, double scale) {
  if (w_x <= 0.0) return 1.0;
  return std::min(1.0, scale * w_ref / w_x);
}

RejectionResult rej_samp(SamplerState& state, const ClassifyFn& classify_fn,
                         const OracleSession& session,
                         const RejectionRequest& request, Rng& rng) {
  if (request.scale <= 0.0) throw std::invalid_argument("acceptance scale must be positive");
  RejectionResult out;
  std::map<ClusterId, double> ref_weight;
  const auto held = [&](ClusterId j) {
    const auto it = request.have.find(j);
    return it == request.have.end() ? std::size_t{0} : it->second;
  };
  for (ClusterId j : request.targets) {
    ref_weight[j] = state.weight(request.references.at(j));
    out.accepted[j];
  }
  const std::size_t wanted = request.stop_after == 0
                                 ? request.targets.size()
                                 : std::min(request.stop_after, request.targets.size());
  const auto satisfied = [&] {
    const auto filled = std::count_if(
        request.targets.begin(), request.targets.end(),
        [&](ClusterId j) { return out.accepted[j].size() + held(j) >= request.quota; });
    return static_cast<std::size_t>(filled) >= wanted;
  };

  const std::uint64_t ledger_start = session.ledger();
  while (!satisfied()) {
    if (out.draws >= request.draw_cap) break;
    const auto x = state.d2_sample(rng);
    if (!x) break;
    ++out.draws;

    const double wx = state.weight(*x);
    double best = 0.0;
    double ceiling = 0.0;
    for (const auto& [j, wref] : ref_weight) {
      if (out.accepted[j].size() + held(j) >= request.quota) continue;
      best = std::max(best, acceptance_probability(wref, wx, request.scale));
      ceiling = std::max(ceiling, wref);
    }
    const double u = uniform01(rng);
    if (u >= best) continue;

    std::optional<ClusterId> j;
    try {
      j = classify_fn(*x);
    } catch (const BudgetExhausted&) {
      out.budget_exhausted = true;
      break;
    }
    if (!j) continue;
    out.classified.push_back({*x, *j, u, ceiling});
    auto it = ref_weight.find(*j);
    if (it == ref_weight.end()) continue;
    if (out.accepted[*j].size() + held(*j) >= request.quota) continue;
    if (u < acceptance_probability(it->second, wx, request.scale)) {
      out.accepted[*j].push_back(*x);
    }
  }
  out.queries = session.ledger() - ledger_start;
  for (ClusterId j : request.targets) {
    if (out.accepted[j].size() + held(j) < request.quota) out.starved.push_back(j);
  }
  return out;
}

}  // namespace scq
