#include "scq/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace scq {

namespace {

void check_finite(std::span<const double> p) {
  for (double v : p) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("point coordinates must be finite");
    }
  }
}

std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return idx;
}

double max_pairwise_squared_distance(const PointSet& x,
                                     std::span<const std::size_t> subset) {
  if (subset.size() > kMaxDiameterScan) {
    throw std::invalid_argument(
        "empty-center cost is only supported for at most " +
        std::to_string(kMaxDiameterScan) + " points");
  }
  double best = 0.0;
  for (std::size_t a = 0; a < subset.size(); ++a) {
    for (std::size_t b = a + 1; b < subset.size(); ++b) {
      best = std::max(best, squared_distance(x[subset[a]], x[subset[b]]));
    }
  }
  return best;
}

}  // namespace

PointSet::PointSet(std::size_t dim) : dim_(dim) {
  if (dim == 0) throw std::invalid_argument("dimension must be positive");
}

PointSet::PointSet(std::size_t dim, std::vector<double> coords,
                   std::vector<ClusterId> labels)
    : dim_(dim), coords_(std::move(coords)), labels_(std::move(labels)) {
  if (dim == 0) throw std::invalid_argument("dimension must be positive");
  if (coords_.size() % dim != 0) {
    throw std::invalid_argument("coordinate count is not a multiple of dim");
  }
  check_finite(coords_);
  if (!labels_.empty() && labels_.size() != size()) {
    throw std::invalid_argument("label count does not match point count");
  }
  for (ClusterId l : labels_) {
    if (l <= 0) throw std::invalid_argument("labels must be positive");
  }
}

PointSet PointSet::from_points(const std::vector<Point>& points,
                               std::vector<ClusterId> labels) {
  if (points.empty()) throw std::invalid_argument("no points given");
  const std::size_t dim = points.front().size();
  std::vector<double> coords;
  coords.reserve(points.size() * dim);
  for (const Point& p : points) {
    if (p.size() != dim) throw std::invalid_argument("dimension mismatch");
    coords.insert(coords.end(), p.begin(), p.end());
  }
  return PointSet(dim, std::move(coords), std::move(labels));
}

void PointSet::push_back(std::span<const double> p) {
  if (has_labels()) throw std::invalid_argument("point set requires labels");
  if (p.size() != dim_) throw std::invalid_argument("dimension mismatch");
  check_finite(p);
  coords_.insert(coords_.end(), p.begin(), p.end());
}

void PointSet::push_back(std::span<const double> p, ClusterId label) {
  if (!empty() && !has_labels()) {
    throw std::invalid_argument("point set has no labels");
  }
  if (p.size() != dim_) throw std::invalid_argument("dimension mismatch");
  if (label <= 0) throw std::invalid_argument("labels must be positive");
  check_finite(p);
  coords_.insert(coords_.end(), p.begin(), p.end());
  labels_.push_back(label);
}

std::map<ClusterId, std::vector<std::size_t>> PointSet::members_by_label()
    const {
  if (!has_labels()) throw std::invalid_argument("point set has no labels");
  std::map<ClusterId, std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    out[labels_[i]].push_back(i);
  }
  return out;
}

void CenterSet::set(ClusterId id, Point center) {
  if (dim_ == 0) dim_ = center.size();
  if (center.size() != dim_) throw std::invalid_argument("dimension mismatch");
  check_finite(center);
  centers_[id] = std::move(center);
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

double nearest_squared_distance(std::span<const double> p,
                                const CenterSet& c) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& [id, center] : c) {
    best = std::min(best, squared_distance(p, center));
  }
  return best;
}

double cost(const PointSet& x, const CenterSet& c) {
  const auto idx = all_indices(x.size());
  return cost(x, idx, c);
}

double cost(const PointSet& x, std::span<const std::size_t> subset,
            const CenterSet& c) {
  if (c.empty()) {
    return static_cast<double>(subset.size()) *
           max_pairwise_squared_distance(x, subset);
  }
  if (c.dim() != x.dim()) throw std::invalid_argument("dimension mismatch");
  double total = 0.0;
  for (std::size_t i : subset) total += nearest_squared_distance(x[i], c);
  return total;
}

double cost(const PointSet& x, std::span<const std::size_t> subset,
            std::span<const double> center) {
  if (center.size() != x.dim()) throw std::invalid_argument("dimension mismatch");
  double total = 0.0;
  for (std::size_t i : subset) total += squared_distance(x[i], center);
  return total;
}

Point centroid(const PointSet& x) {
  const auto idx = all_indices(x.size());
  return centroid(x, idx);
}

Point centroid(const PointSet& x, std::span<const std::size_t> subset) {
  if (subset.empty()) throw std::invalid_argument("centroid of an empty set");
  Point mu(x.dim(), 0.0);
  for (std::size_t i : subset) {
    const auto p = x[i];
    for (std::size_t d = 0; d < mu.size(); ++d) mu[d] += p[d];
  }
  for (double& v : mu) v /= static_cast<double>(subset.size());
  return mu;
}

double centroid_error(const PointSet& x, std::span<const std::size_t> subset,
                      std::span<const double> mu_hat) {
  if (mu_hat.size() != x.dim()) throw std::invalid_argument("dimension mismatch");
  const Point mu = centroid(x, subset);
  const double base = cost(x, subset, mu);
  // Phi(X, c) - Phi(X, mu) = |X| * ||c - mu||^2 exactly; avoids cancellation.
  const double excess =
      static_cast<double>(subset.size()) * squared_distance(mu, mu_hat);
  if (base == 0.0) {
    return excess == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  }
  return excess / base;
}

double centroid_error(const PointSet& x, std::span<const double> mu_hat) {
  const auto idx = all_indices(x.size());
  return centroid_error(x, idx, mu_hat);
}

}  // namespace scq
