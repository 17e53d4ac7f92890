#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <vector>

namespace scq {

/// Cluster indices are positive; 0 is never a valid cluster.
using ClusterId = int;
using Point = std::vector<double>;

/// Row-major point storage with optional ground-truth labels.
class PointSet {
 public:
  PointSet() = default;
  explicit PointSet(std::size_t dim);
  PointSet(std::size_t dim, std::vector<double> coords,
           std::vector<ClusterId> labels = {});

  static PointSet from_points(const std::vector<Point>& points,
                              std::vector<ClusterId> labels = {});

  void push_back(std::span<const double> p);
  void push_back(std::span<const double> p, ClusterId label);

  std::size_t size() const { return dim_ == 0 ? 0 : coords_.size() / dim_; }
  std::size_t dim() const { return dim_; }
  bool empty() const { return size() == 0; }

  std::span<const double> operator[](std::size_t i) const {
    return {coords_.data() + i * dim_, dim_};
  }

  bool has_labels() const { return !labels_.empty(); }
  ClusterId label(std::size_t i) const { return labels_[i]; }
  const std::vector<ClusterId>& labels() const { return labels_; }
  const std::vector<double>& coords() const { return coords_; }

  /// Point indices grouped by ground-truth label. Requires labels.
  std::map<ClusterId, std::vector<std::size_t>> members_by_label() const;

 private:
  std::size_t dim_ = 0;
  std::vector<double> coords_;
  std::vector<ClusterId> labels_;
};

/// The set C of approximate centers, keyed by cluster index.
class CenterSet {
 public:
  CenterSet() = default;
  explicit CenterSet(std::size_t dim) : dim_(dim) {}

  void set(ClusterId id, Point center);
  void erase(ClusterId id) { centers_.erase(id); }
  bool contains(ClusterId id) const { return centers_.count(id) != 0; }
  const Point& at(ClusterId id) const { return centers_.at(id); }
  Point& at(ClusterId id) { return centers_.at(id); }

  std::size_t size() const { return centers_.size(); }
  bool empty() const { return centers_.empty(); }
  std::size_t dim() const { return dim_; }

  auto begin() const { return centers_.begin(); }
  auto end() const { return centers_.end(); }

 private:
  std::size_t dim_ = 0;
  std::map<ClusterId, Point> centers_;
};

/// Largest |X| for which the empty-center cost (an O(|X|^2) diameter scan)
/// is supported.
inline constexpr std::size_t kMaxDiameterScan = 2000;

double squared_distance(std::span<const double> a, std::span<const double> b);

/// Squared distance from p to its nearest center; +inf for an empty C.
double nearest_squared_distance(std::span<const double> p, const CenterSet& c);

/// Phi(X, C). With C empty this is |X| * max pairwise squared distance.
double cost(const PointSet& x, const CenterSet& c);
double cost(const PointSet& x, std::span<const std::size_t> subset,
            const CenterSet& c);

/// Phi(X, {center}).
double cost(const PointSet& x, std::span<const std::size_t> subset,
            std::span<const double> center);

Point centroid(const PointSet& x);
Point centroid(const PointSet& x, std::span<const std::size_t> subset);

/// (Phi(X_i, mu_hat) - Phi(X_i, mu_i)) / Phi(X_i, mu_i).
///
/// A degenerate cluster (all points identical) yields 0 when mu_hat is the
/// common point and +inf otherwise.
double centroid_error(const PointSet& x, std::span<const std::size_t> subset,
                      std::span<const double> mu_hat);
double centroid_error(const PointSet& x, std::span<const double> mu_hat);

}  // namespace scq
