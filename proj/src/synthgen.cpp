#include "scq/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <stdexcept>

namespace scq {

void SynthConfig::validate() const {
  if (k == 0 || n < k) throw std::invalid_argument("synthetic data needs n >= K >= 1");
  if (!(alpha > 1.0)) throw std::invalid_argument("Zipf alpha must exceed 1");
  if (!(sigma > 0.0) || !(box > 0.0) || !(rho > 0.0)) {
    throw std::invalid_argument("sigma, box and rho must be positive");
  }
  if (!(p_collision >= 0.0 && p_collision <= 1.0)) {
    throw std::invalid_argument("collision probability must be in [0, 1]");
  }
  if (dim == 0) throw std::invalid_argument("dimension must be positive");
}

std::vector<std::size_t> apportion(const std::vector<double>& weights, std::size_t n) {
  const std::size_t k = weights.size();
  if (k == 0 || n < k) throw std::invalid_argument("apportion needs n >= number of weights");
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(total > 0.0)) throw std::invalid_argument("apportion needs positive weights");

  std::vector<std::size_t> out(k);
  std::vector<double> frac(k);
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const double share = weights[i] / total * static_cast<double>(n);
    out[i] = static_cast<std::size_t>(std::floor(share));
    frac[i] = share - std::floor(share);
    assigned += out[i];
  }
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
  // Floating error can leave the floors a unit above or below n.
  for (std::size_t i = 0; assigned < n; i = (i + 1) % k, ++assigned) ++out[order[i]];
  while (assigned > n) {
    auto it = std::max_element(out.begin(), out.end());
    --*it;
    --assigned;
  }

  for (std::size_t i = 0; i < k; ++i) {
    if (out[i] > 0) continue;
    auto it = std::max_element(out.begin(), out.end());
    --*it;
    out[i] = 1;
  }
  return out;
}

std::vector<std::size_t> zipf_sizes(std::size_t k, double alpha, std::size_t n, Rng& rng) {
  if (k == 0 || n < k) throw std::invalid_argument("zipf_sizes needs n >= K >= 1");
  if (!(alpha > 1.0)) throw std::invalid_argument("Zipf alpha must exceed 1");
  std::vector<double> cdf(n);
  double running = 0.0;
  for (std::size_t x = 1; x <= n; ++x) {
    running += std::pow(static_cast<double>(x), -alpha);
    cdf[x - 1] = running;
  }
  std::vector<double> draws(k);
  for (auto& v : draws) {
    const double u = uniform01(rng) * running;
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    const auto idx = std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()), n - 1);
    v = static_cast<double>(idx + 1);
  }
  return apportion(draws, n);
}

std::vector<std::size_t> rank_zipf_sizes(std::size_t k, double alpha, std::size_t n) {
  std::vector<double> w(k);
  for (std::size_t i = 0; i < k; ++i) w[i] = std::pow(static_cast<double>(i + 1), -alpha);
  return apportion(w, n);
}

std::vector<std::vector<ClusterId>> collision_groups(std::size_t k, double p, Rng& rng) {
  std::vector<std::size_t> parent(k);
  std::iota(parent.begin(), parent.end(), 0);
  const auto find = [&](std::size_t a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      if (uniform01(rng) < p) {
        const auto a = find(i);
        const auto b = find(j);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
      }
    }
  }
  std::vector<std::vector<ClusterId>> groups;
  std::vector<std::size_t> slot(k, k);
  for (std::size_t i = 0; i < k; ++i) {
    const auto r = find(i);
    if (slot[r] == k) {
      slot[r] = groups.size();
      groups.emplace_back();
    }
    groups[slot[r]].push_back(static_cast<ClusterId>(i + 1));
  }
  return groups;
}

Point uniform_in_ball(std::size_t dim, double radius, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Point v(dim);
  double norm = 0.0;
  do {
    norm = 0.0;
    for (auto& c : v) {
      c = gauss(rng);
      norm += c * c;
    }
  } while (norm == 0.0);
  norm = std::sqrt(norm);
  const double r = radius * std::pow(uniform01(rng), 1.0 / static_cast<double>(dim));
  for (auto& c : v) c = c / norm * r;
  return v;
}

SynthDataset generate(const SynthConfig& config) {
  config.validate();
  Rng rng(config.seed);
  SynthDataset out;
  out.sizes = config.sizes == SizeMode::kRank
                  ? rank_zipf_sizes(config.k, config.alpha, config.n)
                  : zipf_sizes(config.k, config.alpha, config.n, rng);
  out.groups = collision_groups(config.k, config.p_collision, rng);
  out.centers.assign(config.k, Point(config.dim));

  for (const auto& group : out.groups) {
    auto& leader = out.centers[static_cast<std::size_t>(group.front() - 1)];
    for (auto& c : leader) c = uniform01(rng) * config.box;
    for (std::size_t m = 1; m < group.size(); ++m) {
      auto offset = uniform_in_ball(config.dim, config.rho, rng);
      auto& follower = out.centers[static_cast<std::size_t>(group[m] - 1)];
      for (std::size_t d = 0; d < config.dim; ++d) follower[d] = leader[d] + offset[d];
    }
  }

  std::normal_distribution<double> gauss(0.0, config.sigma);
  std::vector<double> coords;
  coords.reserve(config.n * config.dim);
  std::vector<ClusterId> labels;
  labels.reserve(config.n);
  for (std::size_t i = 0; i < config.k; ++i) {
    const auto& mu = out.centers[i];
    for (std::size_t s = 0; s < out.sizes[i]; ++s) {
      for (std::size_t d = 0; d < config.dim; ++d) coords.push_back(mu[d] + gauss(rng));
      labels.push_back(static_cast<ClusterId>(i + 1));
    }
  }
  out.points = PointSet(config.dim, std::move(coords), std::move(labels));
  return out;
}

void write_csv(const PointSet& points, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  f.precision(17);
  for (std::size_t d = 0; d < points.dim(); ++d) f << 'x' << (d + 1) << ',';
  f << "label\n";
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (double v : points[i]) f << v << ',';
    f << (points.has_labels() ? points.label(i) : 0) << '\n';
  }
  if (!f) throw std::runtime_error("write failed for " + path);
}

}  // namespace scq
