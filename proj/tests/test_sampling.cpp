#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <vector>

#include "scq/sampling.hpp"
#include "test_support.hpp"

namespace {

using scq::PointSet;
using scq::Rng;
using scq::SamplerState;

TEST(D2Sample, WeightRatio) {
  // a at distance^2 1, b at distance^2 3 from the center at the origin.
  const PointSet x(1, {1.0, std::sqrt(3.0)});
  SamplerState s(x);
  s.add_center(std::vector<double>{0.0});
  Rng rng(1);
  int b = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) b += *s.d2_sample(rng) == 1;
  EXPECT_NEAR(b / double(n), 0.75, 0.01);
}

TEST(D2Sample, UniformWithoutCenters) {
  const PointSet x(1, {0, 1, 2, 3});
  SamplerState s(x);
  Rng rng(2);
  std::vector<int> c(4);
  for (int i = 0; i < 40000; ++i) ++c[*s.d2_sample(rng)];
  for (int v : c) EXPECT_NEAR(v / 40000.0, 0.25, 0.015);
}

TEST(D2Sample, SingleSupportPoint) {
  const PointSet x(1, {5.0});
  SamplerState s(x);
  s.add_center(std::vector<double>{1.0});
  Rng rng(3);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(*s.d2_sample(rng), 0u);
}

TEST(D2Sample, FullyCoveredSignalsNullopt) {
  const PointSet x(1, {2.0, 2.0});
  SamplerState s(x);
  s.add_center(std::vector<double>{2.0});
  Rng rng(4);
  EXPECT_EQ(s.d2_sample(rng), std::nullopt);
}

TEST(D2Sample, MatchesEnumeratedDistribution) {
  const auto x = scq::testing::planted({{0, 0}, {3, 1}}, {25, 25}, 1.0, 17);
  SamplerState s(x);
  s.add_center(std::vector<double>{0.5, 0.5});
  s.add_center(std::vector<double>{2.5, 1.0});
  std::vector<double> exact(x.size());
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    exact[i] = std::min(scq::squared_distance(x[i], std::vector<double>{0.5, 0.5}),
                        scq::squared_distance(x[i], std::vector<double>{2.5, 1.0}));
    total += exact[i];
  }
  Rng rng(5);
  std::vector<double> seen(x.size());
  const int n = 100000;
  for (int i = 0; i < n; ++i) seen[*s.d2_sample(rng)] += 1.0 / n;
  double tv = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) tv += std::abs(seen[i] - exact[i] / total);
  EXPECT_LT(tv / 2, 0.02);
}

TEST(AddCenter, PointwiseMin) {
  const PointSet x(1, {2.0, 3.0});
  SamplerState s(x);
  s.add_center(std::vector<double>{0.0});
  EXPECT_DOUBLE_EQ(s.weight(0), 4.0);
  EXPECT_DOUBLE_EQ(s.weight(1), 9.0);
  s.add_center(std::vector<double>{3.0});
  EXPECT_DOUBLE_EQ(s.weight(0), 1.0);
  EXPECT_DOUBLE_EQ(s.weight(1), 0.0);
  EXPECT_DOUBLE_EQ(s.total(), 1.0);
}

TEST(AddCenter, SecondCopyIsNoOp) {
  const PointSet x(1, {2.0, 5.0, -1.0});
  SamplerState s(x);
  s.add_center(std::vector<double>{1.0});
  const std::vector<double> before(s.weights().begin(), s.weights().end());
  s.add_center(std::vector<double>{1.0});
  EXPECT_EQ(before, std::vector<double>(s.weights().begin(), s.weights().end()));
}

TEST(AddCenter, DimensionMismatch) {
  const PointSet x(2, {0, 0});
  SamplerState s(x);
  EXPECT_THROW(s.add_center(std::vector<double>{1.0}), std::invalid_argument);
}

TEST(AddCenter, IncrementalEqualsBatch) {
  const auto x = scq::testing::planted({{0, 0, 0}}, {300}, 2.0, 8);
  SamplerState s(x);
  Rng rng(9);
  std::vector<scq::Point> cs;
  for (int t = 0; t < 12; ++t) {
    const auto& p = x[scq::uniform_index(rng, x.size())];
    cs.emplace_back(p.begin(), p.end());
    s.add_center(cs.back());
    double sum = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      double w = std::numeric_limits<double>::infinity();
      for (const auto& c : cs) w = std::min(w, scq::squared_distance(x[i], c));
      EXPECT_NEAR(s.weight(i), w, 1e-9 * std::max(1.0, w));
      sum += w;
    }
    EXPECT_NEAR(s.total(), sum, 1e-9 * sum);
  }
}

TEST(ReferencePoint, ArgminWithLowIndexTies) {
  const PointSet x(1, {std::sqrt(5.0), std::sqrt(2.0), std::sqrt(7.0)});
  SamplerState s(x);
  s.add_center(std::vector<double>{0.0});
  EXPECT_EQ(scq::reference_point(std::vector<std::size_t>{0, 1, 2}, s), 1u);
  EXPECT_EQ(scq::reference_point(std::vector<std::size_t>{2}, s), 2u);
  EXPECT_THROW(scq::reference_point(std::vector<std::size_t>{}, s), std::logic_error);

  std::vector<double> c(10, 0.0);
  c[4] = c[9] = std::sqrt(3.0);
  for (std::size_t i = 0; i < 10; ++i) if (i != 4 && i != 9) c[i] = 10.0 + double(i);
  const PointSet y(1, c);
  SamplerState t(y);
  t.add_center(std::vector<double>{0.0});
  EXPECT_EQ(scq::reference_point(std::vector<std::size_t>{9, 4}, t), 4u);
}

TEST(Acceptance, ScaledRatio) {
  EXPECT_NEAR(scq::acceptance_probability(4.0, 16.0, 0.64 / 128), 0.00125, 1e-15);
  EXPECT_DOUBLE_EQ(scq::acceptance_probability(3.0, 3.0, 1.0 / 128), 1.0 / 128);
  EXPECT_DOUBLE_EQ(scq::acceptance_probability(200.0, 1.0, 1.0 / 128), 1.0);
  EXPECT_DOUBLE_EQ(scq::acceptance_probability(64.0, 1.0, 1.0 / 128), 0.5);
  EXPECT_DOUBLE_EQ(scq::acceptance_probability(1.0, 0.0, 1.0), 1.0);
}

TEST(Acceptance, AlwaysInUnitInterval) {
  Rng rng(10);
  for (int i = 0; i < 10000; ++i) {
    const double a = scq::acceptance_probability(1e-3 + 100 * scq::uniform01(rng),
                                                 1e-3 + 100 * scq::uniform01(rng),
                                                 1e-3 + scq::uniform01(rng));
    EXPECT_GT(a, 0.0);
    EXPECT_LE(a, 1.0);
  }
}

// Cluster 1: 20 points spread on [10, 12]; cluster 2: 20 points near 0; one
// center at the origin, so cluster 1 weights range over [100, 144].
struct Fixture {
  PointSet x;
  Fixture() {
    std::vector<double> c;
    std::vector<scq::ClusterId> l;
    for (int i = 0; i < 20; ++i) {
      c.push_back(10.0 + 2.0 * i / 19.0);
      l.push_back(1);
    }
    for (int i = 0; i < 20; ++i) {
      c.push_back(0.5 + 0.01 * i);
      l.push_back(2);
    }
    x = PointSet(1, c, l);
  }
  scq::ClassifyFn classify() const {
    return [this](std::size_t i) { return std::optional<scq::ClusterId>(x.label(i)); };
  }
};

TEST(RejSamp, AcceptedPointsAreUniform) {
  Fixture f;
  SamplerState s(f.x);
  s.add_center(std::vector<double>{0.0});
  scq::OracleSession session(f.x.labels());
  scq::RejectionRequest req;
  req.targets = {1};
  req.references = {{1, 0}};
  req.quota = 10000;
  Rng rng(11);
  const auto res = scq::rej_samp(s, f.classify(), session, req, rng);
  ASSERT_TRUE(res.complete());
  ASSERT_EQ(res.accepted.at(1).size(), 10000u);
  std::vector<double> counts(20);
  for (std::size_t p : res.accepted.at(1)) {
    ASSERT_LT(p, 20u);
    ++counts[p];
  }
  double chi2 = 0.0;
  for (double c : counts) chi2 += (c - 500.0) * (c - 500.0) / 500.0;
  EXPECT_GT(scq::testing::chi2_sf(chi2, 19), 0.01) << "chi2 = " << chi2;
}

TEST(RejSamp, HeldPointsCountTowardQuota) {
  Fixture f;
  SamplerState s(f.x);
  s.add_center(std::vector<double>{0.0});
  scq::OracleSession session(f.x.labels());
  scq::RejectionRequest req;
  req.targets = {1, 2};
  req.references = {{1, 0}, {2, 20}};
  req.quota = 5;
  req.have = {{1, 5}};
  Rng rng(12);
  const auto res = scq::rej_samp(s, f.classify(), session, req, rng);
  EXPECT_TRUE(res.complete());
  EXPECT_TRUE(res.accepted.at(1).empty());
  EXPECT_EQ(res.accepted.at(2).size(), 5u);
}

TEST(RejSamp, StopAfterEndsEarly) {
  Fixture f;
  SamplerState s(f.x);
  s.add_center(std::vector<double>{0.0});
  scq::OracleSession session(f.x.labels());
  scq::RejectionRequest req;
  req.targets = {1, 2};
  req.references = {{1, 0}, {2, 20}};
  req.quota = 3;
  req.stop_after = 1;
  Rng rng(13);
  const auto res = scq::rej_samp(s, f.classify(), session, req, rng);
  std::size_t filled = 0;
  for (const auto& [j, v] : res.accepted) filled += v.size() >= 3;
  EXPECT_EQ(filled, 1u);
  EXPECT_EQ(res.starved.size(), 1u);
}

TEST(RejSamp, DrawCapStarvesTarget) {
  Fixture f;
  SamplerState s(f.x);
  s.add_center(std::vector<double>{0.0});
  scq::OracleSession session(f.x.labels());
  scq::RejectionRequest req;
  req.targets = {2};
  req.references = {{2, 20}};
  req.quota = 1000;
  req.draw_cap = 50;
  Rng rng(14);
  const auto res = scq::rej_samp(s, f.classify(), session, req, rng);
  EXPECT_EQ(res.draws, 50u);
  EXPECT_EQ(res.starved, std::vector<scq::ClusterId>{2});
}

TEST(RejSamp, BudgetExhaustionIsReported) {
  Fixture f;
  SamplerState s(f.x);
  s.add_center(std::vector<double>{0.0});
  scq::OracleSession session(f.x.labels());
  session.set_budget(3);
  scq::RejectionRequest req;
  req.targets = {1};
  req.references = {{1, 0}};
  req.quota = 100;
  const auto classify = [&](std::size_t i) -> std::optional<scq::ClusterId> {
    return session.same_cluster(i, 0) ? 1 : 2;
  };
  Rng rng(15);
  const auto res = scq::rej_samp(s, classify, session, req, rng);
  EXPECT_TRUE(res.budget_exhausted);
  EXPECT_EQ(res.queries, 3u);
  EXPECT_EQ(session.ledger(), 3u);
}

TEST(RejSamp, QueriesMatchLedger) {
  Fixture f;
  SamplerState s(f.x);
  s.add_center(std::vector<double>{0.0});
  scq::OracleSession session(f.x.labels());
  const auto classify = [&](std::size_t i) -> std::optional<scq::ClusterId> {
    return session.same_cluster(i, 0) ? 1 : 2;
  };
  scq::RejectionRequest req;
  req.targets = {1};
  req.references = {{1, 0}};
  req.quota = 200;
  Rng rng(16);
  const auto res = scq::rej_samp(s, classify, session, req, rng);
  EXPECT_EQ(res.queries, session.ledger());
  EXPECT_EQ(res.classified.size(), res.queries);
}

}  // namespace
