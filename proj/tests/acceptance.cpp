// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "scq/harness.hpp"
#include "test_support.hpp"

namespace {

using namespace scq;
using Clock = std::chrono::steady_clock;

constexpr std::size_t kTrials = 20;

int failures = 0;

double since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

void report(int id, const char* what, bool pass, const std::string& detail, double secs) {
  std::printf("criterion %2d %s: %s (%s; %.1fs)\n", id, pass ? "PASS" : "FAIL", what,
              detail.c_str(), secs);
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

SynthConfig scaled(std::size_t n, std::size_t k, double p) {
  SynthConfig c;
  c.n = n;
  c.k = k;
  c.p_collision = p;
  c.seed = 1000;
  return c;
}

ExperimentPlan plan(Mode mode, SynthConfig synth, std::vector<Algorithm> algos,
                    std::vector<std::uint64_t> points) {
  ExperimentPlan p;
  p.mode = mode;
  p.algorithms = std::move(algos);
  p.points = std::move(points);
  p.trials = kTrials;
  p.seed = 1;
  p.data.synth = synth;
  return p;
}

const TableRow& row(const Table& t, Algorithm a, std::uint64_t x) {
  for (const auto& r : t) {
    if (r.algorithm == a && r.x == x) return r;
  }
  throw std::logic_error("missing table row");
}

// 1. d2_sample against the exact ratios on 50 points with 2 centers.
void sampler_fidelity() {
  const auto t0 = Clock::now();
  const auto x = testing::planted({{0, 0}, {4, 2}}, {25, 25}, 1.5, 1);
  const Point c1{0.5, 0.0}, c2{3.5, 2.0};
  SamplerState s(x);
  s.add_center(c1);
  s.add_center(c2);
  std::vector<double> exact(x.size());
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    exact[i] = std::min(squared_distance(x[i], c1), squared_distance(x[i], c2));
    total += exact[i];
  }
  Rng rng(2);
  const int n = 100000;
  std::vector<double> seen(x.size());
  for (int i = 0; i < n; ++i) seen[*s.d2_sample(rng)] += 1.0;
  double tv = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) tv += std::abs(seen[i] / n - exact[i] / total);
  tv /= 2;
  const double secs = since(t0);
  report(1, "sampler fidelity", tv < 0.02 && secs < 5, fmt("TV %.4f", tv), secs);
}

// 2. Accepted rejection samples of a planted 20-point cluster are uniform.
void rejection_uniformity() {
  const auto t0 = Clock::now();
  std::vector<double> coords;
  std::vector<ClusterId> labels;
  for (int i = 0; i < 20; ++i) {
    coords.insert(coords.end(), {8.0 + 0.2 * i, 1.0 + 0.05 * i});
    labels.push_back(1);
  }
  for (int i = 0; i < 30; ++i) {
    coords.insert(coords.end(), {0.1 * (i % 5), 0.1 * (i / 5)});
    labels.push_back(2);
  }
  const PointSet x(2, coords, labels);
  SamplerState s(x);
  s.add_center(std::vector<double>{0.2, 0.2});
  OracleSession session(x.labels());
  Representatives reps;
  const ClassifyFn fn = [&](std::size_t p) -> std::optional<ClusterId> {
    return classify(session, p, reps);
  };
  RejectionRequest req;
  // Classify the reference first so it becomes cluster 1.
  reps.open(0);
  req.targets = {1};
  req.references = {{1, 0}};
  req.quota = 10000;
  Rng rng(3);
  const auto res = rej_samp(s, fn, session, req, rng);
  std::vector<double> counts(20);
  bool clean = res.complete();
  for (std::size_t p : res.accepted.at(1)) {
    if (p >= 20) clean = false;
    else ++counts[p];
  }
  const double expect = static_cast<double>(res.accepted.at(1).size()) / 20;
  double chi2 = 0.0;
  for (double c : counts) chi2 += (c - expect) * (c - expect) / expect;
  const double pval = testing::chi2_sf(chi2, 19);
  const double secs = since(t0);
  report(2, "rejection uniformity", clean && pval > 0.01 && secs < 30,
         fmt("chi2 %.2f, p %.3f, %zu accepted", chi2, pval, res.accepted.at(1).size()), secs);
}

// 3. Every recovered center meets the (1 + eps) cost bound at every round end.
void loop_invariant() {
  const auto t0 = Clock::now();
  const double eps = 0.5;
  std::map<Algorithm, int> good;
  const std::vector<Algorithm> algos{Algorithm::kBasic, Algorithm::kImprovedSimple,
                                     Algorithm::kImproved};
  for (std::size_t trial = 0; trial < kTrials; ++trial) {
    auto cfg = scaled(10000, 20, 0.0);
    cfg.seed += trial;
    const auto data = generate(cfg);
    const auto members = data.points.members_by_label();
    for (Algorithm a : algos) {
      RecoveryConfig rc;
      rc.eps = eps;
      rc.seed = trial + 1;
      bool ok = true;
      const RoundObserver obs = [&](const RoundSnapshot& snap) {
        if (snap.stage != RoundStage::kEnded) return;
        for (const auto& c : snap.engine.recovered()) {
          const auto& idx = members.at(data.points.label(c.representative));
          if (centroid_error(data.points, idx, c.center) > eps) ok = false;
        }
      };
      OracleSession s(data.points.labels());
      RecoveryResult r;
      if (a == Algorithm::kBasic) r = run_basic(data.points, s, rc, obs);
      else if (a == Algorithm::kImproved) r = run_improved(data.points, s, rc, obs);
      else r = run_improved_simplified(data.points, s, rc, obs);
      good[a] += ok && r.k_recovered() > 0;
    }
  }
  const double secs = since(t0);
  bool pass = secs < 120;
  std::string detail;
  for (Algorithm a : algos) {
    pass = pass && good[a] >= 18;
    detail += fmt("%s %d/20 ", std::string(to_string(a)).c_str(), good[a]);
  }
  detail.pop_back();
  report(3, "loop invariant", pass, detail, secs);
}

// 4. Median centroid error below 10% with small spread between algorithms.
void error_rates() {
  const auto t0 = Clock::now();
  const std::vector<Algorithm> algos{Algorithm::kUniform, Algorithm::kBasic,
                                     Algorithm::kImprovedSimple};
  const auto out = run_error_report(
      plan(Mode::kErrorReport, scaled(100000, 50, 0.0), algos, {10, 15, 20}));
  bool pass = true;
  std::string detail;
  for (std::uint64_t t : {10, 15, 20}) {
    double lo = 1e9, hi = -1e9;
    for (Algorithm a : algos) {
      const auto& r = row(out.table, a, t);
      pass = pass && r.censored == 0 && r.mean < 0.10;
      lo = std::min(lo, r.mean);
      hi = std::max(hi, r.mean);
    }
    pass = pass && hi - lo < 0.03;
    detail += fmt("t%llu [%.3f, %.3f] ", static_cast<unsigned long long>(t), lo, hi);
  }
  detail.pop_back();
  const double secs = since(t0);
  report(4, "centroid error < 0.10, spread < 0.03", pass && secs < 300, detail, secs);
}

struct Recovery60 {
  Table table;
  std::vector<TrialRecord> trials;
};

// 5. Fixed-recovery queries at 60% of the clusters: improved <= basic <= 0.67 uniform.
// Returns the p = 0 runs for the rounds criterion.
Recovery60 query_ordering() {
  const auto t0 = Clock::now();
  const std::vector<Algorithm> algos{Algorithm::kUniform, Algorithm::kBasic,
                                     Algorithm::kImprovedSimple};
  Recovery60 zero;
  bool pass = true;
  std::string detail;
  for (double p : {0.0, 0.3}) {
    const auto out =
        run_fixed_recovery(plan(Mode::kFixedRecovery, scaled(100000, 50, p), algos, {30}));
    const auto& u = row(out.table, Algorithm::kUniform, 30);
    const auto& b = row(out.table, Algorithm::kBasic, 30);
    const auto& i = row(out.table, Algorithm::kImprovedSimple, 30);
    const bool censored = u.censored + b.censored + i.censored > 0;
    const bool ok = !censored && i.mean <= b.mean && b.mean <= 0.67 * u.mean;
    pass = pass && ok;
    detail += fmt("p=%.1f uniform %.0f basic %.0f improved %.0f censored %zu/%zu/%zu; ", p, u.mean,
                  b.mean, i.mean, u.censored, b.censored, i.censored);
    if (p == 0.0) zero = {out.table, out.trials};
  }
  detail.resize(detail.size() - 2);
  const double secs = since(t0);
  report(5, "query ordering", pass && secs < 600, detail, secs);
  return zero;
}

// 6. At a fixed budget, collisions cost clusters.
void collision_hardness() {
  const auto t0 = Clock::now();
  const std::vector<Algorithm> algos{Algorithm::kBasic, Algorithm::kImprovedSimple};
  const std::uint64_t budget = 5000;
  std::map<Algorithm, std::pair<double, double>> m;
  for (double p : {0.0, 0.3}) {
    const auto out =
        run_fixed_budget(plan(Mode::kFixedBudget, scaled(100000, 50, p), algos, {budget}));
    for (Algorithm a : algos) {
      (p == 0.0 ? m[a].first : m[a].second) = row(out.table, a, budget).mean;
    }
  }
  bool pass = true;
  std::string detail;
  for (Algorithm a : algos) {
    pass = pass && m[a].second < m[a].first;
    detail += fmt("%s p=0 %.2f p=0.3 %.2f; ", std::string(to_string(a)).c_str(), m[a].first,
                  m[a].second);
  }
  detail.resize(detail.size() - 2);
  report(6, "collision hardness at budget 5000", pass, detail, since(t0));
}

double mean_rounds(const std::vector<TrialRecord>& t, Algorithm a) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& r : t) {
    if (r.algorithm != a) continue;
    sum += static_cast<double>(r.rounds);
    ++n;
  }
  return n ? sum / static_cast<double>(n) : NAN;
}

// 7. Improved needs no more rounds than basic.
void rounds(const Recovery60& synth50) {
  const auto t0 = Clock::now();
  const std::vector<Algorithm> algos{Algorithm::kBasic, Algorithm::kImprovedSimple};
  const auto out20 =
      run_fixed_recovery(plan(Mode::kFixedRecovery, scaled(10000, 20, 0.0), algos, {12}));
  const double b50 = mean_rounds(synth50.trials, Algorithm::kBasic);
  const double i50 = mean_rounds(synth50.trials, Algorithm::kImprovedSimple);
  const double b20 = mean_rounds(out20.trials, Algorithm::kBasic);
  const double i20 = mean_rounds(out20.trials, Algorithm::kImprovedSimple);
  report(7, "rounds improved <= basic", i50 <= b50 && i20 <= b20,
         fmt("K=50: %.2f vs %.2f; K=20: %.2f vs %.2f", i50, b50, i20, b20), since(t0));
}

// 8. Most points classify with one query against recovered centers.
void classification() {
  const auto t0 = Clock::now();
  const auto out = run_classify_study(
      plan(Mode::kClassifyStudy, scaled(100000, 50, 0.0), {Algorithm::kBasic}, {30}));
  double worst = 1.0;
  bool correct = true;
  for (const auto& t : out.trials) {
    worst = std::min(worst, t.value);
    correct = correct && t.classified_correct == t.classified_points;
  }
  const double mean = out.table.front().mean;
  report(8, "one-query classification", mean >= 0.85 && correct,
         fmt("mean share %.4f, worst %.4f, all correct %s", mean, worst, correct ? "yes" : "no"),
         since(t0));
}

// 9. Majority votes with 40 representatives, and noisy recovery of 3 blobs.
void noisy_stack() {
  const auto t0 = Clock::now();
  NoisyConfig nc;
  nc.p = 0.1;
  const std::size_t k = 5;
  const std::size_t per = rep_size_cap(nc, k, 1.0);
  const std::size_t calls = 10000;
  std::vector<ClusterId> truth;
  for (std::size_t c = 0; c < k; ++c) truth.insert(truth.end(), per, ClusterId(c + 1));
  for (std::size_t i = 0; i < calls; ++i) truth.push_back(ClusterId(1 + i % k));
  OracleSession s(truth, 0.1, 5);
  Representatives reps;
  for (std::size_t c = 0; c < k; ++c) {
    const ClusterId id = reps.open(c * per);
    for (std::size_t m = 1; m < per; ++m) reps.add(id, c * per + m);
  }
  std::vector<ClusterId> cand(k);
  std::iota(cand.begin(), cand.end(), 1);
  std::size_t wrong = 0;
  for (std::size_t i = k * per; i < truth.size(); ++i) {
    wrong += check_cluster(s, i, reps, cand) != truth[i];
  }
  const double rate = static_cast<double>(wrong) / calls;

  const double eps = 0.5;
  int good = 0;
  for (std::uint64_t seed = 1; seed <= kTrials; ++seed) {
    const auto x = testing::three_blobs(100 + seed, 300);
    OracleSession session(x.labels(), 0.1, seed * 7919);
    RecoveryConfig rc;
    rc.eps = eps;
    rc.seed = seed;
    rc.algorithm = Algorithm::kNoisy;
    const auto r = run_noisy(x, session, rc, nc);
    bool ok = r.k_recovered() == 3;
    std::set<ClusterId> labels;
    for (const auto& c : r.recovered) {
      ok = ok && c.error && *c.error <= eps;
      if (c.truth_label) labels.insert(*c.truth_label);
    }
    good += ok && labels.size() == 3;
  }
  report(9, "noisy stack", rate < 0.01 && good >= 16,
         fmt("check_cluster error %.4f over %zu calls (|Z|=%zu); recovered 3/3 in %d/20", rate,
             calls, per, good),
         since(t0));
}

// 10. Identical inputs give identical serialized results; queries match the ledger.
void determinism() {
  const auto t0 = Clock::now();
  bool same = true;
  bool ledger = true;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto cfg = scaled(5000, 15, seed % 2 ? 0.0 : 0.3);
    cfg.seed = seed;
    const auto x = generate(cfg).points;
    for (Algorithm a : {Algorithm::kUniform, Algorithm::kBasic, Algorithm::kImproved,
                        Algorithm::kImprovedSimple, Algorithm::kNoisy}) {
      RecoveryConfig rc;
      rc.seed = seed;
      rc.target_recovered = a == Algorithm::kUniform ? 8 : 0;
      const double p = a == Algorithm::kNoisy ? 0.05 : 0.0;
      NoisyConfig nc;
      nc.p = p;
      std::string first;
      for (int rep = 0; rep < 2; ++rep) {
        OracleSession s(x.labels(), p, seed);
        const auto r = run_algorithm(a, x, s, rc, nc);
        ledger = ledger && r.queries_total == s.ledger();
        const auto j = to_json(r);
        if (rep == 0) first = j;
        else same = same && j == first;
      }
    }
  }
  report(10, "determinism and accounting", same && ledger,
         fmt("byte-identical %s, ledger matches %s", same ? "yes" : "no", ledger ? "yes" : "no"),
         since(t0));
}

// 11. Band partition invariants over 1000 random frequency vectors.
void band_properties() {
  const auto t0 = Clock::now();
  Rng rng(11);
  int bad = 0;
  for (int t = 0; t < 1000; ++t) {
    const std::size_t q = 1 + rng() % 64;
    const std::size_t n = 1 + rng() % 80;
    std::map<ClusterId, double> p;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double v = std::floor(std::pow(2.0, 14.0 * uniform01(rng))) + 1;
      p[static_cast<ClusterId>(i + 1)] = v;
      total += v;
    }
    for (auto& [id, v] : p) v /= total;
    const auto b = split_bands(p, q);
    bool ok = b.levels == std::max<std::size_t>(
                              1, static_cast<std::size_t>(std::ceil(3 * std::log2(double(q)))));
    std::multiset<ClusterId> seen;
    for (const auto& band : b.bands) seen.insert(band.begin(), band.end());
    ok = ok && seen.size() == p.size();
    for (const auto& [id, v] : p) ok = ok && seen.count(id) == 1;
    const double tail = 1.0 / std::pow(double(q), 3);
    for (std::size_t l = 1; l <= b.levels; ++l) {
      double mass = 0.0;
      for (ClusterId id : b.bands[l - 1]) {
        const double v = p.at(id);
        ok = ok && v > std::ldexp(1.0, -int(l)) && v <= std::ldexp(1.0, 1 - int(l));
        ok = ok && (q < 2 || v > tail);
        mass += v;
      }
      ok = ok && b.heavy[l - 1] == (mass >= 1.0 / (3.0 * double(b.levels)));
    }
    for (ClusterId id : b.bands[b.levels]) ok = ok && p.at(id) <= tail;
    ok = ok && !b.heavy[b.levels];
    bad += !ok;
  }
  report(11, "band partition invariants", bad == 0, fmt("%d/1000 violations", bad), since(t0));
}

}  // namespace

int main() {
  sampler_fidelity();
  rejection_uniformity();
  band_properties();
  determinism();
  noisy_stack();
  loop_invariant();
  error_rates();
  const auto zero = query_ordering();
  collision_hardness();
  rounds(zero);
  classification();
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
