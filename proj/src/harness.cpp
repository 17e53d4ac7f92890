#include "scq/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace scq {

using nlohmann::json;

std::string_view to_string(Mode m) {
  switch (m) {
    case Mode::kFixedBudget: return "fixed_budget";
    case Mode::kFixedRecovery: return "fixed_recovery";
    case Mode::kErrorReport: return "error_report";
    case Mode::kClassifyStudy: return "classify_study";
    case Mode::kReducibilityCheck: return "reducibility_check";
  }
  return "unknown";
}

void ExperimentPlan::validate() const {
  if (trials == 0) throw std::invalid_argument("trials must be at least 1");
  if (algorithms.empty()) throw std::invalid_argument("no algorithms selected");
  if (!data.synth && !data.file) throw std::invalid_argument("no dataset source");
  if (data.synth) data.synth->validate();
  for (std::size_t i = 1; i < points.size(); ++i) {
    if (points[i] <= points[i - 1]) {
      throw std::invalid_argument("budgets and targets must be strictly increasing");
    }
  }
  if ((mode == Mode::kFixedBudget || mode == Mode::kFixedRecovery ||
       mode == Mode::kErrorReport) &&
      points.empty()) {
    throw std::invalid_argument("this mode needs budgets or targets");
  }
  if (mode != Mode::kFixedBudget &&
      std::find(points.begin(), points.end(), 0) != points.end()) {
    throw std::invalid_argument("recovery targets must be positive");
  }
  recovery.validate();
  if (!(noise_p >= 0.0 && noise_p < 0.5)) {
    throw std::invalid_argument("noise probability must be in [0, 0.5)");
  }
}

RecoveryResult run_algorithm(Algorithm algorithm, const PointSet& x, OracleSession& session,
                             const RecoveryConfig& config, const NoisyConfig& noisy) {
  switch (algorithm) {
    case Algorithm::kUniform: return run_uniform(x, session, config);
    case Algorithm::kBasic: return run_basic(x, session, config);
    case Algorithm::kImproved: return run_improved(x, session, config);
    case Algorithm::kImprovedSimple: return run_improved_simplified(x, session, config);
    case Algorithm::kNoisy: {
      NoisyConfig nc = noisy;
      nc.p = session.error_prob();
      return run_noisy(x, session, config, nc);
    }
  }
  throw std::logic_error("unknown algorithm");
}

double median(std::vector<double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const std::size_t m = values.size() / 2;
  return values.size() % 2 == 1 ? values[m] : 0.5 * (values[m - 1] + values[m]);
}

Table aggregate(const std::vector<TrialRecord>& records) {
  Table table;
  std::vector<std::vector<double>> values;
  for (const auto& r : records) {
    auto it = std::find_if(table.begin(), table.end(), [&](const TableRow& row) {
      return row.algorithm == r.algorithm && row.x == r.x;
    });
    if (it == table.end()) {
      table.push_back({r.algorithm, r.x, 0.0, 0.0, 0, 0});
      values.emplace_back();
      it = table.end() - 1;
    }
    auto& v = values[static_cast<std::size_t>(it - table.begin())];
    ++it->trials;
    if (r.censored) {
      ++it->censored;
    } else {
      v.push_back(r.value);
    }
  }
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto& v = values[i];
    if (v.empty()) {
      table[i].mean = table[i].sd = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    double sum = 0.0;
    for (double d : v) sum += d;
    const double mean = sum / static_cast<double>(v.size());
    double ss = 0.0;
    for (double d : v) ss += (d - mean) * (d - mean);
    table[i].mean = mean;
    table[i].sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
  }
  return table;
}

namespace {

struct TrialContext {
  const ExperimentPlan& plan;
  std::optional<PointSet> file_points;

  explicit TrialContext(const ExperimentPlan& p) : plan(p) {
    plan.validate();
    if (!plan.data.synth) file_points = load(*plan.data.file).points;
  }

  PointSet points(std::size_t trial) const {
    if (file_points) return *file_points;
    SynthConfig cfg = *plan.data.synth;
    cfg.seed += trial;
    return generate(cfg).points;
  }

  std::uint64_t run_seed(std::size_t trial) const { return plan.seed + trial; }

  RecoveryResult run(Algorithm a, const PointSet& x, std::size_t trial,
                     std::size_t target, std::optional<std::uint64_t> budget,
                     double& seconds) const {
    if (!x.has_labels()) throw std::invalid_argument("experiments need labeled data");
    RecoveryConfig rc = plan.recovery;
    rc.seed = run_seed(trial);
    rc.target_recovered = target;
    OracleSession session(x.labels(), plan.noise_p, rc.seed * 0x9E3779B97F4A7C15ull + 1);
    session.set_budget(budget);
    const auto start = std::chrono::steady_clock::now();
    auto result = run_algorithm(a, x, session, rc, plan.noisy);
    seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (result.queries_total != session.ledger()) {
      throw std::logic_error("query accounting diverged from the oracle ledger");
    }
    return result;
  }

  TrialRecord record(Algorithm a, std::size_t trial, std::uint64_t x,
                     const RecoveryResult& r, double seconds) const {
    TrialRecord t;
    t.algorithm = a;
    t.trial = trial;
    t.seed = run_seed(trial);
    t.x = x;
    t.queries = r.queries_total;
    t.samples = r.samples_total;
    t.clusters_recovered = r.k_recovered();
    t.clusters_discovered = r.discovered;
    t.rounds = r.rounds_total;
    for (const auto& c : r.recovered) {
      t.errors.push_back(c.error.value_or(std::numeric_limits<double>::quiet_NaN()));
    }
    t.wall_seconds = seconds;
    return t;
  }
};

ExperimentOutput finish(std::vector<TrialRecord> trials) {
  ExperimentOutput out;
  out.table = aggregate(trials);
  out.trials = std::move(trials);
  return out;
}

bool reached(const RecoveryResult& r, std::size_t target) {
  return r.k_recovered() >= target;
}

}  // namespace

ExperimentOutput run_fixed_budget(const ExperimentPlan& plan) {
  TrialContext ctx(plan);
  std::vector<TrialRecord> records;
  for (std::size_t trial = 0; trial < plan.trials; ++trial) {
    const PointSet x = ctx.points(trial);
    for (Algorithm a : plan.algorithms) {
      for (std::uint64_t budget : plan.points) {
        double secs = 0.0;
        const auto r = ctx.run(a, x, trial, 0, budget, secs);
        auto t = ctx.record(a, trial, budget, r, secs);
        t.value = static_cast<double>(r.k_recovered());
        t.censored = r.stop == StopReason::kDrawCap;
        records.push_back(std::move(t));
      }
    }
  }
  return finish(std::move(records));
}

ExperimentOutput run_fixed_recovery(const ExperimentPlan& plan) {
  TrialContext ctx(plan);
  std::vector<TrialRecord> records;
  for (std::size_t trial = 0; trial < plan.trials; ++trial) {
    const PointSet x = ctx.points(trial);
    for (Algorithm a : plan.algorithms) {
      for (std::uint64_t target : plan.points) {
        double secs = 0.0;
        const auto r = ctx.run(a, x, trial, target, std::nullopt, secs);
        auto t = ctx.record(a, trial, target, r, secs);
        t.censored = !reached(r, target);
        t.value = static_cast<double>(r.queries_total);
        records.push_back(std::move(t));
      }
    }
  }
  return finish(std::move(records));
}

ExperimentOutput run_error_report(const ExperimentPlan& plan) {
  TrialContext ctx(plan);
  std::vector<TrialRecord> records;
  for (std::size_t trial = 0; trial < plan.trials; ++trial) {
    const PointSet x = ctx.points(trial);
    for (Algorithm a : plan.algorithms) {
      for (std::uint64_t target : plan.points) {
        double secs = 0.0;
        const auto r = ctx.run(a, x, trial, target, std::nullopt, secs);
        auto t = ctx.record(a, trial, target, r, secs);
        t.censored = !reached(r, target);
        t.value = median(t.errors);
        records.push_back(std::move(t));
      }
    }
  }
  return finish(std::move(records));
}

double ClassifyStudy::single_query_share() const {
  if (points == 0) return 0.0;
  const auto it = histogram.find(1);
  return it == histogram.end() ? 0.0
                               : static_cast<double>(it->second) / static_cast<double>(points);
}

ClassifyStudy classify_study(const PointSet& x, const RecoveryResult& result) {
  if (!x.has_labels()) throw std::invalid_argument("classification study needs labels");
  Representatives reps;
  CenterSet centers(x.dim());
  std::vector<ClusterId> label_of;
  for (const auto& c : result.recovered) {
    const ClusterId id = reps.open(c.representative);
    centers.set(id, c.center);
    label_of.push_back(x.label(c.representative));
  }
  const auto recovered = static_cast<ClusterId>(label_of.size());
  std::vector<std::vector<double>> sums;
  std::vector<std::size_t> counts;

  OracleSession session(x.labels());
  ClassifyStudy out;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto h = heuristic_classify(session, x, i, centers, reps);
    ++out.histogram[h.queries_used];
    ++out.points;
    const auto p = x[i];
    if (h.opened) {
      ++out.opened;
      centers.set(h.cluster, Point(p.begin(), p.end()));
      label_of.push_back(x.label(i));
      sums.emplace_back(p.begin(), p.end());
      counts.push_back(1);
    } else if (h.cluster > recovered) {
      const auto j = static_cast<std::size_t>(h.cluster - recovered - 1);
      auto& c = centers.at(h.cluster);
      ++counts[j];
      for (std::size_t d = 0; d < c.size(); ++d) {
        sums[j][d] += p[d];
        c[d] = sums[j][d] / static_cast<double>(counts[j]);
      }
    }
    if (label_of[static_cast<std::size_t>(h.cluster - 1)] == x.label(i)) ++out.correct;
  }
  return out;
}

ReducibilityReport check_reducibility(const PointSet& x, const std::set<ClusterId>& recovered,
                                      double eps) {
  if (!x.has_labels()) throw std::invalid_argument("reducibility check needs labels");
  if (!(eps >= 0.0)) throw std::invalid_argument("eps must be non-negative");
  const auto members = x.members_by_label();
  ReducibilityReport out;
  out.empty_recovered = recovered.empty();

  CenterSet centers(x.dim());
  double own = 0.0;
  for (ClusterId i : recovered) {
    const auto it = members.find(i);
    if (it == members.end()) throw std::invalid_argument("recovered label absent from data");
    const Point mu = centroid(x, it->second);
    own += cost(x, it->second, mu);
    centers.set(i, mu);
  }
  const double denom = eps * own;
  for (const auto& [label, idx] : members) {
    if (recovered.count(label)) continue;
    const double num = cost(x, idx, centers);
    double ratio = 0.0;
    if (num > 0.0) ratio = denom > 0.0 ? num / denom : std::numeric_limits<double>::infinity();
    out.ratios[label] = ratio;
    if (!out.worst || ratio > out.worst_ratio) {
      out.worst = label;
      out.worst_ratio = ratio;
    }
  }
  out.pass = out.worst_ratio <= 1.0;
  if (out.pass) out.worst.reset();
  return out;
}

ExperimentOutput run_classify_study(const ExperimentPlan& plan) {
  TrialContext ctx(plan);
  std::vector<TrialRecord> records;
  const std::size_t target = plan.points.empty() ? 0 : plan.points.front();
  for (std::size_t trial = 0; trial < plan.trials; ++trial) {
    const PointSet x = ctx.points(trial);
    for (Algorithm a : plan.algorithms) {
      double secs = 0.0;
      const auto r = ctx.run(a, x, trial, target, std::nullopt, secs);
      const auto study = classify_study(x, r);
      auto t = ctx.record(a, trial, target, r, secs);
      t.value = study.single_query_share();
      t.classify_histogram = study.histogram;
      t.classified_correct = study.correct;
      t.classified_points = study.points;
      t.censored = !r.complete();
      records.push_back(std::move(t));
    }
  }
  return finish(std::move(records));
}

ExperimentOutput run_reducibility_check(const ExperimentPlan& plan) {
  TrialContext ctx(plan);
  std::vector<TrialRecord> records;
  const std::size_t target = plan.points.empty() ? 0 : plan.points.front();
  for (std::size_t trial = 0; trial < plan.trials; ++trial) {
    const PointSet x = ctx.points(trial);
    for (Algorithm a : plan.algorithms) {
      double secs = 0.0;
      const auto r = ctx.run(a, x, trial, target, std::nullopt, secs);
      std::set<ClusterId> labels;
      for (const auto& c : r.recovered) {
        if (c.truth_label) labels.insert(*c.truth_label);
      }
      const auto rep = check_reducibility(x, labels, plan.recovery.eps);
      auto t = ctx.record(a, trial, target, r, secs);
      t.value = rep.pass ? 1.0 : 0.0;
      t.worst_ratio = rep.worst_ratio;
      t.censored = !r.complete();
      records.push_back(std::move(t));
    }
  }
  return finish(std::move(records));
}

ExperimentOutput run_experiment(const ExperimentPlan& plan) {
  switch (plan.mode) {
    case Mode::kFixedBudget: return run_fixed_budget(plan);
    case Mode::kFixedRecovery: return run_fixed_recovery(plan);
    case Mode::kErrorReport: return run_error_report(plan);
    case Mode::kClassifyStudy: return run_classify_study(plan);
    case Mode::kReducibilityCheck: return run_reducibility_check(plan);
  }
  throw std::logic_error("unknown mode");
}

namespace {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double from_number(const json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw std::runtime_error("bad number " + s);
  }
  return j.get<double>();
}

Algorithm algorithm_from(const std::string& s) {
  const auto a = parse_algorithm(s);
  if (!a) throw std::runtime_error("unknown algorithm " + s);
  return *a;
}

}  // namespace

std::string table_to_csv(const Table& table) {
  std::ostringstream out;
  out << "algorithm,x,mean,sd,trials,censored\n";
  for (const auto& r : table) {
    out << to_string(r.algorithm) << ',' << r.x << ',' << format_double(r.mean) << ','
        << format_double(r.sd) << ',' << r.trials << ',' << r.censored << '\n';
  }
  return out.str();
}

Table table_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  Table out;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1 || line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 6) throw std::runtime_error("line " + std::to_string(lineno) + ": bad row");
    TableRow r;
    r.algorithm = algorithm_from(f[0]);
    r.x = std::stoull(f[1]);
    r.mean = std::strtod(f[2].c_str(), nullptr);
    r.sd = std::strtod(f[3].c_str(), nullptr);
    r.trials = std::stoull(f[4]);
    r.censored = std::stoull(f[5]);
    out.push_back(r);
  }
  return out;
}

std::string experiment_to_json(const ExperimentPlan& plan, const ExperimentOutput& out) {
  json p;
  p["mode"] = to_string(plan.mode);
  auto& algos = p["algorithms"] = json::array();
  for (auto a : plan.algorithms) algos.push_back(to_string(a));
  p["points"] = plan.points;
  p["trials"] = plan.trials;
  p["seed"] = plan.seed;
  p["eps"] = plan.recovery.eps;
  p["heavy_threshold"] = plan.recovery.heavy_threshold;
  p["reuse_samples"] = plan.recovery.reuse_samples;
  p["profile"] = to_string(plan.recovery.profile);
  p["draw_cap"] = plan.recovery.draw_cap;
  p["noise_p"] = plan.noise_p;
  if (plan.data.synth) {
    const auto& s = *plan.data.synth;
    p["synth"] = {{"n", s.n},       {"k", s.k},         {"alpha", s.alpha},
                  {"sigma", s.sigma}, {"box", s.box},     {"dim", s.dim},
                  {"rho", s.rho},   {"p_collision", s.p_collision}, {"seed", s.seed},
                  {"sizes", s.sizes == SizeMode::kRank ? "rank" : "sampled"}};
  } else if (plan.data.file) {
    p["dataset"] = plan.data.file->path;
  }

  auto trials = json::array();
  for (const auto& t : out.trials) {
    json j;
    j["algorithm"] = to_string(t.algorithm);
    j["trial"] = t.trial;
    j["seed"] = t.seed;
    j["x"] = t.x;
    j["value"] = number(t.value);
    j["censored"] = t.censored;
    j["queries"] = t.queries;
    j["samples"] = t.samples;
    j["clusters_recovered"] = t.clusters_recovered;
    j["clusters_discovered"] = t.clusters_discovered;
    j["rounds"] = t.rounds;
    auto& errs = j["errors"] = json::array();
    for (double e : t.errors) errs.push_back(number(e));
    auto& hist = j["classify_histogram"] = json::object();
    for (const auto& [q, c] : t.classify_histogram) hist[std::to_string(q)] = c;
    j["classified_correct"] = t.classified_correct;
    j["classified_points"] = t.classified_points;
    j["worst_ratio"] = t.worst_ratio ? number(*t.worst_ratio) : json();
    j["wall_seconds"] = t.wall_seconds;
    trials.push_back(std::move(j));
  }

  auto table = json::array();
  for (const auto& r : out.table) {
    table.push_back({{"algorithm", to_string(r.algorithm)},
                     {"x", r.x},
                     {"mean", number(r.mean)},
                     {"sd", number(r.sd)},
                     {"trials", r.trials},
                     {"censored", r.censored}});
  }
  json doc;
  doc["plan"] = std::move(p);
  doc["trials"] = std::move(trials);
  doc["table"] = std::move(table);
  return doc.dump(2);
}

std::vector<TrialRecord> trials_from_json(const std::string& text) {
  const auto doc = json::parse(text);
  std::vector<TrialRecord> out;
  for (const auto& j : doc.at("trials")) {
    TrialRecord t;
    t.algorithm = algorithm_from(j.at("algorithm").get<std::string>());
    t.trial = j.at("trial").get<std::size_t>();
    t.seed = j.at("seed").get<std::uint64_t>();
    t.x = j.at("x").get<std::uint64_t>();
    t.value = from_number(j.at("value"));
    t.censored = j.at("censored").get<bool>();
    t.queries = j.at("queries").get<std::uint64_t>();
    t.samples = j.at("samples").get<std::uint64_t>();
    t.clusters_recovered = j.at("clusters_recovered").get<std::size_t>();
    t.clusters_discovered = j.at("clusters_discovered").get<std::size_t>();
    t.rounds = j.at("rounds").get<std::uint64_t>();
    for (const auto& e : j.at("errors")) t.errors.push_back(from_number(e));
    for (const auto& [q, c] : j.at("classify_histogram").items()) {
      t.classify_histogram[std::stoull(q)] = c.get<std::uint64_t>();
    }
    t.classified_correct = j.at("classified_correct").get<std::size_t>();
    t.classified_points = j.at("classified_points").get<std::size_t>();
    if (!j.at("worst_ratio").is_null()) t.worst_ratio = from_number(j.at("worst_ratio"));
    t.wall_seconds = j.at("wall_seconds").get<double>();
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace scq
