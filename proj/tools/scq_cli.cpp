#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "scq/datasets.hpp"
#include "scq/harness.hpp"
#include "scq/noisy.hpp"
#include "scq/recovery.hpp"
#include "scq/synthgen.hpp"

namespace {

// key=value pairs separated by commas, e.g. "n=10000,k=20,p=0.3,sizes=rank".
scq::SynthConfig parse_synth(const std::string& text) {
  scq::SynthConfig cfg;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("synth parameter without '=': " + item);
    const std::string key = item.substr(0, eq);
    const std::string val = item.substr(eq + 1);
    if (key == "sizes") {
      if (val == "rank") cfg.sizes = scq::SizeMode::kRank;
      else if (val == "sampled") cfg.sizes = scq::SizeMode::kSampled;
      else throw std::invalid_argument("sizes must be rank or sampled");
      continue;
    }
    const double v = std::stod(val);
    if (key == "n") cfg.n = static_cast<std::size_t>(v);
    else if (key == "k") cfg.k = static_cast<std::size_t>(v);
    else if (key == "alpha") cfg.alpha = v;
    else if (key == "sigma") cfg.sigma = v;
    else if (key == "b" || key == "box") cfg.box = v;
    else if (key == "d" || key == "dim") cfg.dim = static_cast<std::size_t>(v);
    else if (key == "rho") cfg.rho = v;
    else if (key == "p") cfg.p_collision = v;
    else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(v);
    else throw std::invalid_argument("unknown synth parameter " + key);
  }
  cfg.validate();
  return cfg;
}

void emit(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  f << text;
}

struct Shared {
  std::vector<std::string> algos{"uniform", "basic", "improved_simple"};
  double eps = 0.5;
  std::size_t trials = 100;
  std::uint64_t seed = 1;
  std::size_t heavy_threshold = 10;
  bool reuse_samples = true;
  double noise_p = 0.0;
  std::string dataset;
  std::string label_column = "label";
  std::string synth;
  std::vector<std::uint64_t> points;
  std::string out;
  std::string format = "csv";
  std::string profile = "experimental";
  std::uint64_t draw_cap = 100'000'000;
};

void add_shared(CLI::App* cmd, Shared& s, const char* points_help) {
  cmd->add_option("--algo", s.algos, "uniform, basic, improved, improved_simple, noisy")
      ->delimiter(',');
  cmd->add_option("--eps", s.eps, "approximation parameter");
  cmd->add_option("--trials", s.trials);
  cmd->add_option("--seed", s.seed);
  cmd->add_option("--heavy-threshold", s.heavy_threshold,
                  "samples needed before a cluster counts as heavy");
  cmd->add_option("--reuse-samples", s.reuse_samples, "keep samples across rounds");
  cmd->add_option("--noise-p", s.noise_p, "oracle error probability");
  auto* ds = cmd->add_option("--dataset", s.dataset, "labeled CSV");
  auto* sy = cmd->add_option("--synth", s.synth, "synthetic parameters, e.g. n=10000,k=20,p=0");
  ds->excludes(sy);
  cmd->add_option("--label-column", s.label_column, "label column name or index");
  cmd->add_option("--points", s.points, points_help)->delimiter(',');
  cmd->add_option("--out", s.out, "output path (stdout by default)");
  cmd->add_option("--format", s.format)->check(CLI::IsMember({"csv", "json"}));
  cmd->add_option("--profile", s.profile)->check(CLI::IsMember({"theory", "experimental"}));
  cmd->add_option("--draw-cap", s.draw_cap);
}

scq::ExperimentPlan make_plan(const Shared& s, scq::Mode mode) {
  scq::ExperimentPlan plan;
  plan.mode = mode;
  plan.algorithms.clear();
  for (const auto& a : s.algos) {
    const auto parsed = scq::parse_algorithm(a);
    if (!parsed) throw std::invalid_argument("unknown algorithm " + a);
    plan.algorithms.push_back(*parsed);
  }
  plan.points = s.points;
  plan.trials = s.trials;
  plan.seed = s.seed;
  plan.recovery.eps = s.eps;
  plan.recovery.heavy_threshold = s.heavy_threshold;
  plan.recovery.reuse_samples = s.reuse_samples;
  plan.recovery.profile = *scq::parse_profile(s.profile);
  plan.recovery.draw_cap = s.draw_cap;
  plan.noise_p = s.noise_p;
  plan.noisy.p = s.noise_p;
  if (!s.synth.empty()) {
    plan.data.synth = parse_synth(s.synth);
  } else if (!s.dataset.empty()) {
    scq::DatasetSpec spec;
    spec.path = s.dataset;
    const bool numeric = !s.label_column.empty() &&
                         s.label_column.find_first_not_of("0123456789") == std::string::npos;
    if (numeric) spec.label_column = static_cast<std::size_t>(std::stoull(s.label_column));
    else spec.label_column = s.label_column;
    plan.data.file = spec;
  } else {
    throw std::invalid_argument("give --dataset or --synth");
  }
  return plan;
}

int run_plan(const Shared& s, scq::Mode mode) {
  const auto plan = make_plan(s, mode);
  if (scq::query_blowup_expected(plan.noise_p)) {
    std::cerr << nlohmann::json{{"warning", "query blow-up expected"},
                                {"noise_p", plan.noise_p}}.dump()
              << '\n';
  }
  const auto out = scq::run_experiment(plan);
  emit(s.format == "json" ? scq::experiment_to_json(plan, out) + "\n"
                          : scq::table_to_csv(out.table),
       s.out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Clustering with same-cluster queries: recovery experiments"};
  app.require_subcommand(1);

  scq::SynthConfig synth;
  std::string synth_out;
  auto* synth_cmd = app.add_subcommand("synth", "write a synthetic dataset as CSV");
  synth_cmd->add_option("--n", synth.n);
  synth_cmd->add_option("--k", synth.k);
  synth_cmd->add_option("--alpha", synth.alpha);
  synth_cmd->add_option("--sigma", synth.sigma);
  synth_cmd->add_option("--box", synth.box);
  synth_cmd->add_option("--dim", synth.dim);
  synth_cmd->add_option("--rho", synth.rho);
  synth_cmd->add_option("--p-collision", synth.p_collision);
  synth_cmd->add_option("--seed", synth.seed);
  std::string size_mode = "rank";
  synth_cmd->add_option("--sizes", size_mode, "rank or sampled")
      ->check(CLI::IsMember({"rank", "sampled"}));
  synth_cmd->add_option("--out", synth_out)->required();

  Shared budget, recovery, errors, classify, reduce;
  add_shared(app.add_subcommand("budget", "clusters recovered at fixed query budgets"), budget,
             "query budgets");
  add_shared(app.add_subcommand("recovery", "queries needed to recover target counts"),
             recovery, "cluster targets");
  add_shared(app.add_subcommand("errors", "median centroid error at target counts"), errors,
             "cluster targets");
  add_shared(app.add_subcommand("classify", "queries per point with recovered centers"),
             classify, "optional cluster target for the recovery run");
  add_shared(app.add_subcommand("reduce-check", "eps-reducibility of what stays unrecovered"),
             reduce, "optional cluster target for the recovery run");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (synth_cmd->parsed()) {
      synth.sizes = size_mode == "rank" ? scq::SizeMode::kRank : scq::SizeMode::kSampled;
      const auto data = scq::generate(synth);
      scq::write_csv(data.points, synth_out);
      return 0;
    }
    if (app.got_subcommand("budget")) return run_plan(budget, scq::Mode::kFixedBudget);
    if (app.got_subcommand("recovery")) return run_plan(recovery, scq::Mode::kFixedRecovery);
    if (app.got_subcommand("errors")) return run_plan(errors, scq::Mode::kErrorReport);
    if (app.got_subcommand("classify")) return run_plan(classify, scq::Mode::kClassifyStudy);
    if (app.got_subcommand("reduce-check")) {
      return run_plan(reduce, scq::Mode::kReducibilityCheck);
    }
  } catch (const std::exception& e) {
    std::cerr << nlohmann::json{{"error", e.what()}}.dump() << '\n';
    return 1;
  }
  return 0;
}
