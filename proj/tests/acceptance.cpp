// Acceptance gate. Each criterion prints one PASS/FAIL line; the exit status is
// nonzero when any criterion fails.

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "monoalign/align.hpp"
#include "monoalign/distance.hpp"
#include "monoalign/experiment.hpp"
#include "monoalign/explain.hpp"
#include "monoalign/gbt.hpp"
#include "monoalign/metrics.hpp"
#include "monoalign/sweep.hpp"
#include "oracles.hpp"
#include "simulate.hpp"

using namespace monoalign;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(const std::string& name, bool pass, const std::string& detail) {
  std::printf("[%s] %s: %s\n", pass ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  failures += !pass;
}

std::string fmt(const char* spec, double a) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, a);
  return buf;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// Same generator settings as `monoalign synth` with its defaults.
SyntheticSpec study_spec() {
  SyntheticSpec s;
  s.n = 5000;
  s.seed = 0;
  s.monotone_features = {{"stage", 1, 2.0}, {"grade", 1, 1.5}, {"age", 1, 1.0}, {"response", -1, 1.5}};
  s.noise_features = 2;
  s.categorical_features = 1;
  s.label_noise = 0.2;
  return s;
}

HyperGrid study_grid() {
  HyperGrid g;
  g.learning_rates = {0.1};
  g.num_rounds = {100};
  g.max_depths = {2, 3};
  g.folds = 5;
  return g;
}

struct Study {
  Dataset full;
  Split split;
  ConstraintVector truth;
  fs::path dir;
  std::vector<SweepRecord> records;
};

const SweepRecord* find(const std::vector<SweepRecord>& records, Eigen::Index size, int replicate,
                        const std::string& mode) {
  for (const auto& r : records)
    if (r.size == size && r.replicate == replicate && r.mode == mode) return &r;
  return nullptr;
}

std::map<std::string, std::vector<double>> auc_by_mode(const std::vector<SweepRecord>& records, Eigen::Index size) {
  std::map<std::string, std::vector<double>> out;
  for (const auto& r : records)
    if (r.ok() && r.size == size) out[r.mode].push_back(r.metrics.auc_roc);
  return out;
}

double mean(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return v.empty() ? std::numeric_limits<double>::quiet_NaN() : s / static_cast<double>(v.size());
}

// ---------------------------------------------------------------- criteria

void monotonicity_guarantee() {
  const auto t0 = Clock::now();
  int models = 0;
  double worst = 0;
  std::mt19937_64 rng(404);
  for (int k = 0; k < 60; ++k) {
    auto spec = fixture::clinical_spec(150 + 50 * (k % 8), 1000 + k, 0.1 + 0.05 * (k % 4));
    spec.missing_rate = k % 3 == 0 ? 0.1 : 0.0;
    spec.levels = 4 + k % 9;
    const auto d = generate_synthetic(spec);
    FeatureEncoder enc(*d.schema);
    const auto x = enc.encode(d);
    std::vector<int> dirs(static_cast<std::size_t>(enc.width()), 0);
    // stage, grade, response with a rotating pattern of directions.
    dirs[0] = 1;
    dirs[1] = k % 2 ? 1 : -1;
    dirs[2] = -1;
    if (k % 5 == 0) dirs[3] = 1;  // a pure-noise column forced monotone
    BoostParams p;
    p.learning_rate = k % 2 ? 0.3 : 0.1;
    p.rounds = 20 + 10 * (k % 7);
    p.max_depth = 2 + k % 5;
    const auto model = fit_ensemble(x, d.labels, dirs, p);
    ++models;
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      if (dirs[static_cast<std::size_t>(j)] == 0) continue;
      std::set<double> values;
      for (Eigen::Index i = 0; i < x.rows(); ++i)
        if (!std::isnan(x(i, j))) values.insert(x(i, j));
      std::vector<double> grid{*values.begin() - 1};
      for (double v : values) {
        if (v > grid.back()) grid.push_back((grid.back() + v) / 2);
        grid.push_back(v);
      }
      grid.push_back(*values.rbegin() + 1);
      worst = std::max(worst, oracle::monotone_deficit(model, x, j, dirs[static_cast<std::size_t>(j)], grid));
    }
  }
  const double elapsed = seconds_since(t0);
  report("monotonicity guarantee", models >= 50 && worst == 0.0 && elapsed < 120,
         std::to_string(models) + " constrained models, worst violation " + fmt("%.3g", worst) + ", " +
             fmt("%.1f", elapsed) + " s");
}

void inconsistency(const Study& s) {
  int unconstrained_bad = 0, constrained_bad = 0, seeds = 0;
  for (int r = 0; r < 30; ++r) {
    const auto* u = find(s.records, 200, r, kUnconstrained);
    const auto* c = find(s.records, 200, r, kConstrained);
    if (!u || !c || !u->ok() || !c->ok()) continue;
    ++seeds;
    auto any_violation = [&](const SweepRecord& rec) {
      const auto model = TreeEnsemble::load(s.dir / rec.model_path);
      for (std::size_t f = 0; f < s.truth.directions.size(); ++f) {
        const int dir = s.truth.directions[f];
        if (dir == 0) continue;
        const auto curve = pdp(model, s.split.test, s.full, s.full.schema->features()[f].name);
        if (!violations(curve, dir, 0.0).empty()) return true;
      }
      return false;
    };
    unconstrained_bad += any_violation(*u);
    constrained_bad += any_violation(*c);
  }
  const double rate_u = seeds ? static_cast<double>(unconstrained_bad) / seeds : 0;
  report("inconsistency reproduction", seeds == 30 && rate_u >= 0.5 && constrained_bad == 0,
         std::to_string(unconstrained_bad) + "/" + std::to_string(seeds) + " unconstrained seeds violate, " +
             std::to_string(constrained_bad) + "/" + std::to_string(seeds) + " constrained");
}

void performance_parity(const Study& s) {
  const auto large = auc_by_mode(s.records, 1600);
  const auto small = auc_by_mode(s.records, 100);
  const double gap_large = std::abs(mean(large.at(kConstrained)) - mean(large.at(kUnconstrained)));
  const double c100 = mean(small.at(kConstrained)), u100 = mean(small.at(kUnconstrained));
  const bool counts = large.at(kConstrained).size() == 30 && small.at(kConstrained).size() == 30;
  report("performance parity", counts && gap_large <= 0.01 && c100 >= u100 - 0.005,
         "size 1600 |dAUC| " + fmt("%.4f", gap_large) + "; size 100 constrained " + fmt("%.4f", c100) +
             " vs unconstrained " + fmt("%.4f", u100));
}

void opposite_falsification(const Study& s) {
  bool ok = true;
  std::string detail;
  for (Eigen::Index size : {100, 200, 400, 800, 1600}) {
    const auto by = auc_by_mode(s.records, size);
    const double gap = mean(by.at(kConstrained)) - mean(by.at(kOpposite));
    ok = ok && gap >= 0.02 && by.at(kOpposite).size() == 30;
    detail += (detail.empty() ? "" : ", ") + std::to_string(size) + ":" + fmt("%.3f", gap);
  }
  report("opposite-constraint falsification", ok, "constrained - opposite AUC by size " + detail);
}

void distance_shape(const Study& s) {
  const auto curves = distance_curves(s.records);
  auto at = [&](Eigen::Index size, const std::string& metric) {
    for (const auto& c : curves)
      if (c.train_size == size && c.model_kind == kConstrained && c.metric == metric) return c;
    throw Error("missing distance curve point");
  };
  bool ok = true;
  std::string detail;
  for (const char* metric : {"d_shap", "d_pred"}) {
    const auto lo = at(100, metric), hi = at(1600, metric);
    ok = ok && lo.mean > hi.mean && hi.ci_low > 0.0;
    detail += std::string(detail.empty() ? "" : "; ") + metric + " " + fmt("%.4f", lo.mean) + " -> " +
              fmt("%.4f", hi.mean) + " (CI low " + fmt("%.4f", hi.ci_low) + ")";
  }
  report("distance-curve shape", ok, detail);
}

void metric_oracles() {
  std::mt19937_64 rng(5150);
  std::uniform_int_distribution<int> size(2, 200), bucket(0, 8);
  std::uniform_real_distribution<double> u(0, 1);
  std::bernoulli_distribution coin(0.45), coarse(0.5);
  double worst = 0;
  for (int k = 0; k < 50; ++k) {
    const int n = size(rng);
    const bool tied = coarse(rng);
    Eigen::VectorXd a(n), b(n);
    Eigen::VectorXi y(n);
    for (int i = 0; i < n; ++i) {
      a(i) = tied ? bucket(rng) / 8.0 : u(rng);
      b(i) = tied ? bucket(rng) / 8.0 : u(rng);
      y(i) = coin(rng);
    }
    y(0) = 1;
    y(1) = 0;
    worst = std::max({worst, std::abs(auc_roc(a, y) - oracle::auc(a, y)),
                      std::abs(average_precision(a, y) - oracle::average_precision(a, y)),
                      std::abs(ranking_distance(a, b, y) - oracle::rank_distance(a, b, y))});
  }
  report("metric oracles", worst <= 1e-12, "50 fixtures, largest deviation " + fmt("%.3g", worst));
}

void treeshap_correctness(const Study& s) {
  double worst_accuracy = 0;
  int models = 0;
  for (const auto& r : s.records) {
    if (!r.ok() || r.model_path.empty()) continue;
    const auto model = TreeEnsemble::load(s.dir / r.model_path);
    const auto x = model_matrix(model, s.split.test);
    const auto phi = tree_shap(model, x);
    worst_accuracy = std::max(worst_accuracy, (phi.values.rowwise().sum() - model.predict_margin(x)).cwiseAbs().maxCoeff());
    ++models;
  }
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> level(0, 4);
  std::bernoulli_distribution missing(0.1), coin(0.5);
  double worst_oracle = 0;
  for (int k = 0; k < 30; ++k) {
    const int m = 2 + k % 3;
    Eigen::MatrixXd x(60, m);
    Eigen::VectorXi y(60);
    for (Eigen::Index i = 0; i < 60; ++i) {
      for (int j = 0; j < m; ++j) x(i, j) = missing(rng) ? std::numeric_limits<double>::quiet_NaN() : level(rng);
      y(i) = coin(rng);
    }
    std::vector<int> dirs(static_cast<std::size_t>(m), 0);
    if (k % 2) dirs[0] = 1;
    const auto model = fit_ensemble(x, y, dirs, {0.3, 4 + k % 5, 1 + k % 2});
    const auto phi = tree_shap(model, x);
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      worst_oracle = std::max(worst_oracle, (phi.values.row(i) - oracle::shapley(model, x.row(i))).cwiseAbs().maxCoeff());
  }
  report("TreeSHAP correctness", models > 0 && worst_accuracy < 1e-6 && worst_oracle <= 1e-9,
         "local accuracy " + fmt("%.3g", worst_accuracy) + " over " + std::to_string(models) +
             " suite models; exhaustive Shapley deviation " + fmt("%.3g", worst_oracle) + " on 30 fixtures");
}

void regression_oracle() {
  std::mt19937_64 rng(8080);
  std::normal_distribution<double> z(0, 1);
  std::uniform_real_distribution<double> u(0, 1);
  double worst = 0;
  for (int f = 0; f < 20; ++f) {
    const Eigen::Index n = 100 + 25 * f, k = 2 + f % 5;
    Eigen::MatrixXd x(n, k);
    Eigen::VectorXd y(n), beta(k);
    for (Eigen::Index j = 0; j < k; ++j) beta(j) = 0.6 * z(rng);
    for (Eigen::Index i = 0; i < n; ++i) {
      x(i, 0) = 1;
      for (Eigen::Index j = 1; j < k; ++j) x(i, j) = z(rng);
      y(i) = u(rng) < 1 / (1 + std::exp(-x.row(i).dot(beta)));
    }
    const auto fit = fit_logistic_irls(x, y);
    const auto ref = oracle::maximise_likelihood(x, y);
    worst = std::max({worst, (fit.coefficients - ref.beta).cwiseAbs().maxCoeff(),
                      (fit.standard_errors - ref.se).cwiseAbs().maxCoeff()});
  }
  int covered = 0, failed = 0;
  for (std::uint64_t sim = 0; sim < 200; ++sim) {
    const auto data = fixture::simulate_choices(10000 + sim, 0.3);
    try {
      const auto res = fit_choice_model(data.responses, data.tasks);
      covered += std::abs(res.fit.coefficients(1) - 0.3) <= 2 * res.fit.standard_errors(1);
    } catch (const RegressionError&) {
      ++failed;
    }
  }
  report("logistic-regression oracle", worst <= 1e-6 && covered >= 180,
         "IRLS vs likelihood oracle " + fmt("%.3g", worst) + " on 20 fixtures; planted beta recovered in " +
             std::to_string(covered) + "/200 simulations (" + std::to_string(failed) + " unfit)");
}

void experiment_arithmetic(Study& s) {
  SweepConfig more;
  more.sizes = {400};
  more.seeds_per_size = 150;
  more.grid = study_grid();
  more.constraints = s.truth;
  more.modes = {kConstrained, kUnconstrained};
  more.output_dir = s.dir;
  auto records = run_sweep(more, s.split.train, s.split.test);

  ExperimentDesign design;
  design.seed = 7;
  const auto bundle = prepare_experiment(records, s.dir, s.split.test, design);
  std::set<std::string> ids;
  std::map<std::pair<std::string, int>, int> cells;
  std::map<std::string, int> per_rater;
  int left = 0, leaks = 0;
  const std::vector<std::string> forbidden{"constrained", "opposite", "model", "pair", "first", "second",
                                           "seed",        "shap",     "rater", "replicate"};
  for (const auto& t : bundle.tasks) {
    ids.insert(t.task_id);
    cells[{t.rater, t.pair_id}]++;
    per_rater[t.rater]++;
    left += t.left_model == kConstrained;
    const auto view = t.blinded_json(1, 36).dump();
    for (const auto& word : forbidden) leaks += view.find(word) != std::string::npos;
  }
  bool four_each = cells.size() == 54;
  for (const auto& [cell, n] : cells) four_each = four_each && n == 4;
  bool per_rater_ok = per_rater.size() == 6;
  for (const auto& [r, n] : per_rater) per_rater_ok = per_rater_ok && n == 36;
  report("experiment construction arithmetic",
         bundle.tasks.size() == 216 && ids.size() == 216 && four_each && per_rater_ok && left >= 83 && left <= 133 &&
             leaks == 0,
         std::to_string(ids.size()) + " unique tasks, " + std::to_string(cells.size()) +
             " (rater, pair) cells of 4, left placements " + std::to_string(left) + ", blinding leaks " +
             std::to_string(leaks));
}

// ---------------------------------------------------------------- CLI determinism

std::string quote(const std::string& s) { return "'" + s + "'"; }

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = quote(MONOALIGN_CLI) + " " + args + " > " + quote(log.string()) + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// Every output file except the manifest, which records its own directory.
std::map<std::string, std::string> artifacts(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file() && e.path().filename() != "manifest.json")
      out[fs::relative(e.path(), root).string()] = fixture::slurp(e.path());
  return out;
}

void cli_determinism(const fs::path& work) {
  const auto log = work / "cli.log";
  const auto q = [](const fs::path& p) { return quote(p.string()); };
  const auto data = work / "data";
  const std::string grid = " --learning-rates 0.1 --rounds 100 --depths 2 3 --folds 5";
  std::vector<std::pair<std::string, fs::path>> runs{
      {"synth -o " + q(data) + " --seed 11 --rows 3000", data},
      {"train -o " + q(work / "model") + " --schema " + q(data / "schema.json") + " --train " + q(data / "train.csv") +
           " --constraints " + q(data / "survey.csv") + grid,
       work / "model"},
      {"audit -o " + q(work / "audit") + " --model " + q(work / "model" / "model.json") + " --schema " +
           q(data / "schema.json") + " --test " + q(data / "test.csv") + " --full " + q(data / "data.csv"),
       work / "audit"},
      {"sweep -o " + q(work / "sweep") + " --schema " + q(data / "schema.json") + " --train " + q(data / "train.csv") +
           " --test " + q(data / "test.csv") + " --constraints " + q(data / "survey.csv") +
           " --sizes 100 400 --seeds 4 --modes constrained unconstrained opposite" + grid,
       work / "sweep"}};
  bool ok = true;
  std::size_t files = 0;
  std::string detail;
  for (const auto& [args, out] : runs) {
    if (run_cli(args, log) != 0) {
      ok = false;
      detail = "command failed: " + fixture::slurp(log);
      break;
    }
    const auto manifest = out / "manifest.json";
    const auto a = work / "replay-a" / out.filename();
    const auto b = work / "replay-b" / out.filename();
    if (run_cli("replay " + q(manifest) + " -o " + q(a), log) != 0 ||
        run_cli("replay " + q(manifest) + " -o " + q(b), log) != 0) {
      ok = false;
      detail = "replay failed: " + fixture::slurp(log);
      break;
    }
    const auto original = artifacts(out), first = artifacts(a), second = artifacts(b);
    if (original != first || first != second) {
      ok = false;
      detail = "artifacts differ under " + out.filename().string();
      break;
    }
    files += original.size();
  }
  if (ok) detail = std::to_string(files) + " artifacts byte-identical across the original run and two replays";
  report("end-to-end determinism", ok, detail);
}

}  // namespace

int main() {
  const auto t0 = Clock::now();
  fixture::TempDir work;
  try {
    monotonicity_guarantee();
    metric_oracles();
    regression_oracle();

    Study s;
    s.full = generate_synthetic(study_spec());
    s.split = stratified_split(s.full, {0.2, combine_seed(0, 0x5b1), true});
    s.truth = ConstraintVector::from_map(*s.full.schema, {{"stage", 1}, {"grade", 1}, {"age", 1}, {"response", -1}});
    s.dir = work / "sweep";
    SweepConfig cfg;
    cfg.sizes = {100, 200, 400, 800, 1600};
    cfg.seeds_per_size = 30;
    cfg.grid = study_grid();
    cfg.constraints = s.truth;
    cfg.modes = {kConstrained, kUnconstrained, kOpposite};
    cfg.output_dir = s.dir;
    const auto sweep_t0 = Clock::now();
    s.records = run_sweep(cfg, s.split.train, s.split.test);
    std::printf("# sweep: %zu models in %.1f s\n", s.records.size(), seconds_since(sweep_t0));

    inconsistency(s);
    performance_parity(s);
    opposite_falsification(s);
    distance_shape(s);
    treeshap_correctness(s);
    experiment_arithmetic(s);
    fs::create_directories(work / "cli");
    cli_determinism(work / "cli");
  } catch (const std::exception& e) {
    report("acceptance harness", false, std::string("aborted: ") + e.what());
  }
  std::printf("# %d criteria failed, %.1f s total\n", failures, seconds_since(t0));
  return failures == 0 ? 0 : 1;
}
