// monoalign command line: data generation, training, auditing, learning-curve
// sweeps and the rating experiment lifecycle. Every run writes manifest.json
// into its output directory; `monoalign replay` re-executes a manifest.

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "monoalign/align.hpp"
#include "monoalign/constraints.hpp"
#include "monoalign/data.hpp"
#include "monoalign/distance.hpp"
#include "monoalign/experiment.hpp"
#include "monoalign/explain.hpp"
#include "monoalign/gbt.hpp"
#include "monoalign/metrics.hpp"
#include "monoalign/plot.hpp"
#include "monoalign/server.hpp"
#include "monoalign/sweep.hpp"

#ifndef MONOALIGN_GIT
#define MONOALIGN_GIT "unknown"
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace monoalign;

namespace {

struct UsageError : Error {
  using Error::Error;
};

std::string absolute(const std::string& p) { return p.empty() ? p : fs::absolute(p).lexically_normal().string(); }

void write_json(const json& j, const fs::path& path) { write_text(j.dump(2) + "\n", path); }

json read_json(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open " + path.string());
  return json::parse(in);
}

void write_manifest(const std::string& command, const json& config) {
  const fs::path out = config.at("out").get<std::string>();
  json m{{"program", "monoalign"}, {"version", kVersion}, {"git", MONOALIGN_GIT}, {"command", command}, {"config", config}};
  write_json(m, out / "manifest.json");
}

std::shared_ptr<const FeatureSchema> load_schema(const json& cfg) {
  return std::make_shared<const FeatureSchema>(FeatureSchema::load(cfg.at("schema").get<std::string>()));
}

// "name:+1:1.5" -> MonotoneEffect
MonotoneEffect parse_effect(const std::string& s) {
  const auto a = s.find(':');
  const auto b = s.find(':', a == std::string::npos ? a : a + 1);
  if (a == std::string::npos || b == std::string::npos) throw UsageError("--monotone expects name:direction:effect, got " + s);
  MonotoneEffect e;
  e.name = s.substr(0, a);
  e.direction = std::stoi(s.substr(a + 1, b - a - 1));
  e.effect_size = std::stod(s.substr(b + 1));
  if (e.direction != 1 && e.direction != -1) throw UsageError("--monotone direction must be +1 or -1 in " + s);
  return e;
}

// "stage=+1,age=-1" -> pairs
std::vector<std::pair<std::string, int>> parse_directions(const std::string& s) {
  std::vector<std::pair<std::string, int>> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw UsageError("--directions expects name=dir pairs, got " + item);
    out.emplace_back(item.substr(0, eq), std::stoi(item.substr(eq + 1)));
  }
  return out;
}

/// Survey CSV, constraint JSON, an inline name=dir list, or "none".
ConstraintVector resolve_constraints(const std::string& source, const FeatureSchema& schema) {
  if (source.empty() || source == "none") return ConstraintVector::none(schema);
  const fs::path p(source);
  if (fs::exists(p)) {
    if (p.extension() == ".csv") {
      auto c = derive_constraints(load_survey(p), schema);
      for (const auto& f : c.flagged_for_review) std::cerr << "note: no majority for '" << f << "', left unconstrained\n";
      return c;
    }
    return ConstraintVector::load(p, schema);
  }
  if (source.find('=') != std::string::npos) {
    auto c = ConstraintVector::from_map(schema, parse_directions(source));
    c.validate(schema);
    return c;
  }
  throw UsageError("constraint source '" + source + "' is neither a file nor a name=dir list");
}

HyperGrid grid_from(const json& cfg) {
  HyperGrid g;
  g.learning_rates = cfg.at("learning_rates").get<std::vector<double>>();
  g.num_rounds = cfg.at("rounds").get<std::vector<int>>();
  g.max_depths = cfg.at("depths").get<std::vector<int>>();
  g.folds = cfg.at("folds").get<int>();
  g.validate();
  return g;
}

// ------------------------------------------------------------------ commands

int run_synth(const json& cfg) {
  SyntheticSpec spec;
  spec.n = cfg.at("n").get<Eigen::Index>();
  spec.seed = cfg.at("seed").get<std::uint64_t>();
  for (const auto& s : cfg.at("monotone").get<std::vector<std::string>>()) spec.monotone_features.push_back(parse_effect(s));
  spec.noise_features = cfg.at("noise_features").get<int>();
  spec.label_noise = cfg.at("label_noise").get<double>();
  spec.levels = cfg.at("levels").get<int>();
  spec.intercept = cfg.at("intercept").get<double>();
  spec.missing_rate = cfg.at("missing_rate").get<double>();
  spec.categorical_features = cfg.at("categorical").get<int>();

  const fs::path out = cfg.at("out").get<std::string>();
  const auto data = generate_synthetic(spec);
  data.schema->save(out / "schema.json");
  save_dataset(data, out / "data.csv");
  const auto split = stratified_split(data, {cfg.at("test_fraction").get<double>(), combine_seed(spec.seed, 0x5b1), true});
  save_dataset(split.train, out / "train.csv");
  save_dataset(split.test, out / "test.csv");

  // A unanimous three-respondent survey encoding the generator's true directions.
  std::ofstream survey(out / "survey.csv", std::ios::binary);
  survey << "respondent,feature,answer\n";
  for (int r = 1; r <= 3; ++r) {
    for (const auto& f : data.schema->features()) {
      if (!f.monotone_eligible) continue;
      std::string answer = "neither";
      for (const auto& e : spec.monotone_features)
        if (e.name == f.name) answer = e.direction > 0 ? "always-increase" : "always-decrease";
      survey << "clinician" << r << "," << f.name << "," << answer << "\n";
    }
  }
  std::cout << "synth: " << data.rows() << " rows (" << data.positives() << " positive), " << split.train.rows()
            << " train / " << split.test.rows() << " test -> " << out.string() << "\n";
  return 0;
}

int run_train(const json& cfg) {
  const auto schema = load_schema(cfg);
  const auto data = load_dataset(cfg.at("train").get<std::string>(), schema);
  auto constraints = resolve_constraints(cfg.at("constraints").get<std::string>(), *schema);
  const auto mode = cfg.at("mode").get<std::string>();
  if (mode == kUnconstrained) constraints = ConstraintVector::none(*schema);
  else if (mode == kOpposite) constraints = opposite_constraints(constraints);
  else if (mode != kConstrained) throw UsageError("--mode must be constrained, unconstrained or opposite");

  const auto result = train(data, constraints, grid_from(cfg), cfg.at("seed").get<std::uint64_t>());
  const fs::path out = cfg.at("out").get<std::string>();
  result.model.save(out / "model.json");
  write_json(result.cv.to_json(), out / "cv_report.json");
  constraints.save(out / "constraints.json", *schema);
  const auto& best = result.cv.cells[static_cast<std::size_t>(result.cv.best)];
  std::cout << "train: " << mode << " model, lr=" << best.learning_rate << " rounds=" << best.rounds
            << " depth=" << best.max_depth << " cv-auc=" << best.mean_auc << " -> " << (out / "model.json").string()
            << "\n";
  return 0;
}

std::vector<std::string> pdp_features(const json& cfg, const FeatureSchema& schema) {
  auto names = cfg.at("features").get<std::vector<std::string>>();
  if (names.empty())
    for (const auto& f : schema.features())
      if (f.kind == FeatureKind::kOrdinal) names.push_back(f.name);
  return names;
}

int run_pdp(const json& cfg) {
  const auto schema = load_schema(cfg);
  const auto model = TreeEnsemble::load(cfg.at("model").get<std::string>());
  const auto test = load_dataset(cfg.at("test").get<std::string>(), schema);
  const auto full = cfg.at("full").get<std::string>().empty() ? test : load_dataset(cfg.at("full").get<std::string>(), schema);
  const fs::path out = cfg.at("out").get<std::string>();
  std::vector<PdpCurve> curves;
  for (const auto& name : pdp_features(cfg, *schema)) {
    curves.push_back(pdp(model, test, full, name));
    write_json(pdp_plot_json(curves.back()), out / ("pdp_" + name + ".json"));
    write_text(pdp_svg(curves.back()), out / ("pdp_" + name + ".svg"));
  }
  write_pdp_csv(curves, out / "pdp.csv");
  std::cout << "pdp: " << curves.size() << " curves -> " << (out / "pdp.csv").string() << "\n";
  return 0;
}

int run_audit(const json& cfg) {
  const auto schema = load_schema(cfg);
  const auto model = TreeEnsemble::load(cfg.at("model").get<std::string>());
  const auto test = load_dataset(cfg.at("test").get<std::string>(), schema);
  const auto full = cfg.at("full").get<std::string>().empty() ? test : load_dataset(cfg.at("full").get<std::string>(), schema);
  const FeatureEncoder enc(*schema);
  const auto x = model_matrix(model, test);
  const fs::path out = cfg.at("out").get<std::string>();
  const int forced = cfg.at("direction").get<int>();

  json report = json::array();
  std::vector<PdpCurve> curves;
  std::size_t flagged = 0;
  // Without an explicit list, only features with a known direction are audited.
  const bool listed = !cfg.at("features").empty();
  for (const auto& name : pdp_features(cfg, *schema)) {
    const auto f = schema->index_of(name);
    if (schema->feature(f).kind != FeatureKind::kOrdinal) throw UsageError("audit: '" + name + "' is categorical");
    const auto col = enc.ordinal_column(f);
    const int constrained = model.constraints.empty() ? 0 : model.constraints[static_cast<std::size_t>(col)];
    const int direction = forced != 0 ? forced : constrained;
    if (direction == 0 && !listed) continue;
    if (direction == 0)
      throw UsageError("audit: '" + name + "' is unconstrained in this model; pass --direction +1 or -1");
    curves.push_back(pdp(model, test, full, name));
    const auto found = violations(curves.back(), direction, cfg.at("tolerance").get<double>());
    const auto grid = unique_values(full, f);
    const double worst = max_monotonicity_violation(model, x, col, direction, grid);
    json list = json::array();
    for (const auto& v : found)
      list.push_back({{"from", curves.back().grid[v.from]}, {"to", curves.back().grid[v.to]}, {"magnitude", v.magnitude}});
    report.push_back({{"feature", name}, {"direction", direction}, {"model_constraint", constrained},
                      {"pdp_violations", list}, {"max_row_violation", worst}});
    write_text(pdp_svg(curves.back(), found), out / ("audit_" + name + ".svg"));
    flagged += found.size();
    std::cout << "audit: " << name << " direction " << direction << ": " << found.size()
              << " PDP violation(s), largest per-row deficit " << worst << "\n";
  }
  write_pdp_csv(curves, out / "pdp.csv");
  write_json(report, out / "violations.json");
  return 0;
}

int run_distance(const json& cfg) {
  const auto schema = load_schema(cfg);
  const auto a = TreeEnsemble::load(cfg.at("model_a").get<std::string>());
  const auto b = TreeEnsemble::load(cfg.at("model_b").get<std::string>());
  const auto test = load_dataset(cfg.at("test").get<std::string>(), schema);
  const auto sa = tree_shap(a, test);
  const auto sb = tree_shap(b, test);
  const auto report = compare_models(predict_proba(a, test), predict_proba(b, test), sa, sb, test.labels);
  const fs::path out = cfg.at("out").get<std::string>();
  write_json(report.to_json(), out / "distance.json");
  sa.write_csv(out / "shap_a.csv");
  sb.write_csv(out / "shap_b.csv");
  std::cout << "distance: d_pred=" << report.d_pred << " d_rank=" << report.d_rank << " d_shap=" << report.d_shap << "\n";
  return 0;
}

void emit_curves(const std::vector<SweepRecord>& records, const fs::path& out) {
  const auto points = metric_points(records);
  std::vector<CurvePoint> all;
  for (const char* metric : {"auc_roc", "avg_precision"}) {
    const auto curve = aggregate_curve(points, metric);
    write_curve_csv(curve, out / (std::string("curve_") + metric + ".csv"));
    write_text(curve_svg(curve, metric), out / (std::string("curve_") + metric + ".svg"));
  }
  const auto dist = distance_curves(records);
  if (!dist.empty()) {
    write_curve_csv(dist, out / "curve_distances.csv");
    for (const char* metric : {"d_pred", "d_rank", "d_shap"})
      write_text(curve_svg(dist, metric, std::string(metric) + " to the unconstrained model"),
                 out / (std::string("curve_") + metric + ".svg"));
  }
  write_records_csv(records, out / "records.csv");
}

int run_sweep(const json& cfg) {
  const auto schema = load_schema(cfg);
  const auto train80 = load_dataset(cfg.at("train").get<std::string>(), schema);
  const auto test = load_dataset(cfg.at("test").get<std::string>(), schema);
  SweepConfig sc;
  sc.sizes = cfg.at("sizes").get<std::vector<Eigen::Index>>();
  sc.seeds_per_size = cfg.at("seeds").get<int>();
  sc.grid = grid_from(cfg);
  sc.constraints = resolve_constraints(cfg.at("constraints").get<std::string>(), *schema);
  sc.modes = cfg.at("modes").get<std::vector<std::string>>();
  sc.output_dir = cfg.at("out").get<std::string>();
  sc.base_seed = cfg.at("seed").get<std::uint64_t>();
  sc.workers = cfg.at("workers").get<int>();
  sc.save_models = cfg.at("save_models").get<bool>();
  sc.validate(*schema);

  std::size_t done = 0;
  const auto total = sc.sizes.size() * static_cast<std::size_t>(sc.seeds_per_size) * sc.modes.size();
  const auto records = run_sweep(sc, train80, test, [&](const SweepRecord& r) {
    ++done;
    if (!r.ok()) std::cerr << "sweep: n=" << r.size << " rep=" << r.replicate << " " << r.mode << " failed: " << r.error << "\n";
    if (done % 25 == 0 || done == total) std::cerr << "sweep: " << done << "/" << total << " models\n";
  });
  emit_curves(records, sc.output_dir);
  std::size_t failed = 0;
  for (const auto& r : records) failed += !r.ok();
  std::cout << "sweep: " << records.size() << " records (" << failed << " failed) -> " << sc.output_dir.string() << "\n";
  return failed == 0 ? 0 : 2;
}

int run_curves(const json& cfg) {
  const auto records = load_records(cfg.at("sweep").get<std::string>());
  if (records.empty()) throw UsageError("curves: no records under " + cfg.at("sweep").get<std::string>());
  emit_curves(records, cfg.at("out").get<std::string>());
  std::cout << "curves: " << records.size() << " records rendered\n";
  return 0;
}

ExperimentDesign design_from(const json& cfg) {
  ExperimentDesign d;
  d.n_runs = cfg.at("n_runs").get<int>();
  d.pair_quantile = cfg.at("pair_quantile").get<double>();
  d.n_pairs = cfg.at("n_pairs").get<int>();
  d.patients_per_pair = cfg.at("patients_per_pair").get<int>();
  d.patient_quantile = cfg.at("patient_quantile").get<double>();
  d.raters = cfg.at("raters").get<std::vector<std::string>>();
  d.patients_per_rater = cfg.at("patients_per_rater").get<int>();
  d.train_size = cfg.at("train_size").get<Eigen::Index>();
  d.top_k = cfg.at("top_k").get<int>();
  d.seed = cfg.at("seed").get<std::uint64_t>();
  d.validate();
  return d;
}

int run_exp_prepare(const json& cfg) {
  const auto schema = load_schema(cfg);
  const auto test = load_dataset(cfg.at("test").get<std::string>(), schema);
  const fs::path sweep_dir = cfg.at("sweep").get<std::string>();
  const auto bundle = prepare_experiment(load_records(sweep_dir), sweep_dir, test, design_from(cfg));
  const fs::path out = cfg.at("out").get<std::string>();
  save_bundle(bundle, out);
  std::cout << "exp-prepare: " << bundle.pairs.size() << " pairs, " << bundle.tasks.size() << " tasks -> " << out.string()
            << "\nrater links (token query parameter):\n";
  for (const auto& [rater, token] : bundle.tokens) std::cout << "  " << rater << "  /?token=" << token << "\n";
  return 0;
}

RatingServer* g_server = nullptr;

extern "C" void on_signal(int) {
  if (g_server) g_server->stop();
}

int run_exp_serve(const json& cfg) {
  const fs::path bundle_dir = cfg.at("bundle").get<std::string>();
  const auto log = cfg.at("log").get<std::string>().empty() ? bundle_dir / "responses.jsonl"
                                                             : fs::path(cfg.at("log").get<std::string>());
  RatingStore store(load_bundle(bundle_dir), log);
  RatingServer server(store, cfg.at("static").get<std::string>());
  const auto host = cfg.at("host").get<std::string>();
  const int port = server.bind(host, cfg.at("port").get<int>());
  if (port < 0) throw Error("exp-serve: cannot bind " + host + ":" + std::to_string(cfg.at("port").get<int>()));
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cout << "exp-serve: listening on http://" << host << ":" << port << "/ (log " << log.string() << ")" << std::endl;
  server.serve();
  g_server = nullptr;
  return 0;
}

int run_exp_analyze(const json& cfg) {
  const auto bundle = load_bundle(cfg.at("bundle").get<std::string>());
  const auto responses = read_responses(cfg.at("responses").get<std::string>());
  const fs::path out = cfg.at("out").get<std::string>();
  const auto stats = summary_stats(responses, bundle.tasks);
  write_json(stats.to_json(), out / "summary.json");
  std::string text = stats.table();
  int status = 0;
  try {
    const auto reg = fit_choice_model(responses, bundle.tasks);
    write_json(reg.to_json(), out / "regression.json");
    text += "\n" + reg.table();
  } catch (const RegressionError& e) {
    write_json({{"error", e.what()}, {"separation", e.separation()}}, out / "regression.json");
    text += "\nregression not estimable: " + std::string(e.what()) + "\n";
    status = 3;
  }
  write_text(text, out / "report.txt");
  std::cout << text;
  return status;
}

using Runner = int (*)(const json&);

const std::map<std::string, Runner>& runners() {
  static const std::map<std::string, Runner> table{
      {"synth", run_synth},       {"train", run_train},   {"pdp", run_pdp},
      {"audit", run_audit},       {"distance", run_distance}, {"sweep", run_sweep},
      {"curves", run_curves},     {"exp-prepare", run_exp_prepare}, {"exp-serve", run_exp_serve},
      {"exp-analyze", run_exp_analyze}};
  return table;
}

int execute(const std::string& command, json cfg) {
  const fs::path out = cfg.at("out").get<std::string>();
  fs::create_directories(out);
  write_manifest(command, cfg);
  return runners().at(command)(cfg);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"monoalign: monotone gradient boosting, explanation distances and rating experiments"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  std::string out;
  std::uint64_t seed = 0;
  std::string schema, train_csv, test_csv, full_csv, model, model_b, constraints = "none", mode = kConstrained;
  std::vector<double> lrs{0.01, 0.1, 0.3, 0.5};
  std::vector<int> rounds{100, 300, 500}, depths{2, 3, 5, 10};
  int folds = 5;
  std::vector<std::string> features;

  auto add_out = [&](CLI::App* c) { c->add_option("-o,--out", out, "output directory")->required(); };
  auto add_seed = [&](CLI::App* c) { c->add_option("--seed", seed, "global seed")->capture_default_str(); };
  auto add_grid = [&](CLI::App* c) {
    c->add_option("--learning-rates", lrs, "learning-rate grid")->delimiter(',')->capture_default_str();
    c->add_option("--rounds", rounds, "boosting-round grid")->delimiter(',')->capture_default_str();
    c->add_option("--depths", depths, "max-depth grid")->delimiter(',')->capture_default_str();
    c->add_option("--folds", folds, "cross-validation folds")->capture_default_str();
  };
  auto grid_json = [&]() { return json{{"learning_rates", lrs}, {"rounds", rounds}, {"depths", depths}, {"folds", folds}}; };
  auto constraint_source = [&]() {
    return fs::exists(constraints) ? absolute(constraints) : constraints;
  };

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic monotone dataset with an 80/20 split");
  Eigen::Index n = 5000;
  std::vector<std::string> monotone{"stage:1:2.0", "grade:1:1.5", "age:1:1.0", "response:-1:1.5"};
  int noise_features = 2, levels = 10, categorical = 1;
  double label_noise = 0.2, intercept = 0.0, missing_rate = 0.0, test_fraction = 0.2;
  add_out(synth);
  add_seed(synth);
  synth->add_option("-n,--rows", n, "rows")->capture_default_str();
  synth->add_option("--monotone", monotone, "name:direction:effect")->delimiter(',')->capture_default_str();
  synth->add_option("--noise-features", noise_features)->capture_default_str();
  synth->add_option("--categorical", categorical)->capture_default_str();
  synth->add_option("--levels", levels)->capture_default_str();
  synth->add_option("--label-noise", label_noise)->capture_default_str();
  synth->add_option("--intercept", intercept)->capture_default_str();
  synth->add_option("--missing-rate", missing_rate)->capture_default_str();
  synth->add_option("--test-fraction", test_fraction)->capture_default_str();

  // train
  auto* train_cmd = app.add_subcommand("train", "grid-search and fit one model");
  add_out(train_cmd);
  add_seed(train_cmd);
  add_grid(train_cmd);
  train_cmd->add_option("--schema", schema)->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--train", train_csv)->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--constraints", constraints, "survey CSV, constraint JSON, name=dir list or none");
  train_cmd->add_option("--mode", mode, "constrained | unconstrained | opposite")->capture_default_str();

  // pdp / audit
  double tolerance = 0.0;
  int direction = 0;
  auto* pdp_cmd = app.add_subcommand("pdp", "partial dependence curves");
  auto* audit = app.add_subcommand("audit", "partial dependence plus monotonicity violations");
  for (auto* c : {pdp_cmd, audit}) {
    add_out(c);
    c->add_option("--model", model)->required()->check(CLI::ExistingFile);
    c->add_option("--schema", schema)->required()->check(CLI::ExistingFile);
    c->add_option("--test", test_csv, "rows averaged over")->required()->check(CLI::ExistingFile);
    c->add_option("--full", full_csv, "rows whose unique values form the grid (default: --test)")->check(CLI::ExistingFile);
    c->add_option("--feature", features, "feature name (repeatable; default all ordinal)")->delimiter(',');
  }
  audit->add_option("--direction", direction, "expected direction (default: the model's constraint)");
  audit->add_option("--tolerance", tolerance)->capture_default_str();

  // distance
  auto* dist = app.add_subcommand("distance", "prediction, ranking and SHAP distances between two models");
  add_out(dist);
  dist->add_option("--model-a", model)->required()->check(CLI::ExistingFile);
  dist->add_option("--model-b", model_b)->required()->check(CLI::ExistingFile);
  dist->add_option("--schema", schema)->required()->check(CLI::ExistingFile);
  dist->add_option("--test", test_csv)->required()->check(CLI::ExistingFile);

  // sweep
  auto* sweep = app.add_subcommand("sweep", "learning-curve sweep over train sizes and seeds (resumable)");
  std::vector<Eigen::Index> sizes{100, 200, 400, 800, 1600};
  int seeds = 30, workers = 0;
  std::vector<std::string> modes{kConstrained, kUnconstrained};
  bool no_models = false;
  add_out(sweep);
  add_seed(sweep);
  add_grid(sweep);
  sweep->add_option("--schema", schema)->required()->check(CLI::ExistingFile);
  sweep->add_option("--train", train_csv, "the 80% training pool")->required()->check(CLI::ExistingFile);
  sweep->add_option("--test", test_csv)->required()->check(CLI::ExistingFile);
  sweep->add_option("--constraints", constraints)->required();
  sweep->add_option("--sizes", sizes)->delimiter(',')->capture_default_str();
  sweep->add_option("--seeds", seeds, "replicates per size")->capture_default_str();
  sweep->add_option("--modes", modes)->delimiter(',')->capture_default_str();
  sweep->add_option("--workers", workers, "0 = all cores")->capture_default_str();
  sweep->add_flag("--no-models", no_models, "do not keep model files");

  // curves
  std::string sweep_dir;
  auto* curves = app.add_subcommand("curves", "re-render curve CSVs and SVGs from sweep records");
  add_out(curves);
  curves->add_option("--sweep", sweep_dir)->required()->check(CLI::ExistingDirectory);

  // exp-prepare
  ExperimentDesign design;
  auto* prep = app.add_subcommand("exp-prepare", "sample model pairs and patients, assign rating tasks");
  add_out(prep);
  add_seed(prep);
  prep->add_option("--sweep", sweep_dir)->required()->check(CLI::ExistingDirectory);
  prep->add_option("--schema", schema)->required()->check(CLI::ExistingFile);
  prep->add_option("--test", test_csv)->required()->check(CLI::ExistingFile);
  prep->add_option("--runs", design.n_runs)->capture_default_str();
  prep->add_option("--pair-quantile", design.pair_quantile)->capture_default_str();
  prep->add_option("--pairs", design.n_pairs)->capture_default_str();
  prep->add_option("--patients-per-pair", design.patients_per_pair)->capture_default_str();
  prep->add_option("--patient-quantile", design.patient_quantile)->capture_default_str();
  prep->add_option("--raters", design.raters)->delimiter(',')->capture_default_str();
  prep->add_option("--patients-per-rater", design.patients_per_rater)->capture_default_str();
  prep->add_option("--train-size", design.train_size)->capture_default_str();
  prep->add_option("--top-k", design.top_k)->capture_default_str();

  // exp-serve
  std::string bundle_dir, log_path, static_dir, host = "127.0.0.1";
  int port = 8080;
  auto* serve = app.add_subcommand("exp-serve", "serve rating tasks over HTTP");
  add_out(serve);
  serve->add_option("--bundle", bundle_dir)->required()->check(CLI::ExistingDirectory);
  serve->add_option("--log", log_path, "response log (default <bundle>/responses.jsonl)");
  serve->add_option("--static", static_dir, "directory served under /static");
  serve->add_option("--host", host)->capture_default_str();
  serve->add_option("--port", port, "0 picks a free port")->capture_default_str();

  // exp-analyze
  std::string responses;
  auto* analyze = app.add_subcommand("exp-analyze", "choice regression and summary statistics");
  add_out(analyze);
  analyze->add_option("--bundle", bundle_dir)->required()->check(CLI::ExistingDirectory);
  analyze->add_option("--responses", responses, "response log or export")->required()->check(CLI::ExistingFile);

  // replay
  std::string manifest;
  auto* replay = app.add_subcommand("replay", "re-run the command recorded in a manifest");
  replay->add_option("manifest", manifest)->required()->check(CLI::ExistingFile);
  replay->add_option("-o,--out", out, "output directory (default: the recorded one)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 64;
  }

  try {
    auto* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    if (name == "replay") {
      const auto m = read_json(manifest);
      if (m.value("program", "") != "monoalign") throw UsageError(manifest + " is not a monoalign manifest");
      auto cfg = m.at("config");
      if (!out.empty()) cfg["out"] = absolute(out);
      return execute(m.at("command").get<std::string>(), cfg);
    }

    json cfg{{"out", absolute(out)}};
    if (name == "synth") {
      cfg.update({{"seed", seed}, {"n", n}, {"monotone", monotone}, {"noise_features", noise_features},
                  {"categorical", categorical}, {"levels", levels}, {"label_noise", label_noise},
                  {"intercept", intercept}, {"missing_rate", missing_rate}, {"test_fraction", test_fraction}});
    } else if (name == "train") {
      cfg.update(grid_json());
      cfg.update({{"seed", seed}, {"schema", absolute(schema)}, {"train", absolute(train_csv)},
                  {"constraints", constraint_source()}, {"mode", mode}});
    } else if (name == "pdp" || name == "audit") {
      cfg.update({{"schema", absolute(schema)}, {"model", absolute(model)}, {"test", absolute(test_csv)},
                  {"full", absolute(full_csv)}, {"features", features}});
      if (name == "audit") cfg.update({{"direction", direction}, {"tolerance", tolerance}});
    } else if (name == "distance") {
      cfg.update({{"schema", absolute(schema)}, {"model_a", absolute(model)}, {"model_b", absolute(model_b)},
                  {"test", absolute(test_csv)}});
    } else if (name == "sweep") {
      cfg.update(grid_json());
      cfg.update({{"seed", seed}, {"schema", absolute(schema)}, {"train", absolute(train_csv)},
                  {"test", absolute(test_csv)}, {"constraints", constraint_source()}, {"sizes", sizes},
                  {"seeds", seeds}, {"modes", modes}, {"workers", workers}, {"save_models", !no_models}});
    } else if (name == "curves") {
      cfg["sweep"] = absolute(sweep_dir);
    } else if (name == "exp-prepare") {
      design.seed = seed;
      cfg.update(design.to_json());
      cfg.update({{"sweep", absolute(sweep_dir)}, {"schema", absolute(schema)}, {"test", absolute(test_csv)}});
    } else if (name == "exp-serve") {
      cfg.update({{"bundle", absolute(bundle_dir)}, {"log", absolute(log_path)}, {"static", absolute(static_dir)},
                  {"host", host}, {"port", port}});
    } else if (name == "exp-analyze") {
      cfg.update({{"bundle", absolute(bundle_dir)}, {"responses", absolute(responses)}});
    }
    return execute(name, cfg);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 64;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
