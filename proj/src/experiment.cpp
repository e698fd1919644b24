#include "monoalign/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "monoalign/common.hpp"
#include "monoalign/csv.hpp"

namespace monoalign {

namespace fs = std::filesystem;

namespace {

enum Stream : std::uint64_t { kPairs = 1, kPatients = 2, kDeal = 3, kSides = 4, kTokens = 5 };

std::vector<nlohmann::json> read_jsonl(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<nlohmann::json> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      out.push_back(nlohmann::json::parse(line));
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

template <typename T>
void write_jsonl(const std::vector<T>& items, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  for (const auto& item : items) out << item.to_json().dump() << "\n";
}

template <typename T>
std::vector<T> uniform_without_replacement(std::vector<T> pool, std::size_t count, std::mt19937_64& rng) {
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(count);
  return pool;
}

Interval normal_interval(const std::vector<double>& values) {
  Interval out;
  out.n = static_cast<int>(values.size());
  if (values.empty()) return out;
  const auto ci = mean_ci(values);
  out.estimate = ci.mean;
  out.low = ci.ci_low;
  out.high = ci.ci_high;
  return out;
}

nlohmann::json interval_json(const Interval& i) {
  return {{"estimate", i.estimate}, {"ci_low", i.low}, {"ci_high", i.high}, {"n", i.n}};
}

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

}  // namespace

// ---------------------------------------------------------------- design

void ExperimentDesign::validate() const {
  if (n_runs < 1 || n_pairs < 1 || patients_per_pair < 2 || patients_per_rater < 1)
    throw Error("design: counts must be positive");
  if (!(pair_quantile >= 0 && pair_quantile < 1) || !(patient_quantile >= 0 && patient_quantile < 1))
    throw Error("design: quantiles must lie in [0,1)");
  if (patients_per_pair % 2 != 0) throw Error("design: patients_per_pair must be even");
  if (raters.empty()) throw Error("design: no raters");
  std::set<std::string> unique(raters.begin(), raters.end());
  if (unique.size() != raters.size()) throw Error("design: duplicate rater names");
  for (const auto& r : raters)
    if (r.empty() || r.front() == '#') throw Error("design: rater names must be non-empty and not start with '#'");
  if (top_k < 1) throw Error("design: top_k must be positive");
  const int r = static_cast<int>(raters.size());
  if (patients_per_pair % r != 0 || n_pairs * patients_per_pair != r * patients_per_rater) {
    std::string feasible;
    for (int k = 1; k <= patients_per_pair; ++k) {
      if (patients_per_pair % k != 0) continue;
      if (!feasible.empty()) feasible += ", ";
      feasible += std::to_string(k) + " raters x " + std::to_string(n_pairs * patients_per_pair / k) + " tasks";
    }
    throw Error("design: " + std::to_string(n_pairs) + " pairs x " + std::to_string(patients_per_pair) +
                " patients cannot be dealt evenly to " + std::to_string(r) + " raters with " +
                std::to_string(patients_per_rater) + " tasks each; feasible designs: " + feasible);
  }
  if (n_pairs > n_runs) throw Error("design: more pairs than runs");
}

nlohmann::json ExperimentDesign::to_json() const {
  return {{"n_runs", n_runs},
          {"pair_quantile", pair_quantile},
          {"n_pairs", n_pairs},
          {"patients_per_pair", patients_per_pair},
          {"patient_quantile", patient_quantile},
          {"raters", raters},
          {"patients_per_rater", patients_per_rater},
          {"train_size", train_size},
          {"top_k", top_k},
          {"seed", seed}};
}

ExperimentDesign ExperimentDesign::from_json(const nlohmann::json& j) {
  ExperimentDesign d;
  d.n_runs = j.value("n_runs", d.n_runs);
  d.pair_quantile = j.value("pair_quantile", d.pair_quantile);
  d.n_pairs = j.value("n_pairs", d.n_pairs);
  d.patients_per_pair = j.value("patients_per_pair", d.patients_per_pair);
  d.patient_quantile = j.value("patient_quantile", d.patient_quantile);
  d.raters = j.value("raters", d.raters);
  d.patients_per_rater = j.value("patients_per_rater", d.patients_per_rater);
  d.train_size = j.value("train_size", d.train_size);
  d.top_k = j.value("top_k", d.top_k);
  d.seed = j.value("seed", d.seed);
  d.validate();
  return d;
}

// ---------------------------------------------------------------- sampling

std::vector<Eigen::Index> top_quantile(const Eigen::VectorXd& values, double quantile) {
  const auto n = values.size();
  if (n == 0) return {};
  const auto keep = static_cast<Eigen::Index>(std::ceil(static_cast<double>(n) * (1.0 - quantile) - 1e-9));
  std::vector<double> sorted(values.data(), values.data() + n);
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  const double cut = sorted[static_cast<std::size_t>(std::clamp<Eigen::Index>(keep, 1, n) - 1)];
  std::vector<Eigen::Index> out;
  for (Eigen::Index i = 0; i < n; ++i)
    if (values(i) >= cut) out.push_back(i);
  return out;
}

std::vector<int> sample_pairs(const std::vector<SweepRecord>& records, const ExperimentDesign& design) {
  std::vector<const SweepRecord*> runs;
  for (const auto& r : records)
    if (r.ok() && r.mode == kConstrained && r.size == design.train_size && r.distance) runs.push_back(&r);
  std::sort(runs.begin(), runs.end(), [](auto* a, auto* b) { return a->replicate < b->replicate; });
  if (static_cast<int>(runs.size()) < design.n_runs)
    throw Error("sample_pairs: " + std::to_string(runs.size()) + " paired runs at size " +
                std::to_string(design.train_size) + ", design needs " + std::to_string(design.n_runs));
  runs.resize(static_cast<std::size_t>(design.n_runs));
  Eigen::VectorXd d(design.n_runs);
  for (int i = 0; i < design.n_runs; ++i) d(i) = runs[static_cast<std::size_t>(i)]->distance->d_shap;
  std::vector<int> eligible;
  for (auto i : top_quantile(d, design.pair_quantile)) eligible.push_back(runs[static_cast<std::size_t>(i)]->replicate);
  if (static_cast<int>(eligible.size()) < design.n_pairs)
    throw Error("sample_pairs: only " + std::to_string(eligible.size()) + " eligible runs for " +
                std::to_string(design.n_pairs) + " pairs");
  std::mt19937_64 rng(combine_seed(design.seed, kPairs));
  return uniform_without_replacement(eligible, static_cast<std::size_t>(design.n_pairs), rng);
}

std::vector<std::string> sample_patients(const DistanceReport& pair_distance, const ExperimentDesign& design,
                                         int pair_id) {
  const auto half = static_cast<std::size_t>(design.patients_per_pair / 2);
  const auto top = top_quantile(pair_distance.shap_l1, design.patient_quantile);
  if (top.size() < half)
    throw Error("sample_patients: top-quantile subset has " + std::to_string(top.size()) + " rows, need " +
                std::to_string(half));
  if (static_cast<std::size_t>(pair_distance.q) < 2 * half) throw Error("sample_patients: test set too small");
  std::mt19937_64 rng(combine_seed(design.seed, kPatients, static_cast<std::uint64_t>(pair_id)));
  const auto from_top = uniform_without_replacement(top, half, rng);
  std::vector<char> taken(static_cast<std::size_t>(pair_distance.q), 0);
  for (auto i : from_top) taken[static_cast<std::size_t>(i)] = 1;
  // Drawing the random half from the untaken rows is the same as redrawing on collisions.
  std::vector<Eigen::Index> rest;
  for (Eigen::Index i = 0; i < pair_distance.q; ++i)
    if (!taken[static_cast<std::size_t>(i)]) rest.push_back(i);
  const auto from_all = uniform_without_replacement(rest, half, rng);
  std::vector<std::string> out;
  for (auto i : from_top) out.push_back(pair_distance.row_ids[static_cast<std::size_t>(i)]);
  for (auto i : from_all) out.push_back(pair_distance.row_ids[static_cast<std::size_t>(i)]);
  return out;
}

std::vector<TaskItem> assign_tasks(const std::vector<PairPatients>& pairs, const ExperimentDesign& design) {
  design.validate();
  if (static_cast<int>(pairs.size()) != design.n_pairs)
    throw Error("assign_tasks: expected " + std::to_string(design.n_pairs) + " pairs");
  const auto r = design.raters.size();
  const auto share = static_cast<std::size_t>(design.patients_per_pair) / r;
  std::vector<std::vector<TaskItem>> per_rater(r);
  std::mt19937_64 rng(combine_seed(design.seed, kDeal));
  for (const auto& pair : pairs) {
    if (static_cast<int>(pair.row_ids.size()) != design.patients_per_pair || pair.shap_l1.size() != pair.row_ids.size())
      throw Error("assign_tasks: pair " + std::to_string(pair.pair_id) + " has the wrong patient count");
    std::vector<std::size_t> order(pair.row_ids.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t k = 0; k < order.size(); ++k) {
      TaskItem t;
      t.rater = design.raters[k / share];
      t.pair_id = pair.pair_id;
      t.pair_index = pair.pair_index;
      t.row_id = pair.row_ids[order[k]];
      t.shap_l1 = pair.shap_l1[order[k]];
      per_rater[k / share].push_back(std::move(t));
    }
  }
  std::vector<TaskItem> out;
  for (auto& list : per_rater) {
    std::shuffle(list.begin(), list.end(), rng);
    for (auto& t : list) {
      const auto idx = out.size();
      char id[32];
      std::snprintf(id, sizeof(id), "task-%04zu", idx + 1);
      t.task_id = id;
      t.side_seed = combine_seed(design.seed, kSides, idx);
      t.left_model = first_on_left(t.side_seed) ? kConstrained : kUnconstrained;
      out.push_back(std::move(t));
    }
  }
  return out;
}

// ---------------------------------------------------------------- tasks / responses

nlohmann::json TaskItem::to_json() const {
  return {{"task_id", task_id}, {"rater", rater},           {"pair_id", pair_id},
          {"pair_index", pair_index}, {"row_id", row_id}, {"left_model", left_model},
          {"shap_l1", shap_l1}, {"side_seed", side_seed},  {"payload", payload.to_json()},
          {"patient", patient.is_null() ? nlohmann::json::array() : patient}};
}

TaskItem TaskItem::from_json(const nlohmann::json& j) {
  TaskItem t;
  t.task_id = j.at("task_id").get<std::string>();
  t.rater = j.at("rater").get<std::string>();
  t.pair_id = j.at("pair_id").get<int>();
  t.pair_index = j.at("pair_index").get<int>();
  t.row_id = j.at("row_id").get<std::string>();
  t.left_model = j.at("left_model").get<std::string>();
  t.shap_l1 = j.at("shap_l1").get<double>();
  t.side_seed = j.at("side_seed").get<std::uint64_t>();
  t.payload = BarPlotPayload::from_json(j.at("payload"));
  t.patient = j.at("patient");
  return t;
}

nlohmann::json TaskItem::blinded_json(std::size_t position, std::size_t total) const {
  auto view = payload.blinded_json();
  view["task_id"] = task_id;
  view["position"] = position;
  view["total"] = total;
  view["patient"] = patient.is_null() ? nlohmann::json::array() : patient;
  return view;
}

bool chose_constrained(const Response& r, const TaskItem& t) {
  const bool left_is_constrained = t.left_model == kConstrained;
  return (r.choice == "left") == left_is_constrained;
}

nlohmann::json Response::to_json() const {
  return {{"task_id", task_id}, {"choice", choice}, {"confidence", confidence}, {"timestamp", timestamp}};
}

Response Response::from_json(const nlohmann::json& j) {
  Response r;
  r.task_id = j.at("task_id").get<std::string>();
  r.choice = j.at("choice").get<std::string>();
  r.confidence = j.at("confidence").get<int>();
  r.timestamp = j.value("timestamp", std::string());
  r.validate();
  return r;
}

void Response::validate() const {
  if (choice != "left" && choice != "right") throw Error("response: choice must be left or right");
  if (confidence < 1 || confidence > 5) throw Error("response: confidence must be in 1..5");
}

void write_tasks(const std::vector<TaskItem>& tasks, const fs::path& path) { write_jsonl(tasks, path); }

std::vector<TaskItem> read_tasks(const fs::path& path) {
  std::vector<TaskItem> out;
  for (const auto& j : read_jsonl(path)) out.push_back(TaskItem::from_json(j));
  return out;
}

void write_responses(const std::vector<Response>& responses, const fs::path& path) {
  write_jsonl(responses, path);
}

std::vector<Response> read_responses(const fs::path& path) {
  std::vector<Response> out;
  for (const auto& j : read_jsonl(path)) out.push_back(Response::from_json(j));
  return out;
}

// ---------------------------------------------------------------- analysis

RegressionResult fit_choice_model(const std::vector<Response>& responses, const std::vector<TaskItem>& tasks,
                                  const IrlsOptions& options) {
  std::map<std::string, const TaskItem*> by_id;
  for (const auto& t : tasks) by_id[t.task_id] = &t;
  struct Obs {
    double y;
    double shap;
    int pair_index;
  };
  std::vector<Obs> obs;
  std::set<std::string> seen;
  for (const auto& r : responses) {
    auto it = by_id.find(r.task_id);
    if (it == by_id.end()) throw Error("fit_choice_model: response for unknown task " + r.task_id);
    if (!seen.insert(r.task_id).second) throw Error("fit_choice_model: duplicate response for " + r.task_id);
    obs.push_back({chose_constrained(r, *it->second) ? 1.0 : 0.0, it->second->shap_l1, it->second->pair_index});
  }
  if (obs.empty()) throw Error("fit_choice_model: no responses");

  std::map<int, std::pair<int, int>> per_pair;  // pair_index -> (n, chosen constrained)
  std::map<int, int> pair_id_of;
  for (const auto& r : responses) {
    const auto* t = by_id.at(r.task_id);
    pair_id_of[t->pair_index] = t->pair_id;
  }
  for (const auto& o : obs) {
    auto& c = per_pair[o.pair_index];
    c.first += 1;
    c.second += static_cast<int>(o.y);
  }
  std::string degenerate;
  for (const auto& [idx, c] : per_pair)
    if (c.second == 0 || c.second == c.first) degenerate += " " + std::to_string(pair_id_of[idx]);
  if (!degenerate.empty())
    throw RegressionError("fit_choice_model: separation, all-identical choices within pair(s)" + degenerate, true);

  // Column layout: intercept, shap distance, one dummy per non-reference pair.
  std::vector<int> pair_order;
  for (const auto& [idx, c] : per_pair) pair_order.push_back(idx);
  const int reference = pair_order.front();
  RegressionResult res;
  res.names = {"intercept", "shap_distance"};
  std::map<int, Eigen::Index> column;
  for (std::size_t k = 1; k < pair_order.size(); ++k) {
    column[pair_order[k]] = static_cast<Eigen::Index>(res.names.size());
    res.names.push_back("pair[" + std::to_string(pair_id_of[pair_order[k]]) + "]");
  }
  const auto n = static_cast<Eigen::Index>(obs.size());
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(res.names.size()));
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& o = obs[static_cast<std::size_t>(i)];
    x(i, 0) = 1.0;
    x(i, 1) = o.shap;
    if (o.pair_index != reference) x(i, column.at(o.pair_index)) = 1.0;
    y(i) = o.y;
  }
  res.fit = fit_logistic_irls(x, y, options);
  res.n = static_cast<int>(n);
  res.reference_pair = pair_id_of[reference];
  return res;
}

nlohmann::json RegressionResult::to_json() const {
  nlohmann::json coefs = nlohmann::json::array();
  for (std::size_t k = 0; k < names.size(); ++k) {
    const auto i = static_cast<Eigen::Index>(k);
    coefs.push_back({{"name", names[k]}, {"coefficient", fit.coefficients(i)},
                     {"std_error", fit.standard_errors(i)}, {"z", fit.z(i)}, {"p", fit.p(i)}});
  }
  return {{"coefficients", coefs}, {"n", n}, {"reference_pair", reference_pair},
          {"log_likelihood", fit.log_likelihood}, {"iterations", fit.iterations},
          {"converged", fit.converged}};
}

std::string RegressionResult::table() const {
  std::ostringstream out;
  out << "Logistic regression: chose the constrained model\n";
  out << "variable                 coef      std.err   z         p\n";
  for (std::size_t k = 0; k < names.size(); ++k) {
    const auto i = static_cast<Eigen::Index>(k);
    const double p = fit.p(i);
    const char* stars = p < 0.001 ? "***" : p < 0.01 ? "**" : p < 0.05 ? "*" : "";
    char line[160];
    std::snprintf(line, sizeof(line), "%-22s %9.4f%-3s %8.3f %9.3f %9.3f\n", names[k].c_str(),
                  fit.coefficients(i), stars, fit.standard_errors(i), fit.z(i), p);
    out << line;
  }
  out << "n = " << n << ", reference pair = " << reference_pair << ", log-likelihood = "
      << fmt("%.4f", fit.log_likelihood) << ", iterations = " << fit.iterations << "\n";
  return out.str();
}

Interval wilson_interval(int successes, int n, double z) {
  if (n <= 0) throw Error("wilson_interval: n must be positive");
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half = z / denom * std::sqrt(p * (1 - p) / n + z2 / (4.0 * n * n));
  return {p, std::clamp(center - half, 0.0, 1.0), std::clamp(center + half, 0.0, 1.0), n};
}

SummaryStats summary_stats(const std::vector<Response>& responses, const std::vector<TaskItem>& tasks) {
  if (responses.empty()) throw Error("summary_stats: no responses");
  std::map<std::string, const TaskItem*> by_id;
  for (const auto& t : tasks) by_id[t.task_id] = &t;
  int chosen = 0;
  std::vector<double> shap_c, shap_u, conf_c, conf_u;
  for (const auto& r : responses) {
    auto it = by_id.find(r.task_id);
    if (it == by_id.end()) throw Error("summary_stats: response for unknown task " + r.task_id);
    if (chose_constrained(r, *it->second)) {
      ++chosen;
      shap_c.push_back(it->second->shap_l1);
      conf_c.push_back(r.confidence);
    } else {
      shap_u.push_back(it->second->shap_l1);
      conf_u.push_back(r.confidence);
    }
  }
  SummaryStats s;
  s.constrained_rate = wilson_interval(chosen, static_cast<int>(responses.size()));
  s.shap_when_constrained = normal_interval(shap_c);
  s.shap_when_unconstrained = normal_interval(shap_u);
  s.confidence_when_constrained = normal_interval(conf_c);
  s.confidence_when_unconstrained = normal_interval(conf_u);
  return s;
}

nlohmann::json SummaryStats::to_json() const {
  return {{"constrained_chosen_rate", interval_json(constrained_rate)},
          {"shap_distance", {{"constrained_chosen", interval_json(shap_when_constrained)},
                             {"unconstrained_chosen", interval_json(shap_when_unconstrained)}}},
          {"confidence", {{"constrained_chosen", interval_json(confidence_when_constrained)},
                          {"unconstrained_chosen", interval_json(confidence_when_unconstrained)}}}};
}

std::string SummaryStats::table() const {
  std::ostringstream out;
  auto row = [&](const char* label, const Interval& i, double scale, const char* unit) {
    char line[160];
    std::snprintf(line, sizeof(line), "%-44s %7.3f%s (%.3f-%.3f)  n=%d\n", label, i.estimate * scale, unit,
                  i.low * scale, i.high * scale, i.n);
    out << line;
  };
  out << "Summary statistics (95% CI)\n";
  row("% of time the constrained model was chosen", constrained_rate, 100.0, "%");
  row("mean SHAP distance | constrained chosen", shap_when_constrained, 1.0, "");
  row("mean SHAP distance | unconstrained chosen", shap_when_unconstrained, 1.0, "");
  row("mean confidence | constrained chosen", confidence_when_constrained, 1.0, "");
  row("mean confidence | unconstrained chosen", confidence_when_unconstrained, 1.0, "");
  return out.str();
}

// ---------------------------------------------------------------- bundle

std::string rater_token(std::uint64_t seed, const std::string& rater) {
  return hex64(combine_seed(seed, kTokens, fnv1a64(rater))) + hex64(combine_seed(fnv1a64(rater), seed, kTokens));
}

ExperimentBundle prepare_experiment(const std::vector<SweepRecord>& records, const fs::path& sweep_dir,
                                    const Dataset& test, const ExperimentDesign& design) {
  design.validate();
  ExperimentBundle bundle;
  bundle.design = design;
  const auto pair_ids = sample_pairs(records, design);

  auto find_record = [&](int replicate, const std::string& mode) -> const SweepRecord& {
    for (const auto& r : records)
      if (r.size == design.train_size && r.replicate == replicate && r.mode == mode) return r;
    throw Error("prepare_experiment: no " + mode + " record for replicate " + std::to_string(replicate));
  };

  std::map<int, std::pair<ShapMatrix, ShapMatrix>> shap;
  for (std::size_t k = 0; k < pair_ids.size(); ++k) {
    const int id = pair_ids[k];
    const auto& con = find_record(id, kConstrained);
    const auto& unc = find_record(id, kUnconstrained);
    if (con.model_path.empty() || unc.model_path.empty())
      throw Error("prepare_experiment: sweep did not save models for replicate " + std::to_string(id));
    const auto mc = TreeEnsemble::load(sweep_dir / con.model_path);
    const auto mu = TreeEnsemble::load(sweep_dir / unc.model_path);
    shap.emplace(id, std::make_pair(tree_shap(mc, test), tree_shap(mu, test)));

    PairPatients pp;
    pp.pair_id = id;
    pp.pair_index = static_cast<int>(k);
    pp.row_ids = sample_patients(*con.distance, design, id);
    for (const auto& row : pp.row_ids) {
      const auto& ids = con.distance->row_ids;
      const auto pos = std::find(ids.begin(), ids.end(), row) - ids.begin();
      pp.shap_l1.push_back(con.distance->shap_l1(pos));
    }
    bundle.pairs.push_back(std::move(pp));
  }

  bundle.tasks = assign_tasks(bundle.pairs, design);
  std::map<std::string, Eigen::Index> row_of;
  for (std::size_t i = 0; i < test.row_ids.size(); ++i) row_of[test.row_ids[i]] = static_cast<Eigen::Index>(i);
  for (auto& t : bundle.tasks) {
    const auto& [sc, su] = shap.at(t.pair_id);
    t.payload = top_k_payload(sc, su, test, t.row_id, static_cast<std::size_t>(design.top_k), t.side_seed);
    t.patient = nlohmann::json::array();
    const auto r = row_of.at(t.row_id);
    for (std::size_t f = 0; f < test.schema->size(); ++f) {
      const auto& spec = test.schema->feature(f);
      t.patient.push_back({{"feature", spec.name},
                           {"value", display_value(spec, test.cells(r, static_cast<Eigen::Index>(f)))}});
    }
  }
  for (const auto& rater : design.raters) bundle.tokens[rater] = rater_token(design.seed, rater);
  bundle.admin_token = rater_token(design.seed, "#admin");
  return bundle;
}

void save_bundle(const ExperimentBundle& bundle, const fs::path& dir) {
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "design.json", std::ios::binary);
    out << bundle.design.to_json().dump(2) << "\n";
  }
  {
    nlohmann::json pairs = nlohmann::json::array();
    for (const auto& p : bundle.pairs)
      pairs.push_back({{"pair_id", p.pair_id}, {"pair_index", p.pair_index}, {"row_ids", p.row_ids},
                       {"shap_l1", p.shap_l1}});
    std::ofstream out(dir / "pairs.json", std::ios::binary);
    out << pairs.dump(1) << "\n";
  }
  {
    nlohmann::json tokens{{"raters", bundle.tokens}, {"admin", bundle.admin_token}};
    std::ofstream out(dir / "tokens.json", std::ios::binary);
    out << tokens.dump(2) << "\n";
  }
  write_tasks(bundle.tasks, dir / "tasks.jsonl");
}

ExperimentBundle load_bundle(const fs::path& dir) {
  ExperimentBundle b;
  auto read = [&](const char* name) {
    std::ifstream in(dir / name, std::ios::binary);
    if (!in) throw Error("cannot open " + (dir / name).string());
    return nlohmann::json::parse(in);
  };
  b.design = ExperimentDesign::from_json(read("design.json"));
  for (const auto& p : read("pairs.json"))
    b.pairs.push_back({p.at("pair_id").get<int>(), p.at("pair_index").get<int>(),
                       p.at("row_ids").get<std::vector<std::string>>(), p.at("shap_l1").get<std::vector<double>>()});
  const auto tokens = read("tokens.json");
  b.tokens = tokens.at("raters").get<std::map<std::string, std::string>>();
  b.admin_token = tokens.at("admin").get<std::string>();
  b.tasks = read_tasks(dir / "tasks.jsonl");
  return b;
}

}  // namespace monoalign
