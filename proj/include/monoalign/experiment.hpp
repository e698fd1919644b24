#ifndef MONOALIGN_EXPERIMENT_HPP
#define MONOALIGN_EXPERIMENT_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "monoalign/explain.hpp"
#include "monoalign/logistic.hpp"
#include "monoalign/sweep.hpp"

namespace monoalign {

struct ExperimentDesign {
  int n_runs = 150;
  double pair_quantile = 0.75;
  int n_pairs = 9;
  int patients_per_pair = 24;
  double patient_quantile = 0.75;
  std::vector<std::string> raters{"rater1", "rater2", "rater3", "rater4", "rater5", "rater6"};
  int patients_per_rater = 36;
  Eigen::Index train_size = 400;
  int top_k = 5;
  std::uint64_t seed = 0;

  /// Throws with the list of feasible rater counts when the counts do not divide.
  void validate() const;
  nlohmann::json to_json() const;
  static ExperimentDesign from_json(const nlohmann::json& j);
};

/// Indices of the rows whose value is at or above the `quantile` cut, where the
/// cut is the ceil(n * (1 - quantile))-th largest value.
std::vector<Eigen::Index> top_quantile(const Eigen::VectorXd& values, double quantile);

/// Replicate ids of the chosen model pairs, in draw order (the first is the
/// reference category of the fixed effects).
std::vector<int> sample_pairs(const std::vector<SweepRecord>& records, const ExperimentDesign& design);

/// Half of the patients from the top per-patient L1 quantile, half uniformly
/// from the remaining test rows.
std::vector<std::string> sample_patients(const DistanceReport& pair_distance, const ExperimentDesign& design,
                                         int pair_id);

struct PairPatients {
  int pair_id = 0;
  int pair_index = 0;
  std::vector<std::string> row_ids;
  std::vector<double> shap_l1;
};

struct TaskItem {
  std::string task_id;
  std::string rater;
  int pair_id = 0;
  int pair_index = 0;
  std::string row_id;
  std::string left_model;  // constrained | unconstrained
  double shap_l1 = 0;
  std::uint64_t side_seed = 0;
  BarPlotPayload payload;  // first = constrained model
  nlohmann::json patient;  // feature table shown to the rater

  nlohmann::json to_json() const;
  static TaskItem from_json(const nlohmann::json& j);
  /// The only view a rater ever receives.
  nlohmann::json blinded_json(std::size_t position, std::size_t total) const;
};

/// Deals every pair's patients evenly across raters, shuffles each rater's
/// order and flips a fair coin per task for the side of the constrained model.
std::vector<TaskItem> assign_tasks(const std::vector<PairPatients>& pairs, const ExperimentDesign& design);

struct Response {
  std::string task_id;
  std::string choice;  // left | right
  int confidence = 0;
  std::string timestamp;

  nlohmann::json to_json() const;
  static Response from_json(const nlohmann::json& j);
  void validate() const;
};

struct RegressionResult {
  std::vector<std::string> names;
  LogisticFit fit;
  int n = 0;
  int reference_pair = 0;

  nlohmann::json to_json() const;
  std::string table() const;
};

/// Logistic regression of "chose the constrained model" on per-patient SHAP L1
/// distance plus pair fixed effects (dummy coded against the first sampled pair).
RegressionResult fit_choice_model(const std::vector<Response>& responses, const std::vector<TaskItem>& tasks,
                                  const IrlsOptions& options = {});

struct Interval {
  double estimate = 0;
  double low = 0;
  double high = 0;
  int n = 0;
};

Interval wilson_interval(int successes, int n, double z = 1.96);

struct SummaryStats {
  Interval constrained_rate;
  Interval shap_when_constrained;
  Interval shap_when_unconstrained;
  Interval confidence_when_constrained;
  Interval confidence_when_unconstrained;

  nlohmann::json to_json() const;
  std::string table() const;
};

SummaryStats summary_stats(const std::vector<Response>& responses, const std::vector<TaskItem>& tasks);

/// True when the chosen side showed the constrained model.
bool chose_constrained(const Response& r, const TaskItem& t);

struct ExperimentBundle {
  ExperimentDesign design;
  std::vector<PairPatients> pairs;
  std::vector<TaskItem> tasks;
  std::map<std::string, std::string> tokens;  // rater -> access token
  std::string admin_token;
};

/// Access token of a rater, derived from the design seed.
std::string rater_token(std::uint64_t seed, const std::string& rater);

/// Full experiment construction from a sweep directory: pair sampling at
/// design.train_size, patient sampling, task assignment and bar-plot payloads.
ExperimentBundle prepare_experiment(const std::vector<SweepRecord>& records,
                                    const std::filesystem::path& sweep_dir, const Dataset& test,
                                    const ExperimentDesign& design);

/// Writes design.json, pairs.json, tasks.jsonl and tokens.json into `dir`.
void save_bundle(const ExperimentBundle& bundle, const std::filesystem::path& dir);
ExperimentBundle load_bundle(const std::filesystem::path& dir);

// JSON-lines persistence.
void write_tasks(const std::vector<TaskItem>& tasks, const std::filesystem::path& path);
std::vector<TaskItem> read_tasks(const std::filesystem::path& path);
std::vector<Response> read_responses(const std::filesystem::path& path);
void write_responses(const std::vector<Response>& responses, const std::filesystem::path& path);

}  // namespace monoalign

#endif  // MONOALIGN_EXPERIMENT_HPP
