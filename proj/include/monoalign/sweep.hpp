#ifndef MONOALIGN_SWEEP_HPP
#define MONOALIGN_SWEEP_HPP

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "monoalign/constraints.hpp"
#include "monoalign/data.hpp"
#include "monoalign/distance.hpp"
#include "monoalign/gbt.hpp"
#include "monoalign/metrics.hpp"

namespace monoalign {

inline constexpr const char* kConstrained = "constrained";
inline constexpr const char* kUnconstrained = "unconstrained";
inline constexpr const char* kOpposite = "opposite";

struct SweepConfig {
  std::vector<Eigen::Index> sizes{100, 200, 400, 800, 1600};
  int seeds_per_size = 30;
  HyperGrid grid;
  BoostParams fixed;
  ConstraintVector constraints;
  std::vector<std::string> modes{kConstrained, kUnconstrained};
  std::filesystem::path output_dir;
  std::uint64_t base_seed = 0;
  int workers = 0;  // 0 = hardware concurrency
  bool save_models = true;

  void validate(const FeatureSchema& schema) const;
  nlohmann::json to_json(const FeatureSchema& schema) const;
};

/// One trained model of the study. Non-reference modes carry the distance
/// report against the unconstrained model of the same (size, replicate).
struct SweepRecord {
  Eigen::Index size = 0;
  int replicate = 0;
  std::uint64_t seed = 0;
  std::string mode;
  MetricPoint metrics;
  std::optional<DistanceReport> distance;
  std::string model_path;  // relative to the output directory
  std::string subsample_fingerprint;
  int subsample_attempts = 1;
  CvCell chosen;
  std::string error;

  bool ok() const { return error.empty(); }
  nlohmann::json to_json() const;
  static SweepRecord from_json(const nlohmann::json& j);
};

/// Seed of one (size, replicate) cell.
std::uint64_t cell_seed(std::uint64_t base_seed, Eigen::Index size, int replicate);

std::string record_file_name(Eigen::Index size, int replicate, const std::string& mode);

/// Trains every requested mode on a shared subsample per (size, replicate),
/// evaluates on `test`, and writes one JSON record per model under
/// `output_dir/records`. Existing records are kept, so an interrupted sweep
/// resumes where it stopped. Returns all records sorted by size, replicate, mode.
std::vector<SweepRecord> run_sweep(const SweepConfig& config, const Dataset& train80, const Dataset& test,
                                   const std::function<void(const SweepRecord&)>& progress = {});

/// Reads all records under `dir/records`.
std::vector<SweepRecord> load_records(const std::filesystem::path& dir);

std::vector<MetricPoint> metric_points(const std::vector<SweepRecord>& records);

/// Per (size, mode) mean and CI of d_pred, d_rank and d_shap against the unconstrained model.
std::vector<CurvePoint> distance_curves(const std::vector<SweepRecord>& records);

void write_records_csv(const std::vector<SweepRecord>& records, const std::filesystem::path& path);

}  // namespace monoalign

#endif  // MONOALIGN_SWEEP_HPP
