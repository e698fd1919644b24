#ifndef MONOALIGN_DATA_HPP
#define MONOALIGN_DATA_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace monoalign {

enum class FeatureKind { kOrdinal, kCategorical };

inline constexpr const char* kMissingCategory = "nan";

struct FeatureSpec {
  std::string name;
  FeatureKind kind = FeatureKind::kOrdinal;
  // Ordinal: optional strictly increasing admissible values.
  std::vector<double> levels;
  // Categorical: declared categories; "nan" is always present (appended if absent).
  std::vector<std::string> categories;
  bool monotone_eligible = false;
};

class FeatureSchema {
 public:
  FeatureSchema() = default;
  FeatureSchema(std::vector<FeatureSpec> features, std::string label_column,
                std::string row_id_column = "");

  const std::vector<FeatureSpec>& features() const { return features_; }
  const FeatureSpec& feature(std::size_t i) const { return features_.at(i); }
  std::size_t size() const { return features_.size(); }
  const std::string& label_column() const { return label_column_; }
  const std::string& row_id_column() const { return row_id_column_; }

  /// Index of the named feature, or nullopt.
  std::optional<std::size_t> find(std::string_view name) const;
  /// Index of the named feature; throws DataError when unknown.
  std::size_t index_of(std::string_view name) const;

  /// Stable hash of names, kinds, levels and categories.
  std::string fingerprint() const;

  nlohmann::json to_json() const;
  static FeatureSchema from_json(const nlohmann::json& j);
  static FeatureSchema load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

 private:
  void validate();

  std::vector<FeatureSpec> features_;
  std::string label_column_;
  std::string row_id_column_;
};

/// Raw tabular data in schema order. Ordinal cells hold the numeric value or
/// NaN when missing; categorical cells hold the category index (missing
/// categoricals point at the "nan" category).
struct Dataset {
  std::shared_ptr<const FeatureSchema> schema;
  Eigen::MatrixXd cells;
  Eigen::VectorXi labels;
  std::vector<std::string> row_ids;

  Eigen::Index rows() const { return cells.rows(); }
  Eigen::Index positives() const { return labels.sum(); }
  Eigen::Index negatives() const { return labels.size() - labels.sum(); }

  Dataset subset(std::span<const Eigen::Index> indices) const;
  /// Throws DataError if the row count, label domain or categorical codes are inconsistent.
  void validate(bool require_both_classes = true) const;
};

Dataset load_dataset(const std::filesystem::path& path,
                     std::shared_ptr<const FeatureSchema> schema);
void save_dataset(const Dataset& d, const std::filesystem::path& path);
/// Parses CSV text directly; `source` only appears in error messages.
Dataset parse_dataset(std::string_view text, std::shared_ptr<const FeatureSchema> schema,
                      std::string_view source = "<memory>");

struct SplitSpec {
  double test_fraction = 0.2;
  std::uint64_t seed = 0;
  bool stratify = true;
};

struct Split {
  Dataset train;
  Dataset test;
};

Split stratified_split(const Dataset& d, const SplitSpec& spec);

struct Subsample {
  Dataset data;
  // Number of redraws needed before both classes were present.
  int attempts = 1;
  std::string fingerprint;
};

Subsample subsample_train(const Dataset& train, Eigen::Index size, std::uint64_t seed);

/// Order-independent hash of a set of row ids.
std::string membership_fingerprint(const std::vector<std::string>& row_ids);

struct MonotoneEffect {
  std::string name;
  int direction = 1;
  double effect_size = 1.0;
};

/// Logistic ground-truth generator. Every ordinal feature takes `levels`
/// equally spaced values on [0, 1]; the log-odds are
///   intercept + sum_j direction_j * effect_j * (x_j - 0.5),
/// then each label is flipped independently with probability `label_noise`.
struct SyntheticSpec {
  Eigen::Index n = 1000;
  std::uint64_t seed = 0;
  std::vector<MonotoneEffect> monotone_features;
  int noise_features = 0;
  double label_noise = 0.0;
  int levels = 10;
  double intercept = 0.0;
  double missing_rate = 0.0;   // per ordinal cell
  int categorical_features = 0;  // noise categoricals with 3 levels
};

Dataset generate_synthetic(const SyntheticSpec& spec);

/// P(label = 1 | x) under the generator before label noise.
double synthetic_probability(const SyntheticSpec& spec, std::span<const double> monotone_values);

/// One column of the numeric model matrix.
struct EncodedColumn {
  std::string name;
  std::size_t source = 0;
  int category = -1;  // -1 for ordinal columns
};

/// Expands categorical features into one-hot columns at the model boundary.
class FeatureEncoder {
 public:
  explicit FeatureEncoder(const FeatureSchema& schema);

  const std::vector<EncodedColumn>& columns() const { return columns_; }
  Eigen::Index width() const { return static_cast<Eigen::Index>(columns_.size()); }
  /// Encoded column of an ordinal feature.
  Eigen::Index ordinal_column(std::size_t feature) const;

  Eigen::MatrixXd encode(const Eigen::MatrixXd& cells) const;
  Eigen::MatrixXd encode(const Dataset& d) const { return encode(d.cells); }
  /// Inverse of encode; throws if a one-hot block is not exactly one-hot.
  Eigen::MatrixXd decode(const Eigen::MatrixXd& encoded) const;

 private:
  FeatureSchema schema_;
  std::vector<EncodedColumn> columns_;
  std::vector<Eigen::Index> first_column_;
};

}  // namespace monoalign

#endif  // MONOALIGN_DATA_HPP
