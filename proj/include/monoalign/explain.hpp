#ifndef MONOALIGN_EXPLAIN_HPP
#define MONOALIGN_EXPLAIN_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "monoalign/data.hpp"
#include "monoalign/gbt.hpp"

namespace monoalign {

/// Per-row attributions in margin space. Columns 0..m-1 follow the model's
/// encoded columns; column m is the baseline (expected margin).
struct ShapMatrix {
  Eigen::MatrixXd values;
  std::vector<std::string> feature_names;
  std::vector<std::string> row_ids;
  std::string model_fingerprint;

  Eigen::Index features() const { return values.cols() - 1; }
  auto baseline() const { return values.col(values.cols() - 1); }

  void write_csv(const std::filesystem::path& path) const;
};

/// Path-dependent TreeSHAP attributions for one tree, accumulated into `phi`
/// (length m + 1; the last slot receives the tree's expected value).
void tree_shap_row(const Tree& tree, const Eigen::Ref<const Eigen::RowVectorXd>& row,
                   Eigen::Ref<Eigen::RowVectorXd> phi);

/// Cover-weighted mean leaf value of a tree.
double expected_value(const Tree& tree);

ShapMatrix tree_shap(const TreeEnsemble& model, const Eigen::MatrixXd& x,
                     std::vector<std::string> row_ids = {});
/// Checks the schema fingerprint, encodes and attributes every row of `d`.
ShapMatrix tree_shap(const TreeEnsemble& model, const Dataset& d);

/// Stable identifier of a serialized model (hash of its JSON).
std::string model_fingerprint(const TreeEnsemble& model);

struct BarEntry {
  std::string column;         // encoded column name
  std::string feature;        // original feature name
  std::string display_value;  // value shown to the rater
  double attribution = 0;

  std::string direction() const;
};

/// Top-k bars of two models for one patient plus the screen side of each.
struct BarPlotPayload {
  std::string row_id;
  std::vector<BarEntry> first;   // model A
  std::vector<BarEntry> second;  // model B
  bool first_on_left = true;

  const std::vector<BarEntry>& left() const { return first_on_left ? first : second; }
  const std::vector<BarEntry>& right() const { return first_on_left ? second : first; }

  /// Full record including the side mapping (server side only).
  nlohmann::json to_json() const;
  static BarPlotPayload from_json(const nlohmann::json& j);
  /// LEFT/RIGHT view without any hint of which model is which.
  nlohmann::json blinded_json() const;
};

/// Top-k entries of one ShapMatrix row, by |attribution| then column name.
std::vector<BarEntry> top_k_entries(const ShapMatrix& s, Eigen::Index row, const Dataset& rows,
                                    std::size_t k = 5);

/// Fair coin deciding whether model A is shown on the left.
bool first_on_left(std::uint64_t side_seed);

/// Builds the payload for `row_id`, which must appear in both matrices and in
/// `rows`; the side of model A is a fair coin drawn from `side_seed`.
BarPlotPayload top_k_payload(const ShapMatrix& a, const ShapMatrix& b, const Dataset& rows,
                             const std::string& row_id, std::size_t k, std::uint64_t side_seed);

/// Display string of one raw cell ("missing" for NaN ordinals).
std::string display_value(const FeatureSpec& spec, double cell);

}  // namespace monoalign

#endif  // MONOALIGN_EXPLAIN_HPP
