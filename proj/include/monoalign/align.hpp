#ifndef MONOALIGN_ALIGN_HPP
#define MONOALIGN_ALIGN_HPP

#include <Eigen/Dense>

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "monoalign/constraints.hpp"
#include "monoalign/data.hpp"
#include "monoalign/gbt.hpp"

namespace monoalign {

enum class SurveyAnswer { kAlwaysIncrease, kAlwaysDecrease, kNeither };

SurveyAnswer parse_survey_answer(std::string_view s);

struct SurveyResponse {
  std::string respondent_id;
  std::map<std::string, SurveyAnswer> answers;  // feature name -> answer
};

/// Reads `respondent,feature,answer` rows (header required). Answers:
/// always-increase, always-decrease, neither, unsure, neither/unsure.
std::vector<SurveyResponse> load_survey(const std::filesystem::path& path);
std::vector<SurveyResponse> parse_survey(std::string_view text);

/// Strict-majority rule: a feature gets +1/-1 when more than half of the
/// respondents who answered it chose always-increase/always-decrease.
/// Anything else is 0, and features with a plurality but no majority are
/// flagged for manual review.
ConstraintVector derive_constraints(const std::vector<SurveyResponse>& responses,
                                    const FeatureSchema& schema);

struct PdpCurve {
  std::string feature;
  std::vector<double> grid;
  std::vector<double> mean;
  std::vector<double> se;
  Eigen::Index n_test = 0;
};

/// Sorted unique non-missing values of an ordinal feature.
std::vector<double> unique_values(const Dataset& d, std::size_t feature);

/// Univariate partial dependence: the grid comes from `full`; each grid value
/// overwrites the feature on every row of `test`, and the curve records the
/// mean predicted probability with its standard error sd / sqrt(q).
PdpCurve pdp(const TreeEnsemble& model, const Dataset& test, const Dataset& full,
             const std::string& feature);

struct Violation {
  std::size_t from = 0;
  std::size_t to = 0;
  double magnitude = 0;
};

/// Consecutive grid pairs where the mean moves against `direction` by more than `tolerance`.
std::vector<Violation> violations(const PdpCurve& curve, int direction, double tolerance = 0.0);

void write_pdp_csv(const std::vector<PdpCurve>& curves, const std::filesystem::path& path);
/// Plot data with the two-standard-error band.
nlohmann::json pdp_plot_json(const PdpCurve& curve);

}  // namespace monoalign

#endif  // MONOALIGN_ALIGN_HPP
