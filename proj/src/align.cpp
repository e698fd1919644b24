#include "monoalign/align.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "monoalign/common.hpp"
#include "monoalign/csv.hpp"

namespace monoalign {

SurveyAnswer parse_survey_answer(std::string_view s) {
  if (s == "always-increase") return SurveyAnswer::kAlwaysIncrease;
  if (s == "always-decrease") return SurveyAnswer::kAlwaysDecrease;
  if (s == "neither" || s == "unsure" || s == "neither/unsure") return SurveyAnswer::kNeither;
  throw DataError("survey: unknown answer '" + std::string(s) + "'");
}

std::vector<SurveyResponse> parse_survey(std::string_view text) {
  const auto table = parse_csv(text);
  if (table.empty()) throw DataError("survey: empty file");
  const auto& header = table.front();
  if (header.size() != 3 || header[0] != "respondent" || header[1] != "feature" || header[2] != "answer")
    throw DataError("survey: header must be respondent,feature,answer");
  std::vector<SurveyResponse> out;
  std::map<std::string, std::size_t> index;
  for (std::size_t r = 1; r < table.size(); ++r) {
    const auto& rec = table[r];
    if (rec.size() != 3) throw DataError("survey: line " + std::to_string(r + 1) + " needs 3 fields");
    auto [it, fresh] = index.try_emplace(rec[0], out.size());
    if (fresh) out.push_back({rec[0], {}});
    auto& resp = out[it->second];
    if (!resp.answers.emplace(rec[1], parse_survey_answer(rec[2])).second)
      throw DataError("survey: respondent '" + rec[0] + "' answered '" + rec[1] + "' twice");
  }
  return out;
}

std::vector<SurveyResponse> load_survey(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open survey " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_survey(buf.str());
}

ConstraintVector derive_constraints(const std::vector<SurveyResponse>& responses,
                                    const FeatureSchema& schema) {
  if (responses.empty()) throw DataError("derive_constraints: no survey responses");
  struct Tally {
    int up = 0, down = 0, neither = 0;
  };
  std::vector<Tally> tally(schema.size());
  for (const auto& r : responses) {
    for (const auto& [name, answer] : r.answers) {
      const auto f = schema.index_of(name);
      if (!schema.feature(f).monotone_eligible)
        throw DataError("survey: '" + name + "' is not monotone_eligible");
      auto& t = tally[f];
      (answer == SurveyAnswer::kAlwaysIncrease ? t.up
       : answer == SurveyAnswer::kAlwaysDecrease ? t.down
                                                 : t.neither) += 1;
    }
  }
  auto c = ConstraintVector::none(schema);
  c.provenance = ConstraintProvenance::kSurveyMajority;
  for (std::size_t f = 0; f < schema.size(); ++f) {
    const auto& t = tally[f];
    const int total = t.up + t.down + t.neither;
    if (total == 0) continue;
    if (2 * t.up > total) {
      c.directions[f] = 1;
    } else if (2 * t.down > total) {
      c.directions[f] = -1;
    } else if (t.up > 0 || t.down > 0) {
      c.flagged_for_review.push_back(schema.feature(f).name);
    }
  }
  return c;
}

std::vector<double> unique_values(const Dataset& d, std::size_t feature) {
  std::set<double> values;
  const auto col = d.cells.col(static_cast<Eigen::Index>(feature));
  for (Eigen::Index i = 0; i < col.size(); ++i)
    if (!std::isnan(col(i))) values.insert(col(i));
  return {values.begin(), values.end()};
}

PdpCurve pdp(const TreeEnsemble& model, const Dataset& test, const Dataset& full,
             const std::string& feature) {
  const auto f = test.schema->index_of(feature);
  if (test.schema->feature(f).kind != FeatureKind::kOrdinal)
    throw DataError("pdp: '" + feature + "' is not ordinal-numeric");
  if (full.schema->fingerprint() != test.schema->fingerprint())
    throw ShapeError("pdp: test and full datasets use different schemas");
  PdpCurve curve;
  curve.feature = feature;
  curve.grid = unique_values(full, f);
  if (curve.grid.empty()) throw DataError("pdp: feature '" + feature + "' is entirely missing");
  curve.n_test = test.rows();
  if (curve.n_test == 0) throw DataError("pdp: empty test set");

  const FeatureEncoder enc(*test.schema);
  Eigen::MatrixXd x = model_matrix(model, test);
  const auto col = enc.ordinal_column(f);
  const double q = static_cast<double>(curve.n_test);
  for (double v : curve.grid) {
    x.col(col).setConstant(v);
    const Eigen::VectorXd p = model.predict_proba(x);
    const double mean = p.mean();
    const double sd = curve.n_test > 1 ? std::sqrt((p.array() - mean).square().sum() / (q - 1)) : 0.0;
    curve.mean.push_back(mean);
    curve.se.push_back(sd / std::sqrt(q));
  }
  return curve;
}

std::vector<Violation> violations(const PdpCurve& curve, int direction, double tolerance) {
  if (direction == 0) throw DataError("violations: direction must be nonzero");
  std::vector<Violation> out;
  for (std::size_t k = 1; k < curve.mean.size(); ++k) {
    const double against = -direction * (curve.mean[k] - curve.mean[k - 1]);
    if (against > tolerance) out.push_back({k - 1, k, against});
  }
  return out;
}

void write_pdp_csv(const std::vector<PdpCurve>& curves, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  write_csv_row(out, {"feature", "value", "mean", "se"});
  for (const auto& c : curves)
    for (std::size_t k = 0; k < c.grid.size(); ++k)
      write_csv_row(out, {c.feature, format_double(c.grid[k]), format_double(c.mean[k]),
                          format_double(c.se[k])});
}

nlohmann::json pdp_plot_json(const PdpCurve& curve) {
  std::vector<double> lo, hi;
  for (std::size_t k = 0; k < curve.grid.size(); ++k) {
    lo.push_back(curve.mean[k] - 2 * curve.se[k]);
    hi.push_back(curve.mean[k] + 2 * curve.se[k]);
  }
  return {{"feature", curve.feature}, {"x", curve.grid}, {"mean", curve.mean},
          {"band_low", lo},           {"band_high", hi}, {"n_test", curve.n_test}};
}

}  // namespace monoalign
