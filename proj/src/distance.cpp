#include "monoalign/distance.hpp"

namespace monoalign {

double shap_distance(const ShapMatrix& a, const ShapMatrix& b) {
  if (a.row_ids != b.row_ids) throw ShapeError("shap distance: matrices cover different rows");
  if (a.feature_names != b.feature_names) throw ShapeError("shap distance: matrices cover different features");
  return shap_distance(a.values, b.values);
}

DistanceReport compare_models(const Eigen::VectorXd& pa, const Eigen::VectorXd& pb,
                              const ShapMatrix& sa, const ShapMatrix& sb,
                              const Eigen::VectorXi& labels) {
  if (sa.row_ids != sb.row_ids || sa.feature_names != sb.feature_names)
    throw ShapeError("compare_models: attribution matrices do not line up");
  if (sa.values.rows() != pa.size()) throw ShapeError("compare_models: predictions and attributions differ in rows");
  DistanceReport r;
  r.q = pa.size();
  r.row_ids = sa.row_ids;
  r.abs_prediction_gap = (pa - pb).cwiseAbs();
  r.shap_l1 = shap_row_l1(sa.values, sb.values);
  r.d_pred = prediction_distance(pa, pb);
  r.d_rank = ranking_distance(pa, pb, labels);
  r.d_shap = r.shap_l1.mean();
  return r;
}

nlohmann::json DistanceReport::to_json() const {
  auto vec = [](const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  return {{"d_pred", d_pred}, {"d_rank", d_rank}, {"d_shap", d_shap}, {"q", q},
          {"row_ids", row_ids}, {"abs_prediction_gap", vec(abs_prediction_gap)},
          {"shap_l1", vec(shap_l1)}};
}

DistanceReport DistanceReport::from_json(const nlohmann::json& j) {
  DistanceReport r;
  r.d_pred = j.at("d_pred").get<double>();
  r.d_rank = j.at("d_rank").get<double>();
  r.d_shap = j.at("d_shap").get<double>();
  r.q = j.at("q").get<Eigen::Index>();
  r.row_ids = j.at("row_ids").get<std::vector<std::string>>();
  const auto gap = j.at("abs_prediction_gap").get<std::vector<double>>();
  const auto l1 = j.at("shap_l1").get<std::vector<double>>();
  r.abs_prediction_gap = Eigen::Map<const Eigen::VectorXd>(gap.data(), static_cast<Eigen::Index>(gap.size()));
  r.shap_l1 = Eigen::Map<const Eigen::VectorXd>(l1.data(), static_cast<Eigen::Index>(l1.size()));
  return r;
}

}  // namespace monoalign
