#ifndef MONOALIGN_DISTANCE_HPP
#define MONOALIGN_DISTANCE_HPP

#include <Eigen/Dense>

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "monoalign/common.hpp"
#include "monoalign/explain.hpp"

namespace monoalign {

/// Mean absolute difference of two probability vectors.
template <typename DerivedA, typename DerivedB>
double prediction_distance(const Eigen::MatrixBase<DerivedA>& pa, const Eigen::MatrixBase<DerivedB>& pb) {
  if (pa.size() != pb.size()) throw ShapeError("prediction_distance: length mismatch");
  if (pa.size() == 0) throw ShapeError("prediction_distance: empty input");
  return (pa - pb).cwiseAbs().mean();
}

/// Disagreement rate over mixed-outcome pairs: a pair counts 1 when the two
/// models order it in opposite directions, 1/2 when exactly one calls it a tie.
template <typename DerivedA, typename DerivedB, typename DerivedL>
double ranking_distance(const Eigen::MatrixBase<DerivedA>& pa, const Eigen::MatrixBase<DerivedB>& pb,
                        const Eigen::DenseBase<DerivedL>& labels) {
  if (pa.size() != pb.size() || pa.size() != labels.size())
    throw ShapeError("ranking_distance: length mismatch");
  std::vector<Eigen::Index> pos, neg;
  for (Eigen::Index i = 0; i < labels.size(); ++i)
    (labels.derived().coeff(i) != 0 ? pos : neg).push_back(i);
  if (pos.empty() || neg.empty()) throw Error("ranking_distance: labels contain a single class");
  auto sign = [](double v) { return (v > 0) - (v < 0); };
  double disagree = 0;
  for (auto i : pos) {
    for (auto j : neg) {
      const int sa = sign(pa(i) - pa(j));
      const int sb = sign(pb(i) - pb(j));
      if (sa == sb) continue;
      disagree += (sa == 0 || sb == 0) ? 0.5 : 1.0;
    }
  }
  return disagree / (static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
}

/// Per-row L1 norm of the attribution difference, baseline column included.
template <typename DerivedA, typename DerivedB>
Eigen::VectorXd shap_row_l1(const Eigen::MatrixBase<DerivedA>& sa, const Eigen::MatrixBase<DerivedB>& sb) {
  if (sa.rows() != sb.rows() || sa.cols() != sb.cols()) throw ShapeError("shap distance: shape mismatch");
  return (sa - sb).cwiseAbs().rowwise().sum();
}

template <typename DerivedA, typename DerivedB>
double shap_distance(const Eigen::MatrixBase<DerivedA>& sa, const Eigen::MatrixBase<DerivedB>& sb) {
  if (sa.rows() == 0) throw ShapeError("shap distance: empty matrices");
  return shap_row_l1(sa, sb).mean();
}

/// Checks that rows and columns line up before comparing.
double shap_distance(const ShapMatrix& a, const ShapMatrix& b);

struct DistanceReport {
  double d_pred = 0;
  double d_rank = 0;
  double d_shap = 0;
  Eigen::Index q = 0;
  std::vector<std::string> row_ids;
  Eigen::VectorXd abs_prediction_gap;
  Eigen::VectorXd shap_l1;

  nlohmann::json to_json() const;
  static DistanceReport from_json(const nlohmann::json& j);
};

/// All three distances between models A and B on one labelled test set.
DistanceReport compare_models(const Eigen::VectorXd& pa, const Eigen::VectorXd& pb,
                              const ShapMatrix& sa, const ShapMatrix& sb,
                              const Eigen::VectorXi& labels);

}  // namespace monoalign

#endif  // MONOALIGN_DISTANCE_HPP
