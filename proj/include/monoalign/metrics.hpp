#ifndef MONOALIGN_METRICS_HPP
#define MONOALIGN_METRICS_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "monoalign/common.hpp"

namespace monoalign {

namespace detail {

template <typename DerivedS, typename DerivedL>
void check_scored(const Eigen::DenseBase<DerivedS>& scores, const Eigen::DenseBase<DerivedL>& labels) {
  if (scores.size() != labels.size()) throw ShapeError("scores and labels differ in length");
}

// Indices ordered by descending score; stable so ties keep input order.
template <typename DerivedS>
std::vector<Eigen::Index> descending_order(const Eigen::DenseBase<DerivedS>& scores) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(scores.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return scores.derived().coeff(a) > scores.derived().coeff(b);
  });
  return order;
}

}  // namespace detail

/// Area under the ROC curve in Mann-Whitney form: the fraction of
/// (positive, negative) pairs ranked correctly, ties counting one half.
template <typename DerivedS, typename DerivedL>
double auc_roc(const Eigen::DenseBase<DerivedS>& scores, const Eigen::DenseBase<DerivedL>& labels) {
  detail::check_scored(scores, labels);
  const auto order = detail::descending_order(scores);
  double pos = 0, neg = 0;
  for (Eigen::Index i = 0; i < labels.size(); ++i) (labels.derived().coeff(i) != 0 ? pos : neg) += 1;
  if (pos == 0 || neg == 0) throw Error("auc_roc: labels contain a single class");

  // Walk tied blocks from the top; each positive beats every negative below its block.
  double correct = 0, neg_seen = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    double block_pos = 0, block_neg = 0;
    const double s = scores.derived().coeff(order[i]);
    while (j < order.size() && scores.derived().coeff(order[j]) == s) {
      (labels.derived().coeff(order[j]) != 0 ? block_pos : block_neg) += 1;
      ++j;
    }
    correct += block_pos * (neg - neg_seen - block_neg) + 0.5 * block_pos * block_neg;
    neg_seen += block_neg;
    i = j;
  }
  return correct / (pos * neg);
}

/// Step-wise average precision over descending-score thresholds; rows with
/// equal scores enter as a single threshold step.
template <typename DerivedS, typename DerivedL>
double average_precision(const Eigen::DenseBase<DerivedS>& scores,
                         const Eigen::DenseBase<DerivedL>& labels) {
  detail::check_scored(scores, labels);
  double pos = 0;
  for (Eigen::Index i = 0; i < labels.size(); ++i) pos += labels.derived().coeff(i) != 0;
  if (pos == 0) throw Error("average_precision: no positive labels");
  const auto order = detail::descending_order(scores);
  double ap = 0, tp = 0, seen = 0, prev_recall = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    const double s = scores.derived().coeff(order[i]);
    while (i < order.size() && scores.derived().coeff(order[i]) == s) {
      tp += labels.derived().coeff(order[i]) != 0;
      seen += 1;
      ++i;
    }
    const double recall = tp / pos;
    ap += (recall - prev_recall) * (tp / seen);
    prev_recall = recall;
  }
  return ap;
}

struct MetricPoint {
  Eigen::Index train_size = 0;
  std::uint64_t seed = 0;
  std::string model_kind;  // "constrained", "unconstrained", "opposite"
  double auc_roc = 0;
  double avg_precision = 0;
};

struct CurvePoint {
  Eigen::Index train_size = 0;
  std::string model_kind;
  std::string metric;
  double mean = 0;
  double ci_low = 0;
  double ci_high = 0;
  int replicates = 0;
};

/// Mean and normal-approximation 95% interval mean +/- 1.96 sd / sqrt(R).
struct MeanCi {
  double mean = 0;
  double ci_low = 0;
  double ci_high = 0;
};

MeanCi mean_ci(const std::vector<double>& values);

/// Per (train size, model kind) curve of `metric` ("auc_roc" or "avg_precision").
/// Every size needs at least two seeds.
std::vector<CurvePoint> aggregate_curve(const std::vector<MetricPoint>& points,
                                        const std::string& metric);

void write_curve_csv(const std::vector<CurvePoint>& curve, const std::filesystem::path& path);
std::vector<CurvePoint> read_curve_csv(const std::filesystem::path& path);

}  // namespace monoalign

#endif  // MONOALIGN_METRICS_HPP
