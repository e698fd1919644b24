#ifndef MONOALIGN_GBT_HPP
#define MONOALIGN_GBT_HPP

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "monoalign/common.hpp"
#include "monoalign/constraints.hpp"
#include "monoalign/data.hpp"

namespace monoalign {

/// Node of a regression tree stored in a flat array. Rows with
/// `x[feature] < threshold` go left; NaN follows `default_left`.
struct TreeNode {
  int feature = -1;
  double threshold = 0;
  bool default_left = true;
  int left = -1;
  int right = -1;
  double weight = 0;  // leaf value, already shrunk by the learning rate
  double cover = 0;   // training rows that reached the node

  bool is_leaf() const { return left < 0; }
};

struct Tree {
  std::vector<TreeNode> nodes;

  template <typename Derived>
  int leaf_index(const Eigen::DenseBase<Derived>& row) const {
    int n = 0;
    while (!nodes[static_cast<std::size_t>(n)].is_leaf()) {
      const auto& node = nodes[static_cast<std::size_t>(n)];
      const double v = row.derived().coeff(node.feature);
      n = std::isnan(v) ? (node.default_left ? node.left : node.right)
                        : (v < node.threshold ? node.left : node.right);
    }
    return n;
  }

  template <typename Derived>
  double predict(const Eigen::DenseBase<Derived>& row) const {
    return nodes[static_cast<std::size_t>(leaf_index(row))].weight;
  }

  int depth() const;
  int leaves() const;
};

/// Additive ensemble in log-odds space: margin = base_score + sum of leaf weights.
struct TreeEnsemble {
  std::vector<Tree> trees;
  double learning_rate = 0.1;
  int max_depth = 3;
  double base_score = 0;
  std::vector<int> constraints;           // per encoded column
  std::vector<std::string> feature_names;  // encoded column names
  std::string schema_fingerprint;

  Eigen::Index width() const { return static_cast<Eigen::Index>(feature_names.size()); }

  template <typename Derived>
  Eigen::VectorXd predict_margin(const Eigen::MatrixBase<Derived>& x) const {
    if (x.cols() != width()) throw ShapeError("predict: expected " + std::to_string(width()) + " columns");
    Eigen::VectorXd out = Eigen::VectorXd::Constant(x.rows(), base_score);
    for (const auto& t : trees)
      for (Eigen::Index i = 0; i < x.rows(); ++i) out(i) += t.predict(x.row(i));
    return out;
  }

  template <typename Derived>
  Eigen::VectorXd predict_proba(const Eigen::MatrixBase<Derived>& x) const {
    return predict_margin(x).unaryExpr([](double m) { return 1.0 / (1.0 + std::exp(-m)); });
  }

  nlohmann::json to_json() const;
  static TreeEnsemble from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static TreeEnsemble load(const std::filesystem::path& path);
};

inline double logistic(double m) { return 1.0 / (1.0 + std::exp(-m)); }

/// Encodes `d` and checks it against the model's schema fingerprint.
Eigen::MatrixXd model_matrix(const TreeEnsemble& model, const Dataset& d);
Eigen::VectorXd predict_margin(const TreeEnsemble& model, const Dataset& d);
Eigen::VectorXd predict_proba(const TreeEnsemble& model, const Dataset& d);

struct TreeParams {
  int max_depth = 3;
  double lambda = 1.0;
  double gamma = 0.0;
  double min_child_weight = 1.0;
};

struct BoostParams {
  double learning_rate = 0.1;
  int rounds = 100;
  int max_depth = 3;
  double lambda = 1.0;
  double gamma = 0.0;
  double min_child_weight = 1.0;
};

/// Mutable state of one boosting run over an encoded training matrix.
/// Column orders are sorted once and reused by every round.
class BoostingState {
 public:
  BoostingState(Eigen::MatrixXd x, Eigen::VectorXi labels, double base_score);

  const Eigen::MatrixXd& x() const { return x_; }
  const Eigen::VectorXi& labels() const { return labels_; }
  const Eigen::VectorXd& margins() const { return margins_; }
  const Eigen::VectorXd& gradients() const { return grad_; }
  const Eigen::VectorXd& hessians() const { return hess_; }
  const std::vector<Eigen::Index>& sorted_rows(Eigen::Index col) const {
    return sorted_[static_cast<std::size_t>(col)];
  }
  const std::vector<Eigen::Index>& missing_rows(Eigen::Index col) const {
    return missing_[static_cast<std::size_t>(col)];
  }

  /// Adds the tree's output to every margin and refreshes g = p - y, h = p(1 - p).
  void apply(const Tree& tree);

 private:
  void refresh();

  Eigen::MatrixXd x_;
  Eigen::VectorXi labels_;
  Eigen::VectorXd margins_;
  Eigen::VectorXd grad_;
  Eigen::VectorXd hess_;
  std::vector<std::vector<Eigen::Index>> sorted_;
  std::vector<std::vector<Eigen::Index>> missing_;
};

/// Structure score gain of splitting (G, H) into left/right with given weights,
/// 0.5 * [s(L, wl) + s(R, wr) - s(parent, wp)] with s(G, H, w) = -(2 G w + (H + lambda) w^2).
/// Equals the familiar G_L^2/(H_L+lambda) + ... form when no weight is clipped.
double split_gain(double gl, double hl, double gr, double hr, double lambda,
                  double lo = -std::numeric_limits<double>::infinity(),
                  double hi = std::numeric_limits<double>::infinity());

/// Greedily grows one tree on the current gradients. `directions` holds a
/// monotone direction per encoded column. Leaf weights are multiplied by
/// `learning_rate` before they are stored.
Tree fit_boosting_round(const BoostingState& state, const TreeParams& params,
                        std::span<const int> directions, double learning_rate);

/// Fixed-hyperparameter fit. `on_tree` observes each tree right after it is added.
TreeEnsemble fit_ensemble(const Eigen::MatrixXd& x, const Eigen::VectorXi& labels,
                          std::span<const int> directions, const BoostParams& params,
                          const std::function<void(const Tree&, int)>& on_tree = {});

/// Log-odds of the positive rate.
double prior_log_odds(const Eigen::VectorXi& labels);

/// Constraint directions expanded to encoded columns.
std::vector<int> column_directions(const FeatureEncoder& enc, const ConstraintVector& c);

struct HyperGrid {
  std::vector<double> learning_rates{0.01, 0.1, 0.3, 0.5};
  std::vector<int> num_rounds{100, 300, 500};
  std::vector<int> max_depths{2, 3, 5, 10};
  int folds = 5;

  std::size_t cells() const { return learning_rates.size() * num_rounds.size() * max_depths.size(); }
  void validate() const;
  nlohmann::json to_json() const;
  static HyperGrid from_json(const nlohmann::json& j);
};

/// Fold id per row: per-class round robin after a seeded shuffle.
std::vector<int> stratified_folds(const Eigen::VectorXi& labels, int folds, std::uint64_t seed);

struct CvCell {
  double learning_rate = 0;
  int rounds = 0;
  int max_depth = 0;
  std::vector<double> fold_auc;
  double mean_auc = 0;
};

struct CvReport {
  std::vector<CvCell> cells;
  int best = 0;
  std::vector<int> fold_of_row;
  // Out-of-fold probabilities of the selected cell (empty when no search ran).
  Eigen::VectorXd best_oof_predictions;

  nlohmann::json to_json() const;
};

struct TrainResult {
  TreeEnsemble model;
  CvReport cv;
};

/// Grid search with stratified k-fold CV on mean validation AUC (maximised),
/// then a refit on all of `train` with the winning cell. Ties prefer the lower
/// learning rate, then fewer rounds, then the shallower depth.
TrainResult train(const Dataset& train, const ConstraintVector& constraints, const HyperGrid& grid,
                  std::uint64_t seed, const BoostParams& fixed = {});

/// Largest d * (f(x with x_j = b) - f(x with x_j = a)) deficit over all rows
/// and all consecutive pairs of the given grid; 0 means monotone.
double max_monotonicity_violation(const TreeEnsemble& model, const Eigen::MatrixXd& x,
                                  Eigen::Index column, int direction,
                                  const std::vector<double>& grid);

}  // namespace monoalign

#endif  // MONOALIGN_GBT_HPP
