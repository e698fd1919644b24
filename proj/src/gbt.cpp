#include "monoalign/gbt.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <tuple>

#include "monoalign/common.hpp"
#include "monoalign/metrics.hpp"

namespace monoalign {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Splits must beat gamma by more than accumulated rounding.
constexpr double kMinGain = 1e-9;
constexpr int kModelFormatVersion = 1;

double clip(double w, double lo, double hi) { return std::min(std::max(w, lo), hi); }

double leaf_weight(double g, double h, double lambda, double lo, double hi) {
  return clip(-g / (h + lambda), lo, hi);
}

double structure_score(double g, double h, double lambda, double w) {
  return -(2.0 * g * w + (h + lambda) * w * w);
}

struct NodeStats {
  double g = 0;
  double h = 0;
  double count = 0;
};

struct Candidate {
  double gain = -kInf;
  int feature = -1;
  double threshold = 0;
  bool default_left = true;
  double left_weight = 0;
  double right_weight = 0;
};

struct GrowNode {
  NodeStats stats;
  double lo = -kInf;
  double hi = kInf;
  int depth = 0;
};

int subtree_depth(const Tree& t, int n) {
  const auto& node = t.nodes[static_cast<std::size_t>(n)];
  if (node.is_leaf()) return 0;
  return 1 + std::max(subtree_depth(t, node.left), subtree_depth(t, node.right));
}

nlohmann::json node_to_json(const Tree& t, int n) {
  const auto& node = t.nodes[static_cast<std::size_t>(n)];
  if (node.is_leaf()) return {{"leaf", node.weight}, {"cover", node.cover}};
  return {{"feature", node.feature},
          {"threshold", node.threshold},
          {"default_left", node.default_left},
          {"cover", node.cover},
          {"left", node_to_json(t, node.left)},
          {"right", node_to_json(t, node.right)}};
}

int node_from_json(const nlohmann::json& j, Tree& t, Eigen::Index width) {
  const int id = static_cast<int>(t.nodes.size());
  t.nodes.emplace_back();
  TreeNode node;
  node.cover = j.at("cover").get<double>();
  if (j.contains("leaf")) {
    node.weight = j["leaf"].get<double>();
    t.nodes[static_cast<std::size_t>(id)] = node;
    return id;
  }
  node.feature = j.at("feature").get<int>();
  if (node.feature < 0 || node.feature >= width) throw ShapeError("model: split feature out of range");
  node.threshold = j.at("threshold").get<double>();
  node.default_left = j.at("default_left").get<bool>();
  node.left = node_from_json(j.at("left"), t, width);
  node.right = node_from_json(j.at("right"), t, width);
  t.nodes[static_cast<std::size_t>(id)] = node;
  return id;
}

}  // namespace

int Tree::depth() const { return nodes.empty() ? 0 : subtree_depth(*this, 0); }

int Tree::leaves() const {
  return static_cast<int>(std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

// ---------------------------------------------------------------- serialization

nlohmann::json TreeEnsemble::to_json() const {
  nlohmann::json trees_json = nlohmann::json::array();
  for (const auto& t : trees) trees_json.push_back(node_to_json(t, 0));
  return {{"format", "monoalign-gbt"},
          {"version", kModelFormatVersion},
          {"schema_fingerprint", schema_fingerprint},
          {"feature_names", feature_names},
          {"constraints", constraints},
          {"base_score", base_score},
          {"learning_rate", learning_rate},
          {"max_depth", max_depth},
          {"trees", trees_json}};
}

TreeEnsemble TreeEnsemble::from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "monoalign-gbt") throw ShapeError("model: unknown format");
    if (j.at("version").get<int>() != kModelFormatVersion)
      throw ShapeError("model: unsupported version " + j["version"].dump());
    TreeEnsemble m;
    m.schema_fingerprint = j.at("schema_fingerprint").get<std::string>();
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    m.constraints = j.at("constraints").get<std::vector<int>>();
    m.base_score = j.at("base_score").get<double>();
    m.learning_rate = j.at("learning_rate").get<double>();
    m.max_depth = j.at("max_depth").get<int>();
    if (m.constraints.size() != m.feature_names.size())
      throw ShapeError("model: constraint vector does not match feature count");
    for (const auto& jt : j.at("trees")) {
      Tree t;
      node_from_json(jt, t, m.width());
      m.trees.push_back(std::move(t));
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ShapeError(std::string("model: ") + e.what());
  }
}

void TreeEnsemble::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << to_json().dump() << "\n";
}

TreeEnsemble TreeEnsemble::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open model " + path.string());
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw ShapeError("model " + path.string() + ": " + e.what());
  }
}

Eigen::MatrixXd model_matrix(const TreeEnsemble& model, const Dataset& d) {
  if (!d.schema || d.schema->fingerprint() != model.schema_fingerprint)
    throw ShapeError("rows do not conform to the model's schema fingerprint");
  return FeatureEncoder(*d.schema).encode(d);
}

Eigen::VectorXd predict_margin(const TreeEnsemble& model, const Dataset& d) {
  return model.predict_margin(model_matrix(model, d));
}

Eigen::VectorXd predict_proba(const TreeEnsemble& model, const Dataset& d) {
  return model.predict_proba(model_matrix(model, d));
}

// ---------------------------------------------------------------- boosting

BoostingState::BoostingState(Eigen::MatrixXd x, Eigen::VectorXi labels, double base_score)
    : x_(std::move(x)), labels_(std::move(labels)) {
  if (x_.rows() != labels_.size()) throw ShapeError("boosting: rows and labels differ");
  margins_ = Eigen::VectorXd::Constant(x_.rows(), base_score);
  sorted_.resize(static_cast<std::size_t>(x_.cols()));
  missing_.resize(static_cast<std::size_t>(x_.cols()));
  for (Eigen::Index c = 0; c < x_.cols(); ++c) {
    auto& order = sorted_[static_cast<std::size_t>(c)];
    for (Eigen::Index r = 0; r < x_.rows(); ++r)
      (std::isnan(x_(r, c)) ? missing_[static_cast<std::size_t>(c)] : order).push_back(r);
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return x_(a, c) < x_(b, c); });
  }
  refresh();
}

void BoostingState::apply(const Tree& tree) {
  for (Eigen::Index i = 0; i < x_.rows(); ++i) margins_(i) += tree.predict(x_.row(i));
  refresh();
}

void BoostingState::refresh() {
  grad_.resize(x_.rows());
  hess_.resize(x_.rows());
  for (Eigen::Index i = 0; i < x_.rows(); ++i) {
    const double p = logistic(margins_(i));
    grad_(i) = p - labels_(i);
    hess_(i) = p * (1.0 - p);
  }
}

double split_gain(double gl, double hl, double gr, double hr, double lambda, double lo, double hi) {
  const double wl = leaf_weight(gl, hl, lambda, lo, hi);
  const double wr = leaf_weight(gr, hr, lambda, lo, hi);
  const double wp = leaf_weight(gl + gr, hl + hr, lambda, lo, hi);
  return 0.5 * (structure_score(gl, hl, lambda, wl) + structure_score(gr, hr, lambda, wr) -
                structure_score(gl + gr, hl + hr, lambda, wp));
}

Tree fit_boosting_round(const BoostingState& state, const TreeParams& params,
                        std::span<const int> directions, double learning_rate) {
  const auto& x = state.x();
  const auto& g = state.gradients();
  const auto& h = state.hessians();
  const Eigen::Index n = x.rows();
  const Eigen::Index m = x.cols();
  if (static_cast<Eigen::Index>(directions.size()) != m)
    throw ShapeError("fit_boosting_round: directions do not match columns");
  const double lambda = params.lambda;

  Tree tree;
  std::vector<GrowNode> grow;
  std::vector<int> node_of_row(static_cast<std::size_t>(n), 0);

  NodeStats root;
  for (Eigen::Index i = 0; i < n; ++i) {
    root.g += g(i);
    root.h += h(i);
    root.count += 1;
  }
  tree.nodes.emplace_back();
  grow.push_back({root, -kInf, kInf, 0});
  std::vector<int> frontier{0};

  // Scratch indexed by frontier slot.
  std::vector<int> slot_of_node;
  std::vector<NodeStats> running, missing;
  std::vector<double> last_value;
  std::vector<Candidate> best;

  for (int depth = 0; depth < params.max_depth && !frontier.empty(); ++depth) {
    const auto slots = frontier.size();
    slot_of_node.assign(tree.nodes.size(), -1);
    for (std::size_t s = 0; s < slots; ++s) slot_of_node[static_cast<std::size_t>(frontier[s])] = static_cast<int>(s);
    best.assign(slots, Candidate{});

    for (Eigen::Index col = 0; col < m; ++col) {
      const int dir = directions[static_cast<std::size_t>(col)];
      missing.assign(slots, NodeStats{});
      for (auto r : state.missing_rows(col)) {
        const int s = slot_of_node[static_cast<std::size_t>(node_of_row[static_cast<std::size_t>(r)])];
        if (s < 0) continue;
        missing[static_cast<std::size_t>(s)].g += g(r);
        missing[static_cast<std::size_t>(s)].h += h(r);
        missing[static_cast<std::size_t>(s)].count += 1;
      }
      running.assign(slots, NodeStats{});
      last_value.assign(slots, std::numeric_limits<double>::quiet_NaN());

      auto evaluate = [&](std::size_t s, double threshold) {
        const auto& node = grow[static_cast<std::size_t>(frontier[s])];
        const auto& left_present = running[s];
        const auto& miss = missing[s];
        // Try sending missing rows right, then left; left must win strictly.
        for (int variant = 0; variant < 2; ++variant) {
          const bool default_left = variant == 1;
          const double gl = left_present.g + (default_left ? miss.g : 0.0);
          const double hl = left_present.h + (default_left ? miss.h : 0.0);
          const double gr = node.stats.g - gl;
          const double hr = node.stats.h - hl;
          if (hl < params.min_child_weight || hr < params.min_child_weight) continue;
          const double wl = leaf_weight(gl, hl, lambda, node.lo, node.hi);
          const double wr = leaf_weight(gr, hr, lambda, node.lo, node.hi);
          if (dir > 0 && wl > wr) continue;
          if (dir < 0 && wl < wr) continue;
          const double gain = split_gain(gl, hl, gr, hr, lambda, node.lo, node.hi) - params.gamma;
          auto& b = best[s];
          if (gain > b.gain) b = {gain, static_cast<int>(col), threshold, default_left, wl, wr};
        }
      };

      for (auto r : state.sorted_rows(col)) {
        const int s_int = slot_of_node[static_cast<std::size_t>(node_of_row[static_cast<std::size_t>(r)])];
        if (s_int < 0) continue;
        const auto s = static_cast<std::size_t>(s_int);
        const double v = x(r, col);
        if (!std::isnan(last_value[s]) && v > last_value[s]) evaluate(s, 0.5 * (last_value[s] + v));
        running[s].g += g(r);
        running[s].h += h(r);
        running[s].count += 1;
        last_value[s] = v;
      }
    }

    std::vector<int> next;
    for (std::size_t s = 0; s < slots; ++s) {
      const auto& b = best[s];
      const int id = frontier[s];
      if (b.feature < 0 || !(b.gain > kMinGain)) continue;
      const GrowNode parent = grow[static_cast<std::size_t>(id)];
      const int dir = directions[static_cast<std::size_t>(b.feature)];
      double llo = parent.lo, lhi = parent.hi, rlo = parent.lo, rhi = parent.hi;
      if (dir != 0) {
        const double mid = 0.5 * (b.left_weight + b.right_weight);
        if (dir > 0) {
          lhi = mid;
          rlo = mid;
        } else {
          llo = mid;
          rhi = mid;
        }
      }
      const int left = static_cast<int>(tree.nodes.size());
      const int right = left + 1;
      tree.nodes.emplace_back();
      tree.nodes.emplace_back();
      grow.push_back({{}, llo, lhi, depth + 1});
      grow.push_back({{}, rlo, rhi, depth + 1});
      auto& node = tree.nodes[static_cast<std::size_t>(id)];
      node.feature = b.feature;
      node.threshold = b.threshold;
      node.default_left = b.default_left;
      node.left = left;
      node.right = right;
      next.push_back(left);
      next.push_back(right);
    }
    if (next.empty()) break;

    for (Eigen::Index r = 0; r < n; ++r) {
      auto& at = node_of_row[static_cast<std::size_t>(r)];
      const auto& node = tree.nodes[static_cast<std::size_t>(at)];
      if (node.is_leaf()) continue;
      const double v = x(r, node.feature);
      at = std::isnan(v) ? (node.default_left ? node.left : node.right)
                         : (v < node.threshold ? node.left : node.right);
      auto& st = grow[static_cast<std::size_t>(at)].stats;
      st.g += g(r);
      st.h += h(r);
      st.count += 1;
    }
    frontier = std::move(next);
  }

  for (std::size_t id = 0; id < tree.nodes.size(); ++id) {
    auto& node = tree.nodes[id];
    const auto& gn = grow[id];
    node.cover = gn.stats.count;
    if (node.is_leaf())
      node.weight = learning_rate * leaf_weight(gn.stats.g, gn.stats.h, lambda, gn.lo, gn.hi);
  }
  return tree;
}

double prior_log_odds(const Eigen::VectorXi& labels) {
  const double n = static_cast<double>(labels.size());
  const double pos = static_cast<double>(labels.sum());
  if (pos <= 0 || pos >= n) throw TrainingError("prior_log_odds: labels contain a single class");
  return std::log(pos / (n - pos));
}

TreeEnsemble fit_ensemble(const Eigen::MatrixXd& x, const Eigen::VectorXi& labels,
                          std::span<const int> directions, const BoostParams& params,
                          const std::function<void(const Tree&, int)>& on_tree) {
  if (params.rounds < 0 || params.max_depth < 1 || !(params.learning_rate > 0))
    throw TrainingError("fit_ensemble: invalid boosting parameters");
  TreeEnsemble model;
  model.learning_rate = params.learning_rate;
  model.max_depth = params.max_depth;
  model.base_score = prior_log_odds(labels);
  model.constraints.assign(directions.begin(), directions.end());
  if (static_cast<Eigen::Index>(directions.size()) != x.cols())
    throw ShapeError("fit_ensemble: one direction per column expected");
  for (Eigen::Index j = 0; j < x.cols(); ++j) model.feature_names.push_back("x" + std::to_string(j));
  BoostingState state(x, labels, model.base_score);
  const TreeParams tp{params.max_depth, params.lambda, params.gamma, params.min_child_weight};
  model.trees.reserve(static_cast<std::size_t>(params.rounds));
  for (int round = 0; round < params.rounds; ++round) {
    model.trees.push_back(fit_boosting_round(state, tp, directions, params.learning_rate));
    if (round + 1 < params.rounds) state.apply(model.trees.back());
    if (on_tree) on_tree(model.trees.back(), round);
  }
  return model;
}

std::vector<int> column_directions(const FeatureEncoder& enc, const ConstraintVector& c) {
  std::vector<int> out;
  out.reserve(enc.columns().size());
  for (const auto& col : enc.columns())
    out.push_back(col.category < 0 ? c.directions.at(col.source) : 0);
  return out;
}

// ---------------------------------------------------------------- grid search

void HyperGrid::validate() const {
  if (learning_rates.empty() || num_rounds.empty() || max_depths.empty())
    throw TrainingError("hyperparameter grid is empty");
  if (folds < 2) throw TrainingError("grid needs at least 2 folds");
  for (double lr : learning_rates)
    if (!(lr > 0)) throw TrainingError("learning rates must be positive");
  for (int r : num_rounds)
    if (r < 1) throw TrainingError("boosting rounds must be positive");
  for (int d : max_depths)
    if (d < 1) throw TrainingError("max depth must be positive");
}

nlohmann::json HyperGrid::to_json() const {
  return {{"learning_rates", learning_rates}, {"num_rounds", num_rounds},
          {"max_depths", max_depths}, {"folds", folds}};
}

HyperGrid HyperGrid::from_json(const nlohmann::json& j) {
  HyperGrid g;
  g.learning_rates = j.at("learning_rates").get<std::vector<double>>();
  g.num_rounds = j.at("num_rounds").get<std::vector<int>>();
  g.max_depths = j.at("max_depths").get<std::vector<int>>();
  g.folds = j.at("folds").get<int>();
  g.validate();
  return g;
}

std::vector<int> stratified_folds(const Eigen::VectorXi& labels, int folds, std::uint64_t seed) {
  if (folds < 2) throw TrainingError("stratified_folds: need at least 2 folds");
  std::vector<int> fold(static_cast<std::size_t>(labels.size()), -1);
  std::mt19937_64 rng(combine_seed(seed, 0xf01dULL));
  for (int cls = 0; cls < 2; ++cls) {
    std::vector<Eigen::Index> rows;
    for (Eigen::Index i = 0; i < labels.size(); ++i)
      if (labels(i) == cls) rows.push_back(i);
    if (static_cast<int>(rows.size()) < folds)
      throw TrainingError("degenerate fold: class " + std::to_string(cls) + " has " +
                          std::to_string(rows.size()) + " rows but " + std::to_string(folds) +
                          " folds were requested; lower the fold count or enlarge the train set");
    std::shuffle(rows.begin(), rows.end(), rng);
    for (std::size_t k = 0; k < rows.size(); ++k)
      fold[static_cast<std::size_t>(rows[k])] = static_cast<int>(k % static_cast<std::size_t>(folds));
  }
  return fold;
}

nlohmann::json CvReport::to_json() const {
  nlohmann::json cells_json = nlohmann::json::array();
  for (const auto& c : cells)
    cells_json.push_back({{"learning_rate", c.learning_rate}, {"rounds", c.rounds},
                          {"max_depth", c.max_depth}, {"fold_auc", c.fold_auc},
                          {"mean_auc", c.mean_auc}});
  std::vector<double> oof(best_oof_predictions.data(),
                          best_oof_predictions.data() + best_oof_predictions.size());
  return {{"cells", cells_json}, {"best", best}, {"fold_of_row", fold_of_row},
          {"best_oof_predictions", oof}};
}

TrainResult train(const Dataset& train_set, const ConstraintVector& constraints,
                  const HyperGrid& grid, std::uint64_t seed, const BoostParams& fixed) {
  grid.validate();
  train_set.validate(true);
  constraints.validate(*train_set.schema);
  const FeatureEncoder enc(*train_set.schema);
  const auto dirs = column_directions(enc, constraints);
  const Eigen::MatrixXd x = enc.encode(train_set);
  const auto& y = train_set.labels;

  auto finish = [&](TreeEnsemble model) {
    model.feature_names.clear();
    for (const auto& c : enc.columns()) model.feature_names.push_back(c.name);
    model.schema_fingerprint = train_set.schema->fingerprint();
    return model;
  };
  auto params_for = [&](double lr, int rounds, int depth) {
    BoostParams p = fixed;
    p.learning_rate = lr;
    p.rounds = rounds;
    p.max_depth = depth;
    return p;
  };

  TrainResult result;
  if (grid.cells() == 1) {
    CvCell only{grid.learning_rates[0], grid.num_rounds[0], grid.max_depths[0], {}, 0};
    result.cv.cells.push_back(only);
    result.model = finish(fit_ensemble(x, y, dirs, params_for(only.learning_rate, only.rounds, only.max_depth)));
    return result;
  }

  auto& cv = result.cv;
  cv.fold_of_row = stratified_folds(y, grid.folds, seed);
  auto rounds = grid.num_rounds;
  std::sort(rounds.begin(), rounds.end());
  rounds.erase(std::unique(rounds.begin(), rounds.end()), rounds.end());
  const int max_rounds = rounds.back();

  struct FoldData {
    Eigen::MatrixXd xt, xv;
    Eigen::VectorXi yt, yv;
    std::vector<Eigen::Index> val_rows;
  };
  std::vector<FoldData> folds(static_cast<std::size_t>(grid.folds));
  for (int k = 0; k < grid.folds; ++k) {
    std::vector<Eigen::Index> tr, va;
    for (Eigen::Index i = 0; i < y.size(); ++i)
      (cv.fold_of_row[static_cast<std::size_t>(i)] == k ? va : tr).push_back(i);
    auto& f = folds[static_cast<std::size_t>(k)];
    f.xt = x(tr, Eigen::all);
    f.yt = y(tr);
    f.xv = x(va, Eigen::all);
    f.yv = y(va);
    f.val_rows = va;
    if (f.yv.sum() == 0 || f.yv.sum() == f.yv.size() || f.yt.sum() == 0 || f.yt.sum() == f.yt.size())
      throw TrainingError("degenerate fold " + std::to_string(k) + ": single-class partition");
  }

  // One boosting run per (learning rate, depth, fold) serves every round count.
  struct Key {
    double lr;
    int rounds;
    int depth;
  };
  std::vector<Key> keys;
  for (double lr : grid.learning_rates)
    for (int r : grid.num_rounds)
      for (int d : grid.max_depths) keys.push_back({lr, r, d});
  std::map<std::tuple<double, int, int>, std::vector<double>> fold_auc;
  std::map<std::tuple<double, int, int>, std::vector<Eigen::VectorXd>> fold_proba;

  std::vector<double> lrs = grid.learning_rates;
  std::sort(lrs.begin(), lrs.end());
  lrs.erase(std::unique(lrs.begin(), lrs.end()), lrs.end());
  std::vector<int> depths = grid.max_depths;
  std::sort(depths.begin(), depths.end());
  depths.erase(std::unique(depths.begin(), depths.end()), depths.end());

  for (double lr : lrs) {
    for (int depth : depths) {
      for (auto& f : folds) {
        Eigen::VectorXd margin = Eigen::VectorXd::Constant(f.xv.rows(), prior_log_odds(f.yt));
        auto observe = [&](const Tree& t, int round) {
          for (Eigen::Index i = 0; i < f.xv.rows(); ++i) margin(i) += t.predict(f.xv.row(i));
          if (std::binary_search(rounds.begin(), rounds.end(), round + 1)) {
            const auto key = std::make_tuple(lr, round + 1, depth);
            Eigen::VectorXd proba = margin.unaryExpr([](double v) { return logistic(v); });
            fold_auc[key].push_back(auc_roc(proba, f.yv));
            fold_proba[key].push_back(std::move(proba));
          }
        };
        fit_ensemble(f.xt, f.yt, dirs, params_for(lr, max_rounds, depth), observe);
      }
    }
  }

  for (const auto& k : keys) {
    CvCell cell{k.lr, k.rounds, k.depth, fold_auc.at({k.lr, k.rounds, k.depth}), 0};
    cell.mean_auc = std::accumulate(cell.fold_auc.begin(), cell.fold_auc.end(), 0.0) /
                    static_cast<double>(cell.fold_auc.size());
    cv.cells.push_back(std::move(cell));
  }
  auto better = [](const CvCell& a, const CvCell& b) {
    if (a.mean_auc != b.mean_auc) return a.mean_auc > b.mean_auc;
    return std::make_tuple(a.learning_rate, a.rounds, a.max_depth) <
           std::make_tuple(b.learning_rate, b.rounds, b.max_depth);
  };
  for (std::size_t i = 1; i < cv.cells.size(); ++i)
    if (better(cv.cells[i], cv.cells[static_cast<std::size_t>(cv.best)])) cv.best = static_cast<int>(i);

  const auto& win = cv.cells[static_cast<std::size_t>(cv.best)];
  const auto& probas = fold_proba.at({win.learning_rate, win.rounds, win.max_depth});
  cv.best_oof_predictions.resize(y.size());
  for (std::size_t k = 0; k < folds.size(); ++k)
    for (std::size_t i = 0; i < folds[k].val_rows.size(); ++i)
      cv.best_oof_predictions(folds[k].val_rows[i]) = probas[k](static_cast<Eigen::Index>(i));

  result.model = finish(fit_ensemble(x, y, dirs, params_for(win.learning_rate, win.rounds, win.max_depth)));
  return result;
}

double max_monotonicity_violation(const TreeEnsemble& model, const Eigen::MatrixXd& x,
                                  Eigen::Index column, int direction,
                                  const std::vector<double>& grid) {
  if (direction == 0 || grid.size() < 2) return 0.0;
  double worst = 0;
  Eigen::MatrixXd probe = x;
  Eigen::VectorXd prev;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    probe.col(column).setConstant(grid[k]);
    Eigen::VectorXd cur = model.predict_margin(probe);
    if (k > 0) {
      const double deficit = (-(direction * (cur - prev).array())).maxCoeff();
      worst = std::max(worst, deficit);
    }
    prev = std::move(cur);
  }
  return worst;
}

}  // namespace monoalign
