#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <set>

#include "fixtures.hpp"
#include "monoalign/align.hpp"
#include "monoalign/gbt.hpp"
#include "monoalign/metrics.hpp"
#include "oracles.hpp"

using namespace monoalign;

namespace {

struct Sums {
  double g = 0, h = 0;
};

double score_term(const Sums& s, double lambda) { return s.g * s.g / (s.h + lambda); }

// Best first-round gain over every feature, midpoint threshold and missing side.
double exhaustive_best_gain(const Eigen::MatrixXd& x, const Eigen::VectorXd& g, const Eigen::VectorXd& h,
                            double lambda, double min_child_weight) {
  Sums all;
  for (Eigen::Index i = 0; i < x.rows(); ++i) all = {all.g + g(i), all.h + h(i)};
  double best = -std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    std::set<double> values;
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      if (!std::isnan(x(i, j))) values.insert(x(i, j));
    std::vector<double> v(values.begin(), values.end());
    for (std::size_t k = 1; k < v.size(); ++k) {
      const double t = 0.5 * (v[k - 1] + v[k]);
      for (bool missing_left : {false, true}) {
        Sums l, r;
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
          const bool left = std::isnan(x(i, j)) ? missing_left : x(i, j) < t;
          auto& s = left ? l : r;
          s = {s.g + g(i), s.h + h(i)};
        }
        if (l.h < min_child_weight || r.h < min_child_weight) continue;
        best = std::max(best, 0.5 * (score_term(l, lambda) + score_term(r, lambda) - score_term(all, lambda)));
      }
    }
  }
  return best;
}

Eigen::VectorXi random_labels(Eigen::Index n, std::mt19937_64& rng) {
  std::bernoulli_distribution coin(0.5);
  Eigen::VectorXi y(n);
  for (Eigen::Index i = 0; i < n; ++i) y(i) = coin(rng);
  y(0) = 1;
  y(1) = 0;
  return y;
}

HyperGrid one_cell(double lr, int rounds, int depth, int folds = 3) {
  HyperGrid g;
  g.learning_rates = {lr};
  g.num_rounds = {rounds};
  g.max_depths = {depth};
  g.folds = folds;
  return g;
}

}  // namespace

TEST_CASE("split_gain matches the closed form when nothing is clipped") {
  const double gl = -3.2, hl = 4.1, gr = 1.7, hr = 2.5, lambda = 1.0;
  const double closed = 0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda) -
                               (gl + gr) * (gl + gr) / (hl + hr + lambda));
  CHECK(split_gain(gl, hl, gr, hr, lambda) == doctest::Approx(closed).epsilon(1e-14));
  // Clipping weights can only lower the gain.
  CHECK(split_gain(gl, hl, gr, hr, lambda, -0.1, 0.1) < closed);
}

TEST_CASE("first round reaches the exhaustive best gain on small fixtures") {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> level(0, 4);
  std::bernoulli_distribution missing(0.15);
  for (int rep = 0; rep < 40; ++rep) {
    const Eigen::Index n = 8 + rep % 13;
    Eigen::MatrixXd x(n, 3);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < 3; ++j)
        x(i, j) = missing(rng) ? std::numeric_limits<double>::quiet_NaN() : level(rng);
    const auto y = random_labels(n, rng);
    const std::vector<int> dirs{0, 0, 0};
    BoostingState state(x, y, prior_log_odds(y));
    const TreeParams params{1, 1.0, 0.0, 0.5};
    const Tree t = fit_boosting_round(state, params, dirs, 1.0);
    const double best = exhaustive_best_gain(x, state.gradients(), state.hessians(), 1.0, 0.5);
    CAPTURE(rep);
    if (t.nodes.size() == 1) {
      CHECK(best <= 1e-9);
      continue;
    }
    Sums l, r, all;
    for (Eigen::Index i = 0; i < n; ++i) {
      const int leaf = t.leaf_index(x.row(i));
      auto& s = leaf == t.nodes[0].left ? l : r;
      s = {s.g + state.gradients()(i), s.h + state.hessians()(i)};
      all = {all.g + state.gradients()(i), all.h + state.hessians()(i)};
    }
    const double realised = 0.5 * (score_term(l, 1.0) + score_term(r, 1.0) - score_term(all, 1.0));
    CHECK(realised == doctest::Approx(best).epsilon(1e-10));
    // Leaf weights are the Newton steps -G / (H + lambda).
    CHECK(t.nodes[static_cast<std::size_t>(t.nodes[0].left)].weight == doctest::Approx(-l.g / (l.h + 1.0)));
    CHECK(t.nodes[static_cast<std::size_t>(t.nodes[0].right)].weight == doctest::Approx(-r.g / (r.h + 1.0)));
  }
}

TEST_CASE("pure split is chosen and pure nodes become leaves") {
  Eigen::MatrixXd x(12, 2);
  Eigen::VectorXi y(12);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 12; ++i) {
    y(i) = i % 2;
    x(i, 0) = y(i) + 0.1 * u(rng);  // separates the classes
    x(i, 1) = u(rng);
  }
  BoostingState state(x, y, 0.0);
  const std::vector<int> dirs{0, 0};
  const Tree t = fit_boosting_round(state, {3, 1.0, 0.0, 1.0}, dirs, 0.3);
  REQUIRE(t.nodes.size() == 3);
  CHECK(t.nodes[0].feature == 0);
  CHECK(t.nodes[static_cast<std::size_t>(t.nodes[0].left)].weight < 0);
  CHECK(t.nodes[static_cast<std::size_t>(t.nodes[0].right)].weight > 0);

  Eigen::VectorXi ones = Eigen::VectorXi::Ones(12);
  BoostingState pure(x, ones, 0.0);
  const Tree leaf = fit_boosting_round(pure, {3, 1.0, 0.0, 1.0}, dirs, 0.3);
  REQUIRE(leaf.nodes.size() == 1);
  CHECK(leaf.nodes[0].weight > 0);
}

TEST_CASE("a constraint against the data rejects the split") {
  Eigen::MatrixXd x(40, 1);
  Eigen::VectorXi y(40);
  for (int i = 0; i < 40; ++i) {
    x(i, 0) = i % 4;
    y(i) = x(i, 0) >= 2 ? (i % 8 != 3) : (i % 8 == 0);  // mostly increasing in x
  }
  const std::vector<int> down{-1};
  const auto model = fit_ensemble(x, y, down, {0.3, 20, 3});
  const std::vector<double> grid{0, 1, 2, 3};
  CHECK(oracle::monotone_deficit(model, x, 0, -1, grid) == 0.0);
  Eigen::MatrixXd probe(4, 1);
  probe << 0, 1, 2, 3;
  const auto m = model.predict_margin(probe);
  for (int k = 1; k < 4; ++k) CHECK(m(k) <= m(k - 1));
  const std::vector<int> free{0};
  const auto unconstrained = fit_ensemble(x, y, free, {0.3, 20, 3});
  const auto mu = unconstrained.predict_margin(probe);
  CHECK(mu(3) > mu(0));
}

TEST_CASE("monotonicity holds exhaustively on random constrained fits") {
  std::mt19937_64 rng(11);
  int models = 0;
  for (int rep = 0; rep < 30; ++rep) {
    auto spec = fixture::clinical_spec(150 + 20 * rep, 100 + rep, 0.25);
    spec.missing_rate = rep % 3 == 0 ? 0.1 : 0.0;
    const auto d = generate_synthetic(spec);
    FeatureEncoder enc(*d.schema);
    const auto x = enc.encode(d);
    std::vector<int> dirs(static_cast<std::size_t>(enc.width()), 0);
    std::uniform_int_distribution<int> dir(-1, 1);
    for (std::size_t f = 0; f < 5; ++f) dirs[static_cast<std::size_t>(enc.ordinal_column(f))] = dir(rng);
    dirs[0] = rep % 2 ? 1 : -1;  // at least one constrained column, sometimes against the data
    const BoostParams p{rep % 2 ? 0.3 : 0.1, 10 + rep, 2 + rep % 4};
    const auto model = fit_ensemble(x, d.labels, dirs, p);
    ++models;
    for (std::size_t f = 0; f < 5; ++f) {
      const auto col = enc.ordinal_column(f);
      const int direction = dirs[static_cast<std::size_t>(col)];
      if (direction == 0) continue;
      const auto grid = unique_values(d, f);
      CAPTURE(rep);
      CAPTURE(f);
      CHECK(oracle::monotone_deficit(model, x, col, direction, grid) == 0.0);
      CHECK(max_monotonicity_violation(model, x, col, direction, grid) == 0.0);
    }
  }
  CHECK(models == 30);
}

TEST_CASE("prediction basics") {
  TreeEnsemble empty;
  empty.base_score = 0.4;
  empty.feature_names = {"a", "b"};
  Eigen::MatrixXd rows = Eigen::MatrixXd::Random(5, 2);
  CHECK((empty.predict_proba(rows).array() == logistic(0.4)).all());

  TreeEnsemble one = empty;
  Tree t;
  t.nodes = {{0, 0.5, false, 1, 2, 0, 10}, {-1, 0, true, -1, -1, -0.2, 4}, {-1, 0, true, -1, -1, 0.3, 6}};
  one.trees.push_back(t);
  Eigen::MatrixXd probe(3, 2);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  probe << 0.1, 0, 0.9, 0, nan, 0;
  const auto p = one.predict_proba(probe);
  CHECK(p(0) == logistic(0.4 - 0.2));
  CHECK(p(1) == logistic(0.4 + 0.3));
  CHECK(p(2) == p(1));  // missing follows default_left = false, like its right-side twin
  CHECK_THROWS_AS(one.predict_margin(Eigen::MatrixXd::Zero(2, 3)), ShapeError);
}

TEST_CASE("missing values are routed like the twin row on the default side") {
  auto spec = fixture::clinical_spec(600, 21, 0.1);
  spec.missing_rate = 0.2;
  const auto d = generate_synthetic(spec);
  const auto r = train(d, ConstraintVector::none(*d.schema), one_cell(0.3, 30, 3), 2);
  const auto x = model_matrix(r.model, d);
  for (const auto& tree : r.model.trees) {
    for (Eigen::Index i = 0; i < 40; ++i) {
      // The twin fills each missing cell on its default side; rows whose path
      // tests the same missing column twice have no single such twin.
      Eigen::RowVectorXd row = x.row(i);
      std::set<int> filled;
      bool ambiguous = false;
      for (int n = 0; tree.nodes[static_cast<std::size_t>(n)].left >= 0 && !ambiguous;) {
        const auto& node = tree.nodes[static_cast<std::size_t>(n)];
        if (std::isnan(x(i, node.feature))) {
          ambiguous = !filled.insert(node.feature).second;
          row(node.feature) = node.default_left ? node.threshold - 1 : node.threshold + 1;
        }
        n = row(node.feature) < node.threshold ? node.left : node.right;
      }
      if (!ambiguous) CHECK(tree.predict(row) == tree.predict(x.row(i)));
    }
  }
}

TEST_CASE("train: determinism, serialization and single-cell grid") {
  const auto d = generate_synthetic(fixture::clinical_spec(400, 8, 0.15));
  const auto c = ConstraintVector::from_map(*d.schema, {{"stage", 1}, {"response", -1}});
  HyperGrid grid = one_cell(0.1, 40, 2);
  grid.max_depths = {2, 3};
  const auto a = train(d, c, grid, 17);
  const auto b = train(d, c, grid, 17);
  CHECK(a.model.to_json().dump() == b.model.to_json().dump());
  CHECK(a.cv.to_json() == b.cv.to_json());

  fixture::TempDir tmp;
  a.model.save(tmp / "m.json");
  const auto loaded = TreeEnsemble::load(tmp / "m.json");
  CHECK(loaded.to_json().dump() == a.model.to_json().dump());
  CHECK(predict_margin(loaded, d) == predict_margin(a.model, d));

  const auto single = train(d, c, one_cell(0.3, 25, 3), 17);
  CHECK(single.cv.cells.size() == 1);
  FeatureEncoder enc(*d.schema);
  const auto direct = fit_ensemble(enc.encode(d), d.labels, column_directions(enc, c), {0.3, 25, 3});
  CHECK(single.model.to_json()["trees"] == direct.to_json()["trees"]);

  auto other = generate_synthetic(fixture::clinical_spec(100, 1));
  auto renamed = std::make_shared<FeatureSchema>(FeatureSchema({{"z", FeatureKind::kOrdinal, {}, {}, true}}, "label", "row_id"));
  Dataset wrong;
  wrong.schema = renamed;
  wrong.cells = Eigen::MatrixXd::Zero(3, 1);
  wrong.labels = Eigen::VectorXi::Zero(3);
  wrong.row_ids = {"a", "b", "c"};
  CHECK_THROWS_AS(predict_proba(a.model, wrong), ShapeError);
}

TEST_CASE("cv report is consistent with its stored fold predictions") {
  const auto d = generate_synthetic(fixture::clinical_spec(500, 31, 0.2));
  HyperGrid grid;
  grid.learning_rates = {0.1, 0.3};
  grid.num_rounds = {20, 50};
  grid.max_depths = {2, 3};
  grid.folds = 4;
  const auto r = train(d, ConstraintVector::none(*d.schema), grid, 5);
  REQUIRE(r.cv.cells.size() == 8);
  const auto& best = r.cv.cells[static_cast<std::size_t>(r.cv.best)];
  double mean = 0;
  for (int f = 0; f < grid.folds; ++f) {
    std::vector<Eigen::Index> rows;
    for (std::size_t i = 0; i < r.cv.fold_of_row.size(); ++i)
      if (r.cv.fold_of_row[i] == f) rows.push_back(static_cast<Eigen::Index>(i));
    Eigen::VectorXd s(static_cast<Eigen::Index>(rows.size()));
    Eigen::VectorXi y(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t k = 0; k < rows.size(); ++k) {
      s(static_cast<Eigen::Index>(k)) = r.cv.best_oof_predictions(rows[k]);
      y(static_cast<Eigen::Index>(k)) = d.labels(rows[k]);
    }
    const double auc = oracle::auc(s, y);
    CHECK(std::abs(auc - best.fold_auc[static_cast<std::size_t>(f)]) <= 1e-12);
    mean += auc / grid.folds;
  }
  CHECK(std::abs(mean - best.mean_auc) <= 1e-12);
  for (const auto& cell : r.cv.cells) CHECK(cell.mean_auc <= best.mean_auc);
  CHECK(r.model.learning_rate == best.learning_rate);
  CHECK(static_cast<int>(r.model.trees.size()) == best.rounds);
}

TEST_CASE("grid ties prefer lower learning rate, fewer rounds, shallower trees") {
  // Two-valued feature equal to the label: every cell scores AUC 1 on every fold.
  const Eigen::Index n = 60;
  auto schema = std::make_shared<const FeatureSchema>(std::vector<FeatureSpec>{{"x", FeatureKind::kOrdinal, {}, {}, true}}, "y");
  Dataset d;
  d.schema = schema;
  d.cells.resize(n, 1);
  d.labels.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    d.labels(i) = i >= n / 2;
    d.cells(i, 0) = d.labels(i);
    d.row_ids.push_back("r" + std::to_string(i));
  }
  HyperGrid grid;
  grid.learning_rates = {0.5, 0.1};
  grid.num_rounds = {30, 10};
  grid.max_depths = {3, 2};
  grid.folds = 3;
  const auto r = train(d, ConstraintVector::none(*schema), grid, 1);
  const auto& best = r.cv.cells[static_cast<std::size_t>(r.cv.best)];
  CHECK(best.mean_auc == 1.0);
  CHECK(best.learning_rate == 0.1);
  CHECK(best.rounds == 10);
  CHECK(best.max_depth == 2);
}

TEST_CASE("stratified folds balance classes and reject degenerate requests") {
  std::mt19937_64 rng(4);
  const auto y = random_labels(103, rng);
  const auto folds = stratified_folds(y, 5, 9);
  for (int cls = 0; cls < 2; ++cls) {
    std::vector<int> count(5, 0);
    for (Eigen::Index i = 0; i < y.size(); ++i)
      if (y(i) == cls) count[static_cast<std::size_t>(folds[static_cast<std::size_t>(i)])]++;
    CHECK(*std::max_element(count.begin(), count.end()) - *std::min_element(count.begin(), count.end()) <= 1);
  }
  CHECK(stratified_folds(y, 5, 9) == folds);
  Eigen::VectorXi few(10);
  few << 1, 1, 0, 0, 0, 0, 0, 0, 0, 0;
  CHECK_THROWS_AS(stratified_folds(few, 5, 1), TrainingError);
}

TEST_CASE("a constraint on a never-split column changes nothing") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0, 1);
  Eigen::MatrixXd x(200, 2);
  Eigen::VectorXi y(200);
  for (int i = 0; i < 200; ++i) {
    x(i, 0) = u(rng);
    x(i, 1) = 1.0;  // constant, so it can never be split on
    y(i) = u(rng) < x(i, 0);
  }
  const std::vector<int> free{0, 0}, constrained{0, 1};
  const auto a = fit_ensemble(x, y, free, {0.1, 30, 3});
  const auto b = fit_ensemble(x, y, constrained, {0.1, 30, 3});
  CHECK(a.predict_margin(x) == b.predict_margin(x));
}

TEST_CASE("hyper grid validation and JSON") {
  HyperGrid g;
  CHECK(g.learning_rates.size() * g.num_rounds.size() * g.max_depths.size() == 48);
  CHECK(HyperGrid::from_json(g.to_json()).to_json() == g.to_json());
  g.learning_rates.clear();
  CHECK_THROWS(g.validate());
}
