#include "monoalign/explain.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "monoalign/common.hpp"
#include "monoalign/csv.hpp"

namespace monoalign {

namespace {

// One entry of the unique feature path used by the polynomial-time recursion.
struct PathElement {
  int feature = -1;
  double zero_fraction = 0;
  double one_fraction = 0;
  double weight = 0;
};

void extend_path(PathElement* path, int depth, double zero_fraction, double one_fraction, int feature) {
  path[depth] = {feature, zero_fraction, one_fraction, depth == 0 ? 1.0 : 0.0};
  for (int i = depth - 1; i >= 0; --i) {
    path[i + 1].weight += one_fraction * path[i].weight * (i + 1) / static_cast<double>(depth + 1);
    path[i].weight = zero_fraction * path[i].weight * (depth - i) / static_cast<double>(depth + 1);
  }
}

void unwind_path(PathElement* path, int depth, int index) {
  const double one = path[index].one_fraction;
  const double zero = path[index].zero_fraction;
  double next = path[depth].weight;
  for (int i = depth - 1; i >= 0; --i) {
    if (one != 0) {
      const double tmp = path[i].weight;
      path[i].weight = next * (depth + 1) / ((i + 1) * one);
      next = tmp - path[i].weight * zero * (depth - i) / static_cast<double>(depth + 1);
    } else {
      path[i].weight = path[i].weight * (depth + 1) / (zero * (depth - i));
    }
  }
  for (int i = index; i < depth; ++i) {
    path[i].feature = path[i + 1].feature;
    path[i].zero_fraction = path[i + 1].zero_fraction;
    path[i].one_fraction = path[i + 1].one_fraction;
  }
}

double unwound_sum(const PathElement* path, int depth, int index) {
  const double one = path[index].one_fraction;
  const double zero = path[index].zero_fraction;
  double next = path[depth].weight;
  double total = 0;
  for (int i = depth - 1; i >= 0; --i) {
    if (one != 0) {
      const double tmp = next * (depth + 1) / ((i + 1) * one);
      total += tmp;
      next = path[i].weight - tmp * zero * (depth - i) / static_cast<double>(depth + 1);
    } else if (zero != 0) {
      total += path[i].weight / zero / ((depth - i) / static_cast<double>(depth + 1));
    }
  }
  return total;
}

struct ShapContext {
  const Tree& tree;
  const Eigen::Ref<const Eigen::RowVectorXd>& row;
  Eigen::Ref<Eigen::RowVectorXd>& phi;
};

void recurse(ShapContext& ctx, int node_id, int depth, PathElement* parent_path,
             double zero_fraction, double one_fraction, int feature) {
  const auto& node = ctx.tree.nodes[static_cast<std::size_t>(node_id)];
  PathElement* path = parent_path + depth + 1;
  std::copy(parent_path, parent_path + depth + 1, path);
  extend_path(path, depth, zero_fraction, one_fraction, feature);

  if (node.is_leaf()) {
    for (int i = 1; i <= depth; ++i) {
      const double w = unwound_sum(path, depth, i);
      const auto& el = path[i];
      ctx.phi(el.feature) += w * (el.one_fraction - el.zero_fraction) * node.weight;
    }
    return;
  }

  const double v = ctx.row(node.feature);
  const int hot = std::isnan(v) ? (node.default_left ? node.left : node.right)
                                : (v < node.threshold ? node.left : node.right);
  const int cold = hot == node.left ? node.right : node.left;
  const double cover = node.cover;
  const double hot_zero = cover > 0 ? ctx.tree.nodes[static_cast<std::size_t>(hot)].cover / cover : 0.0;
  const double cold_zero = cover > 0 ? ctx.tree.nodes[static_cast<std::size_t>(cold)].cover / cover : 0.0;
  double incoming_zero = 1;
  double incoming_one = 1;

  // A feature already on the path is unwound and re-entered with merged fractions.
  int index = 0;
  for (; index <= depth; ++index)
    if (path[index].feature == node.feature) break;
  if (index != depth + 1) {
    incoming_zero = path[index].zero_fraction;
    incoming_one = path[index].one_fraction;
    unwind_path(path, depth, index);
    depth -= 1;
  }

  recurse(ctx, hot, depth + 1, path, hot_zero * incoming_zero, incoming_one, node.feature);
  recurse(ctx, cold, depth + 1, path, cold_zero * incoming_zero, 0.0, node.feature);
}

double node_expectation(const Tree& t, int id) {
  const auto& node = t.nodes[static_cast<std::size_t>(id)];
  if (node.is_leaf()) return node.weight;
  const auto& l = t.nodes[static_cast<std::size_t>(node.left)];
  const auto& r = t.nodes[static_cast<std::size_t>(node.right)];
  const double c = l.cover + r.cover;
  if (c <= 0) return 0.5 * (node_expectation(t, node.left) + node_expectation(t, node.right));
  return (l.cover * node_expectation(t, node.left) + r.cover * node_expectation(t, node.right)) / c;
}

}  // namespace

double expected_value(const Tree& tree) {
  return tree.nodes.empty() ? 0.0 : node_expectation(tree, 0);
}

void tree_shap_row(const Tree& tree, const Eigen::Ref<const Eigen::RowVectorXd>& row,
                   Eigen::Ref<Eigen::RowVectorXd> phi) {
  if (tree.nodes.empty()) return;
  phi(phi.size() - 1) += expected_value(tree);
  const int max_depth = tree.depth() + 2;
  std::vector<PathElement> storage(static_cast<std::size_t>(max_depth * (max_depth + 1) / 2));
  ShapContext ctx{tree, row, phi};
  recurse(ctx, 0, 0, storage.data(), 1.0, 1.0, -1);
}

ShapMatrix tree_shap(const TreeEnsemble& model, const Eigen::MatrixXd& x, std::vector<std::string> row_ids) {
  if (x.cols() != model.width()) throw ShapeError("tree_shap: column count does not match model");
  if (row_ids.empty()) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) row_ids.push_back(std::to_string(i));
  } else if (static_cast<Eigen::Index>(row_ids.size()) != x.rows()) {
    throw ShapeError("tree_shap: row id count does not match rows");
  }
  ShapMatrix s;
  s.feature_names = model.feature_names;
  s.row_ids = std::move(row_ids);
  s.model_fingerprint = model_fingerprint(model);
  const Eigen::Index m = x.cols();
  s.values = Eigen::MatrixXd::Zero(x.rows(), m + 1);

  double baseline = model.base_score;
  for (const auto& t : model.trees) baseline += expected_value(t);

  Eigen::RowVectorXd phi(m + 1);
  Eigen::RowVectorXd row(m);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    phi.setZero();
    row = x.row(i);
    for (const auto& t : model.trees) tree_shap_row(t, row, phi);
    s.values.row(i).head(m) = phi.head(m);
    s.values(i, m) = baseline;
  }
  return s;
}

ShapMatrix tree_shap(const TreeEnsemble& model, const Dataset& d) {
  return tree_shap(model, model_matrix(model, d), d.row_ids);
}

std::string model_fingerprint(const TreeEnsemble& model) {
  return hex64(fnv1a64(model.to_json().dump()));
}

void ShapMatrix::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  std::vector<std::string> rec{"row_id"};
  rec.insert(rec.end(), feature_names.begin(), feature_names.end());
  rec.push_back("baseline");
  write_csv_row(out, rec);
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    rec.assign(1, row_ids[static_cast<std::size_t>(i)]);
    for (Eigen::Index j = 0; j < values.cols(); ++j) rec.push_back(format_double(values(i, j)));
    write_csv_row(out, rec);
  }
}

// ---------------------------------------------------------------- bar plots

std::string BarEntry::direction() const {
  if (attribution > 0) return "positive";
  if (attribution < 0) return "negative";
  return "zero";
}

std::string display_value(const FeatureSpec& spec, double cell) {
  if (spec.kind == FeatureKind::kCategorical) return spec.categories.at(static_cast<std::size_t>(cell));
  if (std::isnan(cell)) return "missing";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", cell);
  return buf;
}

namespace {

Eigen::Index find_row(const std::vector<std::string>& ids, const std::string& id, const char* what) {
  auto it = std::find(ids.begin(), ids.end(), id);
  if (it == ids.end()) throw ShapeError(std::string("row '") + id + "' not found in " + what);
  return static_cast<Eigen::Index>(it - ids.begin());
}

nlohmann::json entries_json(const std::vector<BarEntry>& entries) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& e : entries)
    arr.push_back({{"feature", e.feature}, {"column", e.column}, {"value", e.display_value},
                   {"attribution", e.attribution}, {"direction", e.direction()}});
  return arr;
}

std::vector<BarEntry> entries_from(const nlohmann::json& arr) {
  std::vector<BarEntry> out;
  for (const auto& e : arr)
    out.push_back({e.at("column").get<std::string>(), e.at("feature").get<std::string>(),
                   e.at("value").get<std::string>(), e.at("attribution").get<double>()});
  return out;
}

}  // namespace

std::vector<BarEntry> top_k_entries(const ShapMatrix& s, Eigen::Index row, const Dataset& rows,
                                    std::size_t k) {
  const auto m = static_cast<std::size_t>(s.features());
  if (k > m) throw ShapeError("top_k: k=" + std::to_string(k) + " exceeds " + std::to_string(m) + " features");
  const Eigen::Index data_row = find_row(rows.row_ids, s.row_ids[static_cast<std::size_t>(row)], "dataset");
  const FeatureEncoder enc(*rows.schema);
  if (enc.width() != s.features()) throw ShapeError("top_k: dataset schema does not match attributions");

  std::vector<std::size_t> order(m);
  for (std::size_t j = 0; j < m; ++j) order[j] = j;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double wa = std::abs(s.values(row, static_cast<Eigen::Index>(a)));
    const double wb = std::abs(s.values(row, static_cast<Eigen::Index>(b)));
    if (wa != wb) return wa > wb;
    return s.feature_names[a] < s.feature_names[b];
  });

  std::vector<BarEntry> out;
  for (std::size_t r = 0; r < k; ++r) {
    const auto j = order[r];
    const auto& col = enc.columns()[j];
    const auto& spec = rows.schema->feature(col.source);
    out.push_back({s.feature_names[j], spec.name,
                   display_value(spec, rows.cells(data_row, static_cast<Eigen::Index>(col.source))),
                   s.values(row, static_cast<Eigen::Index>(j))});
  }
  return out;
}

BarPlotPayload top_k_payload(const ShapMatrix& a, const ShapMatrix& b, const Dataset& rows,
                             const std::string& row_id, std::size_t k, std::uint64_t side_seed) {
  if (a.feature_names != b.feature_names) throw ShapeError("top_k_payload: models have different columns");
  BarPlotPayload p;
  p.row_id = row_id;
  p.first = top_k_entries(a, find_row(a.row_ids, row_id, "model A attributions"), rows, k);
  p.second = top_k_entries(b, find_row(b.row_ids, row_id, "model B attributions"), rows, k);
  p.first_on_left = first_on_left(side_seed);
  return p;
}

bool first_on_left(std::uint64_t side_seed) {
  return (combine_seed(side_seed, 0x51deULL) >> 63) != 0;
}

nlohmann::json BarPlotPayload::to_json() const {
  return {{"row_id", row_id}, {"first", entries_json(first)}, {"second", entries_json(second)},
          {"first_on_left", first_on_left}};
}

BarPlotPayload BarPlotPayload::from_json(const nlohmann::json& j) {
  BarPlotPayload p;
  p.row_id = j.at("row_id").get<std::string>();
  p.first = entries_from(j.at("first"));
  p.second = entries_from(j.at("second"));
  p.first_on_left = j.at("first_on_left").get<bool>();
  return p;
}

nlohmann::json BarPlotPayload::blinded_json() const {
  return {{"left", entries_json(left())}, {"right", entries_json(right())}};
}

}  // namespace monoalign
