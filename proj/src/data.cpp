#include "monoalign/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "monoalign/common.hpp"
#include "monoalign/csv.hpp"

namespace monoalign {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

const char* kind_name(FeatureKind k) {
  return k == FeatureKind::kOrdinal ? "ordinal" : "categorical";
}

std::string format_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::optional<double> parse_number(std::string_view s) {
  double v = 0;
  auto first = s.data();
  auto last = s.data() + s.size();
  while (first != last && *first == ' ') ++first;
  while (last != first && *(last - 1) == ' ') --last;
  if (first == last) return std::nullopt;
  if (*first == '+') ++first;
  auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last || !std::isfinite(v)) return std::nullopt;
  return v;
}

}  // namespace

std::string hex64(std::uint64_t v) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = digits[v & 0xf];
    v >>= 4;
  }
  return out;
}

// ---------------------------------------------------------------- schema

FeatureSchema::FeatureSchema(std::vector<FeatureSpec> features, std::string label_column,
                             std::string row_id_column)
    : features_(std::move(features)),
      label_column_(std::move(label_column)),
      row_id_column_(std::move(row_id_column)) {
  validate();
}

void FeatureSchema::validate() {
  if (label_column_.empty()) throw DataError("schema: label column name is empty");
  std::set<std::string> names;
  for (auto& f : features_) {
    if (f.name.empty()) throw DataError("schema: feature with empty name");
    if (!names.insert(f.name).second) throw DataError("schema: duplicate feature '" + f.name + "'");
    if (f.name == label_column_ || f.name == row_id_column_)
      throw DataError("schema: feature '" + f.name + "' collides with label/row id column");
    if (f.kind == FeatureKind::kOrdinal) {
      for (std::size_t i = 1; i < f.levels.size(); ++i) {
        if (!(f.levels[i - 1] < f.levels[i]))
          throw DataError("schema: levels of '" + f.name + "' are not strictly increasing");
      }
      if (!f.categories.empty())
        throw DataError("schema: ordinal feature '" + f.name + "' declares categories");
    } else {
      if (f.monotone_eligible)
        throw DataError("schema: categorical feature '" + f.name + "' cannot be monotone_eligible");
      if (f.categories.empty())
        throw DataError("schema: categorical feature '" + f.name + "' declares no categories");
      std::set<std::string> cats(f.categories.begin(), f.categories.end());
      if (cats.size() != f.categories.size())
        throw DataError("schema: duplicate category in '" + f.name + "'");
      if (!cats.count(kMissingCategory)) f.categories.emplace_back(kMissingCategory);
    }
  }
}

std::optional<std::size_t> FeatureSchema::find(std::string_view name) const {
  for (std::size_t i = 0; i < features_.size(); ++i)
    if (features_[i].name == name) return i;
  return std::nullopt;
}

std::size_t FeatureSchema::index_of(std::string_view name) const {
  if (auto i = find(name)) return *i;
  throw DataError("unknown feature '" + std::string(name) + "'");
}

std::string FeatureSchema::fingerprint() const {
  std::string canon = "label=" + label_column_ + ";";
  for (const auto& f : features_) {
    canon += f.name + ":" + kind_name(f.kind) + "[";
    for (double v : f.levels) canon += format_number(v) + ",";
    for (const auto& c : f.categories) canon += c + ",";
    canon += "]";
  }
  return hex64(fnv1a64(canon));
}

nlohmann::json FeatureSchema::to_json() const {
  nlohmann::json feats = nlohmann::json::array();
  for (const auto& f : features_) {
    nlohmann::json jf{{"name", f.name}, {"kind", kind_name(f.kind)},
                      {"monotone_eligible", f.monotone_eligible}};
    if (f.kind == FeatureKind::kOrdinal) {
      if (!f.levels.empty()) jf["values"] = f.levels;
    } else {
      jf["values"] = f.categories;
    }
    feats.push_back(std::move(jf));
  }
  nlohmann::json j{{"label", label_column_}, {"features", feats}};
  if (!row_id_column_.empty()) j["row_id"] = row_id_column_;
  return j;
}

FeatureSchema FeatureSchema::from_json(const nlohmann::json& j) {
  try {
    std::vector<FeatureSpec> feats;
    for (const auto& jf : j.at("features")) {
      FeatureSpec f;
      f.name = jf.at("name").get<std::string>();
      const auto kind = jf.at("kind").get<std::string>();
      if (kind == "ordinal" || kind == "ordinal-numeric") {
        f.kind = FeatureKind::kOrdinal;
        if (jf.contains("values")) f.levels = jf["values"].get<std::vector<double>>();
      } else if (kind == "categorical") {
        f.kind = FeatureKind::kCategorical;
        for (const auto& v : jf.at("values"))
          f.categories.push_back(v.is_string() ? v.get<std::string>() : v.dump());
      } else {
        throw DataError("schema: unknown kind '" + kind + "' for '" + f.name + "'");
      }
      f.monotone_eligible = jf.value("monotone_eligible", false);
      feats.push_back(std::move(f));
    }
    return FeatureSchema(std::move(feats), j.at("label").get<std::string>(),
                         j.value("row_id", std::string()));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("schema: ") + e.what());
  }
}

FeatureSchema FeatureSchema::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open schema " + path.string());
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError("schema " + path.string() + ": " + e.what());
  }
}

void FeatureSchema::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << to_json().dump(2) << "\n";
}

// ---------------------------------------------------------------- dataset

Dataset Dataset::subset(std::span<const Eigen::Index> indices) const {
  Dataset out;
  out.schema = schema;
  out.cells.resize(static_cast<Eigen::Index>(indices.size()), cells.cols());
  out.labels.resize(static_cast<Eigen::Index>(indices.size()));
  out.row_ids.reserve(indices.size());
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const auto i = indices[k];
    out.cells.row(static_cast<Eigen::Index>(k)) = cells.row(i);
    out.labels(static_cast<Eigen::Index>(k)) = labels(i);
    out.row_ids.push_back(row_ids[static_cast<std::size_t>(i)]);
  }
  return out;
}

void Dataset::validate(bool require_both_classes) const {
  if (!schema) throw DataError("dataset has no schema");
  if (cells.cols() != static_cast<Eigen::Index>(schema->size()))
    throw DataError("dataset column count does not match schema");
  if (cells.rows() != labels.size() || static_cast<std::size_t>(labels.size()) != row_ids.size())
    throw DataError("dataset rows, labels and row ids differ in length");
  for (Eigen::Index i = 0; i < labels.size(); ++i)
    if (labels(i) != 0 && labels(i) != 1) throw DataError("label not in {0,1}");
  for (std::size_t j = 0; j < schema->size(); ++j) {
    const auto& f = schema->feature(j);
    if (f.kind != FeatureKind::kCategorical) continue;
    const auto ncat = static_cast<double>(f.categories.size());
    for (Eigen::Index i = 0; i < cells.rows(); ++i) {
      const double v = cells(i, static_cast<Eigen::Index>(j));
      if (!(v >= 0 && v < ncat) || v != std::floor(v))
        throw DataError("categorical cell out of range in '" + f.name + "'");
    }
  }
  if (require_both_classes && (positives() == 0 || negatives() == 0))
    throw DataError("dataset needs at least one row of each label class");
}

Dataset parse_dataset(std::string_view text, std::shared_ptr<const FeatureSchema> schema,
                      std::string_view source) {
  const std::string where(source);
  auto table = parse_csv(text);
  if (table.empty()) throw DataError(where + ": empty file");
  const auto& header = table.front();

  std::vector<int> feature_col(schema->size(), -1);
  int label_col = -1;
  int id_col = -1;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const auto& name = header[c];
    if (name == schema->label_column()) {
      label_col = static_cast<int>(c);
    } else if (!schema->row_id_column().empty() && name == schema->row_id_column()) {
      id_col = static_cast<int>(c);
    } else if (auto f = schema->find(name)) {
      feature_col[*f] = static_cast<int>(c);
    } else {
      throw DataError(where + ": unknown column '" + name + "'");
    }
  }
  if (label_col < 0) throw DataError(where + ": missing label column '" + schema->label_column() + "'");
  for (std::size_t f = 0; f < feature_col.size(); ++f)
    if (feature_col[f] < 0) throw DataError(where + ": missing column '" + schema->feature(f).name + "'");

  const auto nrows = static_cast<Eigen::Index>(table.size() - 1);
  if (nrows == 0) throw DataError(where + ": empty file (header only)");

  Dataset d;
  d.schema = schema;
  d.cells.resize(nrows, static_cast<Eigen::Index>(schema->size()));
  d.labels.resize(nrows);
  d.row_ids.reserve(static_cast<std::size_t>(nrows));

  for (Eigen::Index r = 0; r < nrows; ++r) {
    const auto& rec = table[static_cast<std::size_t>(r) + 1];
    const auto line = std::to_string(r + 2);
    if (rec.size() != header.size())
      throw DataError(where + ":" + line + ": expected " + std::to_string(header.size()) +
                      " fields, got " + std::to_string(rec.size()));
    const auto& lab = rec[static_cast<std::size_t>(label_col)];
    if (lab == "1" || lab == "1.0") {
      d.labels(r) = 1;
    } else if (lab == "0" || lab == "0.0") {
      d.labels(r) = 0;
    } else {
      throw DataError(where + ":" + line + ": label '" + lab + "' not in {0,1}");
    }
    d.row_ids.push_back(id_col >= 0 ? rec[static_cast<std::size_t>(id_col)]
                                    : "r" + std::to_string(r));

    for (std::size_t f = 0; f < schema->size(); ++f) {
      const auto& spec = schema->feature(f);
      const auto& cell = rec[static_cast<std::size_t>(feature_col[f])];
      double& out = d.cells(r, static_cast<Eigen::Index>(f));
      if (spec.kind == FeatureKind::kCategorical) {
        const std::string key = cell.empty() ? kMissingCategory : cell;
        auto it = std::find(spec.categories.begin(), spec.categories.end(), key);
        if (it == spec.categories.end())
          throw DataError(where + ":" + line + ": undeclared category '" + cell + "' for '" +
                          spec.name + "'");
        out = static_cast<double>(it - spec.categories.begin());
      } else if (cell.empty()) {
        out = kNaN;
      } else {
        auto v = parse_number(cell);
        if (!v)
          throw DataError(where + ":" + line + ": unparseable value '" + cell + "' for '" +
                          spec.name + "'");
        if (!spec.levels.empty() &&
            !std::binary_search(spec.levels.begin(), spec.levels.end(), *v))
          throw DataError(where + ":" + line + ": value '" + cell + "' not declared for '" +
                          spec.name + "'");
        out = *v;
      }
    }
  }
  std::set<std::string> ids(d.row_ids.begin(), d.row_ids.end());
  if (ids.size() != d.row_ids.size()) throw DataError(where + ": duplicate row ids");
  d.validate(false);
  return d;
}

Dataset load_dataset(const std::filesystem::path& path,
                     std::shared_ptr<const FeatureSchema> schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open dataset " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_dataset(buf.str(), std::move(schema), path.string());
}

void save_dataset(const Dataset& d, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  const auto& schema = *d.schema;
  const std::string id_name = schema.row_id_column().empty() ? "" : schema.row_id_column();
  std::vector<std::string> header;
  if (!id_name.empty()) header.push_back(id_name);
  for (const auto& f : schema.features()) header.push_back(f.name);
  header.push_back(schema.label_column());
  write_csv_row(out, header);
  std::vector<std::string> rec;
  for (Eigen::Index r = 0; r < d.rows(); ++r) {
    rec.clear();
    if (!id_name.empty()) rec.push_back(d.row_ids[static_cast<std::size_t>(r)]);
    for (std::size_t f = 0; f < schema.size(); ++f) {
      const double v = d.cells(r, static_cast<Eigen::Index>(f));
      const auto& spec = schema.feature(f);
      if (spec.kind == FeatureKind::kCategorical) {
        const auto& cat = spec.categories[static_cast<std::size_t>(v)];
        rec.push_back(cat == kMissingCategory ? "" : cat);
      } else {
        rec.push_back(std::isnan(v) ? "" : format_number(v));
      }
    }
    rec.push_back(d.labels(r) ? "1" : "0");
    write_csv_row(out, rec);
  }
}

// ---------------------------------------------------------------- splitting

Split stratified_split(const Dataset& d, const SplitSpec& spec) {
  if (!(spec.test_fraction > 0 && spec.test_fraction < 1))
    throw DataError("test_fraction must lie in (0,1)");
  d.validate(true);
  const Eigen::Index n = d.rows();
  const auto total_test = static_cast<Eigen::Index>(
      std::ceil(static_cast<double>(n) * spec.test_fraction - 1e-9));
  if (total_test <= 0 || total_test >= n)
    throw DataError("test_fraction leaves an empty train or test partition");

  std::mt19937_64 rng(spec.seed);
  std::vector<Eigen::Index> test_idx;

  if (spec.stratify) {
    std::vector<Eigen::Index> by_class[2];
    for (Eigen::Index i = 0; i < n; ++i) by_class[d.labels(i)].push_back(i);
    for (int c = 0; c < 2; ++c)
      if (by_class[c].size() < 2)
        throw DataError("class " + std::to_string(c) + " has fewer than 2 rows; cannot stratify");
    // Floor of each class quota, then hand the leftover rows to the largest remainders.
    Eigen::Index quota[2];
    double rem[2];
    for (int c = 0; c < 2; ++c) {
      const double exact = static_cast<double>(by_class[c].size()) * spec.test_fraction;
      quota[c] = static_cast<Eigen::Index>(std::floor(exact));
      rem[c] = exact - static_cast<double>(quota[c]);
    }
    Eigen::Index left = total_test - quota[0] - quota[1];
    const int order[2] = {rem[1] > rem[0] ? 1 : 0, rem[1] > rem[0] ? 0 : 1};
    for (int k = 0; k < 2 && left > 0; ++k) {
      quota[order[k]] += 1;
      --left;
    }
    for (int c = 0; c < 2; ++c) {
      std::shuffle(by_class[c].begin(), by_class[c].end(), rng);
      test_idx.insert(test_idx.end(), by_class[c].begin(), by_class[c].begin() + quota[c]);
    }
  } else {
    std::vector<Eigen::Index> all(static_cast<std::size_t>(n));
    std::iota(all.begin(), all.end(), Eigen::Index{0});
    std::shuffle(all.begin(), all.end(), rng);
    test_idx.assign(all.begin(), all.begin() + total_test);
  }

  std::vector<char> in_test(static_cast<std::size_t>(n), 0);
  for (auto i : test_idx) in_test[static_cast<std::size_t>(i)] = 1;
  std::vector<Eigen::Index> train_idx;
  test_idx.clear();
  for (Eigen::Index i = 0; i < n; ++i)
    (in_test[static_cast<std::size_t>(i)] ? test_idx : train_idx).push_back(i);
  return {d.subset(train_idx), d.subset(test_idx)};
}

std::string membership_fingerprint(const std::vector<std::string>& row_ids) {
  std::vector<std::string> sorted = row_ids;
  std::sort(sorted.begin(), sorted.end());
  std::uint64_t h = 0;
  for (const auto& id : sorted) h = combine_seed(h, fnv1a64(id));
  return hex64(h);
}

Subsample subsample_train(const Dataset& train, Eigen::Index size, std::uint64_t seed) {
  if (size < 2) throw DataError("subsample size must be at least 2");
  if (size > train.rows())
    throw DataError("subsample size " + std::to_string(size) + " exceeds " +
                    std::to_string(train.rows()) + " train rows");
  if (train.positives() == 0 || train.negatives() == 0)
    throw DataError("train set lacks one label class");

  constexpr int kMaxAttempts = 1000;
  std::vector<Eigen::Index> pool(static_cast<std::size_t>(train.rows()));
  for (int attempt = 1; attempt <= kMaxAttempts; ++attempt) {
    std::iota(pool.begin(), pool.end(), Eigen::Index{0});
    std::mt19937_64 rng(combine_seed(seed, static_cast<std::uint64_t>(attempt)));
    // Partial Fisher-Yates: the first `size` slots are the sample.
    for (Eigen::Index i = 0; i < size; ++i) {
      std::uniform_int_distribution<Eigen::Index> pick(i, train.rows() - 1);
      std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(pick(rng))]);
    }
    std::vector<Eigen::Index> chosen(pool.begin(), pool.begin() + size);
    std::sort(chosen.begin(), chosen.end());
    Eigen::Index pos = 0;
    for (auto i : chosen) pos += train.labels(i);
    if (pos == 0 || pos == size) continue;
    Subsample out{train.subset(chosen), attempt, {}};
    out.fingerprint = membership_fingerprint(out.data.row_ids);
    return out;
  }
  throw DataError("could not draw a subsample containing both classes");
}

// ---------------------------------------------------------------- synthetic

double synthetic_probability(const SyntheticSpec& spec, std::span<const double> monotone_values) {
  double eta = spec.intercept;
  for (std::size_t j = 0; j < spec.monotone_features.size(); ++j) {
    const auto& m = spec.monotone_features[j];
    eta += m.direction * m.effect_size * (monotone_values[j] - 0.5);
  }
  return 1.0 / (1.0 + std::exp(-eta));
}

Dataset generate_synthetic(const SyntheticSpec& spec) {
  if (spec.n < 50) throw DataError("synthetic n must be at least 50");
  if (spec.levels < 2) throw DataError("synthetic levels must be at least 2");
  if (!(spec.label_noise >= 0 && spec.label_noise <= 1)) throw DataError("label_noise must be in [0,1]");
  if (!(spec.missing_rate >= 0 && spec.missing_rate < 1)) throw DataError("missing_rate must be in [0,1)");
  for (const auto& m : spec.monotone_features) {
    if (m.direction != -1 && m.direction != 1)
      throw DataError("synthetic direction for '" + m.name + "' must be -1 or +1");
    if (m.effect_size == 0) throw DataError("effect_size 0 with nonzero direction for '" + m.name + "'");
    if (m.effect_size < 0) throw DataError("effect_size must be positive for '" + m.name + "'");
  }

  std::vector<double> levels(static_cast<std::size_t>(spec.levels));
  for (int k = 0; k < spec.levels; ++k) levels[static_cast<std::size_t>(k)] = static_cast<double>(k) / (spec.levels - 1);

  std::vector<FeatureSpec> feats;
  for (const auto& m : spec.monotone_features)
    feats.push_back({m.name, FeatureKind::kOrdinal, levels, {}, true});
  for (int k = 0; k < spec.noise_features; ++k)
    feats.push_back({"noise_" + std::to_string(k + 1), FeatureKind::kOrdinal, levels, {}, true});
  for (int k = 0; k < spec.categorical_features; ++k)
    feats.push_back({"cat_" + std::to_string(k + 1), FeatureKind::kCategorical, {}, {"a", "b", "c"}, false});
  auto schema = std::make_shared<const FeatureSchema>(std::move(feats), "label", "row_id");

  const auto m = static_cast<Eigen::Index>(schema->size());
  const auto n_ord = static_cast<Eigen::Index>(spec.monotone_features.size()) + spec.noise_features;
  Dataset d;
  d.schema = schema;
  d.cells.resize(spec.n, m);
  d.labels.resize(spec.n);
  d.row_ids.reserve(static_cast<std::size_t>(spec.n));

  std::mt19937_64 rng(combine_seed(spec.seed, 0x5eedULL));
  std::uniform_int_distribution<int> level(0, spec.levels - 1);
  std::uniform_int_distribution<int> cat(0, 3);  // index 3 is "nan"
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> mono(spec.monotone_features.size());

  for (Eigen::Index i = 0; i < spec.n; ++i) {
    for (Eigen::Index j = 0; j < n_ord; ++j) d.cells(i, j) = levels[static_cast<std::size_t>(level(rng))];
    for (Eigen::Index j = n_ord; j < m; ++j) d.cells(i, j) = static_cast<double>(cat(rng));
    for (std::size_t j = 0; j < mono.size(); ++j) mono[j] = d.cells(i, static_cast<Eigen::Index>(j));
    const double p = synthetic_probability(spec, mono);
    int y = unif(rng) < p ? 1 : 0;
    if (unif(rng) < spec.label_noise) y = 1 - y;
    d.labels(i) = y;
    // Masking happens after the label draw, so missingness is uninformative.
    for (Eigen::Index j = 0; j < n_ord; ++j)
      if (spec.missing_rate > 0 && unif(rng) < spec.missing_rate) d.cells(i, j) = kNaN;
    d.row_ids.push_back("s" + std::to_string(i));
  }
  d.validate(false);
  return d;
}

// ---------------------------------------------------------------- encoding

FeatureEncoder::FeatureEncoder(const FeatureSchema& schema) : schema_(schema) {
  for (std::size_t f = 0; f < schema_.size(); ++f) {
    const auto& spec = schema_.feature(f);
    first_column_.push_back(static_cast<Eigen::Index>(columns_.size()));
    if (spec.kind == FeatureKind::kOrdinal) {
      columns_.push_back({spec.name, f, -1});
    } else {
      for (std::size_t c = 0; c < spec.categories.size(); ++c)
        columns_.push_back({spec.name + "=" + spec.categories[c], f, static_cast<int>(c)});
    }
  }
}

Eigen::Index FeatureEncoder::ordinal_column(std::size_t feature) const {
  if (schema_.feature(feature).kind != FeatureKind::kOrdinal)
    throw DataError("feature '" + schema_.feature(feature).name + "' is not ordinal");
  return first_column_[feature];
}

Eigen::MatrixXd FeatureEncoder::encode(const Eigen::MatrixXd& cells) const {
  if (cells.cols() != static_cast<Eigen::Index>(schema_.size()))
    throw ShapeError("encode: column count does not match schema");
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(cells.rows(), width());
  for (std::size_t f = 0; f < schema_.size(); ++f) {
    const auto col = static_cast<Eigen::Index>(f);
    const auto first = first_column_[f];
    if (schema_.feature(f).kind == FeatureKind::kOrdinal) {
      out.col(first) = cells.col(col);
    } else {
      for (Eigen::Index r = 0; r < cells.rows(); ++r)
        out(r, first + static_cast<Eigen::Index>(cells(r, col))) = 1.0;
    }
  }
  return out;
}

Eigen::MatrixXd FeatureEncoder::decode(const Eigen::MatrixXd& encoded) const {
  if (encoded.cols() != width()) throw ShapeError("decode: width mismatch");
  Eigen::MatrixXd cells(encoded.rows(), static_cast<Eigen::Index>(schema_.size()));
  for (std::size_t f = 0; f < schema_.size(); ++f) {
    const auto col = static_cast<Eigen::Index>(f);
    const auto first = first_column_[f];
    const auto& spec = schema_.feature(f);
    if (spec.kind == FeatureKind::kOrdinal) {
      cells.col(col) = encoded.col(first);
      continue;
    }
    const auto k = static_cast<Eigen::Index>(spec.categories.size());
    for (Eigen::Index r = 0; r < encoded.rows(); ++r) {
      auto block = encoded.row(r).segment(first, k);
      Eigen::Index hot = 0;
      if (block.sum() != 1.0 || block.maxCoeff(&hot) != 1.0)
        throw ShapeError("decode: row " + std::to_string(r) + " is not one-hot for '" + spec.name + "'");
      cells(r, col) = static_cast<double>(hot);
    }
  }
  return cells;
}

}  // namespace monoalign
