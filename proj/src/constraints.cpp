#include "monoalign/constraints.hpp"

#include <fstream>

#include "monoalign/common.hpp"

namespace monoalign {

std::string to_string(ConstraintProvenance p) {
  switch (p) {
    case ConstraintProvenance::kSurveyMajority:
      return "survey-majority";
    case ConstraintProvenance::kManual:
      return "manual";
    case ConstraintProvenance::kOppositeFlip:
      return "opposite-flip";
  }
  return "manual";
}

namespace {

ConstraintProvenance provenance_from(const std::string& s) {
  if (s == "survey-majority") return ConstraintProvenance::kSurveyMajority;
  if (s == "manual") return ConstraintProvenance::kManual;
  if (s == "opposite-flip") return ConstraintProvenance::kOppositeFlip;
  throw DataError("unknown constraint provenance '" + s + "'");
}

}  // namespace

ConstraintVector ConstraintVector::none(const FeatureSchema& schema) {
  ConstraintVector c;
  c.directions.assign(schema.size(), 0);
  return c;
}

ConstraintVector ConstraintVector::from_map(const FeatureSchema& schema,
                                            const std::vector<std::pair<std::string, int>>& named,
                                            ConstraintProvenance provenance) {
  auto c = none(schema);
  c.provenance = provenance;
  for (const auto& [name, dir] : named) c.directions[schema.index_of(name)] = dir;
  c.validate(schema);
  return c;
}

bool ConstraintVector::any() const {
  for (int d : directions)
    if (d != 0) return true;
  return false;
}

void ConstraintVector::validate(const FeatureSchema& schema) const {
  if (directions.size() != schema.size())
    throw DataError("constraint vector has " + std::to_string(directions.size()) +
                    " entries for " + std::to_string(schema.size()) + " features");
  for (std::size_t i = 0; i < directions.size(); ++i) {
    const int d = directions[i];
    if (d < -1 || d > 1) throw DataError("constraint direction must be -1, 0 or +1");
    if (d != 0 && !schema.feature(i).monotone_eligible)
      throw DataError("feature '" + schema.feature(i).name + "' is not monotone_eligible");
  }
}

nlohmann::json ConstraintVector::to_json(const FeatureSchema& schema) const {
  nlohmann::json dirs = nlohmann::json::object();
  for (std::size_t i = 0; i < directions.size(); ++i) dirs[schema.feature(i).name] = directions[i];
  return {{"provenance", to_string(provenance)},
          {"directions", dirs},
          {"flagged_for_review", flagged_for_review}};
}

ConstraintVector ConstraintVector::from_json(const nlohmann::json& j, const FeatureSchema& schema) {
  auto c = none(schema);
  try {
    c.provenance = provenance_from(j.value("provenance", std::string("manual")));
    for (const auto& [name, dir] : j.at("directions").items())
      c.directions[schema.index_of(name)] = dir.get<int>();
    if (j.contains("flagged_for_review"))
      c.flagged_for_review = j["flagged_for_review"].get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("constraints: ") + e.what());
  }
  c.validate(schema);
  return c;
}

void ConstraintVector::save(const std::filesystem::path& path, const FeatureSchema& schema) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << to_json(schema).dump(2) << "\n";
}

ConstraintVector ConstraintVector::load(const std::filesystem::path& path,
                                        const FeatureSchema& schema) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open constraints " + path.string());
  try {
    return from_json(nlohmann::json::parse(in), schema);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError("constraints " + path.string() + ": " + e.what());
  }
}

ConstraintVector opposite_constraints(const ConstraintVector& c) {
  ConstraintVector out = c;
  for (int& d : out.directions) d = -d;
  out.provenance = ConstraintProvenance::kOppositeFlip;
  return out;
}

}  // namespace monoalign
