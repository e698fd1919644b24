#ifndef MONOALIGN_CONSTRAINTS_HPP
#define MONOALIGN_CONSTRAINTS_HPP

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "monoalign/data.hpp"

namespace monoalign {

enum class ConstraintProvenance { kSurveyMajority, kManual, kOppositeFlip };

std::string to_string(ConstraintProvenance p);

/// Per-feature monotone direction (-1, 0, +1) in schema order.
struct ConstraintVector {
  std::vector<int> directions;
  ConstraintProvenance provenance = ConstraintProvenance::kManual;
  // Features without a strict majority that deserve a manual look.
  std::vector<std::string> flagged_for_review;

  static ConstraintVector none(const FeatureSchema& schema);
  /// Builds a vector from name -> direction pairs; unnamed features stay 0.
  static ConstraintVector from_map(const FeatureSchema& schema,
                                   const std::vector<std::pair<std::string, int>>& named,
                                   ConstraintProvenance provenance = ConstraintProvenance::kManual);

  bool any() const;
  /// Throws DataError on a length mismatch, a value outside {-1,0,1}, or a
  /// nonzero direction on a feature that is not monotone_eligible.
  void validate(const FeatureSchema& schema) const;

  nlohmann::json to_json(const FeatureSchema& schema) const;
  static ConstraintVector from_json(const nlohmann::json& j, const FeatureSchema& schema);
  void save(const std::filesystem::path& path, const FeatureSchema& schema) const;
  static ConstraintVector load(const std::filesystem::path& path, const FeatureSchema& schema);

  bool operator==(const ConstraintVector& o) const {
    return directions == o.directions && provenance == o.provenance;
  }
};

/// Negates every nonzero direction.
ConstraintVector opposite_constraints(const ConstraintVector& c);

}  // namespace monoalign

#endif  // MONOALIGN_CONSTRAINTS_HPP
