#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace fisheyedist {

/// Occlusion status of a pair: both visible, one occluded, both occluded.
enum class PairCategory { VV, VO, OO };

std::string_view to_string(PairCategory c);
/// Accepts "VV"/"VO"/"OO" and the dashed forms "V-V"/"V-O"/"O-O".
std::optional<PairCategory> parse_category(std::string_view s);

inline PairCategory category_of(bool occluded_a, bool occluded_b) {
  if (occluded_a && occluded_b) return PairCategory::OO;
  if (occluded_a || occluded_b) return PairCategory::VO;
  return PairCategory::VV;
}

/// One ground-truth row: two person ids, their floor distance in inches
/// and the pair category.
struct GroundTruthPair {
  std::string id_a;
  std::string id_b;
  double distance_in = 0.0;
  PairCategory category = PairCategory::VV;

  friend bool operator==(const GroundTruthPair&, const GroundTruthPair&) = default;
};

}  // namespace fisheyedist
