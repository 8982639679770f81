#pragma once

#include <array>
#include <cstdint>

#include "fisheyedist/dataset_io.hpp"
#include "fisheyedist/usm_camera.hpp"

namespace fisheyedist::fixtures {

/// Target statistics for one annotation set. `cells[c][b]` counts pairs of
/// category c (VV, VO, OO) in distance bucket b (<72, 72-144, >144 in).
struct SetTargets {
  std::array<std::array<int, 3>, 3> cells{};
  int distinct_distances = 0;
  double min_distance_in = 11.63;
  double max_distance_in = 701.96;
};

/// Fixed-height set: 73 pairs, 35/32/6 by category, buckets 25/15/33, all distances distinct.
SetTargets fixed_height_targets();
/// Varying-height set: 256 pairs, 100/126/30 by category, buckets 45/73/138, 67 distinct distances.
SetTargets varying_height_targets();

struct AnnotationSet {
  DetectionsFile detections;
  GroundTruthFile ground_truth;
};

/// Floor marks are shared by every image; people of the given heights stand
/// on them, some with the lower half of the body hidden. Pairs are drawn so
/// that the category, bucket and distinct-distance counts hit `targets`
/// exactly. Boxes come from the synthetic box model, so the set is
/// geometrically consistent with `camera`. Distances are rounded to 0.01 in,
/// the resolution of a tape measure.
AnnotationSet make_fixed_height_set(const CameraParams& camera, std::uint64_t seed);
AnnotationSet make_varying_height_set(const CameraParams& camera, std::uint64_t seed);

}  // namespace fisheyedist::fixtures
