#pragma once

#include <string>
#include <utility>

#include "fisheyedist/usm_camera.hpp"

namespace fisheyedist {

/// A detected person. `height` is the box extent along the radial axis of
/// the fisheye image, in pixels.
struct BoundingBox {
  PixelPoint center;
  double width = 0.0;
  double height = 0.0;
  bool occluded = false;
  std::string person_id;

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

inline constexpr double kMinAlpha = -0.1;
inline constexpr double kMaxAlpha = 1.0;  // exclusive

/// Moves the box centre radially toward `image_center` by alpha * height / 2
/// pixels (away from it for negative alpha).
///
/// Throws InvalidArgument for alpha outside [-0.1, 1.0), UndefinedDirection
/// if the centre sits on `image_center` with alpha != 0, and
/// OvershootsCenter when the displacement exceeds the centre's radius.
PixelPoint adjust(const BoundingBox& box, double alpha, const PixelPoint& image_center);

/// Adjusts both boxes, each with the alpha matching its occlusion flag.
std::pair<PixelPoint, PixelPoint> adjust_pair(const BoundingBox& a, const BoundingBox& b,
                                              double alpha_visible, double alpha_occluded,
                                              const PixelPoint& image_center);

}  // namespace fisheyedist
