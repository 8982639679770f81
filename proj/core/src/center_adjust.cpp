#include "fisheyedist/center_adjust.hpp"

#include <cmath>
#include <fmt/format.h>

namespace fisheyedist {

PixelPoint adjust(const BoundingBox& box, double alpha, const PixelPoint& image_center) {
  if (!(alpha >= kMinAlpha && alpha < kMaxAlpha)) {
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("alpha {} outside [{}, {})", alpha, kMinAlpha, kMaxAlpha));
  }
  if (alpha == 0.0) return box.center;

  const double du = box.center.u - image_center.u;
  const double dv = box.center.v - image_center.v;
  const double radius = std::hypot(du, dv);
  if (radius == 0.0) {
    throw Error(ErrorCode::UndefinedDirection,
                fmt::format("box '{}' is centred on the image centre", box.person_id));
  }
  const double shift = alpha * box.height / 2.0;
  if (shift > radius) {
    throw Error(ErrorCode::OvershootsCenter,
                fmt::format("box '{}': displacement {} px exceeds radius {} px", box.person_id,
                            shift, radius));
  }
  const double scale = (radius - shift) / radius;
  return PixelPoint{image_center.u + du * scale, image_center.v + dv * scale};
}

std::pair<PixelPoint, PixelPoint> adjust_pair(const BoundingBox& a, const BoundingBox& b,
                                              double alpha_visible, double alpha_occluded,
                                              const PixelPoint& image_center) {
  return {adjust(a, a.occluded ? alpha_occluded : alpha_visible, image_center),
          adjust(b, b.occluded ? alpha_occluded : alpha_visible, image_center)};
}

}  // namespace fisheyedist
