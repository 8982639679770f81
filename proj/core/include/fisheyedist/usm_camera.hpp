#pragma once

#include <span>

#include "fisheyedist/errors.hpp"

namespace fisheyedist {

/// Camera-centred 3D point in inches. The z axis points straight down
/// toward the floor, so everything below the camera has z > 0.
struct WorldPoint {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend bool operator==(const WorldPoint&, const WorldPoint&) = default;
};

/// Continuous image coordinates in pixels.
struct PixelPoint {
  double u = 0.0;
  double v = 0.0;

  friend bool operator==(const PixelPoint&, const PixelPoint&) = default;
};

/// Unified spherical model intrinsics {xi, fx, fy, cx, cy} plus the height of
/// the optical centre above the floor.
struct CameraParams {
  double xi = 1.0;
  double fx = 1000.0;
  double fy = 1000.0;
  double cx = 1024.0;
  double cy = 1024.0;
  double mount_height_in = 114.0;

  friend bool operator==(const CameraParams&, const CameraParams&) = default;
};

/// Throws InvalidArgument unless fx, fy, mount height > 0, xi >= 0 and all
/// fields are finite.
void validate(const CameraParams& camera);

/// Rays whose sphere coordinate satisfies s_z + xi <= this are rejected.
inline constexpr double kDegenerateEpsilon = 1e-9;

/// Forward USM projection: normalise onto the unit sphere, project from the
/// point offset by xi along the optical axis, then apply focal scales and
/// principal point. Throws DegenerateProjection for rays outside the model.
PixelPoint project(const WorldPoint& p, const CameraParams& camera);

/// Inverse of `project` restricted to the plane z = pz. The pixel fixes the
/// ray through the optical centre; pz picks the point on it.
/// Throws NoPreimage when no ray with positive z maps to `x`.
WorldPoint inverse_project(const PixelPoint& x, double pz, const CameraParams& camera);

/// Camera-frame depth of a standing person's mid-height point.
/// Throws InvalidHeight unless 0 < person_height_in < 2 * mount height.
double height_to_pz(const CameraParams& camera, double person_height_in);

struct Correspondence {
  WorldPoint world;
  PixelPoint pixel;
};

struct FitOptions {
  int max_iterations = 200;
  /// Stop once an accepted step changes the cost by less than this fraction.
  double relative_tolerance = 1e-12;
  /// Central-difference step, relative to max(|parameter|, 1).
  double difference_step = 1e-6;
};

struct FitResult {
  CameraParams params;
  double rmse_px = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Damped Gauss-Newton (Levenberg-Marquardt) fit of {xi, fx, fy, cx, cy} to
/// world/pixel correspondences. The mount height is copied from `initial`.
///
/// Throws SingularFit for fewer than five correspondences or a rank
/// deficient Jacobian. Hitting the iteration cap is not an exception: the
/// best parameters found are returned with `converged == false`.
FitResult fit_params(std::span<const Correspondence> correspondences,
                     const CameraParams& initial, const FitOptions& options = {});

}  // namespace fisheyedist
