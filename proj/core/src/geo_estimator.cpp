#include "fisheyedist/geo_estimator.hpp"

#include <cmath>
#include <limits>

namespace fisheyedist {

namespace {

WorldPoint world_of(const LocalizedPerson& p, const CameraParams& camera) {
  if (p.world) return *p.world;
  return inverse_project(p.center, height_to_pz(camera, p.assumed_height_in), camera);
}

double norm_between(const WorldPoint& a, const WorldPoint& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  const double dz = a.z - b.z;
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

}  // namespace

LocalizedPerson localize(const PixelPoint& center, double assumed_height_in,
                         const CameraParams& camera) {
  LocalizedPerson p{center, assumed_height_in, std::nullopt};
  p.world = inverse_project(center, height_to_pz(camera, assumed_height_in), camera);
  return p;
}

double estimate_distance(const LocalizedPerson& a, const LocalizedPerson& b,
                         const CameraParams& camera) {
  return norm_between(world_of(a, camera), world_of(b, camera));
}

DistanceMatrix::DistanceMatrix(std::size_t n)
    : n_(n), values_(n * n, 0.0), errors_(n) {}

void DistanceMatrix::set(std::size_t i, std::size_t j, double d) {
  values_[i * n_ + j] = d;
  values_[j * n_ + i] = d;
}

void DistanceMatrix::set_error(std::size_t i, PersonError e) {
  errors_[i] = std::move(e);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t j = 0; j < n_; ++j) {
    if (j != i) set(i, j, nan);
  }
}

DistanceMatrix batch_distances(std::span<const LocalizedPerson> people,
                               const CameraParams& camera) {
  const std::size_t n = people.size();
  if (n < 2) {
    throw Error(ErrorCode::InvalidArgument, "batch_distances needs at least two people");
  }
  DistanceMatrix out(n);
  std::vector<WorldPoint> world(n);
  std::vector<bool> ok(n, true);
  for (std::size_t i = 0; i < n; ++i) {
    try {
      world[i] = world_of(people[i], camera);
    } catch (const Error& e) {
      ok[i] = false;
      out.set_error(i, PersonError{e.code(), e.what()});
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!ok[i]) continue;
    for (std::size_t j = i + 1; j < n; ++j) {
      if (ok[j]) out.set(i, j, norm_between(world[i], world[j]));
    }
  }
  return out;
}

}  // namespace fisheyedist
