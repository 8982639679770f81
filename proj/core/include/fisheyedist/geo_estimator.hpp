#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fisheyedist/usm_camera.hpp"

namespace fisheyedist {

/// A person located by a bounding-box centre, together with the height
/// assumed for them. `world` caches the back-projected mid-height point.
struct LocalizedPerson {
  PixelPoint center;
  double assumed_height_in = 65.0;
  std::optional<WorldPoint> world;
};

/// Back-projects `center` onto the plane z = B - H/2 and fills the cache.
LocalizedPerson localize(const PixelPoint& center, double assumed_height_in,
                         const CameraParams& camera);

/// Euclidean distance between the two back-projected mid-height points.
/// Uses the cached world point when present.
double estimate_distance(const LocalizedPerson& a, const LocalizedPerson& b,
                         const CameraParams& camera);

struct PersonError {
  ErrorCode code;
  std::string message;
};

/// Symmetric n x n matrix of pairwise distances in inches. Entries touching
/// a person that failed to back-project are NaN and that person carries an
/// error record.
class DistanceMatrix {
 public:
  explicit DistanceMatrix(std::size_t n);

  std::size_t size() const { return n_; }
  double at(std::size_t i, std::size_t j) const { return values_[i * n_ + j]; }
  bool valid(std::size_t i, std::size_t j) const { return !errors_[i] && !errors_[j]; }
  const std::optional<PersonError>& error(std::size_t i) const { return errors_[i]; }

  void set(std::size_t i, std::size_t j, double d);
  void set_error(std::size_t i, PersonError e);

 private:
  std::size_t n_;
  std::vector<double> values_;
  std::vector<std::optional<PersonError>> errors_;
};

/// Back-projects every person once, then fills all C(n, 2) pairwise norms.
/// Throws InvalidArgument for fewer than two people.
DistanceMatrix batch_distances(std::span<const LocalizedPerson> people,
                               const CameraParams& camera);

}  // namespace fisheyedist
