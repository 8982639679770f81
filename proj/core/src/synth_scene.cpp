#include "fisheyedist/synth_scene.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <random>
#include <unordered_set>

namespace fisheyedist {

namespace {

bool inside_image(const PixelPoint& p, int side) {
  return p.u >= 0.0 && p.v >= 0.0 && p.u < side && p.v < side;
}

std::uint64_t pair_offset(std::uint64_t i, std::uint64_t n) { return i * n - i * (i + 1) / 2; }

// Inverse of the upper-triangle enumeration k -> (i, j), i < j.
std::pair<std::size_t, std::size_t> decode_pair(std::uint64_t k, std::uint64_t n) {
  std::uint64_t lo = 0, hi = n - 1;
  while (lo + 1 < hi) {
    const std::uint64_t mid = (lo + hi) / 2;
    if (pair_offset(mid, n) <= k) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const std::uint64_t j = k - pair_offset(lo, n) + lo + 1;
  return {static_cast<std::size_t>(lo), static_cast<std::size_t>(j)};
}

// Floyd's algorithm: `count` distinct values from [0, total), sorted.
std::vector<std::uint64_t> sample_without_replacement(std::uint64_t total, std::uint64_t count,
                                                      std::mt19937_64& rng) {
  std::unordered_set<std::uint64_t> chosen;
  for (std::uint64_t j = total - count; j < total; ++j) {
    std::uniform_int_distribution<std::uint64_t> dist(0, j);
    const std::uint64_t t = dist(rng);
    if (!chosen.insert(t).second) chosen.insert(j);
  }
  std::vector<std::uint64_t> out(chosen.begin(), chosen.end());
  std::sort(out.begin(), out.end());
  return out;
}

PixelPoint project_in_image(const WorldPoint& p, const CameraParams& camera, int side,
                            const std::string& who) {
  PixelPoint px;
  try {
    px = project(p, camera);
  } catch (const Error&) {
    throw Error(ErrorCode::PersonOutsideFov,
                fmt::format("person '{}' cannot be projected", who));
  }
  if (!inside_image(px, side)) {
    throw Error(ErrorCode::PersonOutsideFov,
                fmt::format("person '{}' projects to ({:.2f}, {:.2f}), outside the {}x{} image",
                            who, px.u, px.v, side, side));
  }
  return px;
}

}  // namespace

std::vector<GridPair> generate_grid(const GridSpec& spec, const CameraParams& camera,
                                    std::size_t pair_budget, std::uint64_t seed,
                                    int image_side) {
  validate(camera);
  if (!(spec.spacing_in > 0.0) || spec.rows < 1 || spec.cols < 1 || spec.rows * spec.cols < 2) {
    throw Error(ErrorCode::InvalidArgument, "grid needs positive spacing and at least 2 corners");
  }
  if (!(spec.plane_height_in < camera.mount_height_in)) {
    throw Error(ErrorCode::InvalidArgument, "grid plane must lie below the camera");
  }

  const double z = camera.mount_height_in - spec.plane_height_in;
  const double x0 = spec.center_x_in - 0.5 * spec.spacing_in * (spec.cols - 1);
  const double y0 = spec.center_y_in - 0.5 * spec.spacing_in * (spec.rows - 1);
  const std::size_t n = static_cast<std::size_t>(spec.rows) * static_cast<std::size_t>(spec.cols);

  std::vector<PixelPoint> corners(n);
  for (int r = 0; r < spec.rows; ++r) {
    for (int c = 0; c < spec.cols; ++c) {
      const WorldPoint p{x0 + c * spec.spacing_in, y0 + r * spec.spacing_in, z};
      PixelPoint px;
      bool ok = true;
      try {
        px = project(p, camera);
      } catch (const Error&) {
        ok = false;
      }
      if (!ok || !inside_image(px, image_side)) {
        throw Error(ErrorCode::GridOutsideFov,
                    fmt::format("grid corner (row {}, col {}) falls outside the image", r, c));
      }
      corners[static_cast<std::size_t>(r * spec.cols + c)] = px;
    }
  }

  const std::uint64_t total = static_cast<std::uint64_t>(n) * (n - 1) / 2;
  std::vector<std::uint64_t> picks;
  if (pair_budget >= total) {
    picks.resize(total);
    for (std::uint64_t k = 0; k < total; ++k) picks[k] = k;
  } else {
    std::mt19937_64 rng(seed);
    picks = sample_without_replacement(total, pair_budget, rng);
  }

  std::vector<GridPair> pairs;
  pairs.reserve(picks.size());
  for (std::uint64_t k : picks) {
    const auto [i, j] = decode_pair(k, n);
    GridPair gp;
    gp.row_a = static_cast<int>(i) / spec.cols;
    gp.col_a = static_cast<int>(i) % spec.cols;
    gp.row_b = static_cast<int>(j) / spec.cols;
    gp.col_b = static_cast<int>(j) % spec.cols;
    gp.a = corners[i];
    gp.b = corners[j];
    const double di = gp.row_a - gp.row_b;
    const double dj = gp.col_a - gp.col_b;
    gp.distance_in = spec.spacing_in * std::sqrt(di * di + dj * dj);
    pairs.push_back(gp);
  }
  return pairs;
}

BoundingBox synthesize_box(const VirtualPerson& person, const CameraParams& camera,
                           const SceneOptions& options) {
  const double b = camera.mount_height_in;
  const double h = person.height_in;
  const double f = person.occlusion_fraction;
  if (!(h > 0.0 && h < 2.0 * b) || !(f >= 0.0 && f < 1.0)) {
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("person '{}': height {} or occlusion {} out of range", person.id, h, f));
  }
  if (!(h < b)) {
    throw Error(ErrorCode::PersonOutsideFov,
                fmt::format("person '{}' is taller than the camera mount height", person.id));
  }

  const int side = options.image_side;
  const WorldPoint head{person.x_in, person.y_in, b - h};
  const WorldPoint low{person.x_in, person.y_in, b - f * h};
  const WorldPoint mid{person.x_in, person.y_in, b - 0.5 * (1.0 + f) * h};
  const PixelPoint p_head = project_in_image(head, camera, side, person.id);
  const PixelPoint p_low = project_in_image(low, camera, side, person.id);
  const PixelPoint p_mid = project_in_image(mid, camera, side, person.id);

  // Body width measured across the radial direction at the box centre height.
  const double rho = std::hypot(person.x_in, person.y_in);
  const double nx = rho > 0.0 ? -person.y_in / rho : 0.0;
  const double ny = rho > 0.0 ? person.x_in / rho : 1.0;
  const double half = 0.5 * options.body_width_in;
  const PixelPoint left =
      project_in_image({mid.x + half * nx, mid.y + half * ny, mid.z}, camera, side, person.id);
  const PixelPoint right =
      project_in_image({mid.x - half * nx, mid.y - half * ny, mid.z}, camera, side, person.id);

  BoundingBox box;
  box.person_id = person.id;
  box.occluded = f > 0.0;
  box.center = p_mid;
  box.height = std::hypot(p_head.u - p_low.u, p_head.v - p_low.v);
  box.width = std::hypot(left.u - right.u, left.v - right.v);
  if (options.quantize) {
    box.center = PixelPoint{std::round(box.center.u), std::round(box.center.v)};
    box.height = std::max(1.0, std::round(box.height));
    box.width = std::max(1.0, std::round(box.width));
  }
  // A person straight under the camera collapses to a point radially.
  box.height = std::max(box.height, 1e-6);
  box.width = std::max(box.width, 1e-6);
  return box;
}

SyntheticScene generate_scene(std::span<const VirtualPerson> people, const CameraParams& camera,
                              const SceneOptions& options) {
  validate(camera);
  SyntheticScene scene;
  const std::size_t n = people.size();
  scene.boxes.reserve(n);
  for (const auto& p : people) scene.boxes.push_back(synthesize_box(p, camera, options));

  scene.distances.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = std::hypot(people[i].x_in - people[j].x_in, people[i].y_in - people[j].y_in);
      scene.distances[i * n + j] = d;
      scene.distances[j * n + i] = d;
      scene.pairs.push_back(GroundTruthPair{
          people[i].id, people[j].id, d,
          category_of(scene.boxes[i].occluded, scene.boxes[j].occluded)});
    }
  }
  return scene;
}

std::vector<VirtualPerson> generate_depof_layout(std::uint64_t seed,
                                                 const DepofLayoutOptions& options) {
  if (options.extra_people < 1 || !(options.occluded_share >= 0.0 && options.occluded_share <= 1.0) ||
      !(options.occlusion_fraction > 0.0 && options.occlusion_fraction < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "invalid layout options");
  }
  constexpr double kShortest = 11.63;
  constexpr double kLongest = 701.96;
  constexpr double kMargin = 24.0;
  constexpr double kMinSeparation = 18.0;

  const double half_len = 0.5 * options.room_length_in - kMargin;
  const double half_wid = 0.5 * options.room_width_in - kMargin;
  if (!(half_len * 2.0 >= kLongest)) {
    throw Error(ErrorCode::InvalidArgument, "room is too short for the longest anchor pair");
  }

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(-half_len, half_len);
  std::uniform_real_distribution<double> uy(-half_wid, half_wid);

  const auto bucket_of = [](double d) { return d < 72.0 ? 0 : (d <= 144.0 ? 1 : 2); };

  std::vector<VirtualPerson> people;
  for (int attempt = 0;; ++attempt) {
    people.clear();
    // Anchors: A and J span the longest distance, G and 11 the shortest.
    people.push_back({"A", -0.5 * kLongest, -0.25 * half_wid, 0, 0});
    people.push_back({"J", 0.5 * kLongest, -0.25 * half_wid, 0, 0});
    people.push_back({"G", -60.0, 0.5 * half_wid, 0, 0});
    people.push_back({"11", -60.0 + kShortest, 0.5 * half_wid, 0, 0});

    int next_id = 1;
    while (static_cast<int>(people.size()) < 4 + options.extra_people) {
      const double x = ux(rng), y = uy(rng);
      const bool clear = std::all_of(people.begin(), people.end(), [&](const VirtualPerson& q) {
        return std::hypot(q.x_in - x, q.y_in - y) >= kMinSeparation;
      });
      if (!clear) continue;
      people.push_back({fmt::format("P{}", next_id++), x, y, 0, 0});
    }

    bool buckets[3] = {false, false, false};
    for (std::size_t i = 0; i < people.size(); ++i) {
      for (std::size_t j = i + 1; j < people.size(); ++j) {
        buckets[bucket_of(std::hypot(people[i].x_in - people[j].x_in,
                                     people[i].y_in - people[j].y_in))] = true;
      }
    }
    if ((buckets[0] && buckets[1] && buckets[2]) || attempt > 100) break;
  }

  std::uniform_real_distribution<double> uh(options.min_height_in, options.max_height_in);
  for (auto& p : people) {
    p.height_in = options.height_mode == HeightMode::Fixed ? options.fixed_height_in : uh(rng);
  }

  std::vector<std::size_t> order(people.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  const auto occluded = static_cast<std::size_t>(
      std::lround(options.occluded_share * static_cast<double>(people.size())));
  for (std::size_t k = 0; k < occluded; ++k) {
    people[order[k]].occlusion_fraction = options.occlusion_fraction;
  }
  return people;
}

}  // namespace fisheyedist
