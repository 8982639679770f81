#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fisheyedist/center_adjust.hpp"
#include "fisheyedist/pairs.hpp"
#include "fisheyedist/usm_camera.hpp"

namespace fisheyedist {

inline constexpr int kDefaultImageSide = 2048;

/// Planar grid of annotated corners, the stand-in for chessboard mats laid
/// on tables of equal height.
struct GridSpec {
  double spacing_in = 12.5;
  int rows = 27;
  int cols = 70;
  double plane_height_in = 32.5;  // above the floor
  double center_x_in = 0.0;       // grid centre in the camera frame
  double center_y_in = 0.0;
};

struct GridPair {
  PixelPoint a;
  PixelPoint b;
  double distance_in = 0.0;
  int row_a = 0, col_a = 0, row_b = 0, col_b = 0;
};

/// Projects every grid corner and samples up to `pair_budget` distinct
/// corner pairs (all of them if the budget allows). Throws GridOutsideFov
/// if any corner leaves the image.
std::vector<GridPair> generate_grid(const GridSpec& spec, const CameraParams& camera,
                                    std::size_t pair_budget, std::uint64_t seed,
                                    int image_side = kDefaultImageSide);

struct VirtualPerson {
  std::string id;
  double x_in = 0.0;
  double y_in = 0.0;
  double height_in = 65.0;
  /// Share of the body hidden from the floor up, in [0, 1).
  double occlusion_fraction = 0.0;
};

struct SceneOptions {
  bool quantize = false;
  int image_side = kDefaultImageSide;
  double body_width_in = 18.0;
};

struct SyntheticScene {
  std::vector<BoundingBox> boxes;
  /// All C(n, 2) pairs, i < j in box order.
  std::vector<GroundTruthPair> pairs;
  /// Row-major n x n floor distances.
  std::vector<double> distances;

  double distance(std::size_t i, std::size_t j) const {
    return distances[i * boxes.size() + j];
  }
};

/// Box for one person. Its radial extent runs from the head to the lowest
/// visible body point; its centre is the projection of the midpoint of that
/// visible segment. Throws PersonOutsideFov when any of those points leaves
/// the image.
BoundingBox synthesize_box(const VirtualPerson& person, const CameraParams& camera,
                           const SceneOptions& options = {});

SyntheticScene generate_scene(std::span<const VirtualPerson> people, const CameraParams& camera,
                              const SceneOptions& options = {});

enum class HeightMode { Fixed, Varying };

struct DepofLayoutOptions {
  HeightMode height_mode = HeightMode::Varying;
  double fixed_height_in = 70.08;
  double min_height_in = 60.0;
  double max_height_in = 76.0;
  /// Fraction of people who are partially occluded.
  double occluded_share = 0.3;
  double occlusion_fraction = 0.5;
  /// People beyond the four fixed anchors.
  int extra_people = 26;
  double room_length_in = 864.0;  // 72 ft
  double room_width_in = 336.0;   // 28 ft
};

/// Classroom layout centred under the camera. Four anchors pin the extreme
/// pair distances (11.63 in and 701.96 in); the rest are placed at random
/// with at least 18 in between any two people.
std::vector<VirtualPerson> generate_depof_layout(std::uint64_t seed,
                                                 const DepofLayoutOptions& options = {});

}  // namespace fisheyedist
