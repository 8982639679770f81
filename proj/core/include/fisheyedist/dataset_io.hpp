#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fisheyedist/center_adjust.hpp"
#include "fisheyedist/eval_metrics.hpp"
#include "fisheyedist/pairs.hpp"
#include "fisheyedist/synth_scene.hpp"
#include "fisheyedist/usm_camera.hpp"

namespace fisheyedist {

struct DetectionRecord {
  std::string image_id;
  BoundingBox box;

  friend bool operator==(const DetectionRecord&, const DetectionRecord&) = default;
};

/// Detections file: JSON Lines, one box per line with keys
/// image_id, person_id, cx, cy, w, h, occluded.
struct DetectionsFile {
  int image_side = kDefaultImageSide;
  std::vector<DetectionRecord> records;

  friend bool operator==(const DetectionsFile&, const DetectionsFile&) = default;
};

/// Throws ParseError for malformed lines and ValidationError for boxes with
/// non-positive size, centres outside the image or repeated ids within an
/// image. Messages carry `source:line`.
DetectionsFile parse_detections(std::istream& in, int image_side = kDefaultImageSide,
                                std::string_view source = "<detections>");
DetectionsFile load_detections(const std::filesystem::path& path,
                               int image_side = kDefaultImageSide);
void write_detections(std::ostream& out, const DetectionsFile& file);
void save_detections(const DetectionsFile& file, const std::filesystem::path& path);

/// Ground truth: CSV with header `id_a,id_b,distance_in,category`.
struct GroundTruthFile {
  std::vector<GroundTruthPair> pairs;

  friend bool operator==(const GroundTruthFile&, const GroundTruthFile&) = default;
};

GroundTruthFile parse_ground_truth(std::istream& in, std::string_view source = "<ground truth>");
GroundTruthFile load_ground_truth(const std::filesystem::path& path);
void write_ground_truth(std::ostream& out, const GroundTruthFile& file);
void save_ground_truth(const GroundTruthFile& file, const std::filesystem::path& path);

/// Index of the detection an id refers to. Ids are either a bare person_id
/// (must be unique across the file) or `image_id/person_id`.
/// Throws ValidationError for unknown or ambiguous ids.
std::size_t resolve_person(const DetectionsFile& det, std::string_view id);

/// Checks that every ground-truth id resolves and that each stored category
/// agrees with the occlusion flags of the two boxes.
void validate_ground_truth(const GroundTruthFile& gt, const DetectionsFile& det);

/// Validated evaluation set. Box ids become `image_id/person_id`.
EvalDataset make_eval_dataset(const DetectionsFile& det, const GroundTruthFile& gt);

struct DatasetStats {
  std::array<std::size_t, 3> category_counts{};  // VV, VO, OO
  std::size_t total_pairs = 0;
  std::size_t distinct_distances = 0;
  /// [0, 72) in, [72, 144] in, above 144 in.
  std::array<std::size_t, 3> buckets{};
  std::optional<double> min_distance_in;
  std::optional<double> max_distance_in;
};

DatasetStats dataset_stats(const DetectionsFile& det, const GroundTruthFile& gt);

/// Convert a synthetic scene into the on-disk representations.
DetectionsFile to_detections(const SyntheticScene& scene, std::string_view image_id,
                             int image_side = kDefaultImageSide);
GroundTruthFile to_ground_truth(const SyntheticScene& scene);

/// Camera file: flat JSON object {xi, fx, fy, cx, cy, mount_height_in}.
std::string camera_to_json(const CameraParams& camera);
CameraParams camera_from_json(std::string_view text);
CameraParams load_camera(const std::filesystem::path& path);
void save_camera(const CameraParams& camera, const std::filesystem::path& path);

/// Correspondences: CSV with header `x_in,y_in,z_in,u_px,v_px`.
std::vector<Correspondence> load_correspondences(const std::filesystem::path& path);
void save_correspondences(const std::vector<Correspondence>& data,
                          const std::filesystem::path& path);

/// Training pairs: CSV with header `u_a,v_a,u_b,v_b,dist_in`.
struct PixelPairSample {
  PixelPoint a;
  PixelPoint b;
  double distance_in = 0.0;
};

std::vector<PixelPairSample> load_training_pairs(const std::filesystem::path& path);
void save_training_pairs(const std::vector<PixelPairSample>& data,
                         const std::filesystem::path& path);

/// Scene layouts: CSV with header `id,x_in,y_in,height_in,occlusion_fraction`.
std::vector<VirtualPerson> load_people(const std::filesystem::path& path);
void save_people(const std::vector<VirtualPerson>& people, const std::filesystem::path& path);

/// Shortest decimal text that parses back to exactly `v`.
std::string format_double(double v);

}  // namespace fisheyedist
