#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "fisheyedist/center_adjust.hpp"
#include "fisheyedist/mlp_estimator.hpp"
#include "fisheyedist/pairs.hpp"
#include "fisheyedist/usm_camera.hpp"

namespace fisheyedist {

/// Social-distancing threshold: 6 ft.
inline constexpr double kViolationThresholdIn = 72.0;

struct PairResult {
  std::string pair_id;
  PairCategory category = PairCategory::VV;
  double gt_distance_in = 0.0;
  double est_distance_in = 0.0;
};

enum class CategoryFilter { VV, VO, OO, All };

inline constexpr std::array<CategoryFilter, 4> kAllFilters{
    CategoryFilter::VV, CategoryFilter::VO, CategoryFilter::OO, CategoryFilter::All};

std::string_view to_string(CategoryFilter f);
bool matches(CategoryFilter f, PairCategory c);

/// Mean absolute error over the pairs passing `filter`.
/// Throws EmptyCategory when no pair matches.
double mae(std::span<const PairResult> results, CategoryFilter filter = CategoryFilter::All);

struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t tn = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  std::size_t total() const { return tp + tn + fp + fn; }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

struct ViolationReport {
  ConfusionCounts counts;
  double ccr_percent = 0.0;
  double f1_percent = 0.0;
  /// Set when TP + FP + FN == 0; F1 is then reported as 100.
  bool degenerate_f1 = false;
  double threshold_in = kViolationThresholdIn;
};

/// Pairs strictly closer than `threshold_in` are positives, judged separately
/// on ground truth and estimate. Throws EmptyCategory for an empty input.
ViolationReport violations(std::span<const PairResult> results,
                           double threshold_in = kViolationThresholdIn);

struct CategorySummary {
  std::size_t count = 0;
  std::optional<double> mae_in;  // empty when count == 0
};

struct EvalReport {
  /// Indexed in kAllFilters order: VV, VO, OO, All.
  std::array<CategorySummary, 4> categories;
  ViolationReport violation;

  const CategorySummary& operator[](CategoryFilter f) const {
    return categories[static_cast<std::size_t>(f)];
  }
};

EvalReport summarize(std::span<const PairResult> results,
                     double threshold_in = kViolationThresholdIn);

struct GeometryEstimator {
  CameraParams camera;
  double assumed_height_in = 65.0;
};

struct MlpEstimator {
  std::shared_ptr<const MlpModel> model;
};

using Estimator = std::variant<GeometryEstimator, MlpEstimator>;

std::string describe(const Estimator& estimator);

/// Per-person test-time centre adjustment.
struct Adjustment {
  double alpha_visible = 0.0;
  double alpha_occluded = 0.0;

  static Adjustment shared(double alpha) { return {alpha, alpha}; }
};

/// Boxes plus ground-truth pairs referring to them by person id.
struct EvalDataset {
  std::vector<BoundingBox> boxes;
  std::vector<GroundTruthPair> pairs;
  PixelPoint image_center{1024.0, 1024.0};
};

/// Adjusts every box centre, runs the estimator on each ground-truth pair
/// and returns one result per pair, in input order.
std::vector<PairResult> estimate_pairs(const Estimator& estimator, const Adjustment& adjustment,
                                       const EvalDataset& dataset);

EvalReport evaluate_pipeline(const Estimator& estimator, const Adjustment& adjustment,
                             const EvalDataset& dataset,
                             double threshold_in = kViolationThresholdIn);

struct SweepPoint {
  double alpha = 0.0;
  CategoryFilter category = CategoryFilter::All;
  std::optional<double> mae_in;
};

/// Alpha values start, start + step, ... strictly below `stop`; computed as
/// start + k * step so no rounding drift accumulates.
std::vector<double> alpha_grid(double start = -0.1, double stop = 1.0, double step = 0.01);

/// Evaluates a shared alpha for every grid value and every category.
std::vector<SweepPoint> sweep_alpha(const Estimator& estimator, const EvalDataset& dataset,
                                    std::span<const double> alphas);

/// The alpha with the lowest MAE for `category`; ties resolve to the smaller alpha.
std::optional<SweepPoint> best_alpha(std::span<const SweepPoint> sweep, CategoryFilter category);

}  // namespace fisheyedist
