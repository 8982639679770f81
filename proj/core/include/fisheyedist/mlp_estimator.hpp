#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fisheyedist/usm_camera.hpp"

namespace fisheyedist {

/// Polar description of a pair of image locations about a feature origin.
struct PairFeature {
  double r_a = 0.0;
  double r_b = 0.0;
  double theta = 0.0;  // radians, [0, pi]

  friend bool operator==(const PairFeature&, const PairFeature&) = default;
};

/// How the two polar angles are combined into `theta`.
///  - Separation: the angle between the two location vectors, |dA| folded
///    into [0, pi]. Distinguishes same-side from opposite-side pairs.
///  - LiteralModPi: (theta_a - theta_b) mod pi. Kept for comparison; it maps
///    separations phi and pi - phi onto the same value.
enum class AngleMode { Separation, LiteralModPi };

std::string_view to_string(AngleMode mode);
AngleMode angle_mode_from_string(std::string_view s);

PairFeature extract_feature(const PixelPoint& a, const PixelPoint& b, const PixelPoint& origin,
                            AngleMode mode = AngleMode::Separation);

/// Everything needed to turn pixel locations into network inputs.
struct FeatureConfig {
  PixelPoint origin{1024.0, 1024.0};
  AngleMode angle_mode = AngleMode::Separation;
  double radius_scale = 1024.0;
  double theta_scale = std::numbers::pi;
  /// Order each pair so that r_a >= r_b before it reaches the network.
  bool canonicalize = true;
};

enum class Activation { Relu };

std::string_view to_string(Activation a);

/// Fully connected regression network. Hidden layers use `activation`; the
/// output layer is linear.
class MlpModel {
 public:
  MlpModel() = default;

  /// All weights and biases zero.
  static MlpModel zeros(std::vector<int> layer_sizes);
  /// Uniform fan-in initialisation, U(-sqrt(6/fan_in), sqrt(6/fan_in)), biases zero.
  static MlpModel initialized(std::vector<int> layer_sizes, std::uint64_t seed);

  const std::vector<int>& layer_sizes() const { return sizes_; }
  std::size_t num_layers() const { return weights_.size(); }
  std::size_t num_parameters() const;

  Eigen::MatrixXd& weights(std::size_t layer) { return weights_[layer]; }
  const Eigen::MatrixXd& weights(std::size_t layer) const { return weights_[layer]; }
  Eigen::VectorXd& biases(std::size_t layer) { return biases_[layer]; }
  const Eigen::VectorXd& biases(std::size_t layer) const { return biases_[layer]; }

  /// Flattened parameters: per layer, row-major weights then biases.
  Eigen::VectorXd parameters() const;
  void set_parameters(const Eigen::VectorXd& flat);

  /// Network output for already-scaled inputs, one column per sample.
  Eigen::RowVectorXd forward(const Eigen::MatrixXd& inputs) const;

  Activation activation = Activation::Relu;
  FeatureConfig features;
  std::uint64_t seed = 0;

  friend bool operator==(const MlpModel&, const MlpModel&);

 private:
  std::vector<int> sizes_;
  std::vector<Eigen::MatrixXd> weights_;
  std::vector<Eigen::VectorXd> biases_;
};

/// Applies the model's canonicalisation and scaling to a feature.
Eigen::Vector3d network_input(const MlpModel& model, const PairFeature& v);

double predict(const MlpModel& model, const PairFeature& v);
std::vector<double> predict_batch(const MlpModel& model, std::span<const PairFeature> features);

/// Convenience: feature extraction with the model's own configuration.
double predict_pixels(const MlpModel& model, const PixelPoint& a, const PixelPoint& b);

struct TrainingSample {
  PairFeature feature;
  double distance_in = 0.0;
};

struct TrainConfig {
  std::vector<int> hidden_layers{100, 100, 100, 100};
  double learning_rate = 1e-3;
  int batch_size = 64;
  int epochs = 300;
  /// Stop when validation loss has not improved for this many epochs.
  int patience = 20;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double validation_fraction = 0.1;
  FeatureConfig features;
};

struct TrainResult {
  MlpModel model;
  /// Index 0 is the untrained model; index e is the loss after epoch e.
  std::vector<double> train_loss;
  std::vector<double> validation_loss;
  int best_epoch = 0;
};

/// Mini-batch Adam on mean squared error. Returns the parameters of the
/// epoch with the lowest validation loss. Deterministic for a given seed.
/// Throws DivergedTraining if the loss or any parameter becomes non-finite.
TrainResult train(std::span<const TrainingSample> dataset, const TrainConfig& config);

struct GradientCheckResult {
  double max_relative_error = 0.0;
  Eigen::VectorXd analytic;
  Eigen::VectorXd numeric;
};

/// Analytic gradient of the squared error for a single sample versus central
/// finite differences over every parameter.
GradientCheckResult gradient_check(const MlpModel& model, const TrainingSample& sample,
                                   double step = 1e-5);

/// Gradient of (F(input) - target)^2 with respect to all parameters, in
/// `parameters()` order.
Eigen::VectorXd loss_gradient(const MlpModel& model, const Eigen::Vector3d& input,
                              double target);

std::string model_to_json(const MlpModel& model);
MlpModel model_from_json(std::string_view text);
void save_model(const MlpModel& model, const std::filesystem::path& path);
MlpModel load_model(const std::filesystem::path& path);

}  // namespace fisheyedist
