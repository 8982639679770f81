#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "fisheyedist/errors.hpp"
#include "fisheyedist/mlp_estimator.hpp"
#include "fisheyedist/synth_scene.hpp"
#include "generators.hpp"

namespace fisheyedist {
namespace {

using std::numbers::pi;
using testing::for_all;
using testing::Gen;

const PixelPoint kOrigin{1024.0, 1024.0};

PixelPoint polar(double r, double angle) {
  return {kOrigin.u + r * std::cos(angle), kOrigin.v + r * std::sin(angle)};
}

TEST(ExtractFeature, IdenticalPoints) {
  const auto f = extract_feature({1300, 900}, {1300, 900}, kOrigin);
  EXPECT_DOUBLE_EQ(f.r_a, f.r_b);
  EXPECT_DOUBLE_EQ(f.r_a, std::hypot(276.0, -124.0));
  EXPECT_EQ(f.theta, 0.0);
}

TEST(ExtractFeature, LiteralModPiExample) {
  // theta_A = 3pi/2, theta_B = pi/4: (5pi/4) mod pi = pi/4.
  const auto f = extract_feature(polar(100, 1.5 * pi), polar(50, 0.25 * pi), kOrigin,
                                 AngleMode::LiteralModPi);
  EXPECT_NEAR(f.theta, 0.25 * pi, 1e-12);
}

TEST(ExtractFeature, SeparationModeSameExample) {
  // The two directions are 3pi/4 apart.
  const auto f = extract_feature(polar(100, 1.5 * pi), polar(50, 0.25 * pi), kOrigin);
  EXPECT_NEAR(f.theta, 0.75 * pi, 1e-12);
}

TEST(ExtractFeature, PerpendicularExample) {
  const auto f = extract_feature({1272.53, 1024}, {1024, 775.47}, kOrigin);
  EXPECT_NEAR(f.r_a, 248.53, 1e-9);
  EXPECT_NEAR(f.r_b, 248.53, 1e-9);
  EXPECT_NEAR(f.theta, pi / 2.0, 1e-12);
  const auto g = extract_feature({1272.53, 1024}, {1024, 775.47}, kOrigin, AngleMode::LiteralModPi);
  EXPECT_NEAR(g.theta, pi / 2.0, 1e-12);
}

TEST(ExtractFeature, ZeroRadiusHasZeroAngle) {
  const auto f = extract_feature(kOrigin, polar(80, -0.5 * pi), kOrigin);
  EXPECT_EQ(f.r_a, 0.0);
  EXPECT_NEAR(f.theta, 0.5 * pi, 1e-12);
}

TEST(ExtractFeature, ModeNamesRoundTrip) {
  for (auto m : {AngleMode::Separation, AngleMode::LiteralModPi}) {
    EXPECT_EQ(angle_mode_from_string(to_string(m)), m);
  }
  EXPECT_THROW(angle_mode_from_string("degrees"), Error);
}

TEST(FeatureProperties, RotationInvarianceAndRange) {
  for_all(31, 3000, [](Gen& g) {
    const double ra = g.uniform(0, 1400), rb = g.uniform(0, 1400);
    const double a = g.angle(), b = g.angle(), rot = g.angle();
    for (auto mode : {AngleMode::Separation, AngleMode::LiteralModPi}) {
      const auto f = extract_feature(polar(ra, a), polar(rb, b), kOrigin, mode);
      const auto h = extract_feature(polar(ra, a + rot), polar(rb, b + rot), kOrigin, mode);
      EXPECT_GE(f.theta, 0.0);
      EXPECT_LE(f.theta, pi);
      EXPECT_NEAR(f.r_a, h.r_a, 1e-9);
      EXPECT_NEAR(f.r_b, h.r_b, 1e-9);
      // Angles that wrap to opposite ends of the interval are the same angle.
      const double period = mode == AngleMode::Separation ? 2.0 * pi : pi;
      EXPECT_NEAR(std::remainder(f.theta - h.theta, period), 0.0, 1e-9);
    }
  });
}

TEST(FeatureProperties, SeparationIsSymmetric) {
  for_all(32, 1000, [](Gen& g) {
    const auto a = polar(g.uniform(1, 1400), g.angle());
    const auto b = polar(g.uniform(1, 1400), g.angle());
    const auto f = extract_feature(a, b, kOrigin);
    const auto h = extract_feature(b, a, kOrigin);
    EXPECT_EQ(f.r_a, h.r_b);
    EXPECT_EQ(f.r_b, h.r_a);
    EXPECT_EQ(f.theta, h.theta);
  });
}

// Small network with hand-picked weights; the reference output and gradient
// were computed with an automatic-differentiation framework.
MlpModel reference_model() {
  MlpModel m = MlpModel::zeros({3, 2, 1});
  m.weights(0) << 0.5, -0.25, 1.0, -0.75, 0.4, 0.3;
  m.biases(0) << 0.1, 0.2;
  m.weights(1) << 1.5, -2.0;
  m.biases(1) << 3.0;
  return m;
}

TEST(Predict, ZeroModelGivesZero) {
  const MlpModel m = MlpModel::zeros({3, 100, 100, 100, 100, 1});
  EXPECT_EQ(predict(m, {812.0, 300.0, 1.2}), 0.0);
  EXPECT_EQ(m.num_parameters(), 3u * 100 + 100 + 3 * (100 * 100 + 100) + 100 + 1);
}

TEST(Predict, ReferenceForwardPass) {
  const auto m = reference_model();
  EXPECT_NEAR(predict(m, {800.0, 300.0, pi / 3.0}), 4.12607421875, 1e-12);
  // Canonical ordering makes the swapped pair identical.
  EXPECT_EQ(predict(m, {300.0, 800.0, pi / 3.0}), predict(m, {800.0, 300.0, pi / 3.0}));
}

TEST(Predict, LinearPathScalesWithRadius) {
  MlpModel m = MlpModel::zeros({3, 1, 1});
  m.weights(0)(0, 0) = 2.0;
  m.weights(1)(0, 0) = 3.0;
  m.features.canonicalize = false;
  const double y1 = predict(m, {256.0, 0.0, 0.0});
  const double y2 = predict(m, {512.0, 0.0, 0.0});
  EXPECT_DOUBLE_EQ(y1, 6.0 * 256.0 / 1024.0);
  EXPECT_DOUBLE_EQ(y2, 2.0 * y1);
}

TEST(Predict, BatchMatchesSingle) {
  const auto m = MlpModel::initialized({3, 16, 16, 1}, 5);
  Gen g(33);
  std::vector<PairFeature> features;
  for (int i = 0; i < 50; ++i) features.push_back({g.uniform(0, 1400), g.uniform(0, 1400), g.uniform(0, pi)});
  const auto batch = predict_batch(m, features);
  for (std::size_t i = 0; i < features.size(); ++i) {
    EXPECT_NEAR(batch[i], predict(m, features[i]), 1e-12);
    EXPECT_EQ(predict(m, features[i]), predict(m, features[i]));
  }
}

TEST(LossGradient, MatchesReference) {
  const auto m = reference_model();
  const Eigen::Vector3d x = network_input(m, {800.0, 300.0, pi / 3.0});
  const auto g = loss_gradient(m, x, 10.0);
  const std::vector<double> expected{-13.767013549804686, -5.162630081176757, -5.873925781249999,
                                     0.0, 0.0, 0.0, -17.621777343749997, 0.0,
                                     -8.819301846822102, 0.0, -11.7478515625};
  ASSERT_EQ(g.size(), static_cast<Eigen::Index>(expected.size()));
  for (std::size_t i = 0; i < expected.size(); ++i) {
    EXPECT_NEAR(g[static_cast<Eigen::Index>(i)], expected[i], 1e-10) << "parameter " << i;
  }
}

TEST(GradientCheck, SmallModelAgrees) {
  const auto m = MlpModel::initialized({3, 4, 1}, 0);
  const auto r = gradient_check(m, {{700.0, 420.0, 1.1}, 95.0});
  EXPECT_LT(r.max_relative_error, 1e-4);
}

// Smallest |pre-activation| over the hidden units. Finite differences are
// meaningless within a step of a ReLU kink.
double kink_margin(const MlpModel& m, const PairFeature& f) {
  Eigen::VectorXd h = network_input(m, f);
  double margin = std::numeric_limits<double>::infinity();
  for (std::size_t l = 0; l + 1 < m.num_layers(); ++l) {
    const Eigen::VectorXd z = m.weights(l) * h + m.biases(l);
    margin = std::min(margin, z.cwiseAbs().minCoeff());
    h = z.cwiseMax(0.0);
  }
  return margin;
}

TEST(GradientCheck, RandomModelsAgree) {
  int checked = 0;
  for_all(34, 60, [&](Gen& g) {
    const auto m = MlpModel::initialized({3, g.integer(2, 8), g.integer(2, 8), 1},
                                         static_cast<std::uint64_t>(g.integer(0, 1 << 20)));
    const TrainingSample s{{g.uniform(10, 1400), g.uniform(10, 1400), g.uniform(0.1, 3.0)},
                           g.uniform(0, 700)};
    if (kink_margin(m, s.feature) < 1e-3) return;
    ++checked;
    EXPECT_LT(gradient_check(m, s).max_relative_error, 1e-4);
  });
  EXPECT_GE(checked, 30);
}

TEST(GradientCheck, ZeroGradientAtMinimum) {
  MlpModel m = MlpModel::initialized({3, 4, 1}, 0);
  m.weights(1).setZero();
  m.biases(1)[0] = 42.0;
  const auto r = gradient_check(m, {{600.0, 200.0, 0.7}, 42.0});
  EXPECT_LT(r.analytic.cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT(r.numeric.cwiseAbs().maxCoeff(), 1e-8);
}

TEST(GradientCheck, Deterministic) {
  const auto m = MlpModel::initialized({3, 4, 1}, 0);
  const TrainingSample s{{700.0, 420.0, 1.1}, 95.0};
  const auto a = gradient_check(m, s);
  const auto b = gradient_check(m, s);
  EXPECT_EQ(a.analytic, b.analytic);
  EXPECT_EQ(a.numeric, b.numeric);
  EXPECT_EQ(a.max_relative_error, b.max_relative_error);
}

TEST(Model, ParametersRoundTrip) {
  auto m = MlpModel::initialized({3, 5, 4, 1}, 9);
  const auto p = m.parameters();
  EXPECT_EQ(p[0], m.weights(0)(0, 0));
  EXPECT_EQ(p[1], m.weights(0)(0, 1));  // row-major
  auto z = MlpModel::zeros({3, 5, 4, 1});
  z.set_parameters(p);
  EXPECT_EQ(z.parameters(), p);
}

TEST(Model, InitialisationBoundsAndSeed) {
  const auto a = MlpModel::initialized({3, 100, 1}, 4);
  const auto b = MlpModel::initialized({3, 100, 1}, 4);
  const auto c = MlpModel::initialized({3, 100, 1}, 5);
  EXPECT_EQ(a.parameters(), b.parameters());
  EXPECT_NE(a.parameters(), c.parameters());
  EXPECT_LE(a.weights(0).cwiseAbs().maxCoeff(), std::sqrt(6.0 / 3.0));
  EXPECT_LE(a.weights(1).cwiseAbs().maxCoeff(), std::sqrt(6.0 / 100.0));
  EXPECT_EQ(a.biases(0).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Model, JsonRoundTripIsBitExact) {
  auto m = MlpModel::initialized({3, 7, 5, 1}, 77);
  m.features.angle_mode = AngleMode::LiteralModPi;
  m.features.origin = {1000.5, 1010.25};
  m.biases(0)[3] = 0.1 + 0.2;
  const auto back = model_from_json(model_to_json(m));
  EXPECT_TRUE(back == m);
  EXPECT_EQ(back.parameters(), m.parameters());
  EXPECT_EQ(back.features.angle_mode, AngleMode::LiteralModPi);
  EXPECT_EQ(back.seed, 77u);
}

TEST(Model, JsonRejectsBadInput) {
  EXPECT_THROW(model_from_json("{"), Error);
  EXPECT_THROW(model_from_json(R"({"format":"something-else","version":1})"), Error);
  auto j = model_to_json(MlpModel::zeros({3, 2, 1}));
  const auto pos = j.find("\"layer_sizes\"");
  ASSERT_NE(pos, std::string::npos);
  EXPECT_THROW(model_from_json(j.replace(j.find('3', pos), 1, "4")), Error);
}

std::vector<TrainingSample> grid_samples(std::size_t budget, std::uint64_t seed) {
  const auto grid = generate_grid(GridSpec{}, CameraParams{}, budget, seed);
  std::vector<TrainingSample> out;
  for (const auto& p : grid) out.push_back({extract_feature(p.a, p.b, kOrigin), p.distance_in});
  return out;
}

TEST(Train, MemorisesSingleSample) {
  const std::vector<TrainingSample> data(64, TrainingSample{{500.0, 250.0, 1.0}, 123.0});
  TrainConfig cfg;
  cfg.hidden_layers = {8, 8};
  cfg.epochs = 300;
  cfg.patience = 300;
  const auto r = train(data, cfg);
  EXPECT_LT(r.train_loss[static_cast<std::size_t>(r.best_epoch)], 1e-4);
}

TEST(Train, SeededRunsAreIdentical) {
  const auto data = grid_samples(600, 3);
  TrainConfig cfg;
  cfg.hidden_layers = {16, 16};
  cfg.epochs = 5;
  cfg.seed = 17;
  const auto a = train(data, cfg);
  const auto b = train(data, cfg);
  EXPECT_TRUE(a.model == b.model);
  EXPECT_EQ(a.train_loss, b.train_loss);
  EXPECT_EQ(a.validation_loss, b.validation_loss);
  cfg.seed = 18;
  EXPECT_FALSE(train(data, cfg).model == a.model);
}

TEST(Train, LossHistoryAndBestEpoch) {
  const auto data = grid_samples(2000, 4);
  TrainConfig cfg;
  cfg.hidden_layers = {32, 32};
  cfg.epochs = 30;
  const auto r = train(data, cfg);
  ASSERT_EQ(r.train_loss.size(), r.validation_loss.size());
  EXPECT_GE(r.train_loss.size(), 2u);
  const auto best = static_cast<std::size_t>(r.best_epoch);
  EXPECT_LT(r.validation_loss[best], r.validation_loss[0]);
  for (double v : r.validation_loss) EXPECT_GE(v, r.validation_loss[best]);
}

TEST(Train, EarlyStoppingHonoursPatience) {
  const auto data = grid_samples(400, 5);
  TrainConfig cfg;
  cfg.hidden_layers = {8};
  cfg.learning_rate = 1e-9;  // effectively frozen: no improvement after epoch 1
  cfg.epochs = 100;
  cfg.patience = 3;
  const auto r = train(data, cfg);
  EXPECT_LE(r.train_loss.size(), static_cast<std::size_t>(r.best_epoch + 3 + 1));
}

TEST(Train, OverflowIsReportedAsDivergence) {
  // Adam moves each parameter by about the learning rate per step, so one
  // update at 1e200 pushes predictions to ~1e200 and the squared error to inf.
  // (A merely large rate such as 1e3 kills the ReLUs instead of overflowing.)
  const auto data = grid_samples(2000, 6);
  TrainConfig cfg;
  cfg.learning_rate = 1e200;
  cfg.epochs = 50;
  cfg.patience = 50;
  try {
    train(data, cfg);
    FAIL() << "expected DivergedTraining";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DivergedTraining);
  }
}

TEST(Train, RejectsBadConfig) {
  const auto data = grid_samples(50, 7);
  TrainConfig cfg;
  cfg.learning_rate = 0.0;
  EXPECT_THROW(train(data, cfg), Error);
  cfg = TrainConfig{};
  cfg.validation_fraction = 1.0;
  EXPECT_THROW(train(data, cfg), Error);
  EXPECT_THROW(train({}, TrainConfig{}), Error);
}

}  // namespace
}  // namespace fisheyedist
