#include "fisheyedist/mlp_estimator.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <nlohmann/json.hpp>
#include <numeric>
#include <random>
#include <sstream>

namespace fisheyedist {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kModelFormatVersion = 1;

double polar_angle(double du, double dv) {
  if (du == 0.0 && dv == 0.0) return 0.0;
  return std::atan2(dv, du);
}

void check_sizes(const std::vector<int>& sizes) {
  if (sizes.size() < 2 || sizes.front() != 3 || sizes.back() != 1) {
    throw Error(ErrorCode::InvalidArgument, "layer sizes must start at 3 and end at 1");
  }
  for (int s : sizes) {
    if (s <= 0) throw Error(ErrorCode::InvalidArgument, "layer sizes must be positive");
  }
}

// Per-layer activations kept for the backward pass.
struct ForwardCache {
  std::vector<Eigen::MatrixXd> pre;   // Z_l
  std::vector<Eigen::MatrixXd> post;  // A_l, post[0] is the input
};

void forward_cached(const MlpModel& m, const Eigen::MatrixXd& x, ForwardCache& cache) {
  const std::size_t layers = m.num_layers();
  cache.pre.resize(layers);
  cache.post.resize(layers + 1);
  cache.post[0] = x;
  for (std::size_t l = 0; l < layers; ++l) {
    cache.pre[l].noalias() = m.weights(l) * cache.post[l];
    cache.pre[l].colwise() += m.biases(l);
    if (l + 1 < layers) {
      cache.post[l + 1] = cache.pre[l].cwiseMax(0.0);
    } else {
      cache.post[l + 1] = cache.pre[l];
    }
  }
}

struct Gradients {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
};

// Backward pass for loss = (1/M) sum (y - t)^2.
void backward(const MlpModel& m, const ForwardCache& cache, const Eigen::RowVectorXd& targets,
              Gradients& g) {
  const std::size_t layers = m.num_layers();
  const double batch = static_cast<double>(targets.size());
  g.weights.resize(layers);
  g.biases.resize(layers);
  Eigen::MatrixXd delta = (2.0 / batch) * (cache.post[layers] - targets);
  for (std::size_t l = layers; l-- > 0;) {
    g.weights[l].noalias() = delta * cache.post[l].transpose();
    g.biases[l] = delta.rowwise().sum();
    if (l > 0) {
      Eigen::MatrixXd upstream = m.weights(l).transpose() * delta;
      delta = upstream.cwiseProduct((cache.pre[l - 1].array() > 0.0).cast<double>().matrix());
    }
  }
}

double mse(const MlpModel& m, const Eigen::MatrixXd& x, const Eigen::RowVectorXd& t) {
  if (x.cols() == 0) return 0.0;
  return (m.forward(x) - t).squaredNorm() / static_cast<double>(x.cols());
}

class Adam {
 public:
  Adam(const MlpModel& m, const TrainConfig& cfg) : cfg_(cfg) {
    for (std::size_t l = 0; l < m.num_layers(); ++l) {
      mw_.push_back(Eigen::MatrixXd::Zero(m.weights(l).rows(), m.weights(l).cols()));
      vw_.push_back(mw_.back());
      mb_.push_back(Eigen::VectorXd::Zero(m.biases(l).size()));
      vb_.push_back(mb_.back());
    }
  }

  void step(MlpModel& m, const Gradients& g) {
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, t_);
    const double c2 = 1.0 - std::pow(cfg_.beta2, t_);
    for (std::size_t l = 0; l < m.num_layers(); ++l) {
      update(m.weights(l), mw_[l], vw_[l], g.weights[l], c1, c2);
      update(m.biases(l), mb_[l], vb_[l], g.biases[l], c1, c2);
    }
  }

 private:
  template <typename P, typename G>
  void update(P& param, P& m, P& v, const G& grad, double c1, double c2) {
    m = cfg_.beta1 * m + (1.0 - cfg_.beta1) * grad;
    v = cfg_.beta2 * v + (1.0 - cfg_.beta2) * grad.cwiseProduct(grad);
    param.array() -= cfg_.learning_rate * (m.array() / c1) /
                     ((v.array() / c2).sqrt() + cfg_.epsilon);
  }

  const TrainConfig& cfg_;
  int t_ = 0;
  std::vector<Eigen::MatrixXd> mw_, vw_;
  std::vector<Eigen::VectorXd> mb_, vb_;
};

Eigen::MatrixXd gather(const Eigen::MatrixXd& x, std::span<const std::size_t> idx) {
  Eigen::MatrixXd out(x.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) {
    out.col(static_cast<Eigen::Index>(k)) = x.col(static_cast<Eigen::Index>(idx[k]));
  }
  return out;
}

Eigen::RowVectorXd gather(const Eigen::RowVectorXd& t, std::span<const std::size_t> idx) {
  Eigen::RowVectorXd out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) {
    out[static_cast<Eigen::Index>(k)] = t[static_cast<Eigen::Index>(idx[k])];
  }
  return out;
}

}  // namespace

std::string_view to_string(AngleMode mode) {
  return mode == AngleMode::Separation ? "separation" : "literal_mod_pi";
}

AngleMode angle_mode_from_string(std::string_view s) {
  if (s == "separation") return AngleMode::Separation;
  if (s == "literal_mod_pi") return AngleMode::LiteralModPi;
  throw Error(ErrorCode::InvalidArgument, fmt::format("unknown angle mode '{}'", s));
}

std::string_view to_string(Activation) { return "relu"; }

PairFeature extract_feature(const PixelPoint& a, const PixelPoint& b, const PixelPoint& origin,
                            AngleMode mode) {
  const double dua = a.u - origin.u, dva = a.v - origin.v;
  const double dub = b.u - origin.u, dvb = b.v - origin.v;
  const double diff = polar_angle(dua, dva) - polar_angle(dub, dvb);

  double theta = 0.0;
  if (mode == AngleMode::Separation) {
    theta = std::fmod(std::abs(diff), 2.0 * kPi);
    if (theta > kPi) theta = 2.0 * kPi - theta;
  } else {
    theta = std::fmod(diff, kPi);
    if (theta < 0.0) theta += kPi;
  }
  return PairFeature{std::hypot(dua, dva), std::hypot(dub, dvb), theta};
}

MlpModel MlpModel::zeros(std::vector<int> layer_sizes) {
  check_sizes(layer_sizes);
  MlpModel m;
  m.sizes_ = std::move(layer_sizes);
  for (std::size_t l = 0; l + 1 < m.sizes_.size(); ++l) {
    m.weights_.push_back(Eigen::MatrixXd::Zero(m.sizes_[l + 1], m.sizes_[l]));
    m.biases_.push_back(Eigen::VectorXd::Zero(m.sizes_[l + 1]));
  }
  return m;
}

MlpModel MlpModel::initialized(std::vector<int> layer_sizes, std::uint64_t seed) {
  MlpModel m = zeros(std::move(layer_sizes));
  m.seed = seed;
  std::mt19937_64 rng(seed);
  for (auto& w : m.weights_) {
    const double bound = std::sqrt(6.0 / static_cast<double>(w.cols()));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = dist(rng);
    }
  }
  return m;
}

std::size_t MlpModel::num_parameters() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    n += static_cast<std::size_t>(weights_[l].size() + biases_[l].size());
  }
  return n;
}

Eigen::VectorXd MlpModel::parameters() const {
  Eigen::VectorXd flat(static_cast<Eigen::Index>(num_parameters()));
  Eigen::Index k = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    for (Eigen::Index i = 0; i < weights_[l].rows(); ++i) {
      for (Eigen::Index j = 0; j < weights_[l].cols(); ++j) flat[k++] = weights_[l](i, j);
    }
    for (Eigen::Index i = 0; i < biases_[l].size(); ++i) flat[k++] = biases_[l][i];
  }
  return flat;
}

void MlpModel::set_parameters(const Eigen::VectorXd& flat) {
  if (static_cast<std::size_t>(flat.size()) != num_parameters()) {
    throw Error(ErrorCode::InvalidArgument, "parameter vector has the wrong length");
  }
  Eigen::Index k = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    for (Eigen::Index i = 0; i < weights_[l].rows(); ++i) {
      for (Eigen::Index j = 0; j < weights_[l].cols(); ++j) weights_[l](i, j) = flat[k++];
    }
    for (Eigen::Index i = 0; i < biases_[l].size(); ++i) biases_[l][i] = flat[k++];
  }
}

Eigen::RowVectorXd MlpModel::forward(const Eigen::MatrixXd& inputs) const {
  Eigen::MatrixXd a = inputs;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    Eigen::MatrixXd z = weights_[l] * a;
    z.colwise() += biases_[l];
    a = (l + 1 < weights_.size()) ? Eigen::MatrixXd(z.cwiseMax(0.0)) : z;
  }
  return a.row(0);
}

bool operator==(const MlpModel& a, const MlpModel& b) {
  if (a.sizes_ != b.sizes_ || a.activation != b.activation || a.seed != b.seed) return false;
  const auto& fa = a.features;
  const auto& fb = b.features;
  if (!(fa.origin == fb.origin) || fa.angle_mode != fb.angle_mode ||
      fa.radius_scale != fb.radius_scale || fa.theta_scale != fb.theta_scale ||
      fa.canonicalize != fb.canonicalize) {
    return false;
  }
  for (std::size_t l = 0; l < a.weights_.size(); ++l) {
    if (a.weights_[l] != b.weights_[l] || a.biases_[l] != b.biases_[l]) return false;
  }
  return true;
}

Eigen::Vector3d network_input(const MlpModel& model, const PairFeature& v) {
  const auto& f = model.features;
  double ra = v.r_a, rb = v.r_b;
  if (f.canonicalize && rb > ra) std::swap(ra, rb);
  return Eigen::Vector3d(ra / f.radius_scale, rb / f.radius_scale, v.theta / f.theta_scale);
}

double predict(const MlpModel& model, const PairFeature& v) {
  return model.forward(network_input(model, v))[0];
}

std::vector<double> predict_batch(const MlpModel& model, std::span<const PairFeature> features) {
  Eigen::MatrixXd x(3, static_cast<Eigen::Index>(features.size()));
  for (std::size_t i = 0; i < features.size(); ++i) {
    x.col(static_cast<Eigen::Index>(i)) = network_input(model, features[i]);
  }
  const Eigen::RowVectorXd y = model.forward(x);
  return std::vector<double>(y.data(), y.data() + y.size());
}

double predict_pixels(const MlpModel& model, const PixelPoint& a, const PixelPoint& b) {
  return predict(model,
                 extract_feature(a, b, model.features.origin, model.features.angle_mode));
}

TrainResult train(std::span<const TrainingSample> dataset, const TrainConfig& cfg) {
  if (dataset.empty()) throw Error(ErrorCode::InvalidArgument, "training set is empty");
  if (!(cfg.learning_rate > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "learning rate must be positive");
  }
  if (!(cfg.validation_fraction > 0.0 && cfg.validation_fraction < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "validation fraction must lie in (0, 1)");
  }
  if (cfg.batch_size <= 0 || cfg.epochs < 0 || cfg.patience <= 0) {
    throw Error(ErrorCode::InvalidArgument, "batch size, epochs and patience must be positive");
  }

  std::vector<int> sizes{3};
  sizes.insert(sizes.end(), cfg.hidden_layers.begin(), cfg.hidden_layers.end());
  sizes.push_back(1);
  MlpModel model = MlpModel::initialized(sizes, cfg.seed);
  model.features = cfg.features;

  const std::size_t n = dataset.size();
  Eigen::MatrixXd x(3, static_cast<Eigen::Index>(n));
  Eigen::RowVectorXd t(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = dataset[i];
    if (!std::isfinite(s.feature.r_a) || !std::isfinite(s.feature.r_b) ||
        !std::isfinite(s.feature.theta) || !std::isfinite(s.distance_in)) {
      throw Error(ErrorCode::InvalidArgument, fmt::format("sample {} is not finite", i));
    }
    x.col(static_cast<Eigen::Index>(i)) = network_input(model, s.feature);
    t[static_cast<Eigen::Index>(i)] = s.distance_in;
  }

  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);

  std::size_t n_val = static_cast<std::size_t>(std::floor(cfg.validation_fraction *
                                                          static_cast<double>(n)));
  n_val = std::min(n_val, n - 1);
  std::vector<std::size_t> val_idx(order.begin(), order.begin() + static_cast<long>(n_val));
  std::vector<std::size_t> train_idx(order.begin() + static_cast<long>(n_val), order.end());
  // A single sample cannot be split; validate on the training data instead.
  const Eigen::MatrixXd x_train = gather(x, train_idx);
  const Eigen::RowVectorXd t_train = gather(t, train_idx);
  const Eigen::MatrixXd x_val = n_val > 0 ? gather(x, val_idx) : x_train;
  const Eigen::RowVectorXd t_val = n_val > 0 ? gather(t, val_idx) : t_train;

  model.biases(model.num_layers() - 1)[0] = t_train.mean();

  TrainResult result;
  result.train_loss.push_back(mse(model, x_train, t_train));
  result.validation_loss.push_back(mse(model, x_val, t_val));
  MlpModel best = model;
  double best_val = result.validation_loss.back();
  int since_best = 0;

  Adam adam(model, cfg);
  ForwardCache cache;
  Gradients grads;
  const std::size_t batch = static_cast<std::size_t>(cfg.batch_size);
  std::vector<std::size_t> perm(train_idx.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(perm.begin(), perm.end(), rng);
    for (std::size_t start = 0; start < perm.size(); start += batch) {
      const std::size_t stop = std::min(start + batch, perm.size());
      const std::span<const std::size_t> idx(perm.data() + start, stop - start);
      const Eigen::MatrixXd xb = gather(x_train, idx);
      const Eigen::RowVectorXd tb = gather(t_train, idx);
      forward_cached(model, xb, cache);
      const double loss =
          (cache.post.back() - tb).squaredNorm() / static_cast<double>(idx.size());
      if (!std::isfinite(loss)) {
        throw Error(ErrorCode::DivergedTraining,
                    fmt::format("non-finite batch loss in epoch {}", epoch));
      }
      backward(model, cache, tb, grads);
      adam.step(model, grads);
    }
    const double train_loss = mse(model, x_train, t_train);
    const double val_loss = mse(model, x_val, t_val);
    if (!std::isfinite(train_loss) || !std::isfinite(val_loss) ||
        !model.parameters().allFinite()) {
      throw Error(ErrorCode::DivergedTraining,
                  fmt::format("loss became non-finite after epoch {}", epoch));
    }
    result.train_loss.push_back(train_loss);
    result.validation_loss.push_back(val_loss);
    if (val_loss < best_val) {
      best_val = val_loss;
      best = model;
      result.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }
  result.model = std::move(best);
  return result;
}

Eigen::VectorXd loss_gradient(const MlpModel& model, const Eigen::Vector3d& input,
                              double target) {
  ForwardCache cache;
  forward_cached(model, input, cache);
  Gradients g;
  Eigen::RowVectorXd t(1);
  t[0] = target;
  backward(model, cache, t, g);
  MlpModel shaped = model;
  for (std::size_t l = 0; l < model.num_layers(); ++l) {
    shaped.weights(l) = g.weights[l];
    shaped.biases(l) = g.biases[l];
  }
  return shaped.parameters();
}

GradientCheckResult gradient_check(const MlpModel& model, const TrainingSample& sample,
                                   double step) {
  const Eigen::Vector3d input = network_input(model, sample.feature);
  const auto loss_at = [&](const MlpModel& m) {
    const double e = m.forward(input)[0] - sample.distance_in;
    return e * e;
  };

  GradientCheckResult out;
  out.analytic = loss_gradient(model, input, sample.distance_in);
  const Eigen::VectorXd base = model.parameters();
  out.numeric.resize(base.size());
  MlpModel probe = model;
  for (Eigen::Index k = 0; k < base.size(); ++k) {
    Eigen::VectorXd p = base;
    p[k] = base[k] + step;
    probe.set_parameters(p);
    const double plus = loss_at(probe);
    p[k] = base[k] - step;
    probe.set_parameters(p);
    const double minus = loss_at(probe);
    out.numeric[k] = (plus - minus) / (2.0 * step);
  }
  for (Eigen::Index k = 0; k < base.size(); ++k) {
    const double a = out.analytic[k], n = out.numeric[k];
    const double denom = std::max({std::abs(a), std::abs(n), 1e-8});
    out.max_relative_error = std::max(out.max_relative_error, std::abs(a - n) / denom);
  }
  return out;
}

std::string model_to_json(const MlpModel& model) {
  nlohmann::json j;
  j["format"] = "fisheyedist-mlp";
  j["version"] = kModelFormatVersion;
  j["layer_sizes"] = model.layer_sizes();
  j["activation"] = std::string(to_string(model.activation));
  j["seed"] = model.seed;
  const auto& f = model.features;
  j["features"] = {{"origin", {f.origin.u, f.origin.v}},
                   {"angle_mode", std::string(to_string(f.angle_mode))},
                   {"radius_scale", f.radius_scale},
                   {"theta_scale", f.theta_scale},
                   {"canonicalize", f.canonicalize}};
  nlohmann::json layers = nlohmann::json::array();
  for (std::size_t l = 0; l < model.num_layers(); ++l) {
    const auto& w = model.weights(l);
    std::vector<double> row_major;
    row_major.reserve(static_cast<std::size_t>(w.size()));
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) row_major.push_back(w(i, c));
    }
    const auto& b = model.biases(l);
    layers.push_back({{"weights", row_major},
                      {"biases", std::vector<double>(b.data(), b.data() + b.size())}});
  }
  j["layers"] = std::move(layers);
  return j.dump();
}

MlpModel model_from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::ParseError, fmt::format("model file: {}", e.what()));
  }
  try {
    if (j.at("format").get<std::string>() != "fisheyedist-mlp") {
      throw Error(ErrorCode::ValidationError, "model file: unexpected format tag");
    }
    if (j.at("version").get<int>() != kModelFormatVersion) {
      throw Error(ErrorCode::ValidationError,
                  fmt::format("model file: unsupported version {}", j.at("version").dump()));
    }
    if (j.at("activation").get<std::string>() != "relu") {
      throw Error(ErrorCode::ValidationError, "model file: unsupported activation");
    }
    MlpModel m = MlpModel::zeros(j.at("layer_sizes").get<std::vector<int>>());
    m.seed = j.at("seed").get<std::uint64_t>();
    const auto& f = j.at("features");
    const auto origin = f.at("origin").get<std::vector<double>>();
    if (origin.size() != 2) throw Error(ErrorCode::ValidationError, "model file: bad origin");
    m.features.origin = PixelPoint{origin[0], origin[1]};
    m.features.angle_mode = angle_mode_from_string(f.at("angle_mode").get<std::string>());
    m.features.radius_scale = f.at("radius_scale").get<double>();
    m.features.theta_scale = f.at("theta_scale").get<double>();
    m.features.canonicalize = f.at("canonicalize").get<bool>();

    const auto& layers = j.at("layers");
    if (layers.size() != m.num_layers()) {
      throw Error(ErrorCode::ValidationError, "model file: layer count mismatch");
    }
    for (std::size_t l = 0; l < m.num_layers(); ++l) {
      const auto w = layers[l].at("weights").get<std::vector<double>>();
      const auto b = layers[l].at("biases").get<std::vector<double>>();
      auto& wm = m.weights(l);
      if (w.size() != static_cast<std::size_t>(wm.size()) ||
          b.size() != static_cast<std::size_t>(m.biases(l).size())) {
        throw Error(ErrorCode::ValidationError,
                    fmt::format("model file: layer {} has the wrong shape", l));
      }
      std::size_t k = 0;
      for (Eigen::Index i = 0; i < wm.rows(); ++i) {
        for (Eigen::Index c = 0; c < wm.cols(); ++c) wm(i, c) = w[k++];
      }
      for (std::size_t i = 0; i < b.size(); ++i) m.biases(l)[static_cast<Eigen::Index>(i)] = b[i];
    }
    if (!m.parameters().allFinite()) {
      throw Error(ErrorCode::ValidationError, "model file: non-finite parameter");
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, fmt::format("model file: {}", e.what()));
  }
}

void save_model(const MlpModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, fmt::format("cannot write {}", path.string()));
  out << model_to_json(model) << '\n';
}

MlpModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, fmt::format("cannot read {}", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return model_from_json(ss.str());
}

}  // namespace fisheyedist
