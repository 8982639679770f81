#include "fisheyedist_tools/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fmt/format.h>
#include <fmt/ostream.h>
#include <fstream>
#include <map>
#include <memory>
#include <nlohmann/json.hpp>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fisheyedist/fisheyedist.hpp"
#include "fisheyedist_tools/config_file.hpp"

namespace fisheyedist::cli {

namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Shared plumbing

struct Context {
  std::ostream& out;
  std::ostream& err;
  std::string output_dir;

  // Relative output paths land under the output directory.
  fs::path output(const std::string& p) const {
    fs::path path(p);
    if (path.is_relative() && !output_dir.empty()) path = fs::path(output_dir) / path;
    if (path.has_parent_path()) {
      std::error_code ec;
      fs::create_directories(path.parent_path(), ec);
      if (ec) {
        throw Error(ErrorCode::IoError,
                    fmt::format("cannot create {}: {}", path.parent_path().string(), ec.message()));
      }
    }
    return path;
  }
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::IoError, fmt::format("cannot write {}", path.string()));
  f << text;
  if (!f) throw Error(ErrorCode::IoError, fmt::format("write to {} failed", path.string()));
}

void write_json(const Context& ctx, const std::string& path, const ordered_json& doc) {
  if (path.empty()) return;
  write_text(ctx.output(path), doc.dump(2) + "\n");
}

std::string mae_cell(const std::optional<double>& v) {
  return v ? fmt::format("{:.2f}", *v) : std::string("-");
}

ordered_json camera_json(const CameraParams& c) { return ordered_json::parse(camera_to_json(c)); }

ordered_json optional_number(const std::optional<double>& v) {
  return v ? ordered_json(*v) : ordered_json(nullptr);
}

// ---------------------------------------------------------------------------
// Estimator options shared by estimate, evaluate and sweep-alpha

struct EstimatorArgs {
  bool geometry = false;
  std::string mlp;
  std::string camera;
  std::vector<double> heights{65.0};
  double alpha = 0.0;
  double alpha_visible = 0.0;
  double alpha_occluded = 0.0;
};

void add_estimator_options(CLI::App& sub, EstimatorArgs& a, bool with_alpha, bool many_heights) {
  auto* camera = sub.add_option("--camera", a.camera, "Camera JSON (required with --geometry)");
  auto* geo = sub.add_flag("--geometry", a.geometry, "Back-project box centres through the camera");
  auto* mlp = sub.add_option("--mlp", a.mlp, "Use a trained model JSON");
  geo->excludes(mlp);
  geo->needs(camera);
  auto* height = sub.add_option("--height", a.heights,
                                "Assumed person height H in inches (geometry)");
  if (many_heights) {
    height->description("Assumed person height H in inches; repeat for one table row each");
  } else {
    height->expected(1);
  }
  height->capture_default_str();
  if (with_alpha) {
    auto* shared = sub.add_option("--alpha", a.alpha, "Shared centre adjustment for every box");
    auto* vis = sub.add_option("--alpha-visible", a.alpha_visible, "Adjustment for visible people");
    auto* occ =
        sub.add_option("--alpha-occluded", a.alpha_occluded, "Adjustment for occluded people");
    shared->excludes(vis)->excludes(occ);
  }
}

struct NamedEstimator {
  std::string label;
  Estimator estimator;
  ordered_json description;
};

std::vector<NamedEstimator> build_estimators(const EstimatorArgs& a) {
  if (!a.geometry && a.mlp.empty()) {
    throw Error(ErrorCode::InvalidArgument, "choose an estimator with --geometry or --mlp");
  }
  std::vector<NamedEstimator> out;
  if (a.geometry) {
    const CameraParams camera = load_camera(a.camera);
    for (double h : a.heights) {
      if (!(h > 0.0 && h < 2.0 * camera.mount_height_in)) {
        throw Error(ErrorCode::InvalidArgument,
                    fmt::format("--height {} must lie in (0, {})", h, 2.0 * camera.mount_height_in));
      }
      GeometryEstimator g{camera, h};
      ordered_json d;
      d["kind"] = "geometry";
      d["assumed_height_in"] = h;
      d["camera"] = camera_json(camera);
      out.push_back({describe(g), g, d});
    }
  } else {
    auto model = std::make_shared<const MlpModel>(load_model(a.mlp));
    ordered_json d;
    d["kind"] = "mlp";
    d["model"] = a.mlp;
    d["layer_sizes"] = model->layer_sizes();
    MlpEstimator m{model};
    out.push_back({describe(m), m, d});
  }
  return out;
}

Adjustment adjustment_of(const EstimatorArgs& a, const CLI::App& sub) {
  if (sub.count("--alpha") > 0) return Adjustment::shared(a.alpha);
  return Adjustment{a.alpha_visible, a.alpha_occluded};
}

ordered_json adjustment_json(const Adjustment& adj) {
  ordered_json j;
  j["alpha_visible"] = adj.alpha_visible;
  j["alpha_occluded"] = adj.alpha_occluded;
  return j;
}

void check_alpha(double alpha, std::string_view flag) {
  if (!(alpha >= kMinAlpha && alpha < kMaxAlpha)) {
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("{} {} must lie in [{}, {})", flag, alpha, kMinAlpha, kMaxAlpha));
  }
}

// ---------------------------------------------------------------------------
// calibrate

struct CalibrateArgs {
  std::string correspondences;
  std::string initial;
  std::optional<double> mount_height;
  std::string output;
  std::string output_json;
  int max_iterations = 200;
};

int run_calibrate(const Context& ctx, const CalibrateArgs& a) {
  const auto data = load_correspondences(a.correspondences);
  CameraParams initial = a.initial.empty() ? CameraParams{} : load_camera(a.initial);
  if (a.mount_height) initial.mount_height_in = *a.mount_height;
  FitOptions options;
  options.max_iterations = a.max_iterations;
  const FitResult fit = fit_params(data, initial, options);
  if (!fit.converged) {
    throw Error(ErrorCode::NoConvergence,
                fmt::format("calibration stopped after {} iterations at {:.4f} px RMSE",
                            fit.iterations, fit.rmse_px));
  }
  const auto& p = fit.params;
  save_camera(p, ctx.output(a.output));

  fmt::print(ctx.out, "Calibrated from {} correspondences in {} iterations\n", data.size(),
             fit.iterations);
  fmt::print(ctx.out, "  xi {:.6f}  fx {:.4f}  fy {:.4f}  cx {:.4f}  cy {:.4f}\n", p.xi, p.fx,
             p.fy, p.cx, p.cy);
  fmt::print(ctx.out, "  reprojection RMSE {:.4f} px\n", fit.rmse_px);

  ordered_json j;
  j["command"] = "calibrate";
  j["correspondences"] = data.size();
  j["iterations"] = fit.iterations;
  j["converged"] = fit.converged;
  j["rmse_px"] = fit.rmse_px;
  j["camera"] = camera_json(p);
  write_json(ctx, a.output_json, j);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// synth

struct SynthArgs {
  bool grid = false;
  bool depof = false;
  std::string scene;
  bool calibration = false;

  std::string camera;
  std::uint64_t seed = 0;
  int image_side = kDefaultImageSide;
  bool quantize = false;
  std::string output;
  std::string detections;
  std::string ground_truth;
  std::string people;
  std::string image_id = "synthetic";
  std::string output_json;

  GridSpec grid_spec;
  std::size_t pairs = 20000;

  std::string height_mode = "varying";
  DepofLayoutOptions layout;

  int points = 50;
  double noise_px = 0.0;
};

void synth_scene_files(const Context& ctx, const SynthArgs& a, const CameraParams& camera,
                       const std::vector<VirtualPerson>& people, ordered_json& j) {
  if (a.detections.empty() || a.ground_truth.empty()) {
    throw Error(ErrorCode::InvalidArgument, "scene output needs --detections and --ground-truth");
  }
  SceneOptions options;
  options.quantize = a.quantize;
  options.image_side = a.image_side;
  const SyntheticScene scene = generate_scene(people, camera, options);
  const DetectionsFile det = to_detections(scene, a.image_id, a.image_side);
  const GroundTruthFile gt = to_ground_truth(scene);
  save_detections(det, ctx.output(a.detections));
  save_ground_truth(gt, ctx.output(a.ground_truth));
  if (!a.people.empty()) save_people(people, ctx.output(a.people));

  const DatasetStats stats = dataset_stats(det, gt);
  fmt::print(ctx.out, "Synthesised {} people, {} pairs (V-V {}, V-O {}, O-O {})\n", people.size(),
             gt.pairs.size(), stats.category_counts[0], stats.category_counts[1],
             stats.category_counts[2]);
  j["people"] = people.size();
  j["pairs"] = gt.pairs.size();
  j["category_counts"] = {{"VV", stats.category_counts[0]},
                          {"VO", stats.category_counts[1]},
                          {"OO", stats.category_counts[2]}};
  j["detections"] = a.detections;
  j["ground_truth"] = a.ground_truth;
}

int run_synth(const Context& ctx, const SynthArgs& a) {
  const int modes = int(a.grid) + int(a.depof) + int(!a.scene.empty()) + int(a.calibration);
  if (modes != 1) {
    throw Error(ErrorCode::InvalidArgument,
                "choose exactly one of --grid, --scene, --depof-layout, --calibration");
  }
  if (a.image_side < 2) throw Error(ErrorCode::InvalidArgument, "--image-side must be >= 2");
  const CameraParams camera = a.camera.empty() ? CameraParams{} : load_camera(a.camera);
  validate(camera);

  ordered_json j;
  j["command"] = "synth";
  j["seed"] = a.seed;
  j["camera"] = camera_json(camera);

  if (a.grid) {
    if (a.output.empty()) throw Error(ErrorCode::InvalidArgument, "--grid needs --output");
    const auto grid = generate_grid(a.grid_spec, camera, a.pairs, a.seed, a.image_side);
    std::vector<PixelPairSample> samples;
    samples.reserve(grid.size());
    for (const auto& g : grid) samples.push_back({g.a, g.b, g.distance_in});
    save_training_pairs(samples, ctx.output(a.output));
    fmt::print(ctx.out, "Synthesised {} grid pairs ({}x{} corners, {} in spacing, {} in plane)\n",
               samples.size(), a.grid_spec.rows, a.grid_spec.cols, a.grid_spec.spacing_in,
               a.grid_spec.plane_height_in);
    j["mode"] = "grid";
    j["pairs"] = samples.size();
    j["output"] = a.output;
  } else if (a.calibration) {
    if (a.output.empty()) throw Error(ErrorCode::InvalidArgument, "--calibration needs --output");
    if (a.points < 5) throw Error(ErrorCode::InvalidArgument, "--points must be >= 5");
    if (!(a.noise_px >= 0.0)) throw Error(ErrorCode::InvalidArgument, "--noise must be >= 0");
    std::mt19937_64 rng(a.seed);
    const double half_len = 0.5 * a.layout.room_length_in;
    const double half_wid = 0.5 * a.layout.room_width_in;
    std::uniform_real_distribution<double> ux(-half_len, half_len);
    std::uniform_real_distribution<double> uy(-half_wid, half_wid);
    std::uniform_real_distribution<double> uh(0.0, std::min(80.0, 0.9 * camera.mount_height_in));
    std::normal_distribution<double> noise(0.0, a.noise_px > 0.0 ? a.noise_px : 1.0);
    std::vector<Correspondence> data;
    for (int attempts = 0; static_cast<int>(data.size()) < a.points; ++attempts) {
      if (attempts > 1000 * a.points) {
        throw Error(ErrorCode::InvalidArgument, "camera sees too little of the room");
      }
      const WorldPoint w{ux(rng), uy(rng), camera.mount_height_in - uh(rng)};
      PixelPoint px;
      try {
        px = project(w, camera);
      } catch (const Error&) {
        continue;
      }
      if (!(px.u >= 0 && px.v >= 0 && px.u < a.image_side && px.v < a.image_side)) continue;
      if (a.noise_px > 0.0) {
        px.u += noise(rng);
        px.v += noise(rng);
      }
      data.push_back({w, px});
    }
    save_correspondences(data, ctx.output(a.output));
    fmt::print(ctx.out, "Synthesised {} correspondences (noise {} px)\n", data.size(), a.noise_px);
    j["mode"] = "calibration";
    j["points"] = data.size();
    j["noise_px"] = a.noise_px;
    j["output"] = a.output;
  } else if (a.depof) {
    DepofLayoutOptions layout = a.layout;
    if (a.height_mode == "fixed") {
      layout.height_mode = HeightMode::Fixed;
    } else if (a.height_mode == "varying") {
      layout.height_mode = HeightMode::Varying;
    } else {
      throw Error(ErrorCode::InvalidArgument, "--height-mode must be fixed or varying");
    }
    const auto people = generate_depof_layout(a.seed, layout);
    j["mode"] = "depof-layout";
    j["height_mode"] = a.height_mode;
    synth_scene_files(ctx, a, camera, people, j);
  } else {
    const auto people = load_people(a.scene);
    j["mode"] = "scene";
    synth_scene_files(ctx, a, camera, people, j);
  }
  write_json(ctx, a.output_json, j);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  std::string pairs;
  std::string output;
  std::string output_json;
  std::string loss_csv;
  TrainConfig config;
  std::string angle_mode = "separation";
  int image_side = kDefaultImageSide;
};

int run_train(const Context& ctx, TrainArgs a) {
  const auto pixel_pairs = load_training_pairs(a.pairs);
  if (pixel_pairs.size() < 2) throw Error(ErrorCode::InvalidArgument, "need at least 2 pairs");
  auto& cfg = a.config;
  cfg.features.angle_mode = angle_mode_from_string(a.angle_mode);
  cfg.features.origin = {0.5 * a.image_side, 0.5 * a.image_side};
  cfg.features.radius_scale = 0.5 * a.image_side;

  std::vector<TrainingSample> samples;
  samples.reserve(pixel_pairs.size());
  for (const auto& p : pixel_pairs) {
    samples.push_back(
        {extract_feature(p.a, p.b, cfg.features.origin, cfg.features.angle_mode), p.distance_in});
  }
  const TrainResult result = train(samples, cfg);
  save_model(result.model, ctx.output(a.output));

  const int epochs = static_cast<int>(result.train_loss.size()) - 1;
  const auto best = static_cast<std::size_t>(result.best_epoch);
  fmt::print(ctx.out, "Trained {} on {} pairs for {} epochs\n",
             fmt::join(result.model.layer_sizes(), "-"), samples.size(), epochs);
  fmt::print(ctx.out, "  best epoch {}: train MSE {:.4f}, validation MSE {:.4f}\n",
             result.best_epoch, result.train_loss[best], result.validation_loss[best]);

  if (!a.loss_csv.empty()) {
    std::string text = "epoch,train_mse,validation_mse\n";
    for (std::size_t e = 0; e < result.train_loss.size(); ++e) {
      text += fmt::format("{},{},{}\n", e, format_double(result.train_loss[e]),
                          format_double(result.validation_loss[e]));
    }
    write_text(ctx.output(a.loss_csv), text);
  }

  ordered_json j;
  j["command"] = "train";
  j["pairs"] = samples.size();
  j["seed"] = cfg.seed;
  j["layer_sizes"] = result.model.layer_sizes();
  j["epochs_run"] = epochs;
  j["best_epoch"] = result.best_epoch;
  j["train_mse"] = result.train_loss;
  j["validation_mse"] = result.validation_loss;
  j["model"] = a.output;
  write_json(ctx, a.output_json, j);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// estimate

struct EstimateArgs {
  std::string detections;
  int image_side = kDefaultImageSide;
  std::string output;
  std::string output_json;
  EstimatorArgs est;
};

int run_estimate(const Context& ctx, const EstimateArgs& a, const CLI::App& sub) {
  const auto estimators = build_estimators(a.est);
  const auto& chosen = estimators.front();
  const Adjustment adj = adjustment_of(a.est, sub);
  check_alpha(adj.alpha_visible, "alpha for visible people");
  check_alpha(adj.alpha_occluded, "alpha for occluded people");

  const DetectionsFile det = load_detections(a.detections, a.image_side);
  const PixelPoint center{0.5 * det.image_side, 0.5 * det.image_side};

  // Group boxes by image, keeping file order.
  std::vector<std::string> images;
  std::map<std::string, std::vector<std::size_t>> members;
  for (std::size_t k = 0; k < det.records.size(); ++k) {
    const auto& id = det.records[k].image_id;
    if (!members.count(id)) images.push_back(id);
    members[id].push_back(k);
  }
  const bool qualify = images.size() > 1;
  const auto name_of = [&](std::size_t k) {
    const auto& r = det.records[k];
    return qualify ? r.image_id + "/" + r.box.person_id : r.box.person_id;
  };

  std::string csv = "id_a,id_b,distance_in\n";
  std::size_t written = 0;
  ordered_json failures = ordered_json::array();
  for (const auto& image : images) {
    const auto& idx = members[image];
    if (idx.size() < 2) continue;
    std::vector<PixelPoint> centers;
    centers.reserve(idx.size());
    for (std::size_t k : idx) {
      const auto& box = det.records[k].box;
      centers.push_back(
          adjust(box, box.occluded ? adj.alpha_occluded : adj.alpha_visible, center));
    }
    if (const auto* geo = std::get_if<GeometryEstimator>(&chosen.estimator)) {
      std::vector<LocalizedPerson> people;
      people.reserve(centers.size());
      for (const auto& c : centers) people.push_back({c, geo->assumed_height_in, std::nullopt});
      const DistanceMatrix m = batch_distances(people, geo->camera);
      for (std::size_t i = 0; i < idx.size(); ++i) {
        if (const auto& e = m.error(i)) {
          fmt::print(ctx.err, "warning: {}: {}\n", name_of(idx[i]), e->message);
          failures.push_back({{"id", name_of(idx[i])}, {"code", to_string(e->code)},
                              {"message", e->message}});
        }
      }
      for (std::size_t i = 0; i < idx.size(); ++i) {
        for (std::size_t k = i + 1; k < idx.size(); ++k) {
          if (!m.valid(i, k)) continue;
          csv += fmt::format("{},{},{}\n", name_of(idx[i]), name_of(idx[k]),
                             format_double(m.at(i, k)));
          ++written;
        }
      }
    } else {
      const auto& model = *std::get<MlpEstimator>(chosen.estimator).model;
      std::vector<PairFeature> features;
      for (std::size_t i = 0; i < idx.size(); ++i) {
        for (std::size_t k = i + 1; k < idx.size(); ++k) {
          features.push_back(extract_feature(centers[i], centers[k], model.features.origin,
                                             model.features.angle_mode));
        }
      }
      const auto est = predict_batch(model, features);
      std::size_t n = 0;
      for (std::size_t i = 0; i < idx.size(); ++i) {
        for (std::size_t k = i + 1; k < idx.size(); ++k) {
          csv += fmt::format("{},{},{}\n", name_of(idx[i]), name_of(idx[k]),
                             format_double(est[n++]));
          ++written;
        }
      }
    }
  }

  if (a.output.empty()) {
    ctx.out << csv;
  } else {
    write_text(ctx.output(a.output), csv);
    fmt::print(ctx.out, "{}: wrote {} pair distances to {}\n", chosen.label, written, a.output);
  }

  ordered_json j;
  j["command"] = "estimate";
  j["estimator"] = chosen.description;
  j["adjustment"] = adjustment_json(adj);
  j["images"] = images.size();
  j["pairs"] = written;
  j["failures"] = failures;
  if (!a.output.empty()) j["output"] = a.output;
  write_json(ctx, a.output_json, j);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// evaluate

struct EvaluateArgs {
  std::string detections;
  std::string ground_truth;
  int image_side = kDefaultImageSide;
  double threshold_in = kViolationThresholdIn;
  std::string output_json;
  EstimatorArgs est;
};

ordered_json report_json(const EvalReport& r) {
  ordered_json cats;
  for (auto f : kAllFilters) {
    cats[std::string(to_string(f))] = {{"count", r[f].count}, {"mae_in", optional_number(r[f].mae_in)}};
  }
  const auto& v = r.violation;
  ordered_json viol;
  viol["threshold_in"] = v.threshold_in;
  viol["tp"] = v.counts.tp;
  viol["tn"] = v.counts.tn;
  viol["fp"] = v.counts.fp;
  viol["fn"] = v.counts.fn;
  viol["ccr_percent"] = v.ccr_percent;
  viol["f1_percent"] = v.f1_percent;
  viol["degenerate_f1"] = v.degenerate_f1;
  ordered_json j;
  j["mae"] = cats;
  j["violation"] = viol;
  return j;
}

int run_evaluate(const Context& ctx, const EvaluateArgs& a, const CLI::App& sub) {
  const auto estimators = build_estimators(a.est);
  const Adjustment adj = adjustment_of(a.est, sub);
  check_alpha(adj.alpha_visible, "alpha for visible people");
  check_alpha(adj.alpha_occluded, "alpha for occluded people");
  if (!(a.threshold_in > 0.0)) throw Error(ErrorCode::InvalidArgument, "--threshold must be > 0");

  const DetectionsFile det = load_detections(a.detections, a.image_side);
  const GroundTruthFile gt = load_ground_truth(a.ground_truth);
  const EvalDataset ds = make_eval_dataset(det, gt);

  std::vector<EvalReport> reports;
  for (const auto& e : estimators) {
    reports.push_back(evaluate_pipeline(e.estimator, adj, ds, a.threshold_in));
  }

  const auto& first = reports.front();
  fmt::print(ctx.out, "Pairs: V-V {}, V-O {}, O-O {}, All {}\n", first[CategoryFilter::VV].count,
             first[CategoryFilter::VO].count, first[CategoryFilter::OO].count,
             first[CategoryFilter::All].count);
  fmt::print(ctx.out, "Adjustment: alpha visible {:.2f}, occluded {:.2f}\n\n", adj.alpha_visible,
             adj.alpha_occluded);
  fmt::print(ctx.out, "MAE (in)\n");
  fmt::print(ctx.out, "{:<28} {:>8} {:>8} {:>8} {:>8}\n", "Method", "V-V", "V-O", "O-O", "All");
  for (std::size_t k = 0; k < reports.size(); ++k) {
    const auto& r = reports[k];
    fmt::print(ctx.out, "{:<28} {:>8} {:>8} {:>8} {:>8}\n", estimators[k].label,
               mae_cell(r[CategoryFilter::VV].mae_in), mae_cell(r[CategoryFilter::VO].mae_in),
               mae_cell(r[CategoryFilter::OO].mae_in), mae_cell(r[CategoryFilter::All].mae_in));
  }
  fmt::print(ctx.out, "\nViolation detection (closer than {} in)\n", a.threshold_in);
  fmt::print(ctx.out, "{:<28} {:>8} {:>8}\n", "Method", "CCR (%)", "F1 (%)");
  for (std::size_t k = 0; k < reports.size(); ++k) {
    const auto& v = reports[k].violation;
    fmt::print(ctx.out, "{:<28} {:>8.2f} {:>8.2f}{}\n", estimators[k].label, v.ccr_percent,
               v.f1_percent, v.degenerate_f1 ? "  (no positives)" : "");
  }

  ordered_json j;
  j["command"] = "evaluate";
  j["detections"] = a.detections;
  j["ground_truth"] = a.ground_truth;
  j["adjustment"] = adjustment_json(adj);
  ordered_json methods = ordered_json::array();
  for (std::size_t k = 0; k < reports.size(); ++k) {
    ordered_json m;
    m["label"] = estimators[k].label;
    m["estimator"] = estimators[k].description;
    m["report"] = report_json(reports[k]);
    methods.push_back(m);
  }
  j["methods"] = methods;
  write_json(ctx, a.output_json, j);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// sweep-alpha

struct SweepArgs {
  std::string detections;
  std::string ground_truth;
  int image_side = kDefaultImageSide;
  double start = -0.1;
  double stop = 1.0;
  double step = 0.01;
  std::string output;
  std::string output_json;
  EstimatorArgs est;
};

int run_sweep(const Context& ctx, const SweepArgs& a) {
  const auto estimators = build_estimators(a.est);
  if (estimators.size() != 1) {
    throw Error(ErrorCode::InvalidArgument, "sweep-alpha takes a single --height");
  }
  const auto& chosen = estimators.front();
  if (a.start < kMinAlpha || a.stop > kMaxAlpha) {
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("sweep range must lie within [{}, {})", kMinAlpha, kMaxAlpha));
  }
  const auto alphas = alpha_grid(a.start, a.stop, a.step);
  const DetectionsFile det = load_detections(a.detections, a.image_side);
  const GroundTruthFile gt = load_ground_truth(a.ground_truth);
  const EvalDataset ds = make_eval_dataset(det, gt);
  const auto sweep = sweep_alpha(chosen.estimator, ds, alphas);

  std::string csv = "alpha,category,mae_in\n";
  for (const auto& sp : sweep) {
    csv += fmt::format("{},{},{}\n", format_double(sp.alpha), to_string(sp.category),
                       sp.mae_in ? format_double(*sp.mae_in) : std::string());
  }
  if (a.output.empty()) {
    ctx.out << csv;
  } else {
    write_text(ctx.output(a.output), csv);
    fmt::print(ctx.out, "{}: {} alpha values\n", chosen.label, alphas.size());
    fmt::print(ctx.out, "{:<8} {:>10} {:>10}\n", "Category", "best alpha", "MAE (in)");
    for (auto f : kAllFilters) {
      const auto best = best_alpha(sweep, f);
      if (best) {
        fmt::print(ctx.out, "{:<8} {:>10.2f} {:>10.2f}\n", to_string(f), best->alpha,
                   *best->mae_in);
      } else {
        fmt::print(ctx.out, "{:<8} {:>10} {:>10}\n", to_string(f), "-", "-");
      }
    }
  }

  ordered_json j;
  j["command"] = "sweep-alpha";
  j["estimator"] = chosen.description;
  j["alphas"] = alphas.size();
  ordered_json best_json;
  for (auto f : kAllFilters) {
    const auto best = best_alpha(sweep, f);
    best_json[std::string(to_string(f))] =
        best ? ordered_json{{"alpha", best->alpha}, {"mae_in", *best->mae_in}} : ordered_json();
  }
  j["best"] = best_json;
  ordered_json rows = ordered_json::array();
  for (const auto& sp : sweep) {
    rows.push_back({{"alpha", sp.alpha},
                    {"category", to_string(sp.category)},
                    {"mae_in", optional_number(sp.mae_in)}});
  }
  j["sweep"] = rows;
  if (!a.output.empty()) j["output"] = a.output;
  write_json(ctx, a.output_json, j);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// stats

struct StatsArgs {
  std::string detections;
  std::string ground_truth;
  int image_side = kDefaultImageSide;
  std::string output_json;
};

int run_stats(const Context& ctx, const StatsArgs& a) {
  const DetectionsFile det = load_detections(a.detections, a.image_side);
  const GroundTruthFile gt = load_ground_truth(a.ground_truth);
  const DatasetStats s = dataset_stats(det, gt);
  const auto dist = [](const std::optional<double>& v) {
    return v ? fmt::format("{:.2f}", *v) : std::string("-");
  };

  fmt::print(ctx.out, "{:<28} {:>8}\n", "Number of V-V pairs", s.category_counts[0]);
  fmt::print(ctx.out, "{:<28} {:>8}\n", "Number of V-O pairs", s.category_counts[1]);
  fmt::print(ctx.out, "{:<28} {:>8}\n", "Number of O-O pairs", s.category_counts[2]);
  fmt::print(ctx.out, "{:<28} {:>8}\n", "Number of all pairs", s.total_pairs);
  fmt::print(ctx.out, "{:<28} {:>8}\n", "Distinct distances", s.distinct_distances);
  fmt::print(ctx.out, "{:<28} {:>8}\n", "Pairs within 0-6 ft", s.buckets[0]);
  fmt::print(ctx.out, "{:<28} {:>8}\n", "Pairs within 6-12 ft", s.buckets[1]);
  fmt::print(ctx.out, "{:<28} {:>8}\n", "Pairs beyond 12 ft", s.buckets[2]);
  fmt::print(ctx.out, "{:<28} {:>8}\n", "Min distance (in)", dist(s.min_distance_in));
  fmt::print(ctx.out, "{:<28} {:>8}\n", "Max distance (in)", dist(s.max_distance_in));

  ordered_json j;
  j["command"] = "stats";
  j["category_counts"] = {{"VV", s.category_counts[0]},
                          {"VO", s.category_counts[1]},
                          {"OO", s.category_counts[2]}};
  j["total_pairs"] = s.total_pairs;
  j["distinct_distances"] = s.distinct_distances;
  j["buckets"] = {{"0-6ft", s.buckets[0]}, {"6-12ft", s.buckets[1]}, {"over12ft", s.buckets[2]}};
  j["min_distance_in"] = optional_number(s.min_distance_in);
  j["max_distance_in"] = optional_number(s.max_distance_in);
  write_json(ctx, a.output_json, j);
  return kExitOk;
}

// ---------------------------------------------------------------------------

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  std::replace(s.begin(), s.end(), '\r', ' ');
  return s;
}

std::string_view class_name(ErrorClass c) {
  switch (c) {
    case ErrorClass::Usage: return "usage";
    case ErrorClass::Data: return "data";
    case ErrorClass::Numerical: return "numerical";
  }
  return "internal";
}

int exit_code(ErrorClass c) {
  switch (c) {
    case ErrorClass::Usage: return kExitUsage;
    case ErrorClass::Data: return kExitData;
    case ErrorClass::Numerical: return kExitNumerical;
  }
  return kExitInternal;
}

}  // namespace

int run(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Inter-person distances from overhead fisheye images", "fisheyedist"};
  app.require_subcommand(1);
  app.fallthrough();
  app.config_formatter(std::make_shared<JsonOrTomlConfig>());
  app.set_config("--config", "", "Option defaults from a JSON or TOML file, one table per command");

  Context ctx{out, err, {}};
  app.add_option("--output-dir", ctx.output_dir, "Directory for relative output paths")
      ->envname("FISHEYEDIST_OUTPUT_DIR");

  // calibrate
  CalibrateArgs cal;
  auto* calibrate = app.add_subcommand("calibrate", "Fit camera intrinsics to correspondences");
  calibrate->add_option("--correspondences", cal.correspondences, "CSV x_in,y_in,z_in,u_px,v_px")
      ->required();
  calibrate->add_option("--initial", cal.initial, "Camera JSON used as the starting point");
  calibrate->add_option("--mount-height", cal.mount_height, "Camera mount height B in inches");
  calibrate->add_option("-o,--output", cal.output, "Camera JSON to write")->required();
  calibrate->add_option("--max-iterations", cal.max_iterations)->capture_default_str();
  calibrate->add_option("--output-json", cal.output_json, "Machine-readable summary");

  // synth
  SynthArgs syn;
  auto* synth = app.add_subcommand("synth", "Generate synthetic grids, scenes or correspondences");
  auto* m_grid = synth->add_flag("--grid", syn.grid, "Virtual calibration grid -> training pairs");
  auto* m_scene = synth->add_option("--scene", syn.scene,
                                    "People CSV id,x_in,y_in,height_in,occlusion_fraction");
  auto* m_depof = synth->add_flag("--depof-layout", syn.depof, "Random classroom layout");
  auto* m_cal = synth->add_flag("--calibration", syn.calibration, "Camera correspondences");
  m_grid->excludes(m_scene)->excludes(m_depof)->excludes(m_cal);
  m_scene->excludes(m_depof)->excludes(m_cal);
  m_depof->excludes(m_cal);
  synth->add_option("--camera", syn.camera, "Camera JSON (default: built-in camera)");
  synth->add_option("--seed", syn.seed)->capture_default_str();
  synth->add_option("--image-side", syn.image_side)->capture_default_str();
  synth->add_flag("--quantize", syn.quantize, "Round box centres and sizes to whole pixels");
  synth->add_option("-o,--output", syn.output, "Training pairs (--grid) or correspondences CSV");
  synth->add_option("--detections", syn.detections, "Detections JSONL to write");
  synth->add_option("--ground-truth", syn.ground_truth, "Ground-truth CSV to write");
  synth->add_option("--people", syn.people, "Also write the layout as a people CSV");
  synth->add_option("--image-id", syn.image_id)->capture_default_str();
  synth->add_option("--pairs", syn.pairs, "Grid pair budget")->capture_default_str();
  synth->add_option("--spacing", syn.grid_spec.spacing_in)->capture_default_str();
  synth->add_option("--rows", syn.grid_spec.rows)->capture_default_str();
  synth->add_option("--cols", syn.grid_spec.cols)->capture_default_str();
  synth->add_option("--plane-height", syn.grid_spec.plane_height_in, "Grid height above the floor")
      ->capture_default_str();
  synth->add_option("--height-mode", syn.height_mode, "fixed or varying")->capture_default_str();
  synth->add_option("--fixed-height", syn.layout.fixed_height_in)->capture_default_str();
  synth->add_option("--min-height", syn.layout.min_height_in)->capture_default_str();
  synth->add_option("--max-height", syn.layout.max_height_in)->capture_default_str();
  synth->add_option("--occluded-share", syn.layout.occluded_share)->capture_default_str();
  synth->add_option("--occlusion-fraction", syn.layout.occlusion_fraction)->capture_default_str();
  synth->add_option("--extra-people", syn.layout.extra_people)->capture_default_str();
  synth->add_option("--room-length", syn.layout.room_length_in)->capture_default_str();
  synth->add_option("--room-width", syn.layout.room_width_in)->capture_default_str();
  synth->add_option("--points", syn.points, "Correspondence count")->capture_default_str();
  synth->add_option("--noise", syn.noise_px, "Pixel noise sigma")->capture_default_str();
  synth->add_option("--output-json", syn.output_json, "Machine-readable summary");

  // train
  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Train the distance regressor on pixel pairs");
  train_cmd->add_option("--pairs", tr.pairs, "CSV u_a,v_a,u_b,v_b,dist_in")->required();
  train_cmd->add_option("-o,--output", tr.output, "Model JSON to write")->required();
  train_cmd->add_option("--epochs", tr.config.epochs)->capture_default_str();
  train_cmd->add_option("--batch-size", tr.config.batch_size)->capture_default_str();
  train_cmd->add_option("--learning-rate", tr.config.learning_rate)->capture_default_str();
  train_cmd->add_option("--patience", tr.config.patience)->capture_default_str();
  train_cmd->add_option("--hidden", tr.config.hidden_layers, "Hidden layer widths")
      ->capture_default_str();
  train_cmd->add_option("--validation-fraction", tr.config.validation_fraction)
      ->capture_default_str();
  train_cmd->add_option("--seed", tr.config.seed)->capture_default_str();
  train_cmd->add_option("--angle-mode", tr.angle_mode, "separation or literal_mod_pi")
      ->capture_default_str();
  train_cmd->add_option("--image-side", tr.image_side)->capture_default_str();
  train_cmd->add_option("--loss-csv", tr.loss_csv, "Per-epoch loss history");
  train_cmd->add_option("--output-json", tr.output_json, "Machine-readable summary");

  // estimate
  EstimateArgs es;
  auto* estimate = app.add_subcommand("estimate", "Distances for every pair of detections");
  estimate->add_option("--detections", es.detections, "Detections JSONL")->required();
  estimate->add_option("--image-side", es.image_side)->capture_default_str();
  estimate->add_option("-o,--output", es.output, "CSV id_a,id_b,distance_in (default: stdout)");
  estimate->add_option("--output-json", es.output_json, "Machine-readable summary");
  add_estimator_options(*estimate, es.est, true, false);

  // evaluate
  EvaluateArgs ev;
  auto* evaluate = app.add_subcommand("evaluate", "MAE and violation metrics against ground truth");
  evaluate->add_option("--detections", ev.detections, "Detections JSONL")->required();
  evaluate->add_option("--ground-truth", ev.ground_truth, "Ground-truth CSV")->required();
  evaluate->add_option("--image-side", ev.image_side)->capture_default_str();
  evaluate->add_option("--threshold", ev.threshold_in, "Violation distance in inches")
      ->capture_default_str();
  evaluate->add_option("--output-json", ev.output_json, "Full-precision report");
  add_estimator_options(*evaluate, ev.est, true, true);

  // sweep-alpha
  SweepArgs sw;
  auto* sweep = app.add_subcommand("sweep-alpha", "MAE per category over a grid of alphas");
  sweep->add_option("--detections", sw.detections, "Detections JSONL")->required();
  sweep->add_option("--ground-truth", sw.ground_truth, "Ground-truth CSV")->required();
  sweep->add_option("--image-side", sw.image_side)->capture_default_str();
  sweep->add_option("--start", sw.start)->capture_default_str();
  sweep->add_option("--stop", sw.stop, "Exclusive")->capture_default_str();
  sweep->add_option("--step", sw.step)->capture_default_str();
  sweep->add_option("-o,--output", sw.output, "CSV alpha,category,mae_in (default: stdout)");
  sweep->add_option("--output-json", sw.output_json, "Machine-readable summary");
  add_estimator_options(*sweep, sw.est, false, false);

  // stats
  StatsArgs st;
  auto* stats = app.add_subcommand("stats", "Dataset summary: categories and distance buckets");
  stats->add_option("--detections", st.detections, "Detections JSONL")->required();
  stats->add_option("--ground-truth", st.ground_truth, "Ground-truth CSV")->required();
  stats->add_option("--image-side", st.image_side)->capture_default_str();
  stats->add_option("--output-json", st.output_json, "Machine-readable summary");

  std::vector<const char*> argv{"fisheyedist"};
  for (const auto& a : args) argv.push_back(a.c_str());

  try {
    try {
      app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
      return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
      return app.exit(e, out, err);
    } catch (const CLI::CallForVersion& e) {
      return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
      err << "error: usage: " << e.get_name() << ": " << one_line(e.what())
          << " (run with --help for usage)\n";
      return kExitUsage;
    }

    if (calibrate->parsed()) return run_calibrate(ctx, cal);
    if (synth->parsed()) return run_synth(ctx, syn);
    if (train_cmd->parsed()) return run_train(ctx, tr);
    if (estimate->parsed()) return run_estimate(ctx, es, *estimate);
    if (evaluate->parsed()) return run_evaluate(ctx, ev, *evaluate);
    if (sweep->parsed()) return run_sweep(ctx, sw);
    if (stats->parsed()) return run_stats(ctx, st);
    err << "error: usage: InvalidArgument: no command given\n";
    return kExitUsage;
  } catch (const Error& e) {
    const ErrorClass c = error_class(e.code());
    err << "error: " << class_name(c) << ": " << to_string(e.code()) << ": " << one_line(e.what())
        << '\n';
    return exit_code(c);
  } catch (const std::exception& e) {
    err << "error: internal: Exception: " << one_line(e.what()) << '\n';
    return kExitInternal;
  }
}

}  // namespace fisheyedist::cli
