// Writes the DEPOF-style annotation fixtures used by the tests:
//   fixed_detections.jsonl, fixed_ground_truth.csv,
//   varying_detections.jsonl, varying_ground_truth.csv
// with the default camera.

#include <CLI11.hpp>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>

#include "fisheyedist/dataset_io.hpp"
#include "fisheyedist/errors.hpp"
#include "fisheyedist_tools/depof_fixtures.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate DEPOF-style annotation fixtures", "make_depof_fixtures"};
  std::string out_dir;
  std::uint64_t fixed_seed = 1;
  std::uint64_t varying_seed = 2;
  app.add_option("output_dir", out_dir, "Directory to write into")->required();
  app.add_option("--fixed-seed", fixed_seed)->capture_default_str();
  app.add_option("--varying-seed", varying_seed)->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  namespace fx = fisheyedist::fixtures;
  try {
    const std::filesystem::path dir(out_dir);
    std::filesystem::create_directories(dir);
    const fisheyedist::CameraParams camera;
    const auto fixed = fx::make_fixed_height_set(camera, fixed_seed);
    fisheyedist::save_detections(fixed.detections, dir / "fixed_detections.jsonl");
    fisheyedist::save_ground_truth(fixed.ground_truth, dir / "fixed_ground_truth.csv");
    const auto varying = fx::make_varying_height_set(camera, varying_seed);
    fisheyedist::save_detections(varying.detections, dir / "varying_detections.jsonl");
    fisheyedist::save_ground_truth(varying.ground_truth, dir / "varying_ground_truth.csv");
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
