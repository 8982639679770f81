#include <gtest/gtest.h>

#include <filesystem>
#include <functional>
#include <sstream>
#include <string>

#include "fisheyedist/dataset_io.hpp"
#include "fisheyedist/errors.hpp"
#include "fisheyedist/pairs.hpp"
#include "generators.hpp"

namespace fisheyedist {
namespace {

namespace fs = std::filesystem;
using testing::for_all;
using testing::Gen;

fs::path scratch_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("fisheyedist_io_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "nothing thrown";
  return ErrorCode::IoError;
}

TEST(ErrorsAndPairs, CategoryNames) {
  EXPECT_EQ(parse_category("VV"), PairCategory::VV);
  EXPECT_EQ(parse_category("V-O"), PairCategory::VO);
  EXPECT_EQ(parse_category("O-O"), PairCategory::OO);
  EXPECT_FALSE(parse_category("vv").has_value());
  EXPECT_FALSE(parse_category("").has_value());
  EXPECT_EQ(to_string(PairCategory::VO), "VO");
  EXPECT_EQ(category_of(false, true), PairCategory::VO);
  EXPECT_EQ(category_of(true, true), PairCategory::OO);
}

TEST(ErrorsAndPairs, ErrorClasses) {
  EXPECT_EQ(error_class(ErrorCode::InvalidArgument), ErrorClass::Usage);
  EXPECT_EQ(error_class(ErrorCode::ParseError), ErrorClass::Data);
  EXPECT_EQ(error_class(ErrorCode::ValidationError), ErrorClass::Data);
  EXPECT_EQ(error_class(ErrorCode::NoConvergence), ErrorClass::Numerical);
  EXPECT_EQ(error_class(ErrorCode::DivergedTraining), ErrorClass::Numerical);
  EXPECT_EQ(to_string(ErrorCode::NoPreimage), "NoPreimage");
}

TEST(Detections, ParsesAndRoundTrips) {
  std::istringstream in(
      R"({"image_id":"img1","person_id":"a","cx":100.5,"cy":200,"w":30,"h":60,"occluded":false})"
      "\n\n"
      R"({"image_id":"img1","person_id":7,"cx":1500,"cy":900.25,"w":35,"h":50,"occluded":true})"
      "\n");
  const auto det = parse_detections(in);
  ASSERT_EQ(det.records.size(), 2u);
  EXPECT_EQ(det.records[1].box.person_id, "7");
  EXPECT_TRUE(det.records[1].box.occluded);
  std::ostringstream out;
  write_detections(out, det);
  std::istringstream back(out.str());
  EXPECT_EQ(parse_detections(back), det);
}

TEST(Detections, ReportsSourceAndLine) {
  const auto error_text = [](const std::string& text) {
    std::istringstream in(text);
    try {
      parse_detections(in, 2048, "dets.jsonl");
    } catch (const Error& e) {
      return std::pair{e.code(), std::string(e.what())};
    }
    return std::pair{ErrorCode::IoError, std::string()};
  };
  const std::string good =
      R"({"image_id":"i","person_id":"a","cx":10,"cy":10,"w":5,"h":5,"occluded":false})";
  auto [c1, m1] = error_text(good + "\n{not json\n");
  EXPECT_EQ(c1, ErrorCode::ParseError);
  EXPECT_NE(m1.find("dets.jsonl:2"), std::string::npos);
  auto [c2, m2] = error_text(
      R"({"image_id":"i","person_id":"a","cx":10,"cy":10,"w":0,"h":5,"occluded":false})");
  EXPECT_EQ(c2, ErrorCode::ValidationError);
  EXPECT_NE(m2.find("dets.jsonl:1"), std::string::npos);
  auto [c3, m3] = error_text(
      R"({"image_id":"i","person_id":"a","cx":2048,"cy":10,"w":5,"h":5,"occluded":false})");
  EXPECT_EQ(c3, ErrorCode::ValidationError);
  auto [c4, m4] = error_text(good + "\n" + good + "\n");
  EXPECT_EQ(c4, ErrorCode::ValidationError);
  EXPECT_NE(m4.find("dets.jsonl:2"), std::string::npos);
  auto [c5, m5] = error_text(R"({"image_id":"i","person_id":"a","cx":10})");
  EXPECT_EQ(c5, ErrorCode::ParseError);
}

TEST(GroundTruth, ParsesBothCategorySpellings) {
  std::istringstream in("id_a,id_b,distance_in,category\na,b,50,V-V\nb,c,12.25,OO\n");
  const auto gt = parse_ground_truth(in);
  ASSERT_EQ(gt.pairs.size(), 2u);
  EXPECT_EQ(gt.pairs[0].category, PairCategory::VV);
  EXPECT_EQ(gt.pairs[1].distance_in, 12.25);
  std::ostringstream out;
  write_ground_truth(out, gt);
  EXPECT_EQ(out.str(), "id_a,id_b,distance_in,category\na,b,50,VV\nb,c,12.25,OO\n");
}

TEST(GroundTruth, Errors) {
  const auto parse = [](const std::string& text) {
    return [text] {
      std::istringstream in(text);
      parse_ground_truth(in);
    };
  };
  EXPECT_EQ(code_of(parse("a,b,c\n")), ErrorCode::ParseError);
  EXPECT_EQ(code_of(parse("id_a,id_b,distance_in,category\na,b,50\n")), ErrorCode::ParseError);
  EXPECT_EQ(code_of(parse("id_a,id_b,distance_in,category\na,b,x,VV\n")), ErrorCode::ParseError);
  EXPECT_EQ(code_of(parse("id_a,id_b,distance_in,category\na,b,5,XX\n")), ErrorCode::ParseError);
  EXPECT_EQ(code_of(parse("id_a,id_b,distance_in,category\na,b,-5,VV\n")),
            ErrorCode::ValidationError);
  // Header only is an empty, valid file.
  std::istringstream empty("id_a,id_b,distance_in,category\n");
  EXPECT_TRUE(parse_ground_truth(empty).pairs.empty());
}

DetectionsFile two_images() {
  DetectionsFile det;
  det.records.push_back({"img1", {{1000, 1000}, 30, 60, false, "a"}});
  det.records.push_back({"img1", {{1100, 1000}, 30, 60, true, "b"}});
  det.records.push_back({"img2", {{1000, 1100}, 30, 60, false, "a"}});
  return det;
}

TEST(ResolvePerson, BareAndQualifiedIds) {
  const auto det = two_images();
  EXPECT_EQ(resolve_person(det, "b"), 1u);
  EXPECT_EQ(resolve_person(det, "img2/a"), 2u);
  EXPECT_EQ(code_of([&] { resolve_person(det, "a"); }), ErrorCode::ValidationError);
  EXPECT_EQ(code_of([&] { resolve_person(det, "img3/a"); }), ErrorCode::ValidationError);
  EXPECT_EQ(code_of([&] { resolve_person(det, "zz"); }), ErrorCode::ValidationError);
}

TEST(ValidateGroundTruth, CategoryMustMatchFlags) {
  const auto det = two_images();
  GroundTruthFile ok{{{"img1/a", "b", 100, PairCategory::VO}}};
  EXPECT_NO_THROW(validate_ground_truth(ok, det));
  GroundTruthFile bad{{{"img1/a", "b", 100, PairCategory::VV}}};
  EXPECT_EQ(code_of([&] { validate_ground_truth(bad, det); }), ErrorCode::ValidationError);
  const auto ds = make_eval_dataset(det, ok);
  EXPECT_EQ(ds.boxes.size(), 3u);
  EXPECT_EQ(ds.boxes[0].person_id, "img1/a");
  EXPECT_EQ(ds.pairs[0].id_b, "img1/b");
}

TEST(Stats, EmptyGroundTruthIsAllZero) {
  const auto s = dataset_stats(two_images(), GroundTruthFile{});
  EXPECT_EQ(s.total_pairs, 0u);
  EXPECT_EQ(s.distinct_distances, 0u);
  EXPECT_FALSE(s.min_distance_in.has_value());
  for (auto c : s.buckets) EXPECT_EQ(c, 0u);
}

TEST(Stats, CountsBucketsAndDistinctDistances) {
  const auto det = two_images();
  GroundTruthFile gt{{{"img1/a", "b", 72, PairCategory::VO},
                      {"img1/a", "b", 71.99, PairCategory::VO},
                      {"img1/a", "img2/a", 144, PairCategory::VV},
                      {"img1/b", "img2/a", 144.01, PairCategory::VO}}};
  const auto s = dataset_stats(det, gt);
  EXPECT_EQ(s.total_pairs, 4u);
  EXPECT_EQ(s.distinct_distances, 4u);
  EXPECT_EQ(s.category_counts, (std::array<std::size_t, 3>{1, 3, 0}));
  EXPECT_EQ(s.buckets, (std::array<std::size_t, 3>{1, 2, 1}));
  EXPECT_EQ(*s.min_distance_in, 71.99);
  EXPECT_EQ(*s.max_distance_in, 144.01);
}

TEST(Camera, JsonRoundTripIsBitExact) {
  for_all(61, 200, [](Gen& g) {
    const auto cam = g.camera();
    const auto back = camera_from_json(camera_to_json(cam));
    EXPECT_EQ(back.xi, cam.xi);
    EXPECT_EQ(back.fx, cam.fx);
    EXPECT_EQ(back.fy, cam.fy);
    EXPECT_EQ(back.cx, cam.cx);
    EXPECT_EQ(back.cy, cam.cy);
    EXPECT_EQ(back.mount_height_in, cam.mount_height_in);
  });
  EXPECT_EQ(code_of([] { camera_from_json("{"); }), ErrorCode::ParseError);
  EXPECT_EQ(code_of([] { camera_from_json(R"({"xi":1})"); }), ErrorCode::ParseError);
  CameraParams flat;
  flat.fx = 0.0;
  EXPECT_EQ(code_of([&] { camera_from_json(camera_to_json(flat)); }), ErrorCode::ValidationError);
}

TEST(Files, RoundTripThroughDisk) {
  const auto dir = scratch_dir("roundtrip");
  Gen g(62);

  std::vector<Correspondence> corr;
  for (int i = 0; i < 20; ++i) {
    corr.push_back({{g.uniform(-300, 300), g.uniform(-300, 300), g.uniform(10, 100)},
                    {g.uniform(0, 2048), g.uniform(0, 2048)}});
  }
  save_correspondences(corr, dir / "corr.csv");
  const auto corr_back = load_correspondences(dir / "corr.csv");
  ASSERT_EQ(corr_back.size(), corr.size());
  for (std::size_t i = 0; i < corr.size(); ++i) {
    EXPECT_EQ(corr_back[i].world.x, corr[i].world.x);
    EXPECT_EQ(corr_back[i].pixel, corr[i].pixel);
  }

  std::vector<PixelPairSample> samples;
  for (int i = 0; i < 20; ++i) {
    samples.push_back({{g.uniform(0, 2048), g.uniform(0, 2048)},
                       {g.uniform(0, 2048), g.uniform(0, 2048)},
                       g.uniform(1, 800)});
  }
  save_training_pairs(samples, dir / "pairs.csv");
  const auto samples_back = load_training_pairs(dir / "pairs.csv");
  ASSERT_EQ(samples_back.size(), samples.size());
  EXPECT_EQ(samples_back[7].b, samples[7].b);
  EXPECT_EQ(samples_back[7].distance_in, samples[7].distance_in);

  const std::vector<VirtualPerson> people{{"a", 1.5, -2.25, 66.5, 0.0}, {"b", -100, 40, 70, 0.4}};
  save_people(people, dir / "people.csv");
  const auto people_back = load_people(dir / "people.csv");
  ASSERT_EQ(people_back.size(), 2u);
  EXPECT_EQ(people_back[1].id, "b");
  EXPECT_EQ(people_back[1].occlusion_fraction, 0.4);

  const auto cam = g.camera();
  save_camera(cam, dir / "camera.json");
  EXPECT_EQ(load_camera(dir / "camera.json").fx, cam.fx);

  const auto det = two_images();
  save_detections(det, dir / "det.jsonl");
  EXPECT_EQ(load_detections(dir / "det.jsonl"), det);

  EXPECT_EQ(code_of([&] { load_detections(dir / "missing.jsonl"); }), ErrorCode::IoError);
  fs::remove_all(dir);
}

TEST(SceneConversion, MatchesScene) {
  const std::vector<VirtualPerson> people{{"a", 0, 50, 65, 0}, {"b", 100, -20, 65, 0.5}};
  const auto scene = generate_scene(people, CameraParams{});
  const auto det = to_detections(scene, "s1");
  const auto gt = to_ground_truth(scene);
  ASSERT_EQ(det.records.size(), 2u);
  EXPECT_EQ(det.records[1].image_id, "s1");
  ASSERT_EQ(gt.pairs.size(), 1u);
  EXPECT_EQ(gt.pairs[0].category, PairCategory::VO);
  EXPECT_NO_THROW(validate_ground_truth(gt, det));
}

TEST(FormatDouble, ShortestRoundTrip) {
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(70.08), "70.08");
  EXPECT_EQ(format_double(12.0), "12");
  for_all(63, 500, [](Gen& g) {
    const double v = g.uniform(-1e6, 1e6);
    EXPECT_EQ(std::stod(format_double(v)), v);
  });
}

}  // namespace
}  // namespace fisheyedist
