#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "fisheyedist/center_adjust.hpp"
#include "fisheyedist/errors.hpp"
#include "fisheyedist/geo_estimator.hpp"
#include "generators.hpp"

namespace fisheyedist {
namespace {

using testing::for_all;
using testing::Gen;

// Centre of a person standing at (x, y) with height h, as the geometry
// estimator sees it: the projection of the mid-height point.
PixelPoint mid_center(double x, double y, double h, const CameraParams& cam) {
  return project({x, y, cam.mount_height_in - h / 2.0}, cam);
}

TEST(EstimateDistance, SameCentreIsZero) {
  const CameraParams cam;
  const PixelPoint c{1300.0, 800.0};
  EXPECT_EQ(estimate_distance({c, 65.0, {}}, {c, 65.0, {}}, cam), 0.0);
}

TEST(EstimateDistance, ThreeFourFive) {
  CameraParams cam;
  cam.mount_height_in = 114.0;
  // Mid-height plane at z = 100 needs H = 28.
  const auto a = project({0, 0, 100}, cam);
  const auto b = project({30, 40, 100}, cam);
  EXPECT_NEAR(estimate_distance({a, 28.0, {}}, {b, 28.0, {}}, cam), 50.0, 1e-9);
}

TEST(EstimateDistance, LongestDepofPair) {
  const CameraParams cam;
  const auto a = mid_center(-350.98, -36.0, 70.08, cam);
  const auto b = mid_center(350.98, -36.0, 70.08, cam);
  EXPECT_NEAR(estimate_distance({a, 70.08, {}}, {b, 70.08, {}}, cam), 701.96, 1e-6);
}

TEST(EstimateDistance, UsesCachedWorldPoint) {
  const CameraParams cam;
  LocalizedPerson a{{1024, 1024}, 65.0, WorldPoint{0, 0, 81.5}};
  LocalizedPerson b{{1024, 1024}, 65.0, WorldPoint{3, 4, 81.5}};
  EXPECT_DOUBLE_EQ(estimate_distance(a, b, cam), 5.0);
}

TEST(EstimateDistance, PropagatesErrors) {
  const CameraParams cam;
  try {
    estimate_distance({{1024, 1024}, 250.0, {}}, {{1000, 1000}, 65.0, {}}, cam);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidHeight);
  }
}

TEST(Localize, FillsCache) {
  const CameraParams cam;
  const auto p = localize(mid_center(40, -25, 65, cam), 65.0, cam);
  ASSERT_TRUE(p.world.has_value());
  EXPECT_NEAR(p.world->x, 40.0, 1e-9);
  EXPECT_NEAR(p.world->y, -25.0, 1e-9);
  EXPECT_DOUBLE_EQ(p.world->z, 81.5);
}

TEST(BatchDistances, CollinearPeople) {
  const CameraParams cam;
  std::vector<LocalizedPerson> people;
  for (double x : {0.0, 60.0, 120.0}) people.push_back({mid_center(x, 50, 65, cam), 65.0, {}});
  const auto m = batch_distances(people, cam);
  EXPECT_NEAR(m.at(0, 1), 60.0, 1e-6);
  EXPECT_NEAR(m.at(1, 2), 60.0, 1e-6);
  EXPECT_NEAR(m.at(0, 2), 120.0, 1e-6);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(m.at(i, i), 0.0);
}

TEST(BatchDistances, TwoPeopleMatchSinglePair) {
  const CameraParams cam;
  const std::vector<LocalizedPerson> people{{{1400, 700}, 60.0, {}}, {{600, 1500}, 72.0, {}}};
  const auto m = batch_distances(people, cam);
  EXPECT_EQ(m.at(0, 1), estimate_distance(people[0], people[1], cam));
}

TEST(BatchDistances, HundredPeople) {
  const CameraParams cam;
  Gen g(21);
  std::vector<LocalizedPerson> people;
  for (int i = 0; i < 100; ++i) {
    people.push_back({mid_center(g.uniform(-400, 400), g.uniform(-160, 160), 65, cam), 65.0, {}});
  }
  const auto m = batch_distances(people, cam);
  std::size_t finite = 0;
  for (std::size_t i = 0; i < 100; ++i) {
    for (std::size_t j = i + 1; j < 100; ++j) {
      if (std::isfinite(m.at(i, j))) ++finite;
      EXPECT_EQ(m.at(i, j), m.at(j, i));
    }
  }
  EXPECT_EQ(finite, 4950u);
}

TEST(BatchDistances, RecordsPerPersonErrors) {
  const CameraParams cam;
  const std::vector<LocalizedPerson> people{
      {{1100, 1000}, 65.0, {}}, {{900, 1000}, 300.0, {}}, {{1024, 1200}, 65.0, {}}};
  const auto m = batch_distances(people, cam);
  ASSERT_TRUE(m.error(1).has_value());
  EXPECT_EQ(m.error(1)->code, ErrorCode::InvalidHeight);
  EXPECT_FALSE(m.valid(0, 1));
  EXPECT_TRUE(std::isnan(m.at(0, 1)));
  EXPECT_TRUE(m.valid(0, 2));
  EXPECT_TRUE(std::isfinite(m.at(0, 2)));
  EXPECT_THROW(batch_distances(std::span(people).first(1), cam), Error);
}

TEST(GeoProperties, SymmetryAndTriangleInequality) {
  for_all(22, 200, [](Gen& g) {
    const CameraParams cam;
    std::vector<LocalizedPerson> people;
    const int n = g.integer(3, 12);
    for (int i = 0; i < n; ++i) {
      // Stay inside the horizon circle (radius fx for xi = 1).
      const double r = g.uniform(0, 950), phi = g.angle();
      people.push_back({{1024 + r * std::cos(phi), 1024 + r * std::sin(phi)}, g.uniform(55, 80), {}});
    }
    const auto m = batch_distances(people, cam);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        ASSERT_EQ(m.at(i, j), m.at(j, i));
        EXPECT_EQ(estimate_distance(people[i], people[j], cam),
                  estimate_distance(people[j], people[i], cam));
        for (int k = 0; k < n; ++k) {
          EXPECT_LE(m.at(i, k), m.at(i, j) + m.at(j, k) + 1e-9);
        }
      }
    }
  });
}

TEST(GeoProperties, ExactWhenHeightsMatch) {
  for_all(23, 300, [](Gen& g) {
    const CameraParams cam;
    const double h1 = g.uniform(55, 80), h2 = g.uniform(55, 80);
    const double x1 = g.uniform(-400, 400), y1 = g.uniform(-160, 160);
    const double x2 = g.uniform(-400, 400), y2 = g.uniform(-160, 160);
    const LocalizedPerson a{mid_center(x1, y1, h1, cam), h1, {}};
    const LocalizedPerson b{mid_center(x2, y2, h2, cam), h2, {}};
    // Mid-height points differ in z when heights differ.
    const double dz = (h1 - h2) / 2.0;
    const double truth = std::sqrt((x1 - x2) * (x1 - x2) + (y1 - y2) * (y1 - y2) + dz * dz);
    EXPECT_NEAR(estimate_distance(a, b, cam), truth, 1e-6);
  });
}

// Centre adjustment

BoundingBox box_at(double u, double v, double h, bool occluded = false) {
  return BoundingBox{{u, v}, 40.0, h, occluded, "p"};
}

TEST(Adjust, AxisAlignedExample) {
  const auto c = adjust(box_at(1524, 1024, 200), 0.5, {1024, 1024});
  EXPECT_DOUBLE_EQ(c.u, 1474.0);
  EXPECT_DOUBLE_EQ(c.v, 1024.0);
}

TEST(Adjust, ZeroAlphaIsIdentity) {
  const auto b = box_at(1333.25, 777.5, 120);
  EXPECT_EQ(adjust(b, 0.0, {1024, 1024}), b.center);
  // Even on the image centre.
  EXPECT_EQ(adjust(box_at(1024, 1024, 50), 0.0, {1024, 1024}), (PixelPoint{1024, 1024}));
}

TEST(Adjust, Errors) {
  const auto code_of = [](auto&& f) {
    try {
      f();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::IoError;  // sentinel: nothing thrown
  };
  EXPECT_EQ(code_of([] { adjust(box_at(1024, 1124, 300), 0.8, {1024, 1024}); }),
            ErrorCode::OvershootsCenter);
  EXPECT_EQ(code_of([] { adjust(box_at(1024, 1024, 30), 0.2, {1024, 1024}); }),
            ErrorCode::UndefinedDirection);
  EXPECT_EQ(code_of([] { adjust(box_at(1200, 1024, 30), 1.0, {1024, 1024}); }),
            ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([] { adjust(box_at(1200, 1024, 30), -0.11, {1024, 1024}); }),
            ErrorCode::InvalidArgument);
  // Exactly reaching the centre is allowed.
  const auto c = adjust(box_at(1124, 1024, 200), 1.0 - 1e-12, {1024, 1024});
  EXPECT_NEAR(c.u, 1024.0, 1e-9);
}

TEST(AdjustPair, Examples) {
  const PixelPoint center{1024, 1024};
  const auto v = box_at(1524, 1024, 200, false);
  const auto o = box_at(1024, 424, 160, true);
  const auto [a0, b0] = adjust_pair(v, box_at(500, 500, 90), 0.0, 0.3, center);
  EXPECT_EQ(a0, v.center);
  EXPECT_EQ(b0, (PixelPoint{500, 500}));

  const auto [a, b] = adjust_pair(v, o, 0.1, 0.5, center);
  EXPECT_DOUBLE_EQ(a.u, 1524.0 - 200 * 0.05);
  EXPECT_DOUBLE_EQ(b.v, 424.0 + 160 * 0.25);

  const auto o2 = box_at(300, 1700, 100, true);
  const auto [c, d] = adjust_pair(o, o2, 0.1, 0.5, center);
  EXPECT_EQ(c, adjust(o, 0.5, center));
  EXPECT_EQ(d, adjust(o2, 0.5, center));
}

TEST(AdjustProperties, RadiusLawAndAnglePreservation) {
  for_all(24, 2000, [](Gen& g) {
    const PixelPoint center{g.uniform(900, 1100), g.uniform(900, 1100)};
    const double r = g.uniform(1.0, 1400.0);
    const double phi = g.angle();
    const auto box = box_at(center.u + r * std::cos(phi), center.v + r * std::sin(phi),
                            g.uniform(1.0, 2.0 * r));
    const double r0 = std::hypot(box.center.u - center.u, box.center.v - center.v);
    const double alpha = g.uniform(kMinAlpha, kMaxAlpha);
    if (alpha * box.height / 2.0 > r0) return;
    const auto c = adjust(box, alpha, center);
    const double r1 = std::hypot(c.u - center.u, c.v - center.v);
    EXPECT_NEAR(r1, r0 - alpha * box.height / 2.0, 1e-9);
    if (r1 > 1e-6) {
      const double a0 = std::atan2(box.center.v - center.v, box.center.u - center.u);
      const double a1 = std::atan2(c.v - center.v, c.u - center.u);
      EXPECT_NEAR(std::remainder(a1 - a0, 2.0 * std::numbers::pi), 0.0, 1e-9);
    }
  });
}

}  // namespace
}  // namespace fisheyedist
