#include "fisheyedist_tools/depof_fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <map>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "fisheyedist/errors.hpp"
#include "fisheyedist/synth_scene.hpp"

namespace fisheyedist::fixtures {

namespace {

constexpr double kShortest = 11.63;
constexpr double kLongest = 701.96;
constexpr double kHalfLength = 432.0 - 24.0;  // 72 ft room, 2 ft clearance
constexpr double kHalfWidth = 168.0 - 24.0;   // 28 ft room
constexpr double kMinSeparation = 18.0;
constexpr double kFixedHeight = 70.08;
constexpr double kOcclusion = 0.5;

struct Mark {
  std::string name;
  double x = 0.0;
  double y = 0.0;
};

double round_hundredth(double d) { return std::round(d * 100.0) / 100.0; }

int bucket_of(double d) { return d < 72.0 ? 0 : (d <= 144.0 ? 1 : 2); }

double mark_distance(const Mark& a, const Mark& b) {
  return round_hundredth(std::hypot(a.x - b.x, a.y - b.y));
}

// Anchors fix the extreme pairs: A-J spans the longest distance and G-11 the
// shortest. Everyone else is placed at random, clear of the others.
std::vector<Mark> make_marks(int count, std::mt19937_64& rng) {
  std::vector<Mark> marks{{"A", -0.5 * kLongest, -0.25 * kHalfWidth},
                          {"J", 0.5 * kLongest, -0.25 * kHalfWidth},
                          {"G", -60.0, 0.5 * kHalfWidth},
                          {"11", -60.0 + kShortest, 0.5 * kHalfWidth}};
  std::uniform_real_distribution<double> ux(-kHalfLength, kHalfLength);
  std::uniform_real_distribution<double> uy(-kHalfWidth, kHalfWidth);
  int next = 1;
  while (static_cast<int>(marks.size()) < count) {
    const Mark m{fmt::format("P{}", next), ux(rng), uy(rng)};
    const bool clear = std::all_of(marks.begin(), marks.end(), [&](const Mark& q) {
      return std::hypot(q.x - m.x, q.y - m.y) >= kMinSeparation;
    });
    if (!clear) continue;
    marks.push_back(m);
    ++next;
  }
  return marks;
}

bool is_anchor_pair(std::size_t i, std::size_t j) {
  return (i == 0 && j == 1) || (i == 2 && j == 3);
}

struct MarkPair {
  std::size_t i = 0;
  std::size_t j = 0;
  double distance = 0.0;
  int bucket = 0;
};

// Mark pairs usable as annotations: the anchors plus every pair strictly
// inside the anchor range, with rounded distances unique across the set.
std::vector<MarkPair> usable_pairs(const std::vector<Mark>& marks) {
  std::map<double, int> seen;
  std::vector<MarkPair> all;
  for (std::size_t i = 0; i < marks.size(); ++i) {
    for (std::size_t j = i + 1; j < marks.size(); ++j) {
      const double d = mark_distance(marks[i], marks[j]);
      ++seen[d];
      all.push_back({i, j, d, bucket_of(d)});
    }
  }
  std::vector<MarkPair> out;
  for (const auto& p : all) {
    if (seen[p.distance] != 1) continue;
    if (is_anchor_pair(p.i, p.j) || (p.distance > kShortest && p.distance < kLongest)) {
      out.push_back(p);
    }
  }
  return out;
}

struct Person {
  double height = kFixedHeight;
  bool occluded = false;
};

struct Selected {
  std::size_t image = 0;
  MarkPair pair;
};

AnnotationSet render(const CameraParams& camera, const std::vector<Mark>& marks,
                     const std::vector<std::vector<Person>>& images,
                     const std::vector<std::string>& image_ids, std::vector<Selected> picks) {
  std::sort(picks.begin(), picks.end(), [](const Selected& a, const Selected& b) {
    return std::tie(a.image, a.pair.i, a.pair.j) < std::tie(b.image, b.pair.i, b.pair.j);
  });
  AnnotationSet set;
  set.detections.image_side = kDefaultImageSide;
  for (std::size_t img = 0; img < images.size(); ++img) {
    std::set<std::size_t> used;
    for (const auto& s : picks) {
      if (s.image != img) continue;
      used.insert(s.pair.i);
      used.insert(s.pair.j);
    }
    std::vector<VirtualPerson> people;
    for (std::size_t m : used) {
      const auto& p = images[img][m];
      people.push_back({marks[m].name, marks[m].x, marks[m].y, p.height,
                        p.occluded ? kOcclusion : 0.0});
    }
    const SyntheticScene scene = generate_scene(people, camera);
    for (const auto& box : scene.boxes) {
      set.detections.records.push_back({image_ids[img], box});
    }
  }
  for (const auto& s : picks) {
    const auto& people = images[s.image];
    const auto& id = image_ids[s.image];
    set.ground_truth.pairs.push_back(
        {id + "/" + marks[s.pair.i].name, id + "/" + marks[s.pair.j].name, s.pair.distance,
         category_of(people[s.pair.i].occluded, people[s.pair.j].occluded)});
  }
  return set;
}

std::size_t category_index(const std::vector<Person>& people, const MarkPair& p) {
  return static_cast<std::size_t>(category_of(people[p.i].occluded, people[p.j].occluded));
}

std::vector<Person> make_people(std::size_t count, double occluded_share, bool varying,
                                std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uh(60.0, 76.0);
  std::bernoulli_distribution occ(occluded_share);
  std::vector<Person> people(count);
  for (auto& p : people) {
    p.height = varying ? round_hundredth(uh(rng)) : kFixedHeight;
    p.occluded = occ(rng);
  }
  return people;
}

}  // namespace

SetTargets fixed_height_targets() {
  SetTargets t;
  t.cells = {{{12, 7, 16}, {10, 6, 16}, {3, 2, 1}}};
  t.distinct_distances = 73;
  return t;
}

SetTargets varying_height_targets() {
  SetTargets t;
  t.cells = {{{18, 28, 54}, {22, 36, 68}, {5, 9, 16}}};
  t.distinct_distances = 67;
  return t;
}

AnnotationSet make_fixed_height_set(const CameraParams& camera, std::uint64_t seed) {
  const SetTargets targets = fixed_height_targets();
  std::mt19937_64 rng(seed);
  for (int attempt = 0; attempt < 10000; ++attempt) {
    const auto marks = make_marks(40, rng);
    auto people = make_people(marks.size(), 0.3, false, rng);
    const auto pairs = usable_pairs(marks);

    // Anchors first, then a shuffled pool; take what each cell still needs.
    auto need = targets.cells;
    std::vector<Selected> picks;
    std::vector<MarkPair> pool;
    bool anchors_ok = true;
    for (const auto& p : pairs) {
      if (!is_anchor_pair(p.i, p.j)) {
        pool.push_back(p);
        continue;
      }
      auto& n = need[category_index(people, p)][static_cast<std::size_t>(p.bucket)];
      if (n == 0) anchors_ok = false;
      --n;
      picks.push_back({0, p});
    }
    if (!anchors_ok || picks.size() != 2) continue;
    std::shuffle(pool.begin(), pool.end(), rng);
    for (const auto& p : pool) {
      auto& n = need[category_index(people, p)][static_cast<std::size_t>(p.bucket)];
      if (n > 0) {
        --n;
        picks.push_back({0, p});
      }
    }
    const bool done = std::all_of(need.begin(), need.end(), [](const auto& row) {
      return std::all_of(row.begin(), row.end(), [](int n) { return n == 0; });
    });
    if (!done) continue;
    return render(camera, marks, {people}, {"fixed"}, picks);
  }
  throw Error(ErrorCode::InvalidArgument, "could not meet the fixed-height targets");
}

AnnotationSet make_varying_height_set(const CameraParams& camera, std::uint64_t seed) {
  const SetTargets targets = varying_height_targets();
  // Distinct distances per bucket; the rest of each bucket's pairs repeat
  // them in other images.
  constexpr std::array<int, 3> kDistinct{12, 19, 36};
  constexpr std::size_t kImages = 8;
  std::mt19937_64 rng(seed);

  for (int attempt = 0; attempt < 10000; ++attempt) {
    const auto marks = make_marks(24, rng);
    std::vector<std::vector<Person>> images;
    std::vector<std::string> ids;
    for (std::size_t k = 0; k < kImages; ++k) {
      images.push_back(make_people(marks.size(), 0.35, true, rng));
      ids.push_back(fmt::format("varying{:02}", k + 1));
    }

    std::array<std::vector<MarkPair>, 3> chosen;
    std::array<std::vector<MarkPair>, 3> rest;
    for (const auto& p : usable_pairs(marks)) {
      auto& dst = is_anchor_pair(p.i, p.j) ? chosen : rest;
      dst[static_cast<std::size_t>(p.bucket)].push_back(p);
    }
    bool enough = true;
    for (std::size_t b = 0; b < 3; ++b) {
      std::shuffle(rest[b].begin(), rest[b].end(), rng);
      while (static_cast<int>(chosen[b].size()) < kDistinct[b] && !rest[b].empty()) {
        chosen[b].push_back(rest[b].back());
        rest[b].pop_back();
      }
      if (static_cast<int>(chosen[b].size()) != kDistinct[b]) enough = false;
    }
    if (!enough) continue;

    auto need = targets.cells;
    std::vector<Selected> picks;
    std::set<std::pair<std::size_t, std::size_t>> taken;  // (image, pair index in bucket)
    bool ok = true;
    for (std::size_t b = 0; b < 3 && ok; ++b) {
      // Every distinct distance appears at least once, in whichever image
      // offers the category with the most outstanding demand.
      for (std::size_t k = 0; k < chosen[b].size() && ok; ++k) {
        const auto& p = chosen[b][k];
        std::size_t best_img = kImages;
        int best_need = 0;
        for (std::size_t img = 0; img < kImages; ++img) {
          const int n = need[category_index(images[img], p)][b];
          if (n > best_need) {
            best_need = n;
            best_img = img;
          }
        }
        if (best_img == kImages) {
          ok = false;
          break;
        }
        --need[category_index(images[best_img], p)][b];
        taken.insert({best_img, b * 1000 + k});
        picks.push_back({best_img, p});
      }
      // Then top up each cell from unused image/pair combinations.
      std::vector<std::pair<std::size_t, std::size_t>> pool;
      for (std::size_t img = 0; img < kImages; ++img) {
        for (std::size_t k = 0; k < chosen[b].size(); ++k) pool.push_back({img, k});
      }
      std::shuffle(pool.begin(), pool.end(), rng);
      for (const auto& [img, k] : pool) {
        if (taken.count({img, b * 1000 + k})) continue;
        const auto& p = chosen[b][k];
        auto& n = need[category_index(images[img], p)][b];
        if (n == 0) continue;
        --n;
        taken.insert({img, b * 1000 + k});
        picks.push_back({img, p});
      }
      for (const auto& row : need) {
        if (row[b] != 0) ok = false;
      }
    }
    if (!ok) continue;
    return render(camera, marks, images, ids, picks);
  }
  throw Error(ErrorCode::InvalidArgument, "could not meet the varying-height targets");
}

}  // namespace fisheyedist::fixtures
