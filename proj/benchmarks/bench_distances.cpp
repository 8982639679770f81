#include <benchmark/benchmark.h>

#include <cmath>
#include <random>
#include <vector>

#include "fisheyedist/fisheyedist.hpp"

namespace fd = fisheyedist;

namespace {

std::vector<fd::LocalizedPerson> crowd(int n) {
  std::mt19937_64 rng(3);
  // Inside the horizon circle of the default camera.
  std::uniform_real_distribution<double> radius(0.0, 950.0), angle(0.0, 6.283185307179586);
  std::vector<fd::LocalizedPerson> people;
  for (int i = 0; i < n; ++i) {
    const double r = radius(rng), a = angle(rng);
    people.push_back({{1024.0 + r * std::cos(a), 1024.0 + r * std::sin(a)}, 65.0, {}});
  }
  return people;
}

void BM_BatchDistances(benchmark::State& state) {
  const auto people = crowd(static_cast<int>(state.range(0)));
  const fd::CameraParams cam;
  for (auto _ : state) benchmark::DoNotOptimize(fd::batch_distances(people, cam));
  state.SetItemsProcessed(state.iterations() * state.range(0) * (state.range(0) - 1) / 2);
}
BENCHMARK(BM_BatchDistances)->Arg(10)->Arg(100)->Arg(400);

// Pairwise loop without the shared back-projection, for comparison.
void BM_PairwiseDistances(benchmark::State& state) {
  const auto people = crowd(static_cast<int>(state.range(0)));
  const fd::CameraParams cam;
  for (auto _ : state) {
    double sum = 0.0;
    for (std::size_t i = 0; i < people.size(); ++i) {
      for (std::size_t j = i + 1; j < people.size(); ++j) {
        sum += fd::estimate_distance(people[i], people[j], cam);
      }
    }
    benchmark::DoNotOptimize(sum);
  }
}
BENCHMARK(BM_PairwiseDistances)->Arg(100);

void BM_MlpPredict(benchmark::State& state) {
  const auto model = fd::MlpModel::initialized({3, 100, 100, 100, 100, 1}, 1);
  const auto people = crowd(100);
  std::vector<fd::PairFeature> features;
  for (std::size_t i = 0; i < people.size(); ++i) {
    for (std::size_t j = i + 1; j < people.size(); ++j) {
      features.push_back(fd::extract_feature(people[i].center, people[j].center, {1024, 1024}));
    }
  }
  for (auto _ : state) benchmark::DoNotOptimize(fd::predict_batch(model, features));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(features.size()));
}
BENCHMARK(BM_MlpPredict)->Unit(benchmark::kMillisecond);

void BM_Project(benchmark::State& state) {
  const fd::CameraParams cam;
  fd::WorldPoint p{120.0, -80.0, 81.5};
  for (auto _ : state) {
    benchmark::DoNotOptimize(fd::project(p, cam));
    p.x += 1e-9;
  }
}
BENCHMARK(BM_Project);

void BM_InverseProject(benchmark::State& state) {
  const fd::CameraParams cam;
  fd::PixelPoint x{1500.0, 700.0};
  for (auto _ : state) {
    benchmark::DoNotOptimize(fd::inverse_project(x, 81.5, cam));
    x.u += 1e-9;
  }
}
BENCHMARK(BM_InverseProject);

}  // namespace

BENCHMARK_MAIN();
