#include "fisheyedist/eval_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <unordered_map>

#include "fisheyedist/geo_estimator.hpp"

namespace fisheyedist {

std::string_view to_string(CategoryFilter f) {
  switch (f) {
    case CategoryFilter::VV: return "VV";
    case CategoryFilter::VO: return "VO";
    case CategoryFilter::OO: return "OO";
    case CategoryFilter::All: return "All";
  }
  return "??";
}

bool matches(CategoryFilter f, PairCategory c) {
  switch (f) {
    case CategoryFilter::VV: return c == PairCategory::VV;
    case CategoryFilter::VO: return c == PairCategory::VO;
    case CategoryFilter::OO: return c == PairCategory::OO;
    case CategoryFilter::All: return true;
  }
  return false;
}

double mae(std::span<const PairResult> results, CategoryFilter filter) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& r : results) {
    if (!matches(filter, r.category)) continue;
    sum += std::abs(r.est_distance_in - r.gt_distance_in);
    ++n;
  }
  if (n == 0) {
    throw Error(ErrorCode::EmptyCategory,
                fmt::format("no pairs in category {}", to_string(filter)));
  }
  return sum / static_cast<double>(n);
}

ViolationReport violations(std::span<const PairResult> results, double threshold_in) {
  if (results.empty()) throw Error(ErrorCode::EmptyCategory, "no pairs to classify");
  ViolationReport report;
  report.threshold_in = threshold_in;
  auto& c = report.counts;
  for (const auto& r : results) {
    const bool truth = r.gt_distance_in < threshold_in;
    const bool guess = r.est_distance_in < threshold_in;
    if (truth && guess) ++c.tp;
    else if (!truth && !guess) ++c.tn;
    else if (guess) ++c.fp;
    else ++c.fn;
  }
  report.ccr_percent =
      100.0 * static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
  const std::size_t f1_denom = 2 * c.tp + c.fp + c.fn;
  if (f1_denom == 0) {
    report.degenerate_f1 = true;
    report.f1_percent = 100.0;
  } else {
    report.f1_percent = 100.0 * static_cast<double>(2 * c.tp) / static_cast<double>(f1_denom);
  }
  return report;
}

EvalReport summarize(std::span<const PairResult> results, double threshold_in) {
  EvalReport report;
  for (std::size_t k = 0; k < kAllFilters.size(); ++k) {
    auto& cat = report.categories[k];
    for (const auto& r : results) {
      if (matches(kAllFilters[k], r.category)) ++cat.count;
    }
    if (cat.count > 0) cat.mae_in = mae(results, kAllFilters[k]);
  }
  report.violation = violations(results, threshold_in);
  return report;
}

std::string describe(const Estimator& estimator) {
  if (const auto* g = std::get_if<GeometryEstimator>(&estimator)) {
    return fmt::format("Geometry (H/2 = {:.2f} in)", g->assumed_height_in / 2.0);
  }
  return "Neural network (MLP)";
}

std::vector<PairResult> estimate_pairs(const Estimator& estimator, const Adjustment& adjustment,
                                       const EvalDataset& dataset) {
  std::unordered_map<std::string, std::size_t> index;
  std::vector<PixelPoint> centers;
  centers.reserve(dataset.boxes.size());
  for (const auto& box : dataset.boxes) {
    if (!index.emplace(box.person_id, centers.size()).second) {
      throw Error(ErrorCode::ValidationError,
                  fmt::format("duplicate person id '{}' in evaluation set", box.person_id));
    }
    const double alpha = box.occluded ? adjustment.alpha_occluded : adjustment.alpha_visible;
    centers.push_back(adjust(box, alpha, dataset.image_center));
  }
  const auto lookup = [&](const std::string& id) {
    const auto it = index.find(id);
    if (it == index.end()) {
      throw Error(ErrorCode::ValidationError, fmt::format("unknown person id '{}'", id));
    }
    return it->second;
  };

  std::vector<PairResult> results;
  results.reserve(dataset.pairs.size());
  for (const auto& p : dataset.pairs) {
    results.push_back(PairResult{p.id_a + "-" + p.id_b, p.category, p.distance_in, 0.0});
  }

  if (const auto* geo = std::get_if<GeometryEstimator>(&estimator)) {
    std::vector<LocalizedPerson> people;
    people.reserve(centers.size());
    for (const auto& c : centers) people.push_back(localize(c, geo->assumed_height_in, geo->camera));
    for (std::size_t k = 0; k < dataset.pairs.size(); ++k) {
      const auto& p = dataset.pairs[k];
      results[k].est_distance_in =
          estimate_distance(people[lookup(p.id_a)], people[lookup(p.id_b)], geo->camera);
    }
  } else {
    const auto& mlp = std::get<MlpEstimator>(estimator);
    if (!mlp.model) throw Error(ErrorCode::InvalidArgument, "MLP estimator has no model");
    const auto& f = mlp.model->features;
    std::vector<PairFeature> features;
    features.reserve(dataset.pairs.size());
    for (const auto& p : dataset.pairs) {
      features.push_back(extract_feature(centers[lookup(p.id_a)], centers[lookup(p.id_b)],
                                         f.origin, f.angle_mode));
    }
    const auto est = predict_batch(*mlp.model, features);
    for (std::size_t k = 0; k < est.size(); ++k) results[k].est_distance_in = est[k];
  }
  return results;
}

EvalReport evaluate_pipeline(const Estimator& estimator, const Adjustment& adjustment,
                             const EvalDataset& dataset, double threshold_in) {
  if (dataset.pairs.empty()) throw Error(ErrorCode::EmptyCategory, "dataset has no pairs");
  const auto results = estimate_pairs(estimator, adjustment, dataset);
  return summarize(results, threshold_in);
}

std::vector<double> alpha_grid(double start, double stop, double step) {
  if (!(step > 0.0) || !(stop > start)) {
    throw Error(ErrorCode::InvalidArgument, "alpha grid needs step > 0 and stop > start");
  }
  std::vector<double> out;
  const auto count = static_cast<long>(std::ceil((stop - start) / step - 1e-9));
  for (long k = 0; k < count; ++k) {
    const double a = std::round((start + static_cast<double>(k) * step) * 1e10) / 1e10;
    if (a < stop) out.push_back(a);
  }
  return out;
}

std::vector<SweepPoint> sweep_alpha(const Estimator& estimator, const EvalDataset& dataset,
                                    std::span<const double> alphas) {
  std::vector<SweepPoint> out;
  out.reserve(alphas.size() * kAllFilters.size());
  for (double alpha : alphas) {
    std::vector<PairResult> results;
    bool ok = true;
    try {
      results = estimate_pairs(estimator, Adjustment::shared(alpha), dataset);
    } catch (const Error& e) {
      // Large alphas can push a small box past the image centre; that alpha
      // simply has no score.
      if (e.code() != ErrorCode::OvershootsCenter && e.code() != ErrorCode::UndefinedDirection &&
          e.code() != ErrorCode::NoPreimage) {
        throw;
      }
      ok = false;
    }
    for (auto filter : kAllFilters) {
      SweepPoint sp{alpha, filter, std::nullopt};
      if (ok) {
        const bool any = std::any_of(results.begin(), results.end(), [&](const PairResult& r) {
          return matches(filter, r.category);
        });
        if (any) sp.mae_in = mae(results, filter);
      }
      out.push_back(sp);
    }
  }
  return out;
}

std::optional<SweepPoint> best_alpha(std::span<const SweepPoint> sweep, CategoryFilter category) {
  std::optional<SweepPoint> best;
  for (const auto& sp : sweep) {
    if (sp.category != category || !sp.mae_in) continue;
    if (!best || *sp.mae_in < *best->mae_in ||
        (*sp.mae_in == *best->mae_in && sp.alpha < best->alpha)) {
      best = sp;
    }
  }
  return best;
}

}  // namespace fisheyedist
