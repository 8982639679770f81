#include "fisheyedist/dataset_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <istream>
#include <nlohmann/json.hpp>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_map>

namespace fisheyedist {

namespace {

using ordered_json = nlohmann::ordered_json;

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, fmt::format("cannot read {}", path.string()));
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, fmt::format("cannot write {}", path.string()));
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) {
    s.remove_suffix(1);
  }
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  return s;
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    fields.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

double parse_number(std::string_view field, std::string_view source, std::size_t line,
                    std::string_view name) {
  double v = 0.0;
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, v);
  if (ec != std::errc{} || ptr != end || !std::isfinite(v)) {
    throw Error(ErrorCode::ParseError,
                fmt::format("{}:{}: field '{}' is not a finite number: '{}'", source, line, name,
                            field));
  }
  return v;
}

// Reads a CSV body after checking the header line; calls `row` per data line.
template <typename RowFn>
void read_csv(std::istream& in, std::string_view source, std::string_view header,
              std::size_t columns, RowFn&& row) {
  std::string text;
  std::size_t line = 0;
  bool seen_header = false;
  while (std::getline(in, text)) {
    ++line;
    const std::string_view view = trim(text);
    if (view.empty()) continue;
    if (!seen_header) {
      if (view != header) {
        throw Error(ErrorCode::ParseError,
                    fmt::format("{}:{}: expected header '{}'", source, line, header));
      }
      seen_header = true;
      continue;
    }
    const auto fields = split_csv(view);
    if (fields.size() != columns) {
      throw Error(ErrorCode::ParseError, fmt::format("{}:{}: expected {} fields, found {}",
                                                     source, line, columns, fields.size()));
    }
    row(fields, line);
  }
  if (!seen_header) {
    throw Error(ErrorCode::ParseError, fmt::format("{}: missing header '{}'", source, header));
  }
}

constexpr std::string_view kGroundTruthHeader = "id_a,id_b,distance_in,category";
constexpr std::string_view kCorrespondenceHeader = "x_in,y_in,z_in,u_px,v_px";
constexpr std::string_view kTrainingHeader = "u_a,v_a,u_b,v_b,dist_in";
constexpr std::string_view kPeopleHeader = "id,x_in,y_in,height_in,occlusion_fraction";

}  // namespace

std::string format_double(double v) { return fmt::format("{}", v); }

DetectionsFile parse_detections(std::istream& in, int image_side, std::string_view source) {
  if (image_side <= 0) throw Error(ErrorCode::InvalidArgument, "image side must be positive");
  DetectionsFile file;
  file.image_side = image_side;
  std::set<std::pair<std::string, std::string>> seen;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (trim(text).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::ParseError, fmt::format("{}:{}: {}", source, line, e.what()));
    }
    DetectionRecord rec;
    try {
      const auto id_text = [&](const char* key) {
        const auto& v = j.at(key);
        return v.is_string() ? v.get<std::string>() : v.dump();
      };
      rec.image_id = id_text("image_id");
      rec.box.person_id = id_text("person_id");
      rec.box.center = PixelPoint{j.at("cx").get<double>(), j.at("cy").get<double>()};
      rec.box.width = j.at("w").get<double>();
      rec.box.height = j.at("h").get<double>();
      rec.box.occluded = j.at("occluded").get<bool>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::ParseError, fmt::format("{}:{}: {}", source, line, e.what()));
    }
    const auto& b = rec.box;
    const std::string who = fmt::format("{}:{}: record '{}/{}'", source, line, rec.image_id,
                                        b.person_id);
    if (!(b.width > 0.0) || !(b.height > 0.0)) {
      throw Error(ErrorCode::ValidationError,
                  fmt::format("{}: box size must be positive (w={}, h={})", who, b.width, b.height));
    }
    if (!(b.center.u >= 0.0 && b.center.u < image_side && b.center.v >= 0.0 &&
          b.center.v < image_side)) {
      throw Error(ErrorCode::ValidationError,
                  fmt::format("{}: centre ({}, {}) is outside the {}x{} image", who, b.center.u,
                              b.center.v, image_side, image_side));
    }
    if (!seen.emplace(rec.image_id, b.person_id).second) {
      throw Error(ErrorCode::ValidationError, fmt::format("{}: duplicate person id", who));
    }
    file.records.push_back(std::move(rec));
  }
  return file;
}

DetectionsFile load_detections(const std::filesystem::path& path, int image_side) {
  auto in = open_in(path);
  return parse_detections(in, image_side, path.string());
}

void write_detections(std::ostream& out, const DetectionsFile& file) {
  for (const auto& rec : file.records) {
    ordered_json j;
    j["image_id"] = rec.image_id;
    j["person_id"] = rec.box.person_id;
    j["cx"] = rec.box.center.u;
    j["cy"] = rec.box.center.v;
    j["w"] = rec.box.width;
    j["h"] = rec.box.height;
    j["occluded"] = rec.box.occluded;
    out << j.dump() << '\n';
  }
}

void save_detections(const DetectionsFile& file, const std::filesystem::path& path) {
  auto out = open_out(path);
  write_detections(out, file);
}

GroundTruthFile parse_ground_truth(std::istream& in, std::string_view source) {
  GroundTruthFile file;
  read_csv(in, source, kGroundTruthHeader, 4,
           [&](const std::vector<std::string_view>& f, std::size_t line) {
             GroundTruthPair p;
             p.id_a = std::string(f[0]);
             p.id_b = std::string(f[1]);
             if (p.id_a.empty() || p.id_b.empty()) {
               throw Error(ErrorCode::ParseError, fmt::format("{}:{}: empty person id", source, line));
             }
             p.distance_in = parse_number(f[2], source, line, "distance_in");
             const auto cat = parse_category(f[3]);
             if (!cat) {
               throw Error(ErrorCode::ParseError,
                           fmt::format("{}:{}: unknown category '{}'", source, line, f[3]));
             }
             p.category = *cat;
             if (!(p.distance_in > 0.0)) {
               throw Error(ErrorCode::ValidationError,
                           fmt::format("{}:{}: distance must be positive", source, line));
             }
             file.pairs.push_back(std::move(p));
           });
  return file;
}

GroundTruthFile load_ground_truth(const std::filesystem::path& path) {
  auto in = open_in(path);
  return parse_ground_truth(in, path.string());
}

void write_ground_truth(std::ostream& out, const GroundTruthFile& file) {
  out << kGroundTruthHeader << '\n';
  for (const auto& p : file.pairs) {
    out << p.id_a << ',' << p.id_b << ',' << format_double(p.distance_in) << ','
        << to_string(p.category) << '\n';
  }
}

void save_ground_truth(const GroundTruthFile& file, const std::filesystem::path& path) {
  auto out = open_out(path);
  write_ground_truth(out, file);
}

std::size_t resolve_person(const DetectionsFile& det, std::string_view id) {
  std::optional<std::size_t> found;
  const auto slash = id.find('/');
  for (std::size_t i = 0; i < det.records.size(); ++i) {
    const auto& rec = det.records[i];
    bool hit = false;
    if (rec.box.person_id == id) {
      hit = true;
    } else if (slash != std::string_view::npos) {
      hit = rec.image_id == id.substr(0, slash) && rec.box.person_id == id.substr(slash + 1);
    }
    if (!hit) continue;
    if (found) {
      throw Error(ErrorCode::ValidationError,
                  fmt::format("person id '{}' is ambiguous; qualify it as image_id/person_id", id));
    }
    found = i;
  }
  if (!found) throw Error(ErrorCode::ValidationError, fmt::format("unknown person id '{}'", id));
  return *found;
}

void validate_ground_truth(const GroundTruthFile& gt, const DetectionsFile& det) {
  for (std::size_t k = 0; k < gt.pairs.size(); ++k) {
    const auto& p = gt.pairs[k];
    const auto& a = det.records[resolve_person(det, p.id_a)].box;
    const auto& b = det.records[resolve_person(det, p.id_b)].box;
    const PairCategory derived = category_of(a.occluded, b.occluded);
    if (derived != p.category) {
      throw Error(ErrorCode::ValidationError,
                  fmt::format("ground-truth row {} ({}, {}): category {} disagrees with "
                              "occlusion flags ({})",
                              k + 1, p.id_a, p.id_b, to_string(p.category), to_string(derived)));
    }
  }
}

EvalDataset make_eval_dataset(const DetectionsFile& det, const GroundTruthFile& gt) {
  validate_ground_truth(gt, det);
  EvalDataset ds;
  ds.image_center = PixelPoint{det.image_side / 2.0, det.image_side / 2.0};
  const auto key = [&](std::size_t i) {
    return det.records[i].image_id + "/" + det.records[i].box.person_id;
  };
  for (std::size_t i = 0; i < det.records.size(); ++i) {
    BoundingBox b = det.records[i].box;
    b.person_id = key(i);
    ds.boxes.push_back(std::move(b));
  }
  for (const auto& p : gt.pairs) {
    ds.pairs.push_back(GroundTruthPair{key(resolve_person(det, p.id_a)),
                                       key(resolve_person(det, p.id_b)), p.distance_in,
                                       p.category});
  }
  return ds;
}

DatasetStats dataset_stats(const DetectionsFile& det, const GroundTruthFile& gt) {
  validate_ground_truth(gt, det);
  DatasetStats s;
  std::set<double> distinct;
  for (const auto& p : gt.pairs) {
    ++s.category_counts[static_cast<std::size_t>(p.category)];
    ++s.total_pairs;
    distinct.insert(p.distance_in);
    const double d = p.distance_in;
    ++s.buckets[d < 72.0 ? 0 : (d <= 144.0 ? 1 : 2)];
    s.min_distance_in = s.min_distance_in ? std::min(*s.min_distance_in, d) : d;
    s.max_distance_in = s.max_distance_in ? std::max(*s.max_distance_in, d) : d;
  }
  s.distinct_distances = distinct.size();
  return s;
}

DetectionsFile to_detections(const SyntheticScene& scene, std::string_view image_id,
                             int image_side) {
  DetectionsFile file;
  file.image_side = image_side;
  for (const auto& box : scene.boxes) {
    file.records.push_back(DetectionRecord{std::string(image_id), box});
  }
  return file;
}

GroundTruthFile to_ground_truth(const SyntheticScene& scene) {
  return GroundTruthFile{scene.pairs};
}

std::string camera_to_json(const CameraParams& c) {
  ordered_json j;
  j["xi"] = c.xi;
  j["fx"] = c.fx;
  j["fy"] = c.fy;
  j["cx"] = c.cx;
  j["cy"] = c.cy;
  j["mount_height_in"] = c.mount_height_in;
  return j.dump(2);
}

CameraParams camera_from_json(std::string_view text) {
  CameraParams c;
  try {
    const auto j = nlohmann::json::parse(text);
    c.xi = j.at("xi").get<double>();
    c.fx = j.at("fx").get<double>();
    c.fy = j.at("fy").get<double>();
    c.cx = j.at("cx").get<double>();
    c.cy = j.at("cy").get<double>();
    c.mount_height_in = j.at("mount_height_in").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, fmt::format("camera file: {}", e.what()));
  }
  try {
    validate(c);
  } catch (const Error& e) {
    throw Error(ErrorCode::ValidationError, fmt::format("camera file: {}", e.what()));
  }
  return c;
}

CameraParams load_camera(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return camera_from_json(ss.str());
}

void save_camera(const CameraParams& camera, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << camera_to_json(camera) << '\n';
}

std::vector<Correspondence> load_correspondences(const std::filesystem::path& path) {
  auto in = open_in(path);
  const std::string source = path.string();
  std::vector<Correspondence> out;
  read_csv(in, source, kCorrespondenceHeader, 5,
           [&](const std::vector<std::string_view>& f, std::size_t line) {
             out.push_back(Correspondence{
                 WorldPoint{parse_number(f[0], source, line, "x_in"),
                            parse_number(f[1], source, line, "y_in"),
                            parse_number(f[2], source, line, "z_in")},
                 PixelPoint{parse_number(f[3], source, line, "u_px"),
                            parse_number(f[4], source, line, "v_px")}});
           });
  return out;
}

void save_correspondences(const std::vector<Correspondence>& data,
                          const std::filesystem::path& path) {
  auto out = open_out(path);
  out << kCorrespondenceHeader << '\n';
  for (const auto& c : data) {
    out << format_double(c.world.x) << ',' << format_double(c.world.y) << ','
        << format_double(c.world.z) << ',' << format_double(c.pixel.u) << ','
        << format_double(c.pixel.v) << '\n';
  }
}

std::vector<PixelPairSample> load_training_pairs(const std::filesystem::path& path) {
  auto in = open_in(path);
  const std::string source = path.string();
  std::vector<PixelPairSample> out;
  read_csv(in, source, kTrainingHeader, 5,
           [&](const std::vector<std::string_view>& f, std::size_t line) {
             out.push_back(PixelPairSample{
                 PixelPoint{parse_number(f[0], source, line, "u_a"),
                            parse_number(f[1], source, line, "v_a")},
                 PixelPoint{parse_number(f[2], source, line, "u_b"),
                            parse_number(f[3], source, line, "v_b")},
                 parse_number(f[4], source, line, "dist_in")});
           });
  return out;
}

void save_training_pairs(const std::vector<PixelPairSample>& data,
                         const std::filesystem::path& path) {
  auto out = open_out(path);
  out << kTrainingHeader << '\n';
  for (const auto& s : data) {
    out << format_double(s.a.u) << ',' << format_double(s.a.v) << ',' << format_double(s.b.u)
        << ',' << format_double(s.b.v) << ',' << format_double(s.distance_in) << '\n';
  }
}

std::vector<VirtualPerson> load_people(const std::filesystem::path& path) {
  auto in = open_in(path);
  const std::string source = path.string();
  std::vector<VirtualPerson> out;
  read_csv(in, source, kPeopleHeader, 5,
           [&](const std::vector<std::string_view>& f, std::size_t line) {
             if (f[0].empty()) {
               throw Error(ErrorCode::ParseError, fmt::format("{}:{}: empty id", source, line));
             }
             out.push_back(VirtualPerson{std::string(f[0]),
                                         parse_number(f[1], source, line, "x_in"),
                                         parse_number(f[2], source, line, "y_in"),
                                         parse_number(f[3], source, line, "height_in"),
                                         parse_number(f[4], source, line, "occlusion_fraction")});
           });
  return out;
}

void save_people(const std::vector<VirtualPerson>& people, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << kPeopleHeader << '\n';
  for (const auto& p : people) {
    out << p.id << ',' << format_double(p.x_in) << ',' << format_double(p.y_in) << ','
        << format_double(p.height_in) << ',' << format_double(p.occlusion_fraction) << '\n';
  }
}

}  // namespace fisheyedist
