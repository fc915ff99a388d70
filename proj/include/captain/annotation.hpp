// Copyright 2026 The Captain Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "captain/class_map.hpp"
#include "captain/common.hpp"
#include "json.hpp"

namespace captain {

/// Joint order used by bundle files (ids 1..18 map to index id - 1).
enum Joint : int {
  kNose = 0,
  kNeck,
  kRightShoulder,
  kRightElbow,
  kRightWrist,
  kLeftShoulder,
  kLeftElbow,
  kLeftWrist,
  kRightHip,
  kRightKnee,
  kRightAnkle,
  kLeftHip,
  kLeftKnee,
  kLeftAnkle,
  kLeftEye,
  kRightEye,
  kLeftEar,
  kRightEar,
};

inline const std::array<const char*, kJointCount>& joint_names() {
  static const std::array<const char*, kJointCount> names = {
      "nose",       "neck",      "right_shoulder", "right_elbow", "right_wrist",
      "left_shoulder", "left_elbow", "left_wrist",  "right_hip",   "right_knee",
      "right_ankle", "left_hip",  "left_knee",      "left_ankle",  "left_eye",
      "right_eye",  "left_ear",  "right_ear"};
  return names;
}

enum class Gender { male, female, unknown };

inline std::string_view to_string(Gender g) {
  switch (g) {
    case Gender::male: return "male";
    case Gender::female: return "female";
    case Gender::unknown: return "unknown";
  }
  return "unknown";
}

inline std::optional<Gender> parse_gender(std::string_view s) {
  if (s == "male") return Gender::male;
  if (s == "female") return Gender::female;
  if (s == "unknown") return Gender::unknown;
  return std::nullopt;
}

/// One-hot gender block: male, female, unknown.
inline std::array<double, kGenderDims> gender_vector(Gender g) {
  switch (g) {
    case Gender::male: return {1.0, 0.0, 0.0};
    case Gender::female: return {0.0, 1.0, 0.0};
    case Gender::unknown: return {0.0, 0.0, 1.0};
  }
  return {0.0, 0.0, 1.0};
}

/// Portrait categories in feature-vector order.
inline const std::array<const char*, kCategoryCount>& category_names() {
  static const std::array<const char*, kCategoryCount> names = {
      "facial", "fullbody", "upperbody", "two",  "group",
      "sideview", "leg",    "noface",    "hand", "nohead"};
  return names;
}

/// Returns the 0-based category index or nullopt.
inline std::optional<int> parse_category(std::string_view s) {
  const auto& names = category_names();
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (s == names[i]) return static_cast<int>(i);
  }
  return std::nullopt;
}

struct ObjectDetection {
  int class_id = 0;  // 1..80
  double probability = 0.0;
  // Inclusive pixel ranges.
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;

  double area() const {
    return static_cast<double>(x1 - x0 + 1) * static_cast<double>(y1 - y0 + 1);
  }
  friend bool operator==(const ObjectDetection&, const ObjectDetection&) = default;
};

struct JointObservation {
  bool present = false;
  double x = 0.0;
  double y = 0.0;
  double score = 0.0;
  friend bool operator==(const JointObservation&, const JointObservation&) = default;
};

struct Skeleton {
  std::array<JointObservation, kJointCount> joints{};

  int present_count() const {
    int n = 0;
    for (const auto& j : joints) n += j.present ? 1 : 0;
    return n;
  }
  /// Mean score of the present joints, 0 for an empty skeleton.
  double score() const {
    double s = 0.0;
    int n = 0;
    for (const auto& j : joints) {
      if (!j.present) continue;
      s += j.score;
      ++n;
    }
    return n == 0 ? 0.0 : s / n;
  }
  /// Area of the bounding box of the present joints in pixels.
  double bbox_area() const {
    double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
    bool any = false;
    for (const auto& j : joints) {
      if (!j.present) continue;
      if (!any) {
        x0 = x1 = j.x;
        y0 = y1 = j.y;
        any = true;
      } else {
        x0 = std::min(x0, j.x);
        x1 = std::max(x1, j.x);
        y0 = std::min(y0, j.y);
        y1 = std::max(y1, j.y);
      }
    }
    return any ? (x1 - x0) * (y1 - y0) : 0.0;
  }
  friend bool operator==(const Skeleton&, const Skeleton&) = default;
};

struct SceneParse {
  Plane<std::uint16_t> ids;
  Plane<float> probabilities;
  friend bool operator==(const SceneParse&, const SceneParse&) = default;
};

/// Detector outputs, descriptors and metadata for one photograph.
struct AnnotationBundle {
  std::string image_id;
  std::size_t width = 0;   // m
  std::size_t height = 0;  // n
  std::vector<ObjectDetection> objects;
  std::optional<SceneParse> scene;
  std::vector<Skeleton> persons;
  std::vector<double> vgg;
  std::optional<Plane<float>> saliency;
  double rating = 0.0;
  std::int64_t views = 0;
  Gender gender = Gender::unknown;
  std::optional<int> category;  // 0-based
  std::vector<std::string> tags;
  std::string image_path;

  std::size_t pixel_count() const { return width * height; }
  friend bool operator==(const AnnotationBundle&, const AnnotationBundle&) = default;
};

namespace detail {

inline bool is_probability(double p) { return std::isfinite(p) && p >= 0.0 && p < 1.0; }

inline std::vector<char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

template <typename T>
T read_le(const char* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  return byteswap_if_needed(v);
}

}  // namespace detail

/// Throws on any invariant violation.
inline void validate(const AnnotationBundle& b) {
  if (b.image_id.empty()) throw Error(ErrorCode::MalformedBundle, "empty image_id");
  if (b.vgg.size() != kVggDims) {
    throw Error(ErrorCode::MalformedBundle,
                "vgg must have 4096 entries, got " + std::to_string(b.vgg.size()));
  }
  for (double v : b.vgg) {
    if (!std::isfinite(v)) throw Error(ErrorCode::ValueOutOfRange, "non-finite vgg entry");
  }
  if (!std::isfinite(b.rating) || b.rating < 0.0) {
    throw Error(ErrorCode::ValueOutOfRange, "rating must be >= 0");
  }
  if (b.views < 0) throw Error(ErrorCode::ValueOutOfRange, "views must be >= 0");
  const auto w = static_cast<int>(b.width);
  const auto h = static_cast<int>(b.height);
  for (const auto& o : b.objects) {
    if (o.class_id < 1 || o.class_id > static_cast<int>(kOdClasses)) {
      throw Error(ErrorCode::ValueOutOfRange, "object class_id outside 1..80");
    }
    if (!detail::is_probability(o.probability)) {
      throw Error(ErrorCode::ValueOutOfRange, "object probability outside [0,1)");
    }
    if (o.x0 < 0 || o.y0 < 0 || o.x1 >= w || o.y1 >= h || o.x0 > o.x1 || o.y0 > o.y1) {
      throw Error(ErrorCode::ValueOutOfRange, "object box outside the image");
    }
  }
  for (const auto& person : b.persons) {
    for (const auto& j : person.joints) {
      if (!j.present) continue;
      if (!detail::is_probability(j.score)) {
        throw Error(ErrorCode::ValueOutOfRange, "joint score outside [0,1)");
      }
      if (!std::isfinite(j.x) || !std::isfinite(j.y) || j.x < 0 || j.y < 0 ||
          j.x >= static_cast<double>(b.width) || j.y >= static_cast<double>(b.height)) {
        throw Error(ErrorCode::ValueOutOfRange, "joint outside the image");
      }
    }
  }
  if (b.scene) {
    const auto& s = *b.scene;
    if (s.ids.width != b.width || s.ids.height != b.height ||
        s.ids.size() != b.pixel_count() || s.probabilities.size() != b.pixel_count()) {
      throw Error(ErrorCode::DimensionMismatch, "scene parse size differs from m x n");
    }
    for (auto id : s.ids.data) {
      if (id > kSpClasses) throw Error(ErrorCode::ValueOutOfRange, "scene id above 150");
    }
    for (float p : s.probabilities.data) {
      if (!detail::is_probability(p)) {
        throw Error(ErrorCode::ValueOutOfRange, "scene probability outside [0,1)");
      }
    }
  }
  if (b.saliency) {
    if (b.saliency->size() != b.pixel_count() || b.saliency->width != b.width) {
      throw Error(ErrorCode::DimensionMismatch, "saliency size differs from m x n");
    }
    for (float v : b.saliency->data) {
      if (!std::isfinite(v) || v < 0.0f || v > 1.0f) {
        throw Error(ErrorCode::ValueOutOfRange, "saliency outside [0,1]");
      }
    }
  }
}

/// Decodes `sp.bin`: u16 id plane followed by f32 probability plane.
inline SceneParse decode_scene(const std::vector<char>& bytes, std::size_t w,
                               std::size_t h) {
  const std::size_t n = w * h;
  if (bytes.size() != n * (sizeof(std::uint16_t) + sizeof(float))) {
    throw Error(ErrorCode::DimensionMismatch,
                "sp.bin has " + std::to_string(bytes.size()) + " bytes, expected " +
                    std::to_string(n * 6));
  }
  SceneParse s{Plane<std::uint16_t>(w, h), Plane<float>(w, h)};
  const char* p = bytes.data();
  for (std::size_t i = 0; i < n; ++i) s.ids.data[i] = detail::read_le<std::uint16_t>(p + 2 * i);
  p += 2 * n;
  for (std::size_t i = 0; i < n; ++i) s.probabilities.data[i] = detail::read_le<float>(p + 4 * i);
  return s;
}

inline Plane<float> decode_saliency(const std::vector<char>& bytes, std::size_t w,
                                    std::size_t h) {
  const std::size_t n = w * h;
  if (bytes.size() != n * sizeof(float)) {
    throw Error(ErrorCode::DimensionMismatch,
                "saliency.bin has " + std::to_string(bytes.size()) +
                    " bytes, expected " + std::to_string(n * 4));
  }
  Plane<float> s(w, h);
  for (std::size_t i = 0; i < n; ++i) s.data[i] = detail::read_le<float>(bytes.data() + 4 * i);
  return s;
}

/// Builds a bundle from a manifest object. Scene parse and saliency may be
/// supplied inline (`sp: {ids, probabilities}`, `saliency: [...]`) or
/// through the binary side files passed in.
inline AnnotationBundle parse_bundle(const nlohmann::json& j,
                                     std::optional<SceneParse> scene = std::nullopt,
                                     std::optional<Plane<float>> saliency = std::nullopt) {
  AnnotationBundle b;
  try {
    if (!j.is_object()) throw Error(ErrorCode::MalformedBundle, "manifest is not an object");
    b.image_id = j.at("image_id").get<std::string>();
    const auto w = j.at("width").get<std::int64_t>();
    const auto h = j.at("height").get<std::int64_t>();
    if (w < 0 || h < 0) throw Error(ErrorCode::MalformedBundle, "negative dimensions");
    b.width = static_cast<std::size_t>(w);
    b.height = static_cast<std::size_t>(h);
    b.vgg = j.at("vgg").get<std::vector<double>>();
    b.rating = j.value("rating", 0.0);
    b.views = j.value("views", std::int64_t{0});
    const auto gender = j.value("gender", std::string("unknown"));
    const auto g = parse_gender(gender);
    if (!g) throw Error(ErrorCode::MalformedBundle, "unknown gender tag '" + gender + "'");
    b.gender = *g;
    if (j.contains("category") && !j.at("category").is_null()) {
      const auto name = j.at("category").get<std::string>();
      b.category = parse_category(name);
      if (!b.category) throw Error(ErrorCode::MalformedBundle, "unknown category '" + name + "'");
    }
    b.tags = j.value("tags", std::vector<std::string>{});
    b.image_path = j.value("image_path", std::string{});
    for (const auto& o : j.value("objects", nlohmann::json::array())) {
      ObjectDetection d;
      d.class_id = o.at("class_id").get<int>();
      d.probability = o.at("probability").get<double>();
      const auto& box = o.at("box");
      if (!box.is_array() || box.size() != 4) {
        throw Error(ErrorCode::MalformedBundle, "box must be [x0, y0, x1, y1]");
      }
      d.x0 = box[0].get<int>();
      d.y0 = box[1].get<int>();
      d.x1 = box[2].get<int>();
      d.y1 = box[3].get<int>();
      b.objects.push_back(d);
    }
    for (const auto& p : j.value("persons", nlohmann::json::array())) {
      Skeleton s;
      for (const auto& jt : p.at("joints")) {
        const int id = jt.at("id").get<int>();
        if (id < 1 || id > static_cast<int>(kJointCount)) {
          throw Error(ErrorCode::ValueOutOfRange, "joint id outside 1..18");
        }
        auto& slot = s.joints[static_cast<std::size_t>(id - 1)];
        if (slot.present) throw Error(ErrorCode::MalformedBundle, "duplicate joint id");
        if (!jt.value("present", true)) continue;
        slot = {true, jt.at("x").get<double>(), jt.at("y").get<double>(),
                jt.at("score").get<double>()};
      }
      b.persons.push_back(s);
    }
    if (j.contains("sp")) {
      const auto& sp = j.at("sp");
      SceneParse s{Plane<std::uint16_t>(b.width, b.height), Plane<float>(b.width, b.height)};
      auto ids = sp.at("ids").get<std::vector<int>>();
      auto probs = sp.at("probabilities").get<std::vector<float>>();
      if (ids.size() != b.pixel_count() || probs.size() != b.pixel_count()) {
        throw Error(ErrorCode::DimensionMismatch, "inline sp size differs from m x n");
      }
      for (std::size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] < 0 || ids[i] > static_cast<int>(kSpClasses)) {
          throw Error(ErrorCode::ValueOutOfRange, "scene id outside 0..150");
        }
        s.ids.data[i] = static_cast<std::uint16_t>(ids[i]);
      }
      s.probabilities.data = std::move(probs);
      scene = std::move(s);
    }
    if (j.contains("saliency")) {
      Plane<float> s(b.width, b.height);
      auto values = j.at("saliency").get<std::vector<float>>();
      if (values.size() != b.pixel_count()) {
        throw Error(ErrorCode::DimensionMismatch, "inline saliency size differs from m x n");
      }
      s.data = std::move(values);
      saliency = std::move(s);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedBundle, e.what());
  }
  b.scene = std::move(scene);
  b.saliency = std::move(saliency);
  validate(b);
  return b;
}

/// Reads a bundle directory: manifest.json plus optional sp.bin and
/// saliency.bin side files.
inline AnnotationBundle load_bundle(const std::filesystem::path& dir) {
  const auto manifest = dir / "manifest.json";
  std::ifstream in(manifest);
  if (!in) throw Error(ErrorCode::MalformedBundle, "missing " + manifest.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedBundle, manifest.string() + ": " + e.what());
  }
  if (!j.is_object() || !j.contains("width") || !j.contains("height")) {
    throw Error(ErrorCode::MalformedBundle, "manifest lacks dimensions");
  }
  std::size_t w = 0, h = 0;
  try {
    w = j.at("width").get<std::size_t>();
    h = j.at("height").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedBundle, e.what());
  }
  std::optional<SceneParse> scene;
  std::optional<Plane<float>> saliency;
  if (std::filesystem::exists(dir / "sp.bin")) {
    scene = decode_scene(detail::read_file(dir / "sp.bin"), w, h);
  }
  if (std::filesystem::exists(dir / "saliency.bin")) {
    saliency = decode_saliency(detail::read_file(dir / "saliency.bin"), w, h);
  }
  return parse_bundle(j, std::move(scene), std::move(saliency));
}

/// Manifest JSON for a bundle. Scene parse and saliency are left to the
/// binary side files unless `inline_planes` is set.
inline nlohmann::json to_json(const AnnotationBundle& b, bool inline_planes = false) {
  nlohmann::json j;
  j["image_id"] = b.image_id;
  j["width"] = b.width;
  j["height"] = b.height;
  j["rating"] = b.rating;
  j["views"] = b.views;
  j["gender"] = std::string(to_string(b.gender));
  if (b.category) j["category"] = category_names()[static_cast<std::size_t>(*b.category)];
  j["tags"] = b.tags;
  if (!b.image_path.empty()) j["image_path"] = b.image_path;
  j["vgg"] = b.vgg;
  auto objects = nlohmann::json::array();
  for (const auto& o : b.objects) {
    objects.push_back({{"class_id", o.class_id},
                       {"probability", o.probability},
                       {"box", {o.x0, o.y0, o.x1, o.y1}}});
  }
  j["objects"] = objects;
  auto persons = nlohmann::json::array();
  for (const auto& p : b.persons) {
    auto joints = nlohmann::json::array();
    for (std::size_t i = 0; i < kJointCount; ++i) {
      const auto& jt = p.joints[i];
      if (!jt.present) continue;
      joints.push_back({{"id", i + 1}, {"x", jt.x}, {"y", jt.y}, {"score", jt.score}});
    }
    persons.push_back({{"joints", joints}});
  }
  j["persons"] = persons;
  if (inline_planes) {
    if (b.scene) {
      j["sp"] = {{"ids", b.scene->ids.data}, {"probabilities", b.scene->probabilities.data}};
    }
    if (b.saliency) j["saliency"] = b.saliency->data;
  }
  return j;
}

/// Writes a bundle directory in the on-disk format read by load_bundle.
inline void save_bundle(const AnnotationBundle& b, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "manifest.json");
    out << to_json(b).dump(1);
    if (!out) throw Error(ErrorCode::IoError, "cannot write manifest in " + dir.string());
  }
  if (b.scene) {
    std::ofstream out(dir / "sp.bin", std::ios::binary);
    LeWriter w(out);
    w.put_all(std::span<const std::uint16_t>(b.scene->ids.data));
    w.put_all(std::span<const float>(b.scene->probabilities.data));
  } else {
    std::filesystem::remove(dir / "sp.bin");
  }
  if (b.saliency) {
    std::ofstream out(dir / "saliency.bin", std::ios::binary);
    LeWriter(out).put_all(std::span<const float>(b.saliency->data));
  } else {
    std::filesystem::remove(dir / "saliency.bin");
  }
}

// ---------------------------------------------------------------------------
// Value unification

enum class DetectorKind { od = 0, sp = 1, pe = 2 };

inline std::string_view to_string(DetectorKind k) {
  switch (k) {
    case DetectorKind::od: return "od";
    case DetectorKind::sp: return "sp";
    case DetectorKind::pe: return "pe";
  }
  return "od";
}

inline std::optional<DetectorKind> parse_detector(std::string_view s) {
  if (s == "od") return DetectorKind::od;
  if (s == "sp") return DetectorKind::sp;
  if (s == "pe") return DetectorKind::pe;
  return std::nullopt;
}

/// Largest probability kept before taking the score; keeps scores <= 20.
inline constexpr double kMaxProbability = 1.0 - 0x1p-20;

/// -log2(1 - p) with p clamped to kMaxProbability.
inline double detection_score(double p) {
  if (!(p > 0.0)) return 0.0;
  return -std::log2(1.0 - std::min(p, kMaxProbability));
}

/// Per-pixel (id, score) planes of one detector. The clamped probability
/// plane is kept alongside so threshold tests can run on probabilities.
struct DetectionTensor {
  DetectorKind kind = DetectorKind::od;
  Plane<std::uint16_t> ids;
  Plane<double> scores;
  Plane<double> probabilities;

  std::size_t width() const { return ids.width; }
  std::size_t height() const { return ids.height; }
  friend bool operator==(const DetectionTensor&, const DetectionTensor&) = default;
};

struct UnifiedTensors {
  DetectionTensor od;
  DetectionTensor sp;
  DetectionTensor pe;
  friend bool operator==(const UnifiedTensors&, const UnifiedTensors&) = default;
};

/// Radius of the disc each pose joint is rasterised as.
inline int joint_radius(std::size_t width, std::size_t height) {
  const double r = std::round(0.01 * static_cast<double>(std::max(width, height)));
  return std::max(2, static_cast<int>(r));
}

namespace detail {

inline DetectionTensor empty_tensor(DetectorKind kind, std::size_t w, std::size_t h) {
  return {kind, Plane<std::uint16_t>(w, h, 0), Plane<double>(w, h, 0.0),
          Plane<double>(w, h, 0.0)};
}

inline void set_pixel(DetectionTensor& t, std::size_t i, int id, double p) {
  const double clamped = std::min(p, kMaxProbability);
  t.ids.data[i] = static_cast<std::uint16_t>(id);
  t.probabilities.data[i] = clamped;
  t.scores.data[i] = detection_score(clamped);
}

}  // namespace detail

/// Rasterises the three detector outputs into pixel tensors. Overlapping
/// boxes resolve to the highest probability (then the lower class id);
/// overlapping joint discs resolve to the highest score (then lower joint id).
inline UnifiedTensors unify(const AnnotationBundle& b) {
  const std::size_t w = b.width, h = b.height;
  UnifiedTensors t{detail::empty_tensor(DetectorKind::od, w, h),
                   detail::empty_tensor(DetectorKind::sp, w, h),
                   detail::empty_tensor(DetectorKind::pe, w, h)};

  // Paint lowest priority first so winners overwrite.
  std::vector<const ObjectDetection*> boxes;
  for (const auto& o : b.objects) boxes.push_back(&o);
  std::stable_sort(boxes.begin(), boxes.end(), [](const auto* a, const auto* c) {
    if (a->probability != c->probability) return a->probability < c->probability;
    return a->class_id > c->class_id;
  });
  for (const auto* o : boxes) {
    if (o->probability <= 0.0) continue;
    for (int y = o->y0; y <= o->y1; ++y) {
      for (int x = o->x0; x <= o->x1; ++x) {
        detail::set_pixel(t.od, static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x),
                          o->class_id, o->probability);
      }
    }
  }

  if (b.scene) {
    for (std::size_t i = 0; i < w * h; ++i) {
      const int id = b.scene->ids.data[i];
      const double p = b.scene->probabilities.data[i];
      if (id == 0 || p <= 0.0) continue;
      detail::set_pixel(t.sp, i, id, p);
    }
  }

  struct Disc {
    int joint;
    double x, y, score;
  };
  std::vector<Disc> discs;
  for (const auto& person : b.persons) {
    for (std::size_t j = 0; j < kJointCount; ++j) {
      const auto& jt = person.joints[j];
      if (jt.present && jt.score > 0.0) {
        discs.push_back({static_cast<int>(j) + 1, jt.x, jt.y, jt.score});
      }
    }
  }
  std::stable_sort(discs.begin(), discs.end(), [](const Disc& a, const Disc& c) {
    if (a.score != c.score) return a.score < c.score;
    return a.joint > c.joint;
  });
  const int r = joint_radius(w, h);
  for (const auto& d : discs) {
    const int cx = static_cast<int>(std::lround(d.x));
    const int cy = static_cast<int>(std::lround(d.y));
    for (int y = std::max(0, cy - r); y <= std::min(static_cast<int>(h) - 1, cy + r); ++y) {
      for (int x = std::max(0, cx - r); x <= std::min(static_cast<int>(w) - 1, cx + r); ++x) {
        const double dx = x - d.x, dy = y - d.y;
        if (dx * dx + dy * dy > static_cast<double>(r) * r) continue;
        detail::set_pixel(t.pe, static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x),
                          d.joint, d.score);
      }
    }
  }
  return t;
}

}  // namespace captain
