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

// Synthetic annotation bundles, skeletons and corpora for demos and tests.

#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "captain/annotation.hpp"
#include "captain/common.hpp"
#include "captain/composition.hpp"
#include "captain/matching.hpp"
#include "json.hpp"

namespace captain::synth {

/// Limb length from the parent joint, in body units.
inline constexpr std::array<double, kJointCount> kLimbLength = {
    0.0,   // nose
    20.0,  // neck
    15.0, 25.0, 22.0,  // right arm
    15.0, 25.0, 22.0,  // left arm
    50.0, 40.0, 38.0,  // right leg
    50.0, 40.0, 38.0,  // left leg
    6.0, 6.0,          // eyes
    7.0, 7.0,          // ears
};

/// Absolute segment direction per joint (radians); the nose entry is unused.
using PoseAngles = std::array<double, kJointCount>;

/// Upright reference pose in image coordinates (y grows downwards).
inline PoseAngles upright_pose() {
  constexpr double kPi = std::numbers::pi;
  PoseAngles a{};
  a[kNeck] = kPi / 2;
  a[kRightShoulder] = kPi;
  a[kRightElbow] = kPi * 0.6;
  a[kRightWrist] = kPi * 0.55;
  a[kLeftShoulder] = 0.0;
  a[kLeftElbow] = kPi * 0.4;
  a[kLeftWrist] = kPi * 0.45;
  a[kRightHip] = kPi * 0.55;
  a[kRightKnee] = kPi * 0.5;
  a[kRightAnkle] = kPi * 0.5;
  a[kLeftHip] = kPi * 0.45;
  a[kLeftKnee] = kPi * 0.5;
  a[kLeftAnkle] = kPi * 0.5;
  a[kLeftEye] = -kPi * 0.25;
  a[kRightEye] = -kPi * 0.75;
  a[kLeftEar] = 0.0;
  a[kRightEar] = kPi;
  return a;
}

/// Lays the chain out from the nose at `origin` with the given scale.
inline Skeleton skeleton_from_angles(const PoseAngles& angles, double ox, double oy,
                                     double scale, double score = 0.9) {
  Skeleton s;
  s.joints[kNose] = {true, ox, oy, score};
  for (int j : kPoseOrder) {
    if (j == kNose) continue;
    const auto ju = static_cast<std::size_t>(j);
    const auto& p = s.joints[static_cast<std::size_t>(kPoseParent[ju])];
    const double len = kLimbLength[ju] * scale;
    s.joints[ju] = {true, p.x + len * std::cos(angles[ju]), p.y + len * std::sin(angles[ju]), score};
  }
  return s;
}

inline PoseAngles random_angles(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> a(-std::numbers::pi, std::numbers::pi);
  PoseAngles out{};
  for (std::size_t j = 1; j < kJointCount; ++j) out[j] = a(rng);
  return out;
}

inline PoseAngles jitter(const PoseAngles& base, double max_radians, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(-max_radians, max_radians);
  PoseAngles out = base;
  for (std::size_t j = 1; j < kJointCount; ++j) out[j] += d(rng);
  return out;
}

inline std::vector<double> unit_vector(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> v(n);
  double norm = 0.0;
  for (double& x : v) {
    x = g(rng);
    norm += x * x;
  }
  norm = std::sqrt(norm);
  for (double& x : v) x /= norm;
  return v;
}

struct BundleOptions {
  std::size_t width = 64;
  std::size_t height = 48;
  double person_chance = 0.6;
  std::size_t max_objects = 3;
  bool scene = true;
  bool saliency = true;
};

/// A plausible bundle: a few boxes, a blocky scene parse, at most one person
/// with a full skeleton, a unit-norm descriptor and a blurred-blob saliency.
inline AnnotationBundle random_bundle(std::mt19937_64& rng, const std::string& id,
                                      const BundleOptions& opt = {}) {
  AnnotationBundle b;
  b.image_id = id;
  b.width = opt.width;
  b.height = opt.height;
  const int w = static_cast<int>(opt.width), h = static_cast<int>(opt.height);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> prob(0.05, 0.95);
  const auto rand_int = [&](int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
  };

  const bool person = unit(rng) < opt.person_chance;
  const int objects = rand_int(0, static_cast<int>(opt.max_objects));
  for (int i = 0; i < objects + (person ? 1 : 0); ++i) {
    ObjectDetection o;
    o.class_id = i == 0 && person ? 1 : rand_int(1, static_cast<int>(kOdClasses));
    o.probability = prob(rng);
    o.x0 = rand_int(0, w - 1);
    o.y0 = rand_int(0, h - 1);
    o.x1 = rand_int(o.x0, w - 1);
    o.y1 = rand_int(o.y0, h - 1);
    b.objects.push_back(o);
  }
  if (person) {
    const double scale = 0.08 * std::min(w, h) / 10.0 * (0.6 + unit(rng));
    auto s = skeleton_from_angles(jitter(upright_pose(), 0.4, rng), w * (0.3 + 0.4 * unit(rng)),
                                  h * (0.1 + 0.2 * unit(rng)), scale, 0.0);
    for (auto& j : s.joints) {
      j.x = std::clamp(j.x, 0.0, w - 1.0);
      j.y = std::clamp(j.y, 0.0, h - 1.0);
      j.score = prob(rng);
      j.present = unit(rng) < 0.9;
    }
    s.joints[kNose].present = s.joints[kNeck].present = true;
    b.persons.push_back(s);
  }
  if (opt.scene && w > 0 && h > 0) {
    SceneParse sp{Plane<std::uint16_t>(opt.width, opt.height), Plane<float>(opt.width, opt.height)};
    const int regions = rand_int(1, 4);
    for (int r = 0; r < regions; ++r) {
      const auto cls = static_cast<std::uint16_t>(rand_int(1, static_cast<int>(kSpClasses)));
      const auto p = static_cast<float>(prob(rng));
      const int x0 = rand_int(0, w - 1), y0 = rand_int(0, h - 1);
      const int x1 = rand_int(x0, w - 1), y1 = rand_int(y0, h - 1);
      for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
          sp.ids.at(static_cast<std::size_t>(x), static_cast<std::size_t>(y)) = cls;
          sp.probabilities.at(static_cast<std::size_t>(x), static_cast<std::size_t>(y)) = p;
        }
      }
    }
    b.scene = std::move(sp);
  }
  if (opt.saliency && w > 0 && h > 0) {
    Plane<float> s(opt.width, opt.height);
    const double cx = w * unit(rng), cy = h * unit(rng), sigma = 0.3 * std::max(w, h);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
        s.at(static_cast<std::size_t>(x), static_cast<std::size_t>(y)) =
            static_cast<float>(std::exp(-d2 / (2 * sigma * sigma)));
      }
    }
    b.saliency = std::move(s);
  }
  b.vgg = unit_vector(kVggDims, rng);
  b.rating = std::round(unit(rng) * 1000.0) / 10.0;
  b.views = rand_int(0, 100000);
  b.gender = static_cast<Gender>(rand_int(0, 2));
  if (person) b.category = rand_int(0, static_cast<int>(kCategoryCount) - 1);
  b.tags = {"synthetic"};
  return b;
}

/// A feature record with random but structurally valid blocks.
inline FeatureRecord random_record(std::mt19937_64& rng, const std::string& id) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  FeatureRecord r;
  r.image_id = id;
  r.blocks[kVgg] = unit_vector(kVggDims, rng);
  r.blocks[kIod].assign(kMergedClasses, 0.0);
  const int classes = std::uniform_int_distribution<int>(0, 6)(rng);
  double total = 0.0;
  for (int i = 0; i < classes; ++i) {
    const auto k = std::uniform_int_distribution<std::size_t>(0, kMergedClasses - 1)(rng);
    const double v = unit(rng) + 0.01;
    r.blocks[kIod][k] += v;
    total += v;
  }
  if (total > 0.0) {
    for (double& v : r.blocks[kIod]) v /= total;
  }
  r.blocks[kCade].assign(kCategoryCount, 0.0);
  if (unit(rng) < 0.8) {
    r.blocks[kCade][std::uniform_int_distribution<std::size_t>(0, kCategoryCount - 1)(rng)] = 1.0;
  }
  r.blocks[kArpose] = unit(rng) < 0.8 ? unit_vector(kArposeDims, rng)
                                      : std::vector<double>(kArposeDims, 0.0);
  for (double& v : r.blocks[kArpose]) v = std::abs(v);
  r.blocks[kStat] = {std::round(unit(rng) * 1000.0) / 10.0,
                     static_cast<double>(std::uniform_int_distribution<int>(0, 5000)(rng))};
  r.blocks[kGender].assign(kGenderDims, 0.0);
  r.blocks[kGender][std::uniform_int_distribution<std::size_t>(0, kGenderDims - 1)(rng)] = 1.0;
  if (unit(rng) < 0.8) {
    r.pose = skeleton_from_angles(random_angles(rng), 100.0 * unit(rng), 100.0 * unit(rng),
                                  0.5 + unit(rng));
  }
  return r;
}

/// Writes `count` bundles and a corpus.json into `dir`.
inline std::vector<AnnotationBundle> write_corpus(const std::filesystem::path& dir,
                                                  std::size_t count, std::uint64_t seed,
                                                  const BundleOptions& opt = {}) {
  std::mt19937_64 rng(seed);
  std::vector<AnnotationBundle> out;
  nlohmann::json list = nlohmann::json::array();
  std::filesystem::create_directories(dir);
  for (std::size_t i = 0; i < count; ++i) {
    char id[32];
    std::snprintf(id, sizeof(id), "img%05zu", i);
    auto b = random_bundle(rng, id, opt);
    save_bundle(b, dir / id);
    list.push_back(id);
    out.push_back(std::move(b));
  }
  std::ofstream(dir / "corpus.json") << nlohmann::json{{"bundles", list}}.dump(1);
  return out;
}

}  // namespace captain::synth
