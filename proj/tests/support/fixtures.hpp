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

#include <atomic>
#include <filesystem>
#include <random>
#include <string>
#include <unistd.h>

#include "captain/captain.hpp"
#include "captain/synth.hpp"

namespace captain::testing {

/// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "t") {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("captain-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// A valid w x h bundle with nothing detected.
inline AnnotationBundle blank_bundle(const std::string& id, std::size_t w = 8, std::size_t h = 8) {
  AnnotationBundle b;
  b.image_id = id;
  b.width = w;
  b.height = h;
  b.vgg.assign(kVggDims, 0.0);
  b.vgg[0] = 1.0;
  return b;
}

inline ObjectDetection box(int cls, double p, int x0, int y0, int x1, int y1) {
  ObjectDetection o;
  o.class_id = cls;
  o.probability = p;
  o.x0 = x0;
  o.y0 = y0;
  o.x1 = x1;
  o.y1 = y1;
  return o;
}

/// Fills the scene parse of `b` with one class and probability everywhere.
inline void fill_scene(AnnotationBundle& b, std::uint16_t cls, float p) {
  SceneParse sp{Plane<std::uint16_t>(b.width, b.height, cls), Plane<float>(b.width, b.height, p)};
  b.scene = std::move(sp);
}

inline Skeleton upright(double ox = 50, double oy = 20, double scale = 1.0) {
  return synth::skeleton_from_angles(synth::upright_pose(), ox, oy, scale);
}

}  // namespace captain::testing
