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

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "captain/captain.hpp"
#include "captain/synth.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

namespace captain {
namespace {

using testing::blank_bundle;
using testing::box;

FusionConfig config_without_area_filter() {
  FusionConfig cfg;
  cfg.min_object_fraction = 0.0;
  return cfg;
}

TEST(Hysteresis, ThresholdExamples) {
  const auto map = default_class_map();
  auto b = blank_bundle("h", 4, 4);
  b.objects = {box(3, 0.50, 0, 0, 3, 3)};
  auto r = hysteresis_detect(unify(b), map, {});
  EXPECT_TRUE(r.present[3]);

  b.objects = {box(3, 0.05, 0, 0, 3, 3)};
  r = hysteresis_detect(unify(b), map, {});
  EXPECT_FALSE(r.present[3]);
  EXPECT_FALSE(r.uncertain[3]);

  b.objects = {box(3, 0.20, 0, 0, 3, 3)};
  r = hysteresis_detect(unify(b), map, {});
  EXPECT_FALSE(r.present[3]);
  EXPECT_TRUE(r.uncertain[3]);
}

TEST(Hysteresis, UnionAcrossDetectors) {
  const auto map = default_class_map();
  auto b = blank_bundle("u", 4, 4);
  b.objects = {box(3, 0.50, 0, 0, 3, 3)};  // car on the detector
  testing::fill_scene(b, 21, 0.05f);        // car on the scene parser
  const auto r = hysteresis_detect(unify(b), map, {});
  EXPECT_TRUE(r.present[3]);
}

TEST(Hysteresis, BoundaryIsExclusive) {
  const auto map = default_class_map();
  auto b = blank_bundle("e", 2, 2);
  b.objects = {box(5, 0.44, 0, 0, 1, 1)};
  EXPECT_FALSE(hysteresis_detect(unify(b), map, {}).present[5]);
  b.objects = {box(5, std::nextafter(0.44, 1.0), 0, 0, 1, 1)};
  EXPECT_TRUE(hysteresis_detect(unify(b), map, {}).present[5]);
}

TEST(Hysteresis, ThresholdTableParse) {
  std::istringstream in(
      "# class detector low high\n"
      "*  od 0.1 0.5\n"
      "3  sp 0.2 0.3   # cars on the parser\n");
  const auto t = HysteresisThresholds::parse(in);
  EXPECT_DOUBLE_EQ(t.get(7, DetectorKind::od).high, 0.5);
  EXPECT_DOUBLE_EQ(t.get(3, DetectorKind::sp).low, 0.2);
  std::istringstream bad("3 sp 0.5 0.2\n");
  EXPECT_THROW(HysteresisThresholds::parse(bad), Error);
  std::istringstream unknown("3 xx 0.1 0.2\n");
  EXPECT_THROW(HysteresisThresholds::parse(unknown), Error);
}

TEST(Person, CutoffExamples) {
  EXPECT_TRUE(person_present({0.45, 0.02}));
  EXPECT_TRUE(person_present({0.10, 0.12}));
  EXPECT_FALSE(person_present({0.0, 0.0}));
  EXPECT_TRUE(person_present({0.40, 0.0}));
  EXPECT_TRUE(person_present({0.0, 0.10}));
  EXPECT_FALSE(person_present({std::nextafter(0.40, 0.0), std::nextafter(0.10, 0.0)}));
}

TEST(Saliency, DefaultsToOnes) {
  auto b = blank_bundle("s", 3, 2);
  const auto s = saliency_or_default(b);
  EXPECT_EQ(s.size(), 6u);
  for (double v : s.data) EXPECT_EQ(v, 1.0);
  EXPECT_TRUE(saliency_or_default(blank_bundle("z", 0, 0)).empty());
}

TEST(CentricDistance, UniformMapCentersExactly) {
  const Plane<double> s(7, 7, 1.0);
  const auto cd = centric_distance(s);
  EXPECT_DOUBLE_EQ(cd.center.x, 3.0);
  EXPECT_DOUBLE_EQ(cd.center.y, 3.0);
  EXPECT_NEAR(std::accumulate(cd.weights.data.begin(), cd.weights.data.end(), 0.0), 1.0, 1e-12);
}

TEST(CentricDistance, PointMass) {
  Plane<double> s(5, 4, 0.0);
  s.at(1, 2) = 0.7;
  const auto cd = centric_distance(s);
  EXPECT_EQ(cd.center.x, 1.0);
  EXPECT_EQ(cd.center.y, 2.0);
  const auto top = std::max_element(cd.weights.data.begin(), cd.weights.data.end());
  EXPECT_EQ(top - cd.weights.data.begin(), 2 * 5 + 1);
}

TEST(CentricDistance, ZeroSaliencyThrows) {
  try {
    centric_distance(Plane<double>(3, 3, 0.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ZeroSaliency);
  }
}

TEST(CentricDistance, StrictlyDecreasingInL1Distance) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Plane<double> s(9, 6);
  for (double& v : s.data) v = u(rng);
  const auto cd = centric_distance(s);
  for (std::size_t a = 0; a < s.size(); ++a) {
    for (std::size_t b = 0; b < s.size(); ++b) {
      const auto l1 = [&](std::size_t i) {
        return std::abs(static_cast<double>(i % 9) - cd.center.x) +
               std::abs(static_cast<double>(i / 9) - cd.center.y);
      };
      if (l1(a) < l1(b) - 1e-12) {
        EXPECT_GT(cd.weights.data[a], cd.weights.data[b]);
      }
    }
  }
}

TEST(Importance, SingleClassCoveringImage) {
  auto b = blank_bundle("one", 6, 6);
  b.objects = {box(17, 0.9, 0, 0, 5, 5)};
  const auto r = fuse(b, {});
  EXPECT_DOUBLE_EQ(r.importance[16], 1.0);
  EXPECT_DOUBLE_EQ(std::accumulate(r.importance.begin(), r.importance.end(), 0.0), 1.0);
}

TEST(Importance, NothingDetectedIsZero) {
  const auto r = fuse(blank_bundle("none", 6, 6), {});
  for (double v : r.importance) EXPECT_EQ(v, 0.0);
}

TEST(Importance, UniformSaliencySingleClassIsProportionalToD) {
  auto b = blank_bundle("d", 5, 5);
  b.objects = {box(9, 0.75, 0, 0, 4, 4)};
  const auto r = fuse(b, {});
  const double ratio = r.weighted.weights.data[0] / r.centric.data[0];
  for (std::size_t i = 0; i < 25; ++i) {
    EXPECT_NEAR(r.weighted.weights.data[i], ratio * r.centric.data[i], 1e-15);
  }
}

// 2x2 with hand-set scores: W = max_H * S * D per pixel.
TEST(WeightedSaliency, TwoByTwoHandComputed) {
  auto b = blank_bundle("w", 2, 2);
  b.objects = {box(2, 0.75, 0, 0, 0, 1)};  // left column, score 2
  b.scene = SceneParse{Plane<std::uint16_t>(2, 2, 0), Plane<float>(2, 2, 0.0f)};
  b.scene->ids.at(1, 0) = 1;  // wall, p 0.5, score 1
  b.scene->probabilities.at(1, 0) = 0.5f;
  b.scene->ids.at(1, 1) = 1;
  b.scene->probabilities.at(1, 1) = 0.5f;
  b.saliency = Plane<float>(2, 2, 1.0f);
  b.saliency->at(0, 0) = 0.5f;
  const auto r = fuse(b, config_without_area_filter());
  // centre of mass of S = (0.5,1,1,1) over x: (0.5*0 + 1*1 + 1*0 + 1*1)/3.5
  const double cx = 2.0 / 3.5, cy = 2.0 / 3.5;
  double k = 0;
  double d[4];
  for (int i = 0; i < 4; ++i) {
    d[i] = std::exp(-(std::abs(i % 2 - cx) + std::abs(i / 2 - cy)));
    k += d[i];
  }
  const double s[4] = {0.5, 1, 1, 1};
  const double score[4] = {2, 1, 2, 1};
  for (int i = 0; i < 4; ++i) {
    EXPECT_NEAR(r.weighted.weights.data[static_cast<std::size_t>(i)], score[i] * s[i] * d[i] / k, 1e-15);
  }
  const double left = score[0] * s[0] * d[0] + score[2] * s[2] * d[2];
  const double right = score[1] * s[1] * d[1] + score[3] * s[3] * d[3];
  EXPECT_NEAR(r.importance[1], left / (left + right), 1e-15);
  EXPECT_NEAR(r.importance[80], right / (left + right), 1e-15);
}

TEST(Importance, FourByFourMatchesOracle) {
  auto b = blank_bundle("o", 4, 4);
  b.objects = {box(4, 0.9, 0, 0, 1, 3), box(6, 0.6, 2, 1, 3, 2)};
  b.saliency = Plane<float>(4, 4);
  for (std::size_t i = 0; i < 16; ++i) b.saliency->data[i] = static_cast<float>(0.1 + 0.05 * i);
  const auto r = fuse(b, {});
  const auto f = oracle::importance(r.tensors, r.present, default_class_map(), r.saliency);
  for (std::size_t k = 0; k < kMergedClasses; ++k) EXPECT_NEAR(r.importance[k], f[k], 1e-12);
  EXPECT_GT(r.importance[3], r.importance[5]);
}

TEST(Importance, RandomBundlesMatchOracleAndSumToOne) {
  std::mt19937_64 rng(21);
  synth::BundleOptions opt;
  opt.width = 8;
  opt.height = 8;
  int nonzero = 0;
  for (int i = 0; i < 100; ++i) {
    const auto b = synth::random_bundle(rng, "r", opt);
    const auto r = fuse(b, {});
    const auto f = oracle::importance(r.tensors, r.present, default_class_map(), r.saliency);
    double sum = 0;
    for (std::size_t k = 0; k < kMergedClasses; ++k) {
      EXPECT_NEAR(r.importance[k], f[k], 1e-9);
      EXPECT_GE(r.importance[k], 0.0);
      sum += r.importance[k];
    }
    if (sum > 0) {
      ++nonzero;
      EXPECT_NEAR(sum, 1.0, 1e-12);
    }
  }
  EXPECT_GT(nonzero, 50);
}

TEST(Importance, InvariantToScalingW) {
  std::mt19937_64 rng(4);
  const auto b = synth::random_bundle(rng, "s");
  const auto r = fuse(b, {});
  auto w = r.weighted.weights;
  for (double& v : w.data) v *= 3.5;
  const auto f = importance_vector(w, r.weighted.merged_ids);
  for (std::size_t k = 0; k < kMergedClasses; ++k) EXPECT_NEAR(f[k], r.importance[k], 1e-15);
}

TEST(Fusion, MinimumAreaFilterDropsTinyObjects) {
  auto b = blank_bundle("tiny", 20, 20);
  b.objects = {box(3, 0.9, 0, 0, 1, 1), box(4, 0.9, 5, 5, 15, 15)};  // 1% and 30%
  const auto r = fuse(b, {});
  EXPECT_TRUE(r.hysteresis.present[3]);
  EXPECT_FALSE(r.present[3]);
  EXPECT_TRUE(r.present[4]);
  EXPECT_EQ(r.importance[2], 0.0);
}

TEST(Fusion, MonotoneInProbability) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 0.99);
  const auto map = default_class_map();
  for (int i = 0; i < 200; ++i) {
    auto b = blank_bundle("m", 6, 6);
    b.objects = {box(1 + i % 80, u(rng), 0, 0, 3, 3), box(1 + (i * 7) % 80, u(rng), 2, 2, 5, 5)};
    const auto before = hysteresis_detect(unify(b), map, {}).present;
    b.objects[0].probability = std::min(0.999, b.objects[0].probability + 0.3);
    const auto after = hysteresis_detect(unify(b), map, {}).present;
    const int k = b.objects[0].class_id;
    if (before[static_cast<std::size_t>(k)]) {
      EXPECT_TRUE(after[static_cast<std::size_t>(k)]);
    }
  }
}

}  // namespace
}  // namespace captain
