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
#include <numbers>
#include <random>

#include "captain/captain.hpp"
#include "captain/synth.hpp"
#include "support/oracles.hpp"

namespace captain {
namespace {

Skeleton three_joints(double ax, double ay, double bx, double by, double cx, double cy) {
  Skeleton s;
  s.joints[0] = {true, ax, ay, 0.9};
  s.joints[1] = {true, bx, by, 0.9};
  s.joints[2] = {true, cx, cy, 0.9};
  return s;
}

Skeleton random_skeleton(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 100.0);
  std::bernoulli_distribution keep(0.8);
  Skeleton s;
  for (auto& j : s.joints) j = {keep(rng), u(rng), u(rng), 0.5};
  for (std::size_t j = 0; j < 3; ++j) s.joints[j].present = true;
  return s;
}

DenseMatrix<double> blobs2d(const std::vector<std::pair<double, double>>& centers, std::size_t each,
                            double noise, std::uint64_t seed, std::vector<int>* labels) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, noise);
  DenseMatrix<double> x;
  for (std::size_t i = 0; i < each; ++i) {
    for (std::size_t c = 0; c < centers.size(); ++c) {
      x.push_row(std::vector<double>{centers[c].first + g(rng), centers[c].second + g(rng)});
      if (labels) labels->push_back(static_cast<int>(c));
    }
  }
  return x;
}

TEST(J2l, RightTriangle) {
  const auto f = j2l_features(three_joints(0, 1, 0, 0, 1, 0));
  EXPECT_DOUBLE_EQ(f[0], 1.0);                   // l = 0, line through 1 and 2
  EXPECT_NEAR(f[136], 1.0 / std::sqrt(2.0), 1e-15);  // l = 1, line through 0 and 2
  EXPECT_EQ(*std::max_element(f.begin(), f.end()), 1.0);
}

TEST(J2l, CollinearIsZero) {
  const auto f = j2l_features(three_joints(0, 0, 1, 1, 3, 3));
  for (double v : f) EXPECT_EQ(v, 0.0);
}

TEST(J2l, CoincidentBaseIsZero) {
  const auto f = j2l_features(three_joints(0, 5, 2, 2, 2, 2));
  EXPECT_EQ(f[0], 0.0);
}

TEST(J2l, TooFewJoints) {
  Skeleton s;
  s.joints[0] = {true, 1, 1, 0.9};
  s.joints[4] = {true, 2, 1, 0.9};
  try {
    j2l_features(s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TooFewJoints);
  }
  EXPECT_THROW(skeleton_context(s), Error);
}

TEST(SkeletonContext, AllToTheRight) {
  const auto sc = skeleton_context(three_joints(0, 0, 5, 0, 9, 0));
  EXPECT_EQ(sc[0], 1.0);
  for (std::size_t b = 1; b < kScBins; ++b) EXPECT_EQ(sc[b], 0.0);
}

TEST(SkeletonContext, RowsSumToOneOrZero) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 100; ++i) {
    const auto s = random_skeleton(rng);
    const auto sc = skeleton_context(s);
    for (std::size_t r = 0; r < kJointCount; ++r) {
      double sum = 0;
      for (std::size_t b = 0; b < kScBins; ++b) sum += sc[r * kScBins + b];
      if (s.joints[r].present) {
        EXPECT_NEAR(sum, 1.0, 1e-12);
      } else {
        EXPECT_EQ(sum, 0.0);
      }
    }
  }
}

TEST(SkeletonContext, RotationByOneBinShiftsRows) {
  std::mt19937_64 rng(2);
  const double a = 2 * std::numbers::pi / 18;
  for (int i = 0; i < 50; ++i) {
    const auto s = random_skeleton(rng);
    Skeleton r = s;
    for (auto& j : r.joints) {
      const double x = j.x, y = j.y;
      j.x = x * std::cos(a) - y * std::sin(a);
      j.y = x * std::sin(a) + y * std::cos(a);
    }
    const auto before = skeleton_context(s);
    const auto after = skeleton_context(r);
    for (std::size_t row = 0; row < kJointCount; ++row) {
      for (std::size_t b = 0; b < kScBins; ++b) {
        EXPECT_NEAR(after[row * kScBins + (b + 1) % kScBins], before[row * kScBins + b], 1e-12);
      }
    }
  }
}

TEST(PoseFeatures, TranslationAndScaleInvariant) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> shift(-500, 500), scale(0.1, 10);
  for (int i = 0; i < 100; ++i) {
    const auto s = random_skeleton(rng);
    Skeleton t = s;
    const double k = scale(rng), dx = shift(rng), dy = shift(rng);
    for (auto& j : t.joints) {
      j.x = j.x * k + dx;
      j.y = j.y * k + dy;
    }
    const auto a = pose_features(s), b = pose_features(t);
    ASSERT_EQ(a.size(), kArposeDims);
    for (std::size_t d = 0; d < a.size(); ++d) EXPECT_NEAR(a[d], b[d], 1e-9);
  }
}

TEST(PoseFeatures, UnitNorm) {
  const auto f = pose_features(synth::skeleton_from_angles(synth::upright_pose(), 40, 40, 1.0));
  double n = 0;
  for (double v : f) n += v * v;
  EXPECT_NEAR(n, 1.0, 1e-12);
}

TEST(KMeans, SingleClusterIsTheMean) {
  DenseMatrix<double> x;
  x.push_row(std::vector<double>{0, 0});
  x.push_row(std::vector<double>{2, 4});
  x.push_row(std::vector<double>{4, 2});
  const auto c = kmeans(x, {1, 3, 0, 100});
  EXPECT_DOUBLE_EQ(c.centers(0, 0), 2.0);
  EXPECT_DOUBLE_EQ(c.centers(0, 1), 2.0);
  EXPECT_DOUBLE_EQ(c.distortion, 8 + 4 + 4.0);
}

TEST(KMeans, TwoBlobsRecovered) {
  std::vector<int> truth;
  const auto x = blobs2d({{0, 0}, {20, 20}}, 50, 1.0, 4, &truth);
  const auto c = kmeans(x, {2, 5, 1, 100});
  EXPECT_EQ(oracle::adjusted_rand_index(truth, c.assignments), 1.0);
}

TEST(KMeans, KEqualsSamplesHasZeroDistortion) {
  const auto x = blobs2d({{0, 0}, {3, 1}, {7, 7}}, 3, 1.0, 5, nullptr);
  EXPECT_EQ(kmeans(x, {x.rows(), 3, 0, 100}).distortion, 0.0);
}

TEST(KMeans, Errors) {
  DenseMatrix<double> empty;
  try {
    kmeans(empty, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyInput);
  }
  const auto x = blobs2d({{0, 0}}, 4, 1.0, 1, nullptr);
  try {
    kmeans(x, {5, 1, 0, 10});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::KTooLarge);
  }
}

TEST(KMeans, DistortionNeverRisesAcrossIterations) {
  const auto x = blobs2d({{0, 0}, {5, 0}, {0, 5}, {5, 5}}, 40, 2.0, 6, nullptr);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto c = kmeans(x, {4, 1, seed, 100});
    for (std::size_t i = 1; i < c.trace.size(); ++i) EXPECT_LE(c.trace[i], c.trace[i - 1] + 1e-9);
    EXPECT_DOUBLE_EQ(c.trace.back(), c.distortion);
  }
}

TEST(KMeans, EveryPointOnItsNearestCenter) {
  const auto x = blobs2d({{0, 0}, {4, 0}, {2, 3}}, 30, 1.5, 7, nullptr);
  const auto c = kmeans(x, {3, 4, 2, 100});
  double total = 0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto own = detail::squared_distance(x.row(i), c.centers.row(static_cast<std::size_t>(c.assignments[i])));
    for (std::size_t k = 0; k < 3; ++k) EXPECT_LE(own, detail::squared_distance(x.row(i), c.centers.row(k)));
    total += own;
  }
  EXPECT_NEAR(total, c.distortion, 1e-9);
}

TEST(KMeans, DeterministicForSeed) {
  const auto x = blobs2d({{0, 0}, {4, 0}, {2, 3}}, 30, 1.5, 7, nullptr);
  const auto a = kmeans(x, {3, 4, 11, 100});
  const auto b = kmeans(x, {3, 4, 11, 100});
  EXPECT_EQ(a.assignments, b.assignments);
  EXPECT_EQ(a.centers, b.centers);
}

TEST(Fuzzy, EquidistantSplitsEvenly) {
  DenseMatrix<double> c;
  c.push_row(std::vector<double>{-1, 0});
  c.push_row(std::vector<double>{1, 0});
  const auto q = fuzzy_membership(std::vector<double>{0, 3}, c);
  EXPECT_DOUBLE_EQ(q[0], 0.5);
  EXPECT_DOUBLE_EQ(q[1], 0.5);
}

TEST(Fuzzy, OnACenterIsOneHot) {
  DenseMatrix<double> c;
  c.push_row(std::vector<double>{-1, 0});
  c.push_row(std::vector<double>{1, 0});
  const auto q = fuzzy_membership(std::vector<double>{1, 0}, c);
  EXPECT_EQ(q, (std::vector<double>{0, 1}));
  EXPECT_THROW(fuzzy_membership(std::vector<double>{1, 0}, c, 1.0), Error);
}

TEST(Fuzzy, SumsToOneAndIgnoresScale) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g(0, 3);
  DenseMatrix<double> c, c2;
  for (int k = 0; k < 5; ++k) {
    std::vector<double> v{g(rng), g(rng), g(rng)};
    c.push_row(v);
    for (double& e : v) e *= 4.0;
    c2.push_row(v);
  }
  for (int i = 0; i < 100; ++i) {
    std::vector<double> x{g(rng), g(rng), g(rng)};
    const double m = 1.5 + i % 3;
    const auto q = fuzzy_membership(x, c, m);
    EXPECT_NEAR(std::accumulate(q.begin(), q.end(), 0.0), 1.0, 1e-12);
    for (double& e : x) e *= 4.0;
    const auto q2 = fuzzy_membership(x, c2, m);
    for (std::size_t k = 0; k < q.size(); ++k) EXPECT_NEAR(q[k], q2[k], 1e-12);
  }
}

TEST(Elbow, NonIncreasingWithLargestDropEarly) {
  const auto x = blobs2d({{0, 0}, {30, 0}, {15, 25}}, 30, 1.0, 10, nullptr);
  const auto curve = elbow_scan(x, 8, 10, 0);
  ASSERT_EQ(curve.size(), 8u);
  std::size_t best = 1;
  for (std::size_t i = 1; i < curve.size(); ++i) {
    EXPECT_LE(curve[i].distortion, curve[i - 1].distortion);
    EXPECT_DOUBLE_EQ(curve[i].drop, curve[i - 1].distortion - curve[i].distortion);
    if (curve[i].drop > curve[best].drop) best = i;
  }
  EXPECT_LE(curve[best].k, 3u);
  EXPECT_LT(curve[4].drop, 0.05 * curve[1].drop);
}

TEST(Elbow, FullScanEndsAtZero) {
  const auto x = blobs2d({{0, 0}, {3, 3}}, 3, 1.0, 2, nullptr);
  const auto curve = elbow_scan(x, x.rows(), 3, 0);
  EXPECT_EQ(curve.back().distortion, 0.0);
}

TEST(ClusterReport, RoundTripsCenters) {
  std::vector<int> truth;
  const auto x = blobs2d({{0, 0}, {10, 10}}, 5, 0.5, 3, &truth);
  const auto c = kmeans(x, {2, 3, 0, 100});
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < x.rows(); ++i) ids.push_back("p" + std::to_string(i));
  const auto report = cluster_report(c, x, ids, 2);
  EXPECT_EQ(report["clusters"].size(), 2u);
  EXPECT_EQ(report["clusters"][0]["top"].size(), 2u);
  const auto back = clusters_from_json(report);
  EXPECT_EQ(back.centers, c.centers);
  EXPECT_THROW(clusters_from_json(nlohmann::json::object()), Error);
}

}  // namespace
}  // namespace captain
