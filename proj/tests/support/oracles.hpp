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

// Slow, literal re-computations used to check the library. None of these
// share code paths with the implementations they check beyond plain types.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "captain/captain.hpp"

namespace captain::oracle {

/// Adjusted Rand index between two labelings.
inline double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
  std::map<std::pair<int, int>, double> joint;
  std::map<int, double> ra, rb;
  for (std::size_t i = 0; i < a.size(); ++i) {
    joint[{a[i], b[i]}] += 1;
    ra[a[i]] += 1;
    rb[b[i]] += 1;
  }
  const auto c2 = [](double n) { return n * (n - 1) / 2; };
  double index = 0, sa = 0, sb = 0;
  for (const auto& [k, v] : joint) index += c2(v);
  for (const auto& [k, v] : ra) sa += c2(v);
  for (const auto& [k, v] : rb) sb += c2(v);
  const double expected = sa * sb / c2(static_cast<double>(a.size()));
  const double max_index = (sa + sb) / 2;
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

/// Importance vector straight from the definition: center of mass, L1
/// centric weights, per-pixel max of the present-class scores, class sums.
inline std::vector<double> importance(const UnifiedTensors& t, const ClassSet& present,
                                      const ClassMap& map, const Plane<double>& s) {
  const std::size_t w = t.od.width(), h = t.od.height();
  double mass = 0, cx = 0, cy = 0;
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      mass += s.data[y * w + x];
      cx += s.data[y * w + x] * static_cast<double>(x);
      cy += s.data[y * w + x] * static_cast<double>(y);
    }
  }
  cx /= mass;
  cy /= mass;
  double k = 0;
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      k += std::exp(-(std::fabs(static_cast<double>(x) - cx) + std::fabs(static_cast<double>(y) - cy)));
    }
  }
  std::vector<double> f(kMergedClasses, 0.0);
  double total = 0;
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const std::size_t i = y * w + x;
      const double d =
          std::exp(-(std::fabs(static_cast<double>(x) - cx) + std::fabs(static_cast<double>(y) - cy))) / k;
      const int a = map.merged_od(t.od.ids.data[i]);
      const int b = map.merged_sp(t.sp.ids.data[i]);
      const double pa = a > 0 && present.test(static_cast<std::size_t>(a))
                            ? -std::log2(1 - t.od.probabilities.data[i]) : 0.0;
      const double pb = b > 0 && present.test(static_cast<std::size_t>(b))
                            ? -std::log2(1 - t.sp.probabilities.data[i]) : 0.0;
      int cls = 0;
      double score = 0;
      if (pa > 0 && pa >= pb) {
        cls = a;
        score = pa;
      } else if (pb > 0) {
        cls = b;
        score = pb;
      }
      if (cls == 0) continue;
      const double v = score * s.data[i] * d;
      f[static_cast<std::size_t>(cls - 1)] += v;
      total += v;
    }
  }
  if (total > 0) {
    for (double& v : f) v /= total;
  }
  return f;
}

/// Hysteresis decision for one class from explicit per-detector means
/// (negative = detector silent on the class).
inline bool class_present(const std::array<double, 3>& means, const std::array<Threshold, 3>& th) {
  for (std::size_t d = 0; d < 3; ++d) {
    if (means[d] >= 0 && means[d] > th[d].high) return true;
  }
  return false;
}

struct Scored {
  std::string id;
  double score;
};

/// Per-image scalar loop for the ranking score.
inline std::vector<Scored> rank(const CompositionModel& model, const FeatureRecord& q,
                                const std::array<double, 6>& raw_weights) {
  const std::size_t n = model.rows();
  double wsum = 0;
  for (double v : raw_weights) wsum += v;
  std::array<std::vector<double>, 6> s;
  for (auto& row : s) row.assign(n, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t b : {0u, 2u, 3u}) {
      double acc = 0;
      for (std::size_t i = 0; i < kBlockDims[b]; ++i) {
        acc += static_cast<double>(model.block(static_cast<Block>(b))(r, i)) * q.blocks[b][i];
      }
      s[b][r] = acc;
    }
    double masked = 0;
    for (std::size_t i = 0; i < kMergedClasses; ++i) {
      const double sign = q.blocks[kIod][i] > 0 ? 1.0 : 0.0;
      const double v = model.block(kIod)(r, i);
      masked += v - v * sign;
    }
    masked = std::min(masked, 1.0);  // a fraction of a unit mass
    s[kIod][r] = std::exp(-masked * masked);
    s[kStat][r] = model.block(kStat)(r, 0);
    bool same = true;
    for (std::size_t i = 0; i < kGenderDims; ++i) {
      same = same && model.block(kGender)(r, i) == q.blocks[kGender][i];
    }
    s[kGender][r] = same ? 1.0 : 0.0;
  }
  std::vector<Scored> out;
  for (std::size_t r = 0; r < n; ++r) {
    double v = 0;
    for (std::size_t b = 0; b < 6; ++b) {
      double sum = 0;
      for (double x : s[b]) sum += x;
      const double norm = sum < 1e-12 ? 1.0 / static_cast<double>(n) : s[b][r] / sum;
      v += raw_weights[b] / wsum * norm;
    }
    out.push_back({model.ids()[r], v});
  }
  std::stable_sort(out.begin(), out.end(), [](const Scored& a, const Scored& b) {
    return a.score != b.score ? a.score > b.score : a.id < b.id;
  });
  return out;
}

/// Double loop over (candidate, style image), with each block normalised
/// over all pairs.
inline std::vector<double> favorite_scores(const std::vector<FeatureRecord>& style,
                                           const std::vector<FeatureRecord>& candidates,
                                           const std::array<double, 6>& raw_weights) {
  const std::size_t c = style.size(), q = candidates.size();
  std::vector<std::array<double, 6>> raw(c * q);
  for (std::size_t i = 0; i < q; ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      const auto& a = style[j];
      const auto& b = candidates[i];
      auto& s = raw[i * c + j];
      for (std::size_t blk : {0u, 2u, 3u}) {
        double acc = 0;
        for (std::size_t k = 0; k < kBlockDims[blk]; ++k) {
          acc += static_cast<double>(static_cast<float>(a.blocks[blk][k])) * b.blocks[blk][k];
        }
        s[blk] = acc;
      }
      double masked = 0;
      for (std::size_t k = 0; k < kMergedClasses; ++k) {
        if (b.blocks[kIod][k] == 0) masked += static_cast<float>(a.blocks[kIod][k]);
      }
      masked = std::min(masked, 1.0);
      s[kIod] = std::exp(-masked * masked);
      s[kStat] = static_cast<float>(a.blocks[kStat][0]);
      s[kGender] = 1.0;
      for (std::size_t k = 0; k < kGenderDims; ++k) {
        if (static_cast<float>(a.blocks[kGender][k]) != b.blocks[kGender][k]) s[kGender] = 0.0;
      }
    }
  }
  std::array<double, 6> sums{};
  for (const auto& s : raw) {
    for (std::size_t b = 0; b < 6; ++b) sums[b] += s[b];
  }
  double wsum = 0;
  for (double v : raw_weights) wsum += v;
  std::vector<double> out(q, 0.0);
  for (std::size_t i = 0; i < q; ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      for (std::size_t b = 0; b < 6; ++b) {
        const double norm = sums[b] < 1e-12 ? 1.0 / static_cast<double>(c * q) : raw[i * c + j][b] / sums[b];
        out[i] += raw_weights[b] / wsum * norm;
      }
    }
  }
  return out;
}

inline std::size_t first_argmax(const std::vector<double>& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

/// Phase distance over joints 1..17 with q = 1, skipping joints whose
/// anchors differ; nullopt when nothing compares.
inline std::optional<double> phase_distance(const PolarPose& a, const PolarPose& b) {
  double d = 0;
  int shared = 0;
  for (std::size_t j = 1; j < kJointCount; ++j) {
    if (!a.joints[j].present || !b.joints[j].present) continue;
    if (a.joints[j].anchor != b.joints[j].anchor) continue;
    d += std::fabs(std::sin(a.joints[j].theta) - std::sin(b.joints[j].theta));
    ++shared;
  }
  if (shared == 0) return std::nullopt;
  return d;
}

/// Every taken shot against every preferred and ignored pose.
inline std::vector<double> pose_objectives(const std::vector<PolarPose>& taken,
                                           const std::vector<PolarPose>& preferred,
                                           const std::vector<PolarPose>& ignored) {
  std::vector<double> out;
  for (const auto& t : taken) {
    double best_pref = std::numeric_limits<double>::infinity();
    double best_ign = std::numeric_limits<double>::infinity();
    for (const auto& p : preferred) {
      if (auto d = phase_distance(t, p)) best_pref = std::min(best_pref, *d);
    }
    for (const auto& g : ignored) {
      if (auto d = phase_distance(t, g)) best_ign = std::min(best_ign, *d);
    }
    if (std::isinf(best_ign)) best_ign = 0;
    out.push_back(std::isinf(best_pref) ? -std::numeric_limits<double>::infinity()
                                        : best_ign - best_pref);
  }
  return out;
}

/// sum_i c_i exp(-gamma |x - s_i|^2) + b with the distance taken directly.
inline double kernel_sum(const BinarySvm& svm, const std::vector<double>& z) {
  double f = svm.bias;
  for (std::size_t i = 0; i < svm.coefficients.size(); ++i) {
    double d2 = 0;
    for (std::size_t k = 0; k < z.size(); ++k) {
      const double diff = z[k] - svm.support_vectors(i, k);
      d2 += diff * diff;
    }
    f += svm.coefficients[i] * std::exp(-svm.gamma * d2);
  }
  return f;
}

/// Gaussian blobs: `classes` centers at distance `spread` apart on random
/// axes, `per_class` points each with unit noise.
inline std::vector<LabeledFeatures> blobs(std::size_t classes, std::size_t per_class,
                                          std::size_t dims, double spread, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<std::vector<double>> centers(classes, std::vector<double>(dims));
  for (auto& c : centers) {
    for (double& v : c) v = g(rng) * spread;
  }
  std::vector<LabeledFeatures> out;
  for (std::size_t i = 0; i < per_class; ++i) {
    for (std::size_t c = 0; c < classes; ++c) {
      LabeledFeatures s{std::vector<double>(dims), static_cast<int>(c)};
      for (std::size_t d = 0; d < dims; ++d) s.features[d] = centers[c][d] + g(rng);
      out.push_back(std::move(s));
    }
  }
  return out;
}

}  // namespace captain::oracle
