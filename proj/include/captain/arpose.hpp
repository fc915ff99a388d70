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
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <vector>

#include "captain/annotation.hpp"
#include "captain/common.hpp"
#include "json.hpp"

namespace captain {

inline constexpr std::size_t kMinPoseJoints = 3;
inline constexpr double kDegenerateBase = 1e-9;

inline void require_pose_joints(const Skeleton& s) {
  if (static_cast<std::size_t>(s.present_count()) < kMinPoseJoints) {
    throw Error(ErrorCode::TooFewJoints, "pose features need at least 3 present joints, got " +
                                             std::to_string(s.present_count()));
  }
}

/// Joint-to-line distances. Block l (136 entries) holds, for every pair m < n
/// of the other 17 joints in ascending order, the distance from joint l to
/// the line through m and n. Divided by the body's largest entry.
inline std::vector<double> j2l_features(const Skeleton& s) {
  require_pose_joints(s);
  std::vector<double> out(kJ2lDims, 0.0);
  std::size_t k = 0;
  double peak = 0.0;
  for (std::size_t l = 0; l < kJointCount; ++l) {
    for (std::size_t m = 0; m < kJointCount; ++m) {
      if (m == l) continue;
      for (std::size_t n = m + 1; n < kJointCount; ++n) {
        if (n == l) continue;
        const auto& jl = s.joints[l];
        const auto& jm = s.joints[m];
        const auto& jn = s.joints[n];
        double v = 0.0;
        if (jl.present && jm.present && jn.present) {
          const double bx = jn.x - jm.x, by = jn.y - jm.y;
          const double base = std::hypot(bx, by);
          if (base >= kDegenerateBase) {
            const double cross = bx * (jl.y - jm.y) - by * (jl.x - jm.x);
            v = std::abs(cross) / base;  // 2 * triangle area / base
          }
        }
        out[k++] = v;
        peak = std::max(peak, v);
      }
    }
  }
  if (peak > 0.0) {
    for (double& v : out) v /= peak;
  }
  return out;
}

/// Skeleton context: row r is the 18-bin angular histogram, over [0, 2pi),
/// of directions from joint r to each other present joint, row-normalised.
/// Angles are atan2(dy, dx) in image coordinates.
inline std::vector<double> skeleton_context(const Skeleton& s) {
  require_pose_joints(s);
  std::vector<double> out(kScDims, 0.0);
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  const double width = kTwoPi / static_cast<double>(kScBins);
  for (std::size_t r = 0; r < kJointCount; ++r) {
    const auto& a = s.joints[r];
    if (!a.present) continue;
    double* row = out.data() + r * kScBins;
    double count = 0.0;
    for (std::size_t o = 0; o < kJointCount; ++o) {
      const auto& b = s.joints[o];
      if (o == r || !b.present) continue;
      double angle = std::atan2(b.y - a.y, b.x - a.x);
      if (angle < 0.0) angle += kTwoPi;
      auto bin = static_cast<std::size_t>(angle / width);
      if (bin >= kScBins) bin = 0;  // angle rounded up to 2pi
      row[bin] += 1.0;
      count += 1.0;
    }
    if (count > 0.0) {
      for (std::size_t b = 0; b < kScBins; ++b) row[b] /= count;
    }
  }
  return out;
}

/// j2l followed by the flattened skeleton context, scaled to unit L2 norm.
inline std::vector<double> pose_features(const Skeleton& s) {
  auto v = j2l_features(s);
  const auto sc = skeleton_context(s);
  v.insert(v.end(), sc.begin(), sc.end());
  const double norm = std::sqrt(dot(std::span<const double>(v), std::span<const double>(v)));
  if (norm > 0.0) {
    for (double& x : v) x /= norm;
  }
  return v;
}

// ---------------------------------------------------------------------------
// K-means

struct PoseClusters {
  DenseMatrix<double> centers;
  std::vector<int> assignments;
  std::vector<std::size_t> sizes;
  double distortion = 0.0;
  double fuzziness = 2.0;
  std::vector<double> trace;  // distortion after each assignment step
};

struct KMeansOptions {
  std::size_t k = 15;
  std::size_t restarts = 10;
  std::uint64_t seed = 0;
  std::size_t max_iterations = 300;
};

namespace detail {

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double acc[4] = {0, 0, 0, 0};
  const std::size_t n = a.size();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    for (std::size_t k = 0; k < 4; ++k) {
      const double d = a[i + k] - b[i + k];
      acc[k] += d * d;
    }
  }
  double total = (acc[0] + acc[1]) + (acc[2] + acc[3]);
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    total += d * d;
  }
  return total;
}

struct Assignment {
  std::vector<int> labels;
  std::vector<double> cost;
  double total = 0.0;
};

// Nearest center per sample, lowest index on ties.
inline Assignment assign(const DenseMatrix<double>& x, const DenseMatrix<double>& centers) {
  Assignment a;
  a.labels.resize(x.rows());
  a.cost.resize(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    int label = 0;
    for (std::size_t c = 0; c < centers.rows(); ++c) {
      const double d = squared_distance(x.row(i), centers.row(c));
      if (d < best) {
        best = d;
        label = static_cast<int>(c);
      }
    }
    a.labels[i] = label;
    a.cost[i] = best;
    a.total += best;
  }
  return a;
}

inline DenseMatrix<double> plus_plus_seed(const DenseMatrix<double>& x, std::size_t k,
                                          std::mt19937_64& rng) {
  DenseMatrix<double> centers;
  centers.set_cols(x.cols());
  std::uniform_int_distribution<std::size_t> first(0, x.rows() - 1);
  centers.push_row(x.row(first(rng)));
  std::vector<double> d2(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) d2[i] = squared_distance(x.row(i), centers.row(0));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  while (centers.rows() < k) {
    double total = 0.0;
    for (double v : d2) total += v;
    std::size_t pick = 0;
    if (total > 0.0) {
      const double target = unit(rng) * total;
      double run = 0.0;
      pick = x.rows() - 1;
      for (std::size_t i = 0; i < x.rows(); ++i) {
        run += d2[i];
        if (run > target && d2[i] > 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = first(rng);
    }
    centers.push_row(x.row(pick));
    const auto c = centers.row(centers.rows() - 1);
    for (std::size_t i = 0; i < x.rows(); ++i) {
      d2[i] = std::min(d2[i], squared_distance(x.row(i), c));
    }
  }
  return centers;
}

/// Lloyd iterations from the given centers until assignments settle. A
/// cluster that loses all members is moved onto the worst-served sample.
inline PoseClusters lloyd(const DenseMatrix<double>& x, DenseMatrix<double> centers,
                          std::size_t max_iterations) {
  PoseClusters out;
  const std::size_t k = centers.rows(), dims = x.cols();
  auto a = assign(x, centers);
  out.trace.push_back(a.total);
  for (std::size_t it = 0; it < max_iterations; ++it) {
    DenseMatrix<double> next(k, dims, 0.0);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < x.rows(); ++i) {
      const auto c = static_cast<std::size_t>(a.labels[i]);
      ++counts[c];
      auto row = next.row(c);
      const auto xi = x.row(i);
      for (std::size_t d = 0; d < dims; ++d) row[d] += xi[d];
    }
    std::vector<double> cost = a.cost;
    for (std::size_t c = 0; c < k; ++c) {
      auto row = next.row(c);
      if (counts[c] > 0) {
        for (double& v : row) v /= static_cast<double>(counts[c]);
        continue;
      }
      const auto far = static_cast<std::size_t>(
          std::max_element(cost.begin(), cost.end()) - cost.begin());
      std::copy(x.row(far).begin(), x.row(far).end(), row.begin());
      cost[far] = 0.0;
    }
    centers = std::move(next);
    auto b = assign(x, centers);
    out.trace.push_back(b.total);
    const bool settled = b.labels == a.labels;
    a = std::move(b);
    if (settled) break;
  }
  out.centers = std::move(centers);
  out.assignments = std::move(a.labels);
  out.distortion = a.total;
  out.sizes.assign(k, 0);
  for (int l : out.assignments) ++out.sizes[static_cast<std::size_t>(l)];
  return out;
}

inline void check_kmeans_input(const DenseMatrix<double>& x, std::size_t k) {
  if (x.rows() == 0) throw Error(ErrorCode::EmptyInput, "no samples to cluster");
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "k must be at least 1");
  if (k > x.rows()) {
    throw Error(ErrorCode::KTooLarge, "k = " + std::to_string(k) + " exceeds sample count " +
                                          std::to_string(x.rows()));
  }
}

}  // namespace detail

/// Best of `restarts` k-means++ seeded Lloyd runs; restart r uses seed + r.
inline PoseClusters kmeans(const DenseMatrix<double>& x, const KMeansOptions& opt) {
  detail::check_kmeans_input(x, opt.k);
  PoseClusters best;
  best.distortion = std::numeric_limits<double>::infinity();
  const std::size_t restarts = std::max<std::size_t>(1, opt.restarts);
  for (std::size_t r = 0; r < restarts; ++r) {
    std::mt19937_64 rng(opt.seed + r);
    auto run = detail::lloyd(x, detail::plus_plus_seed(x, opt.k, rng), opt.max_iterations);
    if (run.distortion < best.distortion) best = std::move(run);
  }
  return best;
}

/// Memberships with fuzzifier m > 1; a sample sitting on a center belongs
/// only to the first such center.
inline std::vector<double> fuzzy_membership(std::span<const double> x,
                                            const DenseMatrix<double>& centers, double m = 2.0) {
  if (!(m > 1.0)) throw Error(ErrorCode::InvalidArgument, "fuzzifier must exceed 1");
  if (centers.empty()) throw Error(ErrorCode::EmptyInput, "no centers");
  const std::size_t k = centers.rows();
  std::vector<double> d(k);
  for (std::size_t c = 0; c < k; ++c) d[c] = std::sqrt(detail::squared_distance(x, centers.row(c)));
  std::vector<double> q(k, 0.0);
  const auto nearest = static_cast<std::size_t>(std::min_element(d.begin(), d.end()) - d.begin());
  if (d[nearest] == 0.0) {
    q[nearest] = 1.0;
    return q;
  }
  const double p = 2.0 / (m - 1.0);
  for (std::size_t j = 0; j < k; ++j) {
    double sum = 0.0;
    for (std::size_t h = 0; h < k; ++h) sum += std::pow(d[j] / d[h], p);
    q[j] = 1.0 / sum;
  }
  return q;
}

struct ElbowPoint {
  std::size_t k = 0;
  double distortion = 0.0;
  double drop = 0.0;  // distortion(k - 1) - distortion(k); 0 for k = 1
};

/// Distortion for k = 1..k_max. Each k also tries the previous solution plus
/// its worst-served sample as a seed, so the curve never rises.
inline std::vector<ElbowPoint> elbow_scan(const DenseMatrix<double>& x, std::size_t k_max,
                                          std::size_t restarts, std::uint64_t seed,
                                          std::size_t max_iterations = 300) {
  if (x.rows() == 0) throw Error(ErrorCode::EmptyInput, "no samples to cluster");
  detail::check_kmeans_input(x, k_max);
  std::vector<ElbowPoint> out;
  PoseClusters prev;
  for (std::size_t k = 1; k <= k_max; ++k) {
    auto best = kmeans(x, {k, restarts, seed, max_iterations});
    if (k > 1) {
      DenseMatrix<double> warm = prev.centers;
      const auto a = detail::assign(x, warm);
      const auto far = static_cast<std::size_t>(
          std::max_element(a.cost.begin(), a.cost.end()) - a.cost.begin());
      warm.push_row(x.row(far));
      auto run = detail::lloyd(x, std::move(warm), max_iterations);
      if (run.distortion < best.distortion) best = std::move(run);
    }
    ElbowPoint p{k, best.distortion, out.empty() ? 0.0 : out.back().distortion - best.distortion};
    out.push_back(p);
    prev = std::move(best);
  }
  return out;
}

/// Cluster summary with the `top_q` members of highest membership per cluster.
inline nlohmann::json cluster_report(const PoseClusters& clusters, const DenseMatrix<double>& x,
                                     const std::vector<std::string>& ids, std::size_t top_q) {
  const std::size_t k = clusters.centers.rows();
  std::vector<std::vector<std::pair<double, std::size_t>>> members(k);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto q = fuzzy_membership(x.row(i), clusters.centers, clusters.fuzziness);
    const auto c = static_cast<std::size_t>(clusters.assignments[i]);
    members[c].push_back({q[c], i});
  }
  nlohmann::json out;
  out["k"] = k;
  out["distortion"] = clusters.distortion;
  out["fuzziness"] = clusters.fuzziness;
  auto list = nlohmann::json::array();
  for (std::size_t c = 0; c < k; ++c) {
    auto& m = members[c];
    std::stable_sort(m.begin(), m.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    auto top = nlohmann::json::array();
    for (std::size_t t = 0; t < std::min(top_q, m.size()); ++t) {
      top.push_back({{"id", ids.at(m[t].second)}, {"membership", m[t].first}});
    }
    const auto row = clusters.centers.row(c);
    list.push_back({{"index", c},
                    {"size", clusters.sizes[c]},
                    {"center", std::vector<double>(row.begin(), row.end())},
                    {"top", top}});
  }
  out["clusters"] = list;
  return out;
}

/// Centers (and fuzzifier) from a cluster report.
inline PoseClusters clusters_from_json(const nlohmann::json& j) {
  PoseClusters c;
  try {
    c.fuzziness = j.value("fuzziness", 2.0);
    c.distortion = j.value("distortion", 0.0);
    for (const auto& cl : j.at("clusters")) {
      c.centers.push_row(cl.at("center").get<std::vector<double>>());
      c.sizes.push_back(cl.value("size", std::size_t{0}));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedModel, std::string("cluster report: ") + e.what());
  }
  if (c.centers.empty()) throw Error(ErrorCode::MalformedModel, "cluster report has no centers");
  return c;
}

}  // namespace captain
