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

#include <array>
#include <bitset>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <utility>
#include <vector>

#include "captain/annotation.hpp"
#include "captain/class_map.hpp"
#include "captain/common.hpp"

namespace captain {

struct Threshold {
  double low = 0.09;
  double high = 0.44;
};

/// LOW/HIGH probability thresholds per (merged class, detector). Rows not
/// overridden fall back to the global defaults.
class HysteresisThresholds {
 public:
  HysteresisThresholds() = default;
  explicit HysteresisThresholds(Threshold defaults) : defaults_(defaults) { check(defaults_); }

  Threshold get(int merged_class, DetectorKind det) const {
    auto it = overrides_.find({merged_class, det});
    return it == overrides_.end() ? defaults_ : it->second;
  }

  void set(int merged_class, DetectorKind det, Threshold t) {
    check(t);
    overrides_[{merged_class, det}] = t;
  }

  const Threshold& defaults() const { return defaults_; }

  /// Parses the text table `class detector low high`, one row per line;
  /// `#` starts a comment. `*` as class sets the defaults.
  static HysteresisThresholds parse(std::istream& in) {
    HysteresisThresholds t;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
      std::istringstream row(line);
      std::string cls, det;
      double low = 0, high = 0;
      if (!(row >> cls)) continue;
      if (!(row >> det >> low >> high)) {
        throw Error(ErrorCode::MalformedBundle,
                    "thresholds line " + std::to_string(line_no) + " is malformed");
      }
      if (cls == "*") {
        t.defaults_ = {low, high};
        check(t.defaults_);
        continue;
      }
      const auto kind = parse_detector(det);
      if (!kind) {
        throw Error(ErrorCode::MalformedBundle, "unknown detector '" + det + "'");
      }
      int id = 0;
      try {
        id = std::stoi(cls);
      } catch (const std::exception&) {
        throw Error(ErrorCode::MalformedBundle, "bad class id '" + cls + "'");
      }
      if (id < 1 || id > static_cast<int>(kMergedClasses)) {
        throw Error(ErrorCode::ValueOutOfRange, "class id outside 1..210");
      }
      t.set(id, *kind, {low, high});
    }
    return t;
  }

  static HysteresisThresholds load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
    return parse(in);
  }

 private:
  static void check(const Threshold& t) {
    if (!(t.low >= 0.0 && t.low < t.high && t.high < 1.0)) {
      throw Error(ErrorCode::ValueOutOfRange, "thresholds need 0 <= low < high < 1");
    }
  }

  Threshold defaults_{};
  std::map<std::pair<int, DetectorKind>, Threshold> overrides_;
};

/// Person cut-offs: object-detector mean probability and pose-estimator
/// normalised area of the dominant person.
struct PersonCutoffs {
  double od_probability = 0.40;
  double pe_area = 0.10;
};

using ClassSet = std::bitset<kMergedClasses + 1>;

struct HysteresisResult {
  ClassSet present;
  ClassSet uncertain;
  /// Mean probability over the pixels each detector labels with a class;
  /// negative when the detector labels no pixel with it.
  std::array<std::vector<double>, 3> mean_probability;
};

namespace detail {

struct ClassMeans {
  std::vector<double> sum = std::vector<double>(kMergedClasses + 1, 0.0);
  std::vector<std::size_t> count = std::vector<std::size_t>(kMergedClasses + 1, 0);

  std::vector<double> means() const {
    std::vector<double> m(kMergedClasses + 1, -1.0);
    for (std::size_t k = 1; k <= kMergedClasses; ++k) {
      if (count[k] > 0) m[k] = sum[k] / static_cast<double>(count[k]);
    }
    return m;
  }
};

}  // namespace detail

/// Per-detector mean probabilities of every merged class. Pose-estimator
/// pixels all count towards the person class.
inline std::array<std::vector<double>, 3> class_mean_probabilities(
    const UnifiedTensors& t, const ClassMap& map) {
  detail::ClassMeans od, sp, pe;
  for (std::size_t i = 0; i < t.od.ids.size(); ++i) {
    if (int k = map.merged_od(t.od.ids.data[i])) {
      od.sum[k] += t.od.probabilities.data[i];
      ++od.count[k];
    }
  }
  for (std::size_t i = 0; i < t.sp.ids.size(); ++i) {
    if (int k = map.merged_sp(t.sp.ids.data[i])) {
      sp.sum[k] += t.sp.probabilities.data[i];
      ++sp.count[k];
    }
  }
  for (std::size_t i = 0; i < t.pe.ids.size(); ++i) {
    if (t.pe.ids.data[i] != 0) {
      pe.sum[map.person] += t.pe.probabilities.data[i];
      ++pe.count[map.person];
    }
  }
  return {od.means(), sp.means(), pe.means()};
}

/// A class is present when any detector's mean probability for it exceeds
/// that detector's HIGH threshold; it is absent when every detector is
/// below LOW; everything in between is absent but flagged uncertain.
inline HysteresisResult hysteresis_detect(const UnifiedTensors& t, const ClassMap& map,
                                          const HysteresisThresholds& thresholds) {
  HysteresisResult r;
  r.mean_probability = class_mean_probabilities(t, map);
  constexpr std::array kinds = {DetectorKind::od, DetectorKind::sp, DetectorKind::pe};
  for (std::size_t k = 1; k <= kMergedClasses; ++k) {
    bool high = false, all_low = true;
    for (std::size_t d = 0; d < kinds.size(); ++d) {
      const double mean = r.mean_probability[d][k];
      if (mean < 0.0) continue;
      const Threshold th = thresholds.get(static_cast<int>(k), kinds[d]);
      if (mean > th.high) high = true;
      if (!(mean < th.low)) all_low = false;
    }
    r.present[k] = high;
    r.uncertain[k] = !high && !all_low;
  }
  return r;
}

/// Removes present classes covering less than `min_fraction` of the image
/// (pixels labelled with the class by the detector or the scene parser).
inline ClassSet drop_small_objects(const ClassSet& present, const UnifiedTensors& t,
                                   const ClassMap& map, double min_fraction) {
  const std::size_t n = t.od.ids.size();
  if (n == 0) return present;
  std::vector<std::size_t> area(kMergedClasses + 1, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const int a = map.merged_od(t.od.ids.data[i]);
    const int b = map.merged_sp(t.sp.ids.data[i]);
    if (a) ++area[a];
    if (b && b != a) ++area[b];
  }
  ClassSet kept = present;
  for (std::size_t k = 1; k <= kMergedClasses; ++k) {
    if (kept[k] && static_cast<double>(area[k]) < min_fraction * static_cast<double>(n)) {
      kept[k] = false;
    }
  }
  return kept;
}

struct PersonEvidence {
  double od_mean_probability = 0.0;  // mean over person-labelled od pixels
  double pe_area = 0.0;              // dominant pose's bounding box / image area
};

/// Index of the highest-scoring skeleton (first on ties), or -1.
inline int dominant_person(const std::vector<Skeleton>& persons) {
  int best = -1;
  double best_score = -1.0;
  for (std::size_t i = 0; i < persons.size(); ++i) {
    if (persons[i].present_count() == 0) continue;
    const double s = persons[i].score();
    if (s > best_score) {
      best_score = s;
      best = static_cast<int>(i);
    }
  }
  return best;
}

inline PersonEvidence person_evidence(const AnnotationBundle& b, const UnifiedTensors& t,
                                      const ClassMap& map) {
  PersonEvidence e;
  const auto means = class_mean_probabilities(t, map);
  e.od_mean_probability = std::max(0.0, means[0][map.person]);
  const int dom = dominant_person(b.persons);
  if (dom >= 0 && b.pixel_count() > 0) {
    e.pe_area = b.persons[static_cast<std::size_t>(dom)].bbox_area() /
                static_cast<double>(b.pixel_count());
  }
  return e;
}

inline bool person_present(const PersonEvidence& e, const PersonCutoffs& cutoffs = {}) {
  return e.od_mean_probability >= cutoffs.od_probability || e.pe_area >= cutoffs.pe_area;
}

/// The bundle's saliency map, or a uniform map of ones when absent.
inline Plane<double> saliency_or_default(const AnnotationBundle& b) {
  Plane<double> s(b.width, b.height, 1.0);
  if (b.saliency) {
    for (std::size_t i = 0; i < s.size(); ++i) s.data[i] = b.saliency->data[i];
  }
  return s;
}

struct CenterOfMass {
  double x = 0.0;
  double y = 0.0;
};

struct CentricDistance {
  CenterOfMass center;
  Plane<double> weights;  // sums to 1
};

/// Saliency-weighted centre of mass and the L1 centric distance map
/// D(x, y) = exp(-|(x, y) - c|_1) / K, normalised so that sum(D) = 1.
inline CentricDistance centric_distance(const Plane<double>& s) {
  double total = 0.0, sx = 0.0, sy = 0.0;
  for (std::size_t y = 0; y < s.height; ++y) {
    for (std::size_t x = 0; x < s.width; ++x) {
      const double v = s.at(x, y);
      total += v;
      sx += v * static_cast<double>(x);
      sy += v * static_cast<double>(y);
    }
  }
  if (!(total > 0.0)) throw Error(ErrorCode::ZeroSaliency, "saliency map is identically zero");
  CentricDistance out{{sx / total, sy / total}, Plane<double>(s.width, s.height)};
  double k = 0.0;
  for (std::size_t y = 0; y < s.height; ++y) {
    for (std::size_t x = 0; x < s.width; ++x) {
      const double d = std::abs(static_cast<double>(x) - out.center.x) +
                       std::abs(static_cast<double>(y) - out.center.y);
      const double e = std::exp(-d);
      out.weights.at(x, y) = e;
      k += e;
    }
  }
  for (double& v : out.weights.data) v /= k;
  return out;
}

struct WeightedSaliency {
  Plane<double> weights;
  Plane<std::uint16_t> merged_ids;  // class credited with each pixel
};

/// W = max_H(od score, sp score) * S * D, where only pixels labelled with a
/// present class contribute a score. Ties between detectors go to od.
inline WeightedSaliency weighted_saliency(const UnifiedTensors& t, const ClassSet& present,
                                          const ClassMap& map, const Plane<double>& s,
                                          const Plane<double>& d) {
  const std::size_t n = t.od.ids.size();
  WeightedSaliency w{Plane<double>(t.od.width(), t.od.height(), 0.0),
                     Plane<std::uint16_t>(t.od.width(), t.od.height(), 0)};
  for (std::size_t i = 0; i < n; ++i) {
    const int a = map.merged_od(t.od.ids.data[i]);
    const int b = map.merged_sp(t.sp.ids.data[i]);
    const double sa = (a && present[a]) ? t.od.scores.data[i] : 0.0;
    const double sb = (b && present[b]) ? t.sp.scores.data[i] : 0.0;
    int id = 0;
    double best = 0.0;
    if (sa > 0.0 && sa >= sb) {
      id = a;
      best = sa;
    } else if (sb > 0.0) {
      id = b;
      best = sb;
    }
    w.merged_ids.data[i] = static_cast<std::uint16_t>(id);
    w.weights.data[i] = best * s.data[i] * d.data[i];
  }
  return w;
}

using ImportanceVector = std::array<double, kMergedClasses>;  // index k - 1

/// Share of the total weighted saliency credited to each merged class;
/// all zeros when nothing carries weight.
inline ImportanceVector importance_vector(const Plane<double>& w,
                                          const Plane<std::uint16_t>& ids) {
  ImportanceVector f{};
  double total = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const int k = ids.data[i];
    if (k == 0) continue;
    f[static_cast<std::size_t>(k - 1)] += w.data[i];
    total += w.data[i];
  }
  if (!(total > 0.0)) return ImportanceVector{};
  for (double& v : f) v /= total;
  return f;
}

struct FusionConfig {
  ClassMap class_map = default_class_map();
  HysteresisThresholds thresholds{};
  PersonCutoffs person{};
  double min_object_fraction = 0.0115;
};

struct FusionResult {
  UnifiedTensors tensors;
  HysteresisResult hysteresis;
  ClassSet present;  // after the minimum-area filter
  PersonEvidence person;
  bool person_present = false;
  Plane<double> saliency;
  CenterOfMass center;
  Plane<double> centric;
  WeightedSaliency weighted;
  ImportanceVector importance{};
};

/// Unification, hysteresis detection and object importance for one bundle.
inline FusionResult fuse(const AnnotationBundle& b, const FusionConfig& cfg) {
  FusionResult r;
  r.tensors = unify(b);
  r.hysteresis = hysteresis_detect(r.tensors, cfg.class_map, cfg.thresholds);
  r.present = drop_small_objects(r.hysteresis.present, r.tensors, cfg.class_map,
                                 cfg.min_object_fraction);
  r.person = person_evidence(b, r.tensors, cfg.class_map);
  r.person_present = person_present(r.person, cfg.person);
  r.saliency = saliency_or_default(b);
  if (b.pixel_count() == 0) return r;
  double saliency_mass = 0.0;
  for (double v : r.saliency.data) saliency_mass += v;
  // An all-zero saliency map leaves nothing to weight: importance stays zero.
  if (!(saliency_mass > 0.0)) return r;
  auto cd = centric_distance(r.saliency);
  r.center = cd.center;
  r.centric = std::move(cd.weights);
  r.weighted = weighted_saliency(r.tensors, r.present, cfg.class_map, r.saliency, r.centric);
  r.importance = importance_vector(r.weighted.weights, r.weighted.merged_ids);
  return r;
}

}  // namespace captain
