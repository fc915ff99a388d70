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
#include <limits>
#include <map>
#include <span>
#include <vector>

#include "captain/annotation.hpp"
#include "captain/common.hpp"
#include "captain/fusion.hpp"

namespace captain {

enum class Genre { portrait, landscape, other };

inline std::string_view to_string(Genre g) {
  switch (g) {
    case Genre::portrait: return "portrait";
    case Genre::landscape: return "landscape";
    case Genre::other: return "other";
  }
  return "other";
}

inline constexpr double kLandscapeAreaFraction = 0.265;

/// Fraction of pixels labelled with a scenery class by either detector.
inline double scenery_fraction(const UnifiedTensors& t, const ClassMap& map) {
  const std::size_t n = t.od.ids.size();
  if (n == 0) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const int a = map.merged_od(t.od.ids.data[i]);
    const int b = map.merged_sp(t.sp.ids.data[i]);
    if ((a && map.scenery.count(a)) || (b && map.scenery.count(b))) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(n);
}

/// Top-down gate: portrait when a person is present, otherwise landscape when
/// scenery covers more than 26.5% of the frame.
inline Genre genre_gate(const FusionResult& fusion, const ClassMap& map) {
  if (fusion.person_present) return Genre::portrait;
  if (scenery_fraction(fusion.tensors, map) > kLandscapeAreaFraction) return Genre::landscape;
  return Genre::other;
}

using CadeFeatures = std::array<double, kCadeFeatureCount>;
using CategoryVector = std::array<double, kCategoryCount>;

inline constexpr double kPeopleAreaFraction = 0.05;

namespace detail {

struct PersonObservation {
  double score = 0.0;
  double area = 0.0;  // normalised
  // Rectangle in continuous pixel coordinates.
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
};

inline double intersection_area(const PersonObservation& a, const PersonObservation& b) {
  const double w = std::min(a.x1, b.x1) - std::max(a.x0, b.x0);
  const double h = std::min(a.y1, b.y1) - std::max(a.y0, b.y0);
  return w > 0 && h > 0 ? w * h : 0.0;
}

// Highest score, first on ties.
inline int top_person(const std::vector<PersonObservation>& people) {
  int best = -1;
  for (std::size_t i = 0; i < people.size(); ++i) {
    if (best < 0 || people[i].score > people[static_cast<std::size_t>(best)].score) {
      best = static_cast<int>(i);
    }
  }
  return best;
}

inline double limb_score(const Skeleton& s, std::initializer_list<int> joints) {
  double sum = 0.0;
  for (int j : joints) {
    const auto& jt = s.joints[static_cast<std::size_t>(j)];
    if (!jt.present) return 0.0;
    sum += jt.score;
  }
  return sum / static_cast<double>(joints.size());
}

}  // namespace detail

/// The 40 portrait-category features:
///  1-4   max person score (od, pe) and max person area (od, pe)
///  5     intersected area of the top od person and the top pe person
///  6-9   scores (od, pe) and areas (od, pe) of those two people
///  10-13 people above HIGH (od, pe) and above 5% area (od, pe)
///  14-16 max of 10/11, max of 12/13, max of 14/15
///  17-40 limb scores of the dominant skeleton
/// Areas are fractions of the image; absent quantities are 0.
inline CadeFeatures extract_cade_features(const AnnotationBundle& b, const ClassMap& map,
                                          const HysteresisThresholds& thresholds) {
  CadeFeatures f{};
  const double pixels = static_cast<double>(b.pixel_count());
  if (pixels == 0) return f;

  std::vector<detail::PersonObservation> od, pe;
  for (const auto& o : b.objects) {
    if (map.merged_od(o.class_id) != map.person) continue;
    od.push_back({o.probability, o.area() / pixels, static_cast<double>(o.x0),
                  static_cast<double>(o.y0), static_cast<double>(o.x1) + 1.0,
                  static_cast<double>(o.y1) + 1.0});
  }
  for (const auto& s : b.persons) {
    if (s.present_count() == 0) continue;
    double x0 = std::numeric_limits<double>::max(), y0 = x0, x1 = -x0, y1 = -x0;
    for (const auto& j : s.joints) {
      if (!j.present) continue;
      x0 = std::min(x0, j.x);
      y0 = std::min(y0, j.y);
      x1 = std::max(x1, j.x);
      y1 = std::max(y1, j.y);
    }
    pe.push_back({s.score(), s.bbox_area() / pixels, x0, y0, x1, y1});
  }

  const auto max_of = [](const std::vector<detail::PersonObservation>& v, auto field) {
    double m = 0.0;
    for (const auto& p : v) m = std::max(m, p.*field);
    return m;
  };
  f[0] = max_of(od, &detail::PersonObservation::score);
  f[1] = max_of(pe, &detail::PersonObservation::score);
  f[2] = max_of(od, &detail::PersonObservation::area);
  f[3] = max_of(pe, &detail::PersonObservation::area);

  const int top_od = detail::top_person(od);
  const int top_pe = detail::top_person(pe);
  if (top_od >= 0 && top_pe >= 0) {
    f[4] = detail::intersection_area(od[static_cast<std::size_t>(top_od)],
                                     pe[static_cast<std::size_t>(top_pe)]) /
           pixels;
  }
  if (top_od >= 0) {
    f[5] = od[static_cast<std::size_t>(top_od)].score;
    f[7] = od[static_cast<std::size_t>(top_od)].area;
  }
  if (top_pe >= 0) {
    f[6] = pe[static_cast<std::size_t>(top_pe)].score;
    f[8] = pe[static_cast<std::size_t>(top_pe)].area;
  }

  const double high_od = thresholds.get(map.person, DetectorKind::od).high;
  const double high_pe = thresholds.get(map.person, DetectorKind::pe).high;
  const auto count_if = [](const std::vector<detail::PersonObservation>& v, auto pred) {
    return static_cast<double>(std::count_if(v.begin(), v.end(), pred));
  };
  f[9] = count_if(od, [&](const auto& p) { return p.score > high_od; });
  f[10] = count_if(pe, [&](const auto& p) { return p.score > high_pe; });
  f[11] = count_if(od, [](const auto& p) { return p.area > kPeopleAreaFraction; });
  f[12] = count_if(pe, [](const auto& p) { return p.area > kPeopleAreaFraction; });
  f[13] = std::max(f[9], f[10]);
  f[14] = std::max(f[11], f[12]);
  f[15] = std::max(f[13], f[14]);

  const int dom = dominant_person(b.persons);
  if (dom >= 0) {
    const auto& s = b.persons[static_cast<std::size_t>(dom)];
    const double limbs[24] = {
        detail::limb_score(s, {kNose}),
        detail::limb_score(s, {kNeck}),
        detail::limb_score(s, {kRightShoulder}),
        detail::limb_score(s, {kRightElbow}),
        detail::limb_score(s, {kRightWrist}),
        detail::limb_score(s, {kRightElbow, kRightWrist}),  // right hand
        detail::limb_score(s, {kLeftShoulder}),
        detail::limb_score(s, {kLeftElbow}),
        detail::limb_score(s, {kLeftWrist}),
        detail::limb_score(s, {kLeftElbow, kLeftWrist}),  // left hand
        detail::limb_score(s, {kRightHip}),
        detail::limb_score(s, {kRightKnee}),
        detail::limb_score(s, {kRightAnkle}),
        detail::limb_score(s, {kRightKnee, kRightAnkle}),  // right leg
        detail::limb_score(s, {kLeftHip}),
        detail::limb_score(s, {kLeftKnee}),
        detail::limb_score(s, {kLeftAnkle}),
        detail::limb_score(s, {kLeftKnee, kLeftAnkle}),  // left leg
        detail::limb_score(s, {kRightEye}),
        detail::limb_score(s, {kLeftEye}),
        detail::limb_score(s, {kRightEye, kLeftEye}),
        detail::limb_score(s, {kRightEar}),
        detail::limb_score(s, {kLeftEar}),
        detail::limb_score(s, {kRightEar, kLeftEar}),
    };
    std::copy(std::begin(limbs), std::end(limbs), f.begin() + 16);
  }
  return f;
}

// ---------------------------------------------------------------------------
// Multi-class RBF SVM (one-vs-one, SMO-trained)

struct SvmParams {
  double C = 1.0;
  double gamma = 0.0;  // 0 selects 1 / feature count
  double tolerance = 1e-3;
  std::size_t max_passes = 10000;
};

inline double rbf_kernel(std::span<const double> a, std::span<const double> b, double gamma) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double t = a[i] - b[i];
    d += t * t;
  }
  return std::exp(-gamma * d);
}

/// One binary classifier; a non-negative decision value votes for `positive`.
struct BinarySvm {
  int positive = 0;
  int negative = 0;
  double C = 1.0;
  double gamma = 1.0;
  double bias = 0.0;
  double kkt_gap = 0.0;  // final maximal violating-pair gap
  std::vector<double> coefficients;  // y_i * alpha_i
  DenseMatrix<double> support_vectors;
  std::vector<double> sv_sq_norms;

  void finalize() {
    sv_sq_norms.assign(support_vectors.rows(), 0.0);
    for (std::size_t i = 0; i < support_vectors.rows(); ++i) {
      sv_sq_norms[i] = dot(support_vectors.row(i), support_vectors.row(i));
    }
  }

  /// Decision value on an already-standardised input, via the expansion
  /// |x - s|^2 = |x|^2 + |s|^2 - 2 x.s.
  double decision(std::span<const double> x) const {
    const double xx = dot(x, x);
    double f = bias;
    for (std::size_t i = 0; i < coefficients.size(); ++i) {
      const double d2 = std::max(0.0, xx + sv_sq_norms[i] - 2.0 * dot(x, support_vectors.row(i)));
      f += coefficients[i] * std::exp(-gamma * d2);
    }
    return f;
  }
};

class SvmModel {
 public:
  std::size_t dims = kCadeFeatureCount;
  std::size_t class_count = kCategoryCount;
  std::vector<double> mean;
  std::vector<double> scale;
  std::vector<BinarySvm> classifiers;

  std::vector<double> standardize(std::span<const double> x) const {
    if (x.size() != dims) {
      throw Error(ErrorCode::DimensionMismatch, "feature vector has " +
                                                    std::to_string(x.size()) + " entries");
    }
    std::vector<double> z(dims);
    for (std::size_t i = 0; i < dims; ++i) z[i] = (x[i] - mean[i]) / scale[i];
    return z;
  }

  std::vector<double> decision_values(std::span<const double> x) const {
    const auto z = standardize(x);
    std::vector<double> out;
    out.reserve(classifiers.size());
    for (const auto& c : classifiers) out.push_back(c.decision(z));
    return out;
  }

  /// One-vs-one majority vote; ties go to the lowest class index.
  int predict(std::span<const double> x) const {
    const auto z = standardize(x);
    std::vector<int> votes(class_count, 0);
    for (const auto& c : classifiers) ++votes[static_cast<std::size_t>(c.decision(z) >= 0.0 ? c.positive : c.negative)];
    return static_cast<int>(std::max_element(votes.begin(), votes.end()) - votes.begin());
  }

  CategoryVector classify(std::span<const double> x) const {
    CategoryVector v{};
    v[static_cast<std::size_t>(predict(x))] = 1.0;
    return v;
  }
};

struct LabeledFeatures {
  std::vector<double> features;
  int category = 0;  // 0-based
};

namespace detail {

/// Dual solver for one C-SVC problem using maximal-violating-pair working
/// set selection with second-order gain.
class SmoSolver {
 public:
  SmoSolver(const DenseMatrix<double>& x, std::vector<int> y, double C, double gamma,
            const SvmParams& params)
      : x_(x), y_(std::move(y)), C_(C), gamma_(gamma), params_(params) {
    const std::size_t n = x_.rows();
    if (n <= kCacheLimit) {
      kernel_ = DenseMatrix<double>(n, n);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
          const double k = rbf_kernel(x_.row(i), x_.row(j), gamma_);
          kernel_(i, j) = k;
          kernel_(j, i) = k;
        }
      }
    }
  }

  void solve() {
    const std::size_t n = x_.rows();
    alpha_.assign(n, 0.0);
    grad_.assign(n, -1.0);
    std::vector<double> qi(n), qj(n);
    constexpr double kTau = 1e-12;
    const std::size_t max_iter = std::max<std::size_t>(params_.max_passes * n, 10000);
    std::size_t iter = 0;
    for (; iter < max_iter; ++iter) {
      double gmax = -std::numeric_limits<double>::infinity();
      int i = -1;
      for (std::size_t t = 0; t < n; ++t) {
        if (y_[t] == 1) {
          if (alpha_[t] < C_ && -grad_[t] >= gmax) {
            gmax = -grad_[t];
            i = static_cast<int>(t);
          }
        } else if (alpha_[t] > 0 && grad_[t] >= gmax) {
          gmax = grad_[t];
          i = static_cast<int>(t);
        }
      }
      double gmax2 = -std::numeric_limits<double>::infinity();
      int j = -1;
      if (i >= 0) {
        q_row(static_cast<std::size_t>(i), qi);
        const auto ii = static_cast<std::size_t>(i);
        double obj_min = std::numeric_limits<double>::infinity();
        for (std::size_t t = 0; t < n; ++t) {
          if (y_[t] == 1) {
            if (!(alpha_[t] > 0)) continue;
            const double diff = gmax + grad_[t];
            gmax2 = std::max(gmax2, grad_[t]);
            if (diff > 0) {
              double quad = 2.0 - 2.0 * y_[ii] * qi[t];
              if (quad <= 0) quad = kTau;
              const double obj = -(diff * diff) / quad;
              if (obj <= obj_min) {
                j = static_cast<int>(t);
                obj_min = obj;
              }
            }
          } else {
            if (!(alpha_[t] < C_)) continue;
            const double diff = gmax - grad_[t];
            gmax2 = std::max(gmax2, -grad_[t]);
            if (diff > 0) {
              double quad = 2.0 + 2.0 * y_[ii] * qi[t];
              if (quad <= 0) quad = kTau;
              const double obj = -(diff * diff) / quad;
              if (obj <= obj_min) {
                j = static_cast<int>(t);
                obj_min = obj;
              }
            }
          }
        }
      }
      gap_ = gmax + gmax2;
      if (i < 0 || j < 0 || gap_ < params_.tolerance) break;

      const auto a = static_cast<std::size_t>(i);
      const auto b = static_cast<std::size_t>(j);
      q_row(b, qj);
      const double old_a = alpha_[a], old_b = alpha_[b];
      if (y_[a] != y_[b]) {
        double quad = 2.0 + 2.0 * qi[b];
        if (quad <= 0) quad = kTau;
        const double delta = (-grad_[a] - grad_[b]) / quad;
        const double diff = alpha_[a] - alpha_[b];
        alpha_[a] += delta;
        alpha_[b] += delta;
        if (diff > 0) {
          if (alpha_[b] < 0) {
            alpha_[b] = 0;
            alpha_[a] = diff;
          }
        } else if (alpha_[a] < 0) {
          alpha_[a] = 0;
          alpha_[b] = -diff;
        }
        if (diff > 0) {
          if (alpha_[a] > C_) {
            alpha_[a] = C_;
            alpha_[b] = C_ - diff;
          }
        } else if (alpha_[b] > C_) {
          alpha_[b] = C_;
          alpha_[a] = C_ + diff;
        }
      } else {
        double quad = 2.0 - 2.0 * qi[b];
        if (quad <= 0) quad = kTau;
        const double delta = (grad_[a] - grad_[b]) / quad;
        const double sum = alpha_[a] + alpha_[b];
        alpha_[a] -= delta;
        alpha_[b] += delta;
        if (sum > C_) {
          if (alpha_[a] > C_) {
            alpha_[a] = C_;
            alpha_[b] = sum - C_;
          }
        } else if (alpha_[b] < 0) {
          alpha_[b] = 0;
          alpha_[a] = sum;
        }
        if (sum > C_) {
          if (alpha_[b] > C_) {
            alpha_[b] = C_;
            alpha_[a] = sum - C_;
          }
        } else if (alpha_[a] < 0) {
          alpha_[a] = 0;
          alpha_[b] = sum;
        }
      }
      const double da = alpha_[a] - old_a, db = alpha_[b] - old_b;
      for (std::size_t t = 0; t < n; ++t) grad_[t] += qi[t] * da + qj[t] * db;
    }
    iterations_ = iter;
  }

  double rho() const {
    double ub = std::numeric_limits<double>::infinity();
    double lb = -std::numeric_limits<double>::infinity();
    double sum_free = 0.0;
    std::size_t free = 0;
    for (std::size_t t = 0; t < alpha_.size(); ++t) {
      const double yg = y_[t] * grad_[t];
      if (alpha_[t] >= C_) {
        if (y_[t] == -1) ub = std::min(ub, yg); else lb = std::max(lb, yg);
      } else if (alpha_[t] <= 0) {
        if (y_[t] == 1) ub = std::min(ub, yg); else lb = std::max(lb, yg);
      } else {
        ++free;
        sum_free += yg;
      }
    }
    return free > 0 ? sum_free / static_cast<double>(free) : (ub + lb) / 2.0;
  }

  const std::vector<double>& alpha() const { return alpha_; }
  double gap() const { return gap_; }

 private:
  static constexpr std::size_t kCacheLimit = 4000;

  // Q_it = y_i y_t K(i, t)
  void q_row(std::size_t i, std::vector<double>& out) const {
    const std::size_t n = x_.rows();
    for (std::size_t t = 0; t < n; ++t) {
      const double k = kernel_.empty() ? rbf_kernel(x_.row(i), x_.row(t), gamma_) : kernel_(i, t);
      out[t] = y_[i] * y_[t] * k;
    }
  }

  const DenseMatrix<double>& x_;
  std::vector<int> y_;
  double C_;
  double gamma_;
  SvmParams params_;
  DenseMatrix<double> kernel_;
  std::vector<double> alpha_;
  std::vector<double> grad_;
  double gap_ = 0.0;
  std::size_t iterations_ = 0;
};

}  // namespace detail

/// Trains one binary RBF SVM per unordered pair of the classes present,
/// on features standardised with train-set statistics.
inline SvmModel train_mcmsvm(const std::vector<LabeledFeatures>& samples,
                             SvmParams params = {},
                             std::size_t class_count = kCategoryCount) {
  if (samples.empty()) throw Error(ErrorCode::EmptyInput, "no training samples");
  if (!(params.C > 0.0) || params.gamma < 0.0) {
    throw Error(ErrorCode::InvalidArgument, "C must be > 0 and gamma >= 0");
  }
  const std::size_t dims = samples.front().features.size();
  if (dims == 0) throw Error(ErrorCode::DimensionMismatch, "empty feature vectors");
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    if (s.features.size() != dims) {
      throw Error(ErrorCode::DimensionMismatch, "inconsistent feature vector lengths");
    }
    if (s.category < 0 || s.category >= static_cast<int>(class_count)) {
      throw Error(ErrorCode::ValueOutOfRange, "category outside the label space");
    }
    by_class[s.category].push_back(i);
  }
  if (by_class.size() < 2) throw Error(ErrorCode::SingleClass, "training data has one class");
  for (const auto& [cls, idx] : by_class) {
    if (idx.size() < 2) {
      throw Error(ErrorCode::DegenerateTraining,
                  "class " + std::to_string(cls) + " has fewer than 2 samples");
    }
  }

  SvmModel model;
  model.dims = dims;
  model.class_count = class_count;
  model.mean.assign(dims, 0.0);
  model.scale.assign(dims, 0.0);
  const double n = static_cast<double>(samples.size());
  for (const auto& s : samples) {
    for (std::size_t d = 0; d < dims; ++d) model.mean[d] += s.features[d];
  }
  for (double& m : model.mean) m /= n;
  for (const auto& s : samples) {
    for (std::size_t d = 0; d < dims; ++d) {
      const double t = s.features[d] - model.mean[d];
      model.scale[d] += t * t;
    }
  }
  for (double& v : model.scale) {
    v = std::sqrt(v / n);
    if (!(v > 1e-12)) v = 1.0;
  }
  const double gamma = params.gamma > 0.0 ? params.gamma : 1.0 / static_cast<double>(dims);

  for (auto a = by_class.begin(); a != by_class.end(); ++a) {
    for (auto b = std::next(a); b != by_class.end(); ++b) {
      DenseMatrix<double> x;
      x.set_cols(dims);
      std::vector<int> y;
      for (std::size_t i : a->second) {
        x.push_row(model.standardize(samples[i].features));
        y.push_back(1);
      }
      for (std::size_t i : b->second) {
        x.push_row(model.standardize(samples[i].features));
        y.push_back(-1);
      }
      detail::SmoSolver solver(x, y, params.C, gamma, params);
      solver.solve();
      BinarySvm svm;
      svm.positive = a->first;
      svm.negative = b->first;
      svm.C = params.C;
      svm.gamma = gamma;
      svm.bias = -solver.rho();
      svm.kkt_gap = solver.gap();
      svm.support_vectors.set_cols(dims);
      for (std::size_t t = 0; t < y.size(); ++t) {
        const double alpha = solver.alpha()[t];
        if (alpha <= 0.0) continue;
        svm.coefficients.push_back(y[t] * alpha);
        svm.support_vectors.push_row(x.row(t));
      }
      svm.finalize();
      model.classifiers.push_back(std::move(svm));
    }
  }
  return model;
}

inline constexpr char kSvmMagic[4] = {'C', 'S', 'V', 'M'};
inline constexpr std::uint32_t kSvmFormatVersion = 1;

inline void save_svm(const SvmModel& m, std::ostream& out) {
  LeWriter w(out);
  w.put_bytes(std::string_view(kSvmMagic, 4));
  w.put<std::uint32_t>(kSvmFormatVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(m.dims));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(m.class_count));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(m.classifiers.size()));
  for (double v : m.mean) w.put<double>(v);
  for (double v : m.scale) w.put<double>(v);
  for (const auto& c : m.classifiers) {
    w.put<std::int32_t>(c.positive);
    w.put<std::int32_t>(c.negative);
    w.put<double>(c.C);
    w.put<double>(c.gamma);
    w.put<double>(c.bias);
    w.put<double>(c.kkt_gap);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(c.coefficients.size()));
    for (double v : c.coefficients) w.put<double>(v);
    for (double v : c.support_vectors.storage()) w.put<double>(v);
  }
  if (!w.ok()) throw Error(ErrorCode::IoError, "failed writing SVM model");
}

inline SvmModel load_svm(std::istream& in) {
  LeReader r(in, ErrorCode::MalformedModel);
  if (r.get_bytes(4) != std::string_view(kSvmMagic, 4)) {
    throw Error(ErrorCode::MalformedModel, "not an SVM model file");
  }
  const auto version = r.get<std::uint32_t>();
  if (version != kSvmFormatVersion) {
    throw Error(ErrorCode::MalformedModel, "unsupported SVM format version " + std::to_string(version));
  }
  SvmModel m;
  m.dims = r.get<std::uint32_t>();
  m.class_count = r.get<std::uint32_t>();
  const auto count = r.get<std::uint32_t>();
  if (m.dims == 0 || m.dims > 1u << 16 || m.class_count == 0 || m.class_count > 1024) {
    throw Error(ErrorCode::MalformedModel, "implausible SVM header");
  }
  m.mean.resize(m.dims);
  m.scale.resize(m.dims);
  for (double& v : m.mean) v = r.get<double>();
  for (double& v : m.scale) v = r.get<double>();
  for (std::uint32_t k = 0; k < count; ++k) {
    BinarySvm c;
    c.positive = r.get<std::int32_t>();
    c.negative = r.get<std::int32_t>();
    if (c.positive < 0 || c.negative < 0 || c.positive >= static_cast<int>(m.class_count) ||
        c.negative >= static_cast<int>(m.class_count)) {
      throw Error(ErrorCode::MalformedModel, "classifier label outside the label space");
    }
    c.C = r.get<double>();
    c.gamma = r.get<double>();
    c.bias = r.get<double>();
    c.kkt_gap = r.get<double>();
    const auto nsv = r.get<std::uint32_t>();
    if (nsv > (1u << 24)) throw Error(ErrorCode::MalformedModel, "implausible support vector count");
    c.coefficients.resize(nsv);
    for (double& v : c.coefficients) v = r.get<double>();
    c.support_vectors = DenseMatrix<double>(nsv, m.dims);
    r.get_all(std::span<double>(c.support_vectors.storage()));
    c.finalize();
    m.classifiers.push_back(std::move(c));
  }
  return m;
}

inline void save_svm(const SvmModel& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  save_svm(m, out);
}

inline SvmModel load_svm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return load_svm(in);
}

}  // namespace captain
