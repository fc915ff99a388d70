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
#include <cmath>
#include <istream>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "captain/annotation.hpp"
#include "captain/common.hpp"

namespace captain {

// Predecessor of each joint in the body chain; the nose is the root.
inline constexpr std::array<int, kJointCount> kPoseParent = {
    -1,              // nose
    kNose,           // neck
    kNeck,           // right shoulder
    kRightShoulder,  // right elbow
    kRightElbow,     // right wrist
    kNeck,           // left shoulder
    kLeftShoulder,   // left elbow
    kLeftElbow,      // left wrist
    kNeck,           // right hip
    kRightHip,       // right knee
    kRightKnee,      // right ankle
    kNeck,           // left hip
    kLeftHip,        // left knee
    kLeftKnee,       // left ankle
    kNose,           // left eye
    kNose,           // right eye
    kLeftEye,        // left ear
    kRightEye,       // right ear
};

// Parents precede children.
inline constexpr std::array<int, kJointCount> kPoseOrder = {
    kNose,      kNeck,      kLeftEye,       kRightEye,  kLeftEar,   kRightEar,
    kRightShoulder, kRightElbow, kRightWrist, kLeftShoulder, kLeftElbow, kLeftWrist,
    kRightHip,  kRightKnee, kRightAnkle,    kLeftHip,   kLeftKnee,  kLeftAnkle};

struct PolarJoint {
  bool present = false;
  int anchor = -1;  // nearest present ancestor
  double r = 0.0;
  double theta = 0.0;  // (-pi, pi], relative to the anchor's own segment
};

/// Chain form of a skeleton. A joint hangs off its nearest present ancestor;
/// its angle is measured from the direction of that ancestor's segment, or
/// from the x axis when the ancestor is the nose.
struct PolarPose {
  std::array<PolarJoint, kJointCount> joints{};
};

inline double wrap_angle(double a) {
  constexpr double kPi = std::numbers::pi;
  a = std::remainder(a, 2.0 * kPi);
  if (a <= -kPi) a += 2.0 * kPi;
  return a;
}

inline PolarPose to_polar(const Skeleton& s) {
  if (!s.joints[kNose].present || !s.joints[kNeck].present) {
    throw Error(ErrorCode::MissingRoot, "pose chain needs the nose and the neck");
  }
  PolarPose p;
  std::array<double, kJointCount> heading{};  // absolute segment direction
  p.joints[kNose].present = true;
  for (int j : kPoseOrder) {
    if (j == kNose) continue;
    const auto& jt = s.joints[static_cast<std::size_t>(j)];
    if (!jt.present) continue;
    int a = kPoseParent[static_cast<std::size_t>(j)];
    while (!s.joints[static_cast<std::size_t>(a)].present) a = kPoseParent[static_cast<std::size_t>(a)];
    const auto& at = s.joints[static_cast<std::size_t>(a)];
    const double dx = jt.x - at.x, dy = jt.y - at.y;
    const double dir = std::atan2(dy, dx);
    const double ref = a == kNose ? 0.0 : heading[static_cast<std::size_t>(a)];
    auto& pj = p.joints[static_cast<std::size_t>(j)];
    pj.present = true;
    pj.anchor = a;
    pj.r = std::hypot(dx, dy);
    pj.theta = wrap_angle(dir - ref);
    heading[static_cast<std::size_t>(j)] = dir;
  }
  return p;
}

/// Re-expands the chain with the nose at the origin.
inline Skeleton to_cartesian(const PolarPose& p) {
  Skeleton s;
  std::array<double, kJointCount> heading{};
  s.joints[kNose].present = true;
  for (int j : kPoseOrder) {
    if (j == kNose) continue;
    const auto& pj = p.joints[static_cast<std::size_t>(j)];
    if (!pj.present) continue;
    const auto a = static_cast<std::size_t>(pj.anchor);
    const double ref = pj.anchor == kNose ? 0.0 : heading[a];
    const double dir = ref + pj.theta;
    auto& jt = s.joints[static_cast<std::size_t>(j)];
    jt.present = true;
    jt.x = s.joints[a].x + pj.r * std::cos(dir);
    jt.y = s.joints[a].y + pj.r * std::sin(dir);
    heading[static_cast<std::size_t>(j)] = dir;
  }
  return s;
}

struct PoseDistance {
  double value = 0.0;
  std::size_t compared = 0;
  std::size_t skipped = 0;
};

/// (sum over shared joints of |sin(theta_a) - sin(theta_b)|^q)^(1/q). A joint
/// is shared when present in both poses with the same anchor.
inline PoseDistance pose_distance(const PolarPose& a, const PolarPose& b, double q = 1.0) {
  if (!(q >= 1.0)) throw Error(ErrorCode::InvalidArgument, "norm order must be at least 1");
  PoseDistance d;
  double sum = 0.0;
  for (std::size_t j = 1; j < kJointCount; ++j) {
    const auto& ja = a.joints[j];
    const auto& jb = b.joints[j];
    if (!ja.present || !jb.present || ja.anchor != jb.anchor) {
      ++d.skipped;
      continue;
    }
    const double diff = std::abs(std::sin(ja.theta) - std::sin(jb.theta));
    sum += q == 1.0 ? diff : std::pow(diff, q);
    ++d.compared;
  }
  if (d.compared == 0) throw Error(ErrorCode::NoSharedJoints, "poses share no joints");
  d.value = q == 1.0 ? sum : std::pow(sum, 1.0 / q);
  return d;
}

struct PoseShot {
  std::size_t index = 0;
  std::vector<double> objectives;  // -inf when no preferred pose is comparable
};

namespace detail {

// Smallest distance to any comparable pose; nullopt when none compare.
inline std::optional<double> nearest(const PolarPose& x, const std::vector<PolarPose>& set,
                                     double q) {
  std::optional<double> best;
  for (const auto& s : set) {
    try {
      const double d = pose_distance(x, s, q).value;
      if (!best || d < *best) best = d;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoSharedJoints) throw;
    }
  }
  return best;
}

}  // namespace detail

/// argmax over taken shots of (min distance to ignored - min distance to
/// preferred). No ignored poses contributes 0; ties go to the earliest shot.
inline PoseShot pose_shot(const std::vector<PolarPose>& taken,
                          const std::vector<PolarPose>& preferred,
                          const std::vector<PolarPose>& ignored, double q = 1.0) {
  if (taken.empty()) throw Error(ErrorCode::EmptyTaken, "no taken shots");
  if (preferred.empty()) throw Error(ErrorCode::EmptyPreferred, "no preferred poses");
  PoseShot out;
  out.objectives.reserve(taken.size());
  for (std::size_t i = 0; i < taken.size(); ++i) {
    const auto to_pref = detail::nearest(taken[i], preferred, q);
    const auto to_ign = detail::nearest(taken[i], ignored, q);
    const double v = to_pref ? to_ign.value_or(0.0) - *to_pref
                             : -std::numeric_limits<double>::infinity();
    out.objectives.push_back(v);
    if (v > out.objectives[out.index]) out.index = i;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Joint limits (advisory)

struct JointLimit {
  double min = -std::numbers::pi;
  double max = std::numbers::pi;
};

struct LimitWarning {
  int joint = 0;
  double theta = 0.0;
  JointLimit limit;
};

class JointLimits {
 public:
  void set(int joint, JointLimit l) { limits_[static_cast<std::size_t>(joint)] = l; }
  const JointLimit& get(int joint) const { return limits_[static_cast<std::size_t>(joint)]; }

  /// Text rows `joint_name min_radians max_radians`; `#` starts a comment.
  static JointLimits parse(std::istream& in) {
    JointLimits out;
    std::string line;
    while (std::getline(in, line)) {
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.resize(hash);
      std::istringstream row(line);
      std::string name;
      if (!(row >> name)) continue;
      JointLimit l;
      if (!(row >> l.min >> l.max) || !(l.min <= l.max)) {
        throw Error(ErrorCode::InvalidArgument, "bad joint limit row: " + line);
      }
      int joint = -1;
      for (std::size_t j = 0; j < kJointCount; ++j) {
        if (name == joint_names()[j]) joint = static_cast<int>(j);
      }
      if (joint < 0) throw Error(ErrorCode::InvalidArgument, "unknown joint '" + name + "'");
      out.set(joint, l);
    }
    return out;
  }

  std::vector<LimitWarning> check(const PolarPose& p) const {
    std::vector<LimitWarning> out;
    for (std::size_t j = 1; j < kJointCount; ++j) {
      const auto& pj = p.joints[j];
      const auto& l = limits_[j];
      if (pj.present && (pj.theta < l.min || pj.theta > l.max)) {
        out.push_back({static_cast<int>(j), pj.theta, l});
      }
    }
    return out;
  }

 private:
  std::array<JointLimit, kJointCount> limits_{};
};

}  // namespace captain
