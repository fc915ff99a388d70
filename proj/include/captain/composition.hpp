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
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "captain/annotation.hpp"
#include "captain/arpose.hpp"
#include "captain/cade.hpp"
#include "captain/common.hpp"
#include "captain/fusion.hpp"
#include "json.hpp"

namespace captain {

enum Block : int { kVgg = 0, kIod, kCade, kArpose, kStat, kGender };
inline constexpr std::size_t kBlockCount = 6;

inline const std::array<const char*, kBlockCount>& block_names() {
  static const std::array<const char*, kBlockCount> names = {"vgg",    "iod",  "cade",
                                                             "arpose", "stat", "gender"};
  return names;
}

inline constexpr std::array<std::size_t, kBlockCount> kBlockDims = {
    kVggDims, kMergedClasses, kCategoryCount, kArposeDims, kStatDims, kGenderDims};

// Auxiliary per-row pose: (present, x, y, score) for each joint.
inline constexpr std::size_t kPoseDims = kJointCount * 4;

struct FeatureRecord {
  std::string image_id;
  std::array<std::vector<double>, kBlockCount> blocks;
  std::optional<Skeleton> pose;  // dominant skeleton
  std::string image_path;

  const std::vector<double>& block(Block b) const { return blocks[static_cast<std::size_t>(b)]; }
};

struct DecomposeConfig {
  FusionConfig fusion{};
  std::optional<SvmModel> svm;  // without it portraits use the bundle's label
};

struct Decomposition {
  FeatureRecord record;
  Genre genre = Genre::other;
  bool person_present = false;
  ImportanceVector importance{};
};

/// Unify, fuse, gate, classify and describe the pose, then assemble the row.
inline Decomposition decompose_detailed(const AnnotationBundle& b, const DecomposeConfig& cfg) {
  validate(b);
  const auto& map = cfg.fusion.class_map;
  const FusionResult fusion = fuse(b, cfg.fusion);

  Decomposition d;
  d.genre = genre_gate(fusion, map);
  d.person_present = fusion.person_present;
  d.importance = fusion.importance;

  FeatureRecord& r = d.record;
  r.image_id = b.image_id;
  r.image_path = b.image_path;
  r.blocks[kVgg] = b.vgg;
  r.blocks[kIod].assign(fusion.importance.begin(), fusion.importance.end());

  r.blocks[kCade].assign(kCategoryCount, 0.0);
  if (d.genre == Genre::portrait) {
    if (cfg.svm) {
      const auto features = extract_cade_features(b, map, cfg.fusion.thresholds);
      const auto v = cfg.svm->classify(features);
      r.blocks[kCade].assign(v.begin(), v.end());
    } else if (b.category) {
      r.blocks[kCade][static_cast<std::size_t>(*b.category)] = 1.0;
    }
  }

  r.blocks[kArpose].assign(kArposeDims, 0.0);
  const int dom = dominant_person(b.persons);
  if (dom >= 0) {
    const auto& s = b.persons[static_cast<std::size_t>(dom)];
    r.pose = s;
    if (static_cast<std::size_t>(s.present_count()) >= kMinPoseJoints) {
      r.blocks[kArpose] = pose_features(s);
    }
  }

  r.blocks[kStat] = {b.rating, static_cast<double>(b.views)};
  const auto g = gender_vector(b.gender);
  r.blocks[kGender].assign(g.begin(), g.end());
  return d;
}

inline FeatureRecord decompose(const AnnotationBundle& b, const DecomposeConfig& cfg) {
  return decompose_detailed(b, cfg).record;
}

inline nlohmann::json record_to_json(const FeatureRecord& r) {
  nlohmann::json j;
  j["image_id"] = r.image_id;
  if (!r.image_path.empty()) j["image_path"] = r.image_path;
  for (std::size_t k = 0; k < kBlockCount; ++k) j[block_names()[k]] = r.blocks[k];
  if (r.pose) {
    auto joints = nlohmann::json::array();
    for (std::size_t i = 0; i < kJointCount; ++i) {
      const auto& jt = r.pose->joints[i];
      if (!jt.present) continue;
      joints.push_back({{"id", i + 1}, {"x", jt.x}, {"y", jt.y}, {"score", jt.score}});
    }
    j["pose"] = joints;
  }
  return j;
}

inline FeatureRecord record_from_json(const nlohmann::json& j) {
  FeatureRecord r;
  try {
    r.image_id = j.at("image_id").get<std::string>();
    r.image_path = j.value("image_path", std::string{});
    for (std::size_t k = 0; k < kBlockCount; ++k) {
      r.blocks[k] = j.at(block_names()[k]).get<std::vector<double>>();
      if (r.blocks[k].size() != kBlockDims[k]) {
        throw Error(ErrorCode::DimensionMismatch, std::string(block_names()[k]) + " block size");
      }
    }
    if (j.contains("pose")) {
      Skeleton s;
      for (const auto& jt : j.at("pose")) {
        const int id = jt.at("id").get<int>();
        if (id < 1 || id > static_cast<int>(kJointCount)) {
          throw Error(ErrorCode::ValueOutOfRange, "joint id outside 1..18");
        }
        s.joints[static_cast<std::size_t>(id - 1)] = {true, jt.at("x").get<double>(),
                                                      jt.at("y").get<double>(),
                                                      jt.at("score").get<double>()};
      }
      r.pose = s;
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedBundle, std::string("feature record: ") + e.what());
  }
  return r;
}

/// Row-per-image concatenation of the six feature blocks, stored as f32.
class CompositionModel {
 public:
  CompositionModel() {
    for (std::size_t k = 0; k < kBlockCount; ++k) blocks_[k].set_cols(kBlockDims[k]);
    pose_.set_cols(kPoseDims);
  }

  std::size_t rows() const { return ids_.size(); }
  bool empty() const { return ids_.empty(); }
  const std::vector<std::string>& ids() const { return ids_; }
  const std::vector<std::string>& image_paths() const { return paths_; }
  const DenseMatrix<float>& block(Block b) const { return blocks_[static_cast<std::size_t>(b)]; }
  const DenseMatrix<float>& pose_block() const { return pose_; }

  std::optional<std::size_t> find(const std::string& id) const {
    const auto it = index_.find(id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  void add(const FeatureRecord& r) {
    if (index_.count(r.image_id)) {
      throw Error(ErrorCode::DuplicateId, "image id '" + r.image_id + "' already indexed");
    }
    for (std::size_t k = 0; k < kBlockCount; ++k) {
      if (r.blocks[k].size() != kBlockDims[k]) {
        throw Error(ErrorCode::DimensionMismatch,
                    std::string(block_names()[k]) + " block has " +
                        std::to_string(r.blocks[k].size()) + " entries");
      }
    }
    for (std::size_t k = 0; k < kBlockCount; ++k) blocks_[k].push_row(r.blocks[k]);
    std::array<float, kPoseDims> pose{};
    if (r.pose) {
      for (std::size_t j = 0; j < kJointCount; ++j) {
        const auto& jt = r.pose->joints[j];
        pose[j * 4] = jt.present ? 1.0f : 0.0f;
        pose[j * 4 + 1] = static_cast<float>(jt.x);
        pose[j * 4 + 2] = static_cast<float>(jt.y);
        pose[j * 4 + 3] = static_cast<float>(jt.score);
      }
    }
    pose_.push_row(pose);
    index_.emplace(r.image_id, ids_.size());
    ids_.push_back(r.image_id);
    paths_.push_back(r.image_path);
  }

  /// Row r as a record (values widened from f32).
  FeatureRecord record(std::size_t r) const {
    FeatureRecord out;
    out.image_id = ids_.at(r);
    out.image_path = paths_.at(r);
    for (std::size_t k = 0; k < kBlockCount; ++k) {
      const auto row = blocks_[k].row(r);
      out.blocks[k].assign(row.begin(), row.end());
    }
    const auto p = pose_.row(r);
    Skeleton s;
    bool any = false;
    for (std::size_t j = 0; j < kJointCount; ++j) {
      auto& jt = s.joints[j];
      jt.present = p[j * 4] != 0.0f;
      jt.x = p[j * 4 + 1];
      jt.y = p[j * 4 + 2];
      jt.score = p[j * 4 + 3];
      any = any || jt.present;
    }
    if (any) out.pose = s;
    return out;
  }

  friend bool operator==(const CompositionModel& a, const CompositionModel& b) {
    return a.ids_ == b.ids_ && a.paths_ == b.paths_ && a.blocks_ == b.blocks_ && a.pose_ == b.pose_;
  }

  // Raw access for persistence.
  DenseMatrix<float>& mutable_block(std::size_t k) { return blocks_[k]; }
  DenseMatrix<float>& mutable_pose() { return pose_; }
  void set_ids(std::vector<std::string> ids, std::vector<std::string> paths) {
    index_.clear();
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (!index_.emplace(ids[i], i).second) {
        throw Error(ErrorCode::DuplicateId, "image id '" + ids[i] + "' repeated");
      }
    }
    ids_ = std::move(ids);
    paths_ = std::move(paths);
  }

 private:
  std::array<DenseMatrix<float>, kBlockCount> blocks_;
  DenseMatrix<float> pose_;
  std::vector<std::string> ids_;
  std::vector<std::string> paths_;
  std::map<std::string, std::size_t> index_;
};

struct BuildIssue {
  std::string source;
  ErrorCode code;
  std::string message;
};

struct BuildResult {
  CompositionModel model;
  std::vector<BuildIssue> issues;
};

/// Bundle directories listed by `corpus.json` ({"bundles": [...]}), resolved
/// against the corpus directory.
inline std::vector<std::filesystem::path> corpus_bundles(const std::filesystem::path& corpus) {
  const auto manifest = corpus / "corpus.json";
  std::ifstream in(manifest);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + manifest.string());
  std::vector<std::filesystem::path> out;
  try {
    nlohmann::json j;
    in >> j;
    for (const auto& entry : j.at("bundles")) out.push_back(corpus / entry.get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedBundle, manifest.string() + ": " + e.what());
  }
  return out;
}

/// One row per bundle in order. Bundles that fail to load or decompose are
/// reported and skipped.
inline BuildResult build(const std::vector<std::filesystem::path>& bundles,
                         const DecomposeConfig& cfg) {
  if (bundles.empty()) throw Error(ErrorCode::EmptyCorpus, "corpus lists no bundles");
  BuildResult out;
  for (const auto& dir : bundles) {
    try {
      out.model.add(decompose(load_bundle(dir), cfg));
    } catch (const Error& e) {
      out.issues.push_back({dir.string(), e.code(), e.message()});
    }
  }
  return out;
}

inline BuildResult build(const std::vector<AnnotationBundle>& bundles,
                         const DecomposeConfig& cfg) {
  if (bundles.empty()) throw Error(ErrorCode::EmptyCorpus, "corpus lists no bundles");
  BuildResult out;
  for (const auto& b : bundles) {
    try {
      out.model.add(decompose(b, cfg));
    } catch (const Error& e) {
      out.issues.push_back({b.image_id, e.code(), e.message()});
    }
  }
  return out;
}

inline BuildResult build_corpus(const std::filesystem::path& corpus, const DecomposeConfig& cfg) {
  return build(corpus_bundles(corpus), cfg);
}

/// Copy of the model with one more row.
inline CompositionModel append(const CompositionModel& model, const AnnotationBundle& b,
                               const DecomposeConfig& cfg) {
  if (model.find(b.image_id)) {
    throw Error(ErrorCode::DuplicateId, "image id '" + b.image_id + "' already indexed");
  }
  CompositionModel next = model;
  next.add(decompose(b, cfg));
  return next;
}

// ---------------------------------------------------------------------------
// Persistence: a directory holding header.json and one .f32 file per block.

inline constexpr const char* kModelFormat = "captain-composition-model";
inline constexpr int kModelVersion = 1;

namespace detail {

inline void write_f32(const std::filesystem::path& path, const DenseMatrix<float>& m) {
  std::ofstream out(path, std::ios::binary);
  LeWriter w(out);
  w.put_all(std::span<const float>(m.storage()));
  out.flush();
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
}

// Block files live directly inside the model directory.
inline std::string block_file(const nlohmann::json& entry) {
  auto name = entry.at("file").get<std::string>();
  if (name.empty() || name == "." || name == ".." || name.find('/') != std::string::npos ||
      name.find('\\') != std::string::npos) {
    throw Error(ErrorCode::MalformedModel, "bad block file name '" + name + "'");
  }
  return name;
}

inline void read_f32(const std::filesystem::path& path, DenseMatrix<float>& m, std::size_t rows,
                     std::size_t cols) {
  std::error_code ec;
  const auto size = std::filesystem::file_size(path, ec);
  if (ec || size != rows * cols * sizeof(float)) {
    throw Error(ErrorCode::MalformedModel, path.filename().string() + " has the wrong size");
  }
  std::ifstream in(path, std::ios::binary);
  m = DenseMatrix<float>(rows, cols);
  LeReader(in, ErrorCode::MalformedModel).get_all(std::span<float>(m.storage()));
}

}  // namespace detail

/// Writes to a sibling temporary directory and renames it into place, so a
/// reader sees either the old model or the new one.
inline void save_model(const CompositionModel& model, const std::filesystem::path& path) {
  namespace fs = std::filesystem;
  const fs::path parent = path.has_parent_path() ? path.parent_path() : fs::path(".");
  fs::create_directories(parent);
  const fs::path tmp = parent / (path.filename().string() + ".tmp");
  fs::remove_all(tmp);
  fs::create_directories(tmp);

  nlohmann::json header;
  header["format"] = kModelFormat;
  header["version"] = kModelVersion;
  header["rows"] = model.rows();
  nlohmann::json blocks = nlohmann::json::object();
  for (std::size_t k = 0; k < kBlockCount; ++k) {
    const std::string file = std::string(block_names()[k]) + ".f32";
    blocks[block_names()[k]] = {{"file", file}, {"dims", kBlockDims[k]}};
    detail::write_f32(tmp / file, model.block(static_cast<Block>(k)));
  }
  blocks["pose"] = {{"file", "pose.f32"}, {"dims", kPoseDims}};
  detail::write_f32(tmp / "pose.f32", model.pose_block());
  header["blocks"] = blocks;
  header["ids"] = model.ids();
  header["image_paths"] = model.image_paths();
  {
    std::ofstream out(tmp / "header.json");
    out << header.dump(1);
    if (!out) throw Error(ErrorCode::IoError, "cannot write model header");
  }

  const fs::path old = parent / (path.filename().string() + ".old");
  fs::remove_all(old);
  if (fs::exists(path)) fs::rename(path, old);
  fs::rename(tmp, path);
  fs::remove_all(old);
}

inline CompositionModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path / "header.json");
  if (!in) throw Error(ErrorCode::IoError, "no model at " + path.string());
  CompositionModel model;
  try {
    nlohmann::json header;
    in >> header;
    if (header.at("format").get<std::string>() != kModelFormat) {
      throw Error(ErrorCode::MalformedModel, "not a composition model");
    }
    if (header.at("version").get<int>() != kModelVersion) {
      throw Error(ErrorCode::MalformedModel, "unsupported model version");
    }
    const auto rows = header.at("rows").get<std::size_t>();
    auto ids = header.at("ids").get<std::vector<std::string>>();
    auto paths = header.value("image_paths", std::vector<std::string>(ids.size()));
    if (ids.size() != rows || paths.size() != rows) {
      throw Error(ErrorCode::MalformedModel, "id list length differs from row count");
    }
    const auto& blocks = header.at("blocks");
    for (std::size_t k = 0; k < kBlockCount; ++k) {
      const auto& b = blocks.at(block_names()[k]);
      if (b.at("dims").get<std::size_t>() != kBlockDims[k]) {
        throw Error(ErrorCode::MalformedModel, std::string(block_names()[k]) + " dims differ");
      }
      detail::read_f32(path / detail::block_file(b), model.mutable_block(k), rows, kBlockDims[k]);
    }
    detail::read_f32(path / detail::block_file(blocks.at("pose")), model.mutable_pose(), rows,
                     kPoseDims);
    model.set_ids(std::move(ids), std::move(paths));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedModel, std::string("model header: ") + e.what());
  }
  return model;
}

}  // namespace captain
