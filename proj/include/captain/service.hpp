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

#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <vector>

#include "captain/arpose.hpp"
#include "captain/composition.hpp"
#include "captain/matching.hpp"
#include "captain/retrieval.hpp"
#include "json.hpp"

namespace captain {

// ---------------------------------------------------------------------------
// Operations shared by the CLI and the HTTP service

struct MatchOutcome {
  std::vector<std::string> shot_ids;
  FavoriteShot favorite;
  std::optional<PoseShot> pose;
  std::vector<std::size_t> pose_candidates;  // shot index of each pose objective
};

inline std::vector<std::size_t> rows_for(const CompositionModel& model,
                                         const std::vector<std::string>& ids) {
  std::vector<std::size_t> rows;
  for (const auto& id : ids) {
    const auto r = model.find(id);
    if (!r) throw Error(ErrorCode::UnknownId, "image '" + id + "' is not in the model");
    rows.push_back(*r);
  }
  return rows;
}

namespace detail {

inline std::optional<PolarPose> polar_or_none(const std::optional<Skeleton>& s) {
  if (!s) return std::nullopt;
  try {
    return to_polar(*s);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::MissingRoot) throw;
    return std::nullopt;
  }
}

}  // namespace detail

/// Favorite shot against the preferred style rows, plus the pose shot when
/// the shots and the preferred images carry usable skeletons.
inline MatchOutcome match_shots(const CompositionModel& model,
                                const std::vector<std::string>& preferred,
                                const std::vector<std::string>& ignored,
                                const std::vector<FeatureRecord>& shots, const UspWeights& w,
                                double q = 1.0) {
  MatchOutcome out;
  for (const auto& s : shots) out.shot_ids.push_back(s.image_id);
  const auto pref_rows = rows_for(model, preferred);
  const auto ign_rows = rows_for(model, ignored);
  out.favorite = favorite_shot(model, pref_rows, shots, w);

  std::vector<PolarPose> taken, pref, ign;
  for (std::size_t i = 0; i < shots.size(); ++i) {
    if (auto p = detail::polar_or_none(shots[i].pose)) {
      taken.push_back(*p);
      out.pose_candidates.push_back(i);
    }
  }
  for (std::size_t r : pref_rows) {
    if (auto p = detail::polar_or_none(model.record(r).pose)) pref.push_back(*p);
  }
  for (std::size_t r : ign_rows) {
    if (auto p = detail::polar_or_none(model.record(r).pose)) ign.push_back(*p);
  }
  if (!taken.empty() && !pref.empty()) out.pose = pose_shot(taken, pref, ign, q);
  return out;
}

inline nlohmann::json match_to_json(const MatchOutcome& m) {
  auto scores = nlohmann::json::array();
  for (std::size_t i = 0; i < m.shot_ids.size(); ++i) {
    scores.push_back({{"image_id", m.shot_ids[i]}, {"score", m.favorite.scores[i]}});
  }
  nlohmann::json j;
  j["favorite"] = m.shot_ids[m.favorite.index];
  j["favorite_index"] = m.favorite.index;
  j["scores"] = scores;
  if (m.pose) {
    auto objectives = nlohmann::json::array();
    for (std::size_t k = 0; k < m.pose->objectives.size(); ++k) {
      const double v = m.pose->objectives[k];
      objectives.push_back({{"image_id", m.shot_ids[m.pose_candidates[k]]},
                            {"objective", std::isfinite(v) ? nlohmann::json(v) : nlohmann::json()}});
    }
    const std::size_t idx = m.pose_candidates[m.pose->index];
    j["pose_shot"] = {{"image_id", m.shot_ids[idx]}, {"index", idx}, {"objectives", objectives}};
  } else {
    j["pose_shot"] = nullptr;
  }
  return j;
}

/// Category, strongest objects and pose memberships of a record.
inline nlohmann::json record_summary(const FeatureRecord& r, const ClassMap& map,
                                     const PoseClusters* clusters, std::size_t top_classes = 5) {
  nlohmann::json j;
  j["image_id"] = r.image_id;
  const auto& cade = r.block(kCade);
  const auto cat = std::max_element(cade.begin(), cade.end());
  j["category"] = cat != cade.end() && *cat > 0.0
                      ? nlohmann::json(category_names()[static_cast<std::size_t>(cat - cade.begin())])
                      : nlohmann::json();
  const auto& iod = r.block(kIod);
  std::vector<std::size_t> order;
  for (std::size_t k = 0; k < iod.size(); ++k) {
    if (iod[k] > 0.0) order.push_back(k);
  }
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return iod[a] > iod[b]; });
  auto classes = nlohmann::json::array();
  for (std::size_t i = 0; i < std::min(top_classes, order.size()); ++i) {
    const int id = static_cast<int>(order[i]) + 1;
    classes.push_back({{"id", id}, {"name", map.name(id)}, {"importance", iod[order[i]]}});
  }
  j["top_classes"] = classes;
  const auto& ap = r.block(kArpose);
  const bool has_pose = std::any_of(ap.begin(), ap.end(), [](double v) { return v != 0.0; });
  if (clusters && has_pose) {
    j["pose_clusters"] = fuzzy_membership(ap, clusters->centers, clusters->fuzziness);
  } else {
    j["pose_clusters"] = nullptr;
  }
  return j;
}

// ---------------------------------------------------------------------------
// Session service

struct ServiceConfig {
  DecomposeConfig decompose{};
  std::optional<PoseClusters> clusters;
  std::filesystem::path image_root;  // base for relative image paths
  std::optional<std::filesystem::path> snapshot;
  std::size_t default_top_k = 20;
  double pose_q = 1.0;
};

struct Response {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

struct Session {
  std::string id;
  FeatureRecord query;
  nlohmann::json summary;
  std::optional<UspWeights> weights;
  std::size_t top_k = 0;
  std::vector<RankedItem> results;
  std::vector<std::string> preferred;
  std::vector<std::string> ignored;
  std::vector<FeatureRecord> shots;
  std::optional<nlohmann::json> match;
};

/// Request handling independent of the transport. Each session serialises
/// its own mutations; the model is shared read-only.
class Service {
 public:
  explicit Service(std::optional<CompositionModel> model, ServiceConfig cfg = {})
      : model_(std::move(model)), cfg_(std::move(cfg)) {
    if (cfg_.snapshot && std::filesystem::exists(*cfg_.snapshot)) restore(*cfg_.snapshot);
  }

  bool has_model() const { return model_.has_value(); }
  const CompositionModel* model() const { return model_ ? &*model_ : nullptr; }

  Response handle(const std::string& method, const std::string& path, const std::string& body) {
    try {
      return route(method, path, body);
    } catch (const HttpError& e) {
      return error(e.status, e.code, e.message);
    } catch (const Error& e) {
      return error(status_for(e.code()), std::string(to_string(e.code())), e.message());
    } catch (const std::exception& e) {
      return error(500, "Internal", e.what());
    }
  }

 private:
  struct HttpError {
    int status;
    std::string code;
    std::string message;
  };

  struct Slot {
    std::mutex mutex;
    Session session;
  };

  static int status_for(ErrorCode c) {
    switch (c) {
      case ErrorCode::MalformedBundle:
      case ErrorCode::DimensionMismatch:
      case ErrorCode::ValueOutOfRange:
      case ErrorCode::ZeroSaliency:
        return 400;
      case ErrorCode::UnknownId:
        return 404;
      case ErrorCode::InvalidWeights:
      case ErrorCode::EmptyPreferred:
      case ErrorCode::EmptySession:
      case ErrorCode::EmptyTaken:
      case ErrorCode::InvalidArgument:
        return 422;
      case ErrorCode::EmptyModel:
        return 409;
      default:
        return 500;
    }
  }

  static Response error(int status, const std::string& code, const std::string& message) {
    return {status, "application/json", nlohmann::json{{"code", code}, {"message", message}}.dump()};
  }

  static Response ok(const nlohmann::json& j, int status = 200) {
    return {status, "application/json", j.dump()};
  }

  static nlohmann::json parse_body(const std::string& body) {
    try {
      auto j = nlohmann::json::parse(body);
      if (!j.is_object()) throw HttpError{400, "MalformedRequest", "body must be a JSON object"};
      return j;
    } catch (const nlohmann::json::exception& e) {
      throw HttpError{400, "MalformedRequest", e.what()};
    }
  }

  static std::vector<std::string> split(const std::string& path) {
    std::vector<std::string> parts;
    std::string cur;
    const auto q = path.find('?');
    for (char c : path.substr(0, q)) {
      if (c == '/') {
        if (!cur.empty()) parts.push_back(cur);
        cur.clear();
      } else {
        cur += c;
      }
    }
    if (!cur.empty()) parts.push_back(cur);
    return parts;
  }

  const CompositionModel& require_model() const {
    if (!model_) throw HttpError{409, "ModelNotLoaded", "no composition model is loaded"};
    return *model_;
  }

  Response route(const std::string& method, const std::string& path, const std::string& body) {
    const auto p = split(path);
    if (p.size() == 1 && p[0] == "health") {
      if (method != "GET") throw HttpError{405, "MethodNotAllowed", method + " " + path};
      return ok({{"status", "ok"},
                 {"model_loaded", model_.has_value()},
                 {"rows", model_ ? model_->rows() : 0}});
    }
    if (p.size() == 2 && p[0] == "images") {
      if (method != "GET") throw HttpError{405, "MethodNotAllowed", method + " " + path};
      return image(p[1]);
    }
    if (!p.empty() && p[0] == "sessions") {
      if (p.size() == 1) {
        if (method != "POST") throw HttpError{405, "MethodNotAllowed", method + " " + path};
        return create_session(body);
      }
      auto slot = find_session(p[1]);
      Response r;
      {
        std::lock_guard lock(slot->mutex);
        if (p.size() == 2 && method == "GET") {
          return ok(session_json(slot->session));
        } else if (p.size() == 3 && method == "POST" && p[2] == "rank") {
          r = rank_session(slot->session, body);
        } else if (p.size() == 3 && method == "POST" && p[2] == "style-set") {
          r = style_set(slot->session, body);
        } else if (p.size() == 3 && method == "POST" && p[2] == "shots") {
          r = shots(slot->session, body);
        } else {
          throw HttpError{404, "NotFound", method + " " + path};
        }
      }
      persist();
      return r;
    }
    throw HttpError{404, "NotFound", method + " " + path};
  }

  std::shared_ptr<Slot> find_session(const std::string& id) {
    std::shared_lock lock(sessions_mutex_);
    const auto it = sessions_.find(id);
    if (it == sessions_.end()) throw HttpError{404, "UnknownSession", "no session '" + id + "'"};
    return it->second;
  }

  Response create_session(const std::string& body) {
    const auto& model = require_model();
    const auto j = parse_body(body);
    Session s;
    std::optional<Decomposition> d;
    if (j.contains("image_id") && !j.contains("bundle") && !j.contains("width")) {
      const auto id = j.at("image_id").is_string() ? j.at("image_id").get<std::string>() : "";
      const auto row = model.find(id);
      if (!row) throw HttpError{404, "UnknownId", "image '" + id + "' is not in the model"};
      s.query = model.record(*row);
    } else {
      const auto& manifest = j.contains("bundle") ? j.at("bundle") : j;
      d = decompose_detailed(parse_bundle(manifest), cfg_.decompose);
      s.query = d->record;
    }
    s.summary = record_summary(s.query, cfg_.decompose.fusion.class_map,
                               cfg_.clusters ? &*cfg_.clusters : nullptr);
    s.summary["genre"] = d ? nlohmann::json(std::string(to_string(d->genre))) : nlohmann::json();
    auto slot = std::make_shared<Slot>();
    {
      std::unique_lock lock(sessions_mutex_);
      s.id = "s" + std::to_string(++next_id_);
      slot->session = std::move(s);
      sessions_[slot->session.id] = slot;
    }
    nlohmann::json out = slot->session.summary;
    out["session_id"] = slot->session.id;
    persist();
    return ok(out, 201);
  }

  void recompute(Session& s) {
    s.results = query(require_model(), s.query, *s.weights, s.top_k);
  }

  Response rank_session(Session& s, const std::string& body) {
    const auto j = parse_body(body);
    const UspWeights w = j.contains("weights") ? UspWeights::from_json(j.at("weights"))
                                               : s.weights.value_or(UspWeights{});
    std::size_t top_k = cfg_.default_top_k;
    if (j.contains("top_k")) {
      if (!j.at("top_k").is_number_unsigned() || j.at("top_k").get<std::size_t>() == 0) {
        throw HttpError{422, "InvalidArgument", "top_k must be a positive integer"};
      }
      top_k = j.at("top_k").get<std::size_t>();
    }
    if (!s.weights || !(*s.weights == w) || s.top_k != top_k) {
      s.weights = w;
      s.top_k = top_k;
      recompute(s);
    }
    auto out = ranking_to_json(s.results, *s.weights);
    out["session_id"] = s.id;
    return ok(out);
  }

  static std::vector<std::string> id_list(const nlohmann::json& j, const char* key) {
    if (!j.contains(key)) return {};
    const auto& v = j.at(key);
    if (!v.is_array()) throw HttpError{400, "MalformedRequest", std::string(key) + " must be a list"};
    std::vector<std::string> out;
    for (const auto& x : v) {
      if (!x.is_string()) throw HttpError{400, "MalformedRequest", "ids must be strings"};
      out.push_back(x.get<std::string>());
    }
    return out;
  }

  Response style_set(Session& s, const std::string& body) {
    const auto j = parse_body(body);
    auto preferred = id_list(j, "preferred");
    auto ignored = id_list(j, "ignored");
    if (preferred.empty()) throw HttpError{422, "EmptyPreferred", "preferred set is empty"};
    std::set<std::string> ranked;
    for (const auto& item : s.results) ranked.insert(item.image_id);
    const std::set<std::string> pref_set(preferred.begin(), preferred.end());
    for (const auto& id : ignored) {
      if (pref_set.count(id)) throw HttpError{422, "Overlap", "'" + id + "' is both preferred and ignored"};
    }
    for (const auto* list : {&preferred, &ignored}) {
      for (const auto& id : *list) {
        if (!ranked.count(id)) {
          throw HttpError{422, "UnknownId", "'" + id + "' is not among the ranked results"};
        }
      }
    }
    s.preferred = std::move(preferred);
    s.ignored = std::move(ignored);
    s.match.reset();
    return ok({{"session_id", s.id}, {"preferred", s.preferred}, {"ignored", s.ignored}});
  }

  Response shots(Session& s, const std::string& body) {
    const auto& model = require_model();
    if (s.preferred.empty()) throw HttpError{409, "NoStyleSet", "set a style set before submitting shots"};
    const auto j = parse_body(body);
    if (!j.contains("shots") || !j.at("shots").is_array() || j.at("shots").empty()) {
      throw HttpError{400, "MalformedRequest", "shots must be a non-empty list of bundles"};
    }
    std::vector<FeatureRecord> records;
    for (const auto& b : j.at("shots")) records.push_back(decompose(parse_bundle(b), cfg_.decompose));
    const auto outcome = match_shots(model, s.preferred, s.ignored, records,
                                     s.weights.value_or(UspWeights{}), cfg_.pose_q);
    s.shots = std::move(records);
    auto out = match_to_json(outcome);
    s.match = out;
    out["session_id"] = s.id;
    return ok(out);
  }

  static nlohmann::json session_json(const Session& s) {
    auto results = nlohmann::json::array();
    for (const auto& item : s.results) results.push_back(item.image_id);
    auto shots = nlohmann::json::array();
    for (const auto& r : s.shots) shots.push_back(r.image_id);
    return {{"session_id", s.id},
            {"summary", s.summary},
            {"weights", s.weights ? s.weights->to_json() : nlohmann::json()},
            {"top_k", s.top_k},
            {"results", results},
            {"preferred", s.preferred},
            {"ignored", s.ignored},
            {"shots", shots},
            {"match", s.match ? *s.match : nlohmann::json()}};
  }

  Response image(const std::string& id) {
    const auto& model = require_model();
    const auto row = model.find(id);
    if (!row) throw HttpError{404, "UnknownId", "image '" + id + "' is not in the model"};
    std::filesystem::path path = model.image_paths()[*row];
    if (path.empty()) throw HttpError{404, "NoImage", "image '" + id + "' has no file"};
    if (path.is_relative()) path = cfg_.image_root / path;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw HttpError{404, "NoImage", "cannot read the file for '" + id + "'"};
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    auto ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    std::string type = "application/octet-stream";
    if (ext == ".jpg" || ext == ".jpeg") type = "image/jpeg";
    else if (ext == ".png") type = "image/png";
    else if (ext == ".webp") type = "image/webp";
    return {200, type, std::move(bytes)};
  }

  // Snapshot: sessions as JSON, rewritten after every mutation.
  void persist() {
    if (!cfg_.snapshot) return;
    nlohmann::json j;
    std::vector<std::shared_ptr<Slot>> slots;
    {
      std::shared_lock lock(sessions_mutex_);
      j["next_id"] = next_id_;
      for (const auto& [id, slot] : sessions_) slots.push_back(slot);
    }
    auto list = nlohmann::json::array();
    for (const auto& slot : slots) {
      std::lock_guard lock(slot->mutex);
      const Session& s = slot->session;
      nlohmann::json e = session_json(s);
      e["query"] = record_to_json(s.query);
      if (s.weights) e["raw_weights"] = s.weights->raw();
      auto shots = nlohmann::json::array();
      for (const auto& r : s.shots) shots.push_back(record_to_json(r));
      e["shot_records"] = shots;
      list.push_back(std::move(e));
    }
    j["sessions"] = list;
    std::lock_guard lock(snapshot_mutex_);
    const auto tmp = cfg_.snapshot->string() + ".tmp";
    {
      std::ofstream out(tmp);
      out << j.dump();
      if (!out) throw Error(ErrorCode::IoError, "cannot write session snapshot");
    }
    std::filesystem::rename(tmp, *cfg_.snapshot);
  }

  void restore(const std::filesystem::path& path) {
    std::ifstream in(path);
    nlohmann::json j;
    try {
      in >> j;
      next_id_ = j.value("next_id", std::size_t{0});
      for (const auto& e : j.at("sessions")) {
        auto slot = std::make_shared<Slot>();
        Session& s = slot->session;
        s.id = e.at("session_id").get<std::string>();
        s.query = record_from_json(e.at("query"));
        s.summary = e.at("summary");
        if (e.contains("raw_weights")) {
          s.weights = UspWeights(e.at("raw_weights").get<std::array<double, kBlockCount>>());
        } else if (!e.at("weights").is_null()) {
          s.weights = UspWeights::from_json(e.at("weights"));
        }
        s.top_k = e.value("top_k", std::size_t{0});
        s.preferred = e.value("preferred", std::vector<std::string>{});
        s.ignored = e.value("ignored", std::vector<std::string>{});
        for (const auto& r : e.value("shot_records", nlohmann::json::array())) {
          s.shots.push_back(record_from_json(r));
        }
        if (!e.at("match").is_null()) s.match = e.at("match");
        if (s.weights && model_) recompute(s);
        sessions_[s.id] = slot;
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::MalformedModel, std::string("session snapshot: ") + e.what());
    }
  }

  std::optional<CompositionModel> model_;
  ServiceConfig cfg_;
  std::shared_mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<Slot>> sessions_;
  std::size_t next_id_ = 0;
  std::mutex snapshot_mutex_;
};

}  // namespace captain
