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
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "captain/common.hpp"
#include "captain/composition.hpp"
#include "json.hpp"

namespace captain {

/// Non-negative per-block weights, normalised to sum to 1.
class UspWeights {
 public:
  UspWeights() {
    w_.fill(1.0 / static_cast<double>(kBlockCount));
    raw_.fill(1.0);
  }

  explicit UspWeights(const std::array<double, kBlockCount>& raw) : raw_(raw) {
    double sum = 0.0;
    for (double v : raw) {
      if (!std::isfinite(v) || v < 0.0) {
        throw Error(ErrorCode::InvalidWeights, "weights must be finite and non-negative");
      }
      sum += v;
    }
    if (!(sum > 0.0)) throw Error(ErrorCode::InvalidWeights, "weights sum to zero");
    for (std::size_t k = 0; k < kBlockCount; ++k) w_[k] = raw[k] / sum;
  }

  /// "vgg=0.5,cade=0.5"; unnamed blocks get 0.
  static UspWeights parse(std::string_view text) {
    std::array<double, kBlockCount> raw{};
    std::stringstream ss{std::string(text)};
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (item.empty()) continue;
      const auto eq = item.find('=');
      if (eq == std::string::npos) {
        throw Error(ErrorCode::InvalidWeights, "expected name=value, got '" + item + "'");
      }
      raw[index_of(item.substr(0, eq))] = parse_number(item.substr(eq + 1));
    }
    return UspWeights(raw);
  }

  /// Object keyed by block name, or an array of six numbers.
  static UspWeights from_json(const nlohmann::json& j) {
    std::array<double, kBlockCount> raw{};
    if (j.is_array()) {
      if (j.size() != kBlockCount) throw Error(ErrorCode::InvalidWeights, "need six weights");
      for (std::size_t k = 0; k < kBlockCount; ++k) raw[k] = number(j[k]);
    } else if (j.is_object()) {
      for (const auto& [key, value] : j.items()) raw[index_of(key)] = number(value);
    } else {
      throw Error(ErrorCode::InvalidWeights, "weights must be an object or an array");
    }
    return UspWeights(raw);
  }

  double operator[](std::size_t k) const { return w_[k]; }
  const std::array<double, kBlockCount>& values() const { return w_; }
  /// Weights as given, before normalisation.
  const std::array<double, kBlockCount>& raw() const { return raw_; }
  friend bool operator==(const UspWeights& a, const UspWeights& b) { return a.w_ == b.w_; }

  nlohmann::json to_json() const {
    nlohmann::json j = nlohmann::json::object();
    for (std::size_t k = 0; k < kBlockCount; ++k) j[block_names()[k]] = w_[k];
    return j;
  }

 private:
  static std::size_t index_of(std::string_view name) {
    for (std::size_t k = 0; k < kBlockCount; ++k) {
      if (name == block_names()[k]) return k;
    }
    throw Error(ErrorCode::InvalidWeights, "unknown weight '" + std::string(name) + "'");
  }
  static double parse_number(const std::string& s) {
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidWeights, "bad weight value '" + s + "'");
    }
  }
  static double number(const nlohmann::json& v) {
    if (!v.is_number()) throw Error(ErrorCode::InvalidWeights, "weights must be numbers");
    return v.get<double>();
  }

  std::array<double, kBlockCount> w_{};
  std::array<double, kBlockCount> raw_{};
};

using SimilarityRows = std::array<std::vector<double>, kBlockCount>;

struct SimilarityTensor {
  SimilarityRows raw;
  SimilarityRows normalized;
};

/// exp(-(importance mass of `image` on classes absent from `query`)^2)
inline double iod_similarity(std::span<const float> image, std::span<const double> query) {
  double masked = 0.0;
  for (std::size_t k = 0; k < image.size(); ++k) {
    if (query[k] == 0.0) masked += image[k];
  }
  masked = std::min(masked, 1.0);  // f32 storage can overshoot a unit mass
  return std::exp(-masked * masked);
}

inline double gender_similarity(std::span<const float> image, std::span<const double> query) {
  for (std::size_t k = 0; k < image.size(); ++k) {
    if (static_cast<double>(image[k]) != query[k]) return -1.0;
  }
  return 1.0;
}

inline void check_query(const FeatureRecord& q) {
  for (std::size_t k = 0; k < kBlockCount; ++k) {
    if (q.blocks[k].size() != kBlockDims[k]) {
      throw Error(ErrorCode::DimensionMismatch,
                  std::string("query ") + block_names()[k] + " block has " +
                      std::to_string(q.blocks[k].size()) + " entries");
    }
  }
}

/// Raw per-block scores of every model row against the query.
inline SimilarityRows similarity(const CompositionModel& model, const FeatureRecord& q) {
  if (model.empty()) throw Error(ErrorCode::EmptyModel, "model has no rows");
  check_query(q);
  const std::size_t n = model.rows();
  SimilarityRows s;
  for (auto& row : s) row.resize(n);
  const auto& vgg = model.block(kVgg);
  const auto& iod = model.block(kIod);
  const auto& cade = model.block(kCade);
  const auto& ap = model.block(kArpose);
  const auto& stat = model.block(kStat);
  const auto& gnd = model.block(kGender);
  const std::span<const double> qv(q.block(kVgg)), qi(q.block(kIod)), qc(q.block(kCade)),
      qa(q.block(kArpose)), qg(q.block(kGender));
  for (std::size_t r = 0; r < n; ++r) {
    s[kVgg][r] = dot(vgg.row(r), qv);
    s[kIod][r] = iod_similarity(iod.row(r), qi);
    s[kCade][r] = dot(cade.row(r), qc);
    s[kArpose][r] = dot(ap.row(r), qa);
    s[kStat][r] = static_cast<double>(stat(r, 0));
    s[kGender][r] = gender_similarity(gnd.row(r), qg);
  }
  return s;
}

inline constexpr double kDegenerateRowSum = 1e-12;

/// Divides every row by its sum (after mapping the gender row {-1,1} to
/// {0,1}); rows summing below 1e-12 become uniform.
inline SimilarityRows normalize(const SimilarityRows& raw) {
  SimilarityRows out = raw;
  for (double& v : out[kGender]) v = (v + 1.0) / 2.0;
  for (auto& row : out) {
    if (row.empty()) continue;
    const double sum = std::accumulate(row.begin(), row.end(), 0.0);
    if (!(sum >= kDegenerateRowSum) || !std::isfinite(sum)) {
      std::fill(row.begin(), row.end(), 1.0 / static_cast<double>(row.size()));
      continue;
    }
    for (double& v : row) v /= sum;
  }
  return out;
}

inline SimilarityTensor similarity_tensor(const CompositionModel& model, const FeatureRecord& q) {
  SimilarityTensor t;
  t.raw = similarity(model, q);
  t.normalized = normalize(t.raw);
  return t;
}

struct RankedItem {
  std::string image_id;
  std::size_t row = 0;
  double score = 0.0;
  std::array<double, kBlockCount> breakdown{};  // w_d * S^N_d
};

/// Descending V_pref, ties by ascending image id; at most top_k items.
inline std::vector<RankedItem> rank(const SimilarityRows& normalized,
                                    const std::vector<std::string>& ids, const UspWeights& w,
                                    std::size_t top_k) {
  const std::size_t n = ids.size();
  for (const auto& row : normalized) {
    if (row.size() != n) throw Error(ErrorCode::DimensionMismatch, "score rows differ from ids");
  }
  std::vector<double> score(n, 0.0);
  for (std::size_t k = 0; k < kBlockCount; ++k) {
    const double wk = w[k];
    const auto& row = normalized[k];
    for (std::size_t r = 0; r < n; ++r) score[r] += wk * row[r];
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  const auto before = [&](std::size_t a, std::size_t b) {
    if (score[a] != score[b]) return score[a] > score[b];
    return ids[a] < ids[b];
  };
  const std::size_t k = std::min(top_k, n);
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                    before);
  std::vector<RankedItem> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t r = order[i];
    RankedItem item{ids[r], r, score[r], {}};
    for (std::size_t b = 0; b < kBlockCount; ++b) item.breakdown[b] = w[b] * normalized[b][r];
    out.push_back(std::move(item));
  }
  return out;
}

inline std::vector<RankedItem> query(const CompositionModel& model, const FeatureRecord& q,
                                     const UspWeights& w, std::size_t top_k) {
  return rank(normalize(similarity(model, q)), model.ids(), w, top_k);
}

inline nlohmann::json ranking_to_json(const std::vector<RankedItem>& items, const UspWeights& w) {
  auto results = nlohmann::json::array();
  for (const auto& item : items) {
    nlohmann::json breakdown = nlohmann::json::object();
    for (std::size_t k = 0; k < kBlockCount; ++k) breakdown[block_names()[k]] = item.breakdown[k];
    results.push_back({{"image_id", item.image_id},
                       {"score", item.score},
                       {"breakdown", breakdown},
                       {"image", "/images/" + item.image_id}});
  }
  return {{"weights", w.to_json()}, {"results", results}};
}

// ---------------------------------------------------------------------------
// Favorite shot

struct FavoriteShot {
  std::size_t index = 0;
  std::vector<double> scores;  // one per candidate
};

/// Picks the candidate with the largest USP-weighted similarity summed over
/// the style set. Each block is normalised over the whole style x candidate
/// grid; ties go to the earliest candidate.
inline FavoriteShot favorite_shot(const CompositionModel& model,
                                  const std::vector<std::size_t>& style_rows,
                                  const std::vector<FeatureRecord>& candidates,
                                  const UspWeights& w) {
  if (style_rows.empty() || candidates.empty()) {
    throw Error(ErrorCode::EmptySession, "favorite shot needs style images and candidates");
  }
  for (std::size_t r : style_rows) {
    if (r >= model.rows()) throw Error(ErrorCode::UnknownId, "style row outside the model");
  }
  CompositionModel sub;
  for (std::size_t j = 0; j < style_rows.size(); ++j) {
    auto rec = model.record(style_rows[j]);
    rec.image_id = std::to_string(j);  // a style image may repeat
    sub.add(rec);
  }
  const std::size_t c = style_rows.size(), q = candidates.size();

  // grid[k][j * q + i] = raw score of style j against candidate i
  SimilarityRows grid;
  for (auto& g : grid) g.assign(c * q, 0.0);
  for (std::size_t i = 0; i < q; ++i) {
    const auto s = similarity(sub, candidates[i]);
    for (std::size_t k = 0; k < kBlockCount; ++k) {
      for (std::size_t j = 0; j < c; ++j) grid[k][j * q + i] = s[k][j];
    }
  }
  const auto norm = normalize(grid);

  FavoriteShot out;
  out.scores.assign(q, 0.0);
  for (std::size_t i = 0; i < q; ++i) {
    double total = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      double v = 0.0;
      for (std::size_t k = 0; k < kBlockCount; ++k) v += w[k] * norm[k][j * q + i];
      total += v;
    }
    out.scores[i] = total;
    if (total > out.scores[out.index]) out.index = i;
  }
  return out;
}

}  // namespace captain
