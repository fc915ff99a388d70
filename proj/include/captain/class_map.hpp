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
#include <set>
#include <string>
#include <vector>

#include "captain/common.hpp"
#include "json.hpp"

namespace captain {

// MSCOCO detection labels, contiguous ids 1..80.
inline const std::array<const char*, kOdClasses>& coco_names() {
  static const std::array<const char*, kOdClasses> names = {
      "person", "bicycle", "car", "motorcycle", "airplane", "bus", "train",
      "truck", "boat", "traffic light", "fire hydrant", "stop sign",
      "parking meter", "bench", "bird", "cat", "dog", "horse", "sheep", "cow",
      "elephant", "bear", "zebra", "giraffe", "backpack", "umbrella",
      "handbag", "tie", "suitcase", "frisbee", "skis", "snowboard",
      "sports ball", "kite", "baseball bat", "baseball glove", "skateboard",
      "surfboard", "tennis racket", "bottle", "wine glass", "cup", "fork",
      "knife", "spoon", "bowl", "banana", "apple", "sandwich", "orange",
      "broccoli", "carrot", "hot dog", "pizza", "donut", "cake", "chair",
      "couch", "potted plant", "bed", "dining table", "toilet", "tv",
      "laptop", "mouse", "remote", "keyboard", "cell phone", "microwave",
      "oven", "toaster", "sink", "refrigerator", "book", "clock", "vase",
      "scissors", "teddy bear", "hair drier", "toothbrush"};
  return names;
}

// ADE20K scene-parsing labels, ids 1..150.
inline const std::array<const char*, kSpClasses>& ade_names() {
  static const std::array<const char*, kSpClasses> names = {
      "wall", "building", "sky", "floor", "tree", "ceiling", "road", "bed",
      "windowpane", "grass", "cabinet", "sidewalk", "person", "earth", "door",
      "table", "mountain", "plant", "curtain", "chair", "car", "water",
      "painting", "sofa", "shelf", "house", "sea", "mirror", "rug", "field",
      "armchair", "seat", "fence", "desk", "rock", "wardrobe", "lamp",
      "bathtub", "railing", "cushion", "base", "box", "column", "signboard",
      "chest of drawers", "counter", "sand", "sink", "skyscraper",
      "fireplace", "refrigerator", "grandstand", "path", "stairs", "runway",
      "case", "pool table", "pillow", "screen door", "stairway", "river",
      "bridge", "bookcase", "blind", "coffee table", "toilet", "flower",
      "book", "hill", "bench", "countertop", "stove", "palm",
      "kitchen island", "computer", "swivel chair", "boat", "bar",
      "arcade machine", "hovel", "bus", "towel", "light", "truck", "tower",
      "chandelier", "awning", "streetlight", "booth", "television receiver",
      "airplane", "dirt track", "apparel", "pole", "land", "bannister",
      "escalator", "ottoman", "bottle", "buffet", "poster", "stage", "van",
      "ship", "fountain", "conveyer belt", "canopy", "washer", "plaything",
      "swimming pool", "stool", "barrel", "basket", "waterfall", "tent",
      "bag", "minibike", "cradle", "oven", "ball", "food", "step", "tank",
      "trade name", "microwave", "pot", "animal", "bicycle", "lake",
      "dishwasher", "screen", "blanket", "sculpture", "hood", "sconce",
      "vase", "traffic light", "tray", "ashcan", "fan", "pier", "crt screen",
      "plate", "monitor", "bulletin board", "shower", "radiator", "glass",
      "clock", "flag"};
  return names;
}

/// Merges the 80 detector labels and the 150 scene-parser labels into one
/// 210-id space. Merged ids 1..80 are the detector ids; the scene-parser
/// labels that duplicate a detector label share its id and the remaining
/// 130 take 81..210 in ascending scene-parser order.
struct ClassMap {
  std::array<int, kOdClasses + 1> od_to_merged{};  // index 0 unused
  std::array<int, kSpClasses + 1> sp_to_merged{};
  std::vector<std::string> names;  // size 211, index 0 = "none"
  int person = 1;
  std::set<int> scenery;  // water/mountain/plant/cloud/building-like ids

  int merged_od(int od_id) const {
    return od_id <= 0 || od_id > static_cast<int>(kOdClasses) ? 0
                                                             : od_to_merged[od_id];
  }
  int merged_sp(int sp_id) const {
    return sp_id <= 0 || sp_id > static_cast<int>(kSpClasses) ? 0
                                                             : sp_to_merged[sp_id];
  }
  const std::string& name(int merged) const {
    return names.at(static_cast<std::size_t>(merged));
  }

  /// Checks coverage of 1..210 and the 20-duplicate rule.
  void validate() const {
    std::vector<int> od_hits(kMergedClasses + 1, 0), sp_hits(kMergedClasses + 1, 0);
    for (std::size_t i = 1; i <= kOdClasses; ++i) {
      const int m = od_to_merged[i];
      if (m < 1 || m > static_cast<int>(kMergedClasses)) {
        throw Error(ErrorCode::ValueOutOfRange, "od class " + std::to_string(i) +
                                                    " maps outside 1..210");
      }
      ++od_hits[m];
    }
    for (std::size_t i = 1; i <= kSpClasses; ++i) {
      const int m = sp_to_merged[i];
      if (m < 1 || m > static_cast<int>(kMergedClasses)) {
        throw Error(ErrorCode::ValueOutOfRange, "sp class " + std::to_string(i) +
                                                    " maps outside 1..210");
      }
      ++sp_hits[m];
    }
    int shared = 0;
    for (std::size_t m = 1; m <= kMergedClasses; ++m) {
      if (od_hits[m] + sp_hits[m] == 0) {
        throw Error(ErrorCode::MalformedBundle,
                    "merged id " + std::to_string(m) + " has no source class");
      }
      if (od_hits[m] > 0 && sp_hits[m] > 0) ++shared;
    }
    if (shared != 20) {
      throw Error(ErrorCode::MalformedBundle,
                  "class map must share exactly 20 ids, found " +
                      std::to_string(shared));
    }
    if (names.size() != kMergedClasses + 1) {
      throw Error(ErrorCode::MalformedBundle, "class map needs 210 names");
    }
  }
};

/// (scene-parser id, detector id) pairs treated as the same object.
inline const std::array<std::pair<int, int>, 20>& default_duplicates() {
  static const std::array<std::pair<int, int>, 20> pairs = {{
      {13, 1},    // person
      {128, 2},   // bicycle
      {21, 3},    // car
      {91, 5},    // airplane
      {81, 6},    // bus
      {84, 8},    // truck
      {77, 9},    // boat
      {137, 10},  // traffic light
      {99, 40},   // bottle
      {20, 57},   // chair
      {24, 58},   // sofa / couch
      {18, 59},   // plant / potted plant
      {8, 60},    // bed
      {16, 61},   // table / dining table
      {66, 62},   // toilet
      {48, 72},   // sink
      {51, 73},   // refrigerator
      {68, 74},   // book
      {149, 75},  // clock
      {136, 76},  // vase
  }};
  return pairs;
}

inline ClassMap default_class_map() {
  ClassMap map;
  map.names.assign(kMergedClasses + 1, "");
  map.names[0] = "none";
  for (std::size_t i = 1; i <= kOdClasses; ++i) {
    map.od_to_merged[i] = static_cast<int>(i);
    map.names[i] = coco_names()[i - 1];
  }
  for (const auto& [sp, od] : default_duplicates()) map.sp_to_merged[sp] = od;
  int next = static_cast<int>(kOdClasses) + 1;
  for (std::size_t i = 1; i <= kSpClasses; ++i) {
    if (map.sp_to_merged[i] != 0) continue;
    map.sp_to_merged[i] = next;
    map.names[next] = ade_names()[i - 1];
    ++next;
  }
  // Landscape gate classes, given as scene-parser ids.
  for (int sp : {22, 27, 61, 110, 114, 129,  // water-like
                 17, 35, 69,                 // mountain-like
                 5, 10, 18, 30, 67, 73,      // plant-like
                 3,                          // cloud-like (sky)
                 2, 26, 49, 62, 85}) {       // building-like
    map.scenery.insert(map.sp_to_merged[sp]);
  }
  return map;
}

inline nlohmann::json to_json(const ClassMap& map) {
  nlohmann::json od = nlohmann::json::array();
  for (std::size_t i = 1; i <= kOdClasses; ++i) od.push_back({i, map.od_to_merged[i]});
  nlohmann::json sp = nlohmann::json::array();
  for (std::size_t i = 1; i <= kSpClasses; ++i) sp.push_back({i, map.sp_to_merged[i]});
  nlohmann::json names = nlohmann::json::object();
  for (std::size_t m = 1; m <= kMergedClasses; ++m) names[std::to_string(m)] = map.names[m];
  return {{"merged_count", kMergedClasses},
          {"person", map.person},
          {"od_to_merged", od},
          {"sp_to_merged", sp},
          {"scenery", map.scenery},
          {"names", names}};
}

inline ClassMap class_map_from_json(const nlohmann::json& j) {
  ClassMap map;
  try {
    if (j.at("merged_count").get<std::size_t>() != kMergedClasses) {
      throw Error(ErrorCode::MalformedBundle, "merged_count must be 210");
    }
    for (const auto& pair : j.at("od_to_merged")) {
      const int src = pair.at(0).get<int>();
      if (src < 1 || src > static_cast<int>(kOdClasses)) {
        throw Error(ErrorCode::ValueOutOfRange, "od id out of range");
      }
      map.od_to_merged[src] = pair.at(1).get<int>();
    }
    for (const auto& pair : j.at("sp_to_merged")) {
      const int src = pair.at(0).get<int>();
      if (src < 1 || src > static_cast<int>(kSpClasses)) {
        throw Error(ErrorCode::ValueOutOfRange, "sp id out of range");
      }
      map.sp_to_merged[src] = pair.at(1).get<int>();
    }
    map.person = j.value("person", 1);
    for (const auto& s : j.value("scenery", nlohmann::json::array())) {
      map.scenery.insert(s.get<int>());
    }
    map.names.assign(kMergedClasses + 1, "");
    map.names[0] = "none";
    const auto& names = j.at("names");
    for (std::size_t m = 1; m <= kMergedClasses; ++m) {
      map.names[m] = names.value(std::to_string(m), "class_" + std::to_string(m));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedBundle, std::string("class map: ") + e.what());
  }
  map.validate();
  return map;
}

inline ClassMap load_class_map(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedBundle, e.what());
  }
  return class_map_from_json(j);
}

}  // namespace captain
