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
#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "captain/captain.hpp"
#include "support/fixtures.hpp"

namespace captain {
namespace {

using nlohmann::json;
using testing::TempDir;

struct Run {
  int code = -1;
  std::string out;
};

Run run(const TempDir& dir, const std::string& args) {
  const auto out_path = dir / "stdout.txt";
  const std::string cmd = std::string("\"") + CAPTAIN_CLI_PATH + "\" " + args + " > \"" +
                          out_path.string() + "\" 2> \"" + (dir / "stderr.txt").string() + "\"";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(out_path);
  std::stringstream ss;
  ss << in.rdbuf();
  r.out = ss.str();
  return r;
}

json run_json(const TempDir& dir, const std::string& args) {
  const auto r = run(dir, args);
  EXPECT_EQ(r.code, 0) << args;
  return json::parse(r.out);
}

std::string q(const std::filesystem::path& p) { return "\"" + p.string() + "\""; }

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    run_json(dir_, "synth " + q(dir_ / "corpus") + " --count 12 --seed 3");
    const auto built = run_json(dir_, "index build " + q(dir_ / "corpus") + " -o " + q(dir_ / "model"));
    ASSERT_EQ(built["rows"], 12);
    ASSERT_TRUE(built["issues"].empty());
  }

  TempDir dir_{"cli"};
};

TEST_F(CliTest, BuildMatchesLibrary) {
  const auto direct = build_corpus(dir_ / "corpus", {}).model;
  EXPECT_TRUE(load_model(dir_ / "model") == direct);
  const auto info = run_json(dir_, "index info --model " + q(dir_ / "model"));
  EXPECT_EQ(info["rows"], 12);
  EXPECT_EQ(info["blocks"]["arpose"], kArposeDims);
}

TEST_F(CliTest, QueryAgreesWithService) {
  const auto cli = run_json(dir_, "query --model " + q(dir_ / "model") +
                                      " --image-id img00004 --top 5 --weights vgg=2,iod=1,stat=1");
  Service service(load_model(dir_ / "model"));
  const auto created = json::parse(service.handle("POST", "/sessions", R"({"image_id":"img00004"})").body);
  const std::string id = created["session_id"];
  auto http = json::parse(service.handle("POST", "/sessions/" + id + "/rank",
                                         R"({"weights":{"vgg":2,"iod":1,"stat":1},"top_k":5})")
                              .body);
  http.erase("session_id");
  EXPECT_EQ(cli, http);

  const auto by_bundle =
      run_json(dir_, "query --model " + q(dir_ / "model") + " --bundle " +
                         q(dir_ / "corpus" / "img00004") + " --top 5 --weights vgg=2,iod=1,stat=1");
  ASSERT_EQ(by_bundle["results"].size(), 5u);
  EXPECT_EQ(by_bundle["results"][0]["image_id"], "img00004");
}

TEST_F(CliTest, MatchAgreesWithService) {
  run_json(dir_, "synth " + q(dir_ / "shots") + " --count 5 --seed 77");
  Service service(load_model(dir_ / "model"));
  const auto created = json::parse(service.handle("POST", "/sessions", R"({"image_id":"img00002"})").body);
  const std::string id = created["session_id"];
  const auto ranked = json::parse(service.handle("POST", "/sessions/" + id + "/rank", R"({"top_k":6})").body);
  const json style = {{"preferred", {ranked["results"][0]["image_id"], ranked["results"][1]["image_id"]}},
                      {"ignored", {ranked["results"][5]["image_id"]}}};
  ASSERT_EQ(service.handle("POST", "/sessions/" + id + "/style-set", style.dump()).status, 200);
  json shots = json::array();
  for (const auto& dir : corpus_bundles(dir_ / "shots")) shots.push_back(to_json(load_bundle(dir), true));
  auto http = json::parse(service.handle("POST", "/sessions/" + id + "/shots", json{{"shots", shots}}.dump()).body);
  http.erase("session_id");

  std::ofstream(dir_ / "style.json") << style.dump();
  const auto cli = run_json(dir_, "match --model " + q(dir_ / "model") + " --style " +
                                      q(dir_ / "style.json") + " --shots " + q(dir_ / "shots"));
  EXPECT_EQ(cli, http);
  EXPECT_EQ(cli["scores"].size(), 5u);
}

TEST_F(CliTest, AppendAndErrors) {
  run_json(dir_, "synth " + q(dir_ / "more") + " --count 2 --seed 5");
  // Synthetic ids restart at img00000, so the append collides.
  EXPECT_EQ(run(dir_, "index append --model " + q(dir_ / "model") + " " + q(dir_ / "more" / "img00000")).code, 1);
  EXPECT_EQ(run_json(dir_, "index info --model " + q(dir_ / "model"))["rows"], 12);

  EXPECT_EQ(run(dir_, "query --model " + q(dir_ / "model") + " --image-id missing").code, 1);
  EXPECT_EQ(run(dir_, "query --model " + q(dir_ / "model") + " --image-id img00001 --weights vgg=0").code, 1);
  EXPECT_NE(run(dir_, "query").code, 0);
  EXPECT_NE(run(dir_, "bogus").code, 0);
}

TEST_F(CliTest, DecomposeAndPrettyOutput) {
  const auto r = run(dir_, "decompose " + q(dir_ / "corpus" / "img00000") + " --full --pretty");
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("\n  "), std::string::npos);
  const auto j = json::parse(r.out);
  EXPECT_EQ(j["record"]["vgg"].size(), kVggDims);
  EXPECT_TRUE(j["genre"].is_string());
}

}  // namespace
}  // namespace captain
