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

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "captain/captain.hpp"
#include "captain/http.hpp"
#include "captain/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonOptions {
  std::string class_map;
  std::string thresholds;
  std::string svm;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool with_svm = true) {
  cmd->add_option("--class-map", o.class_map, "Class merge table (JSON)")->check(CLI::ExistingFile);
  cmd->add_option("--thresholds", o.thresholds, "Hysteresis threshold table")
      ->check(CLI::ExistingFile);
  if (with_svm) {
    cmd->add_option("--svm", o.svm, "Trained portrait classifier")->check(CLI::ExistingFile);
  }
}

captain::DecomposeConfig make_config(const CommonOptions& o) {
  captain::DecomposeConfig cfg;
  if (!o.class_map.empty()) cfg.fusion.class_map = captain::load_class_map(o.class_map);
  if (!o.thresholds.empty()) cfg.fusion.thresholds = captain::HysteresisThresholds::load(o.thresholds);
  if (!o.svm.empty()) cfg.svm = captain::load_svm(fs::path(o.svm));
  return cfg;
}

// Bundle directories under `dir`: the corpus.json list when present,
// otherwise every subdirectory holding a manifest, in name order.
std::vector<fs::path> bundle_dirs(const fs::path& dir) {
  if (fs::exists(dir / "corpus.json")) return captain::corpus_bundles(dir);
  if (fs::exists(dir / "manifest.json")) return {dir};
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_directory() && fs::exists(e.path() / "manifest.json")) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

captain::UspWeights weights_from(const std::string& text) {
  return text.empty() ? captain::UspWeights{} : captain::UspWeights::parse(text);
}

void print(const json& j, bool pretty) { std::cout << (pretty ? j.dump(2) : j.dump()) << "\n"; }

json issues_json(const std::vector<captain::BuildIssue>& issues) {
  auto out = json::array();
  for (const auto& i : issues) {
    out.push_back({{"source", i.source},
                   {"code", std::string(captain::to_string(i.code))},
                   {"message", i.message}});
  }
  return out;
}

struct LabeledCorpus {
  std::vector<captain::LabeledFeatures> samples;
  std::vector<std::string> ids;
  std::size_t skipped = 0;
};

LabeledCorpus labeled_features(const fs::path& corpus, const captain::DecomposeConfig& cfg) {
  LabeledCorpus out;
  for (const auto& dir : bundle_dirs(corpus)) {
    const auto b = captain::load_bundle(dir);
    if (!b.category) {
      ++out.skipped;
      continue;
    }
    const auto f = captain::extract_cade_features(b, cfg.fusion.class_map, cfg.fusion.thresholds);
    out.samples.push_back({std::vector<double>(f.begin(), f.end()), *b.category});
    out.ids.push_back(b.image_id);
  }
  return out;
}

struct PoseCorpus {
  captain::DenseMatrix<double> features;
  std::vector<std::string> ids;
};

// One row per person with enough joints; ids are image_id#person.
PoseCorpus pose_features(const fs::path& corpus) {
  PoseCorpus out;
  out.features.set_cols(captain::kArposeDims);
  for (const auto& dir : bundle_dirs(corpus)) {
    const auto b = captain::load_bundle(dir);
    for (std::size_t p = 0; p < b.persons.size(); ++p) {
      if (static_cast<std::size_t>(b.persons[p].present_count()) < captain::kMinPoseJoints) continue;
      out.features.push_row(captain::pose_features(b.persons[p]));
      out.ids.push_back(b.image_id + "#" + std::to_string(p));
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Photo composition decomposition, retrieval and shot matching"};
  app.require_subcommand(1);
  bool pretty = false;
  app.add_flag("--pretty", pretty, "Indent JSON output");
  app.fallthrough();

  // synth
  auto* synth = app.add_subcommand("synth", "Write a synthetic corpus");
  std::string synth_dir;
  std::size_t synth_count = 20;
  std::uint64_t synth_seed = 1;
  captain::synth::BundleOptions synth_opt;
  synth->add_option("dir", synth_dir, "Output corpus directory")->required();
  synth->add_option("--count", synth_count, "Number of bundles");
  synth->add_option("--seed", synth_seed, "Random seed");
  synth->add_option("--width", synth_opt.width, "Image width");
  synth->add_option("--height", synth_opt.height, "Image height");

  // index
  auto* index = app.add_subcommand("index", "Build and maintain composition models");
  index->require_subcommand(1);
  CommonOptions build_opt;
  std::string build_corpus, build_out;
  auto* build = index->add_subcommand("build", "Index a corpus");
  build->add_option("corpus", build_corpus, "Corpus directory")->required()->check(CLI::ExistingDirectory);
  build->add_option("-o,--output", build_out, "Model directory")->required();
  add_common(build, build_opt);

  CommonOptions append_opt;
  std::string append_model;
  std::vector<std::string> append_bundles;
  auto* append = index->add_subcommand("append", "Add bundles to a model");
  append->add_option("--model", append_model, "Model directory")->required();
  append->add_option("bundles", append_bundles, "Bundle directories")->required();
  add_common(append, append_opt);

  std::string info_model;
  auto* info = index->add_subcommand("info", "Describe a model");
  info->add_option("--model", info_model, "Model directory")->required();

  // query
  CommonOptions query_opt;
  std::string query_model, query_bundle, query_image, query_weights;
  std::size_t query_top = 20;
  auto* query = app.add_subcommand("query", "Rank the model against a query shot");
  query->add_option("--model", query_model, "Model directory")->required();
  auto* qb = query->add_option("--bundle", query_bundle, "Query bundle directory");
  auto* qi = query->add_option("--image-id", query_image, "Query by indexed image id");
  qb->excludes(qi);
  query->add_option("--weights", query_weights, "e.g. vgg=0.5,cade=0.5");
  query->add_option("--top", query_top, "Number of results");
  query->add_flag("--json", "Emit JSON (the default)");
  add_common(query, query_opt);

  // match
  CommonOptions match_opt;
  std::string match_model, match_style, match_shots, match_weights;
  double match_q = 1.0;
  auto* match = app.add_subcommand("match", "Pick the favorite shot against a style set");
  match->add_option("--model", match_model, "Model directory")->required();
  match->add_option("--style", match_style, "Style set JSON")->required()->check(CLI::ExistingFile);
  match->add_option("--shots", match_shots, "Directory of shot bundles")->required();
  match->add_option("--weights", match_weights, "e.g. vgg=0.5,cade=0.5");
  match->add_option("--q", match_q, "Norm order of the pose distance");
  add_common(match, match_opt);

  // decompose
  CommonOptions dec_opt;
  std::string dec_bundle;
  bool dec_full = false;
  auto* dec = app.add_subcommand("decompose", "Decompose one bundle");
  dec->add_option("bundle", dec_bundle, "Bundle directory")->required();
  dec->add_flag("--full", dec_full, "Include every feature block");
  add_common(dec, dec_opt);

  // cade
  auto* cade = app.add_subcommand("cade", "Portrait category classifier");
  cade->require_subcommand(1);
  CommonOptions train_opt;
  std::string train_corpus, train_out;
  captain::SvmParams train_params;
  auto* train = cade->add_subcommand("train", "Train on a labeled corpus");
  train->add_option("corpus", train_corpus, "Corpus directory")->required();
  train->add_option("-o,--output", train_out, "Model file")->required();
  train->add_option("--C", train_params.C, "Box constraint");
  train->add_option("--gamma", train_params.gamma, "RBF width (0 = 1/features)");
  add_common(train, train_opt, false);

  CommonOptions eval_opt;
  std::string eval_corpus;
  auto* eval = cade->add_subcommand("eval", "Evaluate on a labeled corpus");
  eval->add_option("corpus", eval_corpus, "Corpus directory")->required();
  add_common(eval, eval_opt);
  eval->get_option("--svm")->required();

  // arpose
  auto* arpose = app.add_subcommand("arpose", "Pose clustering");
  arpose->require_subcommand(1);
  std::string cl_corpus, cl_out;
  captain::KMeansOptions cl_opt;
  std::size_t cl_top = 5;
  auto* cluster = arpose->add_subcommand("cluster", "Cluster the poses of a corpus");
  cluster->add_option("corpus", cl_corpus, "Corpus directory")->required();
  cluster->add_option("--k", cl_opt.k, "Cluster count");
  cluster->add_option("--restarts", cl_opt.restarts, "Restarts");
  cluster->add_option("--seed", cl_opt.seed, "Random seed");
  cluster->add_option("--top", cl_top, "Members listed per cluster");
  cluster->add_option("-o,--output", cl_out, "Write the report here as well");

  std::string el_corpus;
  std::size_t el_kmax = 20, el_restarts = 10;
  std::uint64_t el_seed = 0;
  auto* elbow = arpose->add_subcommand("elbow", "Distortion against cluster count");
  elbow->add_option("corpus", el_corpus, "Corpus directory")->required();
  elbow->add_option("--k-max", el_kmax, "Largest k");
  elbow->add_option("--restarts", el_restarts, "Restarts per k");
  elbow->add_option("--seed", el_seed, "Random seed");

  // serve
  CommonOptions serve_opt;
  std::string serve_model, serve_corpus, serve_host = "127.0.0.1", serve_snapshot, serve_clusters;
  int serve_port = 8080;
  auto* serve = app.add_subcommand("serve", "Run the HTTP session service");
  serve->add_option("--model", serve_model, "Model directory (default $CAPTAIN_MODEL)");
  serve->add_option("--corpus", serve_corpus, "Corpus directory for image files");
  serve->add_option("--host", serve_host, "Bind address");
  serve->add_option("--port", serve_port, "Port");
  serve->add_option("--snapshot", serve_snapshot, "Session snapshot file");
  serve->add_option("--clusters", serve_clusters, "Pose cluster report");
  add_common(serve, serve_opt);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) {
      captain::synth::write_corpus(synth_dir, synth_count, synth_seed, synth_opt);
      print({{"corpus", synth_dir}, {"bundles", synth_count}}, pretty);
    } else if (*build) {
      auto r = captain::build(bundle_dirs(build_corpus), make_config(build_opt));
      captain::save_model(r.model, build_out);
      print({{"model", build_out}, {"rows", r.model.rows()}, {"issues", issues_json(r.issues)}},
            pretty);
    } else if (*append) {
      const auto cfg = make_config(append_opt);
      auto model = captain::load_model(append_model);
      for (const auto& b : append_bundles) model = captain::append(model, captain::load_bundle(b), cfg);
      captain::save_model(model, append_model);
      print({{"model", append_model}, {"rows", model.rows()}}, pretty);
    } else if (*info) {
      const auto model = captain::load_model(info_model);
      json blocks = json::object();
      for (std::size_t k = 0; k < captain::kBlockCount; ++k) {
        blocks[captain::block_names()[k]] = captain::kBlockDims[k];
      }
      print({{"rows", model.rows()},
             {"version", captain::kModelVersion},
             {"blocks", blocks},
             {"ids", model.ids()}},
            pretty);
    } else if (*query) {
      const auto model = captain::load_model(query_model);
      captain::FeatureRecord q;
      if (!query_image.empty()) {
        const auto row = model.find(query_image);
        if (!row) throw captain::Error(captain::ErrorCode::UnknownId, "image '" + query_image + "'");
        q = model.record(*row);
      } else if (!query_bundle.empty()) {
        q = captain::decompose(captain::load_bundle(query_bundle), make_config(query_opt));
      } else {
        throw captain::Error(captain::ErrorCode::InvalidArgument, "give --bundle or --image-id");
      }
      const auto w = weights_from(query_weights);
      print(captain::ranking_to_json(captain::query(model, q, w, query_top), w), pretty);
    } else if (*match) {
      const auto model = captain::load_model(match_model);
      json style;
      std::ifstream(match_style) >> style;
      std::vector<std::string> preferred, ignored;
      if (style.is_array()) {
        preferred = style.get<std::vector<std::string>>();
      } else {
        preferred = style.at("preferred").get<std::vector<std::string>>();
        ignored = style.value("ignored", std::vector<std::string>{});
      }
      const auto cfg = make_config(match_opt);
      std::vector<captain::FeatureRecord> shots;
      for (const auto& dir : bundle_dirs(match_shots)) {
        shots.push_back(captain::decompose(captain::load_bundle(dir), cfg));
      }
      const auto outcome = captain::match_shots(model, preferred, ignored, shots,
                                                weights_from(match_weights), match_q);
      print(captain::match_to_json(outcome), pretty);
    } else if (*dec) {
      const auto cfg = make_config(dec_opt);
      const auto d = captain::decompose_detailed(captain::load_bundle(dec_bundle), cfg);
      auto out = captain::record_summary(d.record, cfg.fusion.class_map, nullptr);
      out["genre"] = std::string(captain::to_string(d.genre));
      out["person_present"] = d.person_present;
      if (dec_full) out["record"] = captain::record_to_json(d.record);
      print(out, pretty);
    } else if (*train) {
      const auto cfg = make_config(train_opt);
      const auto data = labeled_features(train_corpus, cfg);
      const auto model = captain::train_mcmsvm(data.samples, train_params);
      captain::save_svm(model, fs::path(train_out));
      std::size_t correct = 0;
      for (const auto& s : data.samples) correct += model.predict(s.features) == s.category;
      print({{"model", train_out},
             {"samples", data.samples.size()},
             {"unlabeled_skipped", data.skipped},
             {"classifiers", model.classifiers.size()},
             {"training_accuracy", static_cast<double>(correct) / data.samples.size()}},
            pretty);
    } else if (*eval) {
      const auto cfg = make_config(eval_opt);
      const auto data = labeled_features(eval_corpus, cfg);
      std::vector<std::vector<int>> confusion(captain::kCategoryCount,
                                              std::vector<int>(captain::kCategoryCount, 0));
      std::size_t correct = 0;
      for (const auto& s : data.samples) {
        const int p = cfg.svm->predict(s.features);
        ++confusion[static_cast<std::size_t>(s.category)][static_cast<std::size_t>(p)];
        correct += p == s.category;
      }
      print({{"samples", data.samples.size()},
             {"accuracy", data.samples.empty() ? 0.0 : static_cast<double>(correct) / data.samples.size()},
             {"labels", captain::category_names()},
             {"confusion", confusion}},
            pretty);
    } else if (*cluster) {
      const auto data = pose_features(cl_corpus);
      const auto clusters = captain::kmeans(data.features, cl_opt);
      const auto report = captain::cluster_report(clusters, data.features, data.ids, cl_top);
      if (!cl_out.empty()) std::ofstream(cl_out) << report.dump();
      print(report, pretty);
    } else if (*elbow) {
      const auto data = pose_features(el_corpus);
      const auto curve = captain::elbow_scan(data.features, std::min(el_kmax, data.features.rows()),
                                             el_restarts, el_seed);
      auto out = json::array();
      for (const auto& p : curve) {
        out.push_back({{"k", p.k}, {"distortion", p.distortion}, {"drop", p.drop}});
      }
      print({{"samples", data.features.rows()}, {"curve", out}}, pretty);
    } else if (*serve) {
      if (serve_model.empty()) {
        if (const char* env = std::getenv("CAPTAIN_MODEL")) serve_model = env;
      }
      std::optional<captain::CompositionModel> model;
      if (!serve_model.empty()) model = captain::load_model(serve_model);
      captain::ServiceConfig cfg;
      cfg.decompose = make_config(serve_opt);
      if (!serve_corpus.empty()) cfg.image_root = serve_corpus;
      if (!serve_snapshot.empty()) cfg.snapshot = fs::path(serve_snapshot);
      if (!serve_clusters.empty()) {
        json j;
        std::ifstream(serve_clusters) >> j;
        cfg.clusters = captain::clusters_from_json(j);
      }
      captain::Service service(std::move(model), std::move(cfg));
      httplib::Server server;
      captain::bind(server, service);
      std::cerr << "listening on " << serve_host << ":" << serve_port
                << (service.has_model() ? "" : " (no model loaded)") << "\n";
      if (!server.listen(serve_host, serve_port)) {
        throw captain::Error(captain::ErrorCode::IoError, "cannot bind " + serve_host + ":" +
                                                              std::to_string(serve_port));
      }
    }
  } catch (const captain::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
