// Copyright 2026 The scene-robust Authors.
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

// scene_robust: corrupted-benchmark generation, caption-graph training, fused
// scene classification and robustness evaluation.
//
// Exit codes: 0 success, 1 usage, 2 data error, 3 numeric failure.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "scene_robust/caption/cooccurrence.hpp"
#include "scene_robust/caption/embeddings.hpp"
#include "scene_robust/caption/records.hpp"
#include "scene_robust/core/binary_io.hpp"
#include "scene_robust/core/error.hpp"
#include "scene_robust/core/parallel.hpp"
#include "scene_robust/corruption/severity.hpp"
#include "scene_robust/dataset/benchmark.hpp"
#include "scene_robust/dataset/class_map.hpp"
#include "scene_robust/dataset/manifest.hpp"
#include "scene_robust/fusion/features.hpp"
#include "scene_robust/fusion/fusion.hpp"
#include "scene_robust/fusion/handcrafted.hpp"
#include "scene_robust/gin/train.hpp"
#include "scene_robust/metrics/precision_recall.hpp"
#include "scene_robust/metrics/report.hpp"
#include "scene_robust/pipeline/caption_graphs.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace scene_robust;

namespace {

constexpr const char* kVersion = "0.1.0";

struct Common {
  std::uint64_t seed = 0;
  int jobs = 1;
  std::string class_map = default_class_map_path();
  std::string run_json;  // default: <primary output>.run.json
};

struct GraphInputs {
  std::string captions, stats, embeddings;
  bool word_word_edges = false;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--seed", c.seed, "global seed; all randomness derives from it")->capture_default_str();
  cmd->add_option("--jobs", c.jobs, "worker threads; never changes outputs")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--class-map", c.class_map, "148-class CSV (label_id,class_name)")->capture_default_str();
  cmd->add_option("--run-json", c.run_json, "where to write run metadata");
}

void add_graph_inputs(CLI::App* cmd, GraphInputs& g, bool with_edges_flag) {
  cmd->add_option("--captions", g.captions, "caption JSON-lines file")->required();
  cmd->add_option("--stats", g.stats, "co-occurrence statistics from `mine`")->required();
  cmd->add_option("--embeddings", g.embeddings, "GloVe-format 50-d word vectors")->required();
  if (with_edges_flag) cmd->add_flag("--word-word-edges", g.word_word_edges, "add word-to-word co-occurrence edges");
}

void write_run_json(const Common& c, const std::string& primary_output, const std::string& command, json config,
                    json inputs) {
  const std::string path = c.run_json.empty() ? primary_output + ".run.json" : c.run_json;
  // jobs is deliberately absent: it cannot change any output byte.
  const json run{{"command", command}, {"version", kVersion}, {"seed", c.seed}, {"config", std::move(config)},
                 {"inputs", std::move(inputs)}};
  write_file_atomic(path, run.dump(2) + "\n");
}

/// Graph settings travel inside checkpoints so later stages rebuild the same
/// graphs the encoder was trained on.
json graph_settings(const GraphInputs& g, std::uint64_t fallback_seed) {
  return {{"fallback_seed", fallback_seed}, {"word_word_edges", g.word_word_edges}};
}

GraphContext make_context(const ClassMap& classes, const GraphInputs& g, const json& settings) {
  GraphOptions opts;
  opts.word_word_edges = settings.at("word_word_edges").get<bool>();
  return GraphContext(classes, CoOccurrenceStats::load(g.stats),
                      EmbeddingTable::load(g.embeddings, settings.at("fallback_seed").get<std::uint64_t>()), opts);
}

json graph_input_hashes(const Common& c, const GraphInputs& g) {
  return {{"captions", file_hash(g.captions)}, {"stats", file_hash(g.stats)}, {"embeddings", file_hash(g.embeddings)},
          {"class_map", file_hash(c.class_map)}};
}

/// Samples for one split; every image must have a caption line.
std::vector<FusionSample> samples_for(const std::vector<ManifestRecord>& records, const CaptionGraphs& graphs) {
  std::vector<FusionSample> out;
  std::vector<std::string> missing;
  for (const auto& r : records) {
    if (!graphs.has_caption(r.image_id)) missing.push_back(r.image_id);
    out.push_back({r.image_id, graphs.find(r.image_id), r.label_id});
  }
  if (!missing.empty()) {
    std::string list;
    for (std::size_t i = 0; i < missing.size() && i < 20; ++i) list += (i ? ", " : "") + missing[i];
    throw InputError(std::to_string(missing.size()) + " image(s) have no caption: " + list);
  }
  return out;
}

/// Graph-bearing samples only; empty captions carry no signal for the encoder.
LabeledGraphs labeled_graphs(const std::vector<FusionSample>& samples) {
  LabeledGraphs out;
  for (const auto& s : samples)
    if (s.graph) {
      out.graphs.push_back(s.graph);
      out.labels.push_back(s.label);
    }
  return out;
}

void write_log(const std::string& path, const std::vector<EpochLog>& log) {
  if (path.empty()) return;
  std::string text;
  for (const auto& e : log) text += e.to_json().dump() + "\n";
  write_file_atomic(path, text);
}

TrainConfig train_config(int epochs, int batch, double lr, double wd, std::uint64_t seed) {
  TrainConfig tc;
  tc.epochs = epochs;
  tc.batch_size = batch;
  tc.learning_rate = lr;
  tc.weight_decay = wd;
  tc.seed = seed;
  return tc;
}

struct CorruptArgs {
  Common common;
  std::string manifest, images, out, severity_config = SCENE_ROBUST_DATA_DIR "/severity.cfg";
  bool no_resume = false;
};

int run_corrupt(const CorruptArgs& a) {
  const auto source = DatasetManifest::load(a.manifest);
  source.validate(ClassMap::load(a.common.class_map), a.manifest);
  const auto params = SeverityParams::load(a.severity_config);
  BenchmarkOptions opt;
  opt.global_seed = a.common.seed;
  opt.jobs = a.common.jobs;
  opt.resume = !a.no_resume;
  const std::string images = a.images.empty() ? fs::path(a.manifest).parent_path().string() : a.images;
  const auto r = generate_corrupted_benchmark(source, images, params, a.out, opt);
  std::cout << "benchmark: " << r.manifest.records.size() << " entries (" << r.written << " written, " << r.skipped
            << " kept) in " << a.out << "\n";
  return 0;
}

struct MineArgs {
  Common common;
  std::string captions, manifest, out;
  int window = kDefaultWindow;
};

int run_mine(const MineArgs& a) {
  const auto classes = ClassMap::load(a.common.class_map);
  auto records = load_captions(a.captions, classes.size());
  json inputs{{"captions", file_hash(a.captions)}, {"class_map", file_hash(a.common.class_map)}};
  if (!a.manifest.empty()) {
    // Mine the training split only, with labels taken from the manifest.
    const auto m = DatasetManifest::load(a.manifest);
    std::map<std::string, int> train;
    for (const auto& r : m.split(Split::train)) train[r.image_id] = r.label_id;
    std::vector<CaptionRecord> kept;
    for (auto& r : records)
      if (auto it = train.find(r.image_id); it != train.end()) {
        r.label_id = it->second;
        kept.push_back(std::move(r));
      }
    records = std::move(kept);
    inputs["manifest"] = file_hash(a.manifest);
  }
  if (records.empty()) throw InputError("no captions to mine");
  const auto stats = mine_cooccurrence(records, a.window, static_cast<std::size_t>(classes.size()));
  stats.save(a.out);
  write_run_json(a.common, a.out, "mine", {{"window", a.window}, {"captions_used", records.size()}}, inputs);
  std::cout << "mined " << records.size() << " captions, vocabulary " << stats.vocab.size() << " -> " << a.out << "\n";
  return 0;
}

struct BuildGraphArgs {
  Common common;
  std::string caption, stats, embeddings, out;
  bool word_word_edges = false;
};

int run_build_graph(const BuildGraphArgs& a) {
  const auto classes = ClassMap::load(a.common.class_map);
  GraphInputs g{"", a.stats, a.embeddings, a.word_word_edges};
  const auto ctx = make_context(classes, g, graph_settings(g, a.common.seed));
  const auto kg = ctx.build_knowledge(a.caption);
  json j{{"caption", a.caption}, {"words", kg ? kg->words : std::vector<std::string>{}}};
  if (!kg) {
    j["graph"] = nullptr;
  } else {
    json edges = json::array();
    for (const auto& e : kg->graph.edges)
      if (e.weight != 0) {
        const std::string dst = e.dst < kg->num_word_nodes() ? kg->words[static_cast<std::size_t>(e.dst)]
                                                            : classes.name(e.dst - kg->num_word_nodes());
        edges.push_back({{"src", kg->words[static_cast<std::size_t>(e.src)]}, {"dst", dst}, {"weight", e.weight}});
      }
    j["graph"] = {{"num_nodes", kg->graph.num_nodes}, {"word_nodes", kg->num_word_nodes()},
                  {"scene_nodes", kg->num_scenes}, {"edges_total", kg->graph.edges.size()}, {"nonzero_edges", edges}};
  }
  const std::string text = j.dump(2) + "\n";
  if (a.out.empty()) {
    std::cout << text;
  } else {
    write_file_atomic(a.out, text);
    write_run_json(a.common, a.out, "build-graph", {{"caption", a.caption}, {"word_word_edges", a.word_word_edges}},
                   {{"stats", file_hash(a.stats)}, {"embeddings", file_hash(a.embeddings)}});
  }
  return 0;
}

struct TrainArgs {
  Common common;
  GraphInputs graph;
  std::string manifest, out, log;
  int epochs = 15, batch = 64;
  double lr = 1e-4, wd = 6e-4;
};

struct TrainHighArgs : TrainArgs {
  GinModelConfig model;
};

int run_train_high(const TrainHighArgs& a) {
  const auto classes = ClassMap::load(a.common.class_map);
  const auto manifest = DatasetManifest::load(a.manifest);
  manifest.validate(classes, a.manifest);
  const json settings = graph_settings(a.graph, a.common.seed);
  const auto ctx = make_context(classes, a.graph, settings);
  const auto graphs = CaptionGraphs::build(load_captions(a.graph.captions, classes.size()), ctx);
  const auto train = samples_for(manifest.split(Split::train), graphs);
  const auto val = samples_for(manifest.split(Split::val), graphs);
  auto model_cfg = a.model;
  model_cfg.num_classes = classes.size();
  const auto tc = train_config(a.epochs, a.batch, a.lr, a.wd, a.common.seed);
  const auto lt = labeled_graphs(train), lv = labeled_graphs(val);
  std::cout << "train-high: " << lt.graphs.size() << " train / " << lv.graphs.size() << " val graphs ("
            << train.size() - lt.graphs.size() + val.size() - lv.graphs.size() << " empty captions skipped)\n";
  auto result = train_high_level(model_cfg, lt, lv, tc, &std::cout);
  json inputs = graph_input_hashes(a.common, a.graph);
  inputs["manifest"] = file_hash(a.manifest);
  json training{{"train", tc.to_json()}, {"graph", settings}, {"inputs", inputs}};
  result.model.to_checkpoint(training).save(a.out);
  write_log(a.log, result.log);
  write_run_json(a.common, a.out, "train-high", {{"model", model_cfg.to_json()}, {"train", tc.to_json()}}, inputs);
  return 0;
}

struct TrainFusionArgs : TrainArgs {
  std::string high, features, feature_source = kHandcraftedSource;
  std::vector<int> hidden_layers;
  bool high_only = false, low_only = false;
};

int run_train_fusion(const TrainFusionArgs& a) {
  const auto classes = ClassMap::load(a.common.class_map);
  const auto manifest = DatasetManifest::load(a.manifest);
  manifest.validate(classes, a.manifest);
  const auto high_ckpt = nn::Checkpoint::load(a.high);
  const auto high = GinEncoder::from_checkpoint(high_ckpt);
  if (high.config().num_classes != classes.size())
    throw InputError("encoder predicts " + std::to_string(high.config().num_classes) + " classes, class map has " +
                     std::to_string(classes.size()));
  const json settings = high_ckpt.metadata.at("training").at("graph");
  const auto ctx = make_context(classes, a.graph, settings);
  const auto graphs = CaptionGraphs::build(load_captions(a.graph.captions, classes.size()), ctx);
  const auto features = load_features(a.features, a.feature_source);
  FusionConfig fc;
  fc.hidden_layers = a.hidden_layers;
  fc.use_high = !a.low_only;
  fc.use_low = !a.high_only;
  const auto tc = train_config(a.epochs, a.batch, a.lr, a.wd, a.common.seed);
  const auto train = samples_for(manifest.split(Split::train), graphs);
  const auto val = samples_for(manifest.split(Split::val), graphs);
  auto result = train_fusion(high, train, val, features, fc, tc, &std::cout);
  json inputs = graph_input_hashes(a.common, a.graph);
  inputs["manifest"] = file_hash(a.manifest);
  inputs["high_checkpoint"] = file_hash(a.high);
  inputs["features"] = file_hash(a.features);
  const json training{{"train", tc.to_json()},   {"graph", settings},
                      {"inputs", inputs},        {"feature_source", a.feature_source},
                      {"high", high_ckpt.metadata.at("training")}};
  result.model.to_checkpoint(training).save(a.out);
  write_log(a.log, result.log);
  write_run_json(a.common, a.out, "train-fusion",
                 {{"fusion", result.model.head.config().to_json()}, {"train", tc.to_json()},
                  {"feature_source", a.feature_source}},
                 inputs);
  return 0;
}

struct EvaluateArgs {
  Common common;
  GraphInputs graph;
  std::string model, benchmark, baseline, features_dir, out = "eval";
  std::string name;
};

std::string subset_feature_file(const std::optional<CorruptionTag>& tag) {
  return tag ? std::string(to_string(tag->kind)) + "_s" + std::to_string(tag->level) + ".p148feat" : "clean.p148feat";
}

int run_evaluate(const EvaluateArgs& a) {
  const auto classes = ClassMap::load(a.common.class_map);
  const auto ckpt = nn::Checkpoint::load(a.model);
  const auto model = FusionModel::from_checkpoint(ckpt);
  const json& training = ckpt.metadata.at("training");
  const std::string trained_source = training.value("feature_source", "");
  if (a.features_dir.empty() && trained_source != kHandcraftedSource)
    throw InputError("model was trained on '" + trained_source +
                     "' features; pass --features-dir with per-subset feature files");
  const auto ctx = make_context(classes, a.graph, training.at("graph"));
  const auto graphs = CaptionGraphs::build(load_captions(a.graph.captions, classes.size()), ctx);
  const auto bench = DatasetManifest::load(a.benchmark);
  bench.validate(classes, a.benchmark);
  const fs::path bench_root = fs::path(a.benchmark).parent_path();

  // Group records by subset; captions are shared by every version of an image.
  std::map<std::string, std::vector<ManifestRecord>> subsets;
  for (const auto& r : bench.records) subsets[r.subset()].push_back(r);
  if (subsets.size() != static_cast<std::size_t>(kBenchmarkSubsets))
    throw InputError("benchmark has " + std::to_string(subsets.size()) + " subsets, expected " +
                     std::to_string(kBenchmarkSubsets));
  const auto& clean = subsets.at("clean");
  const auto samples = samples_for(clean, graphs);
  const auto descriptors = high_descriptors(model.high, samples);
  std::map<std::string, int> row_of;
  for (std::size_t i = 0; i < clean.size(); ++i) row_of[clean[i].image_id] = static_cast<int>(i);

  EvalReport report;
  report.model = a.name.empty() ? fs::path(a.model).stem().string() : a.name;
  for (const auto& [key, records] : subsets) {
    const auto tag = records.front().corruption;
    if (records.size() != clean.size()) throw InputError("subset " + key + " has a different image count than clean");
    // Rows follow the clean order so one descriptor matrix serves every subset.
    std::vector<const ManifestRecord*> ordered(clean.size(), nullptr);
    for (const auto& r : records) {
      auto it = row_of.find(r.image_id);
      if (it == row_of.end()) throw InputError("subset " + key + " has image " + r.image_id + " missing from clean");
      ordered[static_cast<std::size_t>(it->second)] = &r;
    }
    FeatureMap features;
    if (!a.features_dir.empty()) {
      features = load_features((fs::path(a.features_dir) / subset_feature_file(tag)).string(), trained_source);
    } else {
      std::vector<std::vector<float>> vecs(clean.size());
      parallel_for(clean.size(), a.common.jobs, [&](std::size_t i) {
        const auto& r = *ordered[i];
        vecs[i] = handcrafted_features(codec::read_image((bench_root / r.relative_path).string(), r.image_id));
      });
      for (std::size_t i = 0; i < clean.size(); ++i) features.vectors[clean[i].image_id] = std::move(vecs[i]);
    }
    const auto logits = model.head.logits(fuse_rows(descriptors, samples, features));
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    for (int r = 0; r < logits.rows; ++r) {
      rows.emplace_back(logits.row(r), logits.row(r) + logits.cols);
      labels.push_back(samples[static_cast<std::size_t>(r)].label);
    }
    const auto cell = AccuracyCell::from_ranked(rank_all(rows), labels);
    if (tag) {
      report.accuracy.at(tag->kind, tag->level) = cell;
    } else {
      report.accuracy.clean = cell;
      report.pr = pr_curve(logits, labels);
    }
  }
  const auto errors = report.accuracy.errors(report.model);
  json inputs = graph_input_hashes(a.common, a.graph);
  inputs["model"] = file_hash(a.model);
  inputs["benchmark"] = file_hash(a.benchmark);
  if (!a.baseline.empty()) {
    const auto baseline = ErrorTable::load(a.baseline);
    report.robustness = RobustnessScores::compute(errors, baseline);
    inputs["baseline"] = file_hash(a.baseline);
  }
  report.provenance = {{"inputs", inputs}, {"benchmark_seed", bench.seed}, {"feature_source", trained_source},
                       {"features", a.features_dir.empty() ? "computed" : "files"}};

  fs::create_directories(a.out);
  const fs::path out(a.out);
  write_file_atomic((out / "report.json").string(), report.to_json().dump(2) + "\n");
  write_file_atomic((out / "accuracy.csv").string(), report.accuracy_csv());
  write_file_atomic((out / "pr.csv").string(), report.pr_csv());
  write_file_atomic((out / "errors.json").string(), errors.to_json().dump(2) + "\n");
  Common c = a.common;
  if (c.run_json.empty()) c.run_json = (out / "run.json").string();
  write_run_json(c, "", "evaluate", {{"name", report.model}}, inputs);
  const auto disp = report.to_json().at("display");
  std::cout << report.model << ": clean top-1 " << disp.at("clean_top1").get<std::string>() << "%";
  if (report.robustness)
    std::cout << ", mCE " << disp.at("mce").get<std::string>() << ", mRCE " << disp.at("mrce").get<std::string>();
  std::cout << " -> " << (out / "report.json").string() << "\n";
  return 0;
}

struct ReportArgs {
  Common common;
  std::vector<std::string> reports;
  std::string out;
};

int run_report(const ReportArgs& a) {
  std::vector<json> docs;
  json inputs = json::object();
  for (const auto& p : a.reports) {
    try {
      docs.push_back(json::parse(read_file_text(p)));
    } catch (const json::exception& e) {
      throw FormatError(p + ": " + e.what());
    }
    inputs[p] = file_hash(p);
  }
  const auto table = comparison_markdown(docs);
  if (a.out.empty()) {
    std::cout << table;
  } else {
    write_file_atomic(a.out, table);
    write_run_json(a.common, a.out, "report", json::object(), inputs);
  }
  return 0;
}

std::string version_text() {
  std::string text = std::string("scene_robust ") + kVersion + "\n";
  try {
    text += "severity-config " + SeverityParams::load(SCENE_ROBUST_DATA_DIR "/severity.cfg").hash() + "\n";
    text += "class-map " + file_hash(default_class_map_path()) + "\n";
  } catch (const Error& e) {
    text += std::string("data files unavailable: ") + e.what() + "\n";
  }
  return text;
}

void add_train_options(CLI::App* cmd, TrainArgs& t) {
  cmd->add_option("--manifest", t.manifest, "dataset manifest with train/val splits")->required();
  cmd->add_option("--out", t.out, "checkpoint to write")->required();
  cmd->add_option("--log", t.log, "per-epoch JSON-lines log");
  cmd->add_option("--epochs", t.epochs, "passes over the train split")->capture_default_str();
  cmd->add_option("--batch-size", t.batch, "samples per optimizer step")->capture_default_str();
  cmd->add_option("--lr", t.lr, "AdamW learning rate")->capture_default_str();
  cmd->add_option("--weight-decay", t.wd, "AdamW decoupled weight decay")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust indoor scene recognition toolkit"};
  app.name("scene_robust");
  app.require_subcommand(1);
  app.set_version_flag("--version", version_text());
  app.set_config("--config", "", "TOML/INI defaults; one [section] per subcommand")->envname("SCENE_ROBUST_CONFIG");

  CorruptArgs corrupt;
  auto* c_corrupt = app.add_subcommand("corrupt", "generate the 76-subset corrupted benchmark from a test split");
  c_corrupt->add_option("--manifest", corrupt.manifest, "source dataset manifest")->required();
  c_corrupt->add_option("--images", corrupt.images, "image root (default: manifest directory)");
  c_corrupt->add_option("--out", corrupt.out, "benchmark output directory")->required();
  c_corrupt->add_option("--severity-config", corrupt.severity_config, "per-level corruption parameters")->capture_default_str();
  c_corrupt->add_flag("--no-resume", corrupt.no_resume, "regenerate files that already exist");
  add_common(c_corrupt, corrupt.common);

  MineArgs mine;
  auto* c_mine = app.add_subcommand("mine", "count word/scene co-occurrences in labeled captions");
  c_mine->add_option("--captions", mine.captions, "caption JSON-lines file")->required();
  c_mine->add_option("--manifest", mine.manifest, "restrict to this manifest's train split");
  c_mine->add_option("--window", mine.window, "word-pair window")->check(CLI::PositiveNumber)->capture_default_str();
  c_mine->add_option("--out", mine.out, "statistics file to write")->required();
  add_common(c_mine, mine.common);

  BuildGraphArgs bg;
  auto* c_bg = app.add_subcommand("build-graph", "show the knowledge graph of one caption");
  c_bg->add_option("--caption", bg.caption, "caption text")->required();
  c_bg->add_option("--stats", bg.stats, "co-occurrence statistics from `mine`")->required();
  c_bg->add_option("--embeddings", bg.embeddings, "GloVe-format 50-d word vectors")->required();
  c_bg->add_option("--out", bg.out, "JSON output (default: stdout)");
  c_bg->add_flag("--word-word-edges", bg.word_word_edges, "add word-to-word co-occurrence edges");
  add_common(c_bg, bg.common);

  TrainHighArgs th;
  auto* c_th = app.add_subcommand("train-high", "train the caption-graph encoder");
  add_graph_inputs(c_th, th.graph, true);
  add_train_options(c_th, th);
  c_th->add_option("--hidden-dim", th.model.hidden_dim, "width of each GIN block")->capture_default_str();
  c_th->add_option("--descriptor-dim", th.model.descriptor_dim, "size of the caption descriptor")->capture_default_str();
  c_th->add_option("--dropout", th.model.dropout_rate, "dropout before each readout")->capture_default_str();
  c_th->add_option("--epsilon", th.model.epsilon, "GIN self-weight epsilon")->capture_default_str();
  c_th->add_flag("--learn-epsilon", th.model.learn_epsilon, "train epsilon instead of fixing it");
  c_th->add_flag("!--no-descriptor-head", th.model.descriptor_head, "drop the auxiliary descriptor classifier");
  add_common(c_th, th.common);

  TrainFusionArgs tf;
  auto* c_tf = app.add_subcommand("train-fusion", "train the fusion head on a frozen encoder");
  add_graph_inputs(c_tf, tf.graph, false);
  add_train_options(c_tf, tf);
  c_tf->add_option("--high", tf.high, "checkpoint from train-high")->required();
  c_tf->add_option("--features", tf.features, "P148FEAT low-level features")->required();
  c_tf->add_option("--feature-source", tf.feature_source, "backbone tag of the features")->capture_default_str();
  c_tf->add_option("--hidden-layers", tf.hidden_layers, "hidden widths of the head (default: single linear)");
  auto* ho = c_tf->add_flag("--high-only", tf.high_only, "ablation: zero the low-level stream");
  c_tf->add_flag("--low-only", tf.low_only, "ablation: zero the high-level stream")->excludes(ho);
  add_common(c_tf, tf.common);

  EvaluateArgs ev;
  auto* c_ev = app.add_subcommand("evaluate", "score a fusion model on a corrupted benchmark");
  c_ev->add_option("--model", ev.model, "checkpoint from train-fusion")->required();
  c_ev->add_option("--benchmark", ev.benchmark, "benchmark manifest.jsonl from corrupt")->required();
  c_ev->add_option("--baseline", ev.baseline, "baseline ErrorTable JSON for CE/RCE");
  add_graph_inputs(c_ev, ev.graph, false);
  c_ev->add_option("--features-dir", ev.features_dir,
                   "clean.p148feat and <kind>_s<level>.p148feat (default: compute handcrafted features)");
  c_ev->add_option("--name", ev.name, "model name in the report (default: checkpoint stem)");
  c_ev->add_option("--out", ev.out, "output directory")->capture_default_str();
  add_common(c_ev, ev.common);

  ReportArgs rp;
  auto* c_rp = app.add_subcommand("report", "summarize evaluation reports in one table");
  c_rp->add_option("--reports", rp.reports, "report.json files from evaluate")->required();
  c_rp->add_option("--out", rp.out, "markdown output (default: stdout)");
  add_common(c_rp, rp.common);

  if (argc > 1 && argv[1][0] != '-' && !app.get_subcommand_no_throw(argv[1])) {
    std::cerr << "error: unknown subcommand '" << argv[1] << "'\n\n" << app.help();
    return 1;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help, --version
    std::cerr << "error: " << e.what() << "\n";
    std::cerr << "run '" << app.get_name() << " --help' for usage\n";
    return 1;
  }

  try {
    if (*c_corrupt) return run_corrupt(corrupt);
    if (*c_mine) return run_mine(mine);
    if (*c_bg) return run_build_graph(bg);
    if (*c_th) return run_train_high(th);
    if (*c_tf) return run_train_fusion(tf);
    if (*c_ev) return run_evaluate(ev);
    if (*c_rp) return run_report(rp);
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: malformed metadata: " << e.what() << "\n";
    return 2;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
