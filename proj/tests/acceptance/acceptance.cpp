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

// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "scene_robust/core/binary_io.hpp"
#include "scene_robust/corruption/engine.hpp"
#include "scene_robust/dataset/manifest.hpp"
#include "scene_robust/image/codec.hpp"
#include "scene_robust/metrics/report.hpp"
#include "scene_robust/pipeline/caption_graphs.hpp"
#include "../unit/cooccurrence_oracle.hpp"
#include "../unit/gin_oracle.hpp"
#include "../unit/noise_oracles.hpp"
#include "../unit/test_images.hpp"
#include "../unit/xor_fusion.hpp"

namespace sr = scene_robust;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string kFixture = SCENE_ROBUST_FIXTURE_DIR "/mini_places";

struct Outcome {
  bool pass = true;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double x, int prec = 3) {
  std::ostringstream s;
  s.precision(prec);
  s << x;
  return s.str();
}

// Scratch space shared by the CLI-driven criteria.
fs::path work_dir() {
  static const fs::path p = [] {
    const auto d = fs::temp_directory_path() / ("scene_robust_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return p;
}

std::string work(const std::string& rel) { return (work_dir() / rel).string(); }

int cli(const std::string& args, const std::string& log) {
  const std::string cmd = std::string(SCENE_ROBUST_CLI) + " " + args + " >" + work(log + ".out") + " 2>" + work(log + ".err");
  const int status = std::system(cmd.c_str());
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0)
    throw std::runtime_error("`scene_robust " + args.substr(0, args.find(' ')) + "` failed: " + sr::read_file_text(work(log + ".err")));
  return 0;
}

// Relative path -> bytes for every regular file under `root`.
std::map<std::string, std::vector<std::uint8_t>> tree(const fs::path& root) {
  std::map<std::string, std::vector<std::uint8_t>> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = sr::read_file_bytes(e.path().string());
  return out;
}

std::string tree_diff(const fs::path& a, const fs::path& b) {
  const auto ta = tree(a), tb = tree(b);
  if (ta.size() != tb.size()) return std::to_string(ta.size()) + " vs " + std::to_string(tb.size()) + " files";
  for (const auto& [k, v] : ta) {
    const auto it = tb.find(k);
    if (it == tb.end()) return k + " missing";
    if (it->second != v) return k + " differs";
  }
  return "";
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// ---------------------------------------------------------------------------

Outcome gradient_correctness() {
  const auto t0 = Clock::now();
  const auto r = sr::testing::check_gradients(100, 1e-4);
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = r.failures.empty() && r.configs >= 100 && secs < 60;
  o.detail = std::to_string(r.configs) + " configs, " + std::to_string(r.elements) + " elements, worst rel err " +
             fmt(r.worst) + ", " + fmt(secs) + " s";
  if (!r.failures.empty()) o.detail += "; first failure: " + r.failures.front();
  return o;
}

Outcome permutation_invariance() {
  const sr::GinModelConfig cfg;
  const auto model = sr::GinEncoder::initialize(cfg, 21);
  double worst = 0;
  int checked = 0;
  auto compare = [&](const sr::Graph& g, const sr::EncoderOutput& ref) {
    const auto out = model.forward(g);
    worst = std::max({worst, max_abs_diff(out.descriptor, ref.descriptor), max_abs_diff(out.logits, ref.logits)});
    ++checked;
  };

  // Every ordering of a 6-node random graph.
  sr::Philox rng(21);
  const auto small = sr::testing::random_graph(rng, 6, cfg.input_dim, 14);
  const auto small_ref = model.forward(small);
  std::vector<int> perm(6);
  std::iota(perm.begin(), perm.end(), 0);
  do compare(sr::testing::permute(small, perm), small_ref);
  while (std::next_permutation(perm.begin(), perm.end()));

  // Caption graphs built from the fixture: every ordering of six word nodes,
  // then random relabellings of all nodes.
  const auto places = sr::ClassMap::load(sr::default_class_map_path());
  const auto captions = sr::load_captions(kFixture + "/captions.jsonl");
  const sr::GraphContext ctx(places, sr::mine_cooccurrence(captions), sr::EmbeddingTable::load(kFixture + "/embeddings.txt", 3));
  std::vector<std::string> words;
  for (std::size_t i = 0; i < ctx.stats().vocab.size() && words.size() < 6; ++i) {
    const auto& w = ctx.stats().vocab.word(i);
    if (sr::preprocess_caption(w) == std::vector<std::string>{w}) words.push_back(w);
  }
  std::string text;
  for (const auto& w : words) text += w + " ";
  const auto kg = ctx.build(text);
  if (!kg || words.size() != 6) return {false, "could not assemble a six-word caption from the fixture"};
  const auto kg_ref = model.forward(*kg);
  std::vector<int> full(static_cast<std::size_t>(kg->num_nodes));
  std::iota(full.begin(), full.end(), 0);
  do compare(sr::testing::permute(*kg, full), kg_ref);
  while (std::next_permutation(full.begin(), full.begin() + 6));

  std::mt19937 shuffler(21);
  for (std::size_t i = 0, done = 0; done < 100; ++i) {
    const auto g = ctx.build(captions[(1 + 3 * i) % captions.size()].caption);
    if (!g) continue;
    std::vector<int> p(static_cast<std::size_t>(g->num_nodes));
    std::iota(p.begin(), p.end(), 0);
    std::shuffle(p.begin(), p.end(), shuffler);
    compare(sr::testing::permute(*g, p), model.forward(*g));
    ++done;
  }
  return {worst < 1e-6 && checked == 720 + 720 + 100,
          std::to_string(checked) + " permuted forwards (720 small, 720 word-node, random full), max |diff| " + fmt(worst)};
}

Outcome cooccurrence_oracle() {
  sr::Philox rng(sr::SeedHasher(7).add("acceptance/cooccurrence").value());
  std::uint64_t cells = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int vocab = 1 + static_cast<int>(rng() % 20);
    const int scenes = 1 + static_cast<int>(rng() % 6);
    const int window = 2 + static_cast<int>(rng() % 4);
    std::vector<sr::testing::TokenCaption> corpus;
    sr::CooccurrenceCounter counter(window, static_cast<std::size_t>(scenes));
    const int n = static_cast<int>(rng() % 41);
    for (int i = 0; i < n; ++i) {
      sr::testing::TokenCaption c;
      c.label = static_cast<int>(rng() % static_cast<std::uint32_t>(scenes));
      const int len = static_cast<int>(rng() % 9);
      for (int k = 0; k < len; ++k) c.words.push_back("w" + std::to_string(rng() % static_cast<std::uint32_t>(vocab)));
      counter.add(c.words, c.label);
      corpus.push_back(std::move(c));
    }
    const auto s = counter.finalize();
    for (std::size_t i = 0; i < s.vocab.size(); ++i) {
      const auto& wi = s.vocab.word(i);
      for (int y = 0; y < scenes; ++y, ++cells)
        if (s.scene(i, static_cast<std::size_t>(y)) != sr::testing::brute_scene_count(corpus, wi, y))
          return {false, "trial " + std::to_string(trial) + ": scene count mismatch for " + wi};
      for (std::size_t j = 0; j < s.vocab.size(); ++j, ++cells)
        if (s.pair(i, j) != sr::testing::brute_pair_count(corpus, wi, s.vocab.word(j), window))
          return {false, "trial " + std::to_string(trial) + ": pair count mismatch for " + wi + "/" + s.vocab.word(j)};
    }
  }

  // Row sums over the fixture corpus mined against the full class list.
  const auto stats = sr::mine_cooccurrence(sr::load_captions(kFixture + "/captions.jsonl"));
  double worst = 0;
  for (std::size_t i = 0; i < stats.vocab.size(); ++i) {
    const auto w = sr::edge_weights(stats, stats.vocab.word(i));
    worst = std::max(worst, std::abs(std::accumulate(w.begin(), w.end(), 0.0) - 1.0));
  }
  worst = std::max(worst, [&] {
    const auto w = sr::edge_weights(stats, "unseen_word");
    return std::abs(std::accumulate(w.begin(), w.end(), 0.0) - 1.0);
  }());
  return {worst <= 1e-9, "1000 corpora, " + std::to_string(cells) + " cells exact; " + std::to_string(stats.vocab.size()) +
                             " fixture rows, max |row sum - 1| " + fmt(worst)};
}

Outcome corruption_determinism() {
  const std::string base = "corrupt --manifest " + kFixture + "/manifest.jsonl --images " + kFixture + "/images --seed 11 ";
  cli(base + "--jobs 1 --out " + work("bench_a"), "corrupt_a");
  cli(base + "--jobs 1 --out " + work("bench_b"), "corrupt_b");
  cli(base + "--jobs 8 --out " + work("bench_c"), "corrupt_c");
  const auto bench = sr::DatasetManifest::load(work("bench_a/manifest.jsonl"));
  std::set<std::pair<int, int>> subsets;
  for (const auto& r : bench.records)
    subsets.insert(r.corruption ? std::pair{static_cast<int>(r.corruption->kind), r.corruption->level} : std::pair{-1, 0});
  const auto same_seed = tree_diff(work("bench_a"), work("bench_b"));
  const auto jobs = tree_diff(work("bench_a"), work("bench_c"));
  Outcome o;
  o.pass = subsets.size() == 76 && bench.records.size() == 76 * 80 && same_seed.empty() && jobs.empty();
  o.detail = std::to_string(subsets.size()) + " subsets, " + std::to_string(bench.records.size()) + " entries, " +
             std::to_string(tree(work("bench_a")).size()) + " files; rerun: " + (same_seed.empty() ? "identical" : same_seed) +
             "; jobs 1 vs 8: " + (jobs.empty() ? "identical" : jobs);
  return o;
}

Outcome corruption_statistics() {
  const auto params = sr::SeverityParams::load(SCENE_ROBUST_DATA_DIR "/severity.cfg");
  auto sample_std = [](const sr::ImageBuffer& img) {
    double s = 0, s2 = 0;
    for (auto v : img.data()) {
      s += v;
      s2 += static_cast<double>(v) * v;
    }
    const double n = static_cast<double>(img.data().size());
    return std::sqrt(s2 / n - (s / n) * (s / n));
  };
  const auto gray = sr::testing::uniform_image("gray", 256, 256, 128);
  double worst = 0;
  for (int l = 1; l <= 5; ++l) {
    const sr::SeverityLevel lv(l);
    const std::pair<sr::CorruptionKind, double> cases[] = {
        {sr::CorruptionKind::gaussian_noise, sr::testing::clipped_gaussian_std(128, params.row(sr::CorruptionKind::gaussian_noise, lv).get("sigma"))},
        {sr::CorruptionKind::shot_noise, sr::testing::shot_std(128, params.row(sr::CorruptionKind::shot_noise, lv).get("photons"))},
        {sr::CorruptionKind::impulse_noise, sr::testing::impulse_std(128, params.row(sr::CorruptionKind::impulse_noise, lv).get("amount"))}};
    for (const auto& [kind, expected] : cases) {
      const double got = sample_std(sr::apply_corruption(gray, kind, lv, 7, params));
      worst = std::max(worst, std::abs(got - expected) / expected);
    }
  }

  // Mean absolute deviation on real fixture images.
  const auto manifest = sr::DatasetManifest::load(kFixture + "/manifest.jsonl");
  int images = 0, violations = 0;
  for (const auto& r : manifest.records) {
    if (images == 12) break;
    if (r.split != sr::Split::test) continue;
    const auto img = sr::codec::read_image(kFixture + "/images/" + r.relative_path, r.image_id);
    ++images;
    for (auto k : {sr::CorruptionKind::gaussian_noise, sr::CorruptionKind::shot_noise, sr::CorruptionKind::impulse_noise}) {
      double prev = 0;
      for (int l = 1; l <= 5; ++l) {
        const auto out = sr::apply_corruption(img, k, sr::SeverityLevel(l), sr::derive_seed(0, r.image_id, k, sr::SeverityLevel(l)), params);
        double mad = 0;
        for (std::size_t i = 0; i < img.data().size(); ++i) mad += std::abs(int(img.data()[i]) - int(out.data()[i]));
        mad /= static_cast<double>(img.data().size());
        violations += mad < prev;
        prev = mad;
      }
    }
  }
  return {worst < 0.05 && violations == 0 && images >= 10,
          "15 noise cells, max relative std error " + fmt(100 * worst) + "%; MAD monotone on " + std::to_string(images) +
              " fixture images, " + std::to_string(violations) + " violations"};
}

Outcome metric_exactness() {
  std::vector<std::string> bad;
  auto table = [](double clean, std::array<double, 5> errs) {
    sr::ErrorTable t;
    t.model = "m";
    t.clean_error = clean;
    for (auto& row : t.grid) row = errs;
    return t;
  };
  const auto model = table(.05, {.10, .20, .30, .40, .50});
  const auto base = table(.10, {.20, .40, .60, .80, 1.00});
  // Oracle: the formulas evaluated directly in the order they are written.
  const double ce_ref = 100 * ((((.10 + .20) + .30) + .40) + .50) / ((((.20 + .40) + .60) + .80) + 1.00);
  const double rce_ref = 100 * (((((.10 - .05) + (.20 - .05)) + (.30 - .05)) + (.40 - .05)) + (.50 - .05)) /
                         (((((.20 - .10) + (.40 - .10)) + (.60 - .10)) + (.80 - .10)) + (1.00 - .10));
  auto ulps = [](double a, double b) { return std::abs(a - b) / (std::nextafter(std::abs(b), INFINITY) - std::abs(b)); };
  std::vector<double> ces;
  for (auto c : sr::kAllCorruptions) {
    const double ce = sr::corruption_error(model, base, c), rce = sr::relative_corruption_error(model, base, c);
    if (ulps(ce, ce_ref) > 4 || std::abs(ce - 50) > 1e-12) bad.push_back("CE " + fmt(ce, 17));
    if (ulps(rce, rce_ref) > 4 || std::abs(rce - 50) > 1e-12) bad.push_back("RCE " + fmt(rce, 17));
    ces.push_back(ce);
    if (sr::relative_corruption_error(table(.05, {.05, .05, .05, .05, .05}), base, c) != 0) bad.push_back("no-degradation RCE");
  }
  std::vector<double> v(15, 50.0);
  v[9] = 200;
  if (sr::mean_ce(v) != 60.0) bad.push_back("mCE " + fmt(sr::mean_ce(v), 17));

  sr::Philox rng(11);
  int self = 0;
  for (int trial = 0; trial < 200; ++trial) {
    sr::ErrorTable t;
    t.model = "t";
    t.clean_error = rng.uniform(0.05, 0.3);
    for (auto& row : t.grid)
      for (auto& e : row) e = rng.uniform(0.31, 0.95);
    for (auto c : sr::kAllCorruptions) {
      ++self;
      if (sr::corruption_error(t, t, c) != 100.0 || sr::relative_corruption_error(t, t, c) != 100.0) bad.push_back("self-normalisation");
    }
  }
  const std::vector<std::vector<int>> ranked{{0, 1, 2, 3}, {0, 1, 2, 3}, {0, 1, 2, 3}};
  if (sr::topk_accuracy(ranked, {0, 3, 1}, 3) != 2.0 / 3.0) bad.push_back("top-3");
  return {bad.empty(), bad.empty() ? "CE = RCE = 50 on all 15 corruptions, mCE 60, " + std::to_string(self) +
                                         " self-normalised cells = 100 exactly, top-3 = 2/3"
                                   : bad.front() + " (" + std::to_string(bad.size()) + " mismatches)"};
}

Outcome fusion_separability() {
  const auto t0 = Clock::now();
  Outcome o;
  std::string per_seed;
  for (std::uint64_t s : {1, 2, 3}) {
    const auto acc = sr::testing::xor_accuracies(10 * s + 1, 10 * s + 2, s);
    o.pass = o.pass && acc[0] >= 95 && acc[1] <= 65 && acc[2] <= 65;
    per_seed += (per_seed.empty() ? "" : "; ") + std::string("seed ") + std::to_string(s) + ": fusion " + fmt(acc[0]) +
                "% high " + fmt(acc[1]) + "% low " + fmt(acc[2]) + "%";
  }
  const double secs = seconds_since(t0);
  o.pass = o.pass && secs < 120;
  o.detail = per_seed + ", " + fmt(secs) + " s";
  return o;
}

// mini-places training flags shared by the degradation and reproducibility runs.
std::string graph_flags() {
  return "--captions " + kFixture + "/captions.jsonl --stats " + work("stats.bin") + " --embeddings " + kFixture +
         "/embeddings.txt --manifest " + kFixture + "/manifest.jsonl ";
}

void train_models(const std::string& tag) {
  const std::string high = "train-high " + graph_flags() + "--epochs 15 --batch-size 16 --lr 5e-3 --hidden-dim 32 --seed 0 --out " +
                           work("high_" + tag + ".ckpt");
  cli(high, "high_" + tag);
  const std::string fusion = "train-fusion " + graph_flags() + "--high " + work("high_" + tag + ".ckpt") + " --features " +
                             kFixture + "/features.p148feat --epochs 30 --batch-size 16 --lr 1e-2 --weight-decay 0 --seed 0 --out " +
                             work("fusion_" + tag + ".ckpt");
  cli(fusion, "fusion_" + tag);
}

void mine_stats() {
  if (!fs::exists(work("stats.bin")))
    cli("mine --captions " + kFixture + "/captions.jsonl --manifest " + kFixture + "/manifest.jsonl --out " + work("stats.bin"), "mine");
}

Outcome reproducibility() {
  mine_stats();
  train_models("a");
  train_models("b");
  const bool high = sr::read_file_bytes(work("high_a.ckpt")) == sr::read_file_bytes(work("high_b.ckpt"));
  const bool fusion = sr::read_file_bytes(work("fusion_a.ckpt")) == sr::read_file_bytes(work("fusion_b.ckpt"));
  return {high && fusion, std::string("train-high checkpoints ") + (high ? "identical" : "differ") + ", train-fusion checkpoints " +
                              (fusion ? "identical" : "differ")};
}

Outcome degradation() {
  mine_stats();
  if (!fs::exists(work("fusion_a.ckpt"))) train_models("a");
  if (!fs::exists(work("bench_a/manifest.jsonl")))
    cli("corrupt --manifest " + kFixture + "/manifest.jsonl --images " + kFixture + "/images --seed 11 --out " + work("bench_a"),
        "corrupt_a");
  cli("evaluate --model " + work("fusion_a.ckpt") + " --benchmark " + work("bench_a/manifest.jsonl") + " --captions " + kFixture +
          "/captions.jsonl --stats " + work("stats.bin") + " --embeddings " + kFixture + "/embeddings.txt --out " + work("eval"),
      "evaluate");
  const auto report = json::parse(sr::read_file_text(work("eval/report.json")));
  const auto& g = report["accuracy"]["corrupted"]["gaussian_noise"];
  std::string levels;
  for (int l = 0; l < 5; ++l) levels += (l ? " " : "") + fmt(100 * g[l]["top1"].get<double>());
  const double s1 = g[0]["top1"], s5 = g[4]["top1"];
  return {s5 < s1, "fusion top-1 clean " + fmt(100 * report["accuracy"]["clean"]["top1"].get<double>()) +
                       "%, gaussian_noise s1..s5: " + levels};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"gradient correctness", gradient_correctness},
      {"permutation invariance", permutation_invariance},
      {"co-occurrence oracle", cooccurrence_oracle},
      {"corruption determinism", corruption_determinism},
      {"corruption statistics", corruption_statistics},
      {"metric exactness", metric_exactness},
      {"fusion separability", fusion_separability},
      {"end-to-end reproducibility", reproducibility},
      {"degradation trend", degradation},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s  %-28s %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  fs::remove_all(work_dir());
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
