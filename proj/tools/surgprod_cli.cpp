/*
 * Copyright 2026 The surgprod Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Command-line front end: synth, split, train, eval, metrics, ablate, report
// and run (train + eval in one go).

#include <malloc.h>

#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "surgprod/config.hpp"
#include "surgprod/dataset.hpp"
#include "surgprod/errors.hpp"
#include "surgprod/experiment.hpp"
#include "surgprod/io.hpp"
#include "surgprod/metrics.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace surgprod;

namespace {

struct CommonFlags {
  std::optional<std::string> scale;
  std::optional<std::string> variant;
  std::optional<int> t;
  std::optional<int> k;
  std::optional<double> tau;
  std::optional<std::uint64_t> seed;
  std::optional<int> epochs;
  std::optional<std::string> protocol;
  std::optional<std::string> dataset;
  std::string config;
  std::string out;
};

void AddCommon(CLI::App* app, CommonFlags& f) {
  app->add_option("--scale", f.scale, "Difficulty scale")
      ->check(CLI::IsMember({"pgs", "s", "n", "PGS", "S", "N"}));
  app->add_option("--variant", f.variant, "Model variant")->check(CLI::IsMember({"g", "gl", "gl-sca"}));
  app->add_option("--t", f.t, "Frames per snapshot");
  app->add_option("--k", f.k, "Number of local snapshots");
  app->add_option("--tau", f.tau, "Confidence threshold (default 0.70)");
  app->add_option("--seed", f.seed, "Run seed");
  app->add_option("--epochs", f.epochs, "Training epochs; decay epochs keep their relative position");
  app->add_option("--protocol", f.protocol, "F1/QWK protocol: per-window or per-video");
  app->add_option("--dataset", f.dataset, "Existing dataset.jsonl (synthesized if absent)");
  app->add_option("--config", f.config, "JSON run manifest; all fields optional");
  app->add_option("--out", f.out, "Output directory");
}

json LoadJson(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config " + path + ": " + e.what());
  }
}

RunManifest BuildManifest(const CommonFlags& f) {
  RunManifest m = f.config.empty() ? RunManifest{} : RunManifest::FromJson(LoadJson(f.config));
  if (f.scale) m.scale = *f.scale;
  if (f.variant) m.model.variant = ParseVariant(*f.variant);
  if (f.t) m.model.t = *f.t;
  if (f.k) m.model.k = *f.k;
  if (f.tau) m.tau = *f.tau;
  if (f.seed) m.seed = *f.seed;
  if (f.epochs) m.train.RescaleEpochs(*f.epochs);
  if (f.protocol) m.protocol = metrics::ParseProtocol(*f.protocol);
  if (f.dataset) m.dataset_path = *f.dataset;
  if (!f.out.empty()) m.out_dir = f.out;
  return m;
}

void PrintReport(const metrics::EvalReport& r) {
  std::cout << std::fixed << std::setprecision(4) << "top1=" << r.top1 << " f1=" << r.f1
            << " qwk=" << r.qwk << " esv1=" << r.esv1 << " esv3=" << r.esv3 << " esv5=" << r.esv5
            << " meanES=" << r.mean_es << " (tau=" << r.tau
            << ", " << metrics::ProtocolName(r.protocol) << ")\n";
}

std::vector<std::string> SplitCommas(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  // Activations of a few hundred KB are allocated and freed on every layer
  // call; keep them on the heap instead of fresh mmaps.
  mallopt(M_MMAP_THRESHOLD, 256 << 20);
  mallopt(M_TRIM_THRESHOLD, 256 << 20);

  CLI::App app{"Early operative-difficulty prediction from partial video"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "Synthesize a planted-cue dataset manifest");
  std::string synth_config, synth_out = "data";
  std::optional<std::uint64_t> synth_seed;
  std::optional<int> synth_videos;
  bool synth_balanced = false;
  synth->add_option("--config", synth_config, "JSON dataset config");
  synth->add_option("--seed", synth_seed, "Dataset seed");
  synth->add_option("--videos", synth_videos, "Number of videos");
  synth->add_flag("--balanced", synth_balanced, "Uniform class priors");
  synth->add_option("--out", synth_out, "Output directory");

  // split
  auto* split = app.add_subcommand("split", "Stratified train/val/test split of a dataset");
  std::string split_dataset, split_scale = "pgs", split_out = ".";
  std::uint64_t split_seed = 0;
  split->add_option("--dataset", split_dataset, "dataset.jsonl")->required();
  split->add_option("--scale", split_scale, "Difficulty scale");
  split->add_option("--seed", split_seed, "Split seed");
  split->add_option("--out", split_out, "Output directory");

  CommonFlags train_flags, run_flags, eval_flags, ablate_flags;
  auto* train = app.add_subcommand("train", "Train a model; writes checkpoint and log");
  AddCommon(train, train_flags);
  auto* run = app.add_subcommand("run", "Train and evaluate in one go");
  AddCommon(run, run_flags);

  auto* eval = app.add_subcommand("eval", "Evaluate a trained run on its test split");
  std::string eval_run;
  AddCommon(eval, eval_flags);
  eval->add_option("--run", eval_run, "Run directory holding manifest.json and checkpoint.bin")
      ->required();

  auto* metric = app.add_subcommand("metrics", "Prediction streams to an evaluation report");
  std::string metric_streams, metric_out, metric_protocol = "per-window", metric_label = "";
  double metric_tau = 0.7;
  metric->add_option("--streams", metric_streams, "predictions.jsonl")->required();
  metric->add_option("--tau", metric_tau, "Confidence threshold");
  metric->add_option("--protocol", metric_protocol, "per-window or per-video");
  metric->add_option("--variant", metric_label, "Variant label for the report row");
  metric->add_option("--out", metric_out, "Write report CSVs here");

  auto* ablate = app.add_subcommand("ablate", "Sweep one dimension and tabulate meanES");
  std::string ablate_dim, ablate_values;
  AddCommon(ablate, ablate_flags);
  ablate->add_option("--dimension", ablate_dim, "t, k or sca")->required();
  ablate->add_option("--values", ablate_values, "Comma-separated values")->required();

  auto* report = app.add_subcommand("report", "Collect report.csv files under a directory");
  std::string report_dir;
  report->add_option("--out", report_dir, "Directory of runs")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*synth) {
      DatasetConfig config;
      if (!synth_config.empty()) FromJson(LoadJson(synth_config), config);
      if (synth_seed) config.seed = *synth_seed;
      if (synth_videos) config.n_videos = *synth_videos;
      if (synth_balanced) config.balanced = true;
      config.Validate();
      const auto records = SynthesizeDataset(config);
      fs::create_directories(synth_out);
      std::ofstream out(fs::path(synth_out) / "dataset.jsonl");
      WriteDatasetManifest(out, records);
      std::cout << "wrote " << records.size() << " videos to "
                << (fs::path(synth_out) / "dataset.jsonl").string() << "\n";
    } else if (*split) {
      std::ifstream in(split_dataset);
      if (!in) throw DataError("cannot open " + split_dataset);
      const auto records = ReadDatasetManifest(in);
      const std::string scale = GetScale(split_scale).name;
      const Split s = SplitForScale(records, scale, split_seed);
      const json j = {{"scale", scale}, {"train", s.train}, {"val", s.val}, {"test", s.test}};
      fs::create_directories(split_out);
      io::WriteTextFile(fs::path(split_out) / "split.json", j.dump(2) + "\n");
      std::cout << scale << ": train " << s.train.size() << ", val " << s.val.size() << ", test "
                << s.test.size() << "\n";
    } else if (*train) {
      const RunManifest m = BuildManifest(train_flags);
      RunResult result;
      TrainRun(m, result);
      FinalizeRun(m, result);
      const auto& tr = result.training;
      std::cout << "trained " << tr.log.size() << " epochs; best epoch " << tr.best_epoch
                << " (val meanES " << tr.best_val_mean_es << ") -> " << m.out_dir.string() << "\n";
    } else if (*run) {
      const RunManifest m = BuildManifest(run_flags);
      const RunResult result = RunExperiment(m);
      PrintReport(result.report);
    } else if (*eval) {
      const fs::path dir = eval_run;
      CommonFlags flags = eval_flags;
      if (flags.config.empty()) {
        if (!fs::exists(dir / "manifest.json")) {
          throw DataError("not a run directory (no manifest.json): " + dir.string());
        }
        flags.config = (dir / "manifest.json").string();
      }
      if (flags.out.empty()) flags.out = dir.string();
      const RunManifest m = BuildManifest(flags);
      const auto model = io::LoadCheckpoint(dir / "checkpoint.bin");
      RunResult result;
      EvalRun(m, *model, result);
      FinalizeRun(m, result);
      PrintReport(result.report);
    } else if (*metric) {
      std::ifstream in(metric_streams);
      if (!in) throw DataError("cannot open " + metric_streams);
      const auto streams = io::ReadStreams(in);
      if (streams.empty()) throw DataError("no prediction streams in " + metric_streams);
      const auto r = metrics::Evaluate(streams, metric_tau, metrics::ParseProtocol(metric_protocol));
      PrintReport(r);
      if (!metric_out.empty()) {
        const fs::path dir = metric_out;
        fs::create_directories(dir);
        std::ofstream rep(dir / "report.csv");
        io::WriteReportCsv(rep, {{streams.front().scale, metric_label, r}});
        std::ofstream pv(dir / "per_video.csv");
        io::WritePerVideoCsv(pv, r);
        std::ofstream pw(dir / "per_window.csv");
        io::WritePerWindowCsv(pw, r);
      }
    } else if (*ablate) {
      const RunManifest base = BuildManifest(ablate_flags);
      const auto dim = ParseAblationDimension(ablate_dim);
      const auto rows = Ablate(dim, SplitCommas(ablate_values), base);
      for (const auto& r : rows) {
        std::cout << AblationDimensionName(dim) << "=" << r.value << ": ";
        PrintReport(r.report);
      }
    } else if (*report) {
      const int n = CollectReports(report_dir);
      std::cout << "collected " << n << " reports into "
                << (fs::path(report_dir) / "summary.csv").string() << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return ExitCodeFor(e);
  }
  return 0;
}
