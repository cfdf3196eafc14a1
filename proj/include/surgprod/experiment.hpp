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

#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "surgprod/backbone.hpp"
#include "surgprod/dataset.hpp"
#include "surgprod/errors.hpp"
#include "surgprod/io.hpp"
#include "surgprod/metrics.hpp"
#include "surgprod/model.hpp"
#include "surgprod/training.hpp"

namespace surgprod {

/// Everything needed to reproduce one run.
struct RunManifest {
  std::uint64_t seed = 0;
  std::string scale = "pgs";
  ModelConfig model;
  TrainConfig train;
  DatasetConfig dataset;
  SynthGeometry geometry;
  double tau = 0.7;
  metrics::Protocol protocol = metrics::Protocol::kPerWindowAcrossVideos;
  /// Optional pre-built dataset manifest; synthesized from `dataset` if empty.
  std::string dataset_path;
  std::filesystem::path out_dir = "runs/default";
  /// Test videos whose SCA attention (at w = w_max) is exported.
  int attention_videos = 2;

  /// Copies scale-derived and seed-derived values into the sub-configs:
  /// model.num_classes, model.w_max, model.init_seed, train.seed, train.tau.
  void Resolve();
  void Validate() const;
  nlohmann::json ToJson() const;
  static RunManifest FromJson(const nlohmann::json& j);
  /// FNV-1a of the canonical JSON, hex encoded.
  std::string Hash() const;
};

struct RunResult {
  metrics::EvalReport report;
  TrainResult training;
  /// Artifact name -> path; every entry exists on disk.
  std::vector<std::pair<std::string, std::filesystem::path>> artifacts;
};

/// Raised when a stage of RunExperiment fails; wraps the original message
/// with the stage name and manifest hash. `code` is the CLI exit code of the
/// underlying error.
class StageError : public Error {
 public:
  StageError(const std::string& what, int code) : Error(what), code_(code) {}
  int code() const { return code_; }

 private:
  int code_;
};

/// Process exit code for an exception (2 config, 3 data, 4 numerical).
int ExitCodeFor(const std::exception& e);

/// Synthesize/load data, split, train, evaluate on the test split for every
/// w in [1, w_max], and write all artifacts under manifest.out_dir.
RunResult RunExperiment(const RunManifest& manifest);

/// First half of RunExperiment: data, split, training, checkpoint, log.
/// Returns the trained model.
std::unique_ptr<SurgProdModel> TrainRun(const RunManifest& manifest, RunResult& result);

/// Second half: predictions, reports and (GL-SCA) attention exports for a
/// trained model. Deterministic for fixed weights.
void EvalRun(const RunManifest& manifest, const SurgProdModel& model, RunResult& result);

/// Writes manifest.json and artifacts.json after checking every artifact
/// exists.
void FinalizeRun(const RunManifest& manifest, RunResult& result);

enum class AblationDimension { kT, kK, kSca };
AblationDimension ParseAblationDimension(const std::string& name);
std::string AblationDimensionName(AblationDimension d);

struct AblationRow {
  std::string value;
  std::filesystem::path run_dir;
  metrics::EvalReport report;
};

/// Manifest for one value of a sweep (out_dir = base/ablate_<dim>_<value>).
RunManifest AblationManifest(const RunManifest& base, AblationDimension dim,
                             const std::string& value);

/// One run per value, plus <base.out_dir>/ablation_<dim>.csv.
std::vector<AblationRow> Ablate(AblationDimension dim, const std::vector<std::string>& values,
                                const RunManifest& base);

/// Collects report.csv files found one level below `dir` into
/// <dir>/summary.csv; returns the number of runs found.
int CollectReports(const std::filesystem::path& dir);

}  // namespace surgprod
