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

#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "fixtures.hpp"
#include "surgprod/config.hpp"
#include "surgprod/errors.hpp"
#include "surgprod/experiment.hpp"
#include "surgprod/io.hpp"

using namespace surgprod;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

fs::path Fresh(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("surgprod_exp_" + name);
  fs::remove_all(p);
  return p;
}

bool HasArtifact(const RunResult& r, const std::string& prefix) {
  for (const auto& [name, path] : r.artifacts) {
    if (name.rfind(prefix, 0) == 0) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("manifest json round trip and hash") {
  auto m = fixtures::TinyManifest("somewhere");
  m.model.aggregation = Aggregation::kLogits;
  m.protocol = metrics::Protocol::kPerVideo;
  const RunManifest back = RunManifest::FromJson(m.ToJson());
  CHECK(back.ToJson() == m.ToJson());
  CHECK(back.Hash() == m.Hash());
  m.seed = 1;
  CHECK(back.Hash() != m.Hash());
  CHECK_THROWS_AS(RunManifest::FromJson(json{{"sede", 1}}), ConfigError);
  CHECK_THROWS_AS(RunManifest::FromJson(json{{"model", {{"t", "eight"}}}}), ConfigError);
  CHECK_THROWS_AS(RunManifest::FromJson(json{{"model", {{"variant", "sca"}}}}), ConfigError);
}

TEST_CASE("sub-config json round trips") {
  ModelConfig mc;
  mc.variant = Variant::kGL;
  mc.share_local_encoders = false;
  ModelConfig mc2;
  FromJson(ToJson(mc), mc2);
  CHECK(ToJson(mc2) == ToJson(mc));
  TrainConfig tc;
  tc.lr_decay_epochs = {3, 7};
  tc.reduction = Reduction::kMean;
  TrainConfig tc2;
  FromJson(ToJson(tc), tc2);
  CHECK(ToJson(tc2) == ToJson(tc));
  DatasetConfig dc;
  dc.priors["s"] = {0.2, 0.3, 0.5};
  DatasetConfig dc2;
  FromJson(ToJson(dc), dc2);
  CHECK(ToJson(dc2) == ToJson(dc));
  // partial configs keep defaults
  TrainConfig partial;
  FromJson(json{{"epochs", 4}}, partial);
  CHECK(partial.epochs == 4);
  CHECK(partial.batch_size == 8);
}

TEST_CASE("exit codes") {
  CHECK(ExitCodeFor(ConfigError("x")) == 2);
  CHECK(ExitCodeFor(DataError("x")) == 3);
  CHECK(ExitCodeFor(InsufficientFrames("x")) == 3);
  CHECK(ExitCodeFor(NumericalError("x")) == 4);
  CHECK(ExitCodeFor(StageError("x", 4)) == 4);
}

TEST_CASE("a full run writes every promised artifact") {
  const auto dir = Fresh("full");
  const RunResult r = RunExperiment(fixtures::TinyManifest(dir.string()));
  for (const auto& [name, path] : r.artifacts) {
    INFO(name);
    CHECK(fs::exists(path));
  }
  for (const char* f : {"dataset.jsonl", "split.json", "train_log.csv", "checkpoint.bin",
                        "predictions.jsonl", "report.csv", "per_video.csv", "per_window.csv",
                        "prediction_grid.csv", "esv_curve.csv", "manifest.json", "artifacts.json",
                        "attention/index.json"}) {
    INFO(f);
    CHECK(fs::exists(dir / f));
  }
  CHECK(HasArtifact(r, "attention:"));
  CHECK((r.report.mean_es >= 0.0 && r.report.mean_es < 1.0));
  // the saved manifest reproduces the run
  const auto saved = RunManifest::FromJson(json::parse(io::ReadTextFile(dir / "manifest.json")));
  CHECK(saved.Hash() != "");
  CHECK(saved.model.num_classes == 3);
}

TEST_CASE("variant g emits no attention artifacts") {
  const auto dir = Fresh("g");
  auto m = fixtures::TinyManifest(dir.string());
  m.model.variant = Variant::kG;
  const RunResult r = RunExperiment(m);
  CHECK_FALSE(HasArtifact(r, "attention"));
  CHECK_FALSE(fs::exists(dir / "attention"));
}

TEST_CASE("equal manifests give identical reports; eval on a checkpoint is reproducible") {
  const auto a = Fresh("det_a");
  const auto b = Fresh("det_b");
  const RunResult ra = RunExperiment(fixtures::TinyManifest(a.string()));
  const RunResult rb = RunExperiment(fixtures::TinyManifest(b.string()));
  CHECK(io::ReadTextFile(a / "report.csv") == io::ReadTextFile(b / "report.csv"));
  CHECK(io::ReadTextFile(a / "predictions.jsonl") == io::ReadTextFile(b / "predictions.jsonl"));
  CHECK(ra.report.mean_es == rb.report.mean_es);

  const auto model = io::LoadCheckpoint(a / "checkpoint.bin");
  const auto c = Fresh("det_c");
  auto m = fixtures::TinyManifest(c.string());
  RunResult rc;
  EvalRun(m, *model, rc);
  CHECK(io::ReadTextFile(a / "predictions.jsonl") == io::ReadTextFile(c / "predictions.jsonl"));
  CHECK(rc.report.mean_es == ra.report.mean_es);
}

TEST_CASE("stage failures name the stage and manifest") {
  auto m = fixtures::TinyManifest(Fresh("fail").string());
  m.dataset_path = "/nonexistent/dataset.jsonl";
  try {
    RunExperiment(m);
    FAIL("expected a failure");
  } catch (const StageError& e) {
    CHECK(std::string(e.what()).find("stage 'data'") != std::string::npos);
    CHECK(std::string(e.what()).find("manifest ") != std::string::npos);
    CHECK(e.code() == 3);
  }
  m = fixtures::TinyManifest(Fresh("fail2").string());
  m.tau = 1.5;
  try {
    RunExperiment(m);
    FAIL("expected a failure");
  } catch (const StageError& e) {
    CHECK(std::string(e.what()).find("stage 'config'") != std::string::npos);
    CHECK(e.code() == 2);
  }
}

TEST_CASE("ablation sweeps write one run per value and a combined table") {
  const auto dir = Fresh("ablate");
  auto base = fixtures::TinyManifest(dir.string());
  base.train.epochs = 1;
  base.train.lr_decay_epochs = {};
  const auto rows = Ablate(AblationDimension::kT, {"2", "3", "4"}, base);
  CHECK(rows.size() == 3);
  for (const char* v : {"2", "3", "4"}) {
    CHECK(fs::exists(dir / (std::string("ablate_t_") + v) / "manifest.json"));
  }
  std::ifstream csv(dir / "ablation_t.csv");
  int lines = 0;
  for (std::string line; std::getline(csv, line);) ++lines;
  CHECK(lines == 4);

  const auto sca = Ablate(AblationDimension::kSca, {"on", "off"}, base);
  CHECK(sca.size() == 2);
  CHECK_THROWS_AS(Ablate(AblationDimension::kSca, {"maybe"}, base), ConfigError);
  CHECK_THROWS_AS(Ablate(AblationDimension::kK, {}, base), ConfigError);
  CHECK_THROWS_AS(ParseAblationDimension("depth"), ConfigError);

  CHECK(CollectReports(dir) == 5);
  CHECK(fs::exists(dir / "summary.csv"));
}
