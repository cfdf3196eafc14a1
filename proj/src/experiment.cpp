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

#include "surgprod/experiment.hpp"

#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "surgprod/config.hpp"
#include "surgprod/errors.hpp"
#include "surgprod/rng.hpp"

namespace surgprod {

namespace fs = std::filesystem;
using json = nlohmann::json;

// --------------------------------------------------------------- manifest

void RunManifest::Resolve() {
  const ScaleSpec& spec = GetScale(scale);
  scale = spec.name;
  model.num_classes = spec.num_classes;
  model.w_max = dataset.w_max;
  model.init_seed = DeriveSeed(seed, 1);
  model.h_p = geometry.h_p;
  model.w_p = geometry.w_p;
  model.d_in = geometry.d;
  train.seed = DeriveSeed(seed, 2);
  train.tau = tau;
  train.fps = geometry.fps;
}

void RunManifest::Validate() const {
  GetScale(scale);
  model.Validate();
  train.Validate();
  dataset.Validate();
  if (!(tau >= 0.0 && tau < 1.0)) throw ConfigError("manifest: tau must lie in [0, 1)");
  if (geometry.fps < 1 || geometry.d < 1) throw ConfigError("geometry: fps and d must be >= 1");
  if (geometry.h_p < 1 || geometry.w_p < 1 || geometry.raw_h % geometry.h_p != 0 ||
      geometry.raw_w % geometry.w_p != 0) {
    throw ConfigError("geometry: raw_h/raw_w must be multiples of h_p/w_p");
  }
  if (model.d_in != geometry.d || model.h_p != geometry.h_p || model.w_p != geometry.w_p) {
    throw ConfigError("manifest: model token shape disagrees with geometry (call Resolve)");
  }
  if (attention_videos < 0) throw ConfigError("manifest: attention_videos must be >= 0");
  const long min_frames = static_cast<long>(std::max(model.t, model.active_locals() * model.t));
  if (60L * geometry.fps < min_frames) {
    throw ConfigError("manifest: a 1-minute window holds fewer frames than t or k*t");
  }
}

json RunManifest::ToJson() const {
  return {{"seed", seed},
          {"scale", scale},
          {"model", surgprod::ToJson(model)},
          {"train", surgprod::ToJson(train)},
          {"dataset", surgprod::ToJson(dataset)},
          {"geometry", surgprod::ToJson(geometry)},
          {"tau", tau},
          {"protocol", metrics::ProtocolName(protocol)},
          {"dataset_path", dataset_path},
          {"out_dir", out_dir.string()},
          {"attention_videos", attention_videos}};
}

RunManifest RunManifest::FromJson(const json& j) {
  if (!j.is_object()) throw ConfigError("manifest: expected a JSON object");
  RunManifest m;
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "seed") {
        m.seed = value.get<std::uint64_t>();
      } else if (key == "scale") {
        m.scale = value.get<std::string>();
      } else if (key == "model") {
        surgprod::FromJson(value, m.model);
      } else if (key == "train") {
        surgprod::FromJson(value, m.train);
      } else if (key == "dataset") {
        surgprod::FromJson(value, m.dataset);
      } else if (key == "geometry") {
        surgprod::FromJson(value, m.geometry);
      } else if (key == "tau") {
        m.tau = value.get<double>();
      } else if (key == "protocol") {
        m.protocol = metrics::ParseProtocol(value.get<std::string>());
      } else if (key == "dataset_path") {
        m.dataset_path = value.get<std::string>();
      } else if (key == "out_dir") {
        m.out_dir = value.get<std::string>();
      } else if (key == "attention_videos") {
        m.attention_videos = value.get<int>();
      } else {
        throw ConfigError("manifest: unknown field '" + key + "'");
      }
    } catch (const json::exception& e) {
      throw ConfigError("manifest." + key + ": " + e.what());
    } catch (const InvalidArgument& e) {
      throw ConfigError(e.what());
    }
  }
  return m;
}

std::string RunManifest::Hash() const {
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << HashString(ToJson().dump());
  return out.str();
}

int ExitCodeFor(const std::exception& e) {
  if (const auto* s = dynamic_cast<const StageError*>(&e)) return s->code();
  if (dynamic_cast<const ConfigError*>(&e) != nullptr) return 2;
  if (dynamic_cast<const InvalidArgument*>(&e) != nullptr) return 2;
  if (dynamic_cast<const DataError*>(&e) != nullptr) return 3;
  if (dynamic_cast<const NumericalError*>(&e) != nullptr) return 4;
  return 1;
}

// ------------------------------------------------------------------- runs

namespace {

template <typename Fn>
auto Stage(const std::string& name, const RunManifest& manifest, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError("stage '" + name + "' failed (manifest " + manifest.Hash() + "): " + e.what(),
                     ExitCodeFor(e));
  }
}

std::vector<VideoRecord> LoadOrSynthesize(const RunManifest& manifest) {
  if (!manifest.dataset_path.empty()) {
    std::ifstream in(manifest.dataset_path);
    if (!in) throw DataError("cannot open dataset manifest " + manifest.dataset_path);
    return ReadDatasetManifest(in);
  }
  return SynthesizeDataset(manifest.dataset);
}

std::vector<LabeledVideo> Select(const std::vector<LabeledVideo>& all,
                                 const std::vector<std::string>& ids) {
  std::map<std::string, int> label;
  for (const auto& v : all) label[v.video_id] = v.label;
  std::vector<LabeledVideo> out;
  for (const auto& id : ids) out.push_back({id, label.at(id)});
  return out;
}

RunManifest Resolved(const RunManifest& input) {
  RunManifest manifest = input;
  Stage("config", manifest, [&] {
    manifest.Resolve();
    manifest.Validate();
    return 0;
  });
  return manifest;
}

struct RunData {
  std::vector<VideoRecord> records;
  Split split;
  std::vector<LabeledVideo> labeled;
};

RunData PrepareData(const RunManifest& manifest, RunResult& result, bool write) {
  const fs::path dir = manifest.out_dir;
  RunData data;
  data.records = Stage("data", manifest, [&] {
    auto recs = LoadOrSynthesize(manifest);
    if (write) {
      fs::create_directories(dir);
      std::ofstream out(dir / "dataset.jsonl");
      WriteDatasetManifest(out, recs);
    }
    return recs;
  });
  data.split = Stage("split", manifest, [&] {
    Split s = SplitForScale(data.records, manifest.scale, manifest.dataset.seed);
    if (write) {
      const json j = {{"train", s.train}, {"val", s.val}, {"test", s.test}};
      io::WriteTextFile(dir / "split.json", j.dump(2) + "\n");
    }
    return s;
  });
  if (write) {
    result.artifacts.emplace_back("dataset", dir / "dataset.jsonl");
    result.artifacts.emplace_back("split", dir / "split.json");
  }
  data.labeled = LabeledVideos(data.records, manifest.scale);
  return data;
}

}  // namespace

std::unique_ptr<SurgProdModel> TrainRun(const RunManifest& input, RunResult& result) {
  const RunManifest manifest = Resolved(input);
  const fs::path dir = manifest.out_dir;
  const RunData data = PrepareData(manifest, result, true);
  const auto source = MakeSource(data.records, manifest.scale, manifest.geometry);
  auto model = std::make_unique<SurgProdModel>(manifest.model);

  result.training = Stage("train", manifest, [&] {
    TrainingData td;
    td.source = &source;
    td.scale = manifest.scale;
    td.train = Select(data.labeled, data.split.train);
    td.val = Select(data.labeled, data.split.val);
    TrainResult tr = Train(*model, td, manifest.train);
    std::ofstream log(dir / "train_log.csv");
    io::WriteTrainLogCsv(log, tr.log);
    io::SaveCheckpoint(dir / "checkpoint.bin", *model);
    return tr;
  });
  result.artifacts.emplace_back("train_log", dir / "train_log.csv");
  result.artifacts.emplace_back("checkpoint", dir / "checkpoint.bin");
  return model;
}

void EvalRun(const RunManifest& input, const SurgProdModel& model, RunResult& result) {
  const RunManifest manifest = Resolved(input);
  const fs::path dir = manifest.out_dir;
  fs::create_directories(dir);
  RunResult scratch;
  const RunData data = PrepareData(manifest, scratch, false);
  const auto source = MakeSource(data.records, manifest.scale, manifest.geometry);
  const auto test = Select(data.labeled, data.split.test);
  auto add = [&](const std::string& name, const fs::path& path) {
    result.artifacts.emplace_back(name, path);
  };

  result.report = Stage("eval", manifest, [&] {
    const auto streams =
        PredictStreams(model, source, test, manifest.scale, manifest.geometry.fps);
    {
      std::ofstream out(dir / "predictions.jsonl");
      io::WriteStreams(out, streams);
    }
    metrics::EvalReport report = metrics::Evaluate(streams, manifest.tau, manifest.protocol);
    {
      std::ofstream out(dir / "report.csv");
      io::WriteReportCsv(out, {{manifest.scale, VariantName(model.config().variant), report}});
    }
    {
      std::ofstream out(dir / "per_video.csv");
      io::WritePerVideoCsv(out, report);
    }
    {
      std::ofstream out(dir / "per_window.csv");
      io::WritePerWindowCsv(out, report);
    }
    {
      std::ofstream out(dir / "prediction_grid.csv");
      io::WritePredictionGridCsv(out, streams, manifest.tau);
    }
    {
      std::ofstream out(dir / "esv_curve.csv");
      io::WriteEsvCurveCsv(out, streams, manifest.tau);
    }
    return report;
  });
  add("predictions", dir / "predictions.jsonl");
  for (const char* name : {"report", "per_video", "per_window", "prediction_grid", "esv_curve"}) {
    add(name, dir / (std::string(name) + ".csv"));
  }

  if (model.config().variant == Variant::kGLSCA && manifest.attention_videos > 0) {
    Stage("attention", manifest, [&] {
      const fs::path adir = dir / "attention";
      fs::create_directories(adir);
      json index = json::object();
      const int count = std::min<int>(manifest.attention_videos, static_cast<int>(test.size()));
      for (int i = 0; i < count; ++i) {
        const auto& video = test[static_cast<std::size_t>(i)];
        const SnapshotInputs inputs =
            MakeInputs(model.config(), source, video.video_id, model.config().w_max,
                       manifest.geometry.fps, SamplingMode::kUniform, 0);
        std::vector<AttentionExport> attention;
        model.Forward(inputs, nullptr, &attention);
        json blocks = json::array();
        for (const auto& ex : attention) {
          const std::size_t heads = ex.heads.size();
          const auto q = static_cast<std::size_t>(ex.heads.front().rows());
          const auto k = static_cast<std::size_t>(ex.heads.front().cols());
          std::vector<double> values;
          values.reserve(heads * q * k);
          for (const auto& h : ex.heads)
            for (std::size_t r = 0; r < q; ++r)
              for (std::size_t c = 0; c < k; ++c)
                values.push_back(h(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)));
          const std::string file = video.video_id + "_block" + std::to_string(ex.block) + ".npy";
          io::WriteNpy(adir / file, {heads, q, k}, values);
          blocks.push_back({{"block", ex.block}, {"file", file}, {"shape", {heads, q, k}}});
          add("attention:" + file, adir / file);
          index["snapshot_of_token"] = ex.snapshot_of_token;
        }
        index["videos"][video.video_id] = {{"w", model.config().w_max}, {"blocks", blocks}};
      }
      io::WriteTextFile(adir / "index.json", index.dump(2) + "\n");
      add("attention_index", adir / "index.json");
      return 0;
    });
  }
}

void FinalizeRun(const RunManifest& input, RunResult& result) {
  const RunManifest manifest = Resolved(input);
  const fs::path dir = manifest.out_dir;
  io::WriteTextFile(dir / "manifest.json", manifest.ToJson().dump(2) + "\n");
  result.artifacts.emplace_back("manifest", dir / "manifest.json");
  json inventory = json::object();
  for (const auto& [name, path] : result.artifacts) {
    if (!fs::exists(path)) {
      throw StageError("artifact '" + name + "' missing after run (manifest " + manifest.Hash() + ")", 3);
    }
    inventory[name] = fs::relative(path, dir).string();
  }
  io::WriteTextFile(dir / "artifacts.json", inventory.dump(2) + "\n");
  result.artifacts.emplace_back("artifacts", dir / "artifacts.json");
}

RunResult RunExperiment(const RunManifest& manifest) {
  RunResult result;
  const auto model = TrainRun(manifest, result);
  EvalRun(manifest, *model, result);
  FinalizeRun(manifest, result);
  return result;
}

// --------------------------------------------------------------- ablation

AblationDimension ParseAblationDimension(const std::string& name) {
  if (name == "t") return AblationDimension::kT;
  if (name == "k") return AblationDimension::kK;
  if (name == "sca") return AblationDimension::kSca;
  throw ConfigError("invalid ablation dimension '" + name + "' (expected t, k, sca)");
}

std::string AblationDimensionName(AblationDimension d) {
  switch (d) {
    case AblationDimension::kT:
      return "t";
    case AblationDimension::kK:
      return "k";
    case AblationDimension::kSca:
      return "sca";
  }
  return "?";
}

RunManifest AblationManifest(const RunManifest& base, AblationDimension dim,
                             const std::string& value) {
  RunManifest m = base;
  try {
    switch (dim) {
      case AblationDimension::kT:
        m.model.t = std::stoi(value);
        break;
      case AblationDimension::kK:
        m.model.k = std::stoi(value);
        break;
      case AblationDimension::kSca:
        if (value == "on") {
          m.model.variant = Variant::kGLSCA;
        } else if (value == "off") {
          m.model.variant = Variant::kGL;
        } else {
          throw ConfigError("sca ablation values are 'on' and 'off', got '" + value + "'");
        }
        break;
    }
  } catch (const std::logic_error&) {
    throw ConfigError("ablation value '" + value + "' is not an integer");
  }
  m.out_dir = base.out_dir / ("ablate_" + AblationDimensionName(dim) + "_" + value);
  return m;
}

std::vector<AblationRow> Ablate(AblationDimension dim, const std::vector<std::string>& values,
                                const RunManifest& base) {
  if (values.empty()) throw ConfigError("ablate: no values given");
  std::vector<AblationRow> rows;
  for (const auto& v : values) {
    const RunManifest m = AblationManifest(base, dim, v);
    const RunResult r = RunExperiment(m);
    rows.push_back({v, m.out_dir, r.report});
  }
  fs::create_directories(base.out_dir);
  std::ofstream out(base.out_dir / ("ablation_" + AblationDimensionName(dim) + ".csv"));
  out << "dimension,value,top1,f1,qwk,esv1,esv3,esv5,mean_es,run_dir\n" << std::setprecision(12);
  for (const auto& r : rows) {
    const auto& e = r.report;
    out << AblationDimensionName(dim) << ',' << r.value << ',' << e.top1 << ',' << e.f1 << ','
        << e.qwk << ',' << e.esv1 << ',' << e.esv3 << ',' << e.esv5 << ',' << e.mean_es << ','
        << r.run_dir.string() << '\n';
  }
  return rows;
}

int CollectReports(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw DataError("report: " + dir.string() + " is not a directory");
  std::vector<fs::path> reports;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_directory() && fs::exists(entry.path() / "report.csv")) {
      reports.push_back(entry.path() / "report.csv");
    }
  }
  std::sort(reports.begin(), reports.end());
  std::ofstream out(dir / "summary.csv");
  out << "run,scale,variant,top1,f1,qwk,esv1,esv3,esv5,mean_es,tau,protocol\n";
  for (const auto& path : reports) {
    std::istringstream in(io::ReadTextFile(path));
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
      if (!line.empty()) out << path.parent_path().filename().string() << ',' << line << '\n';
    }
  }
  return static_cast<int>(reports.size());
}

}  // namespace surgprod
