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

#include "surgprod/io.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "json.hpp"
#include "surgprod/config.hpp"
#include "surgprod/errors.hpp"

namespace surgprod::io {

using json = nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "checkpoint and npy writers assume a little-endian host");

// ---------------------------------------------------------------- streams

void WriteStreams(std::ostream& out, const std::vector<metrics::PredictionStream>& streams) {
  for (const auto& s : streams) {
    for (const auto& e : s.entries) {
      json j = {{"video_id", s.video_id}, {"scale", s.scale}, {"w", e.w},
                {"w_max", s.w_max},       {"probs", e.probs}, {"label", e.label}};
      out << j.dump() << '\n';
    }
  }
}

std::vector<metrics::PredictionStream> ReadStreams(std::istream& in) {
  std::vector<metrics::PredictionStream> streams;
  std::map<std::string, std::size_t> index;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      const std::string id = j.at("video_id").get<std::string>();
      const std::string scale = j.value("scale", std::string());
      const std::string key = scale + '\x1f' + id;
      auto it = index.find(key);
      if (it == index.end()) {
        metrics::PredictionStream s;
        s.video_id = id;
        s.scale = scale;
        s.w_max = j.value("w_max", 18);
        it = index.emplace(key, streams.size()).first;
        streams.push_back(std::move(s));
      }
      metrics::PredictionEntry e;
      e.w = j.at("w").get<int>();
      e.probs = j.at("probs").get<std::vector<double>>();
      e.label = j.at("label").get<int>();
      streams[it->second].entries.push_back(std::move(e));
    } catch (const json::exception& e) {
      throw DataError("prediction stream line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  for (auto& s : streams) {
    std::stable_sort(s.entries.begin(), s.entries.end(),
                     [](const auto& a, const auto& b) { return a.w < b.w; });
    s.Validate();
  }
  return streams;
}

// ---------------------------------------------------------------- reports

void WriteReportCsv(std::ostream& out, const std::vector<ReportRow>& rows) {
  out << "scale,variant,top1,f1,qwk,esv1,esv3,esv5,mean_es,tau,protocol\n";
  out << std::setprecision(12);
  for (const auto& r : rows) {
    const auto& e = r.report;
    out << r.scale << ',' << r.variant << ',' << e.top1 << ',' << e.f1 << ',' << e.qwk << ','
        << e.esv1 << ',' << e.esv3 << ',' << e.esv5 << ',' << e.mean_es << ',' << e.tau << ','
        << metrics::ProtocolName(e.protocol) << '\n';
  }
}

void WritePerVideoCsv(std::ostream& out, const metrics::EvalReport& report) {
  out << "video_id,label,first_hit,es1,es3,es5,top1\n" << std::setprecision(12);
  for (const auto& v : report.per_video) {
    out << v.video_id << ',' << v.label << ',' << v.first_hit << ',' << v.es1 << ',' << v.es3
        << ',' << v.es5 << ',' << v.top1 << '\n';
  }
}

void WritePerWindowCsv(std::ostream& out, const metrics::EvalReport& report) {
  out << "w,top1,f1,qwk,hit_rate\n" << std::setprecision(12);
  for (const auto& w : report.per_window) {
    out << w.w << ',' << w.top1 << ',' << w.f1 << ',' << w.qwk << ',' << w.hit_rate << '\n';
  }
}

void WriteTrainLogCsv(std::ostream& out, const std::vector<EpochLog>& log) {
  out << "epoch,lr,train_loss,val_top1,val_meanES\n" << std::setprecision(12);
  for (const auto& r : log) {
    out << r.epoch << ',' << r.lr << ',' << r.train_loss << ',';
    if (std::isnan(r.val_top1)) {
      out << ",\n";
    } else {
      out << r.val_top1 << ',' << r.val_mean_es << '\n';
    }
  }
}

void WritePredictionGridCsv(std::ostream& out,
                            const std::vector<metrics::PredictionStream>& streams, double tau) {
  int p = 0;
  for (const auto& s : streams) p = std::max(p, s.P());
  out << "video_id,label";
  for (int w = 1; w <= p; ++w) out << ",w" << w;
  out << '\n';
  for (const auto& s : streams) {
    out << s.video_id << ',' << s.label();
    for (const auto& e : s.entries) {
      out << ',' << metrics::Argmax(e.probs) << ':' << (metrics::Hit(e.probs, e.label, tau) ? 1 : 0);
    }
    for (int w = s.P(); w < p; ++w) out << ',';
    out << '\n';
  }
}

void WriteEsvCurveCsv(std::ostream& out,
                      const std::vector<metrics::PredictionStream>& streams, double tau) {
  int w_max = 0;
  for (const auto& s : streams) w_max = std::max(w_max, s.w_max);
  out << "n,esv\n" << std::setprecision(12);
  for (int n = 1; n <= w_max; ++n) out << n << ',' << metrics::Esv(n, streams, tau) << '\n';
}

// -------------------------------------------------------------------- npy

void WriteNpy(const fs::path& path, const std::vector<std::size_t>& shape,
              const std::vector<double>& data) {
  std::size_t count = 1;
  std::ostringstream dims;
  dims << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    count *= shape[i];
    dims << shape[i] << (shape.size() == 1 ? "," : (i + 1 < shape.size() ? ", " : ""));
  }
  dims << ')';
  if (count != data.size()) throw InvalidArgument("npy: shape does not match data size");
  std::string header =
      "{'descr': '<f8', 'fortran_order': False, 'shape': " + dims.str() + ", }";
  const std::size_t unpadded = 10 + header.size() + 1;
  header.append((64 - unpadded % 64) % 64, ' ');
  header.push_back('\n');

  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write " + path.string());
  const char magic[] = {'\x93', 'N', 'U', 'M', 'P', 'Y', 1, 0};
  f.write(magic, sizeof(magic));
  const auto len = static_cast<std::uint16_t>(header.size());
  f.write(reinterpret_cast<const char*>(&len), sizeof(len));
  f.write(header.data(), static_cast<std::streamsize>(header.size()));
  f.write(reinterpret_cast<const char*>(data.data()),
          static_cast<std::streamsize>(data.size() * sizeof(double)));
}

// ------------------------------------------------------------- checkpoint

namespace {
constexpr char kMagic[8] = {'S', 'P', 'R', 'D', 'C', 'K', 'P', 'T'};
}

void SaveCheckpoint(const fs::path& path, const SurgProdModel& model) {
  json tensors = json::array();
  std::uint64_t offset = 0;
  for (const auto& p : model.params().params()) {
    tensors.push_back({{"name", p.name}, {"rows", p.value.rows()}, {"cols", p.value.cols()},
                       {"offset", offset}});
    offset += static_cast<std::uint64_t>(p.value.size()) * sizeof(double);
  }
  const json header = {{"format_version", kCheckpointVersion},
                       {"model_config", ToJson(model.config())},
                       {"tensors", tensors}};
  const std::string text = header.dump();

  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write checkpoint " + path.string());
  f.write(kMagic, sizeof(kMagic));
  const std::uint32_t version = kCheckpointVersion;
  f.write(reinterpret_cast<const char*>(&version), sizeof(version));
  const std::uint64_t len = text.size();
  f.write(reinterpret_cast<const char*>(&len), sizeof(len));
  f.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& p : model.params().params()) {
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = p.value;
    f.write(reinterpret_cast<const char*>(rm.data()),
            static_cast<std::streamsize>(rm.size() * sizeof(double)));
  }
  if (!f) throw DataError("failed writing checkpoint " + path.string());
}

std::unique_ptr<SurgProdModel> LoadCheckpoint(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open checkpoint " + path.string());
  char magic[8];
  f.read(magic, sizeof(magic));
  if (!f || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw DataError(path.string() + ": not a checkpoint (bad magic)");
  }
  std::uint32_t version = 0;
  f.read(reinterpret_cast<char*>(&version), sizeof(version));
  if (version != kCheckpointVersion) {
    throw DataError(path.string() + ": unsupported checkpoint version " + std::to_string(version));
  }
  std::uint64_t len = 0;
  f.read(reinterpret_cast<char*>(&len), sizeof(len));
  std::string text(len, '\0');
  f.read(text.data(), static_cast<std::streamsize>(len));
  if (!f) throw DataError(path.string() + ": truncated header");
  const std::streamoff payload = f.tellg();

  json header;
  try {
    header = json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": bad header: " + e.what());
  }
  ModelConfig cfg;
  FromJson(header.at("model_config"), cfg);
  auto model = std::make_unique<SurgProdModel>(cfg);
  for (const auto& t : header.at("tensors")) {
    const auto name = t.at("name").get<std::string>();
    nn::Param* p = model->params().Find(name);
    if (p == nullptr) throw DataError(path.string() + ": unexpected tensor '" + name + "'");
    const auto rows = t.at("rows").get<Eigen::Index>();
    const auto cols = t.at("cols").get<Eigen::Index>();
    if (rows != p->value.rows() || cols != p->value.cols()) {
      throw DataError(path.string() + ": shape mismatch for '" + name + "'");
    }
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(rows, cols);
    f.seekg(payload + static_cast<std::streamoff>(t.at("offset").get<std::uint64_t>()));
    f.read(reinterpret_cast<char*>(rm.data()), static_cast<std::streamsize>(rm.size() * sizeof(double)));
    if (!f) throw DataError(path.string() + ": truncated tensor '" + name + "'");
    p->value = rm;
  }
  if (header.at("tensors").size() != model->params().params().size()) {
    throw DataError(path.string() + ": tensor count does not match model");
  }
  return model;
}

void WriteTextFile(const fs::path& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw DataError("cannot write " + path.string());
  f << text;
}

std::string ReadTextFile(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot read " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace surgprod::io
