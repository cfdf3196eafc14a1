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
#include <iosfwd>
#include <string>
#include <vector>

#include "surgprod/metrics.hpp"
#include "surgprod/model.hpp"
#include "surgprod/training.hpp"

namespace surgprod::io {

namespace fs = std::filesystem;

/// One JSON object per line:
///   {"video_id", "scale", "w", "w_max", "probs": [C reals], "label"}
/// Lines of one video must be contiguous; `w_max` is optional (default 18).
void WriteStreams(std::ostream& out, const std::vector<metrics::PredictionStream>& streams);
std::vector<metrics::PredictionStream> ReadStreams(std::istream& in);

/// Report header plus one row per (scale, variant).
struct ReportRow {
  std::string scale;
  std::string variant;
  metrics::EvalReport report;
};
void WriteReportCsv(std::ostream& out, const std::vector<ReportRow>& rows);
void WritePerVideoCsv(std::ostream& out, const metrics::EvalReport& report);
void WritePerWindowCsv(std::ostream& out, const metrics::EvalReport& report);
void WriteTrainLogCsv(std::ostream& out, const std::vector<EpochLog>& log);

/// Rows = videos, columns = windows; each cell "pred:hit" (hit 0/1).
void WritePredictionGridCsv(std::ostream& out,
                            const std::vector<metrics::PredictionStream>& streams, double tau);

/// ESV(n) for n = 1..w_max.
void WriteEsvCurveCsv(std::ostream& out,
                      const std::vector<metrics::PredictionStream>& streams, double tau);

/// NumPy .npy (format 1.0, little-endian float64, C order).
void WriteNpy(const fs::path& path, const std::vector<std::size_t>& shape,
              const std::vector<double>& data);

/// Checkpoint container, format version 1:
///   bytes 0..7   magic "SPRDCKPT"
///   u32          format version
///   u64          header length H
///   H bytes      JSON header {"format_version", "model_config", "tensors":
///                [{"name", "rows", "cols", "offset"}]}
///   payload      float64 little-endian, each tensor row-major at `offset`
///                bytes from the start of the payload
inline constexpr std::uint32_t kCheckpointVersion = 1;

void SaveCheckpoint(const fs::path& path, const SurgProdModel& model);
/// Rebuilds the model from the embedded config and loads every tensor.
std::unique_ptr<SurgProdModel> LoadCheckpoint(const fs::path& path);

void WriteTextFile(const fs::path& path, const std::string& text);
std::string ReadTextFile(const fs::path& path);

}  // namespace surgprod::io
