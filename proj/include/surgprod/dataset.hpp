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

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "surgprod/backbone.hpp"
#include "surgprod/training.hpp"

namespace surgprod {

/// One assessment scale and its train/val/test video counts (for a
/// 100-video dataset).
struct ScaleSpec {
  std::string name;  // "pgs", "s", "n"
  int num_classes = 0;
  std::array<int, 3> split_sizes{};

  int usable() const { return split_sizes[0] + split_sizes[1] + split_sizes[2]; }
  /// Split sizes rescaled to a dataset of `n_videos` (largest remainder).
  std::array<int, 3> SplitSizesFor(int n_videos) const;
};

const ScaleSpec& GetScale(const std::string& name);
const std::vector<ScaleSpec>& AllScales();

struct VoteResult {
  int label = 0;
  bool tie_broken = false;  // three distinct votes, median taken
};

/// Modal label of three ratings; with three distinct ratings the median.
VoteResult MajorityVote(const std::array<int, 3>& ratings, int num_classes);

struct Split {
  std::vector<std::string> train, val, test;
};

/// Stratified train/val/test split. Every class's count in every split is
/// within one video of its proportional share; deterministic in `seed`.
Split StratifiedSplit(const std::vector<std::string>& video_ids,
                      const std::vector<int>& labels,
                      const std::array<int, 3>& split_sizes, std::uint64_t seed);

struct DatasetConfig {
  int n_videos = 100;
  std::uint64_t seed = 0;
  int w_max = 18;
  int max_extra_minutes = 30;  // lengths drawn from [w_max, w_max + extra]
  double cue_amplitude = 2.0;
  double noise_scale = 1.0;
  double cue_width_minutes = 3.0;
  /// Probability that a simulated rater shifts a grade to a neighbour.
  double rater_flip = 0.1;
  bool balanced = false;
  /// Class priors per scale name; empty -> built-in defaults.
  std::map<std::string, std::vector<double>> priors;

  void Validate() const;
};

std::vector<double> DefaultPriors(const std::string& scale);

/// Per-scale annotation of one synthetic video.
struct ScaleAnnotation {
  int latent = 0;                 // grade the cue encodes
  std::array<int, 3> ratings{};   // simulated raters
  int label = 0;                  // majority vote; -1 = unusable for this scale
  bool tie_broken = false;
  std::vector<CueSegment> cues;
};

/// One line of the dataset manifest.
struct VideoRecord {
  std::string video_id;
  int length_minutes = 0;
  std::uint64_t seed = 0;
  double cue_amplitude = 2.0;
  double noise_scale = 1.0;
  std::map<std::string, ScaleAnnotation> scales;
};

std::vector<VideoRecord> SynthesizeDataset(const DatasetConfig& config);

void WriteDatasetManifest(std::ostream& out, const std::vector<VideoRecord>& records);
std::vector<VideoRecord> ReadDatasetManifest(std::istream& in);

/// Feature source for one scale over the given records.
SyntheticVideoSource MakeSource(const std::vector<VideoRecord>& records,
                                const std::string& scale,
                                const SynthGeometry& geometry);

/// (video_id, label) pairs for records usable in `scale`, in manifest order.
std::vector<LabeledVideo> LabeledVideos(const std::vector<VideoRecord>& records,
                                        const std::string& scale);

/// Split of the usable videos of `scale`, sized by its ScaleSpec.
Split SplitForScale(const std::vector<VideoRecord>& records,
                    const std::string& scale, std::uint64_t seed);

}  // namespace surgprod
