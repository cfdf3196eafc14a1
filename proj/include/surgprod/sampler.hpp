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

#include <cstdint>
#include <string>
#include <vector>

namespace surgprod {

using FrameIndex = std::int64_t;
using IndexList = std::vector<FrameIndex>;

enum class SamplingMode { kRandom, kUniform };

/// The observed prefix of a video: the first `w` minutes, `frame_count` frames.
struct ObservationWindow {
  std::string video_id;
  int w = 1;
  int fps = 1;
  FrameIndex frame_count = 0;

  /// Builds a window over a video with `total_frames` frames, clamping the
  /// frame count to the video length.
  static ObservationWindow Make(std::string video_id, int w, int fps,
                                FrameIndex total_frames);
};

/// Frame selections for one global and k local snapshots.
/// local_indices[i] draws only from [segment_bounds[i], segment_bounds[i+1]).
struct SnapshotPlan {
  IndexList global_indices;
  std::vector<IndexList> local_indices;
  std::vector<FrameIndex> segment_bounds;

  int t() const { return static_cast<int>(global_indices.size()); }
  int k() const { return static_cast<int>(local_indices.size()); }
};

/// min(w * 60 * fps, total_frames).
FrameIndex WindowFrameCount(int w, int fps, FrameIndex total_frames);

/// Boundaries floor(i * frame_count / k) for i = 0..k. Every segment must
/// hold at least `t` frames.
std::vector<FrameIndex> PartitionLocal(FrameIndex frame_count, int k, int t,
                                       const std::string& window_name = "");

/// Draws `t` sorted indices from [range_start, range_end).
/// Uniform mode uses the center-of-bin rule start + floor((j + 0.5) * L / t);
/// random mode draws without replacement from a generator seeded by `seed`.
IndexList SampleIndices(FrameIndex range_start, FrameIndex range_end, int t,
                        SamplingMode mode, std::uint64_t seed);

/// Global snapshot over [0, F_w) and one local snapshot per segment. Each
/// snapshot gets its own derived seed so that random plans stay a pure
/// function of (window, t, k, seed).
SnapshotPlan BuildPlan(const ObservationWindow& window, int t, int k,
                       SamplingMode mode, std::uint64_t seed);

SamplingMode ParseSamplingMode(const std::string& name);

}  // namespace surgprod
