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

#include "surgprod/sampler.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <sstream>

#include "surgprod/errors.hpp"
#include "surgprod/rng.hpp"

namespace surgprod {

FrameIndex WindowFrameCount(int w, int fps, FrameIndex total_frames) {
  if (w < 1 || fps < 1 || total_frames < 1) {
    std::ostringstream msg;
    msg << "window_frame_count: expected positive inputs, got w=" << w
        << " fps=" << fps << " F=" << total_frames;
    throw InvalidArgument(msg.str());
  }
  const FrameIndex frames = static_cast<FrameIndex>(w) * 60 * fps;
  return std::min(frames, total_frames);
}

ObservationWindow ObservationWindow::Make(std::string video_id, int w, int fps,
                                          FrameIndex total_frames) {
  ObservationWindow window;
  window.video_id = std::move(video_id);
  window.w = w;
  window.fps = fps;
  window.frame_count = WindowFrameCount(w, fps, total_frames);
  return window;
}

std::vector<FrameIndex> PartitionLocal(FrameIndex frame_count, int k, int t,
                                       const std::string& window_name) {
  if (k < 1 || t < 1) {
    throw InvalidArgument("partition_local: k and t must be >= 1");
  }
  if (frame_count < static_cast<FrameIndex>(k) * t) {
    std::ostringstream msg;
    msg << "insufficient frames in window '" << window_name << "': F_w="
        << frame_count << " < k*t=" << static_cast<FrameIndex>(k) * t;
    throw InsufficientFrames(msg.str());
  }
  std::vector<FrameIndex> bounds(k + 1);
  for (int i = 0; i <= k; ++i) {
    bounds[i] = (static_cast<FrameIndex>(i) * frame_count) / k;
  }
  return bounds;
}

IndexList SampleIndices(FrameIndex range_start, FrameIndex range_end, int t,
                        SamplingMode mode, std::uint64_t seed) {
  if (t < 1) throw InvalidArgument("sample_indices: t must be >= 1");
  const FrameIndex length = range_end - range_start;
  if (length < t) {
    std::ostringstream msg;
    msg << "insufficient frames: range [" << range_start << ", " << range_end
        << ") holds " << length << " frames, need t=" << t;
    throw InsufficientFrames(msg.str());
  }

  IndexList out(t);
  if (mode == SamplingMode::kUniform) {
    // Integer form of floor((j + 0.5) * L / t) = floor((2j + 1) * L / (2t)).
    for (int j = 0; j < t; ++j) {
      out[j] = range_start + ((2 * static_cast<FrameIndex>(j) + 1) * length) /
                                 (2 * static_cast<FrameIndex>(t));
    }
    return out;
  }

  // Floyd's algorithm: t distinct draws without materializing the range.
  std::mt19937_64 gen(seed);
  std::vector<FrameIndex> chosen;
  chosen.reserve(t);
  for (FrameIndex j = length - t; j < length; ++j) {
    std::uniform_int_distribution<FrameIndex> dist(0, j);
    const FrameIndex candidate = dist(gen);
    if (std::find(chosen.begin(), chosen.end(), candidate) == chosen.end()) {
      chosen.push_back(candidate);
    } else {
      chosen.push_back(j);
    }
  }
  std::sort(chosen.begin(), chosen.end());
  for (int j = 0; j < t; ++j) out[j] = range_start + chosen[j];
  return out;
}

SnapshotPlan BuildPlan(const ObservationWindow& window, int t, int k,
                       SamplingMode mode, std::uint64_t seed) {
  if (t < 1) throw InvalidArgument("build_plan: t must be >= 1");
  if (k < 0) throw InvalidArgument("build_plan: k must be >= 0");
  SnapshotPlan plan;
  const std::string name =
      window.video_id + "@w=" + std::to_string(window.w);
  if (window.frame_count < t) {
    std::ostringstream msg;
    msg << "insufficient frames in window '" << name
        << "': F_w=" << window.frame_count << " < t=" << t;
    throw InsufficientFrames(msg.str());
  }
  plan.global_indices =
      SampleIndices(0, window.frame_count, t, mode, DeriveSeed(seed, 0));
  if (k == 0) {
    plan.segment_bounds = {0, window.frame_count};
    return plan;
  }
  plan.segment_bounds = PartitionLocal(window.frame_count, k, t, name);
  plan.local_indices.reserve(k);
  for (int i = 0; i < k; ++i) {
    plan.local_indices.push_back(
        SampleIndices(plan.segment_bounds[i], plan.segment_bounds[i + 1], t,
                      mode, DeriveSeed(seed, 1 + static_cast<std::uint64_t>(i))));
  }
  return plan;
}

SamplingMode ParseSamplingMode(const std::string& name) {
  if (name == "random") return SamplingMode::kRandom;
  if (name == "uniform") return SamplingMode::kUniform;
  throw InvalidArgument("unknown sampling mode '" + name + "'");
}

}  // namespace surgprod
