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

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "surgprod/sampler.hpp"

namespace surgprod {

/// Dense (t, h, w, d) array, row-major with d fastest.
struct RawGrid {
  int t = 0, h = 0, w = 0, d = 0;
  std::vector<double> data;

  RawGrid() = default;
  RawGrid(int t_, int h_, int w_, int d_)
      : t(t_), h(h_), w(w_), d(d_),
        data(static_cast<std::size_t>(t_) * h_ * w_ * d_, 0.0) {}

  double& at(int ti, int y, int x, int c) {
    return data[((static_cast<std::size_t>(ti) * h + y) * w + x) * d + c];
  }
  double at(int ti, int y, int x, int c) const {
    return data[((static_cast<std::size_t>(ti) * h + y) * w + x) * d + c];
  }
};

/// Pooled per-snapshot token grid. `tokens` is the flattened
/// (t*h_p*w_p, d) view; row r = (ti * h_p + y) * w_p + x.
struct FeatureVolume {
  int t = 0, h_p = 0, w_p = 0, d = 0;
  Eigen::MatrixXd tokens;

  int token_count() const { return t * h_p * w_p; }
  /// Inverse of the flatten: back to a (t, h_p, w_p, d) grid.
  RawGrid Unflatten() const;
};

/// Mean-pools each spatial bin of `raw` down to (h_p, w_p) and flattens.
/// Throws ShapeError unless h % h_p == 0 and w % w_p == 0.
FeatureVolume PoolAndFlatten(const RawGrid& raw, int h_p, int w_p);

struct CueSegment {
  double start_minute = 0.0;
  double end_minute = 0.0;
};

/// One synthetic video for one assessment scale.
struct SyntheticVideoSpec {
  std::string video_id;
  int class_label = 0;
  int num_classes = 1;
  int length_minutes = 0;
  std::vector<CueSegment> cue_segments;
  double cue_amplitude = 2.0;
  double noise_scale = 1.0;
  /// Generator seed for this video's noise stream.
  std::uint64_t seed = 0;

  void Validate(int w_max) const;
};

/// Shape of the synthetic pre-pooling feature map.
struct SynthGeometry {
  int fps = 1;
  int raw_h = 8;
  int raw_w = 8;
  int h_p = 4;
  int w_p = 4;
  int d = 64;
};

/// Columns are the per-class cue directions e_c in R^d. Orthonormal when
/// d >= num_classes; otherwise unit-norm but not orthogonal. Fixed for a
/// given (num_classes, d).
Eigen::MatrixXd ClassDirections(int num_classes, int d);

/// Raw (1, raw_h, raw_w, d) grid for a single frame: Gaussian noise scaled by
/// noise_scale, plus cue_amplitude * e_c on every cell when the frame's
/// minute falls in a cue segment. Bitwise deterministic in the arguments.
RawGrid SynthFeatures(const SyntheticVideoSpec& spec,
                      const SynthGeometry& geometry, FrameIndex frame_index,
                      std::uint64_t seed);

/// Backbone contract: frame indices of one video -> pooled token grid.
class VideoSource {
 public:
  virtual ~VideoSource() = default;
  virtual FrameIndex FrameCount(const std::string& video_id) const = 0;
  virtual FeatureVolume Extract(const std::string& video_id,
                                const IndexList& frame_indices) const = 0;
};

/// Feature source backed by the planted-cue generator.
class SyntheticVideoSource : public VideoSource {
 public:
  explicit SyntheticVideoSource(SynthGeometry geometry)
      : geometry_(geometry) {}

  void Add(SyntheticVideoSpec spec);
  bool Contains(const std::string& video_id) const;
  const SyntheticVideoSpec& Spec(const std::string& video_id) const;
  const SynthGeometry& geometry() const { return geometry_; }

  FrameIndex FrameCount(const std::string& video_id) const override;
  FeatureVolume Extract(const std::string& video_id,
                        const IndexList& frame_indices) const override;

 private:
  SynthGeometry geometry_;
  std::map<std::string, SyntheticVideoSpec> videos_;
};

}  // namespace surgprod
