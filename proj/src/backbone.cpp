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

#include "surgprod/backbone.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "surgprod/errors.hpp"
#include "surgprod/rng.hpp"

namespace surgprod {

RawGrid FeatureVolume::Unflatten() const {
  RawGrid grid(t, h_p, w_p, d);
  for (int ti = 0; ti < t; ++ti)
    for (int y = 0; y < h_p; ++y)
      for (int x = 0; x < w_p; ++x) {
        const int row = (ti * h_p + y) * w_p + x;
        for (int c = 0; c < d; ++c) grid.at(ti, y, x, c) = tokens(row, c);
      }
  return grid;
}

FeatureVolume PoolAndFlatten(const RawGrid& raw, int h_p, int w_p) {
  if (h_p < 1 || w_p < 1 || raw.h % h_p != 0 || raw.w % w_p != 0) {
    std::ostringstream msg;
    msg << "pool_and_flatten: spatial dims (" << raw.h << ", " << raw.w
        << ") must split into (" << h_p << ", " << w_p
        << ") equal bins; expected h = " << h_p << " * bin_h and w = " << w_p
        << " * bin_w";
    throw ShapeError(msg.str());
  }
  const int bin_h = raw.h / h_p;
  const int bin_w = raw.w / w_p;
  const double inv = 1.0 / (bin_h * bin_w);

  FeatureVolume out;
  out.t = raw.t;
  out.h_p = h_p;
  out.w_p = w_p;
  out.d = raw.d;
  out.tokens = Eigen::MatrixXd::Zero(out.token_count(), raw.d);
  for (int ti = 0; ti < raw.t; ++ti)
    for (int y = 0; y < raw.h; ++y)
      for (int x = 0; x < raw.w; ++x) {
        const int row = (ti * h_p + y / bin_h) * w_p + x / bin_w;
        const double* src = &raw.data[((static_cast<std::size_t>(ti) * raw.h + y) * raw.w + x) * raw.d];
        for (int c = 0; c < raw.d; ++c) out.tokens(row, c) += src[c];
      }
  out.tokens *= inv;
  return out;
}

void SyntheticVideoSpec::Validate(int w_max) const {
  if (num_classes < 1 || class_label < 0 || class_label >= num_classes) {
    throw DataError("video '" + video_id + "': class label out of range");
  }
  if (length_minutes < w_max) {
    throw DataError("video '" + video_id + "': length " +
                    std::to_string(length_minutes) + " min < w_max " +
                    std::to_string(w_max));
  }
  if (cue_amplitude < 0.0 || noise_scale < 0.0) {
    throw DataError("video '" + video_id + "': negative amplitude or noise");
  }
  for (const auto& seg : cue_segments) {
    if (seg.start_minute < 0.0 || seg.end_minute > length_minutes ||
        seg.start_minute > seg.end_minute) {
      throw DataError("video '" + video_id + "': cue segment outside video");
    }
  }
}

Eigen::MatrixXd ClassDirections(int num_classes, int d) {
  if (num_classes < 1 || d < 1) {
    throw InvalidArgument("class directions need num_classes, d >= 1");
  }
  std::mt19937_64 gen(DeriveSeed(0x5eed'c1a5'5d1eULL,
                                 static_cast<std::uint64_t>(num_classes) << 32 |
                                     static_cast<std::uint64_t>(d)));
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd g(d, num_classes);
  for (int c = 0; c < num_classes; ++c)
    for (int r = 0; r < d; ++r) g(r, c) = normal(gen);

  if (d >= num_classes) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q =
        qr.householderQ() * Eigen::MatrixXd::Identity(d, num_classes);
    return q;
  }
  g.colwise().normalize();
  return g;
}

RawGrid SynthFeatures(const SyntheticVideoSpec& spec,
                      const SynthGeometry& geometry, FrameIndex frame_index,
                      std::uint64_t seed) {
  const FrameIndex total =
      static_cast<FrameIndex>(spec.length_minutes) * 60 * geometry.fps;
  if (frame_index < 0 || frame_index >= total) {
    std::ostringstream msg;
    msg << "video '" << spec.video_id << "': frame " << frame_index
        << " outside [0, " << total << ")";
    throw DataError(msg.str());
  }

  RawGrid grid(1, geometry.raw_h, geometry.raw_w, geometry.d);
  if (spec.noise_scale > 0.0) {
    std::mt19937_64 gen(DeriveSeed(DeriveSeed(seed, HashString(spec.video_id)),
                                   static_cast<std::uint64_t>(frame_index)));
    std::normal_distribution<double> normal(0.0, spec.noise_scale);
    for (double& v : grid.data) v = normal(gen);
  }

  const double minute =
      static_cast<double>(frame_index) / (60.0 * geometry.fps);
  bool in_cue = false;
  for (const auto& seg : spec.cue_segments) {
    if (minute >= seg.start_minute && minute < seg.end_minute) in_cue = true;
  }
  if (in_cue && spec.cue_amplitude > 0.0) {
    const Eigen::MatrixXd dirs = ClassDirections(spec.num_classes, geometry.d);
    const Eigen::VectorXd cue = spec.cue_amplitude * dirs.col(spec.class_label);
    const std::size_t cells =
        static_cast<std::size_t>(geometry.raw_h) * geometry.raw_w;
    for (std::size_t cell = 0; cell < cells; ++cell) {
      double* dst = &grid.data[cell * geometry.d];
      for (int c = 0; c < geometry.d; ++c) dst[c] += cue[c];
    }
  }
  return grid;
}

void SyntheticVideoSource::Add(SyntheticVideoSpec spec) {
  const std::string id = spec.video_id;
  videos_[id] = std::move(spec);
}

bool SyntheticVideoSource::Contains(const std::string& video_id) const {
  return videos_.count(video_id) > 0;
}

const SyntheticVideoSpec& SyntheticVideoSource::Spec(
    const std::string& video_id) const {
  auto it = videos_.find(video_id);
  if (it == videos_.end()) {
    throw DataError("unknown video id '" + video_id + "'");
  }
  return it->second;
}

FrameIndex SyntheticVideoSource::FrameCount(const std::string& video_id) const {
  return static_cast<FrameIndex>(Spec(video_id).length_minutes) * 60 *
         geometry_.fps;
}

FeatureVolume SyntheticVideoSource::Extract(
    const std::string& video_id, const IndexList& frame_indices) const {
  const SyntheticVideoSpec& spec = Spec(video_id);
  const FrameIndex total = FrameCount(video_id);
  const int t = static_cast<int>(frame_indices.size());
  RawGrid raw(t, geometry_.raw_h, geometry_.raw_w, geometry_.d);
  const std::size_t frame_size = static_cast<std::size_t>(geometry_.raw_h) *
                                 geometry_.raw_w * geometry_.d;
  for (int i = 0; i < t; ++i) {
    if (frame_indices[i] < 0 || frame_indices[i] >= total) {
      std::ostringstream msg;
      msg << "video '" << video_id << "': frame index " << frame_indices[i]
          << " out of range [0, " << total << ")";
      throw DataError(msg.str());
    }
    const RawGrid frame = SynthFeatures(spec, geometry_, frame_indices[i], spec.seed);
    std::copy(frame.data.begin(), frame.data.end(),
              raw.data.begin() + static_cast<std::ptrdiff_t>(i * frame_size));
  }
  return PoolAndFlatten(raw, geometry_.h_p, geometry_.w_p);
}

}  // namespace surgprod
