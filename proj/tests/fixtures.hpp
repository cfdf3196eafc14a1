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

// Small end-to-end setups that train in well under a second.

#include "surgprod/dataset.hpp"
#include "surgprod/experiment.hpp"

namespace fixtures {

inline surgprod::SynthGeometry TinyGeometry() {
  surgprod::SynthGeometry g;
  g.raw_h = 4;
  g.raw_w = 4;
  g.h_p = 2;
  g.w_p = 2;
  g.d = 8;
  return g;
}

// Run manifest over 20 short videos, 2-frame snapshots and one encoder layer.
inline surgprod::RunManifest TinyManifest(const std::string& out_dir) {
  surgprod::RunManifest m;
  m.scale = "s";
  m.geometry = TinyGeometry();
  m.dataset.n_videos = 20;
  m.dataset.w_max = 4;
  m.dataset.max_extra_minutes = 2;
  m.dataset.cue_width_minutes = 2;
  m.model.t = 2;
  m.model.k = 2;
  m.model.encoder_layers = 1;
  m.model.encoder_heads = 2;
  m.model.d_bottleneck = 8;
  m.model.sca_heads = 2;
  m.model.time_hidden = 4;
  m.train.epochs = 3;
  m.train.batch_size = 4;
  m.train.lr_decay_epochs = {2};
  m.attention_videos = 1;
  m.out_dir = out_dir;
  return m;
}

}  // namespace fixtures
