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
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "surgprod/backbone.hpp"
#include "surgprod/metrics.hpp"
#include "surgprod/model.hpp"

namespace surgprod {

enum class Reduction { kSum, kMean };

struct TrainConfig {
  double learning_rate = 1e-3;
  double weight_decay = 5e-2;
  int epochs = 30;
  int batch_size = 8;
  double lr_decay_factor = 0.1;
  std::vector<int> lr_decay_epochs = {10, 20};
  std::uint64_t seed = 0;
  Reduction reduction = Reduction::kSum;
  /// Training samples drawn per training video per epoch.
  int samples_per_video = 1;
  /// Validate every this many epochs (and always after the last one).
  int val_every = 1;
  /// Restore the weights with the best validation meanES after training.
  bool select_best = true;
  /// Std of Gaussian feature jitter added to training inputs; 0 disables.
  double jitter_std = 0.0;
  double tau = 0.7;
  int fps = 1;

  void Validate() const;
  /// Sets `epochs` and moves each decay epoch to the same fraction of the new
  /// length (rounded, at least 1, duplicates dropped).
  void RescaleEpochs(int new_epochs);
};

/// -sum_b sum_c y_bc log(max(p_bc, 1e-8)), optionally divided by B.
double CrossEntropy(const std::vector<nn::Vec>& probs,
                    const std::vector<nn::Vec>& onehot,
                    Reduction reduction = Reduction::kSum);

/// Gradient of a single sample's clamped cross-entropy w.r.t. its
/// probability vector.
nn::Vec CrossEntropyGrad(const nn::Vec& probs, int label);

nn::Vec OneHot(int label, int num_classes);

/// base * factor^(number of decay epochs <= epoch); epoch is 1-based.
double LrAtEpoch(int epoch, const TrainConfig& config);

/// Decoupled weight decay Adam.
class AdamW {
 public:
  AdamW(double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void Step(nn::ParamStore& params, double lr, double weight_decay);
  long steps() const { return steps_; }

 private:
  double beta1_, beta2_, eps_;
  long steps_ = 0;
};

/// Uniform draw from {1, ..., w_max}.
int SampleTrainingWindow(int w_max, std::mt19937_64& rng);

struct LabeledVideo {
  std::string video_id;
  int label = 0;
};

/// Snapshot inputs for one window of one video. Variant G extracts only the
/// global snapshot.
SnapshotInputs MakeInputs(const ModelConfig& config, const VideoSource& source,
                          const std::string& video_id, int w, int fps,
                          SamplingMode mode, std::uint64_t seed);

/// Predictions for windows 1..w_max with uniform sampling.
metrics::PredictionStream PredictVideo(const SurgProdModel& model,
                                       const VideoSource& source,
                                       const LabeledVideo& video,
                                       const std::string& scale, int fps);

std::vector<metrics::PredictionStream> PredictStreams(
    const SurgProdModel& model, const VideoSource& source,
    const std::vector<LabeledVideo>& videos, const std::string& scale, int fps);

struct EpochLog {
  int epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;  // mean per-sample loss
  double val_top1 = 0.0;    // NaN when not validated this epoch
  double val_mean_es = 0.0;
};

struct TrainResult {
  std::vector<EpochLog> log;
  int best_epoch = 0;
  double best_val_mean_es = 0.0;
};

struct TrainingData {
  const VideoSource* source = nullptr;
  std::vector<LabeledVideo> train;
  std::vector<LabeledVideo> val;
  std::string scale;
};

using EpochCallback = std::function<void(const EpochLog&)>;

/// Trains `model` in place. Single-threaded and deterministic in
/// (model init, data, config).
TrainResult Train(SurgProdModel& model, const TrainingData& data,
                  const TrainConfig& config, const EpochCallback& on_epoch = {});

}  // namespace surgprod
