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

#include "surgprod/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "surgprod/errors.hpp"
#include "surgprod/rng.hpp"

namespace surgprod {

using nn::Mat;
using nn::Vec;

namespace {
constexpr double kProbFloor = 1e-8;
}

void TrainConfig::Validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("train config: " + what); };
  if (!(learning_rate >= 0.0)) fail("learning_rate must be >= 0");
  if (!(weight_decay >= 0.0)) fail("weight_decay must be >= 0");
  if (epochs < 1) fail("epochs must be >= 1");
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (!(lr_decay_factor > 0.0)) fail("lr_decay_factor must be positive");
  for (int e : lr_decay_epochs) {
    if (e < 1 || e > epochs) fail("decay epoch " + std::to_string(e) + " outside [1, epochs]");
  }
  if (samples_per_video < 1) fail("samples_per_video must be >= 1");
  if (val_every < 1) fail("val_every must be >= 1");
  if (!(jitter_std >= 0.0)) fail("jitter_std must be >= 0");
  if (!(tau >= 0.0 && tau < 1.0)) fail("tau must lie in [0, 1)");
  if (fps < 1) fail("fps must be >= 1");
}

void TrainConfig::RescaleEpochs(int new_epochs) {
  if (new_epochs < 1) throw ConfigError("train config: epochs must be >= 1");
  std::vector<int> decay;
  for (int e : lr_decay_epochs) {
    const int scaled = std::max(1, static_cast<int>(std::lround(
                                       static_cast<double>(e) * new_epochs / epochs)));
    if (std::find(decay.begin(), decay.end(), scaled) == decay.end()) decay.push_back(scaled);
  }
  lr_decay_epochs = std::move(decay);
  epochs = new_epochs;
}

Vec OneHot(int label, int num_classes) {
  if (label < 0 || label >= num_classes) throw InvalidArgument("one-hot label out of range");
  Vec v = Vec::Zero(num_classes);
  v(label) = 1.0;
  return v;
}

double CrossEntropy(const std::vector<Vec>& probs, const std::vector<Vec>& onehot,
                    Reduction reduction) {
  if (probs.empty() || probs.size() != onehot.size()) {
    throw ShapeError("cross_entropy: batch sizes differ or batch is empty");
  }
  double loss = 0.0;
  for (std::size_t b = 0; b < probs.size(); ++b) {
    if (probs[b].size() != onehot[b].size()) {
      throw ShapeError("cross_entropy: class count mismatch in row " + std::to_string(b));
    }
    if (std::abs(probs[b].sum() - 1.0) > 1e-6) {
      throw InvalidArgument("cross_entropy: row " + std::to_string(b) + " is not normalized");
    }
    for (Eigen::Index c = 0; c < probs[b].size(); ++c) {
      if (onehot[b](c) != 0.0) {
        loss -= onehot[b](c) * std::log(std::max(probs[b](c), kProbFloor));
      }
    }
  }
  if (reduction == Reduction::kMean) loss /= static_cast<double>(probs.size());
  return loss;
}

Vec CrossEntropyGrad(const Vec& probs, int label) {
  Vec g = Vec::Zero(probs.size());
  if (probs(label) > kProbFloor) g(label) = -1.0 / probs(label);
  return g;
}

double LrAtEpoch(int epoch, const TrainConfig& config) {
  if (epoch < 1 || epoch > config.epochs) {
    throw InvalidArgument("lr_at_epoch: epoch " + std::to_string(epoch) + " outside [1, " +
                          std::to_string(config.epochs) + "]");
  }
  int decays = 0;
  for (int e : config.lr_decay_epochs) decays += e <= epoch ? 1 : 0;
  return config.learning_rate * std::pow(config.lr_decay_factor, decays);
}

void AdamW::Step(nn::ParamStore& params, double lr, double weight_decay) {
  ++steps_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(steps_));
  for (auto& p : params.params()) {
    p.value *= 1.0 - lr * weight_decay;
    p.m = beta1_ * p.m + (1.0 - beta1_) * p.grad;
    p.v = beta2_ * p.v + (1.0 - beta2_) * p.grad.cwiseProduct(p.grad);
    p.value.array() -=
        lr * (p.m.array() / c1) / ((p.v.array() / c2).sqrt() + eps_);
  }
}

int SampleTrainingWindow(int w_max, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> dist(1, w_max);
  return dist(rng);
}

SnapshotInputs MakeInputs(const ModelConfig& config, const VideoSource& source,
                          const std::string& video_id, int w, int fps,
                          SamplingMode mode, std::uint64_t seed) {
  const ObservationWindow window =
      ObservationWindow::Make(video_id, w, fps, source.FrameCount(video_id));
  const SnapshotPlan plan = BuildPlan(window, config.t, config.active_locals(), mode, seed);
  SnapshotInputs inputs;
  inputs.w = w;
  inputs.global = source.Extract(video_id, plan.global_indices).tokens;
  for (const auto& local : plan.local_indices) {
    inputs.locals.push_back(source.Extract(video_id, local).tokens);
  }
  return inputs;
}

metrics::PredictionStream PredictVideo(const SurgProdModel& model,
                                       const VideoSource& source,
                                       const LabeledVideo& video,
                                       const std::string& scale, int fps) {
  const ModelConfig& cfg = model.config();
  metrics::PredictionStream stream;
  stream.video_id = video.video_id;
  stream.scale = scale;
  stream.w_max = cfg.w_max;
  for (int w = 1; w <= cfg.w_max; ++w) {
    const SnapshotInputs inputs =
        MakeInputs(cfg, source, video.video_id, w, fps, SamplingMode::kUniform, 0);
    const SnapshotLogits out = model.Forward(inputs);
    metrics::PredictionEntry entry;
    entry.w = w;
    entry.label = video.label;
    entry.probs.assign(out.probs.data(), out.probs.data() + out.probs.size());
    stream.entries.push_back(std::move(entry));
  }
  return stream;
}

std::vector<metrics::PredictionStream> PredictStreams(
    const SurgProdModel& model, const VideoSource& source,
    const std::vector<LabeledVideo>& videos, const std::string& scale, int fps) {
  std::vector<metrics::PredictionStream> streams;
  streams.reserve(videos.size());
  for (const auto& v : videos) streams.push_back(PredictVideo(model, source, v, scale, fps));
  return streams;
}

TrainResult Train(SurgProdModel& model, const TrainingData& data,
                  const TrainConfig& config, const EpochCallback& on_epoch) {
  config.Validate();
  if (data.source == nullptr || data.train.empty()) {
    throw DataError("train: empty training set");
  }
  const ModelConfig& cfg = model.config();
  nn::ParamStore& params = model.params();
  params.ZeroGrad();

  std::mt19937_64 rng(DeriveSeed(config.seed, 0x7a11));
  std::normal_distribution<double> jitter(0.0, config.jitter_std > 0.0 ? config.jitter_std : 1.0);
  AdamW optimizer;
  TrainResult result;
  result.best_val_mean_es = -1.0;
  std::vector<Mat> best_weights;

  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < data.train.size(); ++i) {
    for (int r = 0; r < config.samples_per_video; ++r) order.push_back(i);
  }

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const double lr = LrAtEpoch(epoch, config);
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    int in_batch = 0;
    const double scale = config.reduction == Reduction::kMean ? 1.0 / config.batch_size : 1.0;

    for (std::size_t step = 0; step < order.size(); ++step) {
      const LabeledVideo& video = data.train[order[step]];
      const int w = SampleTrainingWindow(cfg.w_max, rng);
      const std::uint64_t plan_seed = rng();
      SnapshotInputs inputs = MakeInputs(cfg, *data.source, video.video_id, w, config.fps,
                                         SamplingMode::kRandom, plan_seed);
      if (config.jitter_std > 0.0) {
        auto add = [&](Mat& m) { m = m.unaryExpr([&](double v) { return v + jitter(rng); }); };
        add(inputs.global);
        for (auto& l : inputs.locals) add(l);
      }

      SurgProdModel::Cache cache;
      const SnapshotLogits out = model.Forward(inputs, &cache);
      const double loss = CrossEntropy({out.probs}, {OneHot(video.label, cfg.num_classes)});
      if (!std::isfinite(loss)) {
        std::ostringstream msg;
        msg << "non-finite loss at epoch " << epoch << ", step " << step << ", video '"
            << video.video_id << "', w=" << w;
        throw NumericalError(msg.str());
      }
      epoch_loss += loss;
      model.Backward(cache, CrossEntropyGrad(out.probs, video.label) * scale);
      ++in_batch;

      if (in_batch == config.batch_size || step + 1 == order.size()) {
        if (config.reduction == Reduction::kMean && in_batch != config.batch_size) {
          // Partial last batch: renormalize to its true size.
          for (auto& p : params.params()) p.grad *= static_cast<double>(config.batch_size) / in_batch;
        }
        optimizer.Step(params, lr, config.weight_decay);
        params.ZeroGrad();
        in_batch = 0;
      }
    }

    EpochLog row;
    row.epoch = epoch;
    row.lr = lr;
    row.train_loss = epoch_loss / static_cast<double>(order.size());
    row.val_top1 = std::numeric_limits<double>::quiet_NaN();
    row.val_mean_es = std::numeric_limits<double>::quiet_NaN();

    const bool validate = !data.val.empty() &&
                          (epoch % config.val_every == 0 || epoch == config.epochs);
    if (validate) {
      const auto streams = PredictStreams(model, *data.source, data.val, data.scale, config.fps);
      row.val_top1 = metrics::Top1Accuracy(streams);
      row.val_mean_es = metrics::MeanEs(streams, config.tau);
      if (row.val_mean_es > result.best_val_mean_es) {
        result.best_val_mean_es = row.val_mean_es;
        result.best_epoch = epoch;
        best_weights.clear();
        for (const auto& p : params.params()) best_weights.push_back(p.value);
      }
    }
    result.log.push_back(row);
    if (on_epoch) on_epoch(row);
  }

  if (config.select_best && !best_weights.empty()) {
    std::size_t i = 0;
    for (auto& p : params.params()) p.value = best_weights[i++];
  }
  if (result.best_epoch == 0) {
    result.best_epoch = config.epochs;
    result.best_val_mean_es = 0.0;
  }
  return result;
}

}  // namespace surgprod
