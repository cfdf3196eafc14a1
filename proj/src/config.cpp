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

#include "surgprod/config.hpp"

#include <functional>
#include <map>

#include "surgprod/errors.hpp"

namespace surgprod {

using json = nlohmann::json;

namespace {

using Setter = std::function<void(const json&)>;

void Apply(const json& j, const std::string& section,
           const std::map<std::string, Setter>& setters) {
  if (!j.is_object()) throw ConfigError(section + ": expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError(section + ": unknown field '" + key + "'");
    try {
      it->second(value);
    } catch (const json::exception& e) {
      throw ConfigError(section + "." + key + ": " + e.what());
    }
  }
}

template <typename T>
Setter Into(T& field) {
  return [&field](const json& v) { field = v.get<T>(); };
}

std::string AggregationName(Aggregation a) {
  return a == Aggregation::kLogits ? "logits" : "probabilities";
}

}  // namespace

json ToJson(const ModelConfig& c) {
  return {{"variant", VariantName(c.variant)},
          {"num_classes", c.num_classes},
          {"t", c.t},
          {"k", c.k},
          {"h_p", c.h_p},
          {"w_p", c.w_p},
          {"encoder_layers", c.encoder_layers},
          {"encoder_heads", c.encoder_heads},
          {"ffn_mult", c.ffn_mult},
          {"d_in", c.d_in},
          {"d_bottleneck", c.d_bottleneck},
          {"sca_blocks", c.sca_blocks},
          {"sca_heads", c.sca_heads},
          {"time_hidden", c.time_hidden},
          {"w_max", c.w_max},
          {"aggregation", AggregationName(c.aggregation)},
          {"share_local_encoders", c.share_local_encoders},
          {"init_scale", c.init_scale},
          {"init_seed", c.init_seed}};
}

void FromJson(const json& j, ModelConfig& c) {
  Apply(j, "model",
        {{"variant", [&](const json& v) { c.variant = ParseVariant(v.get<std::string>()); }},
         {"num_classes", Into(c.num_classes)},
         {"t", Into(c.t)},
         {"k", Into(c.k)},
         {"h_p", Into(c.h_p)},
         {"w_p", Into(c.w_p)},
         {"encoder_layers", Into(c.encoder_layers)},
         {"encoder_heads", Into(c.encoder_heads)},
         {"ffn_mult", Into(c.ffn_mult)},
         {"d_in", Into(c.d_in)},
         {"d_bottleneck", Into(c.d_bottleneck)},
         {"sca_blocks", Into(c.sca_blocks)},
         {"sca_heads", Into(c.sca_heads)},
         {"time_hidden", Into(c.time_hidden)},
         {"w_max", Into(c.w_max)},
         {"aggregation",
          [&](const json& v) {
            const auto s = v.get<std::string>();
            if (s == "logits") {
              c.aggregation = Aggregation::kLogits;
            } else if (s == "probabilities" || s == "probs") {
              c.aggregation = Aggregation::kProbabilities;
            } else {
              throw ConfigError("model.aggregation: expected 'probabilities' or 'logits'");
            }
          }},
         {"share_local_encoders", Into(c.share_local_encoders)},
         {"init_scale", Into(c.init_scale)},
         {"init_seed", Into(c.init_seed)}});
}

json ToJson(const TrainConfig& c) {
  return {{"learning_rate", c.learning_rate},
          {"weight_decay", c.weight_decay},
          {"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"lr_decay_factor", c.lr_decay_factor},
          {"lr_decay_epochs", c.lr_decay_epochs},
          {"seed", c.seed},
          {"reduction", c.reduction == Reduction::kMean ? "mean" : "sum"},
          {"samples_per_video", c.samples_per_video},
          {"val_every", c.val_every},
          {"select_best", c.select_best},
          {"jitter_std", c.jitter_std},
          {"tau", c.tau},
          {"fps", c.fps}};
}

void FromJson(const json& j, TrainConfig& c) {
  Apply(j, "train",
        {{"learning_rate", Into(c.learning_rate)},
         {"weight_decay", Into(c.weight_decay)},
         {"epochs", Into(c.epochs)},
         {"batch_size", Into(c.batch_size)},
         {"lr_decay_factor", Into(c.lr_decay_factor)},
         {"lr_decay_epochs", Into(c.lr_decay_epochs)},
         {"seed", Into(c.seed)},
         {"reduction",
          [&](const json& v) {
            const auto s = v.get<std::string>();
            if (s != "sum" && s != "mean") throw ConfigError("train.reduction: expected sum or mean");
            c.reduction = s == "mean" ? Reduction::kMean : Reduction::kSum;
          }},
         {"samples_per_video", Into(c.samples_per_video)},
         {"val_every", Into(c.val_every)},
         {"select_best", Into(c.select_best)},
         {"jitter_std", Into(c.jitter_std)},
         {"tau", Into(c.tau)},
         {"fps", Into(c.fps)}});
}

json ToJson(const DatasetConfig& c) {
  json priors = json::object();
  for (const auto& [k, v] : c.priors) priors[k] = v;
  return {{"n_videos", c.n_videos},
          {"seed", c.seed},
          {"w_max", c.w_max},
          {"max_extra_minutes", c.max_extra_minutes},
          {"cue_amplitude", c.cue_amplitude},
          {"noise_scale", c.noise_scale},
          {"cue_width_minutes", c.cue_width_minutes},
          {"rater_flip", c.rater_flip},
          {"balanced", c.balanced},
          {"priors", priors}};
}

void FromJson(const json& j, DatasetConfig& c) {
  Apply(j, "dataset",
        {{"n_videos", Into(c.n_videos)},
         {"seed", Into(c.seed)},
         {"w_max", Into(c.w_max)},
         {"max_extra_minutes", Into(c.max_extra_minutes)},
         {"cue_amplitude", Into(c.cue_amplitude)},
         {"noise_scale", Into(c.noise_scale)},
         {"cue_width_minutes", Into(c.cue_width_minutes)},
         {"rater_flip", Into(c.rater_flip)},
         {"balanced", Into(c.balanced)},
         {"priors", [&](const json& v) {
            c.priors.clear();
            for (const auto& [k, p] : v.items()) c.priors[k] = p.get<std::vector<double>>();
          }}});
}

json ToJson(const SynthGeometry& g) {
  return {{"fps", g.fps}, {"raw_h", g.raw_h}, {"raw_w", g.raw_w},
          {"h_p", g.h_p}, {"w_p", g.w_p},     {"d", g.d}};
}

void FromJson(const json& j, SynthGeometry& g) {
  Apply(j, "geometry",
        {{"fps", Into(g.fps)},
         {"raw_h", Into(g.raw_h)},
         {"raw_w", Into(g.raw_w)},
         {"h_p", Into(g.h_p)},
         {"w_p", Into(g.w_p)},
         {"d", Into(g.d)}});
}

}  // namespace surgprod
