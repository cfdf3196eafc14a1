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

#include <string>

#include "json.hpp"
#include "surgprod/backbone.hpp"
#include "surgprod/dataset.hpp"
#include "surgprod/metrics.hpp"
#include "surgprod/model.hpp"
#include "surgprod/training.hpp"

namespace surgprod {

// JSON mirrors of the configuration structs. Every field is optional on
// input; unknown keys are rejected with ConfigError.

nlohmann::json ToJson(const ModelConfig& c);
nlohmann::json ToJson(const TrainConfig& c);
nlohmann::json ToJson(const DatasetConfig& c);
nlohmann::json ToJson(const SynthGeometry& g);

void FromJson(const nlohmann::json& j, ModelConfig& c);
void FromJson(const nlohmann::json& j, TrainConfig& c);
void FromJson(const nlohmann::json& j, DatasetConfig& c);
void FromJson(const nlohmann::json& j, SynthGeometry& g);

}  // namespace surgprod
