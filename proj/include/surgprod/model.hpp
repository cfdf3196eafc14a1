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

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "surgprod/nn.hpp"

namespace surgprod {

enum class Variant { kG, kGL, kGLSCA };

enum class Aggregation {
  kProbabilities,  // softmax per snapshot, then average
  kLogits,         // average scores, then softmax
};

std::string VariantName(Variant v);
Variant ParseVariant(const std::string& name);

struct ModelConfig {
  Variant variant = Variant::kGLSCA;
  int num_classes = 5;
  int t = 8;
  int k = 2;
  int h_p = 4;
  int w_p = 4;
  int encoder_layers = 4;
  int encoder_heads = 4;
  int ffn_mult = 2;
  int d_in = 64;
  int d_bottleneck = 128;
  int sca_blocks = 1;
  int sca_heads = 4;
  int time_hidden = 32;
  int w_max = 18;
  Aggregation aggregation = Aggregation::kProbabilities;
  /// One encoder for all local slots (global keeps its own).
  bool share_local_encoders = true;
  double init_scale = 0.02;
  std::uint64_t init_seed = 0;

  int tokens_per_snapshot() const { return t * h_p * w_p; }
  /// Local snapshots actually consumed by the variant (0 for G).
  int active_locals() const { return variant == Variant::kG ? 0 : k; }
  void Validate() const;
};

/// Transformer phi: learned positional embedding, then `layers` blocks.
/// Shape preserving on (tokens, d_in).
class SnapshotEncoder {
 public:
  struct Cache {
    std::vector<nn::TransformerBlock::Cache> blocks;
  };

  SnapshotEncoder() = default;
  SnapshotEncoder(nn::ParamStore& store, const std::string& name, int tokens,
                  int dim, int layers, int heads, int ffn_hidden);

  nn::Mat Forward(const nn::Mat& x, Cache* cache) const;
  nn::Mat Backward(const nn::Mat& dy, const Cache& cache) const;

 private:
  nn::Param* position_ = nullptr;
  std::vector<nn::TransformerBlock> blocks_;
};

/// Embeds s = w / w_max through a single hidden GELU layer and adds the
/// resulting width-d vector to every token. The output layer starts at zero.
class TimeCondition {
 public:
  struct Cache {
    double s = 0.0;
    nn::RowVec pre;
  };

  TimeCondition() = default;
  TimeCondition(nn::ParamStore& store, const std::string& name, int dim,
                int hidden);

  nn::Mat Forward(const nn::Mat& tokens, int w, int w_max, Cache* cache) const;
  nn::Mat Backward(const nn::Mat& dy, const Cache& cache) const;

 private:
  nn::Param* in_weight_ = nullptr;   // (1, hidden)
  nn::Param* in_bias_ = nullptr;     // (1, hidden)
  nn::Param* out_weight_ = nullptr;  // (hidden, dim)
  nn::Param* out_bias_ = nullptr;    // (1, dim)
};

/// Attention weights of one SCA block: per head a (k*N, k*N) matrix.
/// snapshot_of_token[r] names the local snapshot that token r came from.
struct AttentionExport {
  int block = 0;
  std::vector<nn::Mat> heads;
  std::vector<int> snapshot_of_token;
};

/// Snapshot-centric attention: the k local token sets are concatenated
/// along the token axis, refined by `blocks` transformer blocks, and split
/// back. Every output token therefore sees tokens from every snapshot.
class SnapshotAttention {
 public:
  struct Cache {
    std::vector<nn::TransformerBlock::Cache> blocks;
    std::vector<Eigen::Index> sizes;
  };

  SnapshotAttention() = default;
  SnapshotAttention(nn::ParamStore& store, const std::string& name, int dim,
                    int blocks, int heads, int ffn_hidden);

  std::vector<nn::Mat> Forward(const std::vector<nn::Mat>& locals,
                               Cache* cache,
                               std::vector<AttentionExport>* attention = nullptr) const;
  std::vector<nn::Mat> Backward(const std::vector<nn::Mat>& dy,
                                const Cache& cache) const;

  const std::vector<nn::TransformerBlock>& blocks() const { return blocks_; }

 private:
  std::vector<nn::TransformerBlock> blocks_;
};

/// Shared head: mean over tokens, then an affine map to C scores.
class ClassifierHead {
 public:
  struct Cache {
    Eigen::Index tokens = 0;
    nn::LayerNorm::Cache norm;
    nn::Linear::Cache linear;
  };

  ClassifierHead() = default;
  ClassifierHead(nn::ParamStore& store, const std::string& name, int dim,
                 int num_classes);

  nn::Vec Forward(const nn::Mat& tokens, Cache* cache) const;
  nn::Mat Backward(const nn::Vec& dscores, const Cache& cache) const;

 private:
  nn::LayerNorm norm_;
  nn::Linear linear_;
};

/// Combines per-snapshot scores into one probability vector.
nn::Vec Aggregate(const std::vector<nn::Vec>& scores, Aggregation mode);
/// Vector-Jacobian product of Aggregate.
std::vector<nn::Vec> AggregateBackward(const std::vector<nn::Vec>& scores,
                                       const nn::Vec& dprobs,
                                       Aggregation mode);

/// Per-snapshot token inputs of one observation window, each
/// (t*h_p*w_p, d_in). Slot order: global, then local 0..k-1.
struct SnapshotInputs {
  nn::Mat global;
  std::vector<nn::Mat> locals;
  int w = 1;
};

struct SnapshotLogits {
  /// scores[0] is the global snapshot, scores[1 + i] local snapshot i.
  std::vector<nn::Vec> scores;
  nn::Vec probs;
};

class SurgProdModel {
 public:
  struct Cache {
    SnapshotEncoder::Cache global_enc;
    std::vector<SnapshotEncoder::Cache> local_enc;
    std::vector<nn::Linear::Cache> bottleneck;  // slot order
    std::vector<TimeCondition::Cache> time;      // slot order
    SnapshotAttention::Cache sca;
    std::vector<ClassifierHead::Cache> head;     // slot order
    std::vector<nn::Vec> scores;
  };

  explicit SurgProdModel(const ModelConfig& config);
  SurgProdModel(const SurgProdModel&) = delete;
  SurgProdModel& operator=(const SurgProdModel&) = delete;

  const ModelConfig& config() const { return config_; }
  nn::ParamStore& params() { return *store_; }
  const nn::ParamStore& params() const { return *store_; }

  SnapshotLogits Forward(const SnapshotInputs& inputs, Cache* cache = nullptr,
                         std::vector<AttentionExport>* attention = nullptr) const;

  /// Backpropagates d(loss)/d(probs); accumulates parameter gradients and
  /// returns input gradients in slot order (global first).
  std::vector<nn::Mat> Backward(const Cache& cache, const nn::Vec& dprobs) const;

  const SnapshotEncoder& global_encoder() const { return global_encoder_; }
  const SnapshotEncoder& local_encoder(int slot) const;
  const nn::Linear& bottleneck() const { return bottleneck_; }
  const TimeCondition& time_condition() const { return time_; }
  const SnapshotAttention& sca() const { return sca_; }
  const ClassifierHead& head() const { return head_; }

 private:
  ModelConfig config_;
  std::unique_ptr<nn::ParamStore> store_;
  SnapshotEncoder global_encoder_;
  std::vector<SnapshotEncoder> local_encoders_;
  nn::Linear bottleneck_;
  TimeCondition time_;
  SnapshotAttention sca_;
  ClassifierHead head_;
};

}  // namespace surgprod
