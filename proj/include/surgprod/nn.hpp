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

// Layers with hand-written backward passes. Layers hold only weight
// handles; every forward call fills a caller-owned cache, so one layer can be
// applied several times per sample (shared local encoders) and frozen
// weights can be read from many threads at once.

#include <Eigen/Dense>
#include <deque>
#include <random>
#include <string>
#include <vector>

namespace surgprod::nn {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using RowVec = Eigen::RowVectorXd;

struct Param {
  std::string name;
  Mat value;
  Mat grad;
  // AdamW moments.
  Mat m;
  Mat v;

  Param(std::string n, Mat init)
      : name(std::move(n)),
        value(std::move(init)),
        grad(Mat::Zero(value.rows(), value.cols())),
        m(Mat::Zero(value.rows(), value.cols())),
        v(Mat::Zero(value.rows(), value.cols())) {}
};

enum class Init { kZeros, kOnes, kNormal };

/// Owns every parameter of a model. Addresses are stable for its lifetime.
class ParamStore {
 public:
  explicit ParamStore(std::uint64_t seed = 0, double init_scale = 0.02)
      : gen_(seed), init_scale_(init_scale) {}
  ParamStore(const ParamStore&) = delete;
  ParamStore& operator=(const ParamStore&) = delete;

  /// kNormal draws N(0, scale^2); a non-positive scale means the store's
  /// default init_scale.
  Param* Create(const std::string& name, int rows, int cols, Init init,
                double scale = 0.0);

  Param* Find(const std::string& name);
  const Param* Find(const std::string& name) const;
  std::deque<Param>& params() { return params_; }
  const std::deque<Param>& params() const { return params_; }

  void ZeroGrad();
  std::size_t Count() const;

 private:
  std::deque<Param> params_;
  std::mt19937_64 gen_;
  double init_scale_;
};

double Gelu(double x);
double GeluGrad(double x);

class Linear {
 public:
  struct Cache {
    Mat x;
  };

  Linear() = default;
  Linear(ParamStore& store, const std::string& name, int in, int out,
         Init weight_init = Init::kNormal);

  Mat Forward(const Mat& x, Cache* cache) const;
  /// Accumulates weight gradients; returns d(loss)/d(x).
  Mat Backward(const Mat& dy, const Cache& cache) const;

  int in() const { return static_cast<int>(weight_->value.rows()); }
  int out() const { return static_cast<int>(weight_->value.cols()); }
  Param* weight() const { return weight_; }
  Param* bias() const { return bias_; }

 private:
  Param* weight_ = nullptr;  // (in, out)
  Param* bias_ = nullptr;    // (1, out)
};

class LayerNorm {
 public:
  struct Cache {
    Mat xhat;
    Vec inv_std;
  };

  LayerNorm() = default;
  LayerNorm(ParamStore& store, const std::string& name, int dim);

  Mat Forward(const Mat& x, Cache* cache) const;
  Mat Backward(const Mat& dy, const Cache& cache) const;

 private:
  Param* gamma_ = nullptr;
  Param* beta_ = nullptr;
  static constexpr double kEps = 1e-5;
};

/// Multi-head scaled dot-product self-attention over the rows of x.
class MultiHeadAttention {
 public:
  struct Cache {
    Linear::Cache q_in, k_in, v_in, out_in;
    Mat q, k, v;
    std::vector<Mat> attn;  // per head, (tokens, tokens), rows sum to 1
  };

  MultiHeadAttention() = default;
  MultiHeadAttention(ParamStore& store, const std::string& name, int dim,
                     int heads);

  Mat Forward(const Mat& x, Cache* cache) const;
  Mat Backward(const Mat& dy, const Cache& cache) const;

  int heads() const { return heads_; }
  const Linear& out_proj() const { return out_; }

 private:
  Linear q_, k_, v_, out_;
  int heads_ = 1;
};

/// Position-wise two-layer GELU network.
class FeedForward {
 public:
  struct Cache {
    Linear::Cache l1, l2;
    Mat pre;
  };

  FeedForward() = default;
  FeedForward(ParamStore& store, const std::string& name, int dim, int hidden);

  Mat Forward(const Mat& x, Cache* cache) const;
  Mat Backward(const Mat& dy, const Cache& cache) const;

  const Linear& out_proj() const { return l2_; }

 private:
  Linear l1_, l2_;
};

/// Pre-norm transformer block:
///   h = x + Attn(LN1(x)),  y = h + FFN(LN2(h)).
/// The attention and FFN output projections start at zero, so a freshly
/// built block is the identity map.
class TransformerBlock {
 public:
  struct Cache {
    LayerNorm::Cache ln1, ln2;
    MultiHeadAttention::Cache attn;
    FeedForward::Cache ffn;
  };

  TransformerBlock() = default;
  TransformerBlock(ParamStore& store, const std::string& name, int dim,
                   int heads, int ffn_hidden);

  Mat Forward(const Mat& x, Cache* cache) const;
  Mat Backward(const Mat& dy, const Cache& cache) const;

  const MultiHeadAttention& attention() const { return attn_; }
  const FeedForward& feed_forward() const { return ffn_; }

 private:
  LayerNorm ln1_, ln2_;
  MultiHeadAttention attn_;
  FeedForward ffn_;
};

/// Numerically stable softmax of a vector.
Vec Softmax(const Vec& logits);

}  // namespace surgprod::nn
