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

#include "surgprod/model.hpp"

#include <cmath>
#include <sstream>

#include "surgprod/errors.hpp"

namespace surgprod {

using nn::Mat;
using nn::RowVec;
using nn::Vec;

std::string VariantName(Variant v) {
  switch (v) {
    case Variant::kG:
      return "g";
    case Variant::kGL:
      return "gl";
    case Variant::kGLSCA:
      return "gl-sca";
  }
  return "?";
}

Variant ParseVariant(const std::string& name) {
  std::string lower;
  for (char c : name) lower.push_back(static_cast<char>(std::tolower(c)));
  if (lower == "g") return Variant::kG;
  if (lower == "gl") return Variant::kGL;
  if (lower == "gl-sca" || lower == "gl_sca" || lower == "glsca") {
    return Variant::kGLSCA;
  }
  throw ConfigError("unknown variant '" + name + "' (expected g, gl, gl-sca)");
}

void ModelConfig::Validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("model config: " + what); };
  if (num_classes < 2) fail("num_classes must be >= 2");
  if (t < 1 || h_p < 1 || w_p < 1) fail("t, h_p, w_p must be >= 1");
  if (variant != Variant::kG && k < 1) fail("k must be >= 1 for gl / gl-sca");
  if (k < 0) fail("k must be >= 0");
  if (variant == Variant::kGLSCA && sca_blocks < 1) fail("sca_blocks must be >= 1 for gl-sca");
  if (encoder_layers < 0) fail("encoder_layers must be >= 0");
  if (encoder_heads < 1 || d_in % encoder_heads != 0) fail("d_in must be divisible by encoder_heads");
  if (sca_heads < 1 || d_bottleneck % sca_heads != 0) fail("d_bottleneck must be divisible by sca_heads");
  if (d_in < 1 || d_bottleneck < 1 || ffn_mult < 1 || time_hidden < 1) fail("widths must be positive");
  if (w_max < 1) fail("w_max must be >= 1");
  if (!(init_scale > 0.0)) fail("init_scale must be positive");
}

// -------------------------------------------------------- SnapshotEncoder

SnapshotEncoder::SnapshotEncoder(nn::ParamStore& store, const std::string& name,
                                 int tokens, int dim, int layers, int heads,
                                 int ffn_hidden) {
  position_ = store.Create(name + ".position", tokens, dim, nn::Init::kNormal);
  blocks_.reserve(layers);
  for (int i = 0; i < layers; ++i) {
    blocks_.emplace_back(store, name + ".layer" + std::to_string(i), dim, heads,
                         ffn_hidden);
  }
}

Mat SnapshotEncoder::Forward(const Mat& x, Cache* cache) const {
  if (x.rows() != position_->value.rows() || x.cols() != position_->value.cols()) {
    std::ostringstream msg;
    msg << "encoder: expected tokens (" << position_->value.rows() << ", "
        << position_->value.cols() << "), got (" << x.rows() << ", " << x.cols() << ")";
    throw ShapeError(msg.str());
  }
  Mat h = x + position_->value;
  if (cache != nullptr) cache->blocks.resize(blocks_.size());
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    h = blocks_[i].Forward(h, cache != nullptr ? &cache->blocks[i] : nullptr);
  }
  return h;
}

Mat SnapshotEncoder::Backward(const Mat& dy, const Cache& cache) const {
  Mat g = dy;
  for (std::size_t i = blocks_.size(); i-- > 0;) {
    g = blocks_[i].Backward(g, cache.blocks[i]);
  }
  position_->grad += g;
  return g;
}

// ---------------------------------------------------------- TimeCondition

TimeCondition::TimeCondition(nn::ParamStore& store, const std::string& name,
                             int dim, int hidden) {
  // Unit-scale hidden layer so different w map to distinct codes.
  in_weight_ = store.Create(name + ".fc1.weight", 1, hidden, nn::Init::kNormal, 1.0);
  in_bias_ = store.Create(name + ".fc1.bias", 1, hidden, nn::Init::kNormal, 1.0);
  out_weight_ = store.Create(name + ".fc2.weight", hidden, dim, nn::Init::kZeros);
  out_bias_ = store.Create(name + ".fc2.bias", 1, dim, nn::Init::kZeros);
}

Mat TimeCondition::Forward(const Mat& tokens, int w, int w_max,
                           Cache* cache) const {
  if (w < 1 || w > w_max) {
    throw InvalidArgument("time_condition: w=" + std::to_string(w) +
                          " outside [1, " + std::to_string(w_max) + "]");
  }
  if (tokens.cols() != out_weight_->value.cols()) {
    throw ShapeError("time_condition: token width mismatch");
  }
  const double s = static_cast<double>(w) / w_max;
  RowVec pre = s * in_weight_->value.row(0) + in_bias_->value.row(0);
  RowVec hidden = pre.unaryExpr([](double v) { return nn::Gelu(v); });
  RowVec embed = hidden * out_weight_->value + out_bias_->value.row(0);
  if (cache != nullptr) {
    cache->s = s;
    cache->pre = pre;
  }
  Mat out = tokens;
  out.rowwise() += embed;
  return out;
}

Mat TimeCondition::Backward(const Mat& dy, const Cache& cache) const {
  RowVec dembed = dy.colwise().sum();
  RowVec hidden = cache.pre.unaryExpr([](double v) { return nn::Gelu(v); });
  out_weight_->grad.noalias() += hidden.transpose() * dembed;
  out_bias_->grad += dembed;
  RowVec dhidden = dembed * out_weight_->value.transpose();
  RowVec dpre = dhidden.cwiseProduct(
      cache.pre.unaryExpr([](double v) { return nn::GeluGrad(v); }));
  in_weight_->grad += cache.s * dpre;
  in_bias_->grad += dpre;
  return dy;
}

// ------------------------------------------------------ SnapshotAttention

SnapshotAttention::SnapshotAttention(nn::ParamStore& store,
                                     const std::string& name, int dim,
                                     int blocks, int heads, int ffn_hidden) {
  blocks_.reserve(blocks);
  for (int i = 0; i < blocks; ++i) {
    blocks_.emplace_back(store, name + ".block" + std::to_string(i), dim, heads,
                         ffn_hidden);
  }
}

std::vector<Mat> SnapshotAttention::Forward(
    const std::vector<Mat>& locals, Cache* cache,
    std::vector<AttentionExport>* attention) const {
  if (locals.empty()) throw ShapeError("sca: no local snapshots");
  Eigen::Index rows = 0;
  const Eigen::Index width = locals.front().cols();
  const Eigen::Index per = locals.front().rows();
  for (const auto& l : locals) {
    if (l.cols() != width || l.rows() != per) {
      throw ShapeError("sca: local snapshots must share one token shape");
    }
    rows += l.rows();
  }
  Mat h(rows, width);
  Eigen::Index offset = 0;
  for (const auto& l : locals) {
    h.middleRows(offset, l.rows()) = l;
    offset += l.rows();
  }

  const bool keep = cache != nullptr || attention != nullptr;
  Cache scratch;
  Cache& c = cache != nullptr ? *cache : scratch;
  if (keep) c.blocks.resize(blocks_.size());
  c.sizes.assign(locals.size(), per);
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    h = blocks_[b].Forward(h, keep ? &c.blocks[b] : nullptr);
    if (attention != nullptr) {
      AttentionExport ex;
      ex.block = static_cast<int>(b);
      ex.heads = c.blocks[b].attn.attn;
      ex.snapshot_of_token.resize(static_cast<std::size_t>(rows));
      for (Eigen::Index r = 0; r < rows; ++r) {
        ex.snapshot_of_token[static_cast<std::size_t>(r)] = static_cast<int>(r / per);
      }
      attention->push_back(std::move(ex));
    }
  }

  std::vector<Mat> out;
  out.reserve(locals.size());
  offset = 0;
  for (const auto& l : locals) {
    out.push_back(h.middleRows(offset, l.rows()));
    offset += l.rows();
  }
  return out;
}

std::vector<Mat> SnapshotAttention::Backward(const std::vector<Mat>& dy,
                                             const Cache& cache) const {
  Eigen::Index rows = 0;
  for (const auto& d : dy) rows += d.rows();
  Mat g(rows, dy.front().cols());
  Eigen::Index offset = 0;
  for (const auto& d : dy) {
    g.middleRows(offset, d.rows()) = d;
    offset += d.rows();
  }
  for (std::size_t b = blocks_.size(); b-- > 0;) {
    g = blocks_[b].Backward(g, cache.blocks[b]);
  }
  std::vector<Mat> out;
  offset = 0;
  for (const auto& d : dy) {
    out.push_back(g.middleRows(offset, d.rows()));
    offset += d.rows();
  }
  return out;
}

// --------------------------------------------------------- ClassifierHead

ClassifierHead::ClassifierHead(nn::ParamStore& store, const std::string& name,
                               int dim, int num_classes)
    : norm_(store, name + ".norm", dim), linear_(store, name, dim, num_classes) {}

Vec ClassifierHead::Forward(const Mat& tokens, Cache* cache) const {
  if (tokens.rows() < 1) throw ShapeError("classify: empty token set");
  Mat pooled = norm_.Forward(tokens.colwise().mean(), cache != nullptr ? &cache->norm : nullptr);
  if (cache != nullptr) cache->tokens = tokens.rows();
  Mat scores = linear_.Forward(pooled, cache != nullptr ? &cache->linear : nullptr);
  return scores.row(0).transpose();
}

Mat ClassifierHead::Backward(const Vec& dscores, const Cache& cache) const {
  Mat dpooled = norm_.Backward(linear_.Backward(dscores.transpose(), cache.linear), cache.norm);
  Mat dtokens(cache.tokens, dpooled.cols());
  dtokens.rowwise() = dpooled.row(0) / static_cast<double>(cache.tokens);
  return dtokens;
}

// -------------------------------------------------------------- Aggregate

Vec Aggregate(const std::vector<Vec>& scores, Aggregation mode) {
  if (scores.empty()) throw InvalidArgument("aggregate: no score vectors");
  const double inv = 1.0 / static_cast<double>(scores.size());
  if (mode == Aggregation::kLogits) {
    Vec mean = Vec::Zero(scores.front().size());
    for (const auto& s : scores) mean += s;
    return nn::Softmax(mean * inv);
  }
  Vec probs = Vec::Zero(scores.front().size());
  for (const auto& s : scores) {
    if (s.size() != probs.size()) throw ShapeError("aggregate: score length mismatch");
    probs += nn::Softmax(s);
  }
  return probs * inv;
}

std::vector<Vec> AggregateBackward(const std::vector<Vec>& scores,
                                   const Vec& dprobs, Aggregation mode) {
  const double inv = 1.0 / static_cast<double>(scores.size());
  std::vector<Vec> out;
  out.reserve(scores.size());
  if (mode == Aggregation::kLogits) {
    Vec mean = Vec::Zero(scores.front().size());
    for (const auto& s : scores) mean += s;
    const Vec p = nn::Softmax(mean * inv);
    const Vec dmean = p.cwiseProduct(dprobs.array().matrix() - Vec::Constant(p.size(), p.dot(dprobs)));
    for (std::size_t i = 0; i < scores.size(); ++i) out.push_back(dmean * inv);
    return out;
  }
  for (const auto& s : scores) {
    const Vec p = nn::Softmax(s);
    const Vec dp = dprobs * inv;
    out.push_back(p.cwiseProduct(dp - Vec::Constant(p.size(), p.dot(dp))));
  }
  return out;
}

// ---------------------------------------------------------- SurgProdModel

SurgProdModel::SurgProdModel(const ModelConfig& config)
    : config_(config),
      store_(std::make_unique<nn::ParamStore>(config.init_seed, config.init_scale)) {
  config_.Validate();
  const int tokens = config_.tokens_per_snapshot();
  const int ffn_in = config_.ffn_mult * config_.d_in;
  const int ffn_b = config_.ffn_mult * config_.d_bottleneck;
  global_encoder_ = SnapshotEncoder(*store_, "global_encoder", tokens, config_.d_in,
                                    config_.encoder_layers, config_.encoder_heads, ffn_in);
  const int locals = config_.active_locals();
  const int encoders = locals == 0 ? 0 : (config_.share_local_encoders ? 1 : locals);
  for (int i = 0; i < encoders; ++i) {
    const std::string name = config_.share_local_encoders
                                 ? std::string("local_encoder")
                                 : "local_encoder" + std::to_string(i);
    local_encoders_.emplace_back(*store_, name, tokens, config_.d_in,
                                 config_.encoder_layers, config_.encoder_heads, ffn_in);
  }
  bottleneck_ = nn::Linear(*store_, "bottleneck", config_.d_in, config_.d_bottleneck);
  time_ = TimeCondition(*store_, "time", config_.d_bottleneck, config_.time_hidden);
  if (config_.variant == Variant::kGLSCA) {
    sca_ = SnapshotAttention(*store_, "sca", config_.d_bottleneck, config_.sca_blocks,
                             config_.sca_heads, ffn_b);
  }
  head_ = ClassifierHead(*store_, "head", config_.d_bottleneck, config_.num_classes);
}

const SnapshotEncoder& SurgProdModel::local_encoder(int slot) const {
  if (local_encoders_.empty()) throw InvalidArgument("variant has no local encoders");
  return config_.share_local_encoders ? local_encoders_.front()
                                      : local_encoders_.at(static_cast<std::size_t>(slot));
}

SnapshotLogits SurgProdModel::Forward(const SnapshotInputs& inputs, Cache* cache,
                                      std::vector<AttentionExport>* attention) const {
  const int locals = config_.active_locals();
  if (static_cast<int>(inputs.locals.size()) < locals) {
    std::ostringstream msg;
    msg << "forward: variant " << VariantName(config_.variant) << " needs " << locals
        << " local snapshots, got " << inputs.locals.size();
    throw ShapeError(msg.str());
  }
  if (config_.variant != Variant::kG &&
      static_cast<int>(inputs.locals.size()) != config_.k) {
    throw ShapeError("forward: plan k does not match config k");
  }
  const int slots = 1 + locals;
  const bool keep = cache != nullptr;
  if (keep) {
    cache->local_enc.resize(locals);
    cache->bottleneck.resize(slots);
    cache->time.resize(slots);
    cache->head.resize(slots);
  }

  auto embed = [&](const Mat& x, const SnapshotEncoder& enc,
                   SnapshotEncoder::Cache* enc_cache, int slot) {
    Mat h = enc.Forward(x, enc_cache);
    h = bottleneck_.Forward(h, keep ? &cache->bottleneck[slot] : nullptr);
    return time_.Forward(h, inputs.w, config_.w_max, keep ? &cache->time[slot] : nullptr);
  };

  std::vector<Mat> features;
  features.reserve(slots);
  features.push_back(embed(inputs.global, global_encoder_,
                           keep ? &cache->global_enc : nullptr, 0));
  std::vector<Mat> local_features;
  for (int i = 0; i < locals; ++i) {
    local_features.push_back(embed(inputs.locals[i], local_encoder(i),
                                   keep ? &cache->local_enc[i] : nullptr, 1 + i));
  }
  if (config_.variant == Variant::kGLSCA) {
    local_features = sca_.Forward(local_features, keep ? &cache->sca : nullptr, attention);
  }
  for (auto& f : local_features) features.push_back(std::move(f));

  SnapshotLogits out;
  out.scores.reserve(slots);
  for (int s = 0; s < slots; ++s) {
    out.scores.push_back(head_.Forward(features[s], keep ? &cache->head[s] : nullptr));
  }
  out.probs = Aggregate(out.scores, config_.aggregation);
  if (keep) cache->scores = out.scores;
  return out;
}

std::vector<Mat> SurgProdModel::Backward(const Cache& cache, const Vec& dprobs) const {
  const int locals = config_.active_locals();
  const int slots = 1 + locals;
  std::vector<Vec> dscores = AggregateBackward(cache.scores, dprobs, config_.aggregation);
  std::vector<Mat> dfeat(slots);
  for (int s = 0; s < slots; ++s) dfeat[s] = head_.Backward(dscores[s], cache.head[s]);

  if (config_.variant == Variant::kGLSCA) {
    std::vector<Mat> dlocal(dfeat.begin() + 1, dfeat.end());
    dlocal = sca_.Backward(dlocal, cache.sca);
    for (int i = 0; i < locals; ++i) dfeat[1 + i] = std::move(dlocal[i]);
  }

  std::vector<Mat> dinputs(slots);
  for (int s = 0; s < slots; ++s) {
    Mat g = time_.Backward(dfeat[s], cache.time[s]);
    g = bottleneck_.Backward(g, cache.bottleneck[s]);
    if (s == 0) {
      dinputs[s] = global_encoder_.Backward(g, cache.global_enc);
    } else {
      dinputs[s] = local_encoder(s - 1).Backward(g, cache.local_enc[s - 1]);
    }
  }
  return dinputs;
}

}  // namespace surgprod
