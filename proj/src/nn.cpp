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

#include "surgprod/nn.hpp"

#include <cmath>

#include "surgprod/errors.hpp"

namespace surgprod::nn {

Param* ParamStore::Create(const std::string& name, int rows, int cols,
                          Init init, double scale) {
  if (Find(name) != nullptr) {
    throw InvalidArgument("duplicate parameter name '" + name + "'");
  }
  Mat value;
  switch (init) {
    case Init::kZeros:
      value = Mat::Zero(rows, cols);
      break;
    case Init::kOnes:
      value = Mat::Ones(rows, cols);
      break;
    case Init::kNormal: {
      std::normal_distribution<double> normal(0.0, scale > 0.0 ? scale : init_scale_);
      value.resize(rows, cols);
      for (Eigen::Index c = 0; c < value.cols(); ++c)
        for (Eigen::Index r = 0; r < value.rows(); ++r) value(r, c) = normal(gen_);
      break;
    }
  }
  params_.emplace_back(name, std::move(value));
  return &params_.back();
}

Param* ParamStore::Find(const std::string& name) {
  for (auto& p : params_)
    if (p.name == name) return &p;
  return nullptr;
}

const Param* ParamStore::Find(const std::string& name) const {
  for (const auto& p : params_)
    if (p.name == name) return &p;
  return nullptr;
}

void ParamStore::ZeroGrad() {
  for (auto& p : params_) p.grad.setZero();
}

std::size_t ParamStore::Count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p.value.size());
  return n;
}

namespace {
constexpr double kSqrt2OverPi = 0.7978845608028654;
constexpr double kGeluCubic = 0.044715;
}  // namespace

// tanh approximation; smooth everywhere, which keeps finite-difference
// checks well conditioned.
double Gelu(double x) {
  const double inner = kSqrt2OverPi * (x + kGeluCubic * x * x * x);
  return 0.5 * x * (1.0 + std::tanh(inner));
}

double GeluGrad(double x) {
  const double inner = kSqrt2OverPi * (x + kGeluCubic * x * x * x);
  const double th = std::tanh(inner);
  const double dinner = kSqrt2OverPi * (1.0 + 3.0 * kGeluCubic * x * x);
  return 0.5 * (1.0 + th) + 0.5 * x * (1.0 - th * th) * dinner;
}

Vec Softmax(const Vec& logits) {
  const double mx = logits.maxCoeff();
  Vec e = (logits.array() - mx).exp().matrix();
  return e / e.sum();
}

// ---------------------------------------------------------------- Linear

Linear::Linear(ParamStore& store, const std::string& name, int in, int out,
               Init weight_init) {
  weight_ = store.Create(name + ".weight", in, out, weight_init);
  bias_ = store.Create(name + ".bias", 1, out, Init::kZeros);
}

Mat Linear::Forward(const Mat& x, Cache* cache) const {
  if (x.cols() != weight_->value.rows()) {
    throw ShapeError("linear: input width " + std::to_string(x.cols()) +
                     " != expected " + std::to_string(weight_->value.rows()));
  }
  if (cache != nullptr) cache->x = x;
  Mat y = x * weight_->value;
  y.rowwise() += bias_->value.row(0);
  return y;
}

Mat Linear::Backward(const Mat& dy, const Cache& cache) const {
  weight_->grad.noalias() += cache.x.transpose() * dy;
  bias_->grad += dy.colwise().sum();
  return dy * weight_->value.transpose();
}

// ------------------------------------------------------------- LayerNorm

LayerNorm::LayerNorm(ParamStore& store, const std::string& name, int dim) {
  gamma_ = store.Create(name + ".gamma", 1, dim, Init::kOnes);
  beta_ = store.Create(name + ".beta", 1, dim, Init::kZeros);
}

Mat LayerNorm::Forward(const Mat& x, Cache* cache) const {
  const double d = static_cast<double>(x.cols());
  Vec mean = x.rowwise().mean();
  Mat centered = x.colwise() - mean;
  Vec var = centered.array().square().rowwise().sum() / d;
  Vec inv_std = (var.array() + kEps).rsqrt().matrix();
  Mat xhat = centered.array().colwise() * inv_std.array();
  Mat y = xhat.array().rowwise() * gamma_->value.row(0).array();
  y.rowwise() += beta_->value.row(0);
  if (cache != nullptr) {
    cache->xhat = std::move(xhat);
    cache->inv_std = std::move(inv_std);
  }
  return y;
}

Mat LayerNorm::Backward(const Mat& dy, const Cache& cache) const {
  const double d = static_cast<double>(dy.cols());
  gamma_->grad += (dy.array() * cache.xhat.array()).colwise().sum().matrix();
  beta_->grad += dy.colwise().sum();
  Mat dxhat = dy.array().rowwise() * gamma_->value.row(0).array();
  Vec sum_dxhat = dxhat.rowwise().sum();
  Vec sum_dxhat_xhat = (dxhat.array() * cache.xhat.array()).rowwise().sum();
  Mat dx = (d * dxhat.array()).matrix();
  dx.colwise() -= sum_dxhat;
  dx -= (cache.xhat.array().colwise() * sum_dxhat_xhat.array()).matrix();
  dx = (dx.array().colwise() * (cache.inv_std.array() / d)).matrix();
  return dx;
}

// ---------------------------------------------------- MultiHeadAttention

MultiHeadAttention::MultiHeadAttention(ParamStore& store,
                                       const std::string& name, int dim,
                                       int heads)
    : heads_(heads) {
  if (heads < 1 || dim % heads != 0) {
    throw ConfigError("attention width " + std::to_string(dim) +
                      " not divisible by heads " + std::to_string(heads));
  }
  q_ = Linear(store, name + ".q", dim, dim);
  k_ = Linear(store, name + ".k", dim, dim);
  v_ = Linear(store, name + ".v", dim, dim);
  out_ = Linear(store, name + ".out", dim, dim, Init::kZeros);
}

Mat MultiHeadAttention::Forward(const Mat& x, Cache* cache) const {
  Cache local;
  Cache& c = cache != nullptr ? *cache : local;
  c.q = q_.Forward(x, cache != nullptr ? &c.q_in : nullptr);
  c.k = k_.Forward(x, cache != nullptr ? &c.k_in : nullptr);
  c.v = v_.Forward(x, cache != nullptr ? &c.v_in : nullptr);

  const Eigen::Index n = x.rows();
  const int dh = static_cast<int>(x.cols()) / heads_;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  Mat concat(n, x.cols());
  c.attn.resize(heads_);
  for (int h = 0; h < heads_; ++h) {
    const auto qh = c.q.middleCols(h * dh, dh);
    const auto kh = c.k.middleCols(h * dh, dh);
    const auto vh = c.v.middleCols(h * dh, dh);
    Mat scores = (qh * kh.transpose()) * scale;
    Vec row_max = scores.rowwise().maxCoeff();
    scores.colwise() -= row_max;
    scores = scores.array().exp().matrix();
    Vec row_sum = scores.rowwise().sum();
    scores = (scores.array().colwise() / row_sum.array()).matrix();
    concat.middleCols(h * dh, dh).noalias() = scores * vh;
    c.attn[h] = std::move(scores);
  }
  return out_.Forward(concat, cache != nullptr ? &c.out_in : nullptr);
}

Mat MultiHeadAttention::Backward(const Mat& dy, const Cache& cache) const {
  Mat dconcat = out_.Backward(dy, cache.out_in);
  const Eigen::Index n = dy.rows();
  const int width = static_cast<int>(dy.cols());
  const int dh = width / heads_;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  Mat dq(n, width), dk(n, width), dv(n, width);
  for (int h = 0; h < heads_; ++h) {
    const Mat& a = cache.attn[h];
    const auto qh = cache.q.middleCols(h * dh, dh);
    const auto kh = cache.k.middleCols(h * dh, dh);
    const auto vh = cache.v.middleCols(h * dh, dh);
    const auto doh = dconcat.middleCols(h * dh, dh);
    Mat da = doh * vh.transpose();
    dv.middleCols(h * dh, dh).noalias() = a.transpose() * doh;
    Vec row_dot = (da.array() * a.array()).rowwise().sum();
    Mat ds = (a.array() * (da.colwise() - row_dot).array()).matrix() * scale;
    dq.middleCols(h * dh, dh).noalias() = ds * kh;
    dk.middleCols(h * dh, dh).noalias() = ds.transpose() * qh;
  }
  Mat dx = q_.Backward(dq, cache.q_in);
  dx += k_.Backward(dk, cache.k_in);
  dx += v_.Backward(dv, cache.v_in);
  return dx;
}

// ----------------------------------------------------------- FeedForward

FeedForward::FeedForward(ParamStore& store, const std::string& name, int dim,
                         int hidden) {
  l1_ = Linear(store, name + ".fc1", dim, hidden);
  l2_ = Linear(store, name + ".fc2", hidden, dim, Init::kZeros);
}

Mat FeedForward::Forward(const Mat& x, Cache* cache) const {
  Mat pre = l1_.Forward(x, cache != nullptr ? &cache->l1 : nullptr);
  Mat act = pre.unaryExpr([](double v) { return Gelu(v); });
  if (cache != nullptr) cache->pre = std::move(pre);
  return l2_.Forward(act, cache != nullptr ? &cache->l2 : nullptr);
}

Mat FeedForward::Backward(const Mat& dy, const Cache& cache) const {
  Mat dact = l2_.Backward(dy, cache.l2);
  Mat dpre = dact.cwiseProduct(
      cache.pre.unaryExpr([](double v) { return GeluGrad(v); }));
  return l1_.Backward(dpre, cache.l1);
}

// ------------------------------------------------------ TransformerBlock

TransformerBlock::TransformerBlock(ParamStore& store, const std::string& name,
                                   int dim, int heads, int ffn_hidden)
    : ln1_(store, name + ".ln1", dim),
      ln2_(store, name + ".ln2", dim),
      attn_(store, name + ".attn", dim, heads),
      ffn_(store, name + ".ffn", dim, ffn_hidden) {}

Mat TransformerBlock::Forward(const Mat& x, Cache* cache) const {
  const bool keep = cache != nullptr;
  Mat h = x + attn_.Forward(ln1_.Forward(x, keep ? &cache->ln1 : nullptr),
                            keep ? &cache->attn : nullptr);
  Mat y = h + ffn_.Forward(ln2_.Forward(h, keep ? &cache->ln2 : nullptr),
                           keep ? &cache->ffn : nullptr);
  return y;
}

Mat TransformerBlock::Backward(const Mat& dy, const Cache& cache) const {
  Mat dh = dy + ln2_.Backward(ffn_.Backward(dy, cache.ffn), cache.ln2);
  return dh + ln1_.Backward(attn_.Backward(dh, cache.attn), cache.ln1);
}

}  // namespace surgprod::nn
