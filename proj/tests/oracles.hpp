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

// Reference implementations of the evaluation metrics, written straight from
// their definitions with no code shared with the library, plus random stream
// generators used by the unit tests and the acceptance binary.

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <vector>

#include "surgprod/metrics.hpp"

namespace oracle {

using surgprod::metrics::PredictionStream;

// First class attaining the maximum, found by scanning for the max value and
// then the smallest index holding it.
inline int ArgmaxLowest(const std::vector<double>& p) {
  const double best = *std::max_element(p.begin(), p.end());
  for (std::size_t c = 0; c < p.size(); ++c) {
    if (p[c] == best) return static_cast<int>(c);
  }
  return -1;
}

inline bool Hit(const std::vector<double>& p, int y, double tau) {
  const int pred = ArgmaxLowest(p);
  return pred == y && p[static_cast<std::size_t>(pred)] > tau;
}

// Set of 1-based hit windows.
inline std::set<int> HitWindows(const PredictionStream& s, double tau) {
  std::set<int> out;
  for (const auto& e : s.entries) {
    if (Hit(e.probs, e.label, tau)) out.insert(e.w);
  }
  return out;
}

// Stability as a fraction num/den kept exact: returns (count, n).
inline std::pair<int, int> StabilityFraction(int w, int n, int p, const std::set<int>& hits) {
  int count = 0;
  for (int h : hits) {
    if (h > w && h <= w + n - 1 && h <= p) ++count;
  }
  return {count, n};
}

// ES as an exact rational (numerator over n * w_max) plus its value.
struct EsValue {
  long numerator = 0;
  long denominator = 1;
  double value() const { return static_cast<double>(numerator) / static_cast<double>(denominator); }
};

inline EsValue Es(int n, const PredictionStream& s, double tau) {
  const std::set<int> hits = HitWindows(s, tau);
  if (hits.empty()) return {0, 1};
  const int w = *hits.begin();
  const auto [count, nn] = StabilityFraction(w, n, static_cast<int>(s.entries.size()), hits);
  // (w_max - w + count/n) / w_max = ((w_max - w) * n + count) / (n * w_max)
  return {static_cast<long>(s.w_max - w) * nn + count, static_cast<long>(nn) * s.w_max};
}

inline double Esv(int n, const std::vector<PredictionStream>& v, double tau) {
  double total = 0.0;
  for (const auto& s : v) total += Es(n, s, tau).value();
  return total / static_cast<double>(v.size());
}

inline double MeanEs(const std::vector<PredictionStream>& v, double tau) {
  return (oracle::Esv(1, v, tau) + oracle::Esv(3, v, tau) + oracle::Esv(5, v, tau)) / 3.0;
}

inline double Top1(const std::vector<PredictionStream>& v) {
  double total = 0.0;
  for (const auto& s : v) {
    double frac = 0.0;
    for (const auto& e : s.entries) {
      frac += (ArgmaxLowest(e.probs) == e.label ? 1.0 : 0.0) / static_cast<double>(s.entries.size());
    }
    total += frac;
  }
  return 100.0 * total / static_cast<double>(v.size());
}

// Macro-F1 from per-class precision and recall. A class enters the average
// when it occurs among the labels or the predictions.
inline double MacroF1(const std::vector<int>& y, const std::vector<int>& yhat) {
  std::set<int> classes(y.begin(), y.end());
  classes.insert(yhat.begin(), yhat.end());
  double total = 0.0;
  for (int c : classes) {
    double tp = 0, predicted = 0, actual = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      tp += (y[i] == c && yhat[i] == c) ? 1 : 0;
      predicted += yhat[i] == c ? 1 : 0;
      actual += y[i] == c ? 1 : 0;
    }
    const double precision = predicted > 0 ? tp / predicted : 0.0;
    const double recall = actual > 0 ? tp / actual : 0.0;
    total += (precision + recall) > 0 ? 2 * precision * recall / (precision + recall) : 0.0;
  }
  return 100.0 * total / static_cast<double>(classes.size());
}

// Quadratic weighted kappa from normalized observed and expected matrices.
inline double Qwk(const std::vector<int>& y, const std::vector<int>& yhat, int c) {
  const double n = static_cast<double>(y.size());
  std::vector<std::vector<double>> o(c, std::vector<double>(c, 0.0));
  std::vector<double> hist_y(c, 0.0), hist_p(c, 0.0);
  for (std::size_t i = 0; i < y.size(); ++i) {
    o[y[i]][yhat[i]] += 1.0 / n;
    hist_y[y[i]] += 1.0 / n;
    hist_p[yhat[i]] += 1.0 / n;
  }
  double num = 0.0, den = 0.0;
  for (int i = 0; i < c; ++i) {
    for (int j = 0; j < c; ++j) {
      const double wgt = std::pow(static_cast<double>(i - j) / (c - 1), 2);
      num += wgt * o[i][j];
      den += wgt * hist_y[i] * hist_p[j];
    }
  }
  return den == 0.0 ? 1.0 : 1.0 - num / den;
}

// Average of a pairwise score over window indices (across videos) or over
// videos (across windows).
template <typename Score>
double ByProtocol(const std::vector<PredictionStream>& v, bool per_video, Score score) {
  std::map<int, std::pair<std::vector<int>, std::vector<int>>> groups;
  for (std::size_t i = 0; i < v.size(); ++i) {
    for (const auto& e : v[i].entries) {
      auto& g = groups[per_video ? static_cast<int>(i) : e.w];
      g.first.push_back(e.label);
      g.second.push_back(ArgmaxLowest(e.probs));
    }
  }
  double total = 0.0;
  for (const auto& [key, g] : groups) total += score(g.first, g.second);
  return total / static_cast<double>(groups.size());
}

// Random stream generator. Probabilities are mostly peaked so that hits at
// tau = 0.7 occur with moderate frequency; a share of entries carries exact
// argmax ties and exact-threshold confidences.
class StreamFactory {
 public:
  explicit StreamFactory(std::uint64_t seed) : rng_(seed) {}

  std::vector<double> Probs(int c, int y) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double kind = u(rng_);
    std::vector<double> p(static_cast<std::size_t>(c), 0.0);
    if (kind < 0.05 && c >= 2) {  // exact tie between two classes
      p[0] = p[1] = 0.5;
      return p;
    }
    if (kind < 0.10) {  // confidence exactly 0.7 on the label
      p.assign(static_cast<std::size_t>(c), 0.3 / (c - 1));
      p[static_cast<std::size_t>(y)] = 0.7;
      return p;
    }
    std::gamma_distribution<double> g(0.3, 1.0);
    double sum = 0.0;
    for (auto& x : p) {
      x = g(rng_) + 1e-12;
      sum += x;
    }
    for (auto& x : p) x /= sum;
    return p;
  }

  PredictionStream Stream(int c, int p, int w_max, const std::string& id) {
    std::uniform_int_distribution<int> label(0, c - 1);
    PredictionStream s;
    s.video_id = id;
    s.scale = "rand";
    s.w_max = w_max;
    const int y = label(rng_);
    for (int w = 1; w <= p; ++w) s.entries.push_back({w, Probs(c, y), y});
    return s;
  }

  std::vector<PredictionStream> Streams(int count, int c, int p, int w_max) {
    std::vector<PredictionStream> out;
    for (int i = 0; i < count; ++i) out.push_back(Stream(c, p, w_max, "v" + std::to_string(i)));
    return out;
  }

  std::mt19937_64& rng() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

}  // namespace oracle
