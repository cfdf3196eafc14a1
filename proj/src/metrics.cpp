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

#include "surgprod/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "surgprod/errors.hpp"

namespace surgprod::metrics {

namespace {

constexpr double kNormTolerance = 1e-6;

void CheckTau(double tau) {
  if (!(tau >= 0.0 && tau < 1.0)) {
    throw InvalidArgument("tau must lie in [0, 1), got " + std::to_string(tau));
  }
}

void CheckStreams(const std::vector<PredictionStream>& streams) {
  if (streams.empty()) throw InvalidArgument("no prediction streams");
  const int c = streams.front().num_classes();
  for (const auto& s : streams) {
    s.Validate();
    if (s.num_classes() != c) {
      throw DataError("streams disagree on class count");
    }
  }
}

int MaxWindows(const std::vector<PredictionStream>& streams) {
  int p = 0;
  for (const auto& s : streams) p = std::max(p, s.P());
  return p;
}

}  // namespace

void PredictionStream::Validate() const {
  if (entries.empty()) throw DataError("stream '" + video_id + "' is empty");
  if (w_max < 1) throw DataError("stream '" + video_id + "': w_max must be >= 1");
  const std::size_t c = entries.front().probs.size();
  if (c < 1) throw DataError("stream '" + video_id + "': empty probability vector");
  const int y = entries.front().label;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    std::ostringstream where;
    where << "stream '" << video_id << "' window " << e.w << ": ";
    if (e.w != static_cast<int>(i) + 1) {
      throw DataError(where.str() + "windows must run 1..P without gaps");
    }
    if (e.probs.size() != c) throw DataError(where.str() + "class count changes");
    if (e.label != y) throw DataError(where.str() + "label changes within a video");
    if (e.label < 0 || e.label >= static_cast<int>(c)) {
      throw DataError(where.str() + "label out of range");
    }
    double sum = 0.0;
    for (double p : e.probs) {
      if (!(p >= 0.0) || !std::isfinite(p)) {
        throw DataError(where.str() + "negative or non-finite probability");
      }
      sum += p;
    }
    if (std::abs(sum - 1.0) > kNormTolerance) {
      throw DataError(where.str() + "probabilities sum to " + std::to_string(sum));
    }
  }
}

std::string ProtocolName(Protocol p) {
  return p == Protocol::kPerVideo ? "per-video" : "per-window";
}

Protocol ParseProtocol(const std::string& name) {
  if (name == "per-window" || name == "per-window-across-videos") {
    return Protocol::kPerWindowAcrossVideos;
  }
  if (name == "per-video") return Protocol::kPerVideo;
  throw InvalidArgument("unknown averaging protocol '" + name + "'");
}

int Argmax(const std::vector<double>& probs) {
  if (probs.empty()) throw InvalidArgument("argmax of empty vector");
  int best = 0;
  for (int c = 1; c < static_cast<int>(probs.size()); ++c) {
    if (probs[c] > probs[best]) best = c;
  }
  return best;
}

bool Hit(const std::vector<double>& probs, int label, double tau) {
  CheckTau(tau);
  const int pred = Argmax(probs);
  return pred == label && probs[pred] > tau;
}

std::vector<bool> HitSequence(const PredictionStream& stream, double tau) {
  std::vector<bool> hits;
  hits.reserve(stream.entries.size());
  for (const auto& e : stream.entries) hits.push_back(Hit(e.probs, e.label, tau));
  return hits;
}

double Stability(int w, int n, const std::vector<bool>& hits) {
  const int p = static_cast<int>(hits.size());
  if (w < 1 || w > p) throw InvalidArgument("stability: w outside [1, P]");
  if (n < 1) throw InvalidArgument("stability: n must be >= 1");
  const int last = std::min(w + n - 1, p);
  int count = 0;
  for (int j = w + 1; j <= last; ++j) count += hits[j - 1] ? 1 : 0;
  return static_cast<double>(count) / n;
}

double EarlinessStability(int n, const PredictionStream& stream, double tau) {
  stream.Validate();
  const std::vector<bool> hits = HitSequence(stream, tau);
  for (int w = 1; w <= static_cast<int>(hits.size()); ++w) {
    if (hits[w - 1]) {
      return (stream.w_max - w + Stability(w, n, hits)) / stream.w_max;
    }
  }
  return 0.0;
}

double Esv(int n, const std::vector<PredictionStream>& streams, double tau) {
  if (streams.empty()) throw InvalidArgument("esv: empty video set");
  double sum = 0.0;
  for (const auto& s : streams) sum += EarlinessStability(n, s, tau);
  return sum / static_cast<double>(streams.size());
}

double MeanEs(const std::vector<PredictionStream>& streams, double tau) {
  return (Esv(1, streams, tau) + Esv(3, streams, tau) + Esv(5, streams, tau)) / 3.0;
}

double Top1Accuracy(const std::vector<PredictionStream>& streams) {
  CheckStreams(streams);
  double sum = 0.0;
  for (const auto& s : streams) {
    int correct = 0;
    for (const auto& e : s.entries) correct += Argmax(e.probs) == e.label ? 1 : 0;
    sum += static_cast<double>(correct) / s.P();
  }
  return 100.0 * sum / static_cast<double>(streams.size());
}

double MacroF1(const std::vector<int>& labels, const std::vector<int>& preds,
               int num_classes) {
  if (labels.empty() || labels.size() != preds.size()) {
    throw InvalidArgument("macro_f1: label/prediction lists empty or mismatched");
  }
  std::vector<int> tp(num_classes, 0), fp(num_classes, 0), fn(num_classes, 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == preds[i]) {
      ++tp[labels[i]];
    } else {
      ++fn[labels[i]];
      ++fp[preds[i]];
    }
  }
  double sum = 0.0;
  int classes = 0;
  for (int c = 0; c < num_classes; ++c) {
    const int denom = 2 * tp[c] + fp[c] + fn[c];
    if (denom == 0) continue;  // never predicted, never present
    sum += 2.0 * tp[c] / denom;
    ++classes;
  }
  return 100.0 * sum / classes;
}

double Qwk(const std::vector<int>& labels, const std::vector<int>& preds,
           int num_classes) {
  if (num_classes < 2) throw InvalidArgument("qwk needs at least 2 classes");
  if (labels.empty() || labels.size() != preds.size()) {
    throw InvalidArgument("qwk: label/prediction lists empty or mismatched");
  }
  const int c = num_classes;
  std::vector<double> observed(static_cast<std::size_t>(c) * c, 0.0);
  std::vector<double> row(c, 0.0), col(c, 0.0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    observed[static_cast<std::size_t>(labels[i]) * c + preds[i]] += 1.0;
    row[labels[i]] += 1.0;
    col[preds[i]] += 1.0;
  }
  const double n = static_cast<double>(labels.size());
  const double norm = static_cast<double>(c - 1) * (c - 1);
  double num = 0.0, den = 0.0;
  for (int i = 0; i < c; ++i) {
    for (int j = 0; j < c; ++j) {
      const double weight = static_cast<double>(i - j) * (i - j) / norm;
      num += weight * observed[static_cast<std::size_t>(i) * c + j];
      den += weight * row[i] * col[j] / n;
    }
  }
  if (den == 0.0) return 1.0;
  return 1.0 - num / den;
}

namespace {

template <typename Score>
double AverageByProtocol(const std::vector<PredictionStream>& streams,
                         Protocol protocol, Score score) {
  CheckStreams(streams);
  const int c = streams.front().num_classes();
  double sum = 0.0;
  int groups = 0;
  if (protocol == Protocol::kPerVideo) {
    for (const auto& s : streams) {
      std::vector<int> labels, preds;
      for (const auto& e : s.entries) {
        labels.push_back(e.label);
        preds.push_back(Argmax(e.probs));
      }
      sum += score(labels, preds, c);
      ++groups;
    }
  } else {
    const int p = MaxWindows(streams);
    for (int w = 1; w <= p; ++w) {
      std::vector<int> labels, preds;
      for (const auto& s : streams) {
        if (s.P() < w) continue;
        const auto& e = s.entries[w - 1];
        labels.push_back(e.label);
        preds.push_back(Argmax(e.probs));
      }
      if (labels.empty()) continue;
      sum += score(labels, preds, c);
      ++groups;
    }
  }
  return sum / groups;
}

}  // namespace

double MacroF1(const std::vector<PredictionStream>& streams, Protocol protocol) {
  return AverageByProtocol(streams, protocol,
                           [](const std::vector<int>& l, const std::vector<int>& p,
                              int c) { return MacroF1(l, p, c); });
}

double Qwk(const std::vector<PredictionStream>& streams, Protocol protocol) {
  return AverageByProtocol(streams, protocol,
                           [](const std::vector<int>& l, const std::vector<int>& p,
                              int c) { return Qwk(l, p, c); });
}

EvalReport Evaluate(const std::vector<PredictionStream>& streams, double tau,
                    Protocol protocol) {
  CheckTau(tau);
  CheckStreams(streams);
  EvalReport report;
  report.tau = tau;
  report.protocol = protocol;
  report.top1 = Top1Accuracy(streams);
  report.f1 = MacroF1(streams, protocol);
  report.qwk = Qwk(streams, protocol);
  report.esv1 = Esv(1, streams, tau);
  report.esv3 = Esv(3, streams, tau);
  report.esv5 = Esv(5, streams, tau);
  report.mean_es = (report.esv1 + report.esv3 + report.esv5) / 3.0;

  for (const auto& s : streams) {
    VideoBreakdown row;
    row.video_id = s.video_id;
    row.label = s.label();
    const auto hits = HitSequence(s, tau);
    for (int w = 1; w <= s.P(); ++w) {
      if (hits[w - 1]) {
        row.first_hit = w;
        break;
      }
    }
    row.es1 = EarlinessStability(1, s, tau);
    row.es3 = EarlinessStability(3, s, tau);
    row.es5 = EarlinessStability(5, s, tau);
    row.top1 = Top1Accuracy({s});
    report.per_video.push_back(std::move(row));
  }

  const int c = streams.front().num_classes();
  const int p = MaxWindows(streams);
  for (int w = 1; w <= p; ++w) {
    std::vector<int> labels, preds;
    int hits = 0;
    for (const auto& s : streams) {
      if (s.P() < w) continue;
      const auto& e = s.entries[w - 1];
      labels.push_back(e.label);
      preds.push_back(Argmax(e.probs));
      hits += Hit(e.probs, e.label, tau) ? 1 : 0;
    }
    if (labels.empty()) continue;
    WindowBreakdown row;
    row.w = w;
    int correct = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) correct += labels[i] == preds[i] ? 1 : 0;
    row.top1 = 100.0 * correct / static_cast<double>(labels.size());
    row.f1 = MacroF1(labels, preds, c);
    row.qwk = Qwk(labels, preds, c);
    row.hit_rate = static_cast<double>(hits) / static_cast<double>(labels.size());
    report.per_window.push_back(row);
  }
  return report;
}

}  // namespace surgprod::metrics
