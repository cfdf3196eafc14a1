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
#include <vector>

namespace surgprod::metrics {

struct PredictionEntry {
  int w = 1;
  std::vector<double> probs;
  int label = 0;
};

/// Per-video predictions over observation windows 1..P.
struct PredictionStream {
  std::string video_id;
  std::string scale;
  int w_max = 18;
  std::vector<PredictionEntry> entries;

  int P() const { return static_cast<int>(entries.size()); }
  int label() const { return entries.empty() ? -1 : entries.front().label; }
  int num_classes() const {
    return entries.empty() ? 0 : static_cast<int>(entries.front().probs.size());
  }
  /// Throws DataError unless windows run 1..P, every probability vector is
  /// non-negative and sums to 1 within 1e-6, and the label is constant.
  void Validate() const;
};

/// How F1 and QWK are averaged.
enum class Protocol {
  /// Score all videos at each window index, then average over windows.
  kPerWindowAcrossVideos,
  /// Score each video over its windows, then average over videos.
  kPerVideo,
};

std::string ProtocolName(Protocol p);
Protocol ParseProtocol(const std::string& name);

/// Index of the largest probability; ties go to the lowest index.
int Argmax(const std::vector<double>& probs);

/// argmax == label and max probability strictly above tau.
bool Hit(const std::vector<double>& probs, int label, double tau);

/// hits[j] is Hit at window j + 1.
std::vector<bool> HitSequence(const PredictionStream& stream, double tau);

/// (1/n) * #hits over windows w+1 .. min(w+n-1, P); `hits` is 0-based.
double Stability(int w, int n, const std::vector<bool>& hits);

/// Earliest hit window w, scored (w_max - w + S(w, n)) / w_max; 0 if the
/// stream never hits.
double EarlinessStability(int n, const PredictionStream& stream, double tau);

/// Mean of EarlinessStability over videos.
double Esv(int n, const std::vector<PredictionStream>& streams, double tau);

/// (Esv(1) + Esv(3) + Esv(5)) / 3.
double MeanEs(const std::vector<PredictionStream>& streams, double tau);

/// Per-video fraction of correct windows, averaged over videos, in percent.
double Top1Accuracy(const std::vector<PredictionStream>& streams);

/// Macro F1 in percent over classes appearing in labels or predictions.
double MacroF1(const std::vector<int>& labels, const std::vector<int>& preds,
               int num_classes);
double MacroF1(const std::vector<PredictionStream>& streams, Protocol protocol);

/// Quadratic weighted kappa. When the expected disagreement is zero every
/// observation sits on one diagonal cell, and kappa is defined as 1.
double Qwk(const std::vector<int>& labels, const std::vector<int>& preds,
           int num_classes);
double Qwk(const std::vector<PredictionStream>& streams, Protocol protocol);

struct VideoBreakdown {
  std::string video_id;
  int label = 0;
  int first_hit = 0;  // 0 when no window hits
  double es1 = 0.0, es3 = 0.0, es5 = 0.0;
  double top1 = 0.0;
};

struct WindowBreakdown {
  int w = 0;
  double top1 = 0.0;
  double f1 = 0.0;
  double qwk = 0.0;
  double hit_rate = 0.0;
};

struct EvalReport {
  double top1 = 0.0;
  double f1 = 0.0;
  double qwk = 0.0;
  double esv1 = 0.0, esv3 = 0.0, esv5 = 0.0;
  double mean_es = 0.0;
  double tau = 0.7;
  Protocol protocol = Protocol::kPerWindowAcrossVideos;
  std::vector<VideoBreakdown> per_video;
  std::vector<WindowBreakdown> per_window;
};

EvalReport Evaluate(const std::vector<PredictionStream>& streams, double tau,
                    Protocol protocol = Protocol::kPerWindowAcrossVideos);

}  // namespace surgprod::metrics
