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

#include "doctest.h"
#include "oracles.hpp"
#include "surgprod/errors.hpp"
#include "surgprod/metrics.hpp"

using namespace surgprod;
using namespace surgprod::metrics;

namespace {

// A stream of P windows whose hit pattern is exactly `hits`: hit windows put
// 0.9 on the label, the rest put 0.9 on another class.
PredictionStream FromHits(const std::set<int>& hits, int p = 18, int w_max = 18, int c = 3,
                          int y = 1) {
  PredictionStream s;
  s.video_id = "v";
  s.w_max = w_max;
  for (int w = 1; w <= p; ++w) {
    std::vector<double> probs(c, 0.1 / (c - 1));
    probs[hits.count(w) ? y : (y + 1) % c] = 0.9;
    s.entries.push_back({w, probs, y});
  }
  return s;
}

}  // namespace

TEST_CASE("hit is strict at tau") {
  CHECK(Hit({0.8, 0.2}, 0, 0.7));
  CHECK_FALSE(Hit({0.7, 0.3}, 0, 0.7));
  CHECK(Hit({0.6, 0.4}, 0, 0.5));
  CHECK_FALSE(Hit({0.6, 0.4}, 0, 0.7));
  CHECK_FALSE(Hit({0.2, 0.8}, 0, 0.1));
  CHECK_THROWS_AS(Hit({0.8, 0.2}, 0, 1.0), InvalidArgument);
  CHECK_THROWS_AS(Hit({0.8, 0.2}, 0, -0.1), InvalidArgument);
}

TEST_CASE("argmax ties go to the lowest index") {
  CHECK(Argmax({0.4, 0.4, 0.2}) == 0);
  CHECK(Argmax({0.2, 0.4, 0.4}) == 1);
}

TEST_CASE("stability") {
  const auto hits = HitSequence(FromHits({5, 6, 7}), 0.7);
  CHECK(Stability(5, 1, hits) == 0.0);
  CHECK(Stability(5, 3, hits) == doctest::Approx(2.0 / 3));
  CHECK(Stability(5, 5, hits) == doctest::Approx(2.0 / 5));
  CHECK(Stability(18, 5, hits) == 0.0);
}

TEST_CASE("worked earliness-stability values") {
  const auto s = FromHits({5, 6, 7});
  CHECK(EarlinessStability(1, s, 0.7) == doctest::Approx(0.72222).epsilon(1e-5));
  CHECK(EarlinessStability(3, s, 0.7) == doctest::Approx(0.75926).epsilon(1e-5));
  CHECK(EarlinessStability(5, s, 0.7) == doctest::Approx(0.74444).epsilon(1e-5));
  CHECK(MeanEs({s}, 0.7) == doctest::Approx(0.74197).epsilon(1e-5));
}

TEST_CASE("a lone hit at the last window scores like no hit") {
  CHECK(EarlinessStability(1, FromHits({18}), 0.7) == 0.0);
  CHECK(EarlinessStability(3, FromHits({18}), 0.7) == 0.0);
  CHECK(EarlinessStability(1, FromHits({}), 0.7) == 0.0);
}

TEST_CASE("hits from the first window") {
  std::set<int> all;
  for (int w = 1; w <= 18; ++w) all.insert(w);
  const auto s = FromHits(all);
  CHECK(Esv(1, {s}, 0.7) == doctest::Approx(17.0 / 18));
  CHECK(Esv(3, {s}, 0.7) == doctest::Approx((17 + 2.0 / 3) / 18));
  CHECK(Esv(5, {s}, 0.7) == doctest::Approx((17 + 4.0 / 5) / 18));
  CHECK(MeanEs({s}, 0.7) == doctest::Approx(0.9716).epsilon(1e-4));
}

TEST_CASE("esv averages over videos") {
  const auto a = FromHits({5, 6, 7});
  const auto b = FromHits({2});
  CHECK(Esv(3, {a, b}, 0.7) ==
        doctest::Approx((EarlinessStability(3, a, 0.7) + EarlinessStability(3, b, 0.7)) / 2));
  CHECK_THROWS(Esv(1, {}, 0.7));
}

TEST_CASE("truncated streams normalize by w_max") {
  const auto s = FromHits({2, 3}, 5, 18);
  CHECK(EarlinessStability(3, s, 0.7) == doctest::Approx((16 + 1.0 / 3) / 18));
}

TEST_CASE("top-1 accuracy") {
  std::set<int> all;
  for (int w = 1; w <= 18; ++w) all.insert(w);
  CHECK(Top1Accuracy({FromHits(all)}) == 100.0);
  CHECK(Top1Accuracy({FromHits(all), FromHits({})}) == 50.0);
}

TEST_CASE("macro-F1 worked case and guard") {
  CHECK(MacroF1({0, 0, 1, 1}, {0, 1, 0, 1}, 2) == doctest::Approx(50.0));
  CHECK(MacroF1({0, 1, 2}, {0, 1, 2}, 5) == doctest::Approx(100.0));
  // class 2 predicted but absent contributes F1 = 0
  CHECK(MacroF1({0, 0}, {0, 2}, 3) == doctest::Approx(100.0 * (2.0 / 3) / 2));
}

TEST_CASE("quadratic weighted kappa") {
  CHECK(Qwk({0, 1}, {1, 0}, 2) == doctest::Approx(-1.0));
  CHECK(Qwk({0, 1, 2}, {0, 1, 2}, 3) == doctest::Approx(1.0));
  CHECK(Qwk({2, 2}, {2, 2}, 3) == 1.0);  // no expected disagreement
  CHECK_THROWS_AS(Qwk({0}, {0}, 1), InvalidArgument);
}

TEST_CASE("stream validation") {
  auto s = FromHits({1});
  s.entries[3].w = 7;
  CHECK_THROWS_AS(s.Validate(), DataError);
  s = FromHits({1});
  s.entries[2].probs[0] += 0.01;
  CHECK_THROWS_AS(s.Validate(), DataError);
  s = FromHits({1});
  s.entries[2].label = 0;
  CHECK_THROWS_AS(s.Validate(), DataError);
}

TEST_CASE("agreement with the reference implementations") {
  oracle::StreamFactory factory(2024);
  for (int trial = 0; trial < 200; ++trial) {
    const int c = 3 + trial % 3;
    const auto streams = factory.Streams(1 + trial % 12, c, 18, 18);
    for (const auto& s : streams) {
      for (int n : {1, 2, 3, 5, 7}) {
        const auto ref = oracle::Es(n, s, 0.7);
        CHECK(EarlinessStability(n, s, 0.7) == doctest::Approx(ref.value()).epsilon(1e-12));
      }
      CHECK(HitSequence(s, 0.7).size() == s.entries.size());
    }
    CHECK(std::abs(MeanEs(streams, 0.7) - oracle::MeanEs(streams, 0.7)) <= 1e-9);
    CHECK(std::abs(Top1Accuracy(streams) - oracle::Top1(streams)) <= 1e-9);
    for (bool per_video : {false, true}) {
      const auto proto = per_video ? Protocol::kPerVideo : Protocol::kPerWindowAcrossVideos;
      CHECK(std::abs(MacroF1(streams, proto) -
                     oracle::ByProtocol(streams, per_video, [](auto& y, auto& p) {
                       return oracle::MacroF1(y, p);
                     })) <= 1e-9);
      CHECK(std::abs(Qwk(streams, proto) -
                     oracle::ByProtocol(streams, per_video, [c](auto& y, auto& p) {
                       return oracle::Qwk(y, p, c);
                     })) <= 1e-9);
    }
  }
}

TEST_CASE("property: moving the first hit earlier never lowers ES") {
  oracle::StreamFactory factory(7);
  std::mt19937_64& rng = factory.rng();
  for (int trial = 0; trial < 300; ++trial) {
    std::set<int> hits;
    for (int w = 1; w <= 18; ++w) {
      if (std::bernoulli_distribution(0.3)(rng)) hits.insert(w);
    }
    if (hits.empty() || *hits.begin() == 1) continue;
    std::set<int> shifted;
    for (int h : hits) shifted.insert(h - 1);
    for (int n : {1, 3, 5}) {
      CHECK(EarlinessStability(n, FromHits(shifted), 0.7) >= EarlinessStability(n, FromHits(hits), 0.7));
    }
    // adding a hit right after the first one cannot hurt either
    const int first = *hits.begin();
    auto more = hits;
    more.insert(std::min(first + 1, 18));
    for (int n : {1, 3, 5}) {
      CHECK(EarlinessStability(n, FromHits(more), 0.7) >= EarlinessStability(n, FromHits(hits), 0.7));
      CHECK(EarlinessStability(n, FromHits(hits), 0.7) < 1.0);
    }
  }
}

TEST_CASE("property: ES only depends on hit outcomes") {
  oracle::StreamFactory factory(8);
  for (int trial = 0; trial < 100; ++trial) {
    auto s = factory.Stream(4, 18, 18, "v");
    auto t = s;
    for (auto& e : t.entries) {
      // reshuffle the mass of the non-argmax classes
      const int top = Argmax(e.probs);
      double rest = 0.0;
      for (int c = 0; c < 4; ++c) rest += c == top ? 0.0 : e.probs[c];
      const double top_p = e.probs[top];
      if (top_p <= rest / 3 + 1e-9) continue;  // keep the argmax unique
      int first_other = top == 0 ? 1 : 0;
      for (int c = 0; c < 4; ++c) e.probs[c] = c == top ? top_p : 0.0;
      e.probs[first_other] = rest;
      if (rest >= top_p) e = s.entries[e.w - 1];
    }
    CHECK(MeanEs({s}, 0.7) == MeanEs({t}, 0.7));
  }
}

TEST_CASE("evaluation report bounds and breakdowns") {
  oracle::StreamFactory factory(9);
  const auto streams = factory.Streams(10, 5, 18, 18);
  const auto r = Evaluate(streams, 0.7, Protocol::kPerWindowAcrossVideos);
  CHECK((r.mean_es >= 0.0 && r.mean_es < 1.0));
  CHECK((r.qwk >= -1.0 && r.qwk <= 1.0));
  CHECK((r.top1 >= 0.0 && r.top1 <= 100.0));
  CHECK(r.per_video.size() == 10);
  CHECK(r.per_window.size() == 18);
  CHECK(r.mean_es == doctest::Approx((r.esv1 + r.esv3 + r.esv5) / 3));
}

TEST_CASE("protocol names") {
  CHECK(ParseProtocol("per-video") == Protocol::kPerVideo);
  CHECK(ProtocolName(Protocol::kPerWindowAcrossVideos) == "per-window");
  CHECK_THROWS(ParseProtocol("micro"));
}
