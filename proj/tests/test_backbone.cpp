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

#include <random>

#include "doctest.h"
#include "surgprod/backbone.hpp"
#include "surgprod/errors.hpp"

using namespace surgprod;

namespace {

// Pools by explicit 4-deep loops over each bin.
Eigen::MatrixXd PoolOracle(const RawGrid& raw, int hp, int wp) {
  const int bh = raw.h / hp, bw = raw.w / wp;
  Eigen::MatrixXd out(raw.t * hp * wp, raw.d);
  for (int ti = 0; ti < raw.t; ++ti)
    for (int y = 0; y < hp; ++y)
      for (int x = 0; x < wp; ++x)
        for (int c = 0; c < raw.d; ++c) {
          double s = 0.0;
          for (int dy = 0; dy < bh; ++dy)
            for (int dx = 0; dx < bw; ++dx) s += raw.at(ti, y * bh + dy, x * bw + dx, c);
          out((ti * hp + y) * wp + x, c) = s / (bh * bw);
        }
  return out;
}

RawGrid RandomGrid(int t, int h, int w, int d, std::uint64_t seed) {
  RawGrid g(t, h, w, d);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  for (auto& v : g.data) v = n(rng);
  return g;
}

SyntheticVideoSpec Spec(int label, bool cue) {
  SyntheticVideoSpec s;
  s.video_id = "vid";
  s.class_label = label;
  s.num_classes = 5;
  s.length_minutes = 20;
  if (cue) s.cue_segments = {{4.0, 7.0}};
  s.seed = 99;
  return s;
}

}  // namespace

TEST_CASE("pooling matches the loop oracle") {
  for (auto [h, w, hp, wp] : {std::array{8, 8, 4, 4}, std::array{6, 4, 3, 2}, std::array{4, 4, 1, 1},
                              std::array{3, 5, 3, 5}}) {
    const RawGrid g = RandomGrid(3, h, w, 5, 7);
    const FeatureVolume v = PoolAndFlatten(g, hp, wp);
    CHECK(v.token_count() == 3 * hp * wp);
    CHECK((v.tokens - PoolOracle(g, hp, wp)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("pooling preserves the per-frame mean") {
  const RawGrid g = RandomGrid(2, 8, 8, 4, 3);
  const FeatureVolume v = PoolAndFlatten(g, 4, 4);
  for (int c = 0; c < 4; ++c) {
    double raw = 0.0;
    for (int y = 0; y < 8; ++y)
      for (int x = 0; x < 8; ++x) raw += g.at(0, y, x, c);
    CHECK(v.tokens.block(0, c, 16, 1).mean() == doctest::Approx(raw / 64).epsilon(1e-12));
  }
}

TEST_CASE("unflatten inverts flatten") {
  const RawGrid g = RandomGrid(2, 4, 4, 3, 5);
  const FeatureVolume v = PoolAndFlatten(g, 4, 4);
  CHECK(v.Unflatten().data == g.data);
}

TEST_CASE("pooling rejects indivisible grids") {
  CHECK_THROWS_AS(PoolAndFlatten(RawGrid(1, 7, 8, 2), 4, 4), ShapeError);
}

TEST_CASE("class directions are orthonormal") {
  const Eigen::MatrixXd e = ClassDirections(5, 64);
  CHECK((e.transpose() * e - Eigen::MatrixXd::Identity(5, 5)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(ClassDirections(5, 64) == e);
  const Eigen::MatrixXd small = ClassDirections(5, 3);
  for (int c = 0; c < 5; ++c) CHECK(small.col(c).norm() == doctest::Approx(1.0));
}

TEST_CASE("synthetic frames are deterministic") {
  const SynthGeometry geo;
  const auto s = Spec(2, true);
  CHECK(SynthFeatures(s, geo, 100, 5).data == SynthFeatures(s, geo, 100, 5).data);
  CHECK(SynthFeatures(s, geo, 100, 5).data != SynthFeatures(s, geo, 101, 5).data);
}

TEST_CASE("cue frames carry the class direction") {
  const SynthGeometry geo;
  const Eigen::MatrixXd e = ClassDirections(5, geo.d);
  const auto with = Spec(3, true);
  const auto without = Spec(3, false);
  const FrameIndex frame = 5 * 60;  // minute 5, inside [4, 7)
  const auto a = PoolAndFlatten(SynthFeatures(with, geo, frame, 1), geo.h_p, geo.w_p);
  const auto b = PoolAndFlatten(SynthFeatures(without, geo, frame, 1), geo.h_p, geo.w_p);
  const Eigen::VectorXd diff = (a.tokens - b.tokens).colwise().mean().transpose();
  CHECK(diff.dot(e.col(3)) >= with.cue_amplitude / 2);
  CHECK(diff.dot(e.col(3)) == doctest::Approx(with.cue_amplitude).epsilon(1e-9));
  // outside the cue the two specs produce identical frames
  CHECK(SynthFeatures(with, geo, 60, 1).data == SynthFeatures(without, geo, 60, 1).data);
}

TEST_CASE("synthetic source extraction") {
  SyntheticVideoSource source{SynthGeometry{}};
  source.Add(Spec(1, true));
  CHECK(source.Contains("vid"));
  CHECK(source.FrameCount("vid") == 20 * 60);
  const auto v = source.Extract("vid", {0, 10, 20});
  CHECK(v.t == 3);
  CHECK(v.tokens.rows() == 3 * 16);
  CHECK(v.tokens.cols() == 64);
  CHECK_THROWS_AS(source.Extract("vid", {1200}), DataError);
  CHECK_THROWS(source.Extract("missing", {0}));
}
