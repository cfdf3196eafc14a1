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
#include <set>

#include "doctest.h"
#include "surgprod/errors.hpp"
#include "surgprod/sampler.hpp"

using namespace surgprod;

TEST_CASE("uniform sampling picks bin centres") {
  CHECK(SampleIndices(0, 120, 8, SamplingMode::kUniform, 0) ==
        IndexList{7, 22, 37, 52, 67, 82, 97, 112});
  CHECK(SampleIndices(0, 60, 8, SamplingMode::kUniform, 0) ==
        IndexList{3, 11, 18, 26, 33, 41, 48, 56});
  CHECK(SampleIndices(60, 121, 8, SamplingMode::kUniform, 0) ==
        IndexList{63, 71, 79, 86, 94, 101, 109, 117});
  // L == t takes every frame
  CHECK(SampleIndices(5, 9, 4, SamplingMode::kUniform, 0) == IndexList{5, 6, 7, 8});
}

TEST_CASE("uniform sampling matches the floating-point closed form") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 2000; ++trial) {
    const FrameIndex start = std::uniform_int_distribution<FrameIndex>(0, 500)(rng);
    const int t = std::uniform_int_distribution<int>(1, 16)(rng);
    const FrameIndex len = std::uniform_int_distribution<FrameIndex>(t, 4000)(rng);
    const auto idx = SampleIndices(start, start + len, t, SamplingMode::kUniform, 0);
    REQUIRE(idx.size() == static_cast<std::size_t>(t));
    for (int j = 0; j < t; ++j) {
      CHECK(idx[j] == start + static_cast<FrameIndex>(std::floor((j + 0.5) * len / t)));
    }
  }
}

TEST_CASE("random sampling is sorted, distinct, in range and seeded") {
  const auto a = SampleIndices(10, 50, 8, SamplingMode::kRandom, 42);
  const auto b = SampleIndices(10, 50, 8, SamplingMode::kRandom, 42);
  const auto c = SampleIndices(10, 50, 8, SamplingMode::kRandom, 43);
  CHECK(a == b);
  CHECK(a != c);
  CHECK(std::is_sorted(a.begin(), a.end()));
  CHECK(std::set<FrameIndex>(a.begin(), a.end()).size() == a.size());
  for (auto i : a) CHECK((i >= 10 && i < 50));
}

TEST_CASE("random sampling covers the range evenly") {
  std::vector<int> counts(20, 0);
  for (std::uint64_t s = 0; s < 5000; ++s) {
    for (auto i : SampleIndices(0, 20, 2, SamplingMode::kRandom, s)) ++counts[i];
  }
  // expected 500 per frame, binomial sd ~21
  for (int c : counts) CHECK(std::abs(c - 500) < 100);
}

TEST_CASE("partition boundaries") {
  CHECK(PartitionLocal(121, 2, 8) == std::vector<FrameIndex>{0, 60, 121});
  CHECK(PartitionLocal(10, 3, 3) == std::vector<FrameIndex>{0, 3, 6, 10});
  CHECK_THROWS_AS(PartitionLocal(10, 3, 4), InsufficientFrames);
  CHECK_THROWS_AS(PartitionLocal(10, 0, 1), InvalidArgument);
}

TEST_CASE("plan for a two-minute window") {
  const auto window = ObservationWindow::Make("v", 2, 1, 10000);
  CHECK(window.frame_count == 120);
  const auto plan = BuildPlan(window, 8, 2, SamplingMode::kUniform, 0);
  CHECK(plan.global_indices == IndexList{7, 22, 37, 52, 67, 82, 97, 112});
  CHECK(plan.segment_bounds == std::vector<FrameIndex>{0, 60, 120});
  CHECK(plan.local_indices[0] == IndexList{3, 11, 18, 26, 33, 41, 48, 56});
  CHECK(plan.local_indices[1] == IndexList{63, 71, 78, 86, 93, 101, 108, 116});
}

TEST_CASE("window clamps to the video length") {
  CHECK(WindowFrameCount(3, 1, 100) == 100);
  CHECK(WindowFrameCount(1, 2, 1000) == 120);
  CHECK_THROWS_AS(ObservationWindow::Make("v", 0, 1, 100), InvalidArgument);
}

TEST_CASE("plan without locals") {
  const auto plan = BuildPlan(ObservationWindow::Make("v", 1, 1, 60), 8, 0, SamplingMode::kUniform, 0);
  CHECK(plan.k() == 0);
  CHECK(plan.t() == 8);
}

TEST_CASE("random plans are a pure function of the seed") {
  const auto w = ObservationWindow::Make("v", 5, 1, 10000);
  const auto a = BuildPlan(w, 8, 3, SamplingMode::kRandom, 9);
  const auto b = BuildPlan(w, 8, 3, SamplingMode::kRandom, 9);
  CHECK(a.global_indices == b.global_indices);
  CHECK(a.local_indices == b.local_indices);
}

TEST_CASE("property: partitions are exhaustive, disjoint and balanced") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 3000; ++trial) {
    const int k = std::uniform_int_distribution<int>(1, 8)(rng);
    const int t = std::uniform_int_distribution<int>(1, 16)(rng);
    const FrameIndex f = std::uniform_int_distribution<FrameIndex>(static_cast<FrameIndex>(k) * t, 3000)(rng);
    const auto b = PartitionLocal(f, k, t);
    REQUIRE(b.size() == static_cast<std::size_t>(k + 1));
    CHECK(b.front() == 0);
    CHECK(b.back() == f);
    FrameIndex lo = f, hi = 0;
    for (int i = 0; i < k; ++i) {
      CHECK(b[i] < b[i + 1]);
      lo = std::min(lo, b[i + 1] - b[i]);
      hi = std::max(hi, b[i + 1] - b[i]);
    }
    CHECK(hi - lo <= 1);
    const auto plan = BuildPlan({"v", 1, 1, f}, t, k, SamplingMode::kRandom, trial);
    for (int i = 0; i < k; ++i) {
      for (auto idx : plan.local_indices[i]) CHECK((idx >= b[i] && idx < b[i + 1]));
    }
  }
}
