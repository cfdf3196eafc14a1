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

#include "surgprod/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "json.hpp"
#include "surgprod/errors.hpp"
#include "surgprod/rng.hpp"

namespace surgprod {

using json = nlohmann::json;

namespace {

// Largest-remainder apportionment of `total` according to `weights`.
std::vector<int> Apportion(const std::vector<double>& weights, int total) {
  const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
  std::vector<int> out(weights.size());
  std::vector<std::pair<double, std::size_t>> rema;
  int assigned = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double exact = weights[i] / sum * total;
    out[i] = static_cast<int>(std::floor(exact));
    assigned += out[i];
    rema.emplace_back(exact - out[i], i);
  }
  std::stable_sort(rema.begin(), rema.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (int r = 0; r < total - assigned; ++r) ++out[rema[static_cast<std::size_t>(r)].second];
  return out;
}

}  // namespace

// ------------------------------------------------------------------ scales

const std::vector<ScaleSpec>& AllScales() {
  static const std::vector<ScaleSpec> scales = {
      {"pgs", 5, {52, 16, 32}},
      {"s", 3, {48, 15, 30}},
      {"n", 4, {53, 17, 30}},
  };
  return scales;
}

const ScaleSpec& GetScale(const std::string& name) {
  std::string lower;
  for (char c : name) lower.push_back(static_cast<char>(std::tolower(c)));
  for (const auto& s : AllScales())
    if (s.name == lower) return s;
  throw ConfigError("unknown scale '" + name + "' (expected pgs, s, n)");
}

std::array<int, 3> ScaleSpec::SplitSizesFor(int n_videos) const {
  if (n_videos == 100) return split_sizes;
  const int usable_n = static_cast<int>(std::lround(usable() * n_videos / 100.0));
  const auto sizes = Apportion({static_cast<double>(split_sizes[0]),
                                static_cast<double>(split_sizes[1]),
                                static_cast<double>(split_sizes[2])},
                               usable_n);
  return {sizes[0], sizes[1], sizes[2]};
}

// ----------------------------------------------------------- majority vote

VoteResult MajorityVote(const std::array<int, 3>& ratings, int num_classes) {
  for (int r : ratings) {
    if (r < 0 || r >= num_classes) {
      throw InvalidArgument("majority_vote: rating " + std::to_string(r) + " outside [0, " +
                            std::to_string(num_classes) + ")");
    }
  }
  if (ratings[0] == ratings[1] || ratings[0] == ratings[2]) return {ratings[0], false};
  if (ratings[1] == ratings[2]) return {ratings[1], false};
  std::array<int, 3> sorted = ratings;
  std::sort(sorted.begin(), sorted.end());
  return {sorted[1], true};
}

// -------------------------------------------------------- stratified split

Split StratifiedSplit(const std::vector<std::string>& video_ids,
                      const std::vector<int>& labels,
                      const std::array<int, 3>& split_sizes, std::uint64_t seed) {
  const int n = static_cast<int>(video_ids.size());
  if (labels.size() != video_ids.size()) {
    throw InvalidArgument("stratified_split: ids and labels differ in length");
  }
  if (split_sizes[0] < 0 || split_sizes[1] < 0 || split_sizes[2] < 0 ||
      split_sizes[0] + split_sizes[1] + split_sizes[2] != n) {
    std::ostringstream msg;
    msg << "stratified_split: sizes " << split_sizes[0] << "/" << split_sizes[1] << "/"
        << split_sizes[2] << " do not sum to " << n << " videos";
    throw DataError(msg.str());
  }

  std::map<int, std::vector<int>> by_class;
  for (int i = 0; i < n; ++i) {
    if (labels[i] < 0) throw DataError("stratified_split: negative label");
    by_class[labels[i]].push_back(i);
  }

  // Start from the floor of each class/split proportional share, then hand
  // out the remaining units greedily: classes with the most leftover first,
  // each to the splits with the most leftover capacity (Gale-Ryser order).
  const std::size_t classes = by_class.size();
  std::vector<std::array<int, 3>> alloc(classes);
  std::vector<std::array<double, 3>> frac(classes);
  std::vector<int> row_left(classes);
  std::array<int, 3> col_left = split_sizes;
  std::size_t ci = 0;
  for (const auto& [label, members] : by_class) {
    const int nc = static_cast<int>(members.size());
    int used = 0;
    for (int s = 0; s < 3; ++s) {
      const double share = static_cast<double>(nc) * split_sizes[s] / n;
      alloc[ci][s] = static_cast<int>(std::floor(share));
      frac[ci][s] = share - alloc[ci][s];
      used += alloc[ci][s];
      col_left[s] -= alloc[ci][s];
    }
    row_left[ci] = nc - used;
    ++ci;
  }
  std::vector<std::size_t> rows(classes);
  std::iota(rows.begin(), rows.end(), 0);
  std::stable_sort(rows.begin(), rows.end(),
                   [&](std::size_t a, std::size_t b) { return row_left[a] > row_left[b]; });
  for (std::size_t r : rows) {
    for (int unit = 0; unit < row_left[r]; ++unit) {
      int best = -1;
      for (int s = 0; s < 3; ++s) {
        // Each cell may rise at most one above its floor.
        if (col_left[s] <= 0 || frac[r][s] < 0.0) continue;
        if (best < 0 || col_left[s] > col_left[best] ||
            (col_left[s] == col_left[best] && frac[r][s] > frac[r][best])) {
          best = s;
        }
      }
      if (best < 0) throw DataError("stratified_split: infeasible split sizes");
      ++alloc[r][best];
      frac[r][best] = -1.0;
      --col_left[best];
    }
  }

  std::mt19937_64 rng(DeriveSeed(seed, 0x5b117));
  Split split;
  ci = 0;
  for (auto& [label, members] : by_class) {
    std::vector<int> shuffled = members;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    std::size_t pos = 0;
    for (int s = 0; s < 3; ++s) {
      auto& dst = s == 0 ? split.train : (s == 1 ? split.val : split.test);
      for (int j = 0; j < alloc[ci][s]; ++j) dst.push_back(video_ids[shuffled[pos++]]);
    }
    ++ci;
  }
  for (auto* part : {&split.train, &split.val, &split.test}) std::sort(part->begin(), part->end());
  return split;
}

// -------------------------------------------------------------- synthesis

void DatasetConfig::Validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("dataset config: " + what); };
  if (n_videos < 1) fail("n_videos must be >= 1");
  if (w_max < 1) fail("w_max must be >= 1");
  if (max_extra_minutes < 0) fail("max_extra_minutes must be >= 0");
  if (!(cue_amplitude >= 0.0) || !(noise_scale >= 0.0)) fail("amplitude and noise must be >= 0");
  if (!(cue_width_minutes > 0.0) || cue_width_minutes > w_max) fail("cue width must lie in (0, w_max]");
  if (!(rater_flip >= 0.0 && rater_flip <= 1.0)) fail("rater_flip must lie in [0, 1]");
  for (const auto& [scale, p] : priors) {
    if (static_cast<int>(p.size()) != GetScale(scale).num_classes) fail("prior length for " + scale);
    for (double v : p)
      if (!(v > 0.0)) fail("priors must be positive");
  }
}

// Skewed toward middle grades, loosely following typical grade histograms.
std::vector<double> DefaultPriors(const std::string& scale) {
  const ScaleSpec& s = GetScale(scale);
  if (s.name == "pgs") return {0.15, 0.30, 0.25, 0.18, 0.12};
  if (s.name == "s") return {0.40, 0.35, 0.25};
  return {0.35, 0.30, 0.20, 0.15};
}

std::vector<VideoRecord> SynthesizeDataset(const DatasetConfig& config) {
  config.Validate();
  std::mt19937_64 rng(DeriveSeed(config.seed, 0xda7a));
  std::vector<VideoRecord> records(static_cast<std::size_t>(config.n_videos));
  std::uniform_int_distribution<int> extra(0, config.max_extra_minutes);
  for (int i = 0; i < config.n_videos; ++i) {
    char id[32];
    std::snprintf(id, sizeof(id), "vid%03d", i);
    auto& r = records[static_cast<std::size_t>(i)];
    r.video_id = id;
    r.length_minutes = config.w_max + extra(rng);
    r.seed = DeriveSeed(config.seed, 0x1000 + static_cast<std::uint64_t>(i));
    r.cue_amplitude = config.cue_amplitude;
    r.noise_scale = config.noise_scale;
  }

  const int max_start = static_cast<int>(std::floor(config.w_max - config.cue_width_minutes));
  std::uniform_int_distribution<int> cue_start(0, max_start);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  for (const auto& scale : AllScales()) {
    const int c = scale.num_classes;
    std::vector<double> priors(static_cast<std::size_t>(c), 1.0);
    if (!config.balanced) {
      auto it = config.priors.find(scale.name);
      priors = it != config.priors.end() ? it->second : DefaultPriors(scale.name);
    }
    const int usable = scale.SplitSizesFor(config.n_videos)[0] +
                       scale.SplitSizesFor(config.n_videos)[1] +
                       scale.SplitSizesFor(config.n_videos)[2];

    // Exact class quotas over the usable videos, randomly assigned.
    std::vector<int> grades;
    const auto counts = Apportion(priors, usable);
    for (int g = 0; g < c; ++g) grades.insert(grades.end(), counts[g], g);
    std::vector<int> order(static_cast<std::size_t>(config.n_videos));
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);

    std::discrete_distribution<int> prior_draw(priors.begin(), priors.end());
    for (int pos = 0; pos < config.n_videos; ++pos) {
      auto& rec = records[static_cast<std::size_t>(order[static_cast<std::size_t>(pos)])];
      ScaleAnnotation ann;
      const bool is_usable = pos < usable;
      ann.latent = is_usable ? grades[static_cast<std::size_t>(pos)] : prior_draw(rng);
      for (int& rating : ann.ratings) {
        rating = ann.latent;
        if (unit(rng) < config.rater_flip) {
          const bool up = ann.latent == 0 || (ann.latent < c - 1 && unit(rng) < 0.5);
          rating += up ? 1 : -1;
        }
      }
      const VoteResult vote = MajorityVote(ann.ratings, c);
      ann.label = is_usable ? vote.label : -1;
      ann.tie_broken = vote.tie_broken;
      const double start = cue_start(rng);
      ann.cues.push_back({start, start + config.cue_width_minutes});
      rec.scales[scale.name] = ann;
    }
  }
  return records;
}

// -------------------------------------------------------------- manifest IO

void WriteDatasetManifest(std::ostream& out, const std::vector<VideoRecord>& records) {
  for (const auto& r : records) {
    json j;
    j["video_id"] = r.video_id;
    j["length_minutes"] = r.length_minutes;
    j["seed"] = r.seed;
    j["cue_amplitude"] = r.cue_amplitude;
    j["noise_scale"] = r.noise_scale;
    json scales = json::object();
    for (const auto& [name, a] : r.scales) {
      json cues = json::array();
      for (const auto& seg : a.cues) cues.push_back({seg.start_minute, seg.end_minute});
      scales[name] = {{"label", a.label},
                      {"latent", a.latent},
                      {"ratings", a.ratings},
                      {"tie_broken", a.tie_broken},
                      {"cues", cues}};
    }
    j["scales"] = scales;
    out << j.dump() << '\n';
  }
}

std::vector<VideoRecord> ReadDatasetManifest(std::istream& in) {
  std::vector<VideoRecord> records;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      VideoRecord r;
      r.video_id = j.at("video_id").get<std::string>();
      r.length_minutes = j.at("length_minutes").get<int>();
      r.seed = j.at("seed").get<std::uint64_t>();
      r.cue_amplitude = j.value("cue_amplitude", 2.0);
      r.noise_scale = j.value("noise_scale", 1.0);
      for (const auto& [name, a] : j.at("scales").items()) {
        ScaleAnnotation ann;
        ann.label = a.at("label").get<int>();
        ann.latent = a.value("latent", ann.label);
        if (a.contains("ratings")) ann.ratings = a.at("ratings").get<std::array<int, 3>>();
        ann.tie_broken = a.value("tie_broken", false);
        for (const auto& seg : a.at("cues")) {
          ann.cues.push_back({seg.at(0).get<double>(), seg.at(1).get<double>()});
        }
        r.scales[name] = ann;
      }
      records.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw DataError("dataset manifest line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return records;
}

SyntheticVideoSource MakeSource(const std::vector<VideoRecord>& records,
                                const std::string& scale, const SynthGeometry& geometry) {
  const ScaleSpec& spec = GetScale(scale);
  SyntheticVideoSource source(geometry);
  for (const auto& r : records) {
    auto it = r.scales.find(spec.name);
    if (it == r.scales.end() || it->second.label < 0) continue;
    SyntheticVideoSpec v;
    v.video_id = r.video_id;
    v.class_label = it->second.latent;
    v.num_classes = spec.num_classes;
    v.length_minutes = r.length_minutes;
    v.cue_segments = it->second.cues;
    v.cue_amplitude = r.cue_amplitude;
    v.noise_scale = r.noise_scale;
    v.seed = r.seed;
    source.Add(std::move(v));
  }
  return source;
}

std::vector<LabeledVideo> LabeledVideos(const std::vector<VideoRecord>& records,
                                        const std::string& scale) {
  const ScaleSpec& spec = GetScale(scale);
  std::vector<LabeledVideo> out;
  for (const auto& r : records) {
    auto it = r.scales.find(spec.name);
    if (it == r.scales.end() || it->second.label < 0) continue;
    out.push_back({r.video_id, it->second.label});
  }
  return out;
}

Split SplitForScale(const std::vector<VideoRecord>& records, const std::string& scale,
                    std::uint64_t seed) {
  const ScaleSpec& spec = GetScale(scale);
  std::vector<std::string> ids;
  std::vector<int> labels;
  for (const auto& v : LabeledVideos(records, scale)) {
    ids.push_back(v.video_id);
    labels.push_back(v.label);
  }
  std::array<int, 3> sizes = spec.SplitSizesFor(static_cast<int>(records.size()));
  if (sizes[0] + sizes[1] + sizes[2] != static_cast<int>(ids.size())) {
    // Manifest not produced by the synthesizer: keep the ratios.
    const auto fit = [&] {
      std::vector<double> w = {static_cast<double>(spec.split_sizes[0]),
                               static_cast<double>(spec.split_sizes[1]),
                               static_cast<double>(spec.split_sizes[2])};
      return Apportion(w, static_cast<int>(ids.size()));
    }();
    sizes = {fit[0], fit[1], fit[2]};
  }
  return StratifiedSplit(ids, labels, sizes, seed);
}

}  // namespace surgprod
