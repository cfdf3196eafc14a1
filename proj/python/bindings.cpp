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

// Python bindings. Structured values cross the boundary as plain dicts and
// lists; tensors as NumPy arrays.

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <fstream>

#include "json.hpp"
#include "surgprod/config.hpp"
#include "surgprod/dataset.hpp"
#include "surgprod/errors.hpp"
#include "surgprod/experiment.hpp"
#include "surgprod/io.hpp"
#include "surgprod/metrics.hpp"
#include "surgprod/sampler.hpp"

namespace py = pybind11;
using json = nlohmann::json;
using namespace surgprod;

namespace {

py::object ToPy(const json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

json FromPy(const py::handle& obj) {
  return json::parse(py::module_::import("json").attr("dumps")(obj).cast<std::string>());
}

metrics::PredictionStream StreamFromPy(const py::dict& d) {
  metrics::PredictionStream s;
  s.video_id = d.contains("video_id") ? d["video_id"].cast<std::string>() : "video";
  s.scale = d.contains("scale") ? d["scale"].cast<std::string>() : "";
  s.w_max = d.contains("w_max") ? d["w_max"].cast<int>() : 18;
  const auto probs = d["probs"].cast<std::vector<std::vector<double>>>();
  const int label = d["label"].cast<int>();
  for (std::size_t i = 0; i < probs.size(); ++i) {
    s.entries.push_back({static_cast<int>(i) + 1, probs[i], label});
  }
  return s;
}

std::vector<metrics::PredictionStream> StreamsFromPy(const py::list& l) {
  std::vector<metrics::PredictionStream> out;
  for (const auto& item : l) out.push_back(StreamFromPy(item.cast<py::dict>()));
  return out;
}

py::dict ReportToPy(const metrics::EvalReport& r) {
  py::dict d;
  d["top1"] = r.top1;
  d["f1"] = r.f1;
  d["qwk"] = r.qwk;
  d["esv1"] = r.esv1;
  d["esv3"] = r.esv3;
  d["esv5"] = r.esv5;
  d["mean_es"] = r.mean_es;
  d["tau"] = r.tau;
  d["protocol"] = metrics::ProtocolName(r.protocol);
  py::list videos;
  for (const auto& v : r.per_video) {
    py::dict row;
    row["video_id"] = v.video_id;
    row["label"] = v.label;
    row["first_hit"] = v.first_hit;
    row["es1"] = v.es1;
    row["es3"] = v.es3;
    row["es5"] = v.es5;
    row["top1"] = v.top1;
    videos.append(row);
  }
  d["per_video"] = videos;
  return d;
}

py::dict SplitToPy(const Split& s) {
  py::dict d;
  d["train"] = s.train;
  d["val"] = s.val;
  d["test"] = s.test;
  return d;
}

RawGrid GridFromNumpy(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 4) throw ShapeError("expected a (t, h, w, d) array");
  RawGrid g(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)), static_cast<int>(a.shape(2)),
            static_cast<int>(a.shape(3)));
  std::copy(a.data(), a.data() + a.size(), g.data.begin());
  return g;
}

}  // namespace

PYBIND11_MODULE(_surgprod, m) {
  m.doc() = "Early operative-difficulty prediction: sampler, metrics, data and experiments";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_RuntimeError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
  py::register_exception<StageError>(m, "StageError", PyExc_RuntimeError);

  // sampler
  m.def("sample_indices",
        [](FrameIndex start, FrameIndex end, int t, const std::string& mode, std::uint64_t seed) {
          return SampleIndices(start, end, t, ParseSamplingMode(mode), seed);
        },
        py::arg("start"), py::arg("end"), py::arg("t"), py::arg("mode") = "uniform", py::arg("seed") = 0);
  m.def("partition_local", [](FrameIndex f, int k, int t) { return PartitionLocal(f, k, t); },
        py::arg("frame_count"), py::arg("k"), py::arg("t"));
  m.def("build_plan",
        [](int w, FrameIndex total_frames, int t, int k, const std::string& mode, std::uint64_t seed,
           int fps) {
          const auto plan = BuildPlan(ObservationWindow::Make("video", w, fps, total_frames), t, k,
                                      ParseSamplingMode(mode), seed);
          py::dict d;
          d["global"] = plan.global_indices;
          d["locals"] = plan.local_indices;
          d["bounds"] = plan.segment_bounds;
          return d;
        },
        py::arg("w"), py::arg("total_frames"), py::arg("t") = 8, py::arg("k") = 2,
        py::arg("mode") = "uniform", py::arg("seed") = 0, py::arg("fps") = 1);

  // backbone
  m.def("pool_and_flatten",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& raw, int h_p, int w_p) {
          return Eigen::MatrixXd(PoolAndFlatten(GridFromNumpy(raw), h_p, w_p).tokens);
        },
        py::arg("raw"), py::arg("h_p") = 4, py::arg("w_p") = 4,
        "Mean-pool a (t, h, w, d) array to (t*h_p*w_p, d) tokens.");

  // metrics
  m.def("hit", &metrics::Hit, py::arg("probs"), py::arg("label"), py::arg("tau") = 0.7);
  m.def("stability", &metrics::Stability, py::arg("w"), py::arg("n"), py::arg("hits"));
  m.def("es",
        [](int n, const py::dict& stream, double tau) {
          return metrics::EarlinessStability(n, StreamFromPy(stream), tau);
        },
        py::arg("n"), py::arg("stream"), py::arg("tau") = 0.7,
        "stream: dict(probs=[[...] per window], label=int, w_max=18)");
  m.def("mean_es", [](const py::list& s, double tau) { return metrics::MeanEs(StreamsFromPy(s), tau); },
        py::arg("streams"), py::arg("tau") = 0.7);
  m.def("macro_f1",
        [](const std::vector<int>& y, const std::vector<int>& p, int c) { return metrics::MacroF1(y, p, c); },
        py::arg("labels"), py::arg("preds"), py::arg("num_classes"));
  m.def("qwk", [](const std::vector<int>& y, const std::vector<int>& p, int c) { return metrics::Qwk(y, p, c); },
        py::arg("labels"), py::arg("preds"), py::arg("num_classes"));
  m.def("evaluate",
        [](const py::list& s, double tau, const std::string& protocol) {
          return ReportToPy(metrics::Evaluate(StreamsFromPy(s), tau, metrics::ParseProtocol(protocol)));
        },
        py::arg("streams"), py::arg("tau") = 0.7, py::arg("protocol") = "per-window");
  m.def("evaluate_file",
        [](const std::string& path, double tau, const std::string& protocol) {
          std::ifstream in(path);
          if (!in) throw DataError("cannot open " + path);
          return ReportToPy(metrics::Evaluate(io::ReadStreams(in), tau, metrics::ParseProtocol(protocol)));
        },
        py::arg("path"), py::arg("tau") = 0.7, py::arg("protocol") = "per-window");

  // dataset
  m.def("majority_vote",
        [](const std::array<int, 3>& r, int c) {
          const auto v = MajorityVote(r, c);
          return py::make_tuple(v.label, v.tie_broken);
        },
        py::arg("ratings"), py::arg("num_classes"));
  m.def("stratified_split",
        [](const std::vector<std::string>& ids, const std::vector<int>& labels,
           const std::array<int, 3>& sizes, std::uint64_t seed) {
          return SplitToPy(StratifiedSplit(ids, labels, sizes, seed));
        },
        py::arg("video_ids"), py::arg("labels"), py::arg("split_sizes"), py::arg("seed") = 0);
  m.def("synthesize_dataset",
        [](const std::string& path, const py::dict& config) {
          DatasetConfig c;
          FromJson(FromPy(config), c);
          const auto records = SynthesizeDataset(c);
          std::ofstream out(path);
          if (!out) throw DataError("cannot write " + path);
          WriteDatasetManifest(out, records);
          return records.size();
        },
        py::arg("path"), py::arg("config") = py::dict(),
        "Write a dataset manifest (JSONL) and return the number of videos.");
  m.def("split_dataset",
        [](const std::string& path, const std::string& scale, std::uint64_t seed) {
          std::ifstream in(path);
          if (!in) throw DataError("cannot open " + path);
          return SplitToPy(SplitForScale(ReadDatasetManifest(in), GetScale(scale).name, seed));
        },
        py::arg("path"), py::arg("scale") = "pgs", py::arg("seed") = 0);

  // experiments
  m.def("default_manifest", [] { return ToPy(RunManifest{}.ToJson()); });
  m.def("run_experiment",
        [](const py::dict& manifest) {
          const RunManifest mf = RunManifest::FromJson(FromPy(manifest));
          RunResult r;
          {
            py::gil_scoped_release release;
            r = RunExperiment(mf);
          }
          py::dict out = ReportToPy(r.report);
          py::dict artifacts;
          for (const auto& [name, path] : r.artifacts) artifacts[py::str(name)] = path.string();
          out["artifacts"] = artifacts;
          out["best_epoch"] = r.training.best_epoch;
          return out;
        },
        py::arg("manifest"),
        "Train and evaluate one run. `manifest` follows the JSON run-manifest schema; "
        "missing fields take their defaults.");
}
