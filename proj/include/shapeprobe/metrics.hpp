// Copyright 2026 The shapeprobe Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <array>
#include <cmath>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "shapeprobe/dataset.hpp"
#include "shapeprobe/error.hpp"
#include "shapeprobe/hashing.hpp"
#include "shapeprobe/image.hpp"
#include "shapeprobe/png_io.hpp"

namespace shapeprobe {

/// Intersection over union of two binary masks. Two empty masks agree
/// perfectly and score 1.
inline double iou(const LabelMask& pred, const LabelMask& truth) {
  if (!pred.same_size(truth))
    throw MetricError("iou: mask dimensions differ (" + std::to_string(pred.width()) + "x" +
                      std::to_string(pred.height()) + " vs " + std::to_string(truth.width()) + "x" +
                      std::to_string(truth.height()) + ")");
  std::size_t inter = 0, uni = 0;
  const auto a = pred.bytes(), b = truth.bytes();
  for (std::size_t i = 0; i < a.size(); ++i) {
    const bool p = a[i] != 0, t = b[i] != 0;
    inter += p && t;
    uni += p || t;
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

/// Relative loss of IOU on a probing set.
inline double performance_drop(double iou_probe, double iou_val) {
  if (!(iou_val > 0)) throw MetricError("performance drop is undefined when IOU on val is 0");
  return 1.0 - iou_probe / iou_val;
}

struct ProbeScores {
  double val = 0, rm = 0, aff = 0, shuf = 0;
};

struct SbiReport {
  double pd_rm = 0, pd_aff = 0, pd_shuf = 0;
  double delta_rm = 0, delta_aff = 0, delta_shuf = 0;
  double sbi = 0;
};

/// SoftMax-normalized drops and SBI = (d_aff + d_shuf) / d_rm.
inline SbiReport sbi(const ProbeScores& s) {
  SbiReport r;
  r.pd_rm = performance_drop(s.rm, s.val);
  r.pd_aff = performance_drop(s.aff, s.val);
  r.pd_shuf = performance_drop(s.shuf, s.val);
  const double m = std::max({r.pd_rm, r.pd_aff, r.pd_shuf});
  const double e_rm = std::exp(r.pd_rm - m), e_aff = std::exp(r.pd_aff - m),
               e_shuf = std::exp(r.pd_shuf - m);
  const double z = e_rm + e_aff + e_shuf;
  r.delta_rm = e_rm / z;
  r.delta_aff = e_aff / z;
  r.delta_shuf = e_shuf / z;
  r.sbi = (r.delta_aff + r.delta_shuf) / r.delta_rm;
  return r;
}

/// Same quantity without the normalization step.
inline double sbi_closed_form(const ProbeScores& s) {
  const double rm = performance_drop(s.rm, s.val);
  return std::exp(performance_drop(s.aff, s.val) - rm) +
         std::exp(performance_drop(s.shuf, s.val) - rm);
}

// ---------------------------------------------------------------------------
// Receptive field.

struct ConvSpec {
  int kernel = 3;
  int dilation = 1;
};

/// A resolution level: its convolutions, then a downsampling factor applied
/// before the next stage (1 for the last one).
struct Stage {
  std::vector<ConvSpec> convs;
  int downsample = 1;
};

struct LayerSpec {
  std::string name;
  std::vector<Stage> stages;
};

/// Receptive field in input pixels of one unit at the deepest stage.
inline long long receptive_field(const LayerSpec& spec) {
  if (spec.stages.empty()) throw ConfigError("layer spec '" + spec.name + "' has no stages");
  long long rf = 1;
  for (auto it = spec.stages.rbegin(); it != spec.stages.rend(); ++it) {
    if (it->downsample < 1) throw ConfigError("downsample factor must be >= 1");
    long long grow = 0;
    for (const auto& c : it->convs) {
      if (c.kernel < 1 || c.dilation < 1) throw ConfigError("kernel and dilation must be >= 1");
      grow += static_cast<long long>(c.dilation) * (c.kernel - 1);
    }
    // The deepest stage's own downsample factor has no effect.
    if (it != spec.stages.rbegin()) rf *= it->downsample;
    rf += grow;
  }
  return rf;
}

inline LayerSpec layer_spec_from_json(const nlohmann::json& j) {
  LayerSpec spec;
  try {
    spec.name = j.value("name", "");
    for (const auto& s : j.at("stages")) {
      Stage st;
      st.downsample = s.value("downsample", 1);
      for (const auto& c : s.at("convs")) st.convs.push_back({c.value("kernel", 3), c.value("dilation", 1)});
      spec.stages.push_back(std::move(st));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("layer spec: ") + e.what());
  }
  return spec;
}

inline LayerSpec read_layer_spec(const std::filesystem::path& p) {
  return layer_spec_from_json(read_json(p));
}

// ---------------------------------------------------------------------------
// Scoring prediction directories.

/// Neumaier-compensated mean.
inline double stable_mean(const std::vector<double>& v) {
  if (v.empty()) return 0;
  double sum = 0, comp = 0;
  for (double x : v) {
    const double t = sum + x;
    comp += std::abs(sum) >= std::abs(x) ? (sum - t) + x : (x - t) + sum;
    sum = t;
  }
  return (sum + comp) / static_cast<double>(v.size());
}

/// Mean per-image IOU of the masks in `pred_dir` (one PNG per scene, named
/// like the ground-truth mask) against a dataset directory.
inline double mean_iou(const std::filesystem::path& dataset_dir, const std::filesystem::path& pred_dir,
                       std::size_t* n_images = nullptr) {
  const DatasetManifest m = read_manifest(dataset_dir);
  std::vector<std::string> missing;
  std::vector<double> scores;
  for (const auto& e : m.scenes) {
    const auto pred_path = pred_dir / (e.name + ".png");
    if (!std::filesystem::exists(pred_path)) {
      missing.push_back(e.name);
      continue;
    }
    const LabelMask truth = read_png_mask(dataset_dir / "masks" / (e.name + ".png"));
    const LabelMask pred = read_png_mask(pred_path);
    if (!pred.same_size(truth))
      throw ValidationError("prediction " + pred_path.string() + " has the wrong size");
    scores.push_back(iou(pred, truth));
  }
  if (!missing.empty()) {
    std::string list;
    for (std::size_t i = 0; i < missing.size() && i < 20; ++i) list += (i ? ", " : "") + missing[i];
    if (missing.size() > 20) list += ", ...";
    throw ValidationError(std::to_string(missing.size()) + " prediction(s) missing in " +
                          pred_dir.string() + ": " + list);
  }
  if (n_images) *n_images = scores.size();
  return stable_mean(scores);
}

/// A dataset directory paired with predictions on it.
struct RunPart {
  std::filesystem::path dataset;
  std::filesystem::path predictions;
};

struct RunLayout {
  RunPart val, rm, aff, shuf;
};

namespace detail {

inline void check_probe_source(const std::filesystem::path& probe_dir, const std::string& val_hash) {
  const auto probe_json = probe_dir / "probe.json";
  if (!std::filesystem::exists(probe_json)) return;
  const auto info = read_json(probe_json);
  const std::string src = info.value("source_manifest_hash", "");
  if (src != val_hash)
    throw ValidationError("probing set " + probe_dir.string() +
                          " was derived from a different val set (" + src + " != " + val_hash + ")");
}

}  // namespace detail

inline nlohmann::json report_json(const ProbeScores& s, const SbiReport& r) {
  return {{"iou", {{"val", s.val}, {"rm", s.rm}, {"aff", s.aff}, {"shuf", s.shuf}}},
          {"pd", {{"rm", r.pd_rm}, {"aff", r.pd_aff}, {"shuf", r.pd_shuf}}},
          {"delta", {{"rm", r.delta_rm}, {"aff", r.delta_aff}, {"shuf", r.delta_shuf}}},
          {"sbi", r.sbi}};
}

/// Scores one model on val and the three probing sets.
inline nlohmann::json evaluate_run(const RunLayout& run) {
  const std::string val_hash = manifest_hash(read_manifest(run.val.dataset));
  for (const auto* p : {&run.rm, &run.aff, &run.shuf}) detail::check_probe_source(p->dataset, val_hash);
  ProbeScores s;
  std::map<std::string, std::size_t> counts;
  s.val = mean_iou(run.val.dataset, run.val.predictions, &counts["val"]);
  s.rm = mean_iou(run.rm.dataset, run.rm.predictions, &counts["rm"]);
  s.aff = mean_iou(run.aff.dataset, run.aff.predictions, &counts["aff"]);
  s.shuf = mean_iou(run.shuf.dataset, run.shuf.predictions, &counts["shuf"]);
  nlohmann::json j = report_json(s, sbi(s));
  j["n_images"] = counts;
  j["source_manifests"] = {{"val", val_hash},
                           {"rm", manifest_hash(read_manifest(run.rm.dataset))},
                           {"aff", manifest_hash(read_manifest(run.aff.dataset))},
                           {"shuf", manifest_hash(read_manifest(run.shuf.dataset))}};
  return j;
}

}  // namespace shapeprobe
