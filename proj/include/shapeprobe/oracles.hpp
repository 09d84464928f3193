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

#include <cmath>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "shapeprobe/alignment.hpp"
#include "shapeprobe/dataset.hpp"
#include "shapeprobe/error.hpp"
#include "shapeprobe/image.hpp"

namespace shapeprobe {

// Reference predictors with known feature reliance. They choose among the
// instance masks a scene carries instead of looking at pixels, so what they
// rely on is exact.

enum class OracleKind { kShapeTemplate, kTextureLookup, kAnyForeground };

inline std::string to_string(OracleKind k) {
  switch (k) {
    case OracleKind::kShapeTemplate: return "shape_template";
    case OracleKind::kTextureLookup: return "texture_lookup";
    case OracleKind::kAnyForeground: return "any_foreground";
  }
  return "?";
}

inline OracleKind parse_oracle_kind(const std::string& s) {
  for (auto k : {OracleKind::kShapeTemplate, OracleKind::kTextureLookup, OracleKind::kAnyForeground})
    if (to_string(k) == s) return k;
  throw ConfigError("unknown oracle '" + s +
                    "' (expected shape_template, texture_lookup or any_foreground)");
}

/// Mean colour and local variance of an object's pixels.
struct ColorSignature {
  double r = 0, g = 0, b = 0;
  double local_std = 0;

  double distance(const ColorSignature& o) const {
    return std::sqrt((r - o.r) * (r - o.r) + (g - o.g) * (g - o.g) + (b - o.b) * (b - o.b) +
                     (local_std - o.local_std) * (local_std - o.local_std));
  }
};

inline ColorSignature color_signature(const RasterImage& img, const LabelMask& m) {
  ColorSignature s;
  std::size_t n = 0;
  double var = 0;
  std::size_t nv = 0;
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      if (!m.at(x, y)) continue;
      const auto* p = img.pixel(x, y);
      s.r += p[0];
      s.g += p[1];
      s.b += p[2];
      ++n;
      if (x == 0 || y == 0 || x + 1 == img.width() || y + 1 == img.height()) continue;
      bool interior = true;
      double mean = 0;
      for (int dy = -1; dy <= 1 && interior; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          if (!m.at(x + dx, y + dy)) {
            interior = false;
            break;
          }
          const auto* q = img.pixel(x + dx, y + dy);
          mean += (0.299 * q[0] + 0.587 * q[1] + 0.114 * q[2]) / 9.0;
        }
      if (!interior) continue;
      const double d = 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2] - mean;
      var += d * d;
      ++nv;
    }
  if (n) {
    s.r /= n;
    s.g /= n;
    s.b /= n;
  }
  if (nv) s.local_std = std::sqrt(var / nv);
  return s;
}

struct OracleOptions {
  /// Minimum alignment IOU for shape_template to accept an instance.
  double shape_threshold = 0.8;
  /// texture_lookup: match on colour signatures instead of texture ids.
  bool image_mode = false;
  /// Maximum signature distance (8-bit units) in image mode.
  double signature_tolerance = 12.0;
};

struct Oracle {
  OracleKind kind = OracleKind::kAnyForeground;
  OracleOptions options;
  ShapeSignature shape_template;
  std::set<std::string> texture_ids;
  std::vector<ColorSignature> signatures;
};

inline Oracle fit_oracle(OracleKind kind, const Dataset& train, OracleOptions options = {}) {
  if (train.scenes.empty()) throw ValidationError("fit error: the training set is empty");
  Oracle o;
  o.kind = kind;
  o.options = options;
  switch (kind) {
    case OracleKind::kShapeTemplate: {
      std::vector<ShapeSignature> sigs;
      for (const auto& s : train.scenes)
        for (const auto& obj : s.objects)
          if (obj.is_target) sigs.emplace_back(obj.mask);
      if (sigs.empty()) throw ValidationError("fit error: no target instances in the training set");
      o.shape_template = ShapeSignature::mean(sigs);
      break;
    }
    case OracleKind::kTextureLookup:
      for (const auto& s : train.scenes)
        for (const auto& obj : s.objects) {
          if (!obj.is_target) continue;
          if (options.image_mode)
            o.signatures.push_back(color_signature(s.image, obj.mask));
          else
            for (const auto& t : obj.texture_ids()) o.texture_ids.insert(t);
        }
      if (o.texture_ids.empty() && o.signatures.empty())
        throw ValidationError("fit error: no target instances in the training set");
      break;
    case OracleKind::kAnyForeground:
      break;
  }
  return o;
}

/// Whether the oracle would label `obj` as target.
inline bool selects(const Oracle& o, const SceneInstance& s, const SceneObject& obj) {
  switch (o.kind) {
    case OracleKind::kShapeTemplate:
      return alignment_iou(o.shape_template, ShapeSignature(obj.mask)) >= o.options.shape_threshold;
    case OracleKind::kTextureLookup: {
      if (!o.options.image_mode) return o.texture_ids.count(obj.dominant_texture()) > 0;
      const ColorSignature sig = color_signature(s.image, obj.mask);
      double best = std::numeric_limits<double>::infinity();
      for (const auto& t : o.signatures) best = std::min(best, sig.distance(t));
      return best <= o.options.signature_tolerance;
    }
    case OracleKind::kAnyForeground:
      return true;
  }
  return false;
}

/// Union of the selected instance masks.
inline LabelMask predict(const Oracle& o, const SceneInstance& s) {
  LabelMask out(s.image.width(), s.image.height());
  for (const auto& obj : s.objects)
    if (selects(o, s, obj)) out = mask_or(out, obj.mask);
  return out;
}

inline nlohmann::json to_json(const Oracle& o) {
  nlohmann::json j = {{"kind", to_string(o.kind)}};
  switch (o.kind) {
    case OracleKind::kShapeTemplate:
      j["shape_threshold"] = o.options.shape_threshold;
      break;
    case OracleKind::kTextureLookup:
      j["image_mode"] = o.options.image_mode;
      if (o.options.image_mode) {
        j["signature_tolerance"] = o.options.signature_tolerance;
        j["signatures"] = o.signatures.size();
      } else {
        j["texture_ids"] = o.texture_ids;
      }
      break;
    case OracleKind::kAnyForeground:
      break;
  }
  return j;
}

}  // namespace shapeprobe
