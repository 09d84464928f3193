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

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "shapeprobe/dataset.hpp"
#include "shapeprobe/error.hpp"
#include "shapeprobe/image.hpp"
#include "shapeprobe/random.hpp"

namespace shapeprobe {

// ---------------------------------------------------------------------------
// Corruptions. Severity tables follow the usual 1-5 corruption-benchmark
// conventions, expressed on the 8-bit scale.

enum class Corruption { kGaussian, kShot, kImpulse, kDefocusBlur, kPixelate, kMotionBlur };

inline constexpr std::array<Corruption, 6> kAllCorruptions = {
    Corruption::kGaussian,    Corruption::kShot,     Corruption::kImpulse,
    Corruption::kDefocusBlur, Corruption::kPixelate, Corruption::kMotionBlur};

/// Command-line names.
inline std::string to_string(Corruption c) {
  switch (c) {
    case Corruption::kGaussian: return "gaussian";
    case Corruption::kShot: return "shot";
    case Corruption::kImpulse: return "impulse";
    case Corruption::kDefocusBlur: return "defocus";
    case Corruption::kPixelate: return "pixelate";
    case Corruption::kMotionBlur: return "motion";
  }
  return "?";
}

inline Corruption parse_corruption(const std::string& s) {
  for (auto c : kAllCorruptions)
    if (to_string(c) == s) return c;
  throw ConfigError("unknown corruption '" + s +
                    "' (expected gaussian, shot, impulse, defocus, pixelate or motion)");
}

struct CorruptionSpec {
  Corruption kind = Corruption::kGaussian;
  int severity = 1;
  double sigma = 0;        // gaussian, 8-bit units
  double photons = 0;      // shot: photon count at full scale
  double probability = 0;  // impulse
  int disk_radius = 0;     // defocus
  int block = 1;           // pixelate
  int length = 1;          // motion
  /// Motion direction in degrees; drawn per image in [-45, 45] when unset.
  std::optional<double> angle;

  static CorruptionSpec make(Corruption kind, int severity) {
    if (severity < 1 || severity > 5) throw ConfigError("severity must lie in [1, 5]");
    static constexpr double kSigma[] = {0.08, 0.12, 0.18, 0.26, 0.38};
    static constexpr double kPhotons[] = {60, 25, 12, 5, 3};
    static constexpr double kImpulse[] = {0.03, 0.06, 0.09, 0.17, 0.27};
    static constexpr int kDisk[] = {3, 4, 6, 8, 10};
    static constexpr int kBlock[] = {2, 3, 4, 6, 8};
    static constexpr int kLength[] = {7, 11, 15, 19, 23};
    CorruptionSpec s;
    s.kind = kind;
    s.severity = severity;
    const int i = severity - 1;
    s.sigma = kSigma[i] * 255.0;
    s.photons = kPhotons[i];
    s.probability = kImpulse[i];
    s.disk_radius = kDisk[i];
    s.block = kBlock[i];
    s.length = kLength[i];
    return s;
  }
};

namespace detail {

struct Kernel {
  int radius = 0;
  std::vector<double> weights;  // (2r+1)^2, row-major
};

inline Kernel disk_kernel(int radius) {
  Kernel k;
  k.radius = radius;
  const int n = 2 * radius + 1;
  k.weights.assign(static_cast<std::size_t>(n) * n, 0.0);
  double sum = 0;
  for (int y = -radius; y <= radius; ++y)
    for (int x = -radius; x <= radius; ++x)
      if (x * x + y * y <= radius * radius) {
        k.weights[static_cast<std::size_t>(y + radius) * n + (x + radius)] = 1;
        sum += 1;
      }
  for (auto& w : k.weights) w /= sum;
  return k;
}

inline Kernel line_kernel(int length, double angle_deg) {
  Kernel k;
  k.radius = length / 2 + 1;
  const int n = 2 * k.radius + 1;
  k.weights.assign(static_cast<std::size_t>(n) * n, 0.0);
  const double a = angle_deg * std::numbers::pi / 180.0;
  const double half = (length - 1) / 2.0;
  double sum = 0;
  for (int i = 0; i < length; ++i) {
    const double t = i - half;
    const int x = static_cast<int>(std::lround(t * std::cos(a)));
    const int y = static_cast<int>(std::lround(t * std::sin(a)));
    auto& w = k.weights[static_cast<std::size_t>(y + k.radius) * n + (x + k.radius)];
    if (w == 0) {
      w = 1;
      sum += 1;
    }
  }
  for (auto& w : k.weights) w /= sum;
  return k;
}

inline RasterImage convolve(const RasterImage& img, const Kernel& k) {
  RasterImage out(img.width(), img.height());
  const int n = 2 * k.radius + 1;
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      double acc[3] = {0, 0, 0};
      for (int dy = -k.radius; dy <= k.radius; ++dy) {
        const int sy = reflect_index(y + dy, img.height());
        for (int dx = -k.radius; dx <= k.radius; ++dx) {
          const double w = k.weights[static_cast<std::size_t>(dy + k.radius) * n + (dx + k.radius)];
          if (w == 0) continue;
          const auto* px = img.pixel(reflect_index(x + dx, img.width()), sy);
          for (int c = 0; c < 3; ++c) acc[c] += w * px[c];
        }
      }
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = clamp_u8(acc[c]);
    }
  return out;
}

}  // namespace detail

/// Applies one corruption to an image. Masks are never corrupted.
inline RasterImage corrupt(const RasterImage& img, const CorruptionSpec& spec, Rng& rng) {
  RasterImage out = img;
  auto bytes = out.bytes();
  switch (spec.kind) {
    case Corruption::kGaussian:
      if (spec.sigma <= 0) return out;
      for (auto& v : bytes) v = clamp_u8(v + spec.sigma * rng.normal());
      return out;
    case Corruption::kShot:
      if (spec.photons <= 0) throw ValidationError("shot noise needs a positive photon scale");
      for (auto& v : bytes) {
        const double counts = static_cast<double>(rng.poisson(v / 255.0 * spec.photons));
        v = clamp_u8(counts / spec.photons * 255.0);
      }
      return out;
    case Corruption::kImpulse:
      for (auto& v : bytes)
        if (rng.bernoulli(spec.probability)) v = rng.bernoulli(0.5) ? 255 : 0;
      return out;
    case Corruption::kDefocusBlur:
      if (spec.disk_radius <= 0) return out;
      return detail::convolve(img, detail::disk_kernel(spec.disk_radius));
    case Corruption::kPixelate: {
      const int f = spec.block;
      if (f <= 1) return out;
      for (int by = 0; by < img.height(); by += f)
        for (int bx = 0; bx < img.width(); bx += f) {
          const int ey = std::min(by + f, img.height()), ex = std::min(bx + f, img.width());
          double acc[3] = {0, 0, 0};
          for (int y = by; y < ey; ++y)
            for (int x = bx; x < ex; ++x)
              for (int c = 0; c < 3; ++c) acc[c] += img.at(x, y, c);
          const double n = static_cast<double>((ey - by) * (ex - bx));
          for (int y = by; y < ey; ++y)
            for (int x = bx; x < ex; ++x)
              for (int c = 0; c < 3; ++c) out.at(x, y, c) = clamp_u8(acc[c] / n);
        }
      return out;
    }
    case Corruption::kMotionBlur: {
      if (spec.length <= 1) return out;
      const double angle = spec.angle ? *spec.angle : rng.uniform(-45.0, 45.0);
      return detail::convolve(img, detail::line_kernel(spec.length, angle));
    }
  }
  return out;
}

/// Corrupted copy of a dataset; labels and instance metadata untouched.
inline Dataset corrupt_dataset(const Dataset& ds, const CorruptionSpec& spec, std::uint64_t seed) {
  Dataset out;
  out.manifest = ds.manifest;
  out.manifest.derivation = {{"kind", "corruption"},
                             {"corruption", to_string(spec.kind)},
                             {"severity", spec.severity},
                             {"source_manifest_hash", manifest_hash(ds.manifest)}};
  for (std::size_t i = 0; i < ds.scenes.size(); ++i) {
    SceneInstance s = ds.scenes[i];
    Rng rng(child_seed(seed, i, 0xc0));
    s.image = corrupt(s.image, spec, rng);
    out.scenes.push_back(std::move(s));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Training augmentations.

enum class Augmentation {
  kColorJitter,
  kSeparateColorJitter,
  kNegativeInsertion,
  kRandomResizedCrop,
  kRandomCropReflect,
};

inline std::string to_string(Augmentation a) {
  switch (a) {
    case Augmentation::kColorJitter: return "color_jitter";
    case Augmentation::kSeparateColorJitter: return "separate_color_jitter";
    case Augmentation::kNegativeInsertion: return "negative_insertion";
    case Augmentation::kRandomResizedCrop: return "random_resized_crop";
    case Augmentation::kRandomCropReflect: return "random_crop_reflect";
  }
  return "?";
}

inline Augmentation parse_augmentation(const std::string& s) {
  for (auto a : {Augmentation::kColorJitter, Augmentation::kSeparateColorJitter,
                 Augmentation::kNegativeInsertion, Augmentation::kRandomResizedCrop,
                 Augmentation::kRandomCropReflect})
    if (to_string(a) == s) return a;
  throw ConfigError("unknown augmentation '" + s + "'");
}

/// Crops change the target's shape; the others keep masks bit-identical.
inline bool alters_shape(Augmentation a) {
  return a == Augmentation::kRandomResizedCrop || a == Augmentation::kRandomCropReflect;
}

struct AugmentationSpec {
  Augmentation kind = Augmentation::kColorJitter;
  double probability = 0.5;
  double brightness = 0.4;
  double contrast = 0.4;
  double saturation = 0.2;
  std::array<double, 2> crop_scale{0.5, 1.0};
  std::array<double, 2> crop_ratio{3.0 / 4.0, 4.0 / 3.0};
  std::array<double, 2> reflect_scale{0.6, 0.9};
  int patch_grid = 2;

  bool shape_altering() const { return alters_shape(kind); }
};

inline nlohmann::json to_json(const AugmentationSpec& a) {
  return {{"kind", to_string(a.kind)},          {"probability", a.probability},
          {"brightness", a.brightness},         {"contrast", a.contrast},
          {"saturation", a.saturation},         {"crop_scale", a.crop_scale},
          {"crop_ratio", a.crop_ratio},         {"reflect_scale", a.reflect_scale},
          {"patch_grid", a.patch_grid},         {"shape_altering", a.shape_altering()}};
}

inline AugmentationSpec augmentation_from_json(const nlohmann::json& j) {
  static const std::set<std::string> kKeys = {"kind", "probability", "brightness", "contrast",
                                              "saturation", "crop_scale", "crop_ratio",
                                              "reflect_scale", "patch_grid", "shape_altering"};
  if (!j.is_object()) throw ConfigError("augmentation spec must be a JSON object");
  for (const auto& [k, v] : j.items())
    if (!kKeys.count(k)) throw ConfigError("unknown augmentation key '" + k + "'");
  AugmentationSpec a;
  try {
    a.kind = parse_augmentation(j.at("kind").get<std::string>());
    a.probability = j.value("probability", a.probability);
    a.brightness = j.value("brightness", a.brightness);
    a.contrast = j.value("contrast", a.contrast);
    a.saturation = j.value("saturation", a.saturation);
    a.crop_scale = j.value("crop_scale", a.crop_scale);
    a.crop_ratio = j.value("crop_ratio", a.crop_ratio);
    a.reflect_scale = j.value("reflect_scale", a.reflect_scale);
    a.patch_grid = j.value("patch_grid", a.patch_grid);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("augmentation spec: ") + e.what());
  }
  if (a.probability < 0 || a.probability > 1) throw ConfigError("probability must lie in [0, 1]");
  if (a.patch_grid < 2) throw ConfigError("patch_grid must be at least 2");
  return a;
}

struct JitterFactors {
  double brightness = 1;
  double contrast = 1;
  double saturation = 1;
};

/// Brightness, contrast and saturation applied to the pixels selected by
/// `region` (all pixels when `region` is null). Contrast pivots on the mean
/// luma of the region.
inline void apply_jitter(RasterImage& img, const LabelMask* region, JitterFactors f, bool invert = false) {
  auto selected = [&](int x, int y) { return !region || (region->at(x, y) != 0) != invert; };
  double luma_sum = 0;
  std::size_t n = 0;
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      if (!selected(x, y)) continue;
      const auto* p = img.pixel(x, y);
      luma_sum += f.brightness * (0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2]);
      ++n;
    }
  if (n == 0) return;
  const double mean = luma_sum / n;
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      if (!selected(x, y)) continue;
      auto* p = img.pixel(x, y);
      double v[3];
      for (int c = 0; c < 3; ++c) v[c] = p[c] * f.brightness;
      for (auto& c : v) c = (c - mean) * f.contrast + mean;
      const double g = 0.299 * v[0] + 0.587 * v[1] + 0.114 * v[2];
      for (int c = 0; c < 3; ++c) p[c] = clamp_u8((v[c] - g) * f.saturation + g);
    }
}

namespace detail {

inline JitterFactors sample_jitter(const AugmentationSpec& a, Rng& rng) {
  return {rng.uniform(1 - a.brightness, 1 + a.brightness),
          rng.uniform(1 - a.contrast, 1 + a.contrast),
          rng.uniform(1 - a.saturation, 1 + a.saturation)};
}

template <typename F>
void map_geometry(SceneInstance& s, F&& f) {
  s.image = f(s.image, false);
  s.target_mask = f(s.target_mask, true);
  for (auto& o : s.objects) {
    o.mask = f(o.mask, true);
    for (auto& p : o.parts) p.mask = f(p.mask, true);
    std::erase_if(o.parts, [](const ObjectPart& p) { return empty(p.mask); });
  }
  std::erase_if(s.objects, [](const SceneObject& o) { return empty(o.mask); });
}

inline bool negative_insertion(SceneInstance& s, const AugmentationSpec& a, Rng& rng) {
  const PixelBox box = bounding_box(s.target_mask);
  const int g = a.patch_grid;
  const int pw = box.width() / g, ph = box.height() / g;
  if (box.empty() || pw < 1 || ph < 1) return false;
  const int w = pw * g, h = ph * g;
  std::vector<int> perm(static_cast<std::size_t>(g * g));
  std::vector<int> identity(perm.size());
  for (std::size_t i = 0; i < perm.size(); ++i) identity[i] = static_cast<int>(i);
  do {
    perm = identity;
    rng.shuffle(perm);
  } while (perm == identity);

  const PixelBox crop_box{box.x0, box.y0, box.x0 + w, box.y0 + h};
  const auto shuffle = [&](const auto& r) { return permute_patches(crop(r, crop_box), perm, g); };
  const RasterImage pieces = shuffle(s.image);
  const LabelMask piece_mask = shuffle(s.target_mask);

  const LabelMask blocked = dilate(s.occupied(), kObjectMargin);
  const int W = s.image.width(), H = s.image.height();
  if (w > W || h > H) return false;
  for (int attempt = 0; attempt < kPlacementAttempts * 2; ++attempt) {
    const int ox = static_cast<int>(rng.uniform_int(0, W - w));
    const int oy = static_cast<int>(rng.uniform_int(0, H - h));
    bool clash = false;
    for (int y = 0; y < h && !clash; ++y)
      for (int x = 0; x < w; ++x)
        if (piece_mask.at(x, y) && blocked.at(ox + x, oy + y)) {
          clash = true;
          break;
        }
    if (clash) continue;

    SceneObject inserted;
    inserted.is_target = false;
    inserted.inserted = true;
    inserted.mask = LabelMask(W, H);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        if (piece_mask.at(x, y)) {
          std::copy_n(pieces.pixel(x, y), 3, s.image.pixel(ox + x, oy + y));
          inserted.mask.at(ox + x, oy + y) = 1;
        }
    for (const auto& o : s.objects) {
      if (!o.is_target) continue;
      for (const auto& part : o.parts) {
        const LabelMask moved = shuffle(part.mask);
        LabelMask placed(W, H);
        for (int y = 0; y < h; ++y)
          for (int x = 0; x < w; ++x)
            if (moved.at(x, y)) placed.at(ox + x, oy + y) = 1;
        if (!empty(placed)) inserted.parts.push_back({std::move(placed), part.texture});
      }
    }
    inserted.complex = inserted.parts.size() > 1;
    s.objects.push_back(std::move(inserted));
    s.record["inserted_at"] = {ox, oy};
    s.record["patch_permutation"] = perm;
    return true;
  }
  return false;
}

}  // namespace detail

/// Applies `a` with probability a.probability. The outcome is recorded in
/// scene.record["augmentation"].
inline SceneInstance augment(const SceneInstance& scene, const AugmentationSpec& a, Rng& rng) {
  SceneInstance s = scene;
  nlohmann::json rec = {{"kind", to_string(a.kind)}, {"applied", false}};
  if (!rng.bernoulli(a.probability)) {
    s.record["augmentation"] = rec;
    return s;
  }
  const int W = s.image.width(), H = s.image.height();
  switch (a.kind) {
    case Augmentation::kColorJitter: {
      const auto f = detail::sample_jitter(a, rng);
      apply_jitter(s.image, nullptr, f);
      rec["factors"] = {f.brightness, f.contrast, f.saturation};
      break;
    }
    case Augmentation::kSeparateColorJitter: {
      const auto ft = detail::sample_jitter(a, rng);
      const auto fb = detail::sample_jitter(a, rng);
      RasterImage original = s.image;
      apply_jitter(s.image, &s.target_mask, ft);
      // The complement is jittered from the untouched pixels.
      RasterImage rest = original;
      apply_jitter(rest, &s.target_mask, fb, true);
      for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x)
          if (!s.target_mask.at(x, y)) std::copy_n(rest.pixel(x, y), 3, s.image.pixel(x, y));
      rec["target_factors"] = {ft.brightness, ft.contrast, ft.saturation};
      rec["rest_factors"] = {fb.brightness, fb.contrast, fb.saturation};
      break;
    }
    case Augmentation::kNegativeInsertion: {
      if (!detail::negative_insertion(s, a, rng)) {
        rec["skipped"] = true;
        s.record["augmentation"] = rec;
        return s;
      }
      break;
    }
    case Augmentation::kRandomResizedCrop: {
      const double area = static_cast<double>(W) * H * rng.uniform(a.crop_scale[0], a.crop_scale[1]);
      const double ratio = std::exp(rng.uniform(std::log(a.crop_ratio[0]), std::log(a.crop_ratio[1])));
      const int cw = std::clamp(static_cast<int>(std::lround(std::sqrt(area * ratio))), 1, W);
      const int ch = std::clamp(static_cast<int>(std::lround(std::sqrt(area / ratio))), 1, H);
      const int x0 = static_cast<int>(rng.uniform_int(0, W - cw));
      const int y0 = static_cast<int>(rng.uniform_int(0, H - ch));
      const PixelBox box{x0, y0, x0 + cw, y0 + ch};
      detail::map_geometry(s, [&](const auto& r, bool is_mask) {
        using R = std::decay_t<decltype(r)>;
        const R c = crop(r, box);
        if (is_mask) return resize_nearest(c, W, H);
        return resize_bilinear(c, W, H);
      });
      rec["crop"] = {x0, y0, cw, ch};
      break;
    }
    case Augmentation::kRandomCropReflect: {
      const int cw = std::clamp(
          static_cast<int>(std::lround(W * rng.uniform(a.reflect_scale[0], a.reflect_scale[1]))), 2, W);
      const int ch = std::clamp(
          static_cast<int>(std::lround(H * rng.uniform(a.reflect_scale[0], a.reflect_scale[1]))), 2, H);
      const int x0 = static_cast<int>(rng.uniform_int(0, W - cw));
      const int y0 = static_cast<int>(rng.uniform_int(0, H - ch));
      const int ox = static_cast<int>(rng.uniform_int(0, W - cw));
      const int oy = static_cast<int>(rng.uniform_int(0, H - ch));
      detail::map_geometry(s, [&](const auto& r, bool) {
        using R = std::decay_t<decltype(r)>;
        R out(W, H);
        for (int y = 0; y < H; ++y) {
          const int sy = y0 + reflect_index(y - oy, ch);
          for (int x = 0; x < W; ++x) {
            const int sx = x0 + reflect_index(x - ox, cw);
            std::copy_n(r.pixel(sx, sy), R::kChannels, out.pixel(x, y));
          }
        }
        return out;
      });
      rec["crop"] = {x0, y0, cw, ch};
      rec["offset"] = {ox, oy};
      break;
    }
  }
  rec["applied"] = true;
  s.record["augmentation"] = rec;
  return s;
}

inline Dataset augment_dataset(const Dataset& ds, const std::vector<AugmentationSpec>& specs,
                               std::uint64_t seed) {
  Dataset out;
  out.manifest = ds.manifest;
  nlohmann::json applied = nlohmann::json::array();
  for (const auto& a : specs) applied.push_back(to_json(a));
  out.manifest.derivation = {{"kind", "augmented"},
                             {"augmentations", applied},
                             {"source_manifest_hash", manifest_hash(ds.manifest)}};
  for (std::size_t i = 0; i < ds.scenes.size(); ++i) {
    SceneInstance s = ds.scenes[i];
    Rng rng(child_seed(seed, i, 0xa0));
    nlohmann::json records = nlohmann::json::array();
    for (const auto& a : specs) {
      s = augment(s, a, rng);
      records.push_back(s.record["augmentation"]);
    }
    s.record.erase("augmentation");
    s.record["augmentations"] = records;
    out.scenes.push_back(std::move(s));
  }
  return out;
}

}  // namespace shapeprobe
