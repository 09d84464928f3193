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

#include <filesystem>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "shapeprobe/alignment.hpp"
#include "shapeprobe/dataset.hpp"
#include "shapeprobe/error.hpp"
#include "shapeprobe/geometry.hpp"
#include "shapeprobe/image.hpp"

namespace shapeprobe {

enum class ProbeKind { kRm, kAff, kShuf, kBrightness, kElastic };

inline std::string to_string(ProbeKind k) {
  switch (k) {
    case ProbeKind::kRm: return "rm";
    case ProbeKind::kAff: return "aff";
    case ProbeKind::kShuf: return "shuf";
    case ProbeKind::kBrightness: return "brightness";
    case ProbeKind::kElastic: return "elastic";
  }
  return "?";
}

inline ProbeKind parse_probe_kind(const std::string& s) {
  for (auto k : {ProbeKind::kRm, ProbeKind::kAff, ProbeKind::kShuf, ProbeKind::kBrightness,
                 ProbeKind::kElastic})
    if (to_string(k) == s) return k;
  throw ConfigError("unknown probe kind '" + s + "'");
}

/// A derived dataset plus the record needed to audit or invert it
/// (written as probe.json).
struct ProbeSet {
  Dataset data;
  nlohmann::json info;
};

inline constexpr int kShuffleGrid = 4;
/// Transforms aligning the target with itself at or above this are redrawn.
inline constexpr double kSelfSymmetryThreshold = 0.99;
inline constexpr int kMaxElasticComponents = 3;
inline constexpr int kElasticResampleBudget = 12;

namespace detail {

inline ProbeSet start_probe(const Dataset& val, ProbeKind kind) {
  ProbeSet p;
  p.data.manifest = val.manifest;
  const auto source_hash = manifest_hash(val.manifest);
  p.data.manifest.derivation = {{"kind", "probe"}, {"probe", to_string(kind)},
                                {"source_manifest_hash", source_hash}};
  p.info = {{"kind", to_string(kind)},
            {"source_manifest_hash", source_hash},
            {"source_manifest", to_json(val.manifest)}};
  return p;
}

inline void finish_probe(ProbeSet& p) {
  nlohmann::json scenes = nlohmann::json::array();
  for (std::size_t i = 0; i < p.data.scenes.size(); ++i)
    scenes.push_back({{"name", p.data.manifest.scenes[i].name}, {"record", p.data.scenes[i].record}});
  p.info["scenes"] = scenes;
}

template <typename F>
void transform_geometry(SceneInstance& s, F&& f) {
  s.image = f(s.image);
  s.target_mask = f(s.target_mask);
  for (auto& o : s.objects) {
    o.mask = f(o.mask);
    for (auto& p : o.parts) p.mask = f(p.mask);
  }
}

inline BoxD to_box(const PixelBox& b) {
  return {static_cast<double>(b.x0), static_cast<double>(b.y0), static_cast<double>(b.x1),
          static_cast<double>(b.y1)};
}

}  // namespace detail

/// Non-shape features removed: every region is retextured from `unseen`;
/// singular / semi-singular scenes gain a random-shape distractor; with a
/// structure feature the target's interior layout is redrawn. Target masks
/// are unchanged.
inline ProbeSet make_rm(const Dataset& val, const TexturePool& unseen, const FeatureConfig& cfg,
                        std::uint64_t seed) {
  ProbeSet p = detail::start_probe(val, ProbeKind::kRm);
  p.info["unseen_pool"] = unseen.origin;
  const auto unseen_ids = unseen.ids();
  TextureSet textures({&unseen});
  for (std::size_t i = 0; i < val.scenes.size(); ++i) {
    SceneInstance s = val.scenes[i];
    if (s.objects.empty())
      throw ProbeError("scene " + val.manifest.scenes[i].name + " has no instance metadata");
    Rng rng(child_seed(seed, i, streams::kProbe));
    bool added = false;
    if (cfg.structure_feature) {
      for (auto& o : s.objects) {
        if (!o.is_target || !o.complex) continue;
        const BoxD fp = detail::to_box(bounding_box(o.mask));
        o.parts.clear();
        for (auto& m : complex_parts(o.mask, fp, cfg, nullptr, rng)) o.parts.push_back({std::move(m), {}});
      }
    }
    if (cfg.singular || cfg.semi_singular) {
      FeatureConfig placement = cfg;
      placement.width = s.image.width();
      placement.height = s.image.height();
      const ShapeSignature target_shape(s.target_mask);
      auto shape = place_random_shape(placement, target_shape, s.occupied(), rng);
      if (!shape)
        throw ProbeError("no room for a distractor in scene " + val.manifest.scenes[i].name);
      s.objects.push_back(make_object(*shape, false, cfg.complex_objects, placement, nullptr, rng));
      added = true;
    }
    std::size_t slots = 1;
    for (const auto& o : s.objects) slots += o.parts.size();
    const auto ids = draw_textures(unseen_ids, slots, rng);
    std::size_t next = 0;
    s.background_texture = ids[next++];
    for (auto& o : s.objects)
      for (auto& part : o.parts) part.texture = ids[next++];
    s.image = RasterImage(s.image.width(), s.image.height());
    render_scene(s, textures, rng);
    s.record = {{"unseen_pool", unseen.origin}, {"added_distractor", added}};
    p.data.scenes.push_back(std::move(s));
  }
  detail::finish_probe(p);
  return p;
}

inline ProbeSet make_rm(const Dataset& val, const TexturePool& unseen, std::uint64_t seed) {
  return make_rm(val, unseen, val.manifest.config, seed);
}

inline void apply_isometry(SceneInstance& s, Isometry t) {
  detail::transform_geometry(s, [t](const auto& r) { return apply(r, t); });
}

/// One non-identity rotation or flip per scene, redrawn when it maps the
/// target onto itself.
inline ProbeSet make_aff(const Dataset& val, std::uint64_t seed) {
  ProbeSet p = detail::start_probe(val, ProbeKind::kAff);
  for (std::size_t i = 0; i < val.scenes.size(); ++i) {
    SceneInstance s = val.scenes[i];
    Rng rng(child_seed(seed, i, streams::kProbe));
    std::vector<Isometry> candidates;
    for (auto t : kAllIsometries)
      if (s.image.width() == s.image.height() || !swaps_axes(t)) candidates.push_back(t);
    rng.shuffle(candidates);
    const ShapeSignature original(s.target_mask);
    std::optional<Isometry> chosen;
    for (auto t : candidates) {
      if (alignment_iou(original, ShapeSignature(apply(s.target_mask, t))) < kSelfSymmetryThreshold) {
        chosen = t;
        break;
      }
    }
    if (!chosen)
      throw ProbeError("target in scene " + val.manifest.scenes[i].name +
                       " is symmetric under every rotation/flip; choose a different "
                       "target_shape_seed");
    apply_isometry(s, *chosen);
    s.record = {{"transform", to_string(*chosen)}};
    p.data.scenes.push_back(std::move(s));
  }
  detail::finish_probe(p);
  return p;
}

inline void apply_permutation(SceneInstance& s, std::span<const int> perm) {
  detail::transform_geometry(s, [perm](const auto& r) { return permute_patches(r, perm, kShuffleGrid); });
}

/// 4x4 patch shuffle with a uniformly drawn non-identity permutation.
inline ProbeSet make_shuf(const Dataset& val, std::uint64_t seed) {
  if (val.manifest.width % kShuffleGrid || val.manifest.height % kShuffleGrid)
    throw ProbeError("canvas " + std::to_string(val.manifest.width) + "x" +
                     std::to_string(val.manifest.height) + " is not divisible by 4");
  ProbeSet p = detail::start_probe(val, ProbeKind::kShuf);
  for (std::size_t i = 0; i < val.scenes.size(); ++i) {
    SceneInstance s = val.scenes[i];
    Rng rng(child_seed(seed, i, streams::kProbe));
    std::vector<int> perm(kShuffleGrid * kShuffleGrid);
    std::vector<int> identity(perm.size());
    std::iota(identity.begin(), identity.end(), 0);
    do {
      perm = identity;
      rng.shuffle(perm);
    } while (perm == identity);
    apply_permutation(s, perm);
    s.record = {{"permutation", perm}};
    p.data.scenes.push_back(std::move(s));
  }
  detail::finish_probe(p);
  return p;
}

/// Undoes an aff or shuf probe from its recorded metadata.
inline Dataset invert_probe(const ProbeSet& probe) {
  const auto kind = parse_probe_kind(probe.info.at("kind").get<std::string>());
  if (kind != ProbeKind::kAff && kind != ProbeKind::kShuf)
    throw ProbeError("only aff and shuf probes are invertible");
  Dataset out;
  out.manifest = manifest_from_json(probe.info.at("source_manifest"));
  for (const auto& src : probe.data.scenes) {
    SceneInstance s = src;
    if (kind == ProbeKind::kAff) {
      apply_isometry(s, inverse(parse_isometry(s.record.at("transform").get<std::string>())));
    } else {
      const auto perm = s.record.at("permutation").get<std::vector<int>>();
      apply_permutation(s, inverse_permutation(perm));
    }
    s.record = nlohmann::json::object();
    out.scenes.push_back(std::move(s));
  }
  return out;
}

/// Target pixels scaled by `fg_gain`, everything else by `bg_gain`.
inline ProbeSet brightness_variant(const Dataset& val, double fg_gain, double bg_gain) {
  if (!(fg_gain > 0) || !(bg_gain > 0)) throw ValidationError("brightness gains must be positive");
  ProbeSet p = detail::start_probe(val, ProbeKind::kBrightness);
  p.info["fg_gain"] = fg_gain;
  p.info["bg_gain"] = bg_gain;
  p.data.manifest.derivation["fg_gain"] = fg_gain;
  p.data.manifest.derivation["bg_gain"] = bg_gain;
  for (const auto& src : val.scenes) {
    SceneInstance s = src;
    for (int y = 0; y < s.image.height(); ++y)
      for (int x = 0; x < s.image.width(); ++x) {
        const double g = s.target_mask.at(x, y) ? fg_gain : bg_gain;
        auto* px = s.image.pixel(x, y);
        for (int c = 0; c < 3; ++c) px[c] = clamp_u8(px[c] * g);
      }
    s.record = {{"fg_gain", fg_gain}, {"bg_gain", bg_gain}};
    p.data.scenes.push_back(std::move(s));
  }
  detail::finish_probe(p);
  return p;
}

/// Ten gains evenly spaced over [0.2, 2.0].
inline std::vector<double> default_brightness_gains() {
  std::vector<double> g;
  for (int i = 1; i <= 10; ++i) g.push_back(0.2 * i);
  return g;
}

/// Visits every (fg, bg) combination; 10 x 10 gains give 100 datasets. The
/// variants are produced one at a time to bound memory.
inline void brightness_grid(const Dataset& val, const std::vector<double>& fg_gains,
                            const std::vector<double>& bg_gains,
                            const std::function<void(double, double, ProbeSet&)>& visit) {
  for (double fg : fg_gains)
    for (double bg : bg_gains) {
      ProbeSet p = brightness_variant(val, fg, bg);
      visit(fg, bg, p);
    }
}

/// Deforms the target of scene `s` with `field` scaled by `gain`, keeping it
/// off other objects, and repaints the affected pixels.
inline SceneInstance deform_target(const SceneInstance& s, const DisplacementField& field,
                                   double gain, const TextureSet& textures, Rng& rng) {
  SceneInstance out = s;
  LabelMask others(s.image.width(), s.image.height());
  for (const auto& o : s.objects)
    if (!o.is_target) others = mask_or(others, o.mask);
  LabelMask deformed(s.image.width(), s.image.height());
  for (auto& o : out.objects) {
    if (!o.is_target) continue;
    // Warp the whole object, then give each pixel to the part with the
    // largest coverage at its source position.
    const LabelMask merged = mask_minus(warp_mask(o.mask, field, gain), others);
    std::vector<LabelMask> parts(o.parts.size(), LabelMask(s.image.width(), s.image.height()));
    for (int y = 0; y < merged.height(); ++y)
      for (int x = 0; x < merged.width(); ++x) {
        if (!merged.at(x, y)) continue;
        const double sx = x + gain * field.at_x(x, y), sy = y + gain * field.at_y(x, y);
        std::size_t best = 0;
        double best_cov = -1;
        for (std::size_t k = 0; k < o.parts.size(); ++k) {
          const double c = mask_coverage(o.parts[k].mask, sx, sy);
          if (c > best_cov) best = k, best_cov = c;
        }
        parts[best].at(x, y) = 1;
      }
    for (std::size_t k = 0; k < o.parts.size(); ++k) o.parts[k].mask = std::move(parts[k]);
    std::erase_if(o.parts, [](const ObjectPart& p) { return empty(p.mask); });
    o.mask = merged;
    deformed = mask_or(deformed, merged);
  }
  fill_region(out.image, mask_minus(s.target_mask, deformed), textures.get(s.background_texture), rng);
  for (const auto& o : out.objects)
    if (o.is_target)
      for (const auto& p : o.parts) fill_region(out.image, p.mask, textures.get(p.texture), rng);
  out.target_mask = deformed;
  return out;
}

/// D_val^d for every requested degree. Each scene uses one displacement
/// field across all degrees (scaled by degree), redrawn while the strongest
/// requested degree splits the target into more than three pieces.
inline std::vector<ProbeSet> elastic_series(const Dataset& val, const std::vector<int>& degrees,
                                            const TextureSet& textures, std::uint64_t seed) {
  for (int d : degrees)
    if (d < 0 || d > kMaxElasticDegree) throw ValidationError("elastic degree must lie in [0, 10]");
  const int max_degree = degrees.empty() ? 0 : *std::max_element(degrees.begin(), degrees.end());
  std::vector<ProbeSet> out;
  for (int d : degrees) {
    ProbeSet p = detail::start_probe(val, ProbeKind::kElastic);
    p.info["degree"] = d;
    p.data.manifest.derivation["degree"] = d;
    out.push_back(std::move(p));
  }
  for (std::size_t i = 0; i < val.scenes.size(); ++i) {
    const auto& s = val.scenes[i];
    if (s.objects.empty())
      throw ProbeError("scene " + val.manifest.scenes[i].name + " has no instance metadata");
    DisplacementField field;
    std::uint64_t field_seed = 0;
    bool ok = max_degree == 0;
    for (int attempt = 0; attempt < kElasticResampleBudget && !ok; ++attempt) {
      field_seed = child_seed(seed, i, streams::kProbe + static_cast<std::uint64_t>(attempt));
      Rng frng(field_seed);
      field = make_displacement_field(s.image.width(), s.image.height(), 1.0, frng);
      Rng scratch(field_seed);
      const auto strongest = deform_target(s, field, max_degree * kElasticAlphaUnit, textures, scratch);
      ok = connected_components(strongest.target_mask) <= kMaxElasticComponents;
    }
    if (!ok)
      throw ProbeError("elastic deformation keeps fragmenting the target in scene " +
                       val.manifest.scenes[i].name);
    for (std::size_t k = 0; k < degrees.size(); ++k) {
      const int d = degrees[k];
      SceneInstance deformed = s;
      if (d > 0) {
        Rng paint(child_seed(field_seed, static_cast<std::uint64_t>(d)));
        deformed = deform_target(s, field, d * kElasticAlphaUnit, textures, paint);
      }
      if (d > 0) deformed.record = {{"degree", d}, {"field_seed", field_seed}};
      out[k].data.scenes.push_back(std::move(deformed));
    }
  }
  for (auto& p : out) detail::finish_probe(p);
  return out;
}

// ---------------------------------------------------------------------------
// Persistence: dataset layout plus probe.json.

inline void write_probe(const ProbeSet& p, const std::filesystem::path& out, bool force = false) {
  write_dataset(p.data, out, force);
  write_json(out / "probe.json", p.info);
}

inline ProbeSet read_probe(const std::filesystem::path& dir) {
  ProbeSet p;
  p.data = read_dataset(dir);
  const auto path = dir / "probe.json";
  if (!std::filesystem::exists(path)) throw IoError("no probe.json in '" + dir.string() + "'");
  p.info = read_json(path);
  return p;
}

}  // namespace shapeprobe
