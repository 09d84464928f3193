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
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "shapeprobe/alignment.hpp"
#include "shapeprobe/error.hpp"
#include "shapeprobe/geometry.hpp"
#include "shapeprobe/hashing.hpp"
#include "shapeprobe/image.hpp"
#include "shapeprobe/png_io.hpp"
#include "shapeprobe/random.hpp"
#include "shapeprobe/rle.hpp"
#include "shapeprobe/texture.hpp"

namespace shapeprobe {

inline constexpr int kFormatVersion = 1;

// Stream tags for child seeds.
namespace streams {
inline constexpr std::uint64_t kScene = 0x5ce0e;
inline constexpr std::uint64_t kPartition = 0x9a27;
inline constexpr std::uint64_t kTemplate = 0x7e3f;
inline constexpr std::uint64_t kLayout = 0x1a70;
inline constexpr std::uint64_t kProbe = 0x960be;
}  // namespace streams

/// Which discriminative features a generated dataset exposes.
struct FeatureConfig {
  bool complex_objects = false;
  bool texture_feature = false;
  bool singular = false;
  bool semi_singular = false;
  bool structure_feature = false;
  std::uint64_t target_shape_seed = 1;
  int sub_object_count = 3;
  int width = 256;
  int height = 256;
  int min_object_size = 100;
  int max_object_size = 150;
  int target_texture_count = 5;
  PolygonSampler sampler{5, 12, 0.9, 64};
  /// Distractor shapes aligning with the target at or above this are redrawn.
  double distractor_max_alignment = 0.75;
  /// Target templates whose rotations/reflections align at or above this are
  /// redrawn, so that isometries change the target's shape.
  double template_max_self_alignment = 0.75;

  bool shape_only() const {
    return !texture_feature && !singular && !semi_singular && !structure_feature;
  }

  void validate() const {
    if (singular && semi_singular)
      throw ConfigError("singular and semi_singular cannot appear simultaneously");
    if (semi_singular && !complex_objects)
      throw ConfigError("semi_singular requires complex_objects");
    if (structure_feature && !complex_objects)
      throw ConfigError("structure_feature requires complex_objects");
    if (width < 16 || height < 16) throw ConfigError("canvas must be at least 16x16");
    if (min_object_size < 8 || min_object_size > max_object_size)
      throw ConfigError("object size range is invalid");
    if (max_object_size > std::min(width, height))
      throw ConfigError("objects larger than the canvas");
    if (complex_objects && (sub_object_count < 1 || sub_object_count > 8))
      throw ConfigError("sub_object_count must lie in [1, 8]");
    if (target_texture_count < 1) throw ConfigError("target_texture_count must be >= 1");
    if (sampler.min_vertices < 3 || sampler.max_vertices > 32 ||
        sampler.min_vertices > sampler.max_vertices)
      throw ConfigError("vertex range must lie within [3, 32]");
    if (sampler.irregularity < 0 || sampler.irregularity > 1)
      throw ConfigError("irregularity must lie in [0, 1]");
  }
};

inline nlohmann::json to_json(const FeatureConfig& c) {
  return {
      {"complex_objects", c.complex_objects},
      {"texture_feature", c.texture_feature},
      {"singular", c.singular},
      {"semi_singular", c.semi_singular},
      {"structure_feature", c.structure_feature},
      {"target_shape_seed", c.target_shape_seed},
      {"sub_object_count", c.sub_object_count},
      {"canvas", {c.width, c.height}},
      {"object_size", {c.min_object_size, c.max_object_size}},
      {"target_texture_count", c.target_texture_count},
      {"vertices", {c.sampler.min_vertices, c.sampler.max_vertices}},
      {"irregularity", c.sampler.irregularity},
      {"distractor_max_alignment", c.distractor_max_alignment},
      {"template_max_self_alignment", c.template_max_self_alignment},
  };
}

/// Missing keys keep their defaults; unknown keys are rejected.
inline FeatureConfig feature_config_from_json(const nlohmann::json& j) {
  static const std::set<std::string> kKeys = {
      "complex_objects", "texture_feature", "singular", "semi_singular",
      "structure_feature", "target_shape_seed", "sub_object_count", "canvas",
      "object_size", "target_texture_count", "vertices", "irregularity",
      "distractor_max_alignment", "template_max_self_alignment"};
  if (!j.is_object()) throw ConfigError("feature config must be a JSON object");
  for (const auto& [k, v] : j.items())
    if (!kKeys.count(k)) throw ConfigError("unknown feature config key '" + k + "'");
  FeatureConfig c;
  try {
    c.complex_objects = j.value("complex_objects", c.complex_objects);
    c.texture_feature = j.value("texture_feature", c.texture_feature);
    c.singular = j.value("singular", c.singular);
    c.semi_singular = j.value("semi_singular", c.semi_singular);
    c.structure_feature = j.value("structure_feature", c.structure_feature);
    c.target_shape_seed = j.value("target_shape_seed", c.target_shape_seed);
    c.sub_object_count = j.value("sub_object_count", c.sub_object_count);
    if (j.contains("canvas")) {
      c.width = j["canvas"].at(0).get<int>();
      c.height = j["canvas"].at(1).get<int>();
    }
    if (j.contains("object_size")) {
      c.min_object_size = j["object_size"].at(0).get<int>();
      c.max_object_size = j["object_size"].at(1).get<int>();
    }
    c.target_texture_count = j.value("target_texture_count", c.target_texture_count);
    if (j.contains("vertices")) {
      c.sampler.min_vertices = j["vertices"].at(0).get<int>();
      c.sampler.max_vertices = j["vertices"].at(1).get<int>();
    }
    c.sampler.irregularity = j.value("irregularity", c.sampler.irregularity);
    c.distractor_max_alignment = j.value("distractor_max_alignment", c.distractor_max_alignment);
    c.template_max_self_alignment =
        j.value("template_max_self_alignment", c.template_max_self_alignment);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("feature config: ") + e.what());
  }
  return c;
}

// ---------------------------------------------------------------------------
// Scene model.

/// A single-texture region of an object.
struct ObjectPart {
  LabelMask mask;
  std::string texture;
};

struct SceneObject {
  LabelMask mask;
  bool is_target = false;
  bool complex = false;
  /// Added by an augmentation and deliberately left unlabeled.
  bool inserted = false;
  std::vector<ObjectPart> parts;

  /// Texture covering the most pixels of the object.
  const std::string& dominant_texture() const {
    std::size_t best = 0, best_n = 0;
    for (std::size_t i = 0; i < parts.size(); ++i) {
      const auto n = count(parts[i].mask);
      if (n > best_n) {
        best = i;
        best_n = n;
      }
    }
    static const std::string kNone;
    return parts.empty() ? kNone : parts[best].texture;
  }

  std::vector<std::string> texture_ids() const {
    std::vector<std::string> out;
    for (const auto& p : parts) out.push_back(p.texture);
    return out;
  }
};

struct SceneInstance {
  RasterImage image;
  LabelMask target_mask;
  std::string background_texture;
  std::vector<SceneObject> objects;
  std::uint64_t seed = 0;
  /// Per-scene probe/augmentation record (transform tag, permutation, ...).
  nlohmann::json record = nlohmann::json::object();

  LabelMask union_of_targets() const {
    LabelMask m(image.width(), image.height());
    for (const auto& o : objects)
      if (o.is_target) m = mask_or(m, o.mask);
    return m;
  }

  LabelMask occupied() const {
    LabelMask m(image.width(), image.height());
    for (const auto& o : objects) m = mask_or(m, o.mask);
    return m;
  }
};

/// Sub-object arrangement shared by every target when structure is a
/// discriminative feature.
struct StructureLayout {
  Polygon sub_shape;
  /// Bounding-box minimum of each sub-object, in footprint-relative units.
  std::vector<Point> offsets;
  /// Sub-object size as a fraction of the footprint size.
  double sub_scale = 0.45;
};

struct SceneEntry {
  std::string name;
  std::uint64_t seed = 0;
};

struct DatasetManifest {
  int format_version = kFormatVersion;
  std::uint64_t master_seed = 0;
  /// "train" or "val"; both splits of one master seed share the target
  /// shape, layout and texture partition but draw disjoint scene seeds.
  std::string split = "train";
  FeatureConfig config;
  std::string seen_pool;
  PoolPartition partition;
  int width = 0;
  int height = 0;
  std::vector<SceneEntry> scenes;
  /// {"kind": "generated"} or {"kind": "resized", "from": [w, h]} or
  /// {"kind": "probe", ...}.
  nlohmann::json derivation = {{"kind", "generated"}};
};

inline nlohmann::json to_json(const PoolPartition& p) {
  return {{"target", p.target}, {"non_target", p.non_target}, {"background", p.background}};
}

inline nlohmann::json to_json(const DatasetManifest& m) {
  nlohmann::json scenes = nlohmann::json::array();
  for (const auto& s : m.scenes) scenes.push_back({{"name", s.name}, {"seed", s.seed}});
  return {{"format_version", m.format_version},
          {"master_seed", m.master_seed},
          {"split", m.split},
          {"config", to_json(m.config)},
          {"seen_pool", m.seen_pool},
          {"partition", to_json(m.partition)},
          {"canvas", {m.width, m.height}},
          {"scenes", scenes},
          {"derivation", m.derivation}};
}

inline DatasetManifest manifest_from_json(const nlohmann::json& j) {
  DatasetManifest m;
  try {
    m.format_version = j.at("format_version").get<int>();
    if (m.format_version != kFormatVersion)
      throw ConfigError("unsupported manifest format_version " +
                        std::to_string(m.format_version));
    m.master_seed = j.at("master_seed").get<std::uint64_t>();
    m.split = j.value("split", std::string("train"));
    m.config = feature_config_from_json(j.at("config"));
    m.seen_pool = j.at("seen_pool").get<std::string>();
    const auto& p = j.at("partition");
    m.partition = {p.at("target").get<std::vector<std::string>>(),
                   p.at("non_target").get<std::vector<std::string>>(),
                   p.at("background").get<std::vector<std::string>>()};
    m.width = j.at("canvas").at(0).get<int>();
    m.height = j.at("canvas").at(1).get<int>();
    for (const auto& s : j.at("scenes"))
      m.scenes.push_back({s.at("name").get<std::string>(), s.at("seed").get<std::uint64_t>()});
    m.derivation = j.value("derivation", nlohmann::json{{"kind", "generated"}});
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed manifest: ") + e.what());
  }
  return m;
}

inline std::string manifest_hash(const DatasetManifest& m) { return json_hash(to_json(m)); }

struct Dataset {
  DatasetManifest manifest;
  std::vector<SceneInstance> scenes;
};

inline std::string scene_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%05zu", index);
  return buf;
}

// ---------------------------------------------------------------------------
// Texture lookup across several pools.

class TextureSet {
 public:
  TextureSet() = default;
  explicit TextureSet(std::vector<const TexturePool*> pools) : pools_(std::move(pools)) {}
  void add(const TexturePool& p) { pools_.push_back(&p); }

  const Texture& get(const std::string& id) const {
    for (const auto* p : pools_)
      if (const auto* t = p->find(id)) return *t;
    throw ValidationError("texture id '" + id + "' is not in any loaded pool");
  }

 private:
  std::vector<const TexturePool*> pools_;
};

/// Paints the background then every object part, in a fixed order.
inline void render_scene(SceneInstance& scene, const TextureSet& textures, Rng& rng) {
  const int w = scene.image.width(), h = scene.image.height();
  fill_region(scene.image, LabelMask(w, h, 1), textures.get(scene.background_texture), rng);
  for (const auto& o : scene.objects)
    for (const auto& p : o.parts) fill_region(scene.image, p.mask, textures.get(p.texture), rng);
}

/// Draws `n` ids from `ids`, without replacement while the pool allows it.
inline std::vector<std::string> draw_textures(const std::vector<std::string>& ids, std::size_t n,
                                              Rng& rng) {
  if (ids.empty()) throw ValidationError("cannot draw textures from an empty set");
  std::vector<std::string> out;
  std::vector<std::string> bag;
  while (out.size() < n) {
    if (bag.empty()) {
      bag = ids;
      rng.shuffle(bag);
    }
    out.push_back(bag.back());
    bag.pop_back();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Object geometry.

inline constexpr int kObjectMargin = 2;
inline constexpr int kSceneAttempts = 60;
inline constexpr int kPlacementAttempts = 40;

/// Scales `shape` to `size_px` and translates it uniformly at random inside
/// the canvas.
inline Polygon place_polygon(const Polygon& shape, double size_px, int w, int h, Rng& rng) {
  const Polygon at_origin = fit_polygon_to_box(shape, size_px, {0, 0}, 1 << 20, 1 << 20);
  const BoxD b = bounding_box(at_origin);
  const double px = rng.uniform(0.0, std::max(0.0, w - b.width()));
  const double py = rng.uniform(0.0, std::max(0.0, h - b.height()));
  return fit_polygon_to_box(shape, size_px, {px, py}, w, h);
}

/// Splits `outer` into parts: one region per sub-polygon (clipped to the
/// outer mask, earlier subs win overlaps) plus the remaining base region.
inline std::vector<LabelMask> split_complex(const LabelMask& outer,
                                            const std::vector<Polygon>& subs) {
  std::vector<LabelMask> parts;
  LabelMask used(outer.width(), outer.height());
  for (const auto& sub : subs) {
    auto m = mask_minus(mask_and(rasterize(sub, outer.width(), outer.height()), outer), used);
    used = mask_or(used, m);
    parts.push_back(std::move(m));
  }
  parts.insert(parts.begin(), mask_minus(outer, used));
  return parts;
}

/// Sub-polygons of a layout mapped into `footprint`.
inline std::vector<Polygon> layout_polygons(const StructureLayout& layout, const BoxD& footprint) {
  const double size = std::max(footprint.width(), footprint.height());
  const double sub_size = layout.sub_scale * size;
  std::vector<Polygon> subs;
  for (const auto& off : layout.offsets) {
    const Point pos{footprint.x0 + off.x * footprint.width(),
                    footprint.y0 + off.y * footprint.height()};
    // Sub-polygons may overhang the canvas; they are clipped by the outer mask.
    subs.push_back(fit_polygon_to_box(layout.sub_shape, sub_size, pos, 1 << 20, 1 << 20));
  }
  return subs;
}

inline StructureLayout random_layout(int sub_count, const PolygonSampler& sampler, Rng& rng) {
  StructureLayout l;
  l.sub_shape = sample_polygon(rng, sampler);
  for (int i = 0; i < sub_count; ++i)
    l.offsets.push_back({rng.uniform(0.0, 1.0 - l.sub_scale), rng.uniform(0.0, 1.0 - l.sub_scale)});
  return l;
}

/// Every part must cover at least this fraction of the object.
inline constexpr double kMinPartFraction = 0.03;

inline bool parts_valid(const std::vector<LabelMask>& parts, std::size_t total) {
  if (parts.size() < 2) return false;
  for (const auto& p : parts)
    if (static_cast<double>(count(p)) < kMinPartFraction * total) return false;
  return true;
}

/// Complex-object parts for `outer`. A fixed layout is used as-is; otherwise
/// random layouts are drawn until every part is visible.
inline std::vector<LabelMask> complex_parts(const LabelMask& outer, const BoxD& footprint,
                                            const FeatureConfig& cfg,
                                            const StructureLayout* fixed, Rng& rng) {
  const auto total = count(outer);
  if (fixed) return split_complex(outer, layout_polygons(*fixed, footprint));
  for (int attempt = 0; attempt < kPlacementAttempts; ++attempt) {
    const auto layout = random_layout(cfg.sub_object_count, cfg.sampler, rng);
    auto parts =
        split_complex(outer, layout_polygons(layout, footprint));
    std::erase_if(parts, [](const LabelMask& p) { return empty(p); });
    if (parts_valid(parts, total)) return parts;
  }
  throw GenerationError("no visible random structure found (seed " +
                        std::to_string(rng.seed()) + ")");
}

/// Dataset-wide state derived from the config and master seed.
struct GenerationContext {
  FeatureConfig config;
  const TexturePool* seen = nullptr;
  PoolPartition partition;
  Polygon target_template;
  ShapeSignature template_signature;
  StructureLayout layout;
};

/// Largest alignment IOU between a mask and its five isometric images.
inline double max_self_alignment(const LabelMask& m) {
  const ShapeSignature base(m);
  double best = 0;
  for (auto t : kAllIsometries) best = std::max(best, alignment_iou(base, ShapeSignature(apply(m, t))));
  return best;
}

/// Canonical rasterisation used for template-level shape comparisons.
inline LabelMask reference_mask(const Polygon& shape) {
  constexpr int kRef = 160;
  return rasterize(fit_polygon_to_box(shape, 128, {16, 16}, kRef, kRef), kRef, kRef);
}

inline Polygon sample_target_template(const FeatureConfig& cfg) {
  Rng rng(child_seed(cfg.target_shape_seed, 0, streams::kTemplate));
  constexpr int kBudget = 200;
  for (int i = 0; i < kBudget; ++i) {
    Polygon p = sample_polygon(rng, cfg.sampler);
    if (max_self_alignment(reference_mask(p)) < cfg.template_max_self_alignment) return p;
  }
  throw GenerationError("no asymmetric target template within budget (target_shape_seed " +
                        std::to_string(cfg.target_shape_seed) + ")");
}

inline GenerationContext make_context(const FeatureConfig& cfg, std::uint64_t master_seed,
                                      const TexturePool& seen) {
  cfg.validate();
  GenerationContext ctx;
  ctx.config = cfg;
  ctx.seen = &seen;
  Rng part_rng(child_seed(master_seed, 0, streams::kPartition));
  if (cfg.texture_feature) {
    ctx.partition = partition_pool(seen, part_rng, static_cast<std::size_t>(cfg.target_texture_count));
  } else if (seen.size() >= static_cast<std::size_t>(cfg.target_texture_count) + 2) {
    // Recorded for reference; unused when texture is not a feature.
    ctx.partition = partition_pool(seen, part_rng, static_cast<std::size_t>(cfg.target_texture_count));
  }
  ctx.target_template = sample_target_template(cfg);
  ctx.template_signature = ShapeSignature(reference_mask(ctx.target_template));
  if (cfg.complex_objects) {
    Rng lrng(child_seed(cfg.target_shape_seed, 0, streams::kLayout));
    const LabelMask ref = reference_mask(ctx.target_template);
    const BoxD fp = bounding_box(fit_polygon_to_box(ctx.target_template, 128, {16, 16}, 160, 160));
    bool ok = false;
    for (int i = 0; i < 200 && !ok; ++i) {
      ctx.layout = random_layout(cfg.sub_object_count, cfg.sampler, lrng);
      auto parts = split_complex(ref, layout_polygons(ctx.layout, fp));
      ok = parts_valid(parts, count(ref));
    }
    if (!ok) throw GenerationError("no valid structure layout for the target template");
  }
  return ctx;
}

/// A random-shape object of the configured size class placed away from
/// `occupied`, or nothing when the placement budget runs out.
struct PlacedShape {
  Polygon polygon;
  LabelMask mask;
};

inline std::optional<PlacedShape> place_random_shape(const FeatureConfig& cfg,
                                                     const ShapeSignature& avoid_shape,
                                                     const LabelMask& occupied, Rng& rng) {
  const LabelMask blocked = dilate(occupied, kObjectMargin);
  Polygon shape;
  bool found = false;
  for (int i = 0; i < kPlacementAttempts && !found; ++i) {
    shape = sample_polygon(rng, cfg.sampler);
    found = avoid_shape.empty() ||
            alignment_iou(avoid_shape, ShapeSignature(reference_mask(shape))) <
                cfg.distractor_max_alignment;
  }
  if (!found) return std::nullopt;
  for (int i = 0; i < kPlacementAttempts; ++i) {
    const double size = rng.uniform_int(cfg.min_object_size, cfg.max_object_size);
    Polygon placed = place_polygon(shape, size, cfg.width, cfg.height, rng);
    LabelMask m = rasterize(placed, cfg.width, cfg.height);
    if (!intersects(m, blocked)) return PlacedShape{std::move(placed), std::move(m)};
  }
  return std::nullopt;
}

/// Builds the object (parts without textures) for a placed outer shape.
inline SceneObject make_object(const PlacedShape& shape, bool is_target, bool complex,
                               const FeatureConfig& cfg, const StructureLayout* fixed, Rng& rng) {
  SceneObject o;
  o.mask = shape.mask;
  o.is_target = is_target;
  o.complex = complex;
  if (complex) {
    for (auto& m : complex_parts(shape.mask, bounding_box(shape.polygon), cfg, fixed, rng))
      if (!empty(m)) o.parts.push_back({std::move(m), {}});
  } else {
    o.parts.push_back({shape.mask, {}});
  }
  return o;
}

/// Composes one scene following the feature flags.
inline SceneInstance generate_scene(const GenerationContext& ctx, Rng& rng) {
  const FeatureConfig& cfg = ctx.config;
  const int w = cfg.width, h = cfg.height;
  for (int attempt = 0; attempt < kSceneAttempts; ++attempt) {
    SceneInstance scene;
    scene.seed = rng.seed();
    scene.image = RasterImage(w, h);

    const double size = rng.uniform_int(cfg.min_object_size, cfg.max_object_size);
    PlacedShape target;
    target.polygon = place_polygon(ctx.target_template, size, w, h, rng);
    target.mask = rasterize(target.polygon, w, h);
    const bool target_complex = cfg.complex_objects;
    scene.objects.push_back(make_object(target, true, target_complex, cfg,
                                        cfg.structure_feature ? &ctx.layout : nullptr, rng));

    if (!cfg.singular) {
      auto distractor = place_random_shape(cfg, ctx.template_signature, target.mask, rng);
      if (!distractor) continue;
      const bool distractor_complex = cfg.complex_objects && !cfg.semi_singular;
      scene.objects.push_back(make_object(*distractor, false, distractor_complex, cfg, nullptr, rng));
    }

    // Texture assignment.
    const auto& obj = scene.objects;
    if (cfg.texture_feature) {
      auto tgt = draw_textures(ctx.partition.target, obj[0].parts.size(), rng);
      for (std::size_t i = 0; i < tgt.size(); ++i) scene.objects[0].parts[i].texture = tgt[i];
      for (std::size_t k = 1; k < obj.size(); ++k) {
        auto ids = draw_textures(ctx.partition.non_target, obj[k].parts.size(), rng);
        for (std::size_t i = 0; i < ids.size(); ++i) scene.objects[k].parts[i].texture = ids[i];
      }
      scene.background_texture = draw_textures(ctx.partition.background, 1, rng)[0];
    } else {
      std::size_t slots = 1;
      for (const auto& o : obj) slots += o.parts.size();
      auto ids = draw_textures(ctx.seen->ids(), slots, rng);
      std::size_t next = 0;
      scene.background_texture = ids[next++];
      for (auto& o : scene.objects)
        for (auto& p : o.parts) p.texture = ids[next++];
    }

    scene.target_mask = scene.union_of_targets();
    TextureSet textures({ctx.seen});
    render_scene(scene, textures, rng);
    return scene;
  }
  throw GenerationError("could not place non-overlapping objects (scene seed " +
                        std::to_string(rng.seed()) + ")");
}

inline std::uint64_t split_stream(const std::string& split) {
  if (split == "train") return streams::kScene;
  if (split == "val") return streams::kScene + 1;
  throw ConfigError("unknown split '" + split + "' (expected train or val)");
}

inline Dataset generate_scenes(const FeatureConfig& cfg, std::size_t n, std::uint64_t master_seed,
                               const TexturePool& seen, const std::string& split = "train") {
  if (n < 1) throw ValidationError("dataset size must be at least 1");
  const auto stream = split_stream(split);
  const auto ctx = make_context(cfg, master_seed, seen);
  Dataset ds;
  ds.manifest.master_seed = master_seed;
  ds.manifest.split = split;
  ds.manifest.config = cfg;
  ds.manifest.seen_pool = seen.origin;
  ds.manifest.partition = ctx.partition;
  ds.manifest.width = cfg.width;
  ds.manifest.height = cfg.height;
  ds.scenes.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto seed = child_seed(master_seed, i, stream);
    Rng rng(seed);
    ds.scenes.push_back(generate_scene(ctx, rng));
    ds.manifest.scenes.push_back({scene_name(i), seed});
  }
  return ds;
}

// ---------------------------------------------------------------------------
// On-disk layout: images/NNNNN.png, masks/NNNNN.png, instances/NNNNN.json,
// manifest.json.

inline nlohmann::json instance_json(const SceneInstance& s) {
  nlohmann::json objects = nlohmann::json::array();
  for (const auto& o : s.objects) {
    nlohmann::json parts = nlohmann::json::array();
    for (const auto& p : o.parts) parts.push_back({{"texture", p.texture}, {"mask", rle_encode(p.mask)}});
    objects.push_back({{"is_target", o.is_target},
                       {"complex", o.complex},
                       {"inserted", o.inserted},
                       {"textures", o.texture_ids()},
                       {"mask", rle_encode(o.mask)},
                       {"parts", parts}});
  }
  nlohmann::json j = {{"seed", s.seed},
                      {"background_texture", s.background_texture},
                      {"objects", objects}};
  if (!s.record.empty()) j["record"] = s.record;
  return j;
}

inline void instance_from_json(const nlohmann::json& j, SceneInstance& s) {
  try {
    s.seed = j.at("seed").get<std::uint64_t>();
    s.background_texture = j.at("background_texture").get<std::string>();
    s.objects.clear();
    for (const auto& oj : j.at("objects")) {
      SceneObject o;
      o.is_target = oj.at("is_target").get<bool>();
      o.complex = oj.value("complex", false);
      o.inserted = oj.value("inserted", false);
      o.mask = rle_decode(oj.at("mask"));
      for (const auto& pj : oj.at("parts"))
        o.parts.push_back({rle_decode(pj.at("mask")), pj.at("texture").get<std::string>()});
      s.objects.push_back(std::move(o));
    }
    s.record = j.value("record", nlohmann::json::object());
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed instance metadata: ") + e.what());
  }
}

/// Refuses a non-empty output directory unless `force`.
inline void prepare_output_dir(const std::filesystem::path& out, bool force) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (fs::exists(out)) {
    if (!fs::is_directory(out)) throw IoError("'" + out.string() + "' exists and is not a directory");
    if (!fs::is_empty(out)) {
      if (!force)
        throw IoError("output directory '" + out.string() + "' is not empty (use --force)");
      fs::remove_all(out, ec);
      if (ec) throw IoError("cannot clear '" + out.string() + "': " + ec.message());
    }
  }
  fs::create_directories(out, ec);
  if (ec) throw IoError("cannot create '" + out.string() + "': " + ec.message());
}

inline void write_dataset(const Dataset& ds, const std::filesystem::path& out, bool force = false) {
  namespace fs = std::filesystem;
  if (ds.scenes.size() != ds.manifest.scenes.size())
    throw ValidationError("manifest lists " + std::to_string(ds.manifest.scenes.size()) +
                          " scenes but dataset holds " + std::to_string(ds.scenes.size()));
  prepare_output_dir(out, force);
  for (const char* sub : {"images", "masks", "instances"}) {
    std::error_code ec;
    fs::create_directories(out / sub, ec);
    if (ec) throw IoError("cannot create '" + (out / sub).string() + "': " + ec.message());
  }
  for (std::size_t i = 0; i < ds.scenes.size(); ++i) {
    const auto& name = ds.manifest.scenes[i].name;
    write_png(out / "images" / (name + ".png"), ds.scenes[i].image);
    write_png(out / "masks" / (name + ".png"), ds.scenes[i].target_mask);
    write_json(out / "instances" / (name + ".json"), instance_json(ds.scenes[i]));
  }
  write_json(out / "manifest.json", to_json(ds.manifest));
}

inline DatasetManifest read_manifest(const std::filesystem::path& dir) {
  const auto path = dir / "manifest.json";
  if (!std::filesystem::exists(path)) throw IoError("no manifest.json in '" + dir.string() + "'");
  return manifest_from_json(read_json(path));
}

inline Dataset read_dataset(const std::filesystem::path& dir, bool require_instances = true) {
  namespace fs = std::filesystem;
  Dataset ds;
  ds.manifest = read_manifest(dir);
  for (const auto& e : ds.manifest.scenes) {
    SceneInstance s;
    s.image = read_png_rgb(dir / "images" / (e.name + ".png"));
    s.target_mask = read_png_mask(dir / "masks" / (e.name + ".png"));
    const auto inst = dir / "instances" / (e.name + ".json");
    if (fs::exists(inst)) {
      instance_from_json(read_json(inst), s);
    } else if (require_instances) {
      throw ProbeError("missing instance metadata '" + inst.string() + "'");
    } else {
      s.seed = e.seed;
    }
    ds.scenes.push_back(std::move(s));
  }
  return ds;
}

// ---------------------------------------------------------------------------
// Resizing (input-size sweep).

inline SceneInstance resize_scene(const SceneInstance& s, int w, int h) {
  SceneInstance out;
  out.seed = s.seed;
  out.background_texture = s.background_texture;
  out.record = s.record;
  out.image = resize_bilinear(s.image, w, h);
  out.target_mask = resize_nearest(s.target_mask, w, h);
  for (const auto& o : s.objects) {
    SceneObject r = o;
    r.mask = resize_nearest(o.mask, w, h);
    for (auto& p : r.parts) p.mask = resize_nearest(p.mask, w, h);
    out.objects.push_back(std::move(r));
  }
  return out;
}

inline Dataset resize_dataset(const Dataset& ds, int w, int h) {
  Dataset out;
  out.manifest = ds.manifest;
  out.manifest.derivation = {{"kind", "resized"}, {"from", {ds.manifest.width, ds.manifest.height}}};
  out.manifest.width = w;
  out.manifest.height = h;
  for (const auto& s : ds.scenes) out.scenes.push_back(resize_scene(s, w, h));
  return out;
}

inline constexpr int kSweepMin = 160;
inline constexpr int kSweepMax = 480;
inline constexpr int kSweepStep = 32;

inline std::vector<int> sweep_sizes() {
  std::vector<int> out;
  for (int s = kSweepMin; s <= kSweepMax; s += kSweepStep) out.push_back(s);
  return out;
}

/// Regenerates the dataset described by `m` in memory.
inline Dataset regenerate(const DatasetManifest& m) {
  const auto kind = m.derivation.value("kind", std::string("generated"));
  if (kind != "generated" && kind != "resized")
    throw ValidationError("only generated or resized datasets can be regenerated from a manifest");
  const TexturePool seen = resolve_pool(m.seen_pool);
  Dataset base = generate_scenes(m.config, m.scenes.size(), m.master_seed, seen, m.split);
  if (kind == "resized") return resize_dataset(base, m.width, m.height);
  return base;
}

inline DatasetManifest generate_dataset(const FeatureConfig& cfg, std::size_t n,
                                        std::uint64_t master_seed, const TexturePool& seen,
                                        const std::filesystem::path& out, bool force = false,
                                        const std::string& split = "train") {
  Dataset ds = generate_scenes(cfg, n, master_seed, seen, split);
  write_dataset(ds, out, force);
  return ds.manifest;
}

/// Eleven resized copies (160, 192, ..., 480 px) of one shape-only dataset,
/// written to out/size_<N>.
inline std::vector<DatasetManifest> generate_size_sweep(const FeatureConfig& cfg, std::size_t n,
                                                        std::uint64_t master_seed,
                                                        const TexturePool& seen,
                                                        const std::filesystem::path& out,
                                                        bool force = false,
                                                        const std::string& split = "train") {
  if (!cfg.shape_only() || cfg.complex_objects)
    throw ValidationError("the size sweep is defined for shape-only simple-object datasets");
  const Dataset base = generate_scenes(cfg, n, master_seed, seen, split);
  prepare_output_dir(out, force);
  std::vector<DatasetManifest> manifests;
  for (int s : sweep_sizes()) {
    Dataset r = resize_dataset(base, s, s);
    write_dataset(r, out / ("size_" + std::to_string(s)), force);
    manifests.push_back(r.manifest);
  }
  return manifests;
}

}  // namespace shapeprobe
