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
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <numbers>
#include <set>
#include <string>
#include <vector>

#include "shapeprobe/error.hpp"
#include "shapeprobe/image.hpp"
#include "shapeprobe/png_io.hpp"
#include "shapeprobe/random.hpp"

namespace shapeprobe {

inline constexpr int kMinSwatchSize = 32;
inline constexpr int kProceduralSwatchSize = 64;

struct Texture {
  std::string id;
  RasterImage swatch;
  std::string source_pool;
};

struct TexturePool {
  std::string name;
  /// "procedural:<seed>:<count>" or "atlas:<directory>".
  std::string origin;
  std::vector<Texture> textures;

  std::size_t size() const { return textures.size(); }

  const Texture* find(const std::string& id) const {
    for (const auto& t : textures)
      if (t.id == id) return &t;
    return nullptr;
  }

  std::vector<std::string> ids() const {
    std::vector<std::string> out;
    out.reserve(textures.size());
    for (const auto& t : textures) out.push_back(t.id);
    return out;
  }
};

/// Disjoint target / non-target / background id sets drawn from one pool.
struct PoolPartition {
  std::vector<std::string> target;
  std::vector<std::string> non_target;
  std::vector<std::string> background;
};

inline void validate_pool(const TexturePool& pool) {
  std::set<std::string> seen;
  for (const auto& t : pool.textures) {
    if (!seen.insert(t.id).second)
      throw ValidationError("duplicate texture id '" + t.id + "' in pool " + pool.name);
    if (t.swatch.width() < kMinSwatchSize || t.swatch.height() < kMinSwatchSize)
      throw ValidationError("texture '" + t.id + "' is smaller than 32x32");
  }
}

/// One texture per PNG file in `directory`, ordered by filename.
inline TexturePool load_pool(const std::filesystem::path& directory, std::string name = {}) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(directory))
    throw IoError("texture atlas '" + directory.string() + "' is not a directory");
  if (name.empty()) name = directory.filename().string();
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(directory))
    if (e.is_regular_file()) files.push_back(e.path());
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });
  if (files.empty())
    throw IoError("texture atlas '" + directory.string() + "' is empty");
  TexturePool pool;
  pool.name = name;
  pool.origin = "atlas:" + directory.string();
  for (const auto& f : files) {
    Texture t;
    t.id = name + "/" + f.stem().string();
    t.swatch = read_png_rgb(f);  // throws IoError naming the file
    t.source_pool = name;
    pool.textures.push_back(std::move(t));
  }
  validate_pool(pool);
  return pool;
}

namespace detail {

struct Rgb {
  double r, g, b;
};

inline Rgb random_color(Rng& rng) {
  return {rng.uniform(0, 255), rng.uniform(0, 255), rng.uniform(0, 255)};
}

inline Rgb mix(Rgb a, Rgb b, double t) {
  return {a.r + (b.r - a.r) * t, a.g + (b.g - a.g) * t, a.b + (b.b - a.b) * t};
}

inline constexpr int kPeriods[] = {4, 8, 16, 32};

/// Periodic value noise on a `period`-spaced lattice, tileable over `size`.
inline double value_noise(const std::vector<double>& lattice, int cells, double x, double y) {
  const int x0 = static_cast<int>(std::floor(x)), y0 = static_cast<int>(std::floor(y));
  const double tx = x - x0, ty = y - y0;
  const double sx = tx * tx * (3 - 2 * tx), sy = ty * ty * (3 - 2 * ty);
  auto at = [&](int i, int j) {
    i = ((i % cells) + cells) % cells;
    j = ((j % cells) + cells) % cells;
    return lattice[static_cast<std::size_t>(j) * cells + i];
  };
  const double a = at(x0, y0) + (at(x0 + 1, y0) - at(x0, y0)) * sx;
  const double b = at(x0, y0 + 1) + (at(x0 + 1, y0 + 1) - at(x0, y0 + 1)) * sx;
  return a + (b - a) * sy;
}

inline RasterImage procedural_swatch(Rng& rng) {
  constexpr int n = kProceduralSwatchSize;
  RasterImage img(n, n);
  const int family = static_cast<int>(rng.uniform_int(0, 3));
  const Rgb c0 = random_color(rng);
  const Rgb c1 = random_color(rng);
  const Rgb c2 = random_color(rng);
  const double grain = rng.uniform(2.0, 10.0);

  // Per-family parameters, all periodic over the swatch.
  const int fx = static_cast<int>(rng.uniform_int(0, 6));
  const int fy = static_cast<int>(rng.uniform_int(fx == 0 ? 1 : 0, 6));
  const double phase = rng.uniform(0, 2 * std::numbers::pi);
  const int period = kPeriods[rng.uniform_int(0, 3)];
  const int orientation = static_cast<int>(rng.uniform_int(0, 2));
  const int octaves = static_cast<int>(rng.uniform_int(1, 3));
  std::vector<std::vector<double>> lattices;
  for (int o = 0; o < octaves; ++o) {
    const int cells = std::min(n, (n / period) << o);
    std::vector<double> lat(static_cast<std::size_t>(cells) * cells);
    for (auto& v : lat) v = rng.uniform();
    lattices.push_back(std::move(lat));
  }

  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      Rgb c{};
      switch (family) {
        case 0: {  // sinusoidal grating
          const double t = 0.5 + 0.5 * std::sin(2 * std::numbers::pi * (fx * x + fy * y) / n + phase);
          c = mix(c0, c1, t);
          break;
        }
        case 1: {  // checkers
          const int cell = period / 2;
          const bool odd = ((x / cell) + (y / cell)) % 2;
          c = odd ? c1 : c0;
          break;
        }
        case 2: {  // multi-octave value noise
          double v = 0, norm = 0, amp = 1;
          for (int o = 0; o < octaves; ++o) {
            const int cells = static_cast<int>(std::lround(std::sqrt(lattices[o].size())));
            v += amp * value_noise(lattices[o], cells, x * cells / double(n), y * cells / double(n));
            norm += amp;
            amp *= 0.5;
          }
          v /= norm;
          c = v < 0.5 ? mix(c0, c1, v * 2) : mix(c1, c2, (v - 0.5) * 2);
          break;
        }
        default: {  // stripes
          const int coord = orientation == 0 ? x : orientation == 1 ? y : (x + y) % n;
          const int band = (coord % period) * 3 / period;
          c = band == 0 ? c0 : band == 1 ? c1 : c2;
          break;
        }
      }
      const double g = grain * rng.uniform(-1.0, 1.0);
      img.at(x, y, 0) = clamp_u8(c.r + g);
      img.at(x, y, 1) = clamp_u8(c.g + g);
      img.at(x, y, 2) = clamp_u8(c.b + g);
    }
  }
  return img;
}

}  // namespace detail

inline std::string procedural_pool_name(std::uint64_t seed, std::size_t count) {
  return "procedural:" + std::to_string(seed) + ":" + std::to_string(count);
}

/// Hermetic pool of `count` tileable 64x64 swatches (gratings, checkers,
/// value noise, stripes); texture i depends only on (seed, i).
inline TexturePool procedural_pool(std::uint64_t seed, std::size_t count) {
  if (count < 1) throw ValidationError("procedural pool needs at least one texture");
  TexturePool pool;
  pool.name = procedural_pool_name(seed, count);
  pool.origin = pool.name;
  pool.textures.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Rng rng(child_seed(seed, i, 0x7e87));
    char idx[32];
    std::snprintf(idx, sizeof(idx), "%03zu", i);
    pool.textures.push_back({pool.name + "/" + idx, detail::procedural_swatch(rng), pool.name});
  }
  return pool;
}

/// Resolves "procedural:<seed>:<count>", "atlas:<dir>" or a bare directory.
/// Relative atlas paths that do not exist are retried under
/// $SHAPEPROBE_TEXTURE_DIR.
inline TexturePool resolve_pool(const std::string& source) {
  namespace fs = std::filesystem;
  if (source.rfind("procedural:", 0) == 0) {
    const auto rest = source.substr(11);
    const auto colon = rest.find(':');
    try {
      if (colon == std::string::npos) throw std::invalid_argument("missing count");
      std::size_t used = 0;
      const auto seed = std::stoull(rest.substr(0, colon), &used);
      if (used != colon) throw std::invalid_argument("seed");
      const auto count_str = rest.substr(colon + 1);
      const auto count = std::stoull(count_str, &used);
      if (used != count_str.size()) throw std::invalid_argument("count");
      return procedural_pool(seed, count);
    } catch (const std::logic_error&) {
      throw ConfigError("bad procedural pool id '" + source +
                        "' (expected procedural:<seed>:<count>)");
    }
  }
  fs::path dir = source.rfind("atlas:", 0) == 0 ? fs::path(source.substr(6)) : fs::path(source);
  if (dir.is_relative() && !fs::exists(dir)) {
    if (const char* root = std::getenv("SHAPEPROBE_TEXTURE_DIR")) dir = fs::path(root) / dir;
  }
  return load_pool(dir);
}

inline PoolPartition partition_pool(const TexturePool& pool, Rng& rng, std::size_t target_count) {
  if (pool.size() < target_count + 2) {
    throw ValidationError("partition error: pool " + pool.name + " has " +
                          std::to_string(pool.size()) + " textures, need at least " +
                          std::to_string(target_count + 2));
  }
  std::vector<std::size_t> order(pool.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);
  const std::size_t rest = pool.size() - target_count;
  const std::size_t non_target_count = (rest + 1) / 2;
  std::vector<std::size_t> tgt(order.begin(), order.begin() + target_count);
  std::vector<std::size_t> non(order.begin() + target_count,
                               order.begin() + target_count + non_target_count);
  std::vector<std::size_t> bg(order.begin() + target_count + non_target_count, order.end());
  auto to_ids = [&](std::vector<std::size_t> idx) {
    std::sort(idx.begin(), idx.end());
    std::vector<std::string> ids;
    for (auto i : idx) ids.push_back(pool.textures[i].id);
    return ids;
  };
  return {to_ids(tgt), to_ids(non), to_ids(bg)};
}

/// Tiles `t` over the pixels selected by `m`, starting at a random phase.
/// Unselected pixels are left untouched.
inline void fill_region(RasterImage& img, const LabelMask& m, const Texture& t, Rng& rng) {
  if (!img.same_size(m)) throw ValidationError("fill_region: mask and image sizes differ");
  const int tw = t.swatch.width(), th = t.swatch.height();
  const int ox = static_cast<int>(rng.uniform_int(0, tw - 1));
  const int oy = static_cast<int>(rng.uniform_int(0, th - 1));
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      if (m.at(x, y)) std::copy_n(t.swatch.pixel((x + ox) % tw, (y + oy) % th), 3, img.pixel(x, y));
}

}  // namespace shapeprobe
