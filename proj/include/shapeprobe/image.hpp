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
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "shapeprobe/error.hpp"

namespace shapeprobe {

/// Row-major 8-bit raster with `Channels` interleaved channels.
template <int Channels>
class Raster {
 public:
  static constexpr int kChannels = Channels;

  Raster() = default;
  Raster(int width, int height, std::uint8_t fill = 0)
      : width_(width),
        height_(height),
        data_(static_cast<std::size_t>(width) * height * Channels, fill) {
    if (width < 0 || height < 0) throw ValidationError("negative raster size");
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(width_) * height_;
  }
  bool same_size(int w, int h) const noexcept { return w == width_ && h == height_; }
  template <int C>
  bool same_size(const Raster<C>& o) const noexcept {
    return o.width() == width_ && o.height() == height_;
  }
  bool contains(int x, int y) const noexcept {
    return x >= 0 && y >= 0 && x < width_ && y < height_;
  }

  std::uint8_t& at(int x, int y, int c = 0) {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * Channels + c];
  }
  std::uint8_t at(int x, int y, int c = 0) const {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * Channels + c];
  }
  std::uint8_t* pixel(int x, int y) {
    return &data_[(static_cast<std::size_t>(y) * width_ + x) * Channels];
  }
  const std::uint8_t* pixel(int x, int y) const {
    return &data_[(static_cast<std::size_t>(y) * width_ + x) * Channels];
  }

  std::span<std::uint8_t> bytes() noexcept { return data_; }
  std::span<const std::uint8_t> bytes() const noexcept { return data_; }

  bool operator==(const Raster&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

/// 3-channel 8-bit image.
using RasterImage = Raster<3>;

/// Binary mask. Stored values are 0 (background) or 1 (target).
using LabelMask = Raster<1>;

inline std::size_t count(const LabelMask& m) {
  std::size_t n = 0;
  for (auto v : m.bytes()) n += v != 0;
  return n;
}

inline bool empty(const LabelMask& m) { return count(m) == 0; }

inline void require_same_size(const LabelMask& a, const LabelMask& b, const char* what) {
  if (!a.same_size(b)) {
    throw ValidationError(std::string(what) + ": mask dimensions differ (" +
                          std::to_string(a.width()) + "x" + std::to_string(a.height()) +
                          " vs " + std::to_string(b.width()) + "x" +
                          std::to_string(b.height()) + ")");
  }
}

inline LabelMask mask_or(const LabelMask& a, const LabelMask& b) {
  require_same_size(a, b, "mask_or");
  LabelMask out = a;
  auto o = out.bytes();
  auto bb = b.bytes();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = (o[i] | bb[i]) ? 1 : 0;
  return out;
}

inline LabelMask mask_and(const LabelMask& a, const LabelMask& b) {
  require_same_size(a, b, "mask_and");
  LabelMask out = a;
  auto o = out.bytes();
  auto bb = b.bytes();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = (o[i] && bb[i]) ? 1 : 0;
  return out;
}

/// a \ b
inline LabelMask mask_minus(const LabelMask& a, const LabelMask& b) {
  require_same_size(a, b, "mask_minus");
  LabelMask out = a;
  auto o = out.bytes();
  auto bb = b.bytes();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = (o[i] && !bb[i]) ? 1 : 0;
  return out;
}

inline LabelMask mask_not(const LabelMask& a) {
  LabelMask out = a;
  for (auto& v : out.bytes()) v = v ? 0 : 1;
  return out;
}

inline bool intersects(const LabelMask& a, const LabelMask& b) {
  require_same_size(a, b, "intersects");
  auto aa = a.bytes();
  auto bb = b.bytes();
  for (std::size_t i = 0; i < aa.size(); ++i)
    if (aa[i] && bb[i]) return true;
  return false;
}

/// Square (Chebyshev) dilation by `radius` pixels.
inline LabelMask dilate(const LabelMask& m, int radius) {
  if (radius <= 0) return m;
  const int w = m.width(), h = m.height();
  LabelMask rows(w, h);
  for (int y = 0; y < h; ++y) {
    int last = -1'000'000;
    for (int x = 0; x < w; ++x) {
      if (m.at(x, y)) last = x;
      if (x - last <= radius) rows.at(x, y) = 1;
    }
    last = 1'000'000;
    for (int x = w - 1; x >= 0; --x) {
      if (m.at(x, y)) last = x;
      if (last - x <= radius) rows.at(x, y) = 1;
    }
  }
  LabelMask out(w, h);
  for (int x = 0; x < w; ++x) {
    int last = -1'000'000;
    for (int y = 0; y < h; ++y) {
      if (rows.at(x, y)) last = y;
      if (y - last <= radius) out.at(x, y) = 1;
    }
    last = 1'000'000;
    for (int y = h - 1; y >= 0; --y) {
      if (rows.at(x, y)) last = y;
      if (last - y <= radius) out.at(x, y) = 1;
    }
  }
  return out;
}

/// Number of 8-connected foreground components.
inline int connected_components(const LabelMask& m) {
  const int w = m.width(), h = m.height();
  std::vector<std::uint8_t> seen(m.pixel_count(), 0);
  std::vector<int> stack;
  int n = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const auto idx = static_cast<std::size_t>(y) * w + x;
      if (!m.at(x, y) || seen[idx]) continue;
      ++n;
      seen[idx] = 1;
      stack.push_back(static_cast<int>(idx));
      while (!stack.empty()) {
        const int cur = stack.back();
        stack.pop_back();
        const int cx = cur % w, cy = cur / w;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = cx + dx, ny = cy + dy;
            if (!m.contains(nx, ny) || !m.at(nx, ny)) continue;
            const auto nidx = static_cast<std::size_t>(ny) * w + nx;
            if (seen[nidx]) continue;
            seen[nidx] = 1;
            stack.push_back(static_cast<int>(nidx));
          }
        }
      }
    }
  }
  return n;
}

struct PixelBox {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;  // half-open [x0, x1) x [y0, y1)
  int width() const { return x1 - x0; }
  int height() const { return y1 - y0; }
  bool empty() const { return x1 <= x0 || y1 <= y0; }
};

inline PixelBox bounding_box(const LabelMask& m) {
  PixelBox b{m.width(), m.height(), 0, 0};
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      if (!m.at(x, y)) continue;
      b.x0 = std::min(b.x0, x);
      b.y0 = std::min(b.y0, y);
      b.x1 = std::max(b.x1, x + 1);
      b.y1 = std::max(b.y1, y + 1);
    }
  }
  if (b.empty()) return PixelBox{};
  return b;
}

// ---------------------------------------------------------------------------
// Pixel-exact geometric transforms shared by images and masks.

/// The five non-identity isometries used to probe shape sensitivity.
enum class Isometry { kRot90, kRot180, kRot270, kFlipH, kFlipV };

inline constexpr std::array<Isometry, 5> kAllIsometries = {
    Isometry::kRot90, Isometry::kRot180, Isometry::kRot270, Isometry::kFlipH,
    Isometry::kFlipV};

inline std::string to_string(Isometry t) {
  switch (t) {
    case Isometry::kRot90: return "rot90";
    case Isometry::kRot180: return "rot180";
    case Isometry::kRot270: return "rot270";
    case Isometry::kFlipH: return "flip_h";
    case Isometry::kFlipV: return "flip_v";
  }
  return "?";
}

inline Isometry parse_isometry(const std::string& s) {
  for (auto t : kAllIsometries)
    if (to_string(t) == s) return t;
  throw ValidationError("unknown isometry '" + s + "'");
}

inline Isometry inverse(Isometry t) {
  switch (t) {
    case Isometry::kRot90: return Isometry::kRot270;
    case Isometry::kRot270: return Isometry::kRot90;
    default: return t;
  }
}

inline bool swaps_axes(Isometry t) {
  return t == Isometry::kRot90 || t == Isometry::kRot270;
}

/// Rotations are clockwise in image coordinates (y down).
template <int C>
Raster<C> apply(const Raster<C>& src, Isometry t) {
  const int w = src.width(), h = src.height();
  Raster<C> out = swaps_axes(t) ? Raster<C>(h, w) : Raster<C>(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      int dx = x, dy = y;
      switch (t) {
        case Isometry::kRot90: dx = h - 1 - y; dy = x; break;
        case Isometry::kRot180: dx = w - 1 - x; dy = h - 1 - y; break;
        case Isometry::kRot270: dx = y; dy = w - 1 - x; break;
        case Isometry::kFlipH: dx = w - 1 - x; break;
        case Isometry::kFlipV: dy = h - 1 - y; break;
      }
      std::copy_n(src.pixel(x, y), C, out.pixel(dx, dy));
    }
  }
  return out;
}

/// Permutes a `grid` x `grid` tiling: output tile i receives input tile
/// perm[i]. Dimensions must be divisible by `grid`.
template <int C>
Raster<C> permute_patches(const Raster<C>& src, std::span<const int> perm, int grid) {
  if (src.width() % grid != 0 || src.height() % grid != 0) {
    throw ProbeError("canvas " + std::to_string(src.width()) + "x" +
                     std::to_string(src.height()) + " is not divisible into " +
                     std::to_string(grid) + "x" + std::to_string(grid) + " patches");
  }
  if (perm.size() != static_cast<std::size_t>(grid * grid))
    throw ValidationError("patch permutation has wrong length");
  const int pw = src.width() / grid, ph = src.height() / grid;
  Raster<C> out(src.width(), src.height());
  for (int dst = 0; dst < grid * grid; ++dst) {
    const int from = perm[dst];
    const int sx = (from % grid) * pw, sy = (from / grid) * ph;
    const int dx = (dst % grid) * pw, dy = (dst / grid) * ph;
    for (int y = 0; y < ph; ++y)
      std::copy_n(src.pixel(sx, sy + y), pw * C, out.pixel(dx, dy + y));
  }
  return out;
}

inline std::vector<int> inverse_permutation(std::span<const int> perm) {
  std::vector<int> inv(perm.size());
  for (std::size_t i = 0; i < perm.size(); ++i) inv[perm[i]] = static_cast<int>(i);
  return inv;
}

template <int C>
Raster<C> crop(const Raster<C>& src, PixelBox box) {
  Raster<C> out(box.width(), box.height());
  for (int y = 0; y < box.height(); ++y)
    std::copy_n(src.pixel(box.x0, box.y0 + y), box.width() * C, out.pixel(0, y));
  return out;
}

/// Nearest-neighbour resampling (pixel-centre aligned).
template <int C>
Raster<C> resize_nearest(const Raster<C>& src, int width, int height) {
  Raster<C> out(width, height);
  for (int y = 0; y < height; ++y) {
    const int sy = std::min(src.height() - 1,
                            static_cast<int>((y + 0.5) * src.height() / height));
    for (int x = 0; x < width; ++x) {
      const int sx = std::min(src.width() - 1,
                              static_cast<int>((x + 0.5) * src.width() / width));
      std::copy_n(src.pixel(sx, sy), C, out.pixel(x, y));
    }
  }
  return out;
}

/// Bilinear resampling with edge clamping.
template <int C>
Raster<C> resize_bilinear(const Raster<C>& src, int width, int height) {
  Raster<C> out(width, height);
  const double sx_scale = static_cast<double>(src.width()) / width;
  const double sy_scale = static_cast<double>(src.height()) / height;
  for (int y = 0; y < height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy_scale - 0.5, 0.0, src.height() - 1.0);
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, src.height() - 1);
    const double ty = fy - y0;
    for (int x = 0; x < width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx_scale - 0.5, 0.0, src.width() - 1.0);
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, src.width() - 1);
      const double tx = fx - x0;
      for (int c = 0; c < C; ++c) {
        const double top = src.at(x0, y0, c) * (1 - tx) + src.at(x1, y0, c) * tx;
        const double bot = src.at(x0, y1, c) * (1 - tx) + src.at(x1, y1, c) * tx;
        out.at(x, y, c) = static_cast<std::uint8_t>(
            std::clamp(std::lround(top * (1 - ty) + bot * ty), 0L, 255L));
      }
    }
  }
  return out;
}

/// Mirror index into [0, n) without repeating the edge sample (numpy "reflect").
inline int reflect_index(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

inline std::uint8_t clamp_u8(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

}  // namespace shapeprobe
