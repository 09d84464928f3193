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
#include <vector>

#include "shapeprobe/image.hpp"

namespace shapeprobe {

/// Translation- and scale-normalised occupancy of a mask.
///
/// Every foreground pixel centre is mapped to (p - centroid) / sqrt(area) and
/// splatted bilinearly onto a `kGrid` x `kGrid` lattice spanning
/// [-kExtent, kExtent]^2, each pixel carrying mass 1 / area. Two masks of the
/// same shape at different positions and scales produce nearly identical
/// grids; orientation is not normalised, so rotations and reflections of an
/// asymmetric shape do not align.
class ShapeSignature {
 public:
  static constexpr int kGrid = 64;
  static constexpr double kExtent = 2.5;

  ShapeSignature() : cells_(kGrid * kGrid, 0.0) {}

  explicit ShapeSignature(const LabelMask& m) : ShapeSignature() {
    double sx = 0, sy = 0;
    std::size_t n = 0;
    for (int y = 0; y < m.height(); ++y)
      for (int x = 0; x < m.width(); ++x)
        if (m.at(x, y)) {
          sx += x + 0.5;
          sy += y + 0.5;
          ++n;
        }
    if (n == 0) return;
    const double cx = sx / n, cy = sy / n;
    const double inv_scale = 1.0 / std::sqrt(static_cast<double>(n));
    const double mass = 1.0 / n;
    const double to_grid = kGrid / (2.0 * kExtent);
    for (int y = 0; y < m.height(); ++y)
      for (int x = 0; x < m.width(); ++x) {
        if (!m.at(x, y)) continue;
        const double gx = ((x + 0.5 - cx) * inv_scale + kExtent) * to_grid - 0.5;
        const double gy = ((y + 0.5 - cy) * inv_scale + kExtent) * to_grid - 0.5;
        const int ix = static_cast<int>(std::floor(gx));
        const int iy = static_cast<int>(std::floor(gy));
        const double tx = gx - ix, ty = gy - iy;
        splat(ix, iy, mass * (1 - tx) * (1 - ty));
        splat(ix + 1, iy, mass * tx * (1 - ty));
        splat(ix, iy + 1, mass * (1 - tx) * ty);
        splat(ix + 1, iy + 1, mass * tx * ty);
      }
    empty_ = false;
  }

  bool empty() const { return empty_; }
  const std::vector<double>& cells() const { return cells_; }

  /// Cell-wise average, used to build a template from several examples.
  static ShapeSignature mean(const std::vector<ShapeSignature>& sigs) {
    ShapeSignature out;
    std::size_t used = 0;
    for (const auto& s : sigs) {
      if (s.empty()) continue;
      for (std::size_t i = 0; i < out.cells_.size(); ++i) out.cells_[i] += s.cells_[i];
      ++used;
    }
    if (used == 0) return out;
    for (auto& c : out.cells_) c /= static_cast<double>(used);
    out.empty_ = false;
    return out;
  }

  static ShapeSignature from_cells(std::vector<double> cells) {
    ShapeSignature out;
    if (cells.size() != out.cells_.size()) return out;
    out.cells_ = std::move(cells);
    out.empty_ = false;
    return out;
  }

 private:
  void splat(int ix, int iy, double w) {
    if (ix < 0 || iy < 0 || ix >= kGrid || iy >= kGrid) return;
    cells_[static_cast<std::size_t>(iy) * kGrid + ix] += w;
  }

  std::vector<double> cells_;
  bool empty_ = true;
};

/// Soft IOU (sum of minima over sum of maxima) between two signatures.
/// Empty signatures align with nothing.
inline double alignment_iou(const ShapeSignature& a, const ShapeSignature& b) {
  if (a.empty() || b.empty()) return 0.0;
  double lo = 0, hi = 0;
  const auto& ca = a.cells();
  const auto& cb = b.cells();
  for (std::size_t i = 0; i < ca.size(); ++i) {
    lo += std::min(ca[i], cb[i]);
    hi += std::max(ca[i], cb[i]);
  }
  return hi > 0 ? lo / hi : 0.0;
}

/// Centroid-and-scale aligned IOU of two masks.
inline double alignment_iou(const LabelMask& a, const LabelMask& b) {
  return alignment_iou(ShapeSignature(a), ShapeSignature(b));
}

}  // namespace shapeprobe
