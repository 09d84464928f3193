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
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "shapeprobe/error.hpp"
#include "shapeprobe/image.hpp"
#include "shapeprobe/random.hpp"

namespace shapeprobe {

struct Point {
  double x = 0;
  double y = 0;
  bool operator==(const Point&) const = default;
};

/// Closed ring of vertices in continuous pixel coordinates.
struct Polygon {
  std::vector<Point> vertices;
  bool operator==(const Polygon&) const = default;
};

struct BoxD {
  double x0, y0, x1, y1;
  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
};

inline BoxD bounding_box(const Polygon& p) {
  BoxD b{1e300, 1e300, -1e300, -1e300};
  for (const auto& v : p.vertices) {
    b.x0 = std::min(b.x0, v.x);
    b.y0 = std::min(b.y0, v.y);
    b.x1 = std::max(b.x1, v.x);
    b.y1 = std::max(b.y1, v.y);
  }
  return b;
}

/// Shoelace area; positive for counter-clockwise rings in a y-up frame.
inline double signed_area(const Polygon& p) {
  double s = 0;
  const auto n = p.vertices.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = p.vertices[i];
    const auto& b = p.vertices[(i + 1) % n];
    s += a.x * b.y - b.x * a.y;
  }
  return 0.5 * s;
}

inline double perimeter(const Polygon& p) {
  double s = 0;
  const auto n = p.vertices.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = p.vertices[i];
    const auto& b = p.vertices[(i + 1) % n];
    s += std::hypot(b.x - a.x, b.y - a.y);
  }
  return s;
}

namespace detail {

inline double cross(Point o, Point a, Point b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

inline int sign(double v) { return (v > 0) - (v < 0); }

inline bool on_segment(Point a, Point b, Point p) {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) &&
         std::min(a.y, b.y) <= p.y && p.y <= std::max(a.y, b.y);
}

/// Closed-segment intersection test (touching counts).
inline bool segments_intersect(Point a, Point b, Point c, Point d) {
  const int d1 = sign(cross(c, d, a));
  const int d2 = sign(cross(c, d, b));
  const int d3 = sign(cross(a, b, c));
  const int d4 = sign(cross(a, b, d));
  if (d1 != d2 && d3 != d4 && d1 != 0 && d2 != 0 && d3 != 0 && d4 != 0) return true;
  if (d1 == 0 && on_segment(c, d, a)) return true;
  if (d2 == 0 && on_segment(c, d, b)) return true;
  if (d3 == 0 && on_segment(a, b, c)) return true;
  if (d4 == 0 && on_segment(a, b, d)) return true;
  return false;
}

}  // namespace detail

/// True when the ring has at least three vertices, non-zero area and no two
/// edges meet except adjacent edges at their shared vertex.
inline bool is_simple(const Polygon& p) {
  const auto n = p.vertices.size();
  if (n < 3 || signed_area(p) == 0.0) return false;
  const auto& v = p.vertices;
  for (std::size_t i = 0; i < n; ++i) {
    const Point a = v[i], b = v[(i + 1) % n];
    if (a == b) return false;
    for (std::size_t j = i + 1; j < n; ++j) {
      const Point c = v[j], d = v[(j + 1) % n];
      const bool adjacent = j == i + 1 || (i == 0 && j == n - 1);
      if (adjacent) {
        // Adjacent edges may only share their common vertex: reject folds back
        // along the same line.
        const Point shared = (j == i + 1) ? b : a;
        const Point other_i = (j == i + 1) ? a : b;
        const Point other_j = (j == i + 1) ? d : c;
        if (detail::sign(detail::cross(shared, other_i, other_j)) == 0) {
          const double dot = (other_i.x - shared.x) * (other_j.x - shared.x) +
                             (other_i.y - shared.y) * (other_j.y - shared.y);
          if (dot > 0) return false;
        }
        continue;
      }
      if (detail::segments_intersect(a, b, c, d)) return false;
    }
  }
  return true;
}

struct PolygonSampler {
  int min_vertices = 5;
  int max_vertices = 12;
  /// 0 gives a regular polygon; 1 gives strongly jittered radii and angles.
  double irregularity = 0.5;
  int max_attempts = 64;
};

/// Star-shaped polygon around the origin with unit nominal radius.
/// Angles are sorted, so the ring is simple whenever all radii are positive;
/// the simplicity check is still applied and non-simple draws are rejected.
inline Polygon sample_polygon(Rng& rng, const PolygonSampler& opts) {
  if (opts.min_vertices < 3 || opts.max_vertices > 32 ||
      opts.min_vertices > opts.max_vertices) {
    throw ValidationError("vertex count range must lie within [3, 32]");
  }
  if (opts.irregularity < 0.0 || opts.irregularity > 1.0)
    throw ValidationError("irregularity must lie in [0, 1]");
  const double irr = opts.irregularity;
  for (int attempt = 0; attempt < opts.max_attempts; ++attempt) {
    const int n = static_cast<int>(rng.uniform_int(opts.min_vertices, opts.max_vertices));
    const double step = 2.0 * std::numbers::pi / n;
    const double base = rng.uniform(0.0, 2.0 * std::numbers::pi);
    Polygon p;
    p.vertices.reserve(n);
    for (int i = 0; i < n; ++i) {
      const double angle = base + step * (i + irr * rng.uniform(-0.45, 0.45));
      const double radius = 1.0 + irr * rng.uniform(-0.7, 0.7);
      p.vertices.push_back({radius * std::cos(angle), radius * std::sin(angle)});
    }
    if (is_simple(p)) return p;
  }
  throw GenerationError("polygon sampler exhausted " + std::to_string(opts.max_attempts) +
                        " attempts (seed " + std::to_string(rng.seed()) + ")");
}

/// Scales `p` uniformly so that max(bbox width, bbox height) equals `size_px`
/// and translates its bbox minimum corner to `position`. No rotation.
inline Polygon fit_polygon_to_box(const Polygon& p, double size_px, Point position,
                                  int canvas_width, int canvas_height) {
  const BoxD b = bounding_box(p);
  const double extent = std::max(b.width(), b.height());
  if (!(extent > 0)) throw ValidationError("degenerate polygon");
  const double s = size_px / extent;
  Polygon out;
  out.vertices.reserve(p.vertices.size());
  for (const auto& v : p.vertices)
    out.vertices.push_back({position.x + (v.x - b.x0) * s, position.y + (v.y - b.y0) * s});
  const BoxD ob = bounding_box(out);
  if (ob.x0 < 0 || ob.y0 < 0 || ob.x1 > canvas_width || ob.y1 > canvas_height) {
    throw ValidationError("placement error: box at (" + std::to_string(position.x) + ", " +
                          std::to_string(position.y) + ") of size " +
                          std::to_string(size_px) + " leaves the " +
                          std::to_string(canvas_width) + "x" +
                          std::to_string(canvas_height) + " canvas");
  }
  return out;
}

/// Even-odd fill sampled at pixel centres. Centres exactly on an edge follow
/// the top-left rule: inside on left and top edges, outside on right and
/// bottom ones.
inline LabelMask rasterize(const Polygon& p, int width, int height) {
  LabelMask m(width, height);
  const auto& v = p.vertices;
  const auto n = v.size();
  std::vector<double> xs;
  for (int y = 0; y < height; ++y) {
    const double yc = y + 0.5;
    xs.clear();
    for (std::size_t i = 0; i < n; ++i) {
      const Point a = v[i], b = v[(i + 1) % n];
      if ((a.y > yc) != (b.y > yc)) {
        xs.push_back(a.x + (yc - a.y) * (b.x - a.x) / (b.y - a.y));
      }
    }
    std::sort(xs.begin(), xs.end());
    for (std::size_t k = 0; k + 1 < xs.size(); k += 2) {
      // Pixel centres in [xs[k], xs[k+1]).
      int x_begin = static_cast<int>(std::ceil(xs[k] - 0.5));
      int x_end = static_cast<int>(std::ceil(xs[k + 1] - 0.5)) - 1;
      x_begin = std::max(x_begin, 0);
      x_end = std::min(x_end, width - 1);
      for (int x = x_begin; x <= x_end; ++x) m.at(x, y) = 1;
    }
  }
  return m;
}

inline Polygon flip_horizontal(const Polygon& p, int canvas_width) {
  Polygon out = p;
  for (auto& v : out.vertices) v.x = canvas_width - v.x;
  return out;
}

inline Polygon flip_vertical(const Polygon& p, int canvas_height) {
  Polygon out = p;
  for (auto& v : out.vertices) v.y = canvas_height - v.y;
  return out;
}

// ---------------------------------------------------------------------------
// Elastic deformation.

/// Smoothing scale of the random displacement field, in pixels.
inline constexpr double kElasticSigma = 16.0;
/// RMS displacement (pixels) added per degree of deformation.
inline constexpr double kElasticAlphaUnit = 0.85;
inline constexpr int kMaxElasticDegree = 10;

struct DisplacementField {
  int width = 0;
  int height = 0;
  double sigma = kElasticSigma;
  double alpha = 0;
  std::vector<float> dx;
  std::vector<float> dy;

  float at_x(int x, int y) const { return dx[static_cast<std::size_t>(y) * width + x]; }
  float at_y(int x, int y) const { return dy[static_cast<std::size_t>(y) * width + x]; }
};

namespace detail {

inline std::vector<double> gaussian_kernel(double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> k(2 * radius + 1);
  double sum = 0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += k[i + radius];
  }
  for (auto& v : k) v /= sum;
  return k;
}

/// Separable Gaussian blur of a single-channel float plane, reflect borders.
inline void gaussian_blur(std::vector<double>& plane, int w, int h, double sigma) {
  const auto k = gaussian_kernel(sigma);
  const int r = static_cast<int>(k.size() / 2);
  std::vector<double> tmp(plane.size());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double s = 0;
      for (int i = -r; i <= r; ++i)
        s += k[i + r] * plane[static_cast<std::size_t>(y) * w + reflect_index(x + i, w)];
      tmp[static_cast<std::size_t>(y) * w + x] = s;
    }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double s = 0;
      for (int i = -r; i <= r; ++i)
        s += k[i + r] * tmp[static_cast<std::size_t>(reflect_index(y + i, h)) * w + x];
      plane[static_cast<std::size_t>(y) * w + x] = s;
    }
}

}  // namespace detail

/// Random field rescaled to an RMS displacement magnitude of `alpha` pixels.
/// The field is the curl of Gaussian-smoothed noise and therefore
/// divergence-free up to discretisation. alpha == 0 yields an all-zero field.
inline DisplacementField make_displacement_field(int width, int height, double alpha,
                                                 Rng& rng, double sigma = kElasticSigma) {
  DisplacementField f;
  f.width = width;
  f.height = height;
  f.sigma = sigma;
  f.alpha = alpha;
  const auto n = static_cast<std::size_t>(width) * height;
  std::vector<double> psi(n);
  for (auto& v : psi) v = rng.uniform(-1.0, 1.0);
  detail::gaussian_blur(psi, width, height, sigma);
  auto at = [&](int x, int y) {
    return psi[static_cast<std::size_t>(reflect_index(y, height)) * width + reflect_index(x, width)];
  };
  std::vector<double> px(n), py(n);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const auto i = static_cast<std::size_t>(y) * width + x;
      px[i] = 0.5 * (at(x, y + 1) - at(x, y - 1));
      py[i] = -0.5 * (at(x + 1, y) - at(x - 1, y));
    }
  double ms = 0;
  for (std::size_t i = 0; i < n; ++i) ms += px[i] * px[i] + py[i] * py[i];
  const double rms = n ? std::sqrt(ms / n) : 0.0;
  const double scale = (rms > 0 && alpha > 0) ? alpha / rms : 0.0;
  f.dx.resize(n);
  f.dy.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    f.dx[i] = static_cast<float>(px[i] * scale);
    f.dy[i] = static_cast<float>(py[i] * scale);
  }
  return f;
}

/// Inverse-mapping warp with nearest-neighbour sampling; samples falling
/// outside the source are background.
template <int C>
Raster<C> warp(const Raster<C>& src, const DisplacementField& f, double gain = 1.0) {
  if (!src.same_size(f.width, f.height))
    throw ValidationError("displacement field does not match raster size");
  Raster<C> out(src.width(), src.height());
  for (int y = 0; y < src.height(); ++y)
    for (int x = 0; x < src.width(); ++x) {
      const int sx = static_cast<int>(std::lround(x + gain * f.at_x(x, y)));
      const int sy = static_cast<int>(std::lround(y + gain * f.at_y(x, y)));
      if (src.contains(sx, sy)) std::copy_n(src.pixel(sx, sy), C, out.pixel(x, y));
    }
  return out;
}

/// Bilinear coverage of mask `m` at continuous position (x, y); positions
/// outside the mask are background.
inline double mask_coverage(const LabelMask& m, double x, double y) {
  const int x0 = static_cast<int>(std::floor(x)), y0 = static_cast<int>(std::floor(y));
  const double fx = x - x0, fy = y - y0;
  auto v = [&](int xx, int yy) { return m.contains(xx, yy) && m.at(xx, yy) ? 1.0 : 0.0; };
  return v(x0, y0) * (1 - fx) * (1 - fy) + v(x0 + 1, y0) * fx * (1 - fy) +
         v(x0, y0 + 1) * (1 - fx) * fy + v(x0 + 1, y0 + 1) * fx * fy;
}

/// Mask warp that thresholds bilinear coverage at one half, so thin parts
/// survive better than with nearest-neighbour sampling.
inline LabelMask warp_mask(const LabelMask& m, const DisplacementField& f, double gain = 1.0) {
  if (!m.same_size(f.width, f.height))
    throw ValidationError("displacement field does not match raster size");
  LabelMask out(m.width(), m.height());
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x)
      out.at(x, y) = mask_coverage(m, x + gain * f.at_x(x, y), y + gain * f.at_y(x, y)) >= 0.5;
  return out;
}

/// Elastic deformation at `degree` in [0, 10]; degree 0 is the identity.
inline LabelMask elastic_deform(const LabelMask& m, int degree, Rng& rng) {
  if (degree < 0 || degree > kMaxElasticDegree)
    throw ValidationError("elastic degree must lie in [0, 10]");
  if (degree == 0) return m;
  const auto field =
      make_displacement_field(m.width(), m.height(), degree * kElasticAlphaUnit, rng);
  return warp_mask(m, field);
}

}  // namespace shapeprobe
