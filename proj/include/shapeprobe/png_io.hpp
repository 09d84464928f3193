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

#include <png.h>

#include <cstring>
#include <filesystem>
#include <string>

#include "shapeprobe/error.hpp"
#include "shapeprobe/image.hpp"

namespace shapeprobe {

namespace detail {

inline png_image begin_png_read(const std::filesystem::path& path, png_uint_32 format) {
  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.string().c_str())) {
    const std::string msg = img.message;
    png_image_free(&img);
    throw IoError("cannot decode '" + path.string() + "': " + msg);
  }
  img.format = format;
  return img;
}

}  // namespace detail

/// Reads any PNG as 8-bit RGB.
inline RasterImage read_png_rgb(const std::filesystem::path& path) {
  png_image img = detail::begin_png_read(path, PNG_FORMAT_RGB);
  RasterImage out(static_cast<int>(img.width), static_cast<int>(img.height));
  if (!png_image_finish_read(&img, nullptr, out.bytes().data(), 0, nullptr)) {
    const std::string msg = img.message;
    png_image_free(&img);
    throw IoError("cannot decode '" + path.string() + "': " + msg);
  }
  return out;
}

/// Reads any PNG as a binary mask: gray values >= 128 are target.
inline LabelMask read_png_mask(const std::filesystem::path& path) {
  png_image img = detail::begin_png_read(path, PNG_FORMAT_GRAY);
  LabelMask out(static_cast<int>(img.width), static_cast<int>(img.height));
  if (!png_image_finish_read(&img, nullptr, out.bytes().data(), 0, nullptr)) {
    const std::string msg = img.message;
    png_image_free(&img);
    throw IoError("cannot decode '" + path.string() + "': " + msg);
  }
  for (auto& v : out.bytes()) v = v >= 128 ? 1 : 0;
  return out;
}

inline void write_png(const std::filesystem::path& path, const RasterImage& image) {
  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(image.width());
  img.height = static_cast<png_uint_32>(image.height());
  img.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&img, path.string().c_str(), 0, image.bytes().data(), 0,
                               nullptr)) {
    throw IoError("cannot write '" + path.string() + "': " + img.message);
  }
}

/// Masks are written as 8-bit gray with values {0, 255}.
inline void write_png(const std::filesystem::path& path, const LabelMask& mask) {
  std::vector<std::uint8_t> gray(mask.bytes().begin(), mask.bytes().end());
  for (auto& v : gray) v = v ? 255 : 0;
  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(mask.width());
  img.height = static_cast<png_uint_32>(mask.height());
  img.format = PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&img, path.string().c_str(), 0, gray.data(), 0, nullptr)) {
    throw IoError("cannot write '" + path.string() + "': " + img.message);
  }
}

}  // namespace shapeprobe
