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

#include <cstdint>
#include <vector>

#include <nlohmann/json.hpp>

#include "shapeprobe/error.hpp"
#include "shapeprobe/image.hpp"

namespace shapeprobe {

/// Row-major run-length encoding of a binary mask.
///
/// JSON form: {"size": [height, width], "counts": [...]}. Runs alternate
/// background/foreground starting with background (a leading zero run is
/// emitted when the first pixel is foreground).
inline nlohmann::json rle_encode(const LabelMask& m) {
  std::vector<std::uint32_t> counts;
  std::uint8_t current = 0;
  std::uint32_t run = 0;
  for (auto v : m.bytes()) {
    const std::uint8_t b = v ? 1 : 0;
    if (b != current) {
      counts.push_back(run);
      run = 0;
      current = b;
    }
    ++run;
  }
  counts.push_back(run);
  return {{"size", {m.height(), m.width()}}, {"counts", counts}};
}

inline LabelMask rle_decode(const nlohmann::json& j) {
  try {
    const int h = j.at("size").at(0).get<int>();
    const int w = j.at("size").at(1).get<int>();
    LabelMask m(w, h);
    auto out = m.bytes();
    std::size_t pos = 0;
    std::uint8_t value = 0;
    for (const auto& c : j.at("counts")) {
      const auto n = c.get<std::size_t>();
      if (pos + n > out.size()) throw ValidationError("RLE overruns mask size");
      std::fill_n(out.begin() + static_cast<std::ptrdiff_t>(pos), n, value);
      pos += n;
      value ^= 1;
    }
    if (pos != out.size()) throw ValidationError("RLE does not cover the mask");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed RLE: ") + e.what());
  }
}

}  // namespace shapeprobe
