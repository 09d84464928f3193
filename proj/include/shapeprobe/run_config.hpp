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
#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "shapeprobe/dataset.hpp"
#include "shapeprobe/error.hpp"
#include "shapeprobe/hashing.hpp"

namespace shapeprobe {

inline const std::string kDefaultSeenPool = "procedural:7:112";
inline const std::string kDefaultUnseenPool = "procedural:99:61";

/// Everything needed to regenerate one benchmark run.
struct RunConfig {
  std::uint64_t seed = 0;
  FeatureConfig features;
  std::size_t n_train = 2000;
  std::size_t n_val = 200;
  std::string seen_pool = kDefaultSeenPool;
  std::string unseen_pool = kDefaultUnseenPool;

  void validate() const {
    features.validate();
    if (n_train < 1 || n_val < 1) throw ValidationError("dataset size must be at least 1");
    if (seen_pool == unseen_pool) throw ConfigError("seen and unseen pools must differ");
  }
};

inline nlohmann::json to_json(const RunConfig& r) {
  return {{"seed", r.seed},           {"features", to_json(r.features)},
          {"n_train", r.n_train},     {"n_val", r.n_val},
          {"seen_pool", r.seen_pool}, {"unseen_pool", r.unseen_pool}};
}

/// Accepts a run config object or a bare feature config.
inline RunConfig run_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("run config must be a JSON object");
  RunConfig r;
  if (!j.contains("features")) {
    r.features = feature_config_from_json(j);
    return r;
  }
  static const std::set<std::string> kKeys = {"seed",      "features",   "n_train",
                                              "n_val",     "seen_pool",  "unseen_pool"};
  for (const auto& [k, v] : j.items())
    if (!kKeys.count(k)) throw ConfigError("unknown run config key '" + k + "'");
  try {
    r.seed = j.value("seed", r.seed);
    r.features = feature_config_from_json(j.at("features"));
    r.n_train = j.value("n_train", r.n_train);
    r.n_val = j.value("n_val", r.n_val);
    r.seen_pool = j.value("seen_pool", r.seen_pool);
    r.unseen_pool = j.value("unseen_pool", r.unseen_pool);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("run config: ") + e.what());
  }
  return r;
}

inline std::string run_hash(const RunConfig& r) { return json_hash(to_json(r)); }

}  // namespace shapeprobe
