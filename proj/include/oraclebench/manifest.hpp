// Copyright 2026 The OracleBench Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "oraclebench/common.hpp"

namespace oraclebench {

inline std::string config_hash(const nlohmann::json& config) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(config.dump())));
  return buf;
}

struct ManifestCell {
  std::string id;
  std::string status;  // "ok" or an error summary
  double wall_ms = 0.0;
};

/// Written once, atomically, when a run finishes. Metric files are
/// deterministic given (config, seeds); the manifest additionally records
/// wall-clock times and is the one non-reproducible artifact.
struct RunManifest {
  std::string command;
  std::string cfg_hash;
  std::vector<std::uint64_t> seeds;
  std::vector<ManifestCell> cells;
  double total_wall_ms = 0.0;

  nlohmann::json to_json() const {
    nlohmann::json cs = nlohmann::json::array();
    for (const auto& c : cells)
      cs.push_back({{"id", c.id}, {"status", c.status}, {"wall_ms", c.wall_ms}});
    return nlohmann::json{{"command", command},
                          {"config_hash", cfg_hash},
                          {"tool_version", kToolVersion},
                          {"rng_scheme", kRngSchemeId},
                          {"seeds", seeds},
                          {"cells", cs},
                          {"total_wall_ms", total_wall_ms}};
  }
};

inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    require(out.good(), "write_file_atomic: cannot open temp file");
    out << content;
  }
  std::filesystem::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "read_file: cannot open file");
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return content;
}

}  // namespace oraclebench
