// Copyright 2026 The Ember Authors
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

#include "storage/manifest.hpp"

#include <algorithm>
#include <sstream>

#include <json.hpp>

#include "common/error.hpp"

namespace ember::storage {

using nlohmann::ordered_json;

std::string write_manifest(std::vector<ManifestEntry> entries) {
  std::sort(entries.begin(), entries.end(),
            [](const auto& a, const auto& b) { return a.name < b.name; });
  std::string out;
  for (const auto& e : entries) {
    ordered_json j;
    j["table"] = e.name;
    j["schema"] = e.schema.to_string();
    j["source_kind"] = e.source_kind;
    j["source"] = e.source;
    j["cache"] = e.cached;
    j["distribute_by"] = e.distribute_key ? ordered_json(*e.distribute_key) : ordered_json();
    j["copartition"] = e.copartition ? ordered_json(*e.copartition) : ordered_json();
    j["partitions"] = e.partition_count;
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<ManifestEntry> read_manifest(const std::string& text) {
  std::vector<ManifestEntry> entries;
  std::istringstream in(text);
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto j = ordered_json::parse(line);
      ManifestEntry e;
      e.name = j.at("table").get<std::string>();
      e.schema = Schema::parse(j.at("schema").get<std::string>());
      e.source_kind = j.at("source_kind").get<std::string>();
      e.source = j.at("source").get<std::string>();
      e.cached = j.at("cache").get<bool>();
      if (!j.at("distribute_by").is_null()) e.distribute_key = j["distribute_by"].get<std::string>();
      if (!j.at("copartition").is_null()) e.copartition = j["copartition"].get<std::string>();
      e.partition_count = j.at("partitions").get<size_t>();
      entries.push_back(std::move(e));
    } catch (const ordered_json::exception& ex) {
      fail(ErrorCode::kIo, "manifest line " + std::to_string(line_no) + ": " + ex.what());
    }
  }
  return entries;
}

}  // namespace ember::storage
