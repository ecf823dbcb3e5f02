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

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "common/value.hpp"

namespace ember::storage {

// One catalog entry as persisted. `source` is a file path for registered
// files or the defining statement for tables created by CREATE TABLE AS.
struct ManifestEntry {
  std::string name;
  Schema schema;
  std::string source_kind;  // "file" or "query"
  std::string source;
  bool cached = false;
  std::optional<std::string> distribute_key;
  std::optional<std::string> copartition;
  size_t partition_count = 0;

  bool operator==(const ManifestEntry&) const = default;
};

// One JSON object per line, sorted by table name.
std::string write_manifest(std::vector<ManifestEntry> entries);
std::vector<ManifestEntry> read_manifest(const std::string& text);

}  // namespace ember::storage
