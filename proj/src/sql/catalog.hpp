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

#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "lineage/node.hpp"
#include "storage/stats.hpp"

namespace ember::sql {

struct TableEntry {
  std::string name;
  Schema schema;
  // Scanning the table reads this node's partitions.
  lineage::NodePtr dataset;
  // One entry per partition when known; drives map pruning.
  std::vector<storage::PartitionStats> stats;
  std::optional<size_t> distribute_column;
  std::string copartition;
  bool cached = false;
  std::string source_kind;  // "file", "generated" or "query"
  std::string source;

  size_t partition_count() const { return dataset ? dataset->partition_count : 0; }
  // Byte estimate from stats; zero when unknown.
  uint64_t byte_estimate() const;
  uint64_t row_estimate() const;
};

using TableEntryPtr = std::shared_ptr<const TableEntry>;

// Table names are case-insensitive.
class Catalog {
 public:
  // Throws Plan if the name is taken.
  void add(TableEntry entry);
  void replace(TableEntry entry);
  // Throws NotFound.
  TableEntryPtr get(const std::string& name) const;
  TableEntryPtr find(const std::string& name) const;
  bool drop(const std::string& name);
  std::vector<TableEntryPtr> tables() const;

 private:
  mutable std::shared_mutex mu_;
  std::map<std::string, TableEntryPtr> tables_;
};

// Stats for each partition of a row-backed snapshot.
std::vector<storage::PartitionStats> stats_for_partitions(const std::vector<RowBatchPtr>& parts,
                                                          size_t columns);

}  // namespace ember::sql
