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

#include "sql/catalog.hpp"

#include <mutex>

#include "common/error.hpp"

namespace ember::sql {

uint64_t TableEntry::byte_estimate() const {
  uint64_t total = 0;
  for (const auto& s : stats) total += s.byte_size;
  return total;
}

uint64_t TableEntry::row_estimate() const {
  uint64_t total = 0;
  for (const auto& s : stats) total += s.row_count;
  return total;
}

void Catalog::add(TableEntry entry) {
  std::unique_lock lock(mu_);
  std::string key = to_lower(entry.name);
  if (tables_.count(key)) fail(ErrorCode::kPlan, "table '" + entry.name + "' already exists");
  tables_[key] = std::make_shared<const TableEntry>(std::move(entry));
}

void Catalog::replace(TableEntry entry) {
  std::unique_lock lock(mu_);
  std::string key = to_lower(entry.name);
  tables_[key] = std::make_shared<const TableEntry>(std::move(entry));
}

TableEntryPtr Catalog::get(const std::string& name) const {
  auto t = find(name);
  if (!t) fail(ErrorCode::kNotFound, "unknown table '" + name + "'");
  return t;
}

TableEntryPtr Catalog::find(const std::string& name) const {
  std::shared_lock lock(mu_);
  auto it = tables_.find(to_lower(name));
  return it == tables_.end() ? nullptr : it->second;
}

bool Catalog::drop(const std::string& name) {
  std::unique_lock lock(mu_);
  return tables_.erase(to_lower(name)) > 0;
}

std::vector<TableEntryPtr> Catalog::tables() const {
  std::shared_lock lock(mu_);
  std::vector<TableEntryPtr> out;
  for (const auto& [k, t] : tables_) out.push_back(t);
  return out;
}

std::vector<storage::PartitionStats> stats_for_partitions(const std::vector<RowBatchPtr>& parts,
                                                          size_t columns) {
  std::vector<storage::PartitionStats> out;
  for (const auto& p : parts) {
    std::vector<std::vector<Value>> cols(columns);
    for (const auto& row : *p) {
      for (size_t c = 0; c < columns; ++c) cols[c].push_back(row[c]);
    }
    auto s = storage::compute_partition_stats(cols);
    s.row_count = p->size();
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace ember::sql
