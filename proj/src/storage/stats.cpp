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

#include "storage/stats.hpp"

#include "common/error.hpp"

namespace ember::storage {

ColumnStats compute_column_stats(std::span<const Value> values, size_t enum_threshold) {
  ColumnStats s;
  std::set<Value, ValueLess> seen;
  bool overflow = false;
  for (const auto& v : values) {
    if (v.is_null()) {
      ++s.null_count;
      continue;
    }
    if (!s.min || compare_values(v, *s.min) < 0) s.min = v;
    if (!s.max || compare_values(v, *s.max) > 0) s.max = v;
    if (!overflow) {
      seen.insert(v);
      // Stop tracking once the set can no longer be kept.
      if (seen.size() > enum_threshold) {
        overflow = true;
        seen.clear();
      }
    }
  }
  if (!overflow) s.distinct = std::move(seen);
  return s;
}

PartitionStats compute_partition_stats(const std::vector<std::vector<Value>>& columns,
                                       size_t enum_threshold) {
  PartitionStats p;
  if (columns.empty()) return p;
  p.row_count = columns[0].size();
  for (const auto& col : columns) {
    if (col.size() != p.row_count) fail(ErrorCode::kInvalidArgument, "columns differ in length");
    p.columns.push_back(compute_column_stats(col, enum_threshold));
    for (const auto& v : col) p.byte_size += value_byte_size(v);
  }
  return p;
}

}  // namespace ember::storage
