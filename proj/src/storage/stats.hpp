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
#include <set>
#include <span>
#include <vector>

#include "common/value.hpp"

namespace ember::storage {

inline constexpr size_t kEnumThreshold = 32;

// Zone-map statistics for one column of one partition. NULLs are counted but
// never contribute to min, max or the distinct set.
struct ColumnStats {
  std::optional<Value> min;
  std::optional<Value> max;
  std::optional<std::set<Value, ValueLess>> distinct;
  size_t null_count = 0;
};

struct PartitionStats {
  size_t row_count = 0;
  size_t byte_size = 0;
  std::vector<ColumnStats> columns;
};

ColumnStats compute_column_stats(std::span<const Value> values, size_t enum_threshold);
// `columns` holds decoded column values, all of equal length.
PartitionStats compute_partition_stats(const std::vector<std::vector<Value>>& columns,
                                       size_t enum_threshold = kEnumThreshold);

}  // namespace ember::storage
