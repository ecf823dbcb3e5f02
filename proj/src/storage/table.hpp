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

#include <memory>
#include <optional>
#include <vector>

#include "common/value.hpp"
#include "storage/encoding.hpp"
#include "storage/stats.hpp"

namespace ember::storage {

inline constexpr size_t kDefaultTargetPartitionRows = 1024;

struct Partitioning {
  size_t key_column = 0;
  size_t count = 0;
};

// One column-encoded partition. Immutable once built.
struct ColumnarPartition {
  std::vector<ColumnChunk> columns;
  PartitionStats stats;

  size_t row_count() const { return stats.row_count; }
  size_t encoded_bytes() const;
  size_t plain_bytes() const;
  RowBatch decode() const;
};

using ColumnarPartitionPtr = std::shared_ptr<const ColumnarPartition>;

struct CachedTable {
  Schema schema;
  std::vector<ColumnarPartitionPtr> partitions;
  std::optional<Partitioning> partitioning;

  size_t row_count() const;
  RowBatch rows() const;
};

struct EncodeOptions {
  size_t enum_threshold = kEnumThreshold;
  double max_run_savings = kDefaultMaxRunSavings;
};

// Throws SchemaViolation when a row does not fit `schema`.
void check_row(const Row& row, const Schema& schema, size_t row_number);

ColumnarPartitionPtr build_partition(const RowBatch& rows, const Schema& schema,
                                     const EncodeOptions& options = {});

// Partition a row would be routed to under hash partitioning.
size_t route(const Value& key, size_t count);

struct LoadOptions {
  size_t target_partition_rows = kDefaultTargetPartitionRows;
  std::optional<size_t> distribute_key;
  size_t distribute_partitions = 8;
  EncodeOptions encode;
};

// Validates every row before encoding anything, so a failed load never
// produces a partial table.
CachedTable load_table(const RowBatch& rows, const Schema& schema, const LoadOptions& options = {});

// Splits rows into consecutive slices of at most `target` rows.
std::vector<RowBatch> split_consecutive(const RowBatch& rows, size_t target);
std::vector<RowBatch> split_by_hash(const RowBatch& rows, size_t key_column, size_t count);

}  // namespace ember::storage
