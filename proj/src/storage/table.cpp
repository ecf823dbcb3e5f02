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

#include "storage/table.hpp"

#include "common/codec.hpp"
#include "common/error.hpp"

namespace ember::storage {

size_t ColumnarPartition::encoded_bytes() const {
  size_t n = 0;
  for (const auto& c : columns) n += c.total_bytes();
  return n;
}

size_t ColumnarPartition::plain_bytes() const {
  size_t n = 0;
  for (const auto& c : columns) {
    auto values = decode_column(c);
    n += plain_payload_bytes(values, c.type);
  }
  return n;
}

RowBatch ColumnarPartition::decode() const {
  RowBatch rows(row_count());
  for (auto& r : rows) r.reserve(columns.size());
  for (const auto& c : columns) {
    auto values = decode_column(c);
    if (values.size() != rows.size()) fail(ErrorCode::kCorruptChunk, "column length mismatch");
    for (size_t i = 0; i < values.size(); ++i) rows[i].push_back(std::move(values[i]));
  }
  return rows;
}

size_t CachedTable::row_count() const {
  size_t n = 0;
  for (const auto& p : partitions) n += p->row_count();
  return n;
}

RowBatch CachedTable::rows() const {
  RowBatch out;
  for (const auto& p : partitions) {
    auto part = p->decode();
    out.insert(out.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  return out;
}

void check_row(const Row& row, const Schema& schema, size_t row_number) {
  if (row.size() != schema.size()) {
    fail(ErrorCode::kSchemaViolation, "row " + std::to_string(row_number) + " has " +
                                          std::to_string(row.size()) + " fields, expected " +
                                          std::to_string(schema.size()));
  }
  for (size_t c = 0; c < row.size(); ++c) {
    if (!row[c].is_null() && row[c].type() != schema[c].type) {
      fail(ErrorCode::kSchemaViolation, "row " + std::to_string(row_number) + " column " +
                                            schema[c].name + ": expected " +
                                            type_name(schema[c].type) + ", got " +
                                            type_name(row[c].type()));
    }
  }
}

ColumnarPartitionPtr build_partition(const RowBatch& rows, const Schema& schema,
                                     const EncodeOptions& options) {
  auto part = std::make_shared<ColumnarPartition>();
  std::vector<std::vector<Value>> columns(schema.size());
  for (auto& c : columns) c.reserve(rows.size());
  for (const auto& r : rows) {
    for (size_t c = 0; c < schema.size(); ++c) columns[c].push_back(r[c]);
  }
  for (size_t c = 0; c < schema.size(); ++c) {
    part->columns.push_back(encode_column(columns[c], schema[c].type, options.max_run_savings));
  }
  part->stats = compute_partition_stats(columns, options.enum_threshold);
  part->stats.row_count = rows.size();
  return part;
}

size_t route(const Value& key, size_t count) { return hash_value(key) % count; }

std::vector<RowBatch> split_consecutive(const RowBatch& rows, size_t target) {
  if (target == 0) fail(ErrorCode::kInvalidArgument, "target partition rows must be positive");
  std::vector<RowBatch> out;
  for (size_t i = 0; i < rows.size(); i += target) {
    size_t end = std::min(rows.size(), i + target);
    out.emplace_back(rows.begin() + i, rows.begin() + end);
  }
  return out;
}

std::vector<RowBatch> split_by_hash(const RowBatch& rows, size_t key_column, size_t count) {
  if (count == 0) fail(ErrorCode::kInvalidArgument, "partition count must be positive");
  std::vector<RowBatch> out(count);
  for (const auto& r : rows) out[route(r[key_column], count)].push_back(r);
  return out;
}

CachedTable load_table(const RowBatch& rows, const Schema& schema, const LoadOptions& options) {
  schema.validate();
  for (size_t i = 0; i < rows.size(); ++i) check_row(rows[i], schema, i);

  CachedTable table;
  table.schema = schema;
  std::vector<RowBatch> slices;
  if (options.distribute_key) {
    if (*options.distribute_key >= schema.size()) {
      fail(ErrorCode::kInvalidArgument, "distribute key out of range");
    }
    slices = split_by_hash(rows, *options.distribute_key, options.distribute_partitions);
    table.partitioning = Partitioning{*options.distribute_key, options.distribute_partitions};
  } else {
    slices = split_consecutive(rows, options.target_partition_rows);
  }
  for (const auto& s : slices) table.partitions.push_back(build_partition(s, schema, options.encode));
  return table;
}

}  // namespace ember::storage
