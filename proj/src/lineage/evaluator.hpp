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
#include <mutex>
#include <optional>
#include <utility>
#include <vector>

#include "lineage/node.hpp"
#include "storage/table.hpp"

namespace ember::lineage {

// A materialized partition of a persisted node: plain rows, or encoded
// columns for the columnar storage level.
struct StoredPartition {
  RowBatchPtr rows;
  storage::ColumnarPartitionPtr columnar;

  RowBatchPtr materialize() const;
  size_t row_count() const;
  size_t byte_size() const;
};

StoredPartition store_rows(const DatasetNode& node, RowBatchPtr rows);

// Where an evaluation finds data it does not compute itself.
class PartitionStore {
 public:
  virtual ~PartitionStore() = default;
  // A resident copy of partition `index` of persisted `node`, if any.
  virtual std::optional<StoredPartition> find(const DatasetNode& node, size_t index) = 0;
  // Records a freshly computed persisted partition.
  virtual void publish(const DatasetNode& node, size_t index, const StoredPartition& part) = 0;
  // Reduce-side input of `exchange`: bucket `reduce` of every map output, in
  // map index order.
  virtual std::vector<RowBatchPtr> shuffle_input(const DatasetNode& exchange, size_t reduce) = 0;
};

struct EvalCounters {
  size_t rows_in = 0;
  // (node id, partition) pairs of persisted partitions computed here.
  std::vector<std::pair<uint64_t, size_t>> persisted;
  // Number of kernel invocations per node id.
  std::map<uint64_t, size_t> computed;
};

// Computes partitions by walking lineage. Results are memoized for the
// lifetime of the evaluator, so a partition shared by several consumers
// within one pass is computed once.
class Evaluator {
 public:
  explicit Evaluator(PartitionStore& store) : store_(store) {}

  RowBatchPtr compute(const NodePtr& node, size_t index);
  const EvalCounters& counters() const { return counters_; }

 private:
  RowBatchPtr run(const NodePtr& node, size_t index);

  PartitionStore& store_;
  std::map<std::pair<uint64_t, size_t>, RowBatchPtr> memo_;
  EvalCounters counters_;
};

// Single-process store: keeps persisted partitions and map outputs, running
// map sides on demand. Used by tests and local collection.
class LocalPartitionCache : public PartitionStore {
 public:
  std::optional<StoredPartition> find(const DatasetNode& node, size_t index) override;
  void publish(const DatasetNode& node, size_t index, const StoredPartition& part) override;
  std::vector<RowBatchPtr> shuffle_input(const DatasetNode& exchange, size_t reduce) override;

  bool evict(uint64_t node_id, size_t index);
  void evict_shuffle(uint64_t exchange_id);
  bool resident(uint64_t node_id, size_t index) const;
  // Kernel invocations across every evaluation this cache has driven.
  size_t computed(uint64_t node_id) const;
  void note(const EvalCounters& c);

 private:
  mutable std::mutex mu_;
  std::map<std::pair<uint64_t, size_t>, StoredPartition> partitions_;
  // exchange id -> per map index -> buckets
  std::map<uint64_t, std::vector<std::vector<RowBatchPtr>>> shuffles_;
  std::map<uint64_t, size_t> computed_;
};

// Recomputes one partition, reusing whatever `store` still holds.
RowBatchPtr recompute_partition(const NodePtr& node, size_t index, PartitionStore& store);

// Every partition of `node`, concatenated in index order.
RowBatch collect(const NodePtr& node, PartitionStore& store);

}  // namespace ember::lineage
