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
#include <string>
#include <variant>
#include <vector>

#include "common/expr.hpp"
#include "common/value.hpp"
#include "lineage/functions.hpp"
#include "lineage/source.hpp"

namespace ember::lineage {

enum class OpKind {
  kSource,
  kMap,
  kFilter,
  kProject,
  kExchange,
  kLocalAggregate,
  kMergeAggregate,
  kHashJoinLocal,
  kBroadcastJoin,
  kLimit,
  kCoalesce,
  kSort,
  kPrune,
  kDeferredJoin,
};

const char* op_name(OpKind kind);

enum class AggFunc { kCountStar, kCount, kSum, kAvg, kMin, kMax };

const char* agg_name(AggFunc f);

struct AggSpec {
  AggFunc func = AggFunc::kCountStar;
  bool distinct = false;
  Expr arg;  // null for COUNT(*)
  Type result_type = Type::kInt64;
};

enum class AggMode {
  kPartial,      // local: per-group partial states
  kPassthrough,  // local: forward keys and raw arguments (DISTINCT)
  kMerge,        // reduce: merge partial states
  kComplete,     // reduce: aggregate raw arguments
};

struct SourceSpec {
  SnapshotPtr snapshot;
};

struct MapSpec {
  std::string function;
  std::string params;
  Granularity granularity = Granularity::kRow;
};

struct FilterSpec {
  Expr predicate;
};

struct ProjectSpec {
  std::vector<Expr> exprs;
};

struct ExchangeSpec {
  std::vector<Expr> keys;
  size_t reducers = 1;
};

struct AggregateSpec {
  std::vector<Expr> keys;  // LocalAggregate only; merge groups by leading columns
  size_t key_count = 0;
  std::vector<AggSpec> aggs;
  AggMode mode = AggMode::kPartial;
};

struct JoinSpec {
  std::vector<size_t> left_keys;
  std::vector<size_t> right_keys;
};

// parents = {probe, build}. Output columns are always left then right.
struct BroadcastSpec {
  std::vector<size_t> left_keys;
  std::vector<size_t> right_keys;
  bool build_is_left = false;
};

struct LimitSpec {
  size_t n = 0;
};

struct CoalesceSpec {
  std::vector<size_t> assignment;  // parent partition -> output partition
  size_t count = 1;
};

struct SortKey {
  size_t column = 0;
  bool ascending = true;
};

struct SortSpec {
  std::vector<SortKey> keys;
};

// Pruned partitions read as empty; indices are not renumbered so hash
// partitioning survives.
struct PruneSpec {
  std::vector<bool> keep;
};

// Join whose strategy is picked at run time. parents = {left exchange,
// right exchange}; evaluated directly it behaves as a shuffle join.
struct DeferredJoinSpec {
  std::vector<size_t> left_keys;
  std::vector<size_t> right_keys;
  std::optional<int> small_hint;  // 0 = left, 1 = right
};

using OpSpec = std::variant<SourceSpec, MapSpec, FilterSpec, ProjectSpec, ExchangeSpec,
                            AggregateSpec, JoinSpec, BroadcastSpec, LimitSpec, CoalesceSpec,
                            SortSpec, PruneSpec, DeferredJoinSpec>;

enum class StorageLevel { kNone, kRows, kColumnar };

// Hash partitioning by the listed output columns.
struct HashPartitioning {
  std::vector<size_t> columns;
  size_t count = 0;
  bool operator==(const HashPartitioning&) const = default;
};

struct DatasetNode;
using NodePtr = std::shared_ptr<const DatasetNode>;

struct DatasetNode {
  uint64_t id = 0;
  OpKind kind = OpKind::kSource;
  OpSpec spec;
  std::vector<NodePtr> parents;
  Schema schema;
  size_t partition_count = 0;
  std::optional<HashPartitioning> partitioning;
  StorageLevel storage = StorageLevel::kNone;
  std::string label;

  template <typename T>
  const T& as() const {
    return std::get<T>(spec);
  }
  bool persisted() const { return storage != StorageLevel::kNone; }
  // True for operators whose partition i depends only on partition i of
  // each parent.
  bool narrow() const;
};

uint64_t next_node_id();

NodePtr make_source(SnapshotPtr snapshot, std::string label = {});
// Throws FieldNotFound via the function's bind step.
NodePtr make_map(NodePtr parent, std::string function, std::string params);
NodePtr make_filter(NodePtr parent, Expr predicate);
NodePtr make_project(NodePtr parent, std::vector<Expr> exprs, std::vector<std::string> names);
NodePtr make_exchange(NodePtr parent, std::vector<Expr> keys, size_t reducers);
NodePtr make_local_aggregate(NodePtr parent, std::vector<Expr> keys, std::vector<AggSpec> aggs,
                             AggMode mode);
// `parent` carries the key columns first, then the states (or raw arguments)
// laid out by a LocalAggregate with the same aggs.
NodePtr make_merge_aggregate(NodePtr parent, size_t key_count, std::vector<AggSpec> aggs,
                             AggMode mode);
NodePtr make_hash_join(NodePtr left, NodePtr right, std::vector<size_t> left_keys,
                       std::vector<size_t> right_keys);
NodePtr make_broadcast_join(NodePtr probe, NodePtr build, std::vector<size_t> left_keys,
                            std::vector<size_t> right_keys, bool build_is_left);
NodePtr make_limit(NodePtr parent, size_t n);
NodePtr make_coalesce(NodePtr parent, std::vector<size_t> assignment, size_t count);
NodePtr make_sort(NodePtr parent, std::vector<SortKey> keys);
NodePtr make_prune(NodePtr parent, std::vector<bool> keep);
NodePtr make_deferred_join(NodePtr left_exchange, NodePtr right_exchange,
                           std::vector<size_t> left_keys, std::vector<size_t> right_keys,
                           std::optional<int> small_hint);
// Identity projection that keeps its partitions resident once computed.
NodePtr make_persist(NodePtr parent, StorageLevel level, std::string label);

// Copy of a freshly built node carrying a display label. Keeps the id, so
// only use it before the node is shared.
NodePtr with_label(const NodePtr& node, std::string label);

// Aggregate state layout shared by the planner and kernels.
std::vector<Column> partial_state_columns(const AggSpec& agg, size_t index);

// Parents before children, each node once. Throws CycleDetected.
std::vector<NodePtr> lineage_closure(const NodePtr& root);

// Rebuilds the graph above the replaced nodes; every node on a path from a
// replacement to the root gets a fresh id, untouched subgraphs are shared.
NodePtr rewrite(const NodePtr& root, const std::map<uint64_t, NodePtr>& replacements);

// Copy of `node` with new parents and a fresh id. Output schema and
// partition count are recomputed.
NodePtr with_parents(const DatasetNode& node, std::vector<NodePtr> parents);

std::string describe_node(const DatasetNode& node);

}  // namespace ember::lineage
