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
#include <string>
#include <vector>

#include "common/expr.hpp"
#include "lineage/node.hpp"
#include "sql/ast.hpp"
#include "sql/catalog.hpp"

namespace ember::sql {

enum class LogicalKind { kScan, kFilter, kProject, kAggregate, kJoin, kSort, kLimit };

struct LogicalNode;
using LogicalPtr = std::shared_ptr<const LogicalNode>;

struct LogicalNode {
  LogicalKind kind = LogicalKind::kScan;
  Schema schema;
  std::vector<LogicalPtr> children;

  TableEntryPtr table;                    // Scan
  std::string alias;                      // Scan
  Expr predicate;                         // Scan residual, Filter
  std::optional<std::vector<bool>> keep;  // Scan: partitions surviving pruning
  std::vector<Expr> exprs;                // Project outputs, Aggregate keys
  std::vector<lineage::AggSpec> aggs;     // Aggregate
  std::vector<size_t> left_keys;          // Join
  std::vector<size_t> right_keys;
  std::vector<lineage::SortKey> sort_keys;  // Sort
  size_t limit = 0;                         // Limit
  // Sort and Limit: applied to each partition rather than globally.
  bool per_partition = false;
};

LogicalPtr logical_scan(TableEntryPtr table, std::string alias);
LogicalPtr logical_filter(LogicalPtr child, Expr predicate);
LogicalPtr logical_project(LogicalPtr child, std::vector<Expr> exprs, std::vector<std::string> names);
LogicalPtr logical_aggregate(LogicalPtr child, std::vector<Expr> keys, std::vector<std::string> key_names,
                             std::vector<lineage::AggSpec> aggs, std::vector<std::string> agg_names);
LogicalPtr logical_join(LogicalPtr left, LogicalPtr right, std::vector<size_t> left_keys,
                        std::vector<size_t> right_keys);
LogicalPtr logical_sort(LogicalPtr child, std::vector<lineage::SortKey> keys, bool per_partition);
LogicalPtr logical_limit(LogicalPtr child, size_t n, bool per_partition);

// Resolves names and types. Throws FieldNotFound, TypeMismatch, NotFound or
// Plan with the offset of the offending expression.
LogicalPtr bind_select(const SelectStmt& select, const Catalog& catalog);

struct OptimizeOptions {
  bool pushdown = true;
  bool fold = true;
  bool limit_pushdown = true;
  bool pruning = true;
};

LogicalPtr optimize(const LogicalPtr& plan, const OptimizeOptions& options = {});

// Indices of partitions that may hold a row satisfying the predicate. A
// partition is dropped only when its stats prove the predicate false for
// every row.
std::vector<size_t> prune_partitions(const Expr& predicate, const std::vector<storage::PartitionStats>& stats);

std::string explain_logical(const LogicalPtr& plan);

}  // namespace ember::sql
