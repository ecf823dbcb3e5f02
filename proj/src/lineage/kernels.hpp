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

#include <vector>

#include "lineage/node.hpp"

namespace ember::lineage {

// Per-partition operator bodies. Every kernel defines its output order so
// that recomputation reproduces partitions exactly.

RowBatch apply_filter(const RowBatch& rows, const Expr& predicate);
RowBatch apply_project(const RowBatch& rows, const std::vector<Expr>& exprs);
RowBatch apply_map(const RowBatch& rows, const MapSpec& spec, const Schema& input);

// Groups are emitted sorted by key.
RowBatch local_aggregate(const RowBatch& rows, const AggregateSpec& spec);
RowBatch merge_aggregate(const RowBatch& rows, const AggregateSpec& spec);

// Inner equi-join. Output is left columns then right columns, in left row
// order and, for each left row, right row order. NULL keys never match.
RowBatch hash_join(const RowBatch& left, const RowBatch& right, const std::vector<size_t>& left_keys,
                   const std::vector<size_t>& right_keys);
// Same contract with the build side already gathered; output follows probe
// order.
RowBatch broadcast_join(const RowBatch& probe, const RowBatch& build, const BroadcastSpec& spec);

// Stable. NULLs sort first ascending and last descending.
void sort_rows(RowBatch& rows, const std::vector<SortKey>& keys);
int compare_sort(const Row& a, const Row& b, const std::vector<SortKey>& keys);

RowBatch apply_limit(const RowBatch& rows, size_t n);

// Evaluates the key expressions of each row and routes it by
// hash(keys) mod reducers; row order within a bucket follows input order.
std::vector<RowBatch> hash_partition(const RowBatch& rows, const std::vector<Expr>& keys,
                                     size_t reducers);
Row eval_keys(const Row& row, const std::vector<Expr>& keys);

}  // namespace ember::lineage
