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

#include <string>

#include "lineage/node.hpp"
#include "sql/logical.hpp"

namespace ember::sql {

struct PhysicalOptions {
  size_t shuffle_partitions = 8;
  // Join hash-partitioned inputs in place when their layouts line up.
  bool copartition_joins = true;
  // Mark the likely-small join input so it can run first.
  bool join_hints = true;
};

// Lowers an optimized plan. Aggregates become LocalAggregate, Exchange and
// MergeAggregate; joins become a deferred join over two exchanges unless
// both inputs are already hash-partitioned on the join keys.
lineage::NodePtr lower(const LogicalPtr& plan, const PhysicalOptions& options = {});

// Stage-by-stage operator tree, one operator per line.
std::string explain_physical(const lineage::NodePtr& root);

}  // namespace ember::sql
