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
#include <string>
#include <vector>

#include "lineage/node.hpp"

namespace ember::engine {

enum class StageKind { kShuffleMap, kResult };

// A stage needs the map outputs of `exchange`. When the path to it passes a
// persisted dataset, the dependency only matters while some partition of
// that dataset is not resident.
struct StageDep {
  uint64_t exchange = 0;
  std::optional<uint64_t> guard;
  bool operator==(const StageDep&) const = default;
};

struct Stage {
  size_t id = 0;
  StageKind kind = StageKind::kResult;
  // The exchange for a shuffle-map stage, the job root for the result stage.
  lineage::NodePtr output;
  // Node whose partitions the tasks compute.
  lineage::NodePtr pipeline;
  size_t task_count = 0;
  std::vector<StageDep> deps;
  // Operators fused into this stage, parents first.
  std::vector<lineage::NodePtr> nodes;
  std::vector<uint64_t> guards;  // persisted nodes the pipeline reads

  uint64_t key() const { return output->id; }
  std::string label() const;
};

struct StageGraph {
  // Dependencies before dependents; the result stage is last.
  std::vector<Stage> stages;

  const Stage* find(uint64_t key) const;
  const Stage& result() const { return stages.back(); }
  size_t shuffle_stage_count() const;
};

// Cuts the lineage graph at shuffle exchanges. Narrow operators fuse into
// the stage that consumes them.
StageGraph plan_stages(const lineage::NodePtr& root);

}  // namespace ember::engine
