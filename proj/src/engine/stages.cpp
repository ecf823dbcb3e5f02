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

#include "engine/stages.hpp"

#include <functional>
#include <map>
#include <algorithm>

namespace ember::engine {

using lineage::NodePtr;
using lineage::OpKind;

std::string Stage::label() const {
  if (kind == StageKind::kResult) return "result";
  return output->label.empty() ? "shuffle" : output->label;
}

const Stage* StageGraph::find(uint64_t key) const {
  for (const auto& s : stages) {
    if (s.key() == key) return &s;
  }
  return nullptr;
}

size_t StageGraph::shuffle_stage_count() const {
  size_t n = 0;
  for (const auto& s : stages) n += s.kind == StageKind::kShuffleMap;
  return n;
}

StageGraph plan_stages(const NodePtr& root) {
  StageGraph graph;
  std::map<uint64_t, size_t> built;  // exchange id -> stage index

  std::function<void(const NodePtr&, const NodePtr&, StageKind)> build;
  build = [&](const NodePtr& output, const NodePtr& pipeline, StageKind kind) {
    Stage stage;
    stage.kind = kind;
    stage.output = output;
    stage.pipeline = pipeline;
    stage.task_count = pipeline->partition_count;

    // node id -> reached without a guard. A node first reached behind a
    // persisted dataset is walked again if an unguarded path shows up.
    std::map<uint64_t, bool> seen;
    std::vector<NodePtr> exchanges;
    std::function<void(const NodePtr&, std::optional<uint64_t>)> walk =
        [&](const NodePtr& n, std::optional<uint64_t> guard) {
          auto it = seen.find(n->id);
          bool first = it == seen.end();
          if (!first && (it->second || guard)) return;
          seen[n->id] = !guard;
          if (n->kind == OpKind::kExchange) {
            StageDep dep{n->id, guard};
            if (std::find(stage.deps.begin(), stage.deps.end(), dep) == stage.deps.end()) {
              stage.deps.push_back(dep);
            }
            if (first) exchanges.push_back(n);
            return;
          }
          if (n->persisted() && !guard) {
            stage.guards.push_back(n->id);
            guard = n->id;
          }
          for (const auto& p : n->parents) walk(p, guard);
          if (first) stage.nodes.push_back(n);
        };
    walk(pipeline, std::nullopt);
    if (kind == StageKind::kShuffleMap) stage.nodes.push_back(output);

    for (const auto& e : exchanges) {
      if (!built.count(e->id)) build(e, e->parents.at(0), StageKind::kShuffleMap);
    }
    stage.id = graph.stages.size();
    if (kind == StageKind::kShuffleMap) built[output->id] = stage.id;
    graph.stages.push_back(std::move(stage));
  };
  build(root, root, StageKind::kResult);
  return graph;
}

}  // namespace ember::engine
