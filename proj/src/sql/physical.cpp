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

#include "sql/physical.hpp"

#include <functional>
#include <set>

#include "common/error.hpp"
#include "engine/stages.hpp"

namespace ember::sql {

using lineage::AggMode;
using lineage::NodePtr;
using lineage::OpKind;

namespace {

struct Lowered {
  NodePtr node;
  bool filtered = false;
  uint64_t bytes = 0;
  std::string name;  // alias of the table when the input is a plain scan
};

// True when a runtime join decision could change the partition count of `n`:
// a pending join reachable without crossing a stage boundary.
bool count_may_change(const NodePtr& n) {
  if (n->kind == lineage::OpKind::kDeferredJoin) return true;
  if (n->kind == lineage::OpKind::kExchange || n->kind == lineage::OpKind::kCoalesce) return false;
  for (const auto& p : n->parents) {
    if (count_may_change(p)) return true;
  }
  return false;
}

NodePtr gather(const NodePtr& n) {
  if (n->partition_count == 1 && !count_may_change(n)) return n;
  return lineage::make_coalesce(n, std::vector<size_t>(n->partition_count, 0), 1);
}

std::vector<Expr> key_columns(const Schema& schema, const std::vector<size_t>& cols) {
  std::vector<Expr> out;
  for (size_t c : cols) out.push_back(make_column(c, schema[c].type, schema[c].name));
  return out;
}

bool copartitioned(const NodePtr& l, const NodePtr& r, const std::vector<size_t>& lk, const std::vector<size_t>& rk) {
  if (!l->partitioning || !r->partitioning) return false;
  const auto& lp = *l->partitioning;
  const auto& rp = *r->partitioning;
  if (lp.count != rp.count || l->partition_count != r->partition_count) return false;
  if (lp.columns.empty() || lp.columns.size() != rp.columns.size()) return false;
  // Each partitioning column must pair up through the join keys.
  for (size_t i = 0; i < lp.columns.size(); ++i) {
    bool paired = false;
    for (size_t k = 0; k < lk.size(); ++k) {
      if (lk[k] == lp.columns[i] && rk[k] == rp.columns[i]) paired = true;
    }
    if (!paired) return false;
  }
  return true;
}

Lowered lower_node(const LogicalPtr& n, const PhysicalOptions& o) {
  switch (n->kind) {
    case LogicalKind::kScan: {
      Lowered out;
      out.node = n->table->dataset;
      out.name = n->alias;
      out.bytes = n->table->byte_estimate();
      if (n->keep) {
        out.node = lineage::make_prune(out.node, *n->keep);
        out.bytes = 0;
        for (size_t i = 0; i < n->keep->size(); ++i) {
          if ((*n->keep)[i]) out.bytes += n->table->stats[i].byte_size;
        }
      }
      if (n->predicate) {
        out.node = lineage::make_filter(out.node, n->predicate);
        out.filtered = true;
      }
      return out;
    }
    case LogicalKind::kFilter: {
      Lowered out = lower_node(n->children[0], o);
      out.node = lineage::make_filter(out.node, n->predicate);
      out.filtered = true;
      return out;
    }
    case LogicalKind::kProject: {
      Lowered out = lower_node(n->children[0], o);
      std::vector<std::string> names;
      for (const auto& c : n->schema) names.push_back(c.name);
      out.node = lineage::make_project(out.node, n->exprs, names);
      return out;
    }
    case LogicalKind::kAggregate: {
      Lowered out = lower_node(n->children[0], o);
      bool distinct = false;
      for (const auto& a : n->aggs) distinct = distinct || a.distinct;
      auto local = lineage::make_local_aggregate(out.node, n->exprs, n->aggs,
                                                 distinct ? AggMode::kPassthrough : AggMode::kPartial);
      size_t k = n->exprs.size();
      std::vector<size_t> cols;
      for (size_t i = 0; i < k; ++i) cols.push_back(i);
      auto ex = lineage::make_exchange(local, key_columns(local->schema, cols), k == 0 ? 1 : o.shuffle_partitions);
      ex = lineage::with_label(ex, "aggregate");
      out.node = lineage::make_merge_aggregate(ex, k, n->aggs, distinct ? AggMode::kComplete : AggMode::kMerge);
      out.name.clear();
      return out;
    }
    case LogicalKind::kJoin: {
      Lowered l = lower_node(n->children[0], o);
      Lowered r = lower_node(n->children[1], o);
      Lowered out;
      out.filtered = l.filtered || r.filtered;
      out.bytes = l.bytes + r.bytes;
      std::string ln = l.name.empty() ? "left" : l.name;
      std::string rn = r.name.empty() ? "right" : r.name;
      if (o.copartition_joins && copartitioned(l.node, r.node, n->left_keys, n->right_keys)) {
        out.node = lineage::make_hash_join(l.node, r.node, n->left_keys, n->right_keys);
        return out;
      }
      std::optional<int> hint;
      if (o.join_hints) {
        if (l.filtered != r.filtered) {
          hint = l.filtered ? 0 : 1;
        } else if (l.bytes != r.bytes && l.bytes > 0 && r.bytes > 0) {
          hint = l.bytes < r.bytes ? 0 : 1;
        }
      }
      auto el = lineage::with_label(
          lineage::make_exchange(l.node, key_columns(l.node->schema, n->left_keys), o.shuffle_partitions),
          "shuffle " + ln);
      auto er = lineage::with_label(
          lineage::make_exchange(r.node, key_columns(r.node->schema, n->right_keys), o.shuffle_partitions),
          "shuffle " + rn);
      out.node = lineage::with_label(
          lineage::make_deferred_join(el, er, n->left_keys, n->right_keys, hint), "join " + ln + "," + rn);
      return out;
    }
    case LogicalKind::kSort: {
      Lowered out = lower_node(n->children[0], o);
      out.node = lineage::make_sort(n->per_partition ? out.node : gather(out.node), n->sort_keys);
      return out;
    }
    case LogicalKind::kLimit: {
      Lowered out = lower_node(n->children[0], o);
      out.node = lineage::make_limit(n->per_partition ? out.node : gather(out.node), n->limit);
      return out;
    }
  }
  fail(ErrorCode::kInternal, "unhandled logical operator");
}

}  // namespace

NodePtr lower(const LogicalPtr& plan, const PhysicalOptions& options) {
  if (options.shuffle_partitions == 0) fail(ErrorCode::kInvalidArgument, "shuffle_partitions must be positive");
  return lower_node(plan, options).node;
}

std::string explain_physical(const NodePtr& root) {
  auto graph = engine::plan_stages(root);
  std::map<uint64_t, size_t> number;
  for (size_t i = 0; i < graph.stages.size(); ++i) number[graph.stages[i].key()] = i;

  // Stages behind a cached dataset only run if it is lost; leave them out.
  std::set<uint64_t> shown;
  std::function<void(const engine::Stage&)> reach = [&](const engine::Stage& s) {
    if (!shown.insert(s.key()).second) return;
    for (const auto& d : s.deps) {
      if (!d.guard) reach(*graph.find(d.exchange));
    }
  };
  reach(graph.result());

  std::string out;
  std::function<void(const NodePtr&, int)> walk = [&](const NodePtr& n, int depth) {
    out += std::string(static_cast<size_t>(depth) * 2, ' ');
    if (n->kind == OpKind::kExchange) {
      out += "<- stage " + std::to_string(number[n->id]) + " (" + (n->label.empty() ? "shuffle" : n->label) + ")\n";
      return;
    }
    out += lineage::describe_node(*n) + "\n";
    if (n->persisted()) return;
    for (const auto& p : n->parents) walk(p, depth + 1);
  };
  for (const auto& s : graph.stages) {
    if (!shown.count(s.key())) continue;
    out += "Stage " + std::to_string(number[s.key()]) + " " + s.label() + " (" +
           (s.kind == engine::StageKind::kResult ? "result" : "map") + ", " + std::to_string(s.task_count) +
           " tasks)\n";
    if (s.kind == engine::StageKind::kShuffleMap) {
      out += "  " + lineage::describe_node(*s.output) + "\n";
      walk(s.pipeline, 2);
    } else {
      walk(s.pipeline, 1);
    }
  }
  return out;
}

}  // namespace ember::sql
