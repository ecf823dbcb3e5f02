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

#include "lineage/node.hpp"

#include <atomic>
#include <functional>
#include <set>

#include "common/error.hpp"

namespace ember::lineage {

namespace {

std::shared_ptr<DatasetNode> fresh(OpKind kind, OpSpec spec, std::vector<NodePtr> parents) {
  auto n = std::make_shared<DatasetNode>();
  n->id = next_node_id();
  n->kind = kind;
  n->spec = std::move(spec);
  n->parents = std::move(parents);
  return n;
}

void require(const NodePtr& p) {
  if (!p) fail(ErrorCode::kInternal, "null parent node");
}

std::optional<HashPartitioning> keep_if(const NodePtr& parent) { return parent->partitioning; }

std::optional<size_t> column_ref(const Expr& e) {
  if (e && e->kind == ExprKind::kColumn) return e->column;
  return std::nullopt;
}

void check_keys(const Schema& s, const std::vector<size_t>& keys) {
  for (size_t k : keys) {
    if (k >= s.size()) fail(ErrorCode::kInternal, "join key out of range");
  }
}

std::vector<Column> joined_columns(const Schema& l, const Schema& r) {
  std::vector<Column> cols = l.columns();
  cols.insert(cols.end(), r.columns().begin(), r.columns().end());
  return cols;
}

}  // namespace

const char* op_name(OpKind kind) {
  switch (kind) {
    case OpKind::kSource: return "Source";
    case OpKind::kMap: return "Map";
    case OpKind::kFilter: return "Filter";
    case OpKind::kProject: return "Project";
    case OpKind::kExchange: return "ShuffleExchange";
    case OpKind::kLocalAggregate: return "LocalAggregate";
    case OpKind::kMergeAggregate: return "MergeAggregate";
    case OpKind::kHashJoinLocal: return "HashJoinLocal";
    case OpKind::kBroadcastJoin: return "BroadcastJoin";
    case OpKind::kLimit: return "Limit";
    case OpKind::kCoalesce: return "Coalesce";
    case OpKind::kSort: return "Sort";
    case OpKind::kPrune: return "Prune";
    case OpKind::kDeferredJoin: return "DeferredJoin";
  }
  return "?";
}

const char* agg_name(AggFunc f) {
  switch (f) {
    case AggFunc::kCountStar:
    case AggFunc::kCount: return "COUNT";
    case AggFunc::kSum: return "SUM";
    case AggFunc::kAvg: return "AVG";
    case AggFunc::kMin: return "MIN";
    case AggFunc::kMax: return "MAX";
  }
  return "?";
}

bool DatasetNode::narrow() const {
  switch (kind) {
    case OpKind::kMap:
    case OpKind::kFilter:
    case OpKind::kProject:
    case OpKind::kLocalAggregate:
    case OpKind::kMergeAggregate:
    case OpKind::kHashJoinLocal:
    case OpKind::kLimit:
    case OpKind::kSort:
    case OpKind::kPrune:
      return true;
    default:
      return false;
  }
}

uint64_t next_node_id() {
  static std::atomic<uint64_t> next{1};
  return next.fetch_add(1);
}

NodePtr make_source(SnapshotPtr snapshot, std::string label) {
  if (!snapshot) fail(ErrorCode::kInternal, "null snapshot");
  auto n = fresh(OpKind::kSource, SourceSpec{snapshot}, {});
  n->schema = snapshot->schema();
  n->partition_count = snapshot->partition_count();
  n->label = label.empty() ? snapshot->describe() : std::move(label);
  return n;
}

NodePtr make_map(NodePtr parent, std::string function, std::string params) {
  require(parent);
  const RowFunction& fn = FunctionRegistry::global().get(function);
  Schema out = fn.bind(parent->schema, params);
  out.validate();
  auto n = fresh(OpKind::kMap, MapSpec{function, params, fn.granularity}, {parent});
  n->schema = std::move(out);
  n->partition_count = parent->partition_count;
  return n;
}

NodePtr make_filter(NodePtr parent, Expr predicate) {
  require(parent);
  if (predicate->type != Type::kBoolean && !predicate->null_literal) {
    fail(ErrorCode::kTypeMismatch, "filter predicate must be boolean");
  }
  auto n = fresh(OpKind::kFilter, FilterSpec{std::move(predicate)}, {parent});
  n->schema = parent->schema;
  n->partition_count = parent->partition_count;
  n->partitioning = keep_if(parent);
  return n;
}

NodePtr make_project(NodePtr parent, std::vector<Expr> exprs, std::vector<std::string> names) {
  require(parent);
  if (names.size() != exprs.size()) fail(ErrorCode::kInternal, "project names/exprs mismatch");
  std::vector<Column> cols;
  for (size_t i = 0; i < exprs.size(); ++i) {
    // An untyped NULL projects as a nullable Int64 column.
    cols.push_back({names[i], exprs[i]->null_literal ? Type::kInt64 : exprs[i]->type});
  }
  auto n = fresh(OpKind::kProject, ProjectSpec{exprs}, {parent});
  n->schema = Schema(std::move(cols));
  n->partition_count = parent->partition_count;
  if (parent->partitioning) {
    HashPartitioning hp{{}, parent->partitioning->count};
    for (size_t key : parent->partitioning->columns) {
      for (size_t i = 0; i < exprs.size(); ++i) {
        if (column_ref(exprs[i]) == key) {
          hp.columns.push_back(i);
          break;
        }
      }
    }
    if (hp.columns.size() == parent->partitioning->columns.size()) n->partitioning = hp;
  }
  return n;
}

NodePtr make_exchange(NodePtr parent, std::vector<Expr> keys, size_t reducers) {
  require(parent);
  if (reducers == 0) fail(ErrorCode::kInvalidArgument, "reducer count must be positive");
  auto n = fresh(OpKind::kExchange, ExchangeSpec{keys, reducers}, {parent});
  n->schema = parent->schema;
  n->partition_count = reducers;
  HashPartitioning hp{{}, reducers};
  for (const auto& k : keys) {
    if (auto c = column_ref(k)) hp.columns.push_back(*c);
  }
  if (!keys.empty() && hp.columns.size() == keys.size()) n->partitioning = hp;
  return n;
}

std::vector<Column> partial_state_columns(const AggSpec& agg, size_t index) {
  std::string base = "a" + std::to_string(index);
  switch (agg.func) {
    case AggFunc::kCountStar:
    case AggFunc::kCount: return {{base, Type::kInt64}};
    case AggFunc::kSum:
    case AggFunc::kMin:
    case AggFunc::kMax: return {{base, agg.result_type}};
    case AggFunc::kAvg: return {{base + "_sum", Type::kFloat64}, {base + "_n", Type::kInt64}};
  }
  return {};
}

NodePtr make_local_aggregate(NodePtr parent, std::vector<Expr> keys, std::vector<AggSpec> aggs,
                             AggMode mode) {
  require(parent);
  if (mode != AggMode::kPartial && mode != AggMode::kPassthrough) {
    fail(ErrorCode::kInternal, "bad local aggregate mode");
  }
  std::vector<Column> cols;
  for (size_t i = 0; i < keys.size(); ++i) {
    cols.push_back({"k" + std::to_string(i), keys[i]->null_literal ? Type::kInt64 : keys[i]->type});
  }
  for (size_t i = 0; i < aggs.size(); ++i) {
    if (mode == AggMode::kPartial) {
      if (aggs[i].distinct) fail(ErrorCode::kInternal, "DISTINCT needs passthrough aggregation");
      for (auto& c : partial_state_columns(aggs[i], i)) cols.push_back(c);
    } else if (aggs[i].arg) {
      cols.push_back({"a" + std::to_string(i), aggs[i].arg->null_literal ? Type::kInt64 : aggs[i].arg->type});
    }
  }
  size_t key_count = keys.size();
  auto n = fresh(OpKind::kLocalAggregate, AggregateSpec{std::move(keys), key_count, std::move(aggs), mode},
                 {parent});
  n->schema = Schema(std::move(cols));
  n->partition_count = parent->partition_count;
  return n;
}

NodePtr make_merge_aggregate(NodePtr parent, size_t key_count, std::vector<AggSpec> aggs,
                             AggMode mode) {
  require(parent);
  if (mode != AggMode::kMerge && mode != AggMode::kComplete) {
    fail(ErrorCode::kInternal, "bad merge aggregate mode");
  }
  if (key_count > parent->schema.size()) fail(ErrorCode::kInternal, "merge key count too large");
  std::vector<Column> cols(parent->schema.columns().begin(),
                           parent->schema.columns().begin() + static_cast<std::ptrdiff_t>(key_count));
  for (size_t i = 0; i < aggs.size(); ++i) cols.push_back({"a" + std::to_string(i), aggs[i].result_type});
  auto n = fresh(OpKind::kMergeAggregate, AggregateSpec{{}, key_count, std::move(aggs), mode}, {parent});
  n->schema = Schema(std::move(cols));
  n->partition_count = parent->partition_count;
  if (parent->partitioning) {
    std::vector<size_t> leading(key_count);
    for (size_t i = 0; i < key_count; ++i) leading[i] = i;
    if (key_count > 0 && parent->partitioning->columns == leading) n->partitioning = parent->partitioning;
  }
  return n;
}

NodePtr make_hash_join(NodePtr left, NodePtr right, std::vector<size_t> left_keys,
                       std::vector<size_t> right_keys) {
  require(left);
  require(right);
  check_keys(left->schema, left_keys);
  check_keys(right->schema, right_keys);
  if (left->partition_count != right->partition_count) {
    fail(ErrorCode::kPlan, "local join inputs differ in partition count");
  }
  auto n = fresh(OpKind::kHashJoinLocal, JoinSpec{left_keys, right_keys}, {left, right});
  n->schema = Schema(joined_columns(left->schema, right->schema));
  n->partition_count = left->partition_count;
  n->partitioning = left->partitioning;
  return n;
}

NodePtr make_broadcast_join(NodePtr probe, NodePtr build, std::vector<size_t> left_keys,
                            std::vector<size_t> right_keys, bool build_is_left) {
  require(probe);
  require(build);
  const NodePtr& left = build_is_left ? build : probe;
  const NodePtr& right = build_is_left ? probe : build;
  check_keys(left->schema, left_keys);
  check_keys(right->schema, right_keys);
  auto n = fresh(OpKind::kBroadcastJoin, BroadcastSpec{left_keys, right_keys, build_is_left},
                 {probe, build});
  n->schema = Schema(joined_columns(left->schema, right->schema));
  n->partition_count = probe->partition_count;
  if (probe->partitioning) {
    HashPartitioning hp = *probe->partitioning;
    if (build_is_left) {
      for (auto& c : hp.columns) c += left->schema.size();
    }
    n->partitioning = hp;
  }
  return n;
}

NodePtr make_limit(NodePtr parent, size_t limit) {
  require(parent);
  auto n = fresh(OpKind::kLimit, LimitSpec{limit}, {parent});
  n->schema = parent->schema;
  n->partition_count = parent->partition_count;
  n->partitioning = keep_if(parent);
  return n;
}

NodePtr make_coalesce(NodePtr parent, std::vector<size_t> assignment, size_t count) {
  require(parent);
  if (assignment.size() != parent->partition_count) {
    fail(ErrorCode::kInternal, "coalesce assignment does not cover the parent");
  }
  if (count == 0) fail(ErrorCode::kInternal, "coalesce to zero partitions");
  for (size_t a : assignment) {
    if (a >= count) fail(ErrorCode::kInternal, "coalesce target out of range");
  }
  auto n = fresh(OpKind::kCoalesce, CoalesceSpec{std::move(assignment), count}, {parent});
  n->schema = parent->schema;
  n->partition_count = count;
  return n;
}

NodePtr make_sort(NodePtr parent, std::vector<SortKey> keys) {
  require(parent);
  for (const auto& k : keys) {
    if (k.column >= parent->schema.size()) fail(ErrorCode::kInternal, "sort key out of range");
  }
  auto n = fresh(OpKind::kSort, SortSpec{std::move(keys)}, {parent});
  n->schema = parent->schema;
  n->partition_count = parent->partition_count;
  n->partitioning = keep_if(parent);
  return n;
}

NodePtr make_prune(NodePtr parent, std::vector<bool> keep) {
  require(parent);
  if (keep.size() != parent->partition_count) fail(ErrorCode::kInternal, "prune mask size mismatch");
  auto n = fresh(OpKind::kPrune, PruneSpec{std::move(keep)}, {parent});
  n->schema = parent->schema;
  n->partition_count = parent->partition_count;
  n->partitioning = keep_if(parent);
  return n;
}

NodePtr make_deferred_join(NodePtr left_exchange, NodePtr right_exchange,
                           std::vector<size_t> left_keys, std::vector<size_t> right_keys,
                           std::optional<int> small_hint) {
  require(left_exchange);
  require(right_exchange);
  if (left_exchange->kind != OpKind::kExchange || right_exchange->kind != OpKind::kExchange) {
    fail(ErrorCode::kInternal, "deferred join needs exchange inputs");
  }
  if (left_exchange->partition_count != right_exchange->partition_count) {
    fail(ErrorCode::kInternal, "deferred join exchanges differ in reducer count");
  }
  check_keys(left_exchange->schema, left_keys);
  check_keys(right_exchange->schema, right_keys);
  auto n = fresh(OpKind::kDeferredJoin, DeferredJoinSpec{left_keys, right_keys, small_hint},
                 {left_exchange, right_exchange});
  n->schema = Schema(joined_columns(left_exchange->schema, right_exchange->schema));
  n->partition_count = left_exchange->partition_count;
  return n;
}

NodePtr make_persist(NodePtr parent, StorageLevel level, std::string label) {
  require(parent);
  std::vector<Expr> exprs;
  std::vector<std::string> names;
  for (size_t i = 0; i < parent->schema.size(); ++i) {
    exprs.push_back(make_column(i, parent->schema[i].type, parent->schema[i].name));
    names.push_back(parent->schema[i].name);
  }
  auto base = make_project(parent, std::move(exprs), std::move(names));
  auto n = std::make_shared<DatasetNode>(*base);
  n->storage = level;
  n->label = std::move(label);
  return n;
}

NodePtr with_label(const NodePtr& node, std::string label) {
  require(node);
  auto n = std::make_shared<DatasetNode>(*node);
  n->label = std::move(label);
  return n;
}

std::vector<NodePtr> lineage_closure(const NodePtr& root) {
  std::vector<NodePtr> order;
  std::map<uint64_t, int> state;  // 1 = on stack, 2 = done
  std::function<void(const NodePtr&)> visit = [&](const NodePtr& n) {
    int& s = state[n->id];
    if (s == 2) return;
    if (s == 1) fail(ErrorCode::kCycleDetected, "lineage graph has a cycle at node " + std::to_string(n->id));
    s = 1;
    for (const auto& p : n->parents) visit(p);
    state[n->id] = 2;
    order.push_back(n);
  };
  visit(root);
  return order;
}

NodePtr with_parents(const DatasetNode& node, std::vector<NodePtr> parents) {
  NodePtr out;
  switch (node.kind) {
    case OpKind::kSource:
      out = make_source(node.as<SourceSpec>().snapshot, node.label);
      break;
    case OpKind::kMap:
      out = make_map(parents.at(0), node.as<MapSpec>().function, node.as<MapSpec>().params);
      break;
    case OpKind::kFilter:
      out = make_filter(parents.at(0), node.as<FilterSpec>().predicate);
      break;
    case OpKind::kProject: {
      std::vector<std::string> names;
      for (const auto& c : node.schema) names.push_back(c.name);
      out = make_project(parents.at(0), node.as<ProjectSpec>().exprs, names);
      break;
    }
    case OpKind::kExchange:
      out = make_exchange(parents.at(0), node.as<ExchangeSpec>().keys, node.as<ExchangeSpec>().reducers);
      break;
    case OpKind::kLocalAggregate: {
      const auto& a = node.as<AggregateSpec>();
      out = make_local_aggregate(parents.at(0), a.keys, a.aggs, a.mode);
      break;
    }
    case OpKind::kMergeAggregate: {
      const auto& a = node.as<AggregateSpec>();
      out = make_merge_aggregate(parents.at(0), a.key_count, a.aggs, a.mode);
      break;
    }
    case OpKind::kHashJoinLocal: {
      const auto& j = node.as<JoinSpec>();
      out = make_hash_join(parents.at(0), parents.at(1), j.left_keys, j.right_keys);
      break;
    }
    case OpKind::kBroadcastJoin: {
      const auto& b = node.as<BroadcastSpec>();
      out = make_broadcast_join(parents.at(0), parents.at(1), b.left_keys, b.right_keys, b.build_is_left);
      break;
    }
    case OpKind::kLimit:
      out = make_limit(parents.at(0), node.as<LimitSpec>().n);
      break;
    case OpKind::kCoalesce: {
      const auto& c = node.as<CoalesceSpec>();
      if (parents.at(0)->partition_count == c.assignment.size()) {
        out = make_coalesce(parents.at(0), c.assignment, c.count);
      } else {
        // The parent's partition count changed; gather everything into one.
        out = make_coalesce(parents.at(0), std::vector<size_t>(parents.at(0)->partition_count, 0), 1);
      }
      break;
    }
    case OpKind::kSort:
      out = make_sort(parents.at(0), node.as<SortSpec>().keys);
      break;
    case OpKind::kPrune:
      out = make_prune(parents.at(0), node.as<PruneSpec>().keep);
      break;
    case OpKind::kDeferredJoin: {
      const auto& d = node.as<DeferredJoinSpec>();
      out = make_deferred_join(parents.at(0), parents.at(1), d.left_keys, d.right_keys, d.small_hint);
      break;
    }
  }
  if (node.persisted() || !node.label.empty()) {
    auto copy = std::make_shared<DatasetNode>(*out);
    copy->storage = node.storage;
    copy->label = node.label;
    // A persisted dataset keeps its identity across plan rewrites: the rows
    // are the same, so resident partitions stay valid.
    if (node.persisted()) copy->id = node.id;
    out = copy;
  }
  return out;
}

NodePtr rewrite(const NodePtr& root, const std::map<uint64_t, NodePtr>& replacements) {
  std::map<uint64_t, NodePtr> done;
  std::function<NodePtr(const NodePtr&)> visit = [&](const NodePtr& n) -> NodePtr {
    if (auto r = replacements.find(n->id); r != replacements.end()) return r->second;
    if (auto d = done.find(n->id); d != done.end()) return d->second;
    std::vector<NodePtr> parents;
    bool changed = false;
    for (const auto& p : n->parents) {
      parents.push_back(visit(p));
      changed = changed || parents.back() != p;
    }
    NodePtr out = changed ? with_parents(*n, std::move(parents)) : n;
    done[n->id] = out;
    return out;
  };
  return visit(root);
}

std::string describe_node(const DatasetNode& n) {
  std::string out = op_name(n.kind);
  switch (n.kind) {
    case OpKind::kSource:
      out += " " + n.label;
      break;
    case OpKind::kMap:
      out += " " + n.as<MapSpec>().function;
      break;
    case OpKind::kFilter:
      out += " " + expr_to_string(n.as<FilterSpec>().predicate);
      break;
    case OpKind::kProject: {
      if (n.persisted()) {
        out = std::string(n.storage == StorageLevel::kColumnar ? "Cached " : "Stored ") + n.label;
        break;
      }
      out += " ";
      const auto& p = n.as<ProjectSpec>();
      for (size_t i = 0; i < p.exprs.size(); ++i) {
        if (i) out += ", ";
        out += expr_to_string(p.exprs[i]);
      }
      break;
    }
    case OpKind::kExchange: {
      const auto& e = n.as<ExchangeSpec>();
      out += " keys=[";
      for (size_t i = 0; i < e.keys.size(); ++i) {
        if (i) out += ", ";
        out += expr_to_string(e.keys[i]);
      }
      out += "] reducers=" + std::to_string(e.reducers);
      break;
    }
    case OpKind::kLocalAggregate:
    case OpKind::kMergeAggregate: {
      const auto& a = n.as<AggregateSpec>();
      out += " keys=" + std::to_string(a.key_count) + " aggs=[";
      for (size_t i = 0; i < a.aggs.size(); ++i) {
        if (i) out += ", ";
        out += agg_name(a.aggs[i].func);
        if (a.aggs[i].distinct) out += " DISTINCT";
      }
      out += "]";
      break;
    }
    case OpKind::kBroadcastJoin:
      out += n.as<BroadcastSpec>().build_is_left ? " build=left" : " build=right";
      break;
    case OpKind::kLimit:
      out += " " + std::to_string(n.as<LimitSpec>().n);
      break;
    case OpKind::kCoalesce:
      out += " -> " + std::to_string(n.as<CoalesceSpec>().count);
      break;
    case OpKind::kPrune: {
      size_t kept = 0;
      for (bool k : n.as<PruneSpec>().keep) kept += k;
      out += " scanned=" + std::to_string(kept) + " pruned=" +
             std::to_string(n.as<PruneSpec>().keep.size() - kept);
      break;
    }
    case OpKind::kDeferredJoin: {
      const auto& d = n.as<DeferredJoinSpec>();
      out += " strategy=pending";
      if (d.small_hint) out += std::string(" hint=") + (*d.small_hint == 0 ? "left" : "right");
      break;
    }
    default:
      break;
  }
  out += " partitions=" + std::to_string(n.partition_count);
  return out;
}

}  // namespace ember::lineage
