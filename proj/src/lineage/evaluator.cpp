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

#include "lineage/evaluator.hpp"

#include "common/error.hpp"
#include "lineage/kernels.hpp"

namespace ember::lineage {

namespace {

RowBatchPtr share(RowBatch rows) { return std::make_shared<const RowBatch>(std::move(rows)); }

RowBatchPtr empty_batch() {
  static const RowBatchPtr empty = std::make_shared<const RowBatch>();
  return empty;
}

}  // namespace

RowBatchPtr StoredPartition::materialize() const {
  if (rows) return rows;
  if (columnar) return share(columnar->decode());
  return empty_batch();
}

size_t StoredPartition::row_count() const {
  if (rows) return rows->size();
  return columnar ? columnar->row_count() : 0;
}

size_t StoredPartition::byte_size() const {
  if (columnar) return columnar->encoded_bytes();
  size_t n = 0;
  if (rows) {
    for (const auto& r : *rows) n += row_byte_size(r);
  }
  return n;
}

StoredPartition store_rows(const DatasetNode& node, RowBatchPtr rows) {
  StoredPartition p;
  if (node.storage == StorageLevel::kColumnar) {
    p.columnar = storage::build_partition(*rows, node.schema);
  } else {
    p.rows = std::move(rows);
  }
  return p;
}

RowBatchPtr Evaluator::compute(const NodePtr& node, size_t index) {
  if (index >= node->partition_count) {
    fail(ErrorCode::kInternal, "partition " + std::to_string(index) + " out of range for " +
                                   describe_node(*node));
  }
  auto key = std::make_pair(node->id, index);
  if (auto it = memo_.find(key); it != memo_.end()) return it->second;
  RowBatchPtr out = run(node, index);
  memo_.emplace(key, out);
  return out;
}

RowBatchPtr Evaluator::run(const NodePtr& node, size_t index) {
  if (node->persisted()) {
    if (auto hit = store_.find(*node, index)) {
      counters_.rows_in += hit->row_count();
      return hit->materialize();
    }
  }
  ++counters_.computed[node->id];
  const auto parent = [&](size_t i) { return compute(node->parents.at(i), index); };
  RowBatchPtr out;
  switch (node->kind) {
    case OpKind::kSource: {
      out = node->as<SourceSpec>().snapshot->read(index);
      counters_.rows_in += out->size();
      break;
    }
    case OpKind::kMap:
      out = share(apply_map(*parent(0), node->as<MapSpec>(), node->parents[0]->schema));
      break;
    case OpKind::kFilter:
      out = share(apply_filter(*parent(0), node->as<FilterSpec>().predicate));
      break;
    case OpKind::kProject:
      out = node->persisted() ? parent(0) : share(apply_project(*parent(0), node->as<ProjectSpec>().exprs));
      if (node->persisted()) {
        // The persisted identity projection may still rename; rows are unchanged.
        const auto& exprs = node->as<ProjectSpec>().exprs;
        bool identity = exprs.size() == node->parents[0]->schema.size();
        for (size_t i = 0; identity && i < exprs.size(); ++i) {
          identity = exprs[i]->kind == ExprKind::kColumn && exprs[i]->column == i;
        }
        if (!identity) out = share(apply_project(*out, exprs));
      }
      break;
    case OpKind::kExchange: {
      RowBatch rows;
      for (const auto& bucket : store_.shuffle_input(*node, index)) {
        counters_.rows_in += bucket->size();
        rows.insert(rows.end(), bucket->begin(), bucket->end());
      }
      out = share(std::move(rows));
      break;
    }
    case OpKind::kLocalAggregate:
      out = share(local_aggregate(*parent(0), node->as<AggregateSpec>()));
      break;
    case OpKind::kMergeAggregate:
      out = share(merge_aggregate(*parent(0), node->as<AggregateSpec>()));
      break;
    case OpKind::kHashJoinLocal: {
      const auto& j = node->as<JoinSpec>();
      out = share(hash_join(*parent(0), *parent(1), j.left_keys, j.right_keys));
      break;
    }
    case OpKind::kDeferredJoin: {
      const auto& j = node->as<DeferredJoinSpec>();
      out = share(hash_join(*parent(0), *parent(1), j.left_keys, j.right_keys));
      break;
    }
    case OpKind::kBroadcastJoin: {
      const NodePtr& build = node->parents.at(1);
      RowBatch gathered;
      for (size_t b = 0; b < build->partition_count; ++b) {
        auto part = compute(build, b);
        gathered.insert(gathered.end(), part->begin(), part->end());
      }
      out = share(broadcast_join(*parent(0), gathered, node->as<BroadcastSpec>()));
      break;
    }
    case OpKind::kLimit:
      out = share(apply_limit(*parent(0), node->as<LimitSpec>().n));
      break;
    case OpKind::kCoalesce: {
      const auto& c = node->as<CoalesceSpec>();
      RowBatch rows;
      for (size_t i = 0; i < c.assignment.size(); ++i) {
        if (c.assignment[i] != index) continue;
        auto part = compute(node->parents[0], i);
        rows.insert(rows.end(), part->begin(), part->end());
      }
      out = share(std::move(rows));
      break;
    }
    case OpKind::kSort: {
      RowBatch rows = *parent(0);
      sort_rows(rows, node->as<SortSpec>().keys);
      out = share(std::move(rows));
      break;
    }
    case OpKind::kPrune:
      out = node->as<PruneSpec>().keep[index] ? parent(0) : empty_batch();
      break;
  }
  if (node->persisted()) {
    StoredPartition stored = store_rows(*node, out);
    store_.publish(*node, index, stored);
    counters_.persisted.emplace_back(node->id, index);
  }
  return out;
}

std::optional<StoredPartition> LocalPartitionCache::find(const DatasetNode& node, size_t index) {
  std::lock_guard lock(mu_);
  auto it = partitions_.find({node.id, index});
  if (it == partitions_.end()) return std::nullopt;
  return it->second;
}

void LocalPartitionCache::publish(const DatasetNode& node, size_t index, const StoredPartition& part) {
  std::lock_guard lock(mu_);
  partitions_[{node.id, index}] = part;
}

std::vector<RowBatchPtr> LocalPartitionCache::shuffle_input(const DatasetNode& exchange, size_t reduce) {
  {
    std::lock_guard lock(mu_);
    if (auto it = shuffles_.find(exchange.id); it != shuffles_.end()) {
      std::vector<RowBatchPtr> out;
      for (const auto& buckets : it->second) out.push_back(buckets.at(reduce));
      return out;
    }
  }
  // Run every map task of the exchange once and keep the buckets.
  const NodePtr& parent = exchange.parents.at(0);
  const auto& spec = exchange.as<ExchangeSpec>();
  std::vector<std::vector<RowBatchPtr>> maps;
  for (size_t m = 0; m < parent->partition_count; ++m) {
    Evaluator ev(*this);
    auto rows = ev.compute(parent, m);
    note(ev.counters());
    std::vector<RowBatchPtr> buckets;
    for (auto& b : hash_partition(*rows, spec.keys, spec.reducers)) buckets.push_back(share(std::move(b)));
    maps.push_back(std::move(buckets));
  }
  std::lock_guard lock(mu_);
  auto& slot = shuffles_[exchange.id];
  slot = std::move(maps);
  std::vector<RowBatchPtr> out;
  for (const auto& buckets : slot) out.push_back(buckets.at(reduce));
  return out;
}

bool LocalPartitionCache::evict(uint64_t node_id, size_t index) {
  std::lock_guard lock(mu_);
  return partitions_.erase({node_id, index}) > 0;
}

void LocalPartitionCache::evict_shuffle(uint64_t exchange_id) {
  std::lock_guard lock(mu_);
  shuffles_.erase(exchange_id);
}

bool LocalPartitionCache::resident(uint64_t node_id, size_t index) const {
  std::lock_guard lock(mu_);
  return partitions_.count({node_id, index}) > 0;
}

size_t LocalPartitionCache::computed(uint64_t node_id) const {
  std::lock_guard lock(mu_);
  auto it = computed_.find(node_id);
  return it == computed_.end() ? 0 : it->second;
}

void LocalPartitionCache::note(const EvalCounters& c) {
  std::lock_guard lock(mu_);
  for (const auto& [id, n] : c.computed) computed_[id] += n;
}

RowBatchPtr recompute_partition(const NodePtr& node, size_t index, PartitionStore& store) {
  Evaluator ev(store);
  auto out = ev.compute(node, index);
  if (auto* local = dynamic_cast<LocalPartitionCache*>(&store)) local->note(ev.counters());
  return out;
}

RowBatch collect(const NodePtr& node, PartitionStore& store) {
  Evaluator ev(store);
  RowBatch out;
  for (size_t i = 0; i < node->partition_count; ++i) {
    auto part = ev.compute(node, i);
    out.insert(out.end(), part->begin(), part->end());
  }
  if (auto* local = dynamic_cast<LocalPartitionCache*>(&store)) local->note(ev.counters());
  return out;
}

}  // namespace ember::lineage
