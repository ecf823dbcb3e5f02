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

#include "engine/adaptive.hpp"

#include "common/error.hpp"

namespace ember::engine {

using lineage::DeferredJoinSpec;
using lineage::NodePtr;
using lineage::OpKind;

const char* join_mode_name(JoinMode mode) {
  switch (mode) {
    case JoinMode::kAuto: return "auto";
    case JoinMode::kShuffle: return "shuffle";
    case JoinMode::kMap: return "map";
  }
  return "?";
}

JoinMode parse_join_mode(const std::string& text) {
  if (text == "auto") return JoinMode::kAuto;
  if (text == "shuffle") return JoinMode::kShuffle;
  if (text == "map") return JoinMode::kMap;
  fail(ErrorCode::kInvalidArgument, "join_strategy must be auto, shuffle or map, got '" + text + "'");
}

namespace {

std::string join_name(const lineage::DatasetNode& join) {
  return join.label.empty() ? "join" : join.label;
}

std::string bytes_text(uint64_t b) { return std::to_string(b) + "B"; }

}  // namespace

bool AdaptiveJoinHook::hold(const NodePtr& root, uint64_t exchange_id, const StatsView& stats) {
  if (options_.join_mode == JoinMode::kShuffle) return false;
  for (const auto& n : lineage::lineage_closure(root)) {
    if (n->kind != OpKind::kDeferredJoin) continue;
    const auto& spec = n->as<DeferredJoinSpec>();
    if (!spec.small_hint) continue;
    auto hinted = static_cast<size_t>(*spec.small_hint);
    const NodePtr& small = n->parents[hinted];
    const NodePtr& other = n->parents[1 - hinted];
    if (other->id == exchange_id && !released_.count(small->id) && !stats.complete(small->id)) return true;
  }
  return false;
}

NodePtr AdaptiveJoinHook::after_stage(const NodePtr& root, uint64_t exchange_id, const StatsView& stats) {
  for (const auto& n : lineage::lineage_closure(root)) {
    if (n->kind != OpKind::kDeferredJoin) continue;
    if (n->parents[0]->id != exchange_id && n->parents[1]->id != exchange_id) continue;
    if (NodePtr next = resolve_join(root, n, exchange_id, stats)) return next;
  }
  if (options_.binpack_aggregates) return coalesce_aggregate(root, exchange_id, stats);
  return nullptr;
}

NodePtr AdaptiveJoinHook::resolve_join(const NodePtr& root, const NodePtr& join, uint64_t exchange_id,
                                       const StatsView& stats) {
  const auto& spec = join->as<DeferredJoinSpec>();
  const NodePtr& left = join->parents[0];
  const NodePtr& right = join->parents[1];
  std::string name = join_name(*join);

  if (spec.small_hint && options_.join_mode != JoinMode::kShuffle) {
    auto hinted = static_cast<size_t>(*spec.small_hint);
    const NodePtr& small = join->parents[hinted];
    const NodePtr& other = join->parents[1 - hinted];
    if (small->id == exchange_id && !stats.complete(other->id) && !released_.count(small->id)) {
      auto gs = stats.stats(small->id);
      bool fits = pde::fits_broadcast(gs, options_.broadcast_threshold);
      if (fits || options_.join_mode == JoinMode::kMap) {
        try {
          auto bj = lineage::make_broadcast_join(other->parents.at(0), small, spec.left_keys, spec.right_keys,
                                                 hinted == 0);
          NodePtr next = lineage::rewrite(root, {{join->id, bj}});
          decisions_.push_back(name + ": MapJoin broadcast=" + pde::side_name(hinted ? pde::JoinSide::kRight : pde::JoinSide::kLeft) +
                               " est=" + bytes_text(gs.total_bytes()) + " skipped " +
                               pde::side_name(hinted ? pde::JoinSide::kLeft : pde::JoinSide::kRight) + " exchange");
          return next;
        } catch (const Error&) {
          // Downstream operators need the shuffled layout; fall through.
        }
      }
      released_.insert(small->id);
      decisions_.push_back(name + ": " + pde::side_name(hinted ? pde::JoinSide::kRight : pde::JoinSide::kLeft) +
                           " side est=" + bytes_text(gs.total_bytes()) + " exceeds threshold, shuffling both");
      return nullptr;
    }
  }

  if (!stats.complete(left->id) || !stats.complete(right->id)) return nullptr;
  auto ls = stats.stats(left->id);
  auto rs = stats.stats(right->id);
  pde::JoinStrategy strategy;
  switch (options_.join_mode) {
    case JoinMode::kAuto:
      strategy = pde::select_join_strategy(ls, rs, options_.broadcast_threshold, options_.reducers);
      break;
    case JoinMode::kMap:
      strategy.kind = pde::JoinStrategy::Kind::kMap;
      strategy.broadcast = rs.total_bytes() < ls.total_bytes() ? pde::JoinSide::kRight : pde::JoinSide::kLeft;
      break;
    case JoinMode::kShuffle:
      strategy = pde::select_join_strategy(ls, rs, 0, options_.reducers);
      strategy.kind = pde::JoinStrategy::Kind::kShuffle;
      break;
  }

  NodePtr replacement;
  if (strategy.kind == pde::JoinStrategy::Kind::kMap) {
    bool build_left = strategy.broadcast == pde::JoinSide::kLeft;
    replacement = lineage::make_broadcast_join(build_left ? right : left, build_left ? left : right,
                                               spec.left_keys, spec.right_keys, build_left);
  } else if (strategy.coalesce && !strategy.coalesce->is_identity()) {
    const auto& plan = *strategy.coalesce;
    replacement = lineage::make_hash_join(lineage::make_coalesce(left, plan.assignment, plan.coarse_count),
                                          lineage::make_coalesce(right, plan.assignment, plan.coarse_count),
                                          spec.left_keys, spec.right_keys);
  } else {
    replacement = lineage::make_hash_join(left, right, spec.left_keys, spec.right_keys);
  }
  NodePtr next;
  try {
    next = lineage::rewrite(root, {{join->id, replacement}});
  } catch (const Error&) {
    // A coalesced or broadcast layout does not fit the consumers; keep the
    // plain shuffle join.
    replacement = lineage::make_hash_join(left, right, spec.left_keys, spec.right_keys);
    next = lineage::rewrite(root, {{join->id, replacement}});
    strategy = {};
  }
  decisions_.push_back(name + ": " + strategy.describe() + " left=" + bytes_text(ls.total_bytes()) +
                       " right=" + bytes_text(rs.total_bytes()) +
                       (options_.join_mode == JoinMode::kAuto ? "" : std::string(" forced=") +
                                                                          join_mode_name(options_.join_mode)));
  return next;
}

NodePtr AdaptiveJoinHook::coalesce_aggregate(const NodePtr& root, uint64_t exchange_id, const StatsView& stats) {
  auto closure = lineage::lineage_closure(root);
  NodePtr exchange;
  std::vector<NodePtr> consumers;
  for (const auto& n : closure) {
    if (n->id == exchange_id) exchange = n;
    for (const auto& p : n->parents) {
      if (p->id == exchange_id) consumers.push_back(n);
    }
    // Cached datasets keep their hash layout.
    if (n->persisted()) {
      for (const auto& m : lineage::lineage_closure(n)) {
        if (m->id == exchange_id) return nullptr;
      }
    }
  }
  if (!exchange || consumers.size() != 1 || consumers[0]->kind != OpKind::kMergeAggregate) return nullptr;
  auto gs = stats.stats(exchange_id);
  auto plan = pde::choose_reducer_count(gs.partition_bytes, options_.reducers.target_bytes_per_reducer,
                                        options_.reducers.min_reducers, options_.reducers.max_reducers);
  if (plan.is_identity() || plan.coarse_count >= exchange->partition_count) return nullptr;
  auto coalesced = lineage::make_coalesce(exchange, plan.assignment, plan.coarse_count);
  try {
    NodePtr next = lineage::rewrite(
        root, {{consumers[0]->id, lineage::with_parents(*consumers[0], {coalesced})}});
    std::string name = exchange->label.empty() ? "aggregate" : exchange->label;
    decisions_.push_back(name + ": coalesce " +
                         std::to_string(exchange->partition_count) + " -> " + std::to_string(plan.coarse_count) +
                         " reducers");
    return next;
  } catch (const Error&) {
    return nullptr;
  }
}

}  // namespace ember::engine
