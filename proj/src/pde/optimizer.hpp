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

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pde/runtime_stats.hpp"

namespace ember::pde {

inline constexpr uint64_t kDefaultBroadcastThreshold = 1 << 20;
inline constexpr uint64_t kDefaultTargetBytesPerReducer = 64 << 10;

enum class JoinSide { kLeft, kRight };
const char* side_name(JoinSide side);

struct CoalescePlan {
  std::vector<size_t> assignment;  // fine index -> coarse index
  size_t coarse_count = 1;

  bool is_identity() const;
  std::vector<uint64_t> bin_loads(std::span<const uint64_t> sizes) const;
};

// Longest-processing-time greedy: largest first (ties by lower index), each
// into the currently lightest bin (ties by lower bin index).
CoalescePlan lpt_assign(std::span<const uint64_t> sizes, size_t coarse_count);

// coarse_count = clamp(ceil(total / target), min, max), then LPT.
CoalescePlan choose_reducer_count(std::span<const uint64_t> sizes, uint64_t target_bytes_per_reducer,
                                  size_t min_reducers, size_t max_reducers);

struct JoinStrategy {
  enum class Kind { kShuffle, kMap } kind = Kind::kShuffle;
  JoinSide broadcast = JoinSide::kLeft;  // MapJoin only
  std::optional<CoalescePlan> coalesce;  // ShuffleJoin only, when bin-packing

  std::string describe() const;
};

struct ReducerOptions {
  uint64_t target_bytes_per_reducer = kDefaultTargetBytesPerReducer;
  size_t min_reducers = 1;
  size_t max_reducers = 16;
  bool binpack = false;
};

// MapJoin of the smaller side when it fits the threshold (ties broadcast the
// left side); otherwise ShuffleJoin.
JoinStrategy select_join_strategy(const GlobalStats& left, const GlobalStats& right,
                                  uint64_t broadcast_threshold, const ReducerOptions& reducers = {});

// Size rule used when only one side has run.
bool fits_broadcast(const GlobalStats& side, uint64_t broadcast_threshold);

struct JoinSchedule {
  // Side whose pre-shuffle stage runs first; empty means both run together.
  std::optional<JoinSide> first;
};

JoinSchedule schedule_join_inputs(std::optional<JoinSide> small_hint);

}  // namespace ember::pde
