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

#include "pde/optimizer.hpp"

#include <algorithm>
#include <numeric>

#include "common/error.hpp"

namespace ember::pde {

const char* side_name(JoinSide side) { return side == JoinSide::kLeft ? "left" : "right"; }

bool CoalescePlan::is_identity() const {
  if (coarse_count != assignment.size()) return false;
  for (size_t i = 0; i < assignment.size(); ++i) {
    if (assignment[i] != i) return false;
  }
  return true;
}

std::vector<uint64_t> CoalescePlan::bin_loads(std::span<const uint64_t> sizes) const {
  std::vector<uint64_t> loads(coarse_count, 0);
  for (size_t i = 0; i < assignment.size() && i < sizes.size(); ++i) loads[assignment[i]] += sizes[i];
  return loads;
}

CoalescePlan lpt_assign(std::span<const uint64_t> sizes, size_t coarse_count) {
  if (coarse_count == 0) fail(ErrorCode::kInvalidArgument, "coarse count must be positive");
  std::vector<size_t> order(sizes.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return sizes[a] > sizes[b]; });
  CoalescePlan plan;
  plan.coarse_count = coarse_count;
  plan.assignment.assign(sizes.size(), 0);
  std::vector<uint64_t> load(coarse_count, 0);
  for (size_t i : order) {
    size_t bin = static_cast<size_t>(std::min_element(load.begin(), load.end()) - load.begin());
    plan.assignment[i] = bin;
    load[bin] += sizes[i];
  }
  return plan;
}

CoalescePlan choose_reducer_count(std::span<const uint64_t> sizes, uint64_t target, size_t min_reducers,
                                  size_t max_reducers) {
  if (target == 0) fail(ErrorCode::kInvalidArgument, "target bytes per reducer must be positive");
  min_reducers = std::max<size_t>(min_reducers, 1);
  max_reducers = std::max(max_reducers, min_reducers);
  uint64_t total = 0;
  for (uint64_t s : sizes) total += s;
  uint64_t want = (total + target - 1) / target;
  size_t coarse = static_cast<size_t>(std::clamp<uint64_t>(want, min_reducers, max_reducers));
  return lpt_assign(sizes, coarse);
}

std::string JoinStrategy::describe() const {
  if (kind == Kind::kMap) return std::string("map_join(broadcast=") + side_name(broadcast) + ")";
  if (coalesce) return "shuffle_join(reducers=" + std::to_string(coalesce->coarse_count) + ")";
  return "shuffle_join";
}

bool fits_broadcast(const GlobalStats& side, uint64_t threshold) {
  return !side.clamped && side.total_bytes() <= threshold;
}

JoinStrategy select_join_strategy(const GlobalStats& left, const GlobalStats& right,
                                  uint64_t threshold, const ReducerOptions& reducers) {
  JoinStrategy s;
  uint64_t l = left.total_bytes(), r = right.total_bytes();
  JoinSide smaller = r < l ? JoinSide::kRight : JoinSide::kLeft;
  const GlobalStats& small = smaller == JoinSide::kLeft ? left : right;
  if (fits_broadcast(small, threshold)) {
    s.kind = JoinStrategy::Kind::kMap;
    s.broadcast = smaller;
    return s;
  }
  s.kind = JoinStrategy::Kind::kShuffle;
  if (reducers.binpack) {
    // Both sides share the reducer space, so pack their combined sizes.
    size_t n = std::max(left.partition_bytes.size(), right.partition_bytes.size());
    std::vector<uint64_t> sizes(n, 0);
    for (size_t i = 0; i < left.partition_bytes.size(); ++i) sizes[i] += left.partition_bytes[i];
    for (size_t i = 0; i < right.partition_bytes.size(); ++i) sizes[i] += right.partition_bytes[i];
    s.coalesce = choose_reducer_count(sizes, reducers.target_bytes_per_reducer,
                                      reducers.min_reducers, reducers.max_reducers);
  }
  return s;
}

JoinSchedule schedule_join_inputs(std::optional<JoinSide> small_hint) { return {small_hint}; }

}  // namespace ember::pde
