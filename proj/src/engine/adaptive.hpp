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

#include <map>
#include <set>
#include <string>
#include <vector>

#include "engine/cluster.hpp"
#include "pde/optimizer.hpp"

namespace ember::engine {

enum class JoinMode { kAuto, kShuffle, kMap };

const char* join_mode_name(JoinMode mode);
// Throws InvalidArgument for anything but auto, shuffle or map.
JoinMode parse_join_mode(const std::string& text);

struct AdaptiveOptions {
  JoinMode join_mode = JoinMode::kAuto;
  uint64_t broadcast_threshold = pde::kDefaultBroadcastThreshold;
  pde::ReducerOptions reducers;
  // Coalesce aggregate reducers by observed partition sizes.
  bool binpack_aggregates = false;
};

// Resolves deferred joins from shuffle statistics. A join whose small side
// is known up front runs that side first; if it turns out small enough, the
// other side is broadcast-joined against it without ever being shuffled.
class AdaptiveJoinHook : public PlanHook {
 public:
  explicit AdaptiveJoinHook(AdaptiveOptions options) : options_(options) {}

  lineage::NodePtr after_stage(const lineage::NodePtr& root, uint64_t exchange_id,
                               const StatsView& stats) override;
  bool hold(const lineage::NodePtr& root, uint64_t exchange_id, const StatsView& stats) override;
  std::vector<std::string> decisions() const override { return decisions_; }

 private:
  lineage::NodePtr resolve_join(const lineage::NodePtr& root, const lineage::NodePtr& join,
                                uint64_t exchange_id, const StatsView& stats);
  lineage::NodePtr coalesce_aggregate(const lineage::NodePtr& root, uint64_t exchange_id,
                                      const StatsView& stats);

  AdaptiveOptions options_;
  // Hinted exchanges that ran but were too large to broadcast.
  std::set<uint64_t> released_;
  std::vector<std::string> decisions_;
};

}  // namespace ember::engine
