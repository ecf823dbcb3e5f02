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
#include <string>
#include <vector>

namespace ember::engine {

// A deterministic fault. Triggers count within one job:
//   stage n  before the first launch of the job's n-th stage (0-based)
//   task n   once n tasks of the job have completed
//   time t   when the job's simulated clock reaches t
//   now      immediately, outside any job
// `job` restricts the event to the job-th job after it was armed (0 = next).
struct FaultEvent {
  enum class Trigger { kNow, kStage, kTask, kTime } trigger = Trigger::kNow;
  uint64_t at = 0;
  std::optional<uint64_t> job;
  enum class Action { kKill, kDelay } action = Action::kKill;
  size_t worker = 0;
  double factor = 1.0;

  bool operator==(const FaultEvent&) const = default;
};

// Grammar, one event:
//   kill <worker> [at (stage|task|time) <n>] [in job <n>]
//   delay <worker> <factor> [at ...] [in job <n>]
// Throws InvalidArgument.
FaultEvent parse_fault(const std::string& text);
// Events separated by ';'.
std::vector<FaultEvent> parse_fault_schedule(const std::string& text);
std::string format_fault(const FaultEvent& e);

}  // namespace ember::engine
