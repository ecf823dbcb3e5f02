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
#include <span>

namespace ember::testing {

// Smallest achievable maximum bin load when `sizes` are split across `bins`
// bins. Exhaustive search with symmetry pruning; fine for a dozen items.
uint64_t optimal_max_bin(std::span<const uint64_t> sizes, size_t bins);

}  // namespace ember::testing
