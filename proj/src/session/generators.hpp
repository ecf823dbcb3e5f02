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
#include <map>
#include <random>
#include <string>

#include "common/value.hpp"

namespace ember::session {

// Seeded synthetic tables. Every generator is a pure function of its
// arguments.
struct GeneratedTable {
  Schema schema;
  RowBatch rows;
};

// Uniform integer in [0, n) from the raw generator output; independent of
// the standard library's distribution implementations.
uint64_t uniform_below(std::mt19937_64& gen, uint64_t n);
// Uniform double in [0, 1) from the top 53 bits.
double uniform_unit(std::mt19937_64& gen);

// Order-line-like rows: keys, quantities and prices plus low-cardinality
// flag, status, ship mode and instruction columns.
GeneratedTable generate_lineitem(size_t rows, uint64_t seed);
// `days` consecutive days from 2024-01-01, `per_day` rows each, stored in
// day order so partitions cover narrow date ranges.
GeneratedTable generate_daily(size_t days, size_t per_day, uint64_t seed);
// k uniform in [0, groups), v uniform in [0, 1000), s one of eight words.
GeneratedTable generate_keyed(size_t rows, size_t groups, uint64_t seed);
// Two classes around (+0.5, +0.5) and (-0.5, -0.5) with uniform noise in
// [-0.4, 0.4): linearly separable through the origin. label is 0 or 1.
GeneratedTable generate_separable(size_t rows, uint64_t seed);
// `clusters` centers 20 apart on a diagonal; points are centers plus
// uniform noise in [-spread, spread). Spread 0 puts every point on a center.
GeneratedTable generate_blobs(size_t rows, size_t clusters, double spread, uint64_t seed);

// Dispatch by kind name (lineitem, daily, keyed, separable, blobs) with
// named integer or real options. Throws InvalidArgument.
GeneratedTable generate(const std::string& kind, const std::map<std::string, std::string>& options,
                        uint64_t default_seed);

}  // namespace ember::session
