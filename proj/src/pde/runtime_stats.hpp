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
#include <span>
#include <string>
#include <vector>

#include "common/value.hpp"

namespace ember::pde {

inline constexpr double kSizeBase = 1.1;
inline constexpr size_t kDefaultHeavyHitters = 16;
inline constexpr size_t kDefaultHistogramBuckets = 32;
inline constexpr size_t kStatsBudgetBytes = 2048;
inline constexpr size_t kHeavyHitterKeyBytes = 24;

// One-byte logarithmic size code. 0 means empty.
uint8_t log_encode_size(uint64_t bytes);
uint64_t decode_size(uint8_t code);
// True when code 255 would decode `bytes` with more than 10% error.
bool size_clamped(uint64_t bytes);

struct HeavyHitter {
  std::string key;
  uint64_t count = 0;
  bool operator==(const HeavyHitter&) const = default;
};

// Misra-Gries frequent-items summary with k counters. Any item occurring more
// than n/(k+1) times survives, and each count undercounts by at most n/(k+1).
class MisraGries {
 public:
  explicit MisraGries(size_t k = kDefaultHeavyHitters) : k_(k) {}

  void update(const std::string& key, uint64_t weight = 1);
  // Counters sorted by count descending, then key. At most `limit` entries.
  std::vector<HeavyHitter> report(size_t limit) const;
  std::vector<HeavyHitter> report() const { return report(k_); }
  uint64_t total() const { return total_; }

 private:
  size_t k_;
  uint64_t total_ = 0;
  std::map<std::string, uint64_t> counters_;
};

// Buckets split the whole 64-bit hash space evenly, so histograms from
// different tasks line up bucket for bucket.
size_t histogram_bucket(uint64_t hash, size_t buckets);

// Text identifying a shuffle key in heavy-hitter reports.
std::string key_text(std::span<const Value> key);

// Statistics one map task reports for its shuffle output.
struct TaskStats {
  std::vector<uint8_t> size_codes;  // per output partition
  std::vector<uint64_t> record_counts;
  bool clamped = false;
  std::vector<HeavyHitter> heavy_hitters;
  std::vector<uint64_t> histogram;

  bool operator==(const TaskStats&) const = default;
};

// Accumulates TaskStats while a map task writes its buckets.
class TaskStatsBuilder {
 public:
  TaskStatsBuilder(size_t partitions, size_t hh_k = kDefaultHeavyHitters,
                   size_t histogram_buckets = kDefaultHistogramBuckets);

  void add(size_t partition, uint64_t key_hash, std::span<const Value> key, size_t row_bytes);
  TaskStats finish() const;

 private:
  std::vector<uint64_t> bytes_;
  std::vector<uint64_t> records_;
  MisraGries hitters_;
  size_t hh_k_;
  std::vector<uint64_t> histogram_;
};

std::string serialize_stats(const TaskStats& stats);
// Throws CorruptChunk on malformed input.
TaskStats deserialize_stats(std::string_view bytes);

// Stage-wide view assembled at the barrier.
struct GlobalStats {
  std::vector<uint64_t> partition_bytes;  // decoded estimates, summed
  std::vector<uint64_t> record_counts;
  std::vector<HeavyHitter> heavy_hitters;
  std::vector<uint64_t> histogram;
  bool clamped = false;

  uint64_t total_bytes() const;
  uint64_t total_records() const;
};

GlobalStats aggregate_stats(std::span<const TaskStats> tasks, size_t hh_k = kDefaultHeavyHitters);

}  // namespace ember::pde
