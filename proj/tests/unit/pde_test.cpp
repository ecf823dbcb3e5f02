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

#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>

#include "pde/optimizer.hpp"
#include "pde/runtime_stats.hpp"
#include "support/expect_error.hpp"
#include "support/oracles.hpp"

namespace ember::pde {
namespace {

double rel_error(uint64_t bytes) {
  double d = static_cast<double>(decode_size(log_encode_size(bytes)));
  return std::abs(d - static_cast<double>(bytes)) / static_cast<double>(bytes);
}

TEST(SizeCode, ZeroIsZero) {
  EXPECT_EQ(log_encode_size(0), 0);
  EXPECT_EQ(decode_size(0), 0u);
}

TEST(SizeCode, KilobyteWithinTenPercent) {
  uint64_t d = decode_size(log_encode_size(1024));
  EXPECT_GE(d, 922u);
  EXPECT_LE(d, 1126u);
}

TEST(SizeCode, SweepErrorAndMonotone) {
  double worst = 0;
  uint8_t prev = 0;
  for (uint64_t b = 1; b <= 1000000; ++b) {
    uint8_t c = log_encode_size(b);
    ASSERT_GE(c, prev) << b;
    ASSERT_GE(c, 1);
    prev = c;
    worst = std::max(worst, rel_error(b));
  }
  std::mt19937_64 gen(5);
  const uint64_t top = uint64_t{32} << 30;
  for (int i = 0; i < 200000; ++i) worst = std::max(worst, rel_error(1 + gen() % top));
  worst = std::max(worst, rel_error(top));
  EXPECT_LE(worst, 0.10);
  EXPECT_FALSE(size_clamped(top));
}

TEST(SizeCode, ClampsBeyondRange) {
  uint64_t huge = uint64_t{1} << 50;
  EXPECT_EQ(log_encode_size(huge), 255);
  EXPECT_TRUE(size_clamped(huge));
  EXPECT_LE(log_encode_size(huge - 1), 255);
}

TaskStats sized(std::initializer_list<uint64_t> bytes) {
  TaskStats t;
  for (auto b : bytes) {
    t.size_codes.push_back(log_encode_size(b));
    t.record_counts.push_back(1);
  }
  t.histogram.assign(kDefaultHistogramBuckets, 0);
  return t;
}

TEST(AggregateStats, SumsDecodedSizes) {
  std::vector<TaskStats> tasks{sized({100}), sized({200})};
  auto g = aggregate_stats(tasks);
  EXPECT_NEAR(static_cast<double>(g.total_bytes()), 300.0, 30.0);
  EXPECT_EQ(g.total_records(), 2u);
}

TEST(AggregateStats, HeavyHittersMergeThenTruncate) {
  auto a = sized({1});
  a.heavy_hitters = {{"a", 10}, {"b", 5}};
  auto b = sized({1});
  b.heavy_hitters = {{"b", 7}, {"c", 1}};
  std::vector<TaskStats> tasks{a, b};
  auto g = aggregate_stats(tasks, 2);
  EXPECT_EQ(g.heavy_hitters, (std::vector<HeavyHitter>{{"b", 12}, {"a", 10}}));
}

TEST(AggregateStats, HistogramsAddBucketwise) {
  auto a = sized({1});
  auto b = sized({1});
  a.histogram[3] = 4;
  b.histogram[3] = 5;
  b.histogram[31] = 1;
  std::vector<TaskStats> tasks{a, b};
  auto g = aggregate_stats(tasks);
  EXPECT_EQ(g.histogram[3], 9u);
  EXPECT_EQ(g.histogram[31], 1u);
}

TEST(AggregateStats, EmptyInput) {
  auto g = aggregate_stats({});
  EXPECT_EQ(g.total_bytes(), 0u);
  EXPECT_EQ(g.total_records(), 0u);
  EXPECT_TRUE(g.heavy_hitters.empty());
  EXPECT_FALSE(g.clamped);
}

GlobalStats of_size(uint64_t bytes) {
  GlobalStats g;
  g.partition_bytes = {bytes};
  g.record_counts = {bytes / 10};
  return g;
}

TEST(JoinStrategy, SmallRightIsBroadcast) {
  auto s = select_join_strategy(of_size(100 << 20), of_size(40 << 10), 1 << 20);
  EXPECT_EQ(s.kind, JoinStrategy::Kind::kMap);
  EXPECT_EQ(s.broadcast, JoinSide::kRight);
}

TEST(JoinStrategy, BothLargeShuffle) {
  auto s = select_join_strategy(of_size(100 << 20), of_size(100 << 20), 1 << 20);
  EXPECT_EQ(s.kind, JoinStrategy::Kind::kShuffle);
}

TEST(JoinStrategy, EmptyInputsBroadcastLeft) {
  auto s = select_join_strategy(of_size(0), of_size(0), 1 << 20);
  EXPECT_EQ(s.kind, JoinStrategy::Kind::kMap);
  EXPECT_EQ(s.broadcast, JoinSide::kLeft);
}

TEST(JoinStrategy, BinPackingAttachesCoalescePlan) {
  GlobalStats l, r;
  l.partition_bytes = {900, 10, 10, 10, 10, 10, 10, 10};
  r.partition_bytes = {900, 10, 10, 10, 10, 10, 10, 10};
  l.record_counts = r.record_counts = std::vector<uint64_t>(8, 1);
  ReducerOptions opts{.target_bytes_per_reducer = 1000, .min_reducers = 1, .max_reducers = 16, .binpack = true};
  auto s = select_join_strategy(l, r, 100, opts);
  ASSERT_EQ(s.kind, JoinStrategy::Kind::kShuffle);
  ASSERT_TRUE(s.coalesce.has_value());
  EXPECT_EQ(s.coalesce->coarse_count, 2u);
  // The giant partition gets a bin to itself.
  for (size_t i = 1; i < 8; ++i) EXPECT_NE(s.coalesce->assignment[i], s.coalesce->assignment[0]);
}

TEST(JoinSchedule, HintRunsFirst) {
  EXPECT_EQ(schedule_join_inputs(JoinSide::kRight).first, JoinSide::kRight);
  EXPECT_FALSE(schedule_join_inputs(std::nullopt).first.has_value());
  EXPECT_TRUE(fits_broadcast(of_size(40 << 10), 1 << 20));
  EXPECT_FALSE(fits_broadcast(of_size(100 << 20), 1 << 20));
}

TEST(Lpt, HandTracedInstance) {
  std::vector<uint64_t> sizes{5, 4, 3, 3, 1};
  auto plan = lpt_assign(sizes, 2);
  EXPECT_EQ(plan.assignment, (std::vector<size_t>{0, 1, 1, 0, 1}));
  EXPECT_EQ(plan.bin_loads(sizes), (std::vector<uint64_t>{8, 8}));
  EXPECT_EQ(testing::optimal_max_bin(sizes, 2), 8u);
}

TEST(Lpt, EqualSizesSplitEvenly) {
  std::vector<uint64_t> sizes(12, 7);
  for (size_t k : {1u, 2u, 3u, 4u, 6u, 12u}) {
    auto loads = lpt_assign(sizes, k).bin_loads(sizes);
    for (auto l : loads) EXPECT_EQ(l, 84u / k);
  }
}

TEST(Lpt, WithinFourThirdsOfOptimal) {
  std::mt19937_64 gen(17);
  for (int trial = 0; trial < 200; ++trial) {
    size_t n = 1 + gen() % 12;
    size_t k = 1 + gen() % 4;
    std::vector<uint64_t> sizes(n);
    for (auto& s : sizes) s = gen() % (trial % 2 ? 100 : 10000);
    if (trial % 5 == 0) sizes[0] = 100000;  // one giant
    auto loads = lpt_assign(sizes, k).bin_loads(sizes);
    uint64_t lpt = *std::max_element(loads.begin(), loads.end());
    uint64_t opt = testing::optimal_max_bin(sizes, k);
    EXPECT_LE(3 * lpt, 4 * opt) << "trial " << trial;
    EXPECT_GE(lpt, opt);
  }
}

TEST(Lpt, ReducerCountClamped) {
  std::vector<uint64_t> sizes{100, 100, 100, 100};
  EXPECT_EQ(choose_reducer_count(sizes, 150, 1, 16).coarse_count, 3u);
  EXPECT_EQ(choose_reducer_count(sizes, 1, 1, 2).coarse_count, 2u);
  EXPECT_EQ(choose_reducer_count(sizes, 10000, 3, 16).coarse_count, 3u);
}

TEST(MisraGries, FrequentItemSurvives) {
  MisraGries mg(4);
  std::map<std::string, uint64_t> exact;
  for (int i = 0; i < 150; ++i) {
    std::string key = i % 3 == 2 ? "s" + std::to_string(i) : "x";
    mg.update(key);
    ++exact[key];
  }
  auto report = mg.report();
  uint64_t bound = mg.total() / 5;
  bool found = false;
  for (const auto& h : report) {
    EXPECT_LE(h.count, exact[h.key]);
    EXPECT_GE(h.count + bound, exact[h.key]);
    found = found || h.key == "x";
  }
  EXPECT_TRUE(found);
}

TEST(MisraGries, GuaranteeAgainstExactCounts) {
  std::mt19937_64 gen(23);
  for (int trial = 0; trial < 30; ++trial) {
    size_t k = 1 + gen() % 16;
    MisraGries mg(k);
    std::map<std::string, uint64_t> exact;
    size_t n = gen() % 3000;
    for (size_t i = 0; i < n; ++i) {
      // Skewed: low ids are far more common.
      uint64_t r = gen() % 1000;
      std::string key = std::to_string(r * r / 10000);
      mg.update(key);
      ++exact[key];
    }
    auto report = mg.report();
    std::map<std::string, uint64_t> got;
    for (const auto& h : report) got[h.key] = h.count;
    uint64_t bound = n / (k + 1);
    for (const auto& [key, count] : exact) {
      if (count > bound) EXPECT_TRUE(got.count(key)) << key;
      if (got.count(key)) {
        EXPECT_LE(got[key], count);
        EXPECT_GE(got[key] + bound, count);
      }
    }
  }
}

TEST(MisraGries, EmptyAndDistinct) {
  EXPECT_TRUE(MisraGries(4).report().empty());
  MisraGries mg(4);
  for (int i = 0; i < 100; ++i) mg.update(std::to_string(i));
  for (const auto& h : mg.report()) EXPECT_LE(h.count, 1u);
}

TEST(TaskStats, SerializeRoundTripWithinBudget) {
  std::mt19937_64 gen(29);
  for (size_t partitions : {1u, 8u, 16u, 64u}) {
    TaskStatsBuilder b(partitions);
    for (int i = 0; i < 20000; ++i) {
      std::vector<Value> key{Value(std::string(40, 'k') + std::to_string(gen() % 500))};
      uint64_t h = gen();
      b.add(h % partitions, h, key, 1 << 20);
    }
    auto stats = b.finish();
    auto bytes = serialize_stats(stats);
    EXPECT_LE(bytes.size(), kStatsBudgetBytes) << partitions;
    auto back = deserialize_stats(bytes);
    EXPECT_EQ(back.size_codes, stats.size_codes);
    EXPECT_EQ(back.record_counts, stats.record_counts);
    EXPECT_EQ(back.histogram, stats.histogram);
    EXPECT_EQ(back.heavy_hitters.size(), stats.heavy_hitters.size());
  }
}

TEST(TaskStats, CorruptBytes) {
  EXPECT_ERROR_CODE(deserialize_stats(std::string("\xff\xff\xff", 3)), ErrorCode::kCorruptChunk);
}

TEST(TaskStats, HistogramBucketsCoverHashSpace) {
  EXPECT_EQ(histogram_bucket(0, 32), 0u);
  EXPECT_EQ(histogram_bucket(~uint64_t{0}, 32), 31u);
  EXPECT_EQ(histogram_bucket(uint64_t{1} << 63, 32), 16u);
}

}  // namespace
}  // namespace ember::pde
