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

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>

#include "lineage/evaluator.hpp"
#include "lineage/functions.hpp"
#include "lineage/node.hpp"
#include "lineage/source.hpp"
#include "support/expect_error.hpp"

namespace ember::lineage {
namespace {

Schema kv_schema() { return Schema({{"k", Type::kInt64}, {"v", Type::kInt64}}); }

RowBatch kv_rows(size_t n) {
  RowBatch rows;
  for (size_t i = 0; i < n; ++i) {
    rows.push_back({Value(static_cast<int64_t>(i % 7)), Value(static_cast<int64_t>(i))});
  }
  return rows;
}

std::shared_ptr<MemorySnapshot> snapshot(size_t rows, size_t per_partition) {
  return MemorySnapshot::from_rows("kv", kv_schema(), kv_rows(rows), per_partition);
}

size_t position(const std::vector<NodePtr>& order, const NodePtr& n) {
  for (size_t i = 0; i < order.size(); ++i) {
    if (order[i]->id == n->id) return i;
  }
  return order.size();
}

void register_triple() {
  RowFunction fn;
  fn.name = "test.triple_v";
  fn.bind = [](const Schema& in, const std::string&) { return in; };
  fn.row = [](const Row& row, const Schema&, const std::string&) {
    Row out = row;
    out[1] = Value(row[1].as_int() * 3);
    return out;
  };
  FunctionRegistry::global().add(fn);
}

TEST(Closure, SingleSource) {
  auto src = make_source(snapshot(10, 4));
  auto order = lineage_closure(src);
  ASSERT_EQ(order.size(), 1u);
  EXPECT_EQ(order[0]->id, src->id);
}

TEST(Closure, Chain) {
  auto src = make_source(snapshot(10, 4));
  auto map = make_map(src, "select", "k,v");
  auto ex = make_exchange(map, {make_column(0, Type::kInt64)}, 3);
  auto merge = make_merge_aggregate(ex, 1, {AggSpec{AggFunc::kCountStar, false, nullptr, Type::kInt64}},
                                    AggMode::kComplete);
  auto order = lineage_closure(merge);
  ASSERT_EQ(order.size(), 4u);
  EXPECT_EQ(order[0]->id, src->id);
  EXPECT_EQ(order[1]->id, map->id);
  EXPECT_EQ(order[2]->id, ex->id);
  EXPECT_EQ(order[3]->id, merge->id);
}

TEST(Closure, DiamondOrder) {
  auto a = make_source(snapshot(10, 4));
  auto b = make_filter(a, make_compare(CompareOp::kGt, make_column(1, Type::kInt64), make_literal(Value(int64_t{2}))));
  auto c = make_project(a, {make_column(0, Type::kInt64), make_column(1, Type::kInt64)}, {"k", "v"});
  auto d = make_hash_join(b, c, {0}, {0});
  auto order = lineage_closure(d);
  ASSERT_EQ(order.size(), 4u);
  EXPECT_EQ(position(order, a), 0u);
  EXPECT_EQ(position(order, d), 3u);
  EXPECT_LT(position(order, a), position(order, b));
  EXPECT_LT(position(order, a), position(order, c));
}

TEST(Closure, CycleDetected) {
  auto a = make_source(snapshot(4, 2));
  auto b = make_filter(a, make_literal(Value(true)));
  // Only reachable by mutating a node behind the const pointer.
  auto& mutable_a = const_cast<DatasetNode&>(*a);
  mutable_a.parents.push_back(b);
  EXPECT_ERROR_CODE(lineage_closure(b), ErrorCode::kCycleDetected);
  mutable_a.parents.clear();
}

TEST(Recompute, SourceReplay) {
  auto snap = snapshot(10, 4);
  auto src = make_persist(make_source(snap), StorageLevel::kRows, "kv");
  LocalPartitionCache cache;
  auto before = collect(src, cache);
  ASSERT_TRUE(cache.resident(src->id, 2));
  EXPECT_TRUE(cache.evict(src->id, 2));
  auto part = recompute_partition(src, 2, cache);
  RowBatch expect(before.begin() + 8, before.end());
  EXPECT_EQ(*part, expect);
}

TEST(Recompute, MapOverResidentParent) {
  register_triple();
  auto base = make_persist(make_source(snapshot(30, 8)), StorageLevel::kColumnar, "base");
  auto mapped = make_persist(make_map(base, "test.triple_v", ""), StorageLevel::kRows, "mapped");
  LocalPartitionCache cache;
  auto before = collect(mapped, cache);
  size_t base_runs = cache.computed(base->id);
  for (size_t i = 0; i < mapped->partition_count; ++i) cache.evict(mapped->id, i);
  EXPECT_EQ(collect(mapped, cache), before);
  EXPECT_EQ(cache.computed(base->id), base_runs);  // parent stayed resident
  EXPECT_EQ(before[5][1], Value(int64_t{15}));
}

TEST(Recompute, DiamondParentComputedOnce) {
  auto a = make_persist(make_source(snapshot(40, 10)), StorageLevel::kRows, "a");
  auto b = make_persist(make_filter(a, make_compare(CompareOp::kLt, make_column(0, Type::kInt64),
                                                    make_literal(Value(int64_t{4})))),
                        StorageLevel::kRows, "b");
  auto c = make_persist(make_project(a, {make_column(0, Type::kInt64), make_column(1, Type::kInt64)}, {"k", "w"}),
                        StorageLevel::kRows, "c");
  auto d = make_hash_join(b, c, {0}, {0});
  LocalPartitionCache cache;
  auto before = collect(d, cache);
  size_t a_runs = cache.computed(a->id);
  EXPECT_EQ(a_runs, a->partition_count);
  for (size_t i = 0; i < a->partition_count; ++i) {
    cache.evict(a->id, i);
    cache.evict(b->id, i);
    cache.evict(c->id, i);
  }
  auto after = collect(d, cache);
  EXPECT_EQ(after, before);
  EXPECT_EQ(cache.computed(a->id), a_runs + a->partition_count);
}

TEST(Recompute, NarrowNodeTouchesOnePartition) {
  auto src = make_source(snapshot(40, 10));
  auto f = make_filter(src, make_literal(Value(true)));
  LocalPartitionCache cache;
  Evaluator ev(cache);
  ev.compute(f, 2);
  EXPECT_EQ(ev.counters().computed.at(src->id), 1u);
  EXPECT_EQ(ev.counters().rows_in, 10u);
}

TEST(Recompute, ShuffleRecomputesFromRetainedMapOutputs) {
  auto src = make_source(snapshot(50, 10));
  auto ex = make_exchange(src, {make_column(0, Type::kInt64)}, 4);
  LocalPartitionCache cache;
  auto first = collect(ex, cache);
  size_t src_runs = cache.computed(src->id);
  EXPECT_EQ(src_runs, src->partition_count);
  auto part = recompute_partition(ex, 1, cache);
  EXPECT_EQ(cache.computed(src->id), src_runs);
  cache.evict_shuffle(ex->id);
  EXPECT_EQ(*recompute_partition(ex, 1, cache), *part);
  EXPECT_EQ(cache.computed(src->id), 2 * src_runs);
}

TEST(Recompute, RevokedSourceIsUnavailable) {
  auto snap = snapshot(10, 5);
  auto src = make_persist(make_source(snap), StorageLevel::kRows, "kv");
  LocalPartitionCache cache;
  collect(src, cache);
  snap->revoke();
  EXPECT_NO_THROW(recompute_partition(src, 0, cache));  // still resident
  cache.evict(src->id, 0);
  EXPECT_ERROR_CODE(recompute_partition(src, 0, cache), ErrorCode::kSourceUnavailable);
}

TEST(Recompute, RandomEvictionsMatchBaseline) {
  std::mt19937_64 gen(31);
  for (int trial = 0; trial < 40; ++trial) {
    size_t per = 1 + gen() % 8;
    auto a = make_persist(make_source(snapshot(20 + gen() % 40, per)), StorageLevel::kColumnar, "a");
    auto b = make_persist(make_filter(a, make_compare(CompareOp::kGe, make_column(1, Type::kInt64),
                                                      make_literal(Value(static_cast<int64_t>(gen() % 20))))),
                          StorageLevel::kRows, "b");
    NodePtr c = make_exchange(b, {make_column(0, Type::kInt64)}, 1 + gen() % 8);
    c = make_persist(c, StorageLevel::kRows, "c");
    auto d = make_hash_join(c, make_exchange(a, {make_column(0, Type::kInt64)}, c->partition_count), {0}, {0});
    LocalPartitionCache baseline;
    auto want = collect(d, baseline);

    LocalPartitionCache cache;
    collect(d, cache);
    for (const auto& n : {a, b, c}) {
      for (size_t i = 0; i < n->partition_count; ++i) {
        if (gen() % 2) cache.evict(n->id, i);
      }
    }
    EXPECT_EQ(collect(d, cache), want) << trial;
  }
}

class TempFile {
 public:
  explicit TempFile(const std::string& name)
      : path_((std::filesystem::temp_directory_path() / ("ember_lineage_" + name)).string()) {}
  ~TempFile() { std::filesystem::remove(path_); }
  void write(const std::string& text) const { std::ofstream(path_, std::ios::trunc) << text; }
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

TEST(FileSnapshot, ReadsAndPinsContent) {
  TempFile f("pin.csv");
  f.write("k,v\n1,10\n2,20\n3,30\n");
  auto snap = FileSnapshot::open(f.path(), kv_schema(), 2);
  EXPECT_EQ(snap->partition_count(), 2u);
  EXPECT_EQ(snap->read(1)->size(), 1u);
  EXPECT_EQ((*snap->read(0))[1][1], Value(int64_t{20}));
  f.write("k,v\n1,10\n2,21\n3,30\n");
  EXPECT_ERROR_CODE(snap->read(0), ErrorCode::kSourceUnavailable);
}

TEST(FileSnapshot, MissingFile) {
  TempFile f("gone.csv");
  f.write("k,v\n1,1\n");
  auto snap = FileSnapshot::open(f.path(), kv_schema(), 10);
  std::filesystem::remove(f.path());
  EXPECT_ERROR_CODE(snap->read(0), ErrorCode::kSourceUnavailable);
}

TEST(Functions, UnknownAndBadBind) {
  auto src = make_source(snapshot(4, 2));
  EXPECT_ERROR_CODE(make_map(src, "no.such.fn", ""), ErrorCode::kNotFound);
  EXPECT_ERROR_CODE(make_map(src, "select", "k,zz"), ErrorCode::kFieldNotFound);
}

TEST(Functions, HexfloatAndVectorsAreExact) {
  std::mt19937_64 gen(1);
  std::vector<double> v;
  for (int i = 0; i < 50; ++i) v.push_back(std::ldexp(static_cast<double>(gen() >> 11), -int(gen() % 80)) - 3.0);
  v.push_back(0.1);
  v.push_back(-0.0);
  EXPECT_EQ(decode_vector(encode_vector(v)), v);
  EXPECT_EQ(parse_hexfloat(format_hexfloat(1.0 / 3.0)), 1.0 / 3.0);
}

TEST(Determinism, FreshCachesAgree) {
  auto build = [] {
    auto src = make_source(snapshot(100, 9));
    auto ex = make_exchange(src, {make_column(0, Type::kInt64)}, 5);
    return make_merge_aggregate(ex, 1, {AggSpec{AggFunc::kSum, false, make_column(1, Type::kInt64), Type::kInt64}},
                                AggMode::kComplete);
  };
  LocalPartitionCache c1, c2;
  EXPECT_EQ(collect(build(), c1), collect(build(), c2));
}

}  // namespace
}  // namespace ember::lineage
