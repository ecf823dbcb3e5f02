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

#include <filesystem>

#include "common/codec.hpp"
#include "common/error.hpp"
#include "engine/cluster.hpp"
#include "engine/faults.hpp"
#include "engine/shuffle.hpp"
#include "engine/stages.hpp"
#include "lineage/evaluator.hpp"
#include "support/expect_error.hpp"

namespace ember::engine {
namespace {

using namespace lineage;

NodePtr grouped_count(size_t rows, size_t target, bool cache) {
  Schema schema({{"k", Type::kInt64}, {"v", Type::kInt64}});
  RowBatch data;
  for (size_t i = 0; i < rows; ++i) {
    data.push_back({Value(static_cast<int64_t>(i % 37)), Value(static_cast<int64_t>(i))});
  }
  NodePtr src = make_source(MemorySnapshot::from_rows("t", schema, data, target), "t");
  if (cache) src = make_persist(src, StorageLevel::kColumnar, "t");
  std::vector<AggSpec> aggs = {{AggFunc::kCountStar, false, nullptr, Type::kInt64},
                               {AggFunc::kSum, false, make_column(1, Type::kInt64), Type::kInt64}};
  auto local = make_local_aggregate(src, {make_column(0, Type::kInt64)}, aggs, AggMode::kPartial);
  auto ex = make_exchange(local, {make_column(0, Type::kInt64)}, 4);
  return make_merge_aggregate(ex, 1, aggs, AggMode::kMerge);
}

RowBatch sorted(RowBatch rows) {
  std::sort(rows.begin(), rows.end(), RowLess());
  return rows;
}

TEST(Cluster, MatchesLocalEvaluation) {
  auto root = grouped_count(5000, 500, false);
  LocalPartitionCache local;
  auto expected = sorted(collect(root, local));
  Cluster cluster({});
  auto result = cluster.run_job(root, nullptr, "q");
  EXPECT_EQ(sorted(result.rows), expected);
  EXPECT_EQ(result.report.plan_shuffle_stages, 1u);
  EXPECT_EQ(result.report.tasks, 10u + 4u);
  EXPECT_EQ(result.report.failed_attempts, 0u);
}

TEST(Cluster, KillMidJobRecomputesLostWork) {
  auto root = grouped_count(20000, 1000, true);
  LocalPartitionCache local;
  auto expected = sorted(collect(root, local));
  Cluster cluster({});
  auto warm = cluster.run_job(root, nullptr, "warm");
  EXPECT_EQ(sorted(warm.rows), expected);
  cluster.arm(parse_fault("kill 1 at task 3"));
  auto result = cluster.run_job(root, nullptr, "q");
  EXPECT_EQ(sorted(result.rows), expected);
  EXPECT_EQ(result.report.workers_killed, 1u);
  EXPECT_GT(result.report.lost_partitions, 0u);
  EXPECT_EQ(result.report.recomputed_partitions, result.report.lost_partitions);
  EXPECT_GE(result.report.recovery_workers, 2u);
}

TEST(Cluster, RunsAreDeterministic) {
  auto root = grouped_count(8000, 700, true);
  auto run = [&] {
    Cluster cluster({});
    cluster.arm(parse_fault("delay 2 3"));
    cluster.arm(parse_fault("kill 0 at task 6"));
    auto r = cluster.run_job(root, nullptr, "q");
    return r.report.to_line(false);
  };
  EXPECT_EQ(run(), run());
}

TEST(Cluster, SpeculatesOnSlowWorker) {
  auto root = grouped_count(8000, 500, false);
  Cluster cluster({});
  cluster.arm(parse_fault("delay 3 20"));
  auto r = cluster.run_job(root, nullptr, "q");
  EXPECT_GT(r.report.speculative, 0u);
}

TEST(Cluster, AllWorkersDeadIsUnrecoverable) {
  auto root = grouped_count(100, 10, false);
  ClusterConfig cfg;
  cfg.workers = 1;
  Cluster cluster(cfg);
  cluster.kill_worker(0);
  try {
    cluster.run_job(root, nullptr, "q");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnrecoverable);
  }
}


TEST(Stages, NarrowChainIsOneStage) {
  Schema schema({{"k", Type::kInt64}});
  auto src = make_source(MemorySnapshot::from_rows("t", schema, {{Value(int64_t{1})}}, 10));
  auto f = make_filter(src, make_literal(Value(true)));
  auto m = make_map(f, "select", "k");
  auto g = plan_stages(m);
  ASSERT_EQ(g.stages.size(), 1u);
  EXPECT_EQ(g.result().nodes.size(), 3u);
  EXPECT_EQ(g.shuffle_stage_count(), 0u);
}

TEST(Stages, AggregateIsTwoStages) {
  auto g = plan_stages(grouped_count(100, 10, false));
  ASSERT_EQ(g.stages.size(), 2u);
  EXPECT_EQ(g.stages[0].kind, StageKind::kShuffleMap);
  EXPECT_EQ(g.stages[0].task_count, 10u);
  EXPECT_EQ(g.result().task_count, 4u);
  ASSERT_EQ(g.result().deps.size(), 1u);
  EXPECT_EQ(g.result().deps[0].exchange, g.stages[0].key());
}

NodePtr keyed_source(const std::string& name, size_t rows, size_t target) {
  Schema schema({{"k", Type::kInt64}, {"v", Type::kInt64}});
  RowBatch data;
  for (size_t i = 0; i < rows; ++i) data.push_back({Value(static_cast<int64_t>(i % 13)), Value(static_cast<int64_t>(i))});
  return make_source(MemorySnapshot::from_rows(name, schema, data, target), name);
}

TEST(Stages, ShuffleJoinIsThreeStages) {
  auto l = make_exchange(keyed_source("l", 50, 10), {make_column(0, Type::kInt64)}, 3);
  auto r = make_exchange(keyed_source("r", 30, 10), {make_column(0, Type::kInt64)}, 3);
  auto g = plan_stages(make_hash_join(l, r, {0}, {0}));
  ASSERT_EQ(g.stages.size(), 3u);
  EXPECT_EQ(g.shuffle_stage_count(), 2u);
  EXPECT_EQ(g.result().deps.size(), 2u);
}

TEST(Shuffle, BucketsFollowHashResidue) {
  RowBatch rows;
  for (int64_t k = 0; k < 8; ++k) rows.push_back({Value(k)});
  std::vector<Expr> keys{make_column(0, Type::kInt64)};
  auto out = shuffle_write(rows, keys, 4);
  ASSERT_EQ(out.buckets.size(), 4u);
  size_t total = 0;
  for (size_t b = 0; b < 4; ++b) {
    auto part = out.buckets[b].load();
    total += part->size();
    for (const auto& r : *part) EXPECT_EQ(hash_values(std::span<const Value>(r.data(), 1)) % 4, b);
  }
  EXPECT_EQ(total, 8u);
  EXPECT_EQ(out.rows, 8u);
}

TEST(Shuffle, EmptyInputRegistersEmptyBuckets) {
  auto out = shuffle_write({}, {make_column(0, Type::kInt64)}, 3);
  ASSERT_EQ(out.buckets.size(), 3u);
  for (const auto& b : out.buckets) EXPECT_TRUE(b.load()->empty());
}

TEST(Shuffle, SpilledReadBackMatchesMemory) {
  RowBatch rows;
  for (int64_t i = 0; i < 100000; ++i) rows.push_back({Value(i % 1009), Value("row" + std::to_string(i)), Value(i * 0.5)});
  std::vector<Expr> keys{make_column(0, Type::kInt64)};
  auto mem = shuffle_write(rows, keys, 6);
  ShuffleOptions spill;
  spill.spill_threshold_bytes = 1024;
  auto disk = shuffle_write(rows, keys, 6, spill);
  for (size_t b = 0; b < 6; ++b) {
    EXPECT_FALSE(mem.buckets[b].spilled());
    ASSERT_TRUE(disk.buckets[b].spilled());
    EXPECT_TRUE(std::filesystem::exists(disk.buckets[b].spill->path()));
    EXPECT_EQ(*disk.buckets[b].load(), *mem.buckets[b].load());
  }
  EXPECT_EQ(disk.stats, mem.stats);
}

TEST(Shuffle, UnwritableScratchDir) {
  ShuffleOptions spill;
  spill.spill_threshold_bytes = 1;
  spill.scratch_dir = "/proc/ember-no-such-dir";
  RowBatch rows{{Value(int64_t{1})}};
  EXPECT_ERROR_CODE(shuffle_write(rows, {make_column(0, Type::kInt64)}, 1, spill), ErrorCode::kScratchIo);
}

TEST(Cluster, ResultIndependentOfWorkersAndSpeculation) {
  auto root = grouped_count(6000, 400, true);
  LocalPartitionCache local;
  auto expected = sorted(collect(root, local));
  for (size_t workers : {1u, 3u, 4u, 7u}) {
    for (bool spec : {false, true}) {
      ClusterConfig cfg;
      cfg.workers = workers;
      cfg.speculation = spec;
      Cluster cluster(cfg);
      if (workers > 1) cluster.arm(parse_fault("delay 0 10"));
      EXPECT_EQ(sorted(cluster.run_job(root, nullptr, "q").rows), expected) << workers << " " << spec;
    }
  }
}

TEST(Cluster, KillHolderOfThreeCachedPartitions) {
  auto root = grouped_count(12000, 1000, true);  // 12 cached partitions
  Cluster cluster({});
  auto warm = cluster.run_job(root, nullptr, "warm");
  const auto& cached = root->parents[0]->parents[0]->parents[0];
  ASSERT_TRUE(cached->persisted());
  ASSERT_EQ(cached->partition_count, 12u);
  std::map<size_t, size_t> held;
  for (size_t i = 0; i < 12; ++i) ++held[*cluster.holder(cached->id, i)];
  auto victim = std::find_if(held.begin(), held.end(), [](const auto& kv) { return kv.second == 3; });
  ASSERT_NE(victim, held.end());
  cluster.kill_worker(victim->first);
  auto r = cluster.run_job(root, nullptr, "again");
  EXPECT_EQ(sorted(r.rows), sorted(warm.rows));
  EXPECT_EQ(r.report.recomputed_partitions, 3u);
  EXPECT_TRUE(cluster.fully_resident(*cached));
}

TEST(Cluster, KillWorkerWithoutStateChangesNothing) {
  auto root = grouped_count(3000, 1000, true);  // 3 cached partitions
  ClusterConfig cfg;
  cfg.workers = 8;
  Cluster cluster(cfg);
  auto warm = cluster.run_job(root, nullptr, "warm");
  const auto& cached = root->parents[0]->parents[0]->parents[0];
  std::set<size_t> holders;
  for (size_t i = 0; i < cached->partition_count; ++i) holders.insert(*cluster.holder(cached->id, i));
  size_t idle = 0;
  while (holders.count(idle)) ++idle;
  cluster.kill_worker(idle);
  auto r = cluster.run_job(root, nullptr, "again");
  EXPECT_EQ(sorted(r.rows), sorted(warm.rows));
  EXPECT_EQ(r.report.recomputed_partitions, 0u);
  EXPECT_EQ(r.report.recomputed_tasks, 0u);
}

TEST(Cluster, KillDuringReduceRebuildsOnlyLostMapOutputs) {
  auto root = grouped_count(20000, 1000, false);
  LocalPartitionCache local;
  auto expected = sorted(collect(root, local));
  Cluster cluster({});
  cluster.arm(parse_fault("kill 2 at stage 1"));
  auto r = cluster.run_job(root, nullptr, "q");
  EXPECT_EQ(sorted(r.rows), expected);
  EXPECT_GT(r.report.lost_map_outputs, 0u);
  EXPECT_EQ(r.report.recomputed_tasks, r.report.lost_map_outputs);
  EXPECT_GE(r.report.recovery_workers, 2u);
}

TEST(Cluster, FaultAtEveryTaskCountIsTransparent) {
  auto root = grouped_count(4000, 400, true);
  LocalPartitionCache local;
  auto expected = sorted(collect(root, local));
  for (uint64_t at = 0; at < 14; ++at) {
    Cluster cluster({});
    cluster.run_job(root, nullptr, "warm");
    cluster.arm(parse_fault("kill " + std::to_string(at % 4) + " at task " + std::to_string(at)));
    EXPECT_EQ(sorted(cluster.run_job(root, nullptr, "q").rows), expected) << at;
  }
}

TEST(Cluster, LostSourceIsUnrecoverable) {
  Schema schema({{"k", Type::kInt64}});
  auto snap = MemorySnapshot::from_rows("t", schema, {{Value(int64_t{1})}, {Value(int64_t{2})}}, 1);
  auto node = make_persist(make_source(snap, "t"), StorageLevel::kRows, "t");
  Cluster cluster({});
  cluster.run_job(node, nullptr, "warm");
  snap->revoke();
  EXPECT_NO_THROW(cluster.run_job(node, nullptr, "resident"));
  cluster.kill_worker(*cluster.holder(node->id, 0));
  EXPECT_ERROR_CODE(cluster.run_job(node, nullptr, "lost"), ErrorCode::kUnrecoverable);
  EXPECT_EQ(cluster.last_failed_report().status, "error");
}

TEST(Faults, Grammar) {
  auto e = parse_fault("kill 2 at stage 1 in job 3");
  EXPECT_EQ(e.action, FaultEvent::Action::kKill);
  EXPECT_EQ(e.worker, 2u);
  EXPECT_EQ(e.trigger, FaultEvent::Trigger::kStage);
  EXPECT_EQ(e.at, 1u);
  EXPECT_EQ(e.job, 3u);
  auto d = parse_fault("delay 1 2.5 at time 40");
  EXPECT_EQ(d.action, FaultEvent::Action::kDelay);
  EXPECT_DOUBLE_EQ(d.factor, 2.5);
  EXPECT_EQ(d.trigger, FaultEvent::Trigger::kTime);
  EXPECT_EQ(parse_fault("kill 0").trigger, FaultEvent::Trigger::kNow);
  EXPECT_EQ(parse_fault(format_fault(e)), e);
  EXPECT_EQ(parse_fault_schedule("kill 0 at task 2; delay 1 3").size(), 2u);
  EXPECT_ERROR_CODE(parse_fault("explode 1"), ErrorCode::kInvalidArgument);
  EXPECT_ERROR_CODE(parse_fault("kill x"), ErrorCode::kInvalidArgument);
  EXPECT_ERROR_CODE(parse_fault("kill 1 at minute 3"), ErrorCode::kInvalidArgument);
}

}  // namespace
}  // namespace ember::engine
