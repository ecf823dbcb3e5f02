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

#include <atomic>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "engine/faults.hpp"
#include "engine/shuffle.hpp"
#include "engine/stages.hpp"
#include "lineage/evaluator.hpp"
#include "pde/runtime_stats.hpp"

namespace ember::engine {

struct ClusterConfig {
  size_t workers = 4;
  bool speculation = true;
  size_t max_attempts = 4;
  // Steal from a preferred worker once it has more than this many queued.
  size_t locality_threshold = 2;
  ShuffleOptions shuffle;
};

// Private state of one simulated worker. Only the scheduler thread touches
// it; executors see immutable snapshots.
struct WorkerState {
  size_t id = 0;
  bool alive = true;
  double delay = 1.0;
  std::map<std::pair<uint64_t, size_t>, lineage::StoredPartition> resident;
  std::map<std::pair<uint64_t, size_t>, std::shared_ptr<const MapOutput>> map_outputs;
};

// Read access to shuffle statistics while a job runs.
class StatsView {
 public:
  virtual ~StatsView() = default;
  // True once every map output of the exchange is available.
  virtual bool complete(uint64_t exchange_id) const = 0;
  virtual pde::GlobalStats stats(uint64_t exchange_id) const = 0;
};

// Runtime re-optimization callback. Runs on the scheduler thread.
class PlanHook {
 public:
  virtual ~PlanHook() = default;
  // Called after a shuffle-map stage completes; returns a replacement root
  // or null. Only parts of the plan that have not started may change.
  virtual lineage::NodePtr after_stage(const lineage::NodePtr& root, uint64_t exchange_id,
                                       const StatsView& stats) = 0;
  // True while the stage for `exchange_id` should not launch yet.
  virtual bool hold(const lineage::NodePtr& root, uint64_t exchange_id, const StatsView& stats) = 0;
  virtual std::vector<std::string> decisions() const { return {}; }
};

struct StageReport {
  uint64_t key = 0;
  std::optional<size_t> ordinal;
  std::string kind;
  std::string label;
  size_t task_count = 0;
  size_t tasks = 0;     // distinct tasks launched
  size_t attempts = 0;  // every launch, backups included
  size_t failed = 0;
  size_t speculative = 0;
  uint64_t bytes_shuffled = 0;
  bool in_final_plan = false;
};

struct JobReport {
  size_t job = 0;
  std::string statement;
  std::string status = "ok";
  std::string error;
  size_t plan_stages = 0;
  size_t plan_shuffle_stages = 0;
  size_t shuffle_stages_run = 0;
  size_t tasks = 0;
  size_t attempts = 0;
  size_t failed_attempts = 0;
  size_t speculative = 0;
  size_t recomputed_tasks = 0;
  size_t recomputed_partitions = 0;
  size_t lost_partitions = 0;
  size_t lost_map_outputs = 0;
  size_t recovery_workers = 0;
  size_t workers_killed = 0;
  uint64_t bytes_shuffled = 0;
  size_t spilled_buckets = 0;
  size_t stats_max_bytes = 0;
  size_t partitions_scanned = 0;
  size_t partitions_pruned = 0;
  size_t result_rows = 0;
  uint64_t sim_time = 0;
  uint64_t wall_ms = 0;
  std::vector<std::string> decisions;
  std::vector<StageReport> stages;

  // One line of space-separated key=value pairs.
  std::string to_line(bool include_wall = true) const;
  const StageReport* stage_by_label(const std::string& label) const;
};

struct JobResult {
  lineage::NodePtr final_root;
  RowBatch rows;
  JobReport report;
};

class Cluster {
 public:
  explicit Cluster(ClusterConfig config);
  ~Cluster();
  Cluster(const Cluster&) = delete;
  Cluster& operator=(const Cluster&) = delete;

  // Runs `root` to completion and collects every partition in index order.
  // Throws Unrecoverable on lost sources, exhausted retries or a dead
  // cluster, Cancelled on cancel(). A failed job returns no rows.
  JobResult run_job(const lineage::NodePtr& root, PlanHook* hook, const std::string& statement);

  void arm(FaultEvent event);
  void kill_worker(size_t id);
  void set_delay(size_t id, double factor);
  void cancel() { cancel_.store(true); }

  bool evict(uint64_t node_id, size_t index);
  std::optional<lineage::StoredPartition> resident(uint64_t node_id, size_t index) const;
  std::optional<size_t> holder(uint64_t node_id, size_t index) const;
  bool fully_resident(const lineage::DatasetNode& node) const;

  const ClusterConfig& config() const { return config_; }
  ClusterConfig& mutable_config() { return config_; }
  const std::vector<WorkerState>& workers() const { return workers_; }
  size_t alive_workers() const;
  size_t jobs_run() const { return job_counter_; }
  // Report of the most recent failed job.
  const JobReport& last_failed_report() const { return last_report_; }
  const std::vector<FaultEvent>& armed() const;

 private:
  friend class JobRunner;
  class Executor;
  struct ArmedFault {
    FaultEvent event;
    uint64_t job;  // job ordinal it applies to, or max for any
  };

  // Marks the worker dead and drops its state; returns (partitions, map
  // outputs) lost.
  std::pair<size_t, size_t> drop_worker(size_t id);

  ClusterConfig config_;
  std::vector<WorkerState> workers_;
  std::vector<std::unique_ptr<Executor>> executors_;
  std::vector<ArmedFault> faults_;
  mutable std::vector<FaultEvent> armed_view_;
  std::set<std::pair<uint64_t, size_t>> ever_partitions_;
  std::set<std::pair<uint64_t, size_t>> ever_map_outputs_;
  std::atomic<bool> cancel_{false};
  size_t job_counter_ = 0;
  JobReport last_report_;
};

}  // namespace ember::engine
