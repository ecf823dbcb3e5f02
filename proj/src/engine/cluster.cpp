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

#include "engine/cluster.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <deque>
#include <future>
#include <limits>
#include <mutex>
#include <queue>
#include <sstream>
#include <thread>

#include "common/error.hpp"

namespace ember::engine {

using lineage::DatasetNode;
using lineage::NodePtr;
using lineage::OpKind;
using lineage::StoredPartition;
using PartKey = std::pair<uint64_t, size_t>;

// What an executor hands back. Payloads are immutable and shared.
struct TaskResult {
  bool ok = false;
  ErrorCode code = ErrorCode::kInternal;
  std::string error;
  RowBatchPtr rows;
  std::shared_ptr<const MapOutput> map_output;
  std::vector<std::pair<PartKey, StoredPartition>> published;
  size_t rows_in = 0;
  size_t rows_out = 0;
};

// One executor thread per worker, fed through a mailbox.
class Cluster::Executor {
 public:
  Executor() : thread_([this] { loop(); }) {}
  ~Executor() {
    {
      std::lock_guard lock(mu_);
      stop_ = true;
    }
    cv_.notify_all();
    thread_.join();
  }

  std::future<TaskResult> submit(std::function<TaskResult()> fn) {
    std::packaged_task<TaskResult()> task(std::move(fn));
    auto fut = task.get_future();
    {
      std::lock_guard lock(mu_);
      mailbox_.push_back(std::move(task));
    }
    cv_.notify_one();
    return fut;
  }

 private:
  void loop() {
    for (;;) {
      std::packaged_task<TaskResult()> task;
      {
        std::unique_lock lock(mu_);
        cv_.wait(lock, [&] { return stop_ || !mailbox_.empty(); });
        if (mailbox_.empty()) return;
        task = std::move(mailbox_.front());
        mailbox_.pop_front();
      }
      task();
    }
  }

  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<std::packaged_task<TaskResult()>> mailbox_;
  bool stop_ = false;
  std::thread thread_;
};

namespace {

// Immutable view of everything reachable on alive workers at launch time.
struct StoreView {
  std::map<PartKey, StoredPartition> resident;
  std::map<PartKey, std::shared_ptr<const MapOutput>> maps;
};

class TaskStore : public lineage::PartitionStore {
 public:
  explicit TaskStore(std::shared_ptr<const StoreView> view) : view_(std::move(view)) {}

  std::optional<StoredPartition> find(const DatasetNode& node, size_t index) override {
    PartKey key{node.id, index};
    for (const auto& [k, p] : published) {
      if (k == key) return p;
    }
    auto it = view_->resident.find(key);
    if (it == view_->resident.end()) return std::nullopt;
    return it->second;
  }

  void publish(const DatasetNode& node, size_t index, const StoredPartition& part) override {
    published.emplace_back(PartKey{node.id, index}, part);
  }

  std::vector<RowBatchPtr> shuffle_input(const DatasetNode& exchange, size_t reduce) override {
    std::vector<RowBatchPtr> out;
    size_t maps = exchange.parents.at(0)->partition_count;
    for (size_t m = 0; m < maps; ++m) {
      auto it = view_->maps.find({exchange.id, m});
      if (it == view_->maps.end()) {
        fail(ErrorCode::kInternal, "map output " + std::to_string(m) + " of exchange " +
                                       std::to_string(exchange.id) + " is unavailable");
      }
      out.push_back(it->second->buckets.at(reduce).load());
    }
    return out;
  }

  std::vector<std::pair<PartKey, StoredPartition>> published;

 private:
  std::shared_ptr<const StoreView> view_;
};

TaskResult run_task(const Stage& stage, size_t index, std::shared_ptr<const StoreView> view,
                    const ShuffleOptions& options) {
  TaskResult r;
  try {
    TaskStore store(std::move(view));
    lineage::Evaluator ev(store);
    auto rows = ev.compute(stage.pipeline, index);
    r.rows_out = rows->size();
    if (stage.kind == StageKind::kShuffleMap) {
      const auto& spec = stage.output->as<lineage::ExchangeSpec>();
      r.map_output = std::make_shared<const MapOutput>(shuffle_write(*rows, spec.keys, spec.reducers, options));
    } else {
      r.rows = rows;
    }
    r.rows_in = ev.counters().rows_in;
    r.published = std::move(store.published);
    r.ok = true;
  } catch (const Error& e) {
    r.code = e.code();
    r.error = e.what();
  } catch (const std::exception& e) {
    r.code = ErrorCode::kInternal;
    r.error = e.what();
  }
  return r;
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') {
      out += '\\';
      out += c;
    } else if (c == '\n') {
      out += "\\n";
    } else {
      out += c;
    }
  }
  return out + "\"";
}

}  // namespace

std::string JobReport::to_line(bool include_wall) const {
  std::ostringstream o;
  o << "job=" << job << " status=" << status;
  if (!error.empty()) o << " error=" << quote(error);
  o << " statement=" << quote(statement) << " stages=" << plan_stages
    << " plan_shuffle_stages=" << plan_shuffle_stages << " shuffle_stages=" << shuffle_stages_run
    << " tasks=" << tasks << " attempts=" << attempts << " failed_attempts=" << failed_attempts
    << " speculative=" << speculative << " recomputed_tasks=" << recomputed_tasks
    << " recomputed_partitions=" << recomputed_partitions << " lost_partitions=" << lost_partitions
    << " lost_map_outputs=" << lost_map_outputs << " recovery_workers=" << recovery_workers
    << " workers_killed=" << workers_killed << " bytes_shuffled=" << bytes_shuffled
    << " spilled_buckets=" << spilled_buckets << " stats_max_bytes=" << stats_max_bytes
    << " partitions_scanned=" << partitions_scanned << " partitions_pruned=" << partitions_pruned
    << " rows=" << result_rows;
  std::string pde;
  for (size_t i = 0; i < decisions.size(); ++i) pde += (i ? "; " : "") + decisions[i];
  o << " pde=" << quote(pde);
  std::string detail;
  for (const auto& s : stages) {
    if (!detail.empty()) detail += "; ";
    detail += (s.ordinal ? std::to_string(*s.ordinal) : std::string("-")) + ":" + s.kind + ":" + s.label +
              " tasks=" + std::to_string(s.tasks) + "/" + std::to_string(s.task_count) +
              " attempts=" + std::to_string(s.attempts) + " failed=" + std::to_string(s.failed) +
              " speculative=" + std::to_string(s.speculative) + " bytes=" + std::to_string(s.bytes_shuffled) +
              (s.in_final_plan ? "" : " dropped");
  }
  o << " stage_detail=" << quote(detail) << " sim_time=" << sim_time;
  if (include_wall) o << " wall_ms=" << wall_ms;
  return o.str();
}

const StageReport* JobReport::stage_by_label(const std::string& label) const {
  for (const auto& s : stages) {
    if (s.label == label) return &s;
  }
  return nullptr;
}

Cluster::Cluster(ClusterConfig config) : config_(std::move(config)) {
  if (config_.workers == 0) fail(ErrorCode::kInvalidArgument, "worker_count must be at least 1");
  for (size_t i = 0; i < config_.workers; ++i) {
    WorkerState w;
    w.id = i;
    workers_.push_back(std::move(w));
    executors_.push_back(std::make_unique<Executor>());
  }
}

Cluster::~Cluster() = default;

void Cluster::arm(FaultEvent event) {
  if (event.worker >= workers_.size()) {
    fail(ErrorCode::kInvalidArgument, "no worker " + std::to_string(event.worker));
  }
  if (event.trigger == FaultEvent::Trigger::kNow) {
    if (event.action == FaultEvent::Action::kKill) {
      kill_worker(event.worker);
    } else {
      set_delay(event.worker, event.factor);
    }
    return;
  }
  uint64_t job = event.job ? job_counter_ + *event.job : std::numeric_limits<uint64_t>::max();
  faults_.push_back({event, job});
}

const std::vector<FaultEvent>& Cluster::armed() const {
  armed_view_.clear();
  for (const auto& f : faults_) armed_view_.push_back(f.event);
  return armed_view_;
}

std::pair<size_t, size_t> Cluster::drop_worker(size_t id) {
  auto& w = workers_.at(id);
  std::pair<size_t, size_t> lost{w.resident.size(), w.map_outputs.size()};
  w.alive = false;
  w.resident.clear();
  w.map_outputs.clear();
  return lost;
}

void Cluster::kill_worker(size_t id) {
  if (id >= workers_.size()) fail(ErrorCode::kInvalidArgument, "no worker " + std::to_string(id));
  drop_worker(id);
}

void Cluster::set_delay(size_t id, double factor) {
  if (id >= workers_.size()) fail(ErrorCode::kInvalidArgument, "no worker " + std::to_string(id));
  if (!(factor > 0)) fail(ErrorCode::kInvalidArgument, "delay factor must be positive");
  workers_[id].delay = factor;
}

bool Cluster::evict(uint64_t node_id, size_t index) {
  bool any = false;
  for (auto& w : workers_) any = w.resident.erase({node_id, index}) > 0 || any;
  return any;
}

std::optional<StoredPartition> Cluster::resident(uint64_t node_id, size_t index) const {
  for (const auto& w : workers_) {
    if (!w.alive) continue;
    if (auto it = w.resident.find({node_id, index}); it != w.resident.end()) return it->second;
  }
  return std::nullopt;
}

std::optional<size_t> Cluster::holder(uint64_t node_id, size_t index) const {
  for (const auto& w : workers_) {
    if (w.alive && w.resident.count({node_id, index})) return w.id;
  }
  return std::nullopt;
}

bool Cluster::fully_resident(const DatasetNode& node) const {
  for (size_t i = 0; i < node.partition_count; ++i) {
    if (!holder(node.id, i)) return false;
  }
  return true;
}

size_t Cluster::alive_workers() const {
  size_t n = 0;
  for (const auto& w : workers_) n += w.alive;
  return n;
}

// Drives one job: a discrete-event simulation over a virtual clock. Tasks
// really run on executor threads; their simulated duration is derived from
// the rows they touch, so the schedule does not depend on host timing.
class JobRunner : public StatsView {
 public:
  JobRunner(Cluster& cluster, NodePtr root, PlanHook* hook, std::string statement)
      : c_(cluster), root_(std::move(root)), hook_(hook) {
    report_.statement = std::move(statement);
  }

  JobResult run();
  const JobReport& report() const { return report_; }

  bool complete(uint64_t exchange_id) const override {
    const Stage* s = graph_.find(exchange_id);
    return s && stage_complete(*s);
  }

  pde::GlobalStats stats(uint64_t exchange_id) const override {
    const Stage* s = graph_.find(exchange_id);
    std::vector<pde::TaskStats> parts;
    if (s) {
      for (size_t m = 0; m < s->task_count; ++m) {
        if (auto out = map_output(exchange_id, m)) parts.push_back(out->stats);
      }
    }
    return pde::aggregate_stats(parts);
  }

 private:
  struct Attempt {
    size_t id = 0;
    uint64_t stage = 0;
    size_t index = 0;
    size_t worker = 0;
    uint64_t start = 0;
    bool speculative = false;
    bool live = true;
    bool backup_wanted = false;
    bool has_backup = false;
    std::future<TaskResult> future;
    TaskResult result;
  };

  enum class EventKind { kFault, kComplete, kCheck };
  struct Event {
    uint64_t time;
    size_t worker;
    uint64_t seq;
    EventKind kind;
    size_t ref;
    bool operator>(const Event& o) const {
      return std::tie(time, worker, seq) > std::tie(o.time, o.worker, o.seq);
    }
  };

  using TaskKey = std::pair<uint64_t, size_t>;

  std::shared_ptr<const MapOutput> map_output(uint64_t exchange, size_t m) const {
    for (const auto& w : c_.workers_) {
      if (!w.alive) continue;
      if (auto it = w.map_outputs.find({exchange, m}); it != w.map_outputs.end()) return it->second;
    }
    return nullptr;
  }

  bool task_done(const Stage& s, size_t i) const {
    if (s.kind == StageKind::kResult) return collected_.count(i) > 0;
    return map_output(s.key(), i) != nullptr;
  }

  size_t done_count(const Stage& s) const {
    size_t n = 0;
    for (size_t i = 0; i < s.task_count; ++i) n += task_done(s, i);
    return n;
  }

  bool stage_complete(const Stage& s) const { return done_count(s) == s.task_count; }

  bool persisted_complete(uint64_t id) const {
    auto it = nodes_.find(id);
    return it != nodes_.end() && c_.fully_resident(*it->second);
  }

  void replan();
  std::vector<const Stage*> runnable();
  bool fire_faults(FaultEvent::Trigger trigger, uint64_t value);
  void fire(const FaultEvent& e);
  std::optional<size_t> preferred(const Stage& s, size_t index) const;
  void launch(const Stage& s, size_t index, size_t worker, bool speculative);
  std::shared_ptr<const StoreView> view();
  void handle_complete(Attempt& a);
  void fail_attempt(Attempt& a, const std::string& why);
  void free_worker(size_t w) { busy_[w].reset(); }
  void consider_speculation(const Stage& s);
  double median(uint64_t stage) const;
  void notify_hook();
  StageReport& stage_report(const Stage& s);
  void finish();

  Cluster& c_;
  NodePtr root_;
  PlanHook* hook_;
  StageGraph graph_;
  std::map<uint64_t, NodePtr> nodes_;
  JobReport report_;

  std::map<size_t, RowBatchPtr> collected_;
  std::vector<std::unique_ptr<Attempt>> attempts_;
  std::vector<std::optional<size_t>> busy_;
  std::map<TaskKey, size_t> failures_;
  std::map<TaskKey, bool> launched_;
  std::map<uint64_t, std::vector<uint64_t>> durations_;
  std::map<uint64_t, size_t> ordinals_;
  std::map<uint64_t, StageReport> stage_reports_;
  std::vector<uint64_t> stage_order_;
  std::set<uint64_t> notified_;
  std::set<uint64_t> seen_exchanges_;
  std::set<size_t> recovery_workers_;
  std::vector<FaultEvent> faults_;  // applicable to this job, unfired
  std::priority_queue<Event, std::vector<Event>, std::greater<>> events_;
  std::vector<size_t> fresh_;  // attempts launched this round
  std::shared_ptr<const StoreView> view_;
  bool view_dirty_ = true;
  uint64_t now_ = 0;
  uint64_t seq_ = 0;
  size_t completions_ = 0;
  size_t next_ordinal_ = 0;
};

void JobRunner::replan() {
  graph_ = plan_stages(root_);
  nodes_.clear();
  for (const auto& n : lineage::lineage_closure(root_)) nodes_[n->id] = n;
  for (const auto& s : graph_.stages) {
    stage_report(s);
    if (s.kind == StageKind::kShuffleMap) seen_exchanges_.insert(s.key());
  }
  // Rewrites may only touch stages that have not started.
  for (const auto& a : attempts_) {
    if (a->live && !graph_.find(a->stage)) {
      fail(ErrorCode::kInternal, "plan rewrite removed a running stage");
    }
  }
}

StageReport& JobRunner::stage_report(const Stage& s) {
  auto [it, inserted] = stage_reports_.try_emplace(s.key());
  if (inserted) {
    it->second.key = s.key();
    it->second.kind = s.kind == StageKind::kResult ? "result" : "map";
    it->second.label = s.label();
    it->second.task_count = s.task_count;
    stage_order_.push_back(s.key());
  }
  return it->second;
}

std::vector<const Stage*> JobRunner::runnable() {
  std::set<uint64_t> visited, blocked;
  std::function<void(const Stage&)> visit = [&](const Stage& s) {
    if (!visited.insert(s.key()).second) return;
    for (const auto& dep : s.deps) {
      if (dep.guard && persisted_complete(*dep.guard)) continue;
      const Stage* d = graph_.find(dep.exchange);
      if (!d) fail(ErrorCode::kInternal, "stage dependency missing from plan");
      if (!stage_complete(*d)) {
        blocked.insert(s.key());
        visit(*d);
      }
    }
  };
  if (!stage_complete(graph_.result())) visit(graph_.result());
  std::vector<const Stage*> out;
  for (const auto& s : graph_.stages) {
    if (!visited.count(s.key()) || blocked.count(s.key()) || stage_complete(s)) continue;
    if (hook_ && s.kind == StageKind::kShuffleMap && hook_->hold(root_, s.key(), *this)) continue;
    out.push_back(&s);
  }
  return out;
}

std::optional<size_t> JobRunner::preferred(const Stage& s, size_t index) const {
  NodePtr n = s.pipeline;
  while (n) {
    if (n->persisted()) return c_.holder(n->id, index);
    switch (n->kind) {
      case OpKind::kMap:
      case OpKind::kFilter:
      case OpKind::kProject:
      case OpKind::kLocalAggregate:
      case OpKind::kLimit:
      case OpKind::kSort:
      case OpKind::kPrune:
      case OpKind::kHashJoinLocal:
      case OpKind::kBroadcastJoin:
        n = n->parents.at(0);
        break;
      default:
        return std::nullopt;
    }
  }
  return std::nullopt;
}

std::shared_ptr<const StoreView> JobRunner::view() {
  if (view_dirty_ || !view_) {
    auto v = std::make_shared<StoreView>();
    for (const auto& w : c_.workers_) {
      if (!w.alive) continue;
      for (const auto& [k, p] : w.resident) v->resident.emplace(k, p);
      for (const auto& [k, m] : w.map_outputs) v->maps.emplace(k, m);
    }
    view_ = std::move(v);
    view_dirty_ = false;
  }
  return view_;
}

void JobRunner::launch(const Stage& s, size_t index, size_t worker, bool speculative) {
  auto a = std::make_unique<Attempt>();
  a->id = attempts_.size();
  a->stage = s.key();
  a->index = index;
  a->worker = worker;
  a->start = now_;
  a->speculative = speculative;
  Stage copy = s;
  auto snapshot = view();
  ShuffleOptions options = c_.config_.shuffle;
  a->future = c_.executors_[worker]->submit(
      [copy = std::move(copy), index, snapshot, options] { return run_task(copy, index, snapshot, options); });
  busy_[worker] = a->id;

  auto& sr = stage_report(s);
  if (!ordinals_.count(s.key())) ordinals_[s.key()] = next_ordinal_++;
  sr.ordinal = ordinals_[s.key()];
  ++sr.attempts;
  ++report_.attempts;
  if (speculative) {
    ++sr.speculative;
    ++report_.speculative;
  }
  bool& was = launched_[{s.key(), index}];
  if (!was) {
    was = true;
    ++sr.tasks;
    ++report_.tasks;
  }
  fresh_.push_back(a->id);
  attempts_.push_back(std::move(a));
}

bool JobRunner::fire_faults(FaultEvent::Trigger trigger, uint64_t value) {
  bool fired = false;
  for (size_t i = 0; i < faults_.size();) {
    const auto& f = faults_[i];
    bool hit = f.trigger == trigger &&
               (trigger == FaultEvent::Trigger::kStage ? f.at == value : f.at <= value);
    if (!hit) {
      ++i;
      continue;
    }
    FaultEvent e = f;
    faults_.erase(faults_.begin() + static_cast<std::ptrdiff_t>(i));
    fire(e);
    fired = true;
  }
  return fired;
}

void JobRunner::fire(const FaultEvent& e) {
  // Remove from the cluster's armed list.
  for (auto it = c_.faults_.begin(); it != c_.faults_.end(); ++it) {
    if (it->event == e) {
      c_.faults_.erase(it);
      break;
    }
  }
  if (e.action == FaultEvent::Action::kDelay) {
    c_.workers_[e.worker].delay = e.factor;
    return;
  }
  if (!c_.workers_[e.worker].alive) return;
  auto [parts, maps] = c_.drop_worker(e.worker);
  report_.lost_partitions += parts;
  report_.lost_map_outputs += maps;
  ++report_.workers_killed;
  view_dirty_ = true;
  if (busy_[e.worker]) fail_attempt(*attempts_[*busy_[e.worker]], "worker lost");
  if (c_.alive_workers() == 0) fail(ErrorCode::kUnrecoverable, "no alive workers remain");
}

void JobRunner::fail_attempt(Attempt& a, const std::string& why) {
  a.live = false;
  free_worker(a.worker);
  ++report_.failed_attempts;
  ++stage_reports_[a.stage].failed;
  size_t& n = failures_[{a.stage, a.index}];
  if (++n >= c_.config_.max_attempts) {
    fail(ErrorCode::kUnrecoverable, "task " + std::to_string(a.index) + " failed " + std::to_string(n) +
                                        " times: " + why);
  }
}

double JobRunner::median(uint64_t stage) const {
  auto it = durations_.find(stage);
  if (it == durations_.end() || it->second.empty()) return -1;
  auto d = it->second;
  std::sort(d.begin(), d.end());
  size_t n = d.size();
  return n % 2 ? static_cast<double>(d[n / 2]) : (static_cast<double>(d[n / 2 - 1]) + static_cast<double>(d[n / 2])) / 2;
}

void JobRunner::consider_speculation(const Stage& s) {
  if (!c_.config_.speculation) return;
  double med = median(s.key());
  if (med < 0) return;
  if (2 * done_count(s) < s.task_count) return;
  for (auto& a : attempts_) {
    if (!a->live || a->speculative || a->has_backup || a->backup_wanted || a->stage != s.key()) continue;
    double threshold = static_cast<double>(a->start) + 2 * med;
    if (static_cast<double>(now_) > threshold) {
      a->backup_wanted = true;
    } else {
      events_.push({static_cast<uint64_t>(std::floor(threshold)) + 1, a->worker, seq_++, EventKind::kCheck, a->id});
    }
  }
}

void JobRunner::handle_complete(Attempt& a) {
  const Stage* s = graph_.find(a.stage);
  free_worker(a.worker);
  a.live = false;
  TaskResult& r = a.result;
  if (!r.ok) {
    if (r.code == ErrorCode::kSourceUnavailable) fail(ErrorCode::kUnrecoverable, r.error);
    if (r.code == ErrorCode::kCancelled) fail(ErrorCode::kCancelled, r.error);
    a.live = true;  // fail_attempt expects a live attempt
    fail_attempt(a, r.error);
    return;
  }
  if (!s) fail(ErrorCode::kInternal, "completed attempt for an unknown stage");
  if (task_done(*s, a.index)) return;  // a sibling attempt won

  auto& w = c_.workers_[a.worker];
  for (const auto& [key, part] : r.published) {
    if (c_.ever_partitions_.count(key)) {
      ++report_.recomputed_partitions;
      recovery_workers_.insert(a.worker);
    }
    c_.ever_partitions_.insert(key);
    w.resident[key] = part;
  }
  if (s->kind == StageKind::kShuffleMap) {
    PartKey key{a.stage, a.index};
    if (c_.ever_map_outputs_.count(key)) {
      ++report_.recomputed_tasks;
      recovery_workers_.insert(a.worker);
    }
    c_.ever_map_outputs_.insert(key);
    w.map_outputs[key] = r.map_output;
    auto& sr = stage_reports_[a.stage];
    sr.bytes_shuffled += r.map_output->bytes;
    report_.bytes_shuffled += r.map_output->bytes;
    report_.stats_max_bytes = std::max(report_.stats_max_bytes, r.map_output->stats_bytes);
    for (const auto& b : r.map_output->buckets) report_.spilled_buckets += b.spilled();
  } else {
    collected_[a.index] = r.rows;
  }
  view_dirty_ = true;

  // Retire the losing attempts of the same task.
  for (auto& other : attempts_) {
    if (other->live && other->stage == a.stage && other->index == a.index) {
      other->live = false;
      free_worker(other->worker);
    }
  }
  durations_[a.stage].push_back(now_ - a.start);
  ++completions_;
  fire_faults(FaultEvent::Trigger::kTask, completions_);
  consider_speculation(*s);
}

void JobRunner::notify_hook() {
  if (!hook_) return;
  for (bool again = true; again;) {
    again = false;
    for (const auto& s : graph_.stages) {
      if (s.kind != StageKind::kShuffleMap || notified_.count(s.key()) || !stage_complete(s)) continue;
      notified_.insert(s.key());
      if (NodePtr next = hook_->after_stage(root_, s.key(), *this); next && next != root_) {
        root_ = next;
        replan();
        again = true;
        break;
      }
    }
  }
}

void JobRunner::finish() {
  // Map outputs live for the job unless a persisted dataset may need them
  // for recovery later.
  std::set<uint64_t> keep;
  for (const auto& [id, n] : nodes_) {
    if (!n->persisted()) continue;
    for (const auto& m : lineage::lineage_closure(n)) {
      if (m->kind == OpKind::kExchange) keep.insert(m->id);
    }
  }
  for (auto& w : c_.workers_) {
    for (auto it = w.map_outputs.begin(); it != w.map_outputs.end();) {
      bool drop = seen_exchanges_.count(it->first.first) && !keep.count(it->first.first);
      it = drop ? w.map_outputs.erase(it) : std::next(it);
    }
  }
  // A discarded map output rebuilt by a later job is fresh work, not recovery.
  for (auto it = c_.ever_map_outputs_.begin(); it != c_.ever_map_outputs_.end();) {
    bool drop = seen_exchanges_.count(it->first) && !keep.count(it->first);
    it = drop ? c_.ever_map_outputs_.erase(it) : std::next(it);
  }
  report_.plan_stages = graph_.stages.size();
  report_.plan_shuffle_stages = graph_.shuffle_stage_count();
  report_.recovery_workers = recovery_workers_.size();
  report_.sim_time = now_;
  std::vector<StageReport> stages;
  for (uint64_t key : stage_order_) {
    StageReport sr = stage_reports_[key];
    sr.in_final_plan = graph_.find(key) != nullptr;
    if (sr.kind == "map" && sr.tasks > 0) ++report_.shuffle_stages_run;
    stages.push_back(sr);
  }
  std::stable_sort(stages.begin(), stages.end(), [](const StageReport& a, const StageReport& b) {
    size_t oa = a.ordinal.value_or(std::numeric_limits<size_t>::max());
    size_t ob = b.ordinal.value_or(std::numeric_limits<size_t>::max());
    return oa < ob;
  });
  report_.stages = std::move(stages);
  for (const auto& [id, n] : nodes_) {
    if (n->kind != OpKind::kPrune) continue;
    for (bool k : n->as<lineage::PruneSpec>().keep) {
      if (k) ++report_.partitions_scanned;
      else ++report_.partitions_pruned;
    }
  }
  if (hook_) report_.decisions = hook_->decisions();
}

JobResult JobRunner::run() {
  auto wall_start = std::chrono::steady_clock::now();
  report_.job = c_.job_counter_++;
  busy_.assign(c_.workers_.size(), std::nullopt);
  for (const auto& f : c_.faults_) {
    if (f.job == std::numeric_limits<uint64_t>::max() || f.job == report_.job) faults_.push_back(f.event);
  }
  for (const auto& f : faults_) {
    if (f.trigger == FaultEvent::Trigger::kTime) events_.push({f.at, 0, seq_++, EventKind::kFault, 0});
  }
  replan();

  auto body = [&] {
    if (c_.alive_workers() == 0) fail(ErrorCode::kUnrecoverable, "no alive workers remain");
    fire_faults(FaultEvent::Trigger::kTask, 0);
    for (;;) {
      if (c_.cancel_.exchange(false)) fail(ErrorCode::kCancelled, "job cancelled");
      notify_hook();
      if (stage_complete(graph_.result())) break;

      auto ready = runnable();
      bool fired = false;
      for (const Stage* s : ready) {
        if (ordinals_.count(s->key())) continue;
        ordinals_[s->key()] = next_ordinal_++;
        stage_report(*s).ordinal = ordinals_[s->key()];
        fired = fire_faults(FaultEvent::Trigger::kStage, ordinals_[s->key()]) || fired;
      }
      if (fired) continue;

      std::stable_sort(ready.begin(), ready.end(),
                       [&](const Stage* a, const Stage* b) { return ordinals_[a->key()] < ordinals_[b->key()]; });
      struct Pending {
        const Stage* stage;
        size_t index;
        std::optional<size_t> pref;
      };
      std::vector<Pending> pending;
      std::set<TaskKey> running;
      for (const auto& a : attempts_) {
        if (a->live) running.insert({a->stage, a->index});
      }
      std::map<size_t, size_t> queued;  // preferred worker -> pending count
      for (const Stage* s : ready) {
        for (size_t i = 0; i < s->task_count; ++i) {
          if (task_done(*s, i) || running.count({s->key(), i})) continue;
          auto pref = preferred(*s, i);
          if (pref) ++queued[*pref];
          pending.push_back({s, i, pref});
        }
      }

      fresh_.clear();
      for (size_t w = 0; w < c_.workers_.size(); ++w) {
        if (!c_.workers_[w].alive || busy_[w]) continue;
        auto pick = pending.end();
        for (auto it = pending.begin(); it != pending.end(); ++it) {
          if (it->pref == w) {
            pick = it;
            break;
          }
        }
        if (pick == pending.end()) {
          for (auto it = pending.begin(); it != pending.end(); ++it) {
            if (!it->pref || !c_.workers_[*it->pref].alive) {
              pick = it;
              break;
            }
          }
        }
        if (pick == pending.end()) {
          for (auto it = pending.begin(); it != pending.end(); ++it) {
            if (queued[*it->pref] > c_.config_.locality_threshold) {
              pick = it;
              break;
            }
          }
        }
        if (pick == pending.end()) continue;
        if (pick->pref) --queued[*pick->pref];
        launch(*pick->stage, pick->index, w, false);
        pending.erase(pick);
      }

      // Backups go to workers left idle.
      for (size_t i = 0; i < attempts_.size(); ++i) {
        Attempt& a = *attempts_[i];
        if (!a.live || !a.backup_wanted || a.has_backup) continue;
        for (size_t w = 0; w < c_.workers_.size(); ++w) {
          if (w == a.worker || !c_.workers_[w].alive || busy_[w]) continue;
          const Stage* s = graph_.find(a.stage);
          if (!s) break;
          a.has_backup = true;
          launch(*s, a.index, w, true);
          break;
        }
      }

      for (size_t id : fresh_) {
        Attempt& a = *attempts_[id];
        a.result = a.future.get();
        double base = 1.0 + static_cast<double>(a.result.rows_in + a.result.rows_out);
        auto duration = static_cast<uint64_t>(std::llround(base * c_.workers_[a.worker].delay));
        events_.push({a.start + std::max<uint64_t>(duration, 1), a.worker, seq_++, EventKind::kComplete, id});
      }
      fresh_.clear();

      if (events_.empty()) {
        if (c_.alive_workers() == 0) fail(ErrorCode::kUnrecoverable, "no alive workers remain");
        fail(ErrorCode::kInternal, "scheduler stalled with " + std::to_string(pending.size()) + " pending tasks");
      }
      Event ev = events_.top();
      events_.pop();
      now_ = std::max(now_, ev.time);
      switch (ev.kind) {
        case EventKind::kFault:
          fire_faults(FaultEvent::Trigger::kTime, now_);
          break;
        case EventKind::kComplete: {
          Attempt& a = *attempts_[ev.ref];
          if (a.live) handle_complete(a);
          break;
        }
        case EventKind::kCheck: {
          Attempt& a = *attempts_[ev.ref];
          const Stage* s = graph_.find(a.stage);
          if (a.live && s) {
            double med = median(a.stage);
            if (med >= 0 && 2 * done_count(*s) >= s->task_count &&
                static_cast<double>(now_ - a.start) > 2 * med) {
              a.backup_wanted = true;
            }
          }
          break;
        }
      }
    }
  };

  try {
    body();
  } catch (const Error& e) {
    report_.status = "error";
    report_.error = std::string(error_code_name(e.code())) + ": " + e.what();
    finish();
    report_.wall_ms = static_cast<uint64_t>(std::chrono::duration_cast<std::chrono::milliseconds>(
                                                std::chrono::steady_clock::now() - wall_start)
                                                .count());
    throw;
  }
  // Faults tied to this job that never triggered expire with it.
  std::erase_if(c_.faults_, [&](const Cluster::ArmedFault& f) { return f.job == report_.job; });

  finish();
  JobResult result;
  result.final_root = root_;
  for (const auto& [i, rows] : collected_) {
    result.rows.insert(result.rows.end(), rows->begin(), rows->end());
  }
  report_.result_rows = result.rows.size();
  report_.wall_ms = static_cast<uint64_t>(
      std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - wall_start).count());
  result.report = report_;
  return result;
}

JobResult Cluster::run_job(const NodePtr& root, PlanHook* hook, const std::string& statement) {
  cancel_.store(false);
  JobRunner runner(*this, root, hook, statement);
  try {
    return runner.run();
  } catch (...) {
    last_report_ = runner.report();
    throw;
  }
}

}  // namespace ember::engine
