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
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "common/error.hpp"
#include "engine/adaptive.hpp"
#include "engine/cluster.hpp"
#include "session/generators.hpp"
#include "sql/catalog.hpp"
#include "sql/logical.hpp"

namespace ember::session {

struct SessionConfig {
  size_t worker_count = 4;
  uint64_t broadcast_threshold_bytes = pde::kDefaultBroadcastThreshold;
  uint64_t target_bytes_per_reducer = pde::kDefaultTargetBytesPerReducer;
  bool speculation_on = true;
  bool binpack_enabled = false;
  std::string fault_schedule;
  uint64_t seed = 0;
  bool pruning_on = true;
  std::string join_strategy = "auto";
  size_t shuffle_partitions = 8;
  size_t partition_rows = 1024;
  size_t distribute_partitions = 8;
  size_t spill_threshold_bytes = engine::kDefaultSpillThreshold;
  double step_size = 1.0;
  std::string report_dir;

  // Short aliases work too (workers, broadcast_threshold, speculation, ...).
  // Throws InvalidArgument for unknown keys and bad values.
  void set(const std::string& key, const std::string& value);
  // key=value lines; blank lines and '#' comments are skipped.
  void load(std::string_view text);
  std::vector<std::pair<std::string, std::string>> entries() const;
};

// One command of a script: a meta-command line starting with '\', or a
// statement up to its ';'.
struct Command {
  std::string text;
  size_t offset = 0;  // into the script
};

// Finds the next command at or after `pos` and advances `pos` past it.
// A trailing statement without ';' counts only when `final` is set.
std::optional<Command> next_command(std::string_view script, size_t& pos, bool final);
std::vector<Command> split_commands(std::string_view script);

// 1-based line and column of a byte offset.
std::pair<size_t, size_t> line_column(std::string_view text, size_t offset);

struct Outcome {
  bool ok = true;
  std::string output;
  ErrorCode code = ErrorCode::kInternal;
  std::string message;
  std::optional<size_t> offset;  // into the command text
};

struct PlannedQuery {
  sql::LogicalPtr logical;
  sql::LogicalPtr optimized;
  lineage::NodePtr root;
};

// A shell session: catalog, simulated cluster and report sink. Commands run
// one at a time; cancel() may be called from another thread or a signal
// handler.
class Session {
 public:
  explicit Session(SessionConfig config);
  ~Session();
  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  // Never throws for command errors; they come back in the outcome.
  Outcome execute(const std::string& command);
  void cancel();

  const SessionConfig& config() const { return config_; }
  sql::Catalog& catalog() { return catalog_; }
  engine::Cluster& cluster() { return *cluster_; }
  const std::vector<engine::JobReport>& reports() const { return reports_; }
  const std::vector<std::string>& ml_records() const { return ml_records_; }

  PlannedQuery plan(const sql::SelectStmt& select) const;
  // The query's dataset node, not run. Throws parse and plan errors.
  lineage::NodePtr sql_to_dataset(const std::string& query) const;
  // Runs a job with the session's adaptive hook and records its report.
  engine::JobResult run(const lineage::NodePtr& root, const std::string& statement);
  std::unique_ptr<engine::PlanHook> make_hook() const;

  // Registers rows as a table split into partition_rows slices; `cache`
  // materializes it as columnar partitions.
  void add_table(const std::string& name, const GeneratedTable& table, bool cache, const std::string& source);

 private:
  struct Executed {
    lineage::NodePtr final_root;
    std::vector<std::string> decisions;
    size_t job = 0;
  };

  std::string dispatch(const std::string& command);
  std::string run_statement(const std::string& text);
  std::string run_select(const sql::Statement& stmt);
  std::string run_create(const sql::Statement& stmt);
  std::string run_drop(const sql::Statement& stmt);
  std::string run_ml(const std::string& text);
  std::string run_meta(const std::string& text);

  std::string explain(const std::string& query_text, size_t offset);
  std::string table_stats(const std::string& name);
  std::string metrics() const;
  std::string list_tables() const;
  std::string save_catalog(const std::string& path) const;
  std::string load_catalog(const std::string& path);
  std::string set_option(const std::string& key, const std::string& value);
  std::string gen_table(const std::vector<std::string>& args, const std::string& text);
  std::string register_file(const std::vector<std::string>& args, const std::string& text);

  std::vector<storage::PartitionStats> resident_stats(const lineage::NodePtr& dataset) const;
  void record(const engine::JobReport& report);
  void record_ml(const std::string& line);
  void rebuild_cluster();

  SessionConfig config_;
  sql::Catalog catalog_;
  std::unique_ptr<engine::Cluster> cluster_;
  std::vector<engine::JobReport> reports_;
  std::vector<std::string> ml_records_;
  std::map<std::string, Executed> executed_;
};

}  // namespace ember::session
