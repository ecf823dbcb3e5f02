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

#include "session/session.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "engine/faults.hpp"
#include "lineage/functions.hpp"
#include "lineage/source.hpp"
#include "ml/algorithms.hpp"
#include "sql/parser.hpp"
#include "sql/physical.hpp"
#include "storage/manifest.hpp"

namespace ember::session {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

std::string trim(std::string_view s) {
  size_t b = 0;
  size_t e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

// Collapses whitespace runs and drops a trailing ';'.
std::string normalize(std::string_view s) {
  std::string out;
  bool space = false;
  for (char c : s) {
    if (is_space(c)) {
      space = !out.empty();
      continue;
    }
    if (space) out += ' ';
    space = false;
    out += c;
  }
  while (!out.empty() && (out.back() == ';' || out.back() == ' ')) out.pop_back();
  return out;
}

std::vector<std::string> split_words(std::string_view s) {
  std::vector<std::string> out;
  size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_space(s[i])) ++i;
    size_t b = i;
    while (i < s.size() && !is_space(s[i])) ++i;
    if (i > b) out.emplace_back(s.substr(b, i - b));
  }
  return out;
}

uint64_t parse_u64(const std::string& text, const std::string& what) {
  uint64_t v = 0;
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || p != text.data() + text.size()) {
    fail(ErrorCode::kInvalidArgument, what + " must be a non-negative integer, got '" + text + "'");
  }
  return v;
}

uint64_t parse_positive(const std::string& text, const std::string& what) {
  uint64_t v = parse_u64(text, what);
  if (v == 0) fail(ErrorCode::kInvalidArgument, what + " must be positive");
  return v;
}

double parse_real(const std::string& text, const std::string& what) {
  try {
    size_t used = 0;
    double v = std::stod(text, &used);
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  fail(ErrorCode::kInvalidArgument, what + " must be a number, got '" + text + "'");
}

bool parse_bool(const std::string& text, const std::string& what) {
  std::string t = to_lower(text);
  if (t == "true" || t == "on" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "off" || t == "0" || t == "no") return false;
  fail(ErrorCode::kInvalidArgument, what + " must be true or false, got '" + text + "'");
}

std::string unquote(const std::string& s) {
  if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front()) {
    return s.substr(1, s.size() - 2);
  }
  return s;
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

std::string real(double v) { return to_string(Value(v)); }

std::string csv_field(const std::string& s, bool force) {
  bool needs = force || s.empty();
  for (char c : s) needs = needs || c == ',' || c == '"' || c == '\n' || c == '\r';
  if (!needs) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string csv_value(const Value& v) {
  if (v.is_null()) return "";
  if (v.type() == Type::kUtf8) return csv_field(v.as_string(), v.as_string().empty());
  return to_string(v);
}

std::string row_count_line(size_t n) { return "(" + std::to_string(n) + (n == 1 ? " row)\n" : " rows)\n"); }

std::string csv(const std::vector<std::string>& names, const RowBatch& rows) {
  std::string out;
  for (size_t i = 0; i < names.size(); ++i) out += (i ? "," : "") + csv_field(names[i], false);
  out += '\n';
  for (const auto& r : rows) {
    for (size_t i = 0; i < r.size(); ++i) out += (i ? "," : "") + csv_value(r[i]);
    out += '\n';
  }
  return out + row_count_line(rows.size());
}

std::vector<std::string> names_of(const Schema& s) {
  std::vector<std::string> out;
  for (const auto& c : s) out.push_back(c.name);
  return out;
}

// Key under which an executed query's final plan is remembered.
std::string query_key(std::string_view text) {
  std::string k = normalize(text);
  if (k.size() > 8 && iequals(k.substr(0, 8), "explain ")) k = k.substr(8);
  return k;
}

void ensure_newline(std::string& s) {
  if (!s.empty() && s.back() != '\n') s += '\n';
}

}  // namespace

void SessionConfig::set(const std::string& raw_key, const std::string& value) {
  std::string key = to_lower(raw_key);
  if (key == "worker_count" || key == "workers") {
    worker_count = parse_positive(value, key);
  } else if (key == "broadcast_threshold_bytes" || key == "broadcast_threshold") {
    broadcast_threshold_bytes = parse_positive(value, key);
  } else if (key == "target_bytes_per_reducer") {
    target_bytes_per_reducer = parse_positive(value, key);
  } else if (key == "speculation_on" || key == "speculation") {
    speculation_on = parse_bool(value, key);
  } else if (key == "binpack_enabled" || key == "binpack") {
    binpack_enabled = parse_bool(value, key);
  } else if (key == "fault_schedule" || key == "faults") {
    engine::parse_fault_schedule(value);
    fault_schedule = value;
  } else if (key == "seed") {
    seed = parse_u64(value, key);
  } else if (key == "pruning_on" || key == "pruning") {
    pruning_on = parse_bool(value, key);
  } else if (key == "join_strategy") {
    engine::parse_join_mode(value);
    join_strategy = to_lower(value);
  } else if (key == "shuffle_partitions") {
    shuffle_partitions = parse_positive(value, key);
  } else if (key == "partition_rows") {
    partition_rows = parse_positive(value, key);
  } else if (key == "distribute_partitions") {
    distribute_partitions = parse_positive(value, key);
  } else if (key == "spill_threshold_bytes") {
    spill_threshold_bytes = parse_positive(value, key);
  } else if (key == "step_size") {
    double v = parse_real(value, key);
    if (!(v > 0)) fail(ErrorCode::kInvalidArgument, "step_size must be positive");
    step_size = v;
  } else if (key == "report_dir") {
    report_dir = value;
  } else {
    fail(ErrorCode::kInvalidArgument, "unknown setting '" + raw_key + "'");
  }
}

void SessionConfig::load(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    size_t eq = t.find('=');
    if (eq == std::string::npos) {
      fail(ErrorCode::kInvalidArgument, "config line " + std::to_string(number) + ": expected key=value");
    }
    try {
      set(trim(t.substr(0, eq)), unquote(trim(t.substr(eq + 1))));
    } catch (const Error& e) {
      fail(e.code(), "config line " + std::to_string(number) + ": " + e.what());
    }
  }
}

std::vector<std::pair<std::string, std::string>> SessionConfig::entries() const {
  auto b = [](bool v) { return std::string(v ? "true" : "false"); };
  return {{"worker_count", std::to_string(worker_count)},
          {"broadcast_threshold_bytes", std::to_string(broadcast_threshold_bytes)},
          {"target_bytes_per_reducer", std::to_string(target_bytes_per_reducer)},
          {"speculation_on", b(speculation_on)},
          {"binpack_enabled", b(binpack_enabled)},
          {"fault_schedule", fault_schedule},
          {"seed", std::to_string(seed)},
          {"pruning_on", b(pruning_on)},
          {"join_strategy", join_strategy},
          {"shuffle_partitions", std::to_string(shuffle_partitions)},
          {"partition_rows", std::to_string(partition_rows)},
          {"distribute_partitions", std::to_string(distribute_partitions)},
          {"spill_threshold_bytes", std::to_string(spill_threshold_bytes)},
          {"step_size", real(step_size)},
          {"report_dir", report_dir}};
}

std::optional<Command> next_command(std::string_view s, size_t& pos, bool final) {
  size_t i = pos;
  for (;;) {
    while (i < s.size() && is_space(s[i])) ++i;
    if (s.compare(i, 2, "--") == 0) {
      while (i < s.size() && s[i] != '\n') ++i;
      continue;
    }
    break;
  }
  if (i >= s.size()) {
    pos = i;
    return std::nullopt;
  }
  size_t start = i;
  if (s[i] == '\\') {
    size_t end = s.find('\n', i);
    if (end == std::string_view::npos) end = s.size();
    pos = end;
    return Command{trim(s.substr(start, end - start)), start};
  }
  char q = 0;
  while (i < s.size()) {
    char c = s[i];
    if (q) {
      if (c == q) q = 0;
      ++i;
    } else if (c == '\'' || c == '"' || c == '`') {
      q = c;
      ++i;
    } else if (s.compare(i, 2, "--") == 0) {
      while (i < s.size() && s[i] != '\n') ++i;
    } else if (s.compare(i, 2, "/*") == 0) {
      size_t end = s.find("*/", i + 2);
      i = end == std::string_view::npos ? s.size() : end + 2;
    } else if (c == ';') {
      pos = i + 1;
      return Command{std::string(s.substr(start, i - start)), start};
    } else {
      ++i;
    }
  }
  if (!final) return std::nullopt;
  pos = s.size();
  return Command{std::string(s.substr(start)), start};
}

std::vector<Command> split_commands(std::string_view script) {
  std::vector<Command> out;
  size_t pos = 0;
  while (auto c = next_command(script, pos, true)) out.push_back(std::move(*c));
  return out;
}

std::pair<size_t, size_t> line_column(std::string_view text, size_t offset) {
  size_t line = 1;
  size_t col = 1;
  for (size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

Session::Session(SessionConfig config) : config_(std::move(config)) {
  rebuild_cluster();
  if (!config_.report_dir.empty()) set_option("report_dir", config_.report_dir);
}

Session::~Session() = default;

void Session::rebuild_cluster() {
  engine::ClusterConfig cc;
  cc.workers = config_.worker_count;
  cc.speculation = config_.speculation_on;
  cc.shuffle.spill_threshold_bytes = config_.spill_threshold_bytes;
  auto fresh = std::make_unique<engine::Cluster>(cc);
  for (const auto& e : engine::parse_fault_schedule(config_.fault_schedule)) {
    if (e.worker >= cc.workers) fail(ErrorCode::kInvalidArgument, "no worker " + std::to_string(e.worker));
    fresh->arm(e);
  }
  cluster_ = std::move(fresh);
}

void Session::cancel() {
  if (cluster_) cluster_->cancel();
}

Outcome Session::execute(const std::string& command) {
  Outcome out;
  try {
    out.output = dispatch(command);
  } catch (const Error& e) {
    out.ok = false;
    out.code = e.code();
    out.message = e.what();
    out.offset = e.offset();
  } catch (const std::exception& e) {
    out.ok = false;
    out.code = ErrorCode::kInternal;
    out.message = e.what();
  }
  return out;
}

std::string Session::dispatch(const std::string& command) {
  size_t b = 0;
  while (b < command.size() && is_space(command[b])) ++b;
  if (b == command.size()) return "";
  if (command[b] == '\\') return run_meta(command);
  auto words = split_words(command.substr(b, 16));
  if (!words.empty() && iequals(words[0], "ml")) return run_ml(command);
  return run_statement(command);
}

PlannedQuery Session::plan(const sql::SelectStmt& select) const {
  PlannedQuery p;
  p.logical = sql::bind_select(select, catalog_);
  sql::OptimizeOptions o;
  o.pruning = config_.pruning_on;
  p.optimized = sql::optimize(p.logical, o);
  sql::PhysicalOptions po;
  po.shuffle_partitions = config_.shuffle_partitions;
  p.root = sql::lower(p.optimized, po);
  return p;
}

lineage::NodePtr Session::sql_to_dataset(const std::string& query) const {
  auto stmt = sql::parse(query);
  if (stmt.kind != sql::Statement::Kind::kSelect || stmt.explain) {
    fail(ErrorCode::kPlan, "expected a SELECT query", 0);
  }
  return plan(stmt.select).root;
}

std::unique_ptr<engine::PlanHook> Session::make_hook() const {
  engine::AdaptiveOptions o;
  o.join_mode = engine::parse_join_mode(config_.join_strategy);
  o.broadcast_threshold = config_.broadcast_threshold_bytes;
  o.reducers.target_bytes_per_reducer = config_.target_bytes_per_reducer;
  o.reducers.binpack = config_.binpack_enabled;
  o.binpack_aggregates = config_.binpack_enabled;
  return std::make_unique<engine::AdaptiveJoinHook>(o);
}

engine::JobResult Session::run(const lineage::NodePtr& root, const std::string& statement) {
  auto hook = make_hook();
  try {
    auto result = cluster_->run_job(root, hook.get(), normalize(statement));
    record(result.report);
    return result;
  } catch (const Error&) {
    record(cluster_->last_failed_report());
    throw;
  }
}

void Session::record(const engine::JobReport& report) {
  reports_.push_back(report);
  if (config_.report_dir.empty()) return;
  namespace fs = std::filesystem;
  std::ofstream jobs(fs::path(config_.report_dir) / "jobs.report", std::ios::app);
  jobs << report.to_line(false) << '\n';
  std::ofstream timings(fs::path(config_.report_dir) / "timings.report", std::ios::app);
  timings << "job=" << report.job << " wall_ms=" << report.wall_ms << '\n';
  if (!jobs || !timings) fail(ErrorCode::kIo, "cannot write reports to " + config_.report_dir);
}

void Session::record_ml(const std::string& line) {
  ml_records_.push_back(line);
  if (config_.report_dir.empty()) return;
  std::ofstream ml(std::filesystem::path(config_.report_dir) / "ml.report", std::ios::app);
  ml << line << '\n';
  if (!ml) fail(ErrorCode::kIo, "cannot write reports to " + config_.report_dir);
}

std::vector<storage::PartitionStats> Session::resident_stats(const lineage::NodePtr& dataset) const {
  std::vector<storage::PartitionStats> out;
  if (!dataset->persisted()) return out;
  for (size_t i = 0; i < dataset->partition_count; ++i) {
    auto part = cluster_->resident(dataset->id, i);
    if (!part) return {};
    if (part->columnar) {
      out.push_back(part->columnar->stats);
    } else {
      out.push_back(sql::stats_for_partitions({part->rows}, dataset->schema.size())[0]);
    }
  }
  return out;
}

// ---- statements

std::string Session::run_statement(const std::string& text) {
  auto stmt = sql::parse(text);
  switch (stmt.kind) {
    case sql::Statement::Kind::kSelect: return run_select(stmt);
    case sql::Statement::Kind::kCreate: return run_create(stmt);
    case sql::Statement::Kind::kDrop: return run_drop(stmt);
  }
  fail(ErrorCode::kInternal, "unknown statement kind");
}

std::string Session::run_select(const sql::Statement& stmt) {
  if (stmt.explain || stmt.kind != sql::Statement::Kind::kSelect) return explain(stmt.text, 0);
  auto p = plan(stmt.select);
  auto result = run(p.root, stmt.text);
  executed_[query_key(stmt.text)] = {result.final_root, result.report.decisions, result.report.job};
  return csv(names_of(p.root->schema), result.rows);
}

std::string Session::explain(const std::string& padded, size_t) {
  auto stmt = sql::parse(padded);
  if (stmt.kind != sql::Statement::Kind::kSelect) fail(ErrorCode::kPlan, "only queries can be explained", 0);
  auto p = plan(stmt.select);
  std::string out = "== logical plan ==\n" + sql::explain_logical(p.optimized);
  ensure_newline(out);
  out += "== physical plan ==\n" + sql::explain_physical(p.root);
  ensure_newline(out);
  auto it = executed_.find(query_key(padded));
  if (it != executed_.end()) {
    out += "== executed plan (job " + std::to_string(it->second.job) + ") ==\n" +
           sql::explain_physical(it->second.final_root);
    ensure_newline(out);
    out += "== runtime decisions ==\n";
    if (it->second.decisions.empty()) out += "(none)\n";
    for (const auto& d : it->second.decisions) out += d + "\n";
  }
  return out;
}

std::string Session::run_create(const sql::Statement& stmt) {
  const auto& c = stmt.create;
  if (catalog_.find(c.name)) fail(ErrorCode::kPlan, "table '" + c.name + "' already exists");
  bool cache = false;
  std::string copartition;
  std::string warnings;
  for (const auto& [k, v] : c.properties) {
    std::string key = to_lower(k);
    if (key == "shark.cache") {
      cache = parse_bool(v, k);
    } else if (key == "copartition" || key == "shark.copartition") {
      copartition = v;
    } else {
      warnings += "warning: ignoring table property '" + k + "'\n";
    }
  }
  auto p = plan(c.query);
  auto root = p.root;
  std::optional<size_t> distribute;
  if (!c.distribute_by.empty()) {
    auto idx = root->schema.find(c.distribute_by);
    if (!idx) fail(ErrorCode::kFieldNotFound, "no column named " + c.distribute_by, c.distribute_offset);
    size_t n = config_.distribute_partitions;
    if (!copartition.empty()) {
      auto peer = catalog_.get(copartition);
      if (!peer->distribute_column) fail(ErrorCode::kPlan, "table '" + copartition + "' is not distributed");
      n = peer->partition_count();
    }
    const auto& col = root->schema[*idx];
    root = lineage::with_label(lineage::make_exchange(root, {make_column(*idx, col.type, col.name)}, n),
                               "distribute " + c.name);
    distribute = idx;
  } else if (!copartition.empty()) {
    fail(ErrorCode::kPlan, "copartition needs DISTRIBUTE BY");
  }
  auto persisted = lineage::make_persist(
      root, cache ? lineage::StorageLevel::kColumnar : lineage::StorageLevel::kRows, c.name);
  auto result = run(persisted, stmt.text);
  sql::TableEntry e;
  e.name = c.name;
  e.schema = result.final_root->schema;
  e.dataset = result.final_root;
  e.stats = resident_stats(result.final_root);
  e.distribute_column = distribute;
  e.copartition = copartition;
  e.cached = cache;
  e.source_kind = "query";
  e.source = normalize(stmt.text);
  size_t parts = e.dataset->partition_count;
  catalog_.add(std::move(e));
  return warnings + "created table " + c.name + " (" + std::to_string(result.rows.size()) + " rows, " +
         std::to_string(parts) + " partitions)\n";
}

std::string Session::run_drop(const sql::Statement& stmt) {
  auto t = catalog_.find(stmt.drop.name);
  if (!t) {
    if (stmt.drop.if_exists) return "no table " + stmt.drop.name + "\n";
    fail(ErrorCode::kNotFound, "unknown table '" + stmt.drop.name + "'");
  }
  if (t->dataset->persisted()) {
    for (size_t i = 0; i < t->dataset->partition_count; ++i) cluster_->evict(t->dataset->id, i);
  }
  catalog_.drop(stmt.drop.name);
  executed_.clear();
  return "dropped table " + t->name + "\n";
}

void Session::add_table(const std::string& name, const GeneratedTable& table, bool cache, const std::string& source) {
  if (catalog_.find(name)) fail(ErrorCode::kPlan, "table '" + name + "' already exists");
  table.schema.validate();
  for (size_t i = 0; i < table.rows.size(); ++i) storage::check_row(table.rows[i], table.schema, i + 1);
  auto snapshot = lineage::MemorySnapshot::from_rows(name, table.schema, table.rows, config_.partition_rows);
  auto node = lineage::make_source(snapshot, name);
  sql::TableEntry e;
  e.name = name;
  e.schema = table.schema;
  e.source_kind = "generated";
  e.source = source;
  e.cached = cache;
  if (cache) {
    auto result = run(lineage::make_persist(node, lineage::StorageLevel::kColumnar, name), source);
    e.dataset = result.final_root;
    e.stats = resident_stats(e.dataset);
  } else {
    e.dataset = node;
    std::vector<RowBatchPtr> parts;
    for (size_t i = 0; i < snapshot->partition_count(); ++i) parts.push_back(snapshot->read(i));
    e.stats = sql::stats_for_partitions(parts, table.schema.size());
  }
  catalog_.add(std::move(e));
}

// ---- ML verbs

namespace {

struct MlCommand {
  bool kmeans = false;
  std::string query;
  size_t query_offset = 0;
  std::string features;
  std::string label;
  std::optional<uint64_t> k;
  std::optional<uint64_t> iterations;
  std::optional<uint64_t> seed;
};

bool word_at(const std::string& s, size_t i, std::string_view word) {
  if (i + word.size() > s.size() || !iequals(std::string_view(s).substr(i, word.size()), word)) return false;
  auto boundary = [&](size_t j) { return j >= s.size() || is_space(s[j]); };
  return (i == 0 || is_space(s[i - 1])) && boundary(i + word.size());
}

MlCommand parse_ml(const std::string& text) {
  MlCommand m;
  size_t i = 0;
  while (i < text.size() && is_space(text[i])) ++i;
  i += 2;  // ML
  while (i < text.size() && is_space(text[i])) ++i;
  size_t verb_start = i;
  while (i < text.size() && !is_space(text[i])) ++i;
  std::string verb = to_upper(text.substr(verb_start, i - verb_start));
  if (verb == "KMEANS") {
    m.kmeans = true;
  } else if (verb != "LOGREG") {
    fail(ErrorCode::kSyntax, "syntax error at offset " + std::to_string(verb_start) + ": expected LOGREG or KMEANS",
         verb_start);
  }
  // The last FEATURES outside quotes ends the query.
  std::optional<size_t> features;
  char q = 0;
  for (size_t j = i; j < text.size(); ++j) {
    char c = text[j];
    if (q) {
      if (c == q) q = 0;
    } else if (c == '\'' || c == '"' || c == '`') {
      q = c;
    } else if (word_at(text, j, "FEATURES")) {
      features = j;
    }
  }
  if (!features) {
    fail(ErrorCode::kSyntax, "syntax error at offset " + std::to_string(text.size()) + ": expected FEATURES",
         text.size());
  }
  while (i < *features && is_space(text[i])) ++i;
  m.query_offset = i;
  m.query = text.substr(i, *features - i);
  if (trim(m.query).empty()) {
    fail(ErrorCode::kSyntax, "syntax error at offset " + std::to_string(i) + ": expected a query", i);
  }
  size_t j = *features + 8;
  auto next_token = [&]() -> std::pair<std::string, size_t> {
    while (j < text.size() && is_space(text[j])) ++j;
    size_t b = j;
    int depth = 0;
    while (j < text.size() && (depth > 0 || !is_space(text[j]))) {
      if (text[j] == '(') ++depth;
      if (text[j] == ')') --depth;
      ++j;
    }
    std::string tok = text.substr(b, j - b);
    while (!tok.empty() && tok.back() == ';') tok.pop_back();
    return {tok, b};
  };
  auto [fn, fn_at] = next_token();
  if (fn.empty()) fail(ErrorCode::kSyntax, "syntax error at offset " + std::to_string(fn_at) + ": expected a feature function", fn_at);
  m.features = fn;
  for (;;) {
    auto [key, at] = next_token();
    if (key.empty()) break;
    auto [value, vat] = next_token();
    if (value.empty()) {
      fail(ErrorCode::kSyntax, "syntax error at offset " + std::to_string(vat) + ": expected a value after " + key, vat);
    }
    std::string k = to_upper(key);
    if (k == "LABEL" && !m.kmeans) {
      m.label = value;
    } else if (k == "K" && m.kmeans) {
      m.k = parse_u64(value, "K");
    } else if (k == "ITER") {
      m.iterations = parse_u64(value, "ITER");
    } else if (k == "SEED") {
      m.seed = parse_u64(value, "SEED");
    } else {
      fail(ErrorCode::kSyntax, "syntax error at offset " + std::to_string(at) + ": unexpected '" + key + "'", at);
    }
  }
  auto missing = [&](const char* what) {
    fail(ErrorCode::kSyntax, "syntax error at offset " + std::to_string(text.size()) + ": missing " + what,
         text.size());
  };
  if (!m.kmeans && m.label.empty()) missing("LABEL");
  if (m.kmeans && !m.k) missing("K");
  if (!m.iterations) missing("ITER");
  return m;
}

}  // namespace

std::string Session::run_ml(const std::string& text) {
  auto m = parse_ml(text);
  // Padding keeps error offsets relative to the whole command.
  auto root = sql_to_dataset(std::string(m.query_offset, ' ') + m.query);
  auto fref = ml::parse_function_ref(m.features);
  ml::register_ml_functions();
  auto feature_names = names_of(lineage::FunctionRegistry::global().get(fref.name).bind(root->schema, fref.params));
  auto points = ml::feature_points(root, fref, m.kmeans ? "" : m.label);
  uint64_t seed = m.seed.value_or(config_.seed);
  std::string statement = normalize(text);

  ml::MlContext ctx;
  ctx.cluster = cluster_.get();
  ctx.make_hook = [this] { return make_hook(); };
  ctx.on_report = [this](const engine::JobReport& r) { record(r); };
  ctx.statement = statement;

  if (!m.kmeans) {
    ml::LogRegOptions o;
    o.iterations = *m.iterations;
    o.seed = seed;
    o.step = config_.step_size;
    auto r = ml::logistic_regression(ctx, points, o);
    record_ml("ml=logreg statement=" + quote(statement) + " iterations=" + std::to_string(o.iterations) +
              " seed=" + std::to_string(seed) + " step=" + real(o.step));
    for (size_t i = 0; i < r.history.size(); ++i) {
      const auto& h = r.history[i];
      record_ml("ml=logreg iteration=" + std::to_string(i + 1) + " loss=" + real(h.loss) + " accuracy=" +
                real(h.accuracy) + " gradient_norm=" + real(h.gradient_norm));
    }
    std::string weights;
    for (size_t i = 0; i < r.weights.size(); ++i) weights += (i ? ";" : "") + real(r.weights[i]);
    record_ml("ml=logreg final=true points=" + std::to_string(r.points) + " loss=" + real(r.loss) +
              " accuracy=" + real(r.accuracy) + " weights=" + weights);
    RowBatch rows;
    for (size_t i = 0; i < r.weights.size(); ++i) rows.push_back({Value(feature_names[i]), Value(r.weights[i])});
    return csv({"feature", "weight"}, rows);
  }

  ml::KMeansOptions o;
  o.k = *m.k;
  o.iterations = *m.iterations;
  o.seed = seed;
  auto r = ml::kmeans(ctx, points, o);
  record_ml("ml=kmeans statement=" + quote(statement) + " k=" + std::to_string(o.k) + " iterations=" +
            std::to_string(o.iterations) + " seed=" + std::to_string(seed));
  for (size_t t = 0; t < r.sse.size(); ++t) {
    record_ml("ml=kmeans iteration=" + std::to_string(t) + " sse=" + real(r.sse[t]));
  }
  std::string centroids;
  std::string sizes;
  for (size_t c = 0; c < r.centroids.size(); ++c) {
    centroids += c ? ";" : "";
    for (size_t j = 0; j < r.centroids[c].size(); ++j) centroids += (j ? "," : "") + real(r.centroids[c][j]);
    sizes += (c ? ";" : "") + std::to_string(r.sizes[c]);
  }
  record_ml("ml=kmeans final=true points=" + std::to_string(r.points) + " sse=" + real(r.sse.back()) +
            " centroids=" + centroids + " sizes=" + sizes);
  std::vector<std::string> header{"cluster", "size"};
  header.insert(header.end(), feature_names.begin(), feature_names.end());
  RowBatch rows;
  for (size_t c = 0; c < r.centroids.size(); ++c) {
    Row row{Value(static_cast<int64_t>(c)), Value(r.sizes[c])};
    for (double v : r.centroids[c]) row.emplace_back(v);
    rows.push_back(std::move(row));
  }
  return csv(header, rows);
}

// ---- meta-commands

std::string Session::run_meta(const std::string& text) {
  size_t b = text.find('\\') + 1;
  size_t e = b;
  while (e < text.size() && !is_space(text[e])) ++e;
  std::string name = to_lower(text.substr(b, e - b));
  size_t rest_at = e;
  while (rest_at < text.size() && is_space(text[rest_at])) ++rest_at;
  std::string rest = text.substr(rest_at);
  while (!rest.empty() && (is_space(rest.back()) || rest.back() == ';')) rest.pop_back();
  auto args = split_words(rest);
  auto want = [&](size_t lo, size_t hi, const char* usage) {
    if (args.size() < lo || args.size() > hi) fail(ErrorCode::kInvalidArgument, std::string("usage: ") + usage);
  };

  if (name == "explain") {
    if (rest.empty()) fail(ErrorCode::kInvalidArgument, "usage: \\explain <query>");
    return explain(std::string(rest_at, ' ') + rest, rest_at);
  }
  if (name == "stats") {
    want(1, 1, "\\stats <table>");
    return table_stats(args[0]);
  }
  if (name == "kill-worker") {
    if (args.empty()) fail(ErrorCode::kInvalidArgument, "usage: \\kill-worker <id> [at stage|task|time <n> [in job <j>]]");
    size_t id = parse_u64(args[0], "worker id");
    if (id >= config_.worker_count) fail(ErrorCode::kInvalidArgument, "no worker " + args[0]);
    if (args.size() == 1) {
      cluster_->kill_worker(id);
      return "killed worker " + args[0] + "\n";
    }
    std::string spec = "kill " + rest;
    if (rest.find(" in job ") == std::string::npos) spec += " in job 0";
    auto event = engine::parse_fault(spec);
    cluster_->arm(event);
    return "armed " + engine::format_fault(event) + "\n";
  }
  if (name == "delay-worker") {
    want(2, 2, "\\delay-worker <id> <factor>");
    size_t id = parse_u64(args[0], "worker id");
    cluster_->set_delay(id, parse_real(args[1], "delay factor"));
    return "worker " + args[0] + " delay " + args[1] + "\n";
  }
  if (name == "set") {
    if (args.empty()) {
      RowBatch rows;
      for (const auto& [k, v] : config_.entries()) rows.push_back({Value(k), Value(v)});
      return csv({"key", "value"}, rows);
    }
    std::string value = args.size() > 1 ? unquote(trim(rest.substr(args[0].size()))) : "";
    return set_option(args[0], value);
  }
  if (name == "evict") {
    want(2, 2, "\\evict <table> <partition>");
    auto t = catalog_.get(args[0]);
    size_t p = parse_u64(args[1], "partition");
    if (!t->dataset->persisted()) fail(ErrorCode::kInvalidArgument, "table '" + t->name + "' is not materialized");
    if (p >= t->dataset->partition_count) fail(ErrorCode::kInvalidArgument, "no partition " + args[1]);
    bool gone = cluster_->evict(t->dataset->id, p);
    return (gone ? "evicted partition " : "not resident: partition ") + args[1] + " of " + t->name + "\n";
  }
  if (name == "metrics") {
    want(0, 0, "\\metrics");
    return metrics();
  }
  if (name == "tables") {
    want(0, 0, "\\tables");
    return list_tables();
  }
  if (name == "gen") return gen_table(args, normalize(text));
  if (name == "register") return register_file(args, normalize(text));
  if (name == "save") {
    want(1, 1, "\\save <manifest path>");
    return save_catalog(args[0]);
  }
  if (name == "load") {
    want(1, 1, "\\load <manifest path>");
    return load_catalog(args[0]);
  }
  if (name == "help") {
    return "\\explain <query>\n\\stats <table>\n\\kill-worker <id> [at stage|task|time <n> [in job <j>]]\n\\delay-worker <id> <factor>\n"
           "\\set [<key> <value>]\n\\evict <table> <partition>\n\\metrics\n\\tables\n"
           "\\gen <table> <lineitem|daily|keyed|separable|blobs> [key=value ...]\n"
           "\\register <table> <path> <name:type,...> [cache=true]\n\\save <path>\n\\load <path>\n";
  }
  fail(ErrorCode::kInvalidArgument, "unknown command \\" + name);
}

std::string Session::set_option(const std::string& key, const std::string& value) {
  SessionConfig next = config_;
  next.set(key, value);
  std::string k = to_lower(key);
  if (next.worker_count != config_.worker_count) {
    if (cluster_->jobs_run() > 0) fail(ErrorCode::kInvalidArgument, "worker_count can only change before the first job");
    for (const auto& t : catalog_.tables()) {
      if (t->dataset->persisted()) fail(ErrorCode::kInvalidArgument, "worker_count can only change before caching");
    }
    config_ = next;
    rebuild_cluster();
  } else if (k == "fault_schedule" || k == "faults") {
    auto events = engine::parse_fault_schedule(value);
    for (const auto& e : events) {
      if (e.worker >= config_.worker_count) fail(ErrorCode::kInvalidArgument, "no worker " + std::to_string(e.worker));
    }
    for (const auto& e : events) cluster_->arm(e);
    config_ = next;
  } else {
    config_ = next;
  }
  cluster_->mutable_config().speculation = config_.speculation_on;
  cluster_->mutable_config().shuffle.spill_threshold_bytes = config_.spill_threshold_bytes;
  if (k == "report_dir" && !config_.report_dir.empty()) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(config_.report_dir, ec);
    for (const char* f : {"jobs.report", "timings.report", "ml.report"}) {
      std::ofstream out(fs::path(config_.report_dir) / f, std::ios::trunc);
      if (!out) fail(ErrorCode::kIo, "cannot write reports to " + config_.report_dir);
    }
  }
  for (const auto& [name, v] : config_.entries()) {
    if (name == k || name.rfind(k + "_", 0) == 0 || (k == "workers" && name == "worker_count") ||
        (k == "faults" && name == "fault_schedule")) {
      return "set " + name + " = " + v + "\n";
    }
  }
  return "set " + k + "\n";
}

std::string Session::table_stats(const std::string& name) {
  auto t = catalog_.get(name);
  std::vector<storage::PartitionStats> stats = t->stats;
  if (t->dataset->persisted()) {
    auto live = resident_stats(t->dataset);
    if (!live.empty()) stats = live;
  }
  if (stats.empty()) fail(ErrorCode::kNotFound, "no statistics for table '" + t->name + "'");
  RowBatch rows;
  for (size_t p = 0; p < stats.size(); ++p) {
    for (size_t c = 0; c < t->schema.size() && c < stats[p].columns.size(); ++c) {
      const auto& cs = stats[p].columns[c];
      Row r;
      r.emplace_back(static_cast<int64_t>(p));
      r.emplace_back(static_cast<int64_t>(stats[p].row_count));
      r.emplace_back(static_cast<int64_t>(stats[p].byte_size));
      r.emplace_back(t->schema[c].name);
      r.emplace_back(cs.min ? Value(to_string(*cs.min)) : Value());
      r.emplace_back(cs.max ? Value(to_string(*cs.max)) : Value());
      r.emplace_back(static_cast<int64_t>(cs.null_count));
      r.emplace_back(cs.distinct ? Value(static_cast<int64_t>(cs.distinct->size())) : Value());
      rows.push_back(std::move(r));
    }
  }
  return csv({"partition", "rows", "bytes", "column", "min", "max", "nulls", "distinct"}, rows);
}

std::string Session::metrics() const {
  if (reports_.empty()) return "no jobs have run\n";
  const auto& r = reports_.back();
  RowBatch rows;
  auto add = [&](const char* k, uint64_t v) { rows.push_back({Value(k), Value(std::to_string(v))}); };
  rows.push_back({Value("job"), Value(std::to_string(r.job))});
  rows.push_back({Value("status"), Value(r.status)});
  add("plan_stages", r.plan_stages);
  add("plan_shuffle_stages", r.plan_shuffle_stages);
  add("shuffle_stages_run", r.shuffle_stages_run);
  add("tasks", r.tasks);
  add("attempts", r.attempts);
  add("failed_attempts", r.failed_attempts);
  add("speculative", r.speculative);
  add("recomputed_tasks", r.recomputed_tasks);
  add("recomputed_partitions", r.recomputed_partitions);
  add("lost_partitions", r.lost_partitions);
  add("lost_map_outputs", r.lost_map_outputs);
  add("recovery_workers", r.recovery_workers);
  add("workers_killed", r.workers_killed);
  add("bytes_shuffled", r.bytes_shuffled);
  add("spilled_buckets", r.spilled_buckets);
  add("stats_max_bytes", r.stats_max_bytes);
  add("partitions_scanned", r.partitions_scanned);
  add("partitions_pruned", r.partitions_pruned);
  add("result_rows", r.result_rows);
  add("sim_time", r.sim_time);
  for (const auto& d : r.decisions) rows.push_back({Value("decision"), Value(d)});
  size_t recomputed = 0;
  for (const auto& j : reports_) recomputed += j.recomputed_tasks;
  add("session_jobs", reports_.size());
  add("session_recomputed_tasks", recomputed);
  add("alive_workers", cluster_->alive_workers());
  return csv({"metric", "value"}, rows);
}

std::string Session::list_tables() const {
  RowBatch rows;
  for (const auto& t : catalog_.tables()) {
    rows.push_back({Value(t->name), Value(static_cast<int64_t>(t->row_estimate())),
                    Value(static_cast<int64_t>(t->partition_count())), Value(t->cached), Value(t->source_kind)});
  }
  return csv({"name", "rows", "partitions", "cached", "source"}, rows);
}

std::string Session::gen_table(const std::vector<std::string>& args, const std::string& text) {
  if (args.size() < 2) fail(ErrorCode::kInvalidArgument, "usage: \\gen <table> <kind> [key=value ...]");
  std::map<std::string, std::string> options;
  bool cache = false;
  for (size_t i = 2; i < args.size(); ++i) {
    size_t eq = args[i].find('=');
    if (eq == std::string::npos) fail(ErrorCode::kInvalidArgument, "expected key=value, got '" + args[i] + "'");
    std::string k = to_lower(args[i].substr(0, eq));
    std::string v = args[i].substr(eq + 1);
    if (k == "cache") {
      cache = parse_bool(v, k);
    } else {
      options[k] = v;
    }
  }
  auto table = generate(to_lower(args[1]), options, config_.seed);
  add_table(args[0], table, cache, text);
  auto t = catalog_.get(args[0]);
  return "generated table " + t->name + " (" + std::to_string(table.rows.size()) + " rows, " +
         std::to_string(t->partition_count()) + " partitions)\n";
}

std::string Session::register_file(const std::vector<std::string>& args, const std::string& text) {
  if (args.size() < 3 || args.size() > 4) {
    fail(ErrorCode::kInvalidArgument, "usage: \\register <table> <path> <name:type,...> [cache=true]");
  }
  bool cache = false;
  if (args.size() == 4) {
    if (to_lower(args[3].substr(0, 6)) != "cache=") fail(ErrorCode::kInvalidArgument, "expected cache=<bool>");
    cache = parse_bool(args[3].substr(6), "cache");
  }
  const std::string& name = args[0];
  if (catalog_.find(name)) fail(ErrorCode::kPlan, "table '" + name + "' already exists");
  auto schema = Schema::parse(args[2]);
  schema.validate();
  auto snapshot = lineage::FileSnapshot::open(args[1], schema, config_.partition_rows);
  auto node = lineage::make_source(snapshot, name);
  sql::TableEntry e;
  e.name = name;
  e.schema = schema;
  e.source_kind = "file";
  e.source = args[1];
  e.cached = cache;
  if (cache) {
    auto result = run(lineage::make_persist(node, lineage::StorageLevel::kColumnar, name), text);
    e.dataset = result.final_root;
    e.stats = resident_stats(e.dataset);
  } else {
    e.dataset = node;
    std::vector<RowBatchPtr> parts;
    for (size_t i = 0; i < snapshot->partition_count(); ++i) parts.push_back(snapshot->read(i));
    e.stats = sql::stats_for_partitions(parts, schema.size());
  }
  size_t rows = e.row_estimate();
  size_t parts = e.dataset->partition_count;
  catalog_.add(std::move(e));
  return "registered table " + name + " (" + std::to_string(rows) + " rows, " + std::to_string(parts) +
         " partitions)\n";
}

std::string Session::save_catalog(const std::string& path) const {
  std::vector<storage::ManifestEntry> entries;
  for (const auto& t : catalog_.tables()) {
    storage::ManifestEntry m;
    m.name = t->name;
    m.schema = t->schema;
    m.source_kind = t->source_kind;
    m.source = t->source;
    m.cached = t->cached;
    if (t->distribute_column) m.distribute_key = t->schema[*t->distribute_column].name;
    if (!t->copartition.empty()) m.copartition = t->copartition;
    m.partition_count = t->partition_count();
    entries.push_back(std::move(m));
  }
  std::ofstream out(path, std::ios::trunc);
  out << storage::write_manifest(entries);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path);
  return "saved " + std::to_string(entries.size()) + " tables to " + path + "\n";
}

std::string Session::load_catalog(const std::string& path) {
  auto entries = storage::read_manifest(storage::read_file(path));
  std::vector<storage::ManifestEntry> pending;
  for (auto& e : entries) {
    if (!catalog_.find(e.name)) pending.push_back(std::move(e));
  }
  size_t loaded = 0;
  // Tables built from other tables wait for their inputs.
  while (!pending.empty()) {
    std::vector<storage::ManifestEntry> waiting;
    for (auto& e : pending) {
      try {
        if (e.source_kind == "file") {
          std::vector<std::string> args{e.name, e.source, e.schema.to_string()};
          if (e.cached) args.push_back("cache=true");
          register_file(args, "\\register " + e.name + " " + e.source);
        } else {
          dispatch(e.source);
        }
        ++loaded;
      } catch (const Error& err) {
        if (err.code() != ErrorCode::kNotFound) throw;
        waiting.push_back(std::move(e));
      }
    }
    if (waiting.size() == pending.size()) {
      fail(ErrorCode::kNotFound, "cannot rebuild table '" + waiting.front().name + "': missing inputs");
    }
    pending = std::move(waiting);
  }
  return "loaded " + std::to_string(loaded) + " tables from " + path + "\n";
}

}  // namespace ember::session
