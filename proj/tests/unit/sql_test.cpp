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
#include <fstream>
#include <functional>
#include <random>

#include "engine/stages.hpp"
#include "session/session.hpp"
#include "sql/logical.hpp"
#include "sql/parser.hpp"
#include "sql/physical.hpp"
#include "storage/stats.hpp"
#include "support/expect_error.hpp"
#include "support/random_sql.hpp"

namespace ember::sql {
namespace {

using session::Session;
using session::SessionConfig;

void walk(const LogicalPtr& n, const std::function<void(const LogicalNode&)>& f) {
  f(*n);
  for (const auto& c : n->children) walk(c, f);
}

size_t count_kind(const LogicalPtr& n, LogicalKind kind) {
  size_t count = 0;
  walk(n, [&](const LogicalNode& x) { count += x.kind == kind; });
  return count;
}

// Operators the query itself adds; lineage behind cached tables is skipped.
size_t count_op(const lineage::NodePtr& root, lineage::OpKind kind) {
  if (root->persisted()) return 0;
  size_t count = root->kind == kind;
  for (const auto& p : root->parents) count += count_op(p, kind);
  return count;
}

// Header-only CSV file in the temp directory.
std::string empty_csv(const std::string& name, const std::string& header) {
  auto path = (std::filesystem::temp_directory_path() / ("ember_sql_" + name + ".csv")).string();
  std::ofstream(path, std::ios::trunc) << header << "\n";
  return path;
}

void run_ok(Session& s, const std::string& cmd) {
  auto out = s.execute(cmd);
  ASSERT_TRUE(out.ok) << cmd << ": " << out.message;
}

RowBatch sorted(RowBatch rows) {
  std::sort(rows.begin(), rows.end(), RowLess());
  return rows;
}

TEST(Parser, SelectionQueryShape) {
  Session s({});
  run_ok(s, "\\register rankings " + empty_csv("rankings", "pageURL,pageRank,avgDuration") + " pageURL:string,pageRank:int64,avgDuration:int64");
  auto stmt = parse("SELECT pageURL, pageRank FROM rankings WHERE pageRank > 10");
  ASSERT_EQ(stmt.kind, Statement::Kind::kSelect);
  auto logical = bind_select(stmt.select, s.catalog());
  EXPECT_EQ(logical->kind, LogicalKind::kProject);
  EXPECT_EQ(count_kind(logical, LogicalKind::kFilter), 1u);
  EXPECT_EQ(count_kind(logical, LogicalKind::kScan), 1u);
  // Pushdown folds the filter into the scan.
  auto opt = optimize(logical);
  EXPECT_EQ(count_kind(opt, LogicalKind::kFilter), 0u);
  bool scan_has_predicate = false;
  walk(opt, [&](const LogicalNode& n) { scan_has_predicate |= n.kind == LogicalKind::kScan && n.predicate; });
  EXPECT_TRUE(scan_has_predicate);
}

TEST(Parser, BareSelectFailsAtEnd) {
  try {
    parse("SELECT");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSyntax);
    EXPECT_EQ(e.offset(), 6u);
  }
}

TEST(Parser, CreateTableDistributeBy) {
  auto stmt = parse(
      "CREATE TABLE l_mem TBLPROPERTIES (\"shark.cache\"=true) AS SELECT * FROM lineitem DISTRIBUTE BY L_ORDERKEY");
  ASSERT_EQ(stmt.kind, Statement::Kind::kCreate);
  EXPECT_EQ(stmt.create.name, "l_mem");
  EXPECT_EQ(to_lower(stmt.create.distribute_by), "l_orderkey");
  ASSERT_EQ(stmt.create.properties.size(), 1u);
  EXPECT_EQ(stmt.create.properties[0].first, "shark.cache");
  EXPECT_EQ(stmt.create.properties[0].second, "true");
}

TEST(Parser, KeywordsAreCaseInsensitive) {
  auto a = parse("select k from t where k between 1 and 2 order by k desc limit 3");
  auto b = parse("SELECT k FROM t WHERE k BETWEEN 1 AND 2 ORDER BY k DESC LIMIT 3");
  EXPECT_EQ(ast_to_string(a.select.where), ast_to_string(b.select.where));
  EXPECT_EQ(a.select.limit, b.select.limit);
  EXPECT_FALSE(a.select.order_by[0].ascending);
}

TEST(Parser, ErrorOffsets) {
  auto offset_of = [](const std::string& q) -> std::optional<size_t> {
    try {
      parse(q);
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kSyntax) << q;
      return e.offset();
    }
    return std::nullopt;
  };
  EXPECT_EQ(offset_of("SELECT a FROM t WHERE"), 21u);
  EXPECT_EQ(offset_of("SELECT a, FROM t"), 10u);
  EXPECT_EQ(offset_of("SELECT 'open FROM t"), 7u);
  EXPECT_EQ(offset_of("SELECT a FROM t LIMIT x"), 22u);
}

class SqlFixture : public ::testing::Test {
 protected:
  void SetUp() override {
    SessionConfig cfg;
    cfg.partition_rows = 100;
    session_ = std::make_unique<Session>(cfg);
    run_ok(*session_, "\\gen facts keyed rows=1000 groups=20 seed=3 cache=true");
    run_ok(*session_, "\\gen dims keyed rows=300 groups=20 seed=4");
  }
  LogicalPtr bound(const std::string& q) { return bind_select(parse(q).select, session_->catalog()); }
  RowBatch rows_of(const LogicalPtr& plan) {
    return session_->cluster().run_job(lower(plan), nullptr, "q").rows;
  }
  std::unique_ptr<Session> session_;
};

TEST_F(SqlFixture, BindErrorsCarryOffsets) {
  try {
    bound("SELECT nope FROM facts");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kFieldNotFound);
    EXPECT_EQ(e.offset(), 7u);
  }
  EXPECT_ERROR_CODE(bound("SELECT k FROM missing"), ErrorCode::kNotFound);
  EXPECT_ERROR_CODE(bound("SELECT k FROM facts WHERE s > 3"), ErrorCode::kTypeMismatch);
  EXPECT_ERROR_CODE(bound("SELECT id FROM facts a JOIN dims b ON a.k = b.k"), ErrorCode::kPlan);
  EXPECT_ERROR_CODE(bound("SELECT k, count(*) FROM facts"), ErrorCode::kPlan);
}

TEST_F(SqlFixture, FilterPushedThroughRenamingProject) {
  auto scan = logical_scan(session_->catalog().get("facts"), "facts");
  auto proj = logical_project(scan, {make_column(2, Type::kInt64), make_column(1, Type::kInt64)}, {"value", "key"});
  auto filtered = logical_filter(proj, make_compare(CompareOp::kGt, make_column(0, Type::kInt64, "value"),
                                                    make_literal(Value(int64_t{500}))));
  auto opt = optimize(filtered);
  EXPECT_EQ(opt->kind, LogicalKind::kProject);
  EXPECT_EQ(count_kind(opt, LogicalKind::kFilter), 0u);
  const auto& inner = opt->children[0];
  ASSERT_EQ(inner->kind, LogicalKind::kScan);
  ASSERT_TRUE(inner->predicate);
  std::set<size_t> cols;
  collect_columns(inner->predicate, cols);
  EXPECT_EQ(cols, (std::set<size_t>{2}));  // "value" renamed back to v
  EXPECT_EQ(sorted(rows_of(opt)), sorted(rows_of(optimize(filtered, {false, false, false, false}))));
}

TEST_F(SqlFixture, LimitDuplicatedPerPartition) {
  auto opt = optimize(bound("SELECT id FROM facts LIMIT 5"));
  ASSERT_EQ(opt->kind, LogicalKind::kLimit);
  EXPECT_FALSE(opt->per_partition);
  size_t local = 0;
  walk(opt, [&](const LogicalNode& n) { local += n.kind == LogicalKind::kLimit && n.per_partition && n.limit == 5; });
  EXPECT_EQ(local, 1u);
  EXPECT_EQ(rows_of(opt).size(), 5u);
}

TEST_F(SqlFixture, RightSideFilterStaysRight) {
  auto opt = optimize(bound("SELECT a.id, b.v FROM facts a JOIN dims b ON a.k = b.k WHERE b.v < 100"));
  const LogicalNode* join = nullptr;
  walk(opt, [&](const LogicalNode& n) {
    if (n.kind == LogicalKind::kJoin) join = &n;
  });
  ASSERT_NE(join, nullptr);
  bool left_pred = false, right_pred = false;
  walk(join->children[0], [&](const LogicalNode& n) { left_pred |= static_cast<bool>(n.predicate); });
  walk(join->children[1], [&](const LogicalNode& n) { right_pred |= static_cast<bool>(n.predicate); });
  EXPECT_FALSE(left_pred);
  EXPECT_TRUE(right_pred);
}

TEST_F(SqlFixture, OptimizationIsNeutral) {
  std::mt19937_64 gen(8);
  for (const char* q : {"SELECT k, sum(v), count(*) FROM facts WHERE v > 300 AND 1 = 1 GROUP BY k",
                        "SELECT a.id, b.s FROM facts a JOIN dims b ON a.k = b.k WHERE a.v < 50 AND b.v > 900",
                        "SELECT id, v FROM facts WHERE k IN (1, 2, 3) ORDER BY v DESC, id LIMIT 7"}) {
    auto plan = bound(q);
    EXPECT_EQ(sorted(rows_of(optimize(plan))), sorted(rows_of(optimize(plan, {false, false, false, false})))) << q;
  }
}

TEST(Prune, RangeAndDistinctExamples) {
  std::vector<Value> range{Value(int64_t{10}), Value(int64_t{20})};
  auto stats = storage::compute_partition_stats({range});
  auto c = make_column(0, Type::kInt64, "c");
  EXPECT_TRUE(prune_partitions(make_compare(CompareOp::kGt, c, make_literal(Value(int64_t{25}))), {stats}).empty());
  EXPECT_EQ(prune_partitions(make_between(c, make_literal(Value(int64_t{15})), make_literal(Value(int64_t{30})), false),
                             {stats}).size(), 1u);

  auto country = make_column(0, Type::kUtf8, "country");
  auto in_us = make_in(country, {make_literal(Value("us"))}, false);
  auto de_fr = storage::compute_partition_stats({{Value("de"), Value("fr")}});
  auto us_de = storage::compute_partition_stats({{Value("us"), Value("de")}});
  EXPECT_EQ(prune_partitions(in_us, {de_fr, us_de}), (std::vector<size_t>{1}));
}

TEST(Prune, NeverDropsSatisfyingRows) {
  std::mt19937_64 gen(12);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<Value> col;
    size_t n = 1 + gen() % 20;
    int64_t base = static_cast<int64_t>(gen() % 50);
    for (size_t i = 0; i < n; ++i) col.push_back(gen() % 10 == 0 ? Value() : Value(base + static_cast<int64_t>(gen() % 10)));
    auto stats = storage::compute_partition_stats({col}, trial % 2 ? 32 : 2);
    auto c = make_column(0, Type::kInt64, "c");
    auto lit = [&] { return make_literal(Value(static_cast<int64_t>(gen() % 70))); };
    std::vector<Expr> preds{make_compare(static_cast<CompareOp>(gen() % 6), c, lit()),
                            make_between(c, lit(), lit(), gen() % 2), make_in(c, {lit(), lit()}, gen() % 2),
                            make_is_null(c, gen() % 2),
                            make_or({make_compare(CompareOp::kLt, c, lit()), make_compare(CompareOp::kGt, c, lit())}),
                            make_not(make_compare(CompareOp::kEq, c, lit()))};
    for (const auto& p : preds) {
      bool any = false;
      for (const auto& v : col) any |= evaluate_predicate(p, {v});
      if (any) EXPECT_EQ(prune_partitions(p, {stats}).size(), 1u) << expr_to_string(p);
    }
  }
}

TEST_F(SqlFixture, AggregateLowersToTwoStages) {
  auto root = lower(optimize(bound("SELECT k, count(*) FROM facts GROUP BY k")));
  auto g = engine::plan_stages(root);
  EXPECT_EQ(g.stages.size(), 2u);
  EXPECT_EQ(count_op(root, lineage::OpKind::kLocalAggregate), 1u);
  EXPECT_EQ(count_op(root, lineage::OpKind::kMergeAggregate), 1u);
}

TEST_F(SqlFixture, PlainJoinLowersToDeferredJoin) {
  auto root = lower(optimize(bound("SELECT a.id, b.id FROM facts a JOIN dims b ON a.k = b.k")));
  EXPECT_EQ(count_op(root, lineage::OpKind::kDeferredJoin), 1u);
  EXPECT_EQ(count_op(root, lineage::OpKind::kExchange), 2u);
}

TEST_F(SqlFixture, CopartitionedJoinHasNoShuffle) {
  run_ok(*session_, "CREATE TABLE f_mem TBLPROPERTIES (\"shark.cache\"=true) AS SELECT * FROM facts DISTRIBUTE BY k");
  run_ok(*session_,
         "CREATE TABLE d_mem TBLPROPERTIES (\"shark.cache\"=true, \"copartition\"=\"f_mem\") AS SELECT * FROM dims "
         "DISTRIBUTE BY k");
  const std::string q = "SELECT a.id, b.id, a.v + b.v FROM f_mem a JOIN d_mem b ON a.k = b.k";
  auto root = session_->sql_to_dataset(q);
  EXPECT_EQ(count_op(root, lineage::OpKind::kExchange), 0u);
  EXPECT_EQ(count_op(root, lineage::OpKind::kHashJoinLocal), 1u);
  auto co = session_->run(root, q);
  EXPECT_EQ(co.report.shuffle_stages_run, 0u);
  EXPECT_EQ(co.report.bytes_shuffled, 0u);
  auto plain = session_->run(session_->sql_to_dataset("SELECT a.id, b.id, a.v + b.v FROM facts a JOIN dims b ON a.k = b.k"), "plain");
  EXPECT_GT(plain.report.shuffle_stages_run, 0u);
  EXPECT_EQ(sorted(co.rows), sorted(plain.rows));
}

TEST(RuntimeJoin, GlobalSortSurvivesBroadcastRewrite) {
  // One shuffle partition lets the planner skip the gather, but a broadcast
  // join reads the large side's many source partitions.
  SessionConfig cfg;
  cfg.join_strategy = "map";
  cfg.shuffle_partitions = 1;
  cfg.partition_rows = 7;
  Session s(cfg);
  run_ok(s, "\\gen a keyed rows=60 groups=5 seed=1");
  run_ok(s, "\\gen b keyed rows=5 groups=5 seed=2");
  auto r = s.execute("SELECT a.id FROM a JOIN b ON a.k = b.id ORDER BY 1 DESC LIMIT 3;");
  ASSERT_TRUE(r.ok) << r.message;
  EXPECT_EQ(r.output, "id\n59\n58\n57\n(3 rows)\n");
}

TEST(EmptyInput, AggregateSemantics) {
  Session s({});
  run_ok(s, "\\register e " + empty_csv("e", "k,v") + " k:int64,v:int64");
  auto ungrouped = s.execute("SELECT count(*), count(v), sum(v), avg(v), min(v), max(v) FROM e;");
  ASSERT_TRUE(ungrouped.ok) << ungrouped.message;
  EXPECT_NE(ungrouped.output.find("0,0,,,,\n(1 row)"), std::string::npos) << ungrouped.output;
  auto grouped = s.execute("SELECT k, count(*) FROM e GROUP BY k;");
  ASSERT_TRUE(grouped.ok);
  EXPECT_NE(grouped.output.find("(0 rows)"), std::string::npos) << grouped.output;
}

TEST(NullSemantics, GroupsAndAggregates) {
  sql::RefTables t;
  auto& facts = t["t"];
  facts.schema = Schema({{"k", Type::kInt64}, {"v", Type::kInt64}});
  facts.rows = {{Value(), Value(int64_t{1})}, {Value(), Value()}, {Value(int64_t{2}), Value(int64_t{5})}};
  Session s({});
  s.add_table("t", {facts.schema, facts.rows}, false, "generated t");
  const std::string q = "SELECT k, count(*), count(v), sum(v) FROM t GROUP BY k";
  auto got = ember::testing::engine_rows(s, q);
  RowBatch want{{Value(), Value(int64_t{2}), Value(int64_t{1}), Value(int64_t{1})},
                {Value(int64_t{2}), Value(int64_t{1}), Value(int64_t{1}), Value(int64_t{5})}};
  EXPECT_TRUE(ember::testing::same_rows(got, want, false)) << ember::testing::format_rows(got);
  EXPECT_TRUE(ember::testing::same_rows(ember::testing::reference_rows(t, q), want, false));
  auto where = ember::testing::engine_rows(s, "SELECT v FROM t WHERE k <> 2 OR v > 1");
  EXPECT_EQ(where.size(), 1u);
}

TEST(Pruning, ClusteredDataSoundAndEffective) {
  for (bool prune : {true, false}) {
    SessionConfig cfg;
    cfg.partition_rows = 100;
    cfg.pruning_on = prune;
    Session s(cfg);
    run_ok(s, "\\gen daily daily days=30 per_day=100 seed=9 cache=true");
    auto q = "SELECT category, count(*), sum(amount) FROM daily WHERE day = DATE '2024-01-12' GROUP BY category";
    auto root = s.sql_to_dataset(q);
    auto r = s.run(root, q);
    if (prune) {
      EXPECT_LE(r.report.partitions_scanned, 1u + 2u);
      EXPECT_GE(r.report.partitions_pruned, 27u);
    } else {
      EXPECT_EQ(r.report.partitions_pruned, 0u);
    }
  }
}

}  // namespace
}  // namespace ember::sql
