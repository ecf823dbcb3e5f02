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

// Acceptance checks. Prints one line per criterion, "AC<n> PASS ..." or
// "AC<n> FAIL ...", and exits nonzero when any check fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "engine/faults.hpp"
#include "lineage/evaluator.hpp"
#include "ml/algorithms.hpp"
#include "ml/features.hpp"
#include "pde/optimizer.hpp"
#include "pde/runtime_stats.hpp"
#include "session/generators.hpp"
#include "session/session.hpp"
#include "storage/encoding.hpp"
#include "storage/table.hpp"
#include "support/oracles.hpp"
#include "support/random_sql.hpp"

namespace ember {
namespace {

using session::Session;
using session::SessionConfig;

struct Verdict {
  bool pass = true;
  std::string detail;
  std::string transcript;
};

// Everything observable from one run of a check; compared across runs.
struct Recorder {
  std::string transcript;
  size_t stats_max_bytes = 0;
  size_t reports = 0;

  void report(const engine::JobReport& r) {
    transcript += r.to_line(false) + "\n";
    stats_max_bytes = std::max(stats_max_bytes, r.stats_max_bytes);
    ++reports;
  }
  void absorb(const Session& s) {
    for (const auto& r : s.reports()) report(r);
  }
  void rows(const RowBatch& rows) {
    for (const auto& row : rows) {
      for (size_t i = 0; i < row.size(); ++i) transcript += (i ? "," : "") + to_literal(row[i]);
      transcript += "\n";
    }
  }
  void text(const std::string& t) { transcript += t + "\n"; }
};

Recorder* rec = nullptr;

class Check {
 public:
  void expect(bool cond, const std::string& what) {
    if (!cond) {
      pass_ = false;
      if (!failures_.empty()) failures_ += "; ";
      failures_ += what;
    }
  }
  void note(const std::string& fact) {
    if (!facts_.empty()) facts_ += ", ";
    facts_ += fact;
  }
  Verdict verdict() const { return {pass_, pass_ ? facts_ : failures_ + " [" + facts_ + "]", rec->transcript}; }

 private:
  bool pass_ = true;
  std::string failures_;
  std::string facts_;
};

std::string ok(Session& s, const std::string& cmd) {
  auto r = s.execute(cmd);
  if (!r.ok) throw std::runtime_error(cmd + ": " + r.message);
  rec->text(r.output);
  return r.output;
}

ml::MlContext context(Session& s) {
  ml::MlContext ctx;
  ctx.cluster = &s.cluster();
  ctx.make_hook = [&s] { return s.make_hook(); };
  ctx.on_report = [](const engine::JobReport& r) { rec->report(r); };
  ctx.statement = "acceptance";
  return ctx;
}

lineage::NodePtr table_node(Session& s, const std::string& name) { return s.catalog().get(name)->dataset; }

RowBatch sorted(RowBatch rows) {
  std::sort(rows.begin(), rows.end(), RowLess{});
  return rows;
}

std::string hex(double d) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", d);
  return buf;
}

// Random queries against the reference evaluator.
Verdict oracle_equivalence() {
  Check c;
  auto start = std::chrono::steady_clock::now();
  std::mt19937_64 gen(2026);
  const size_t partition_rows[] = {7, 64, 300, 1024};
  const char* strategies[] = {"auto", "map", "shuffle"};
  size_t matched = 0, nonempty = 0, largest = 0;
  std::string first_mismatch;
  for (uint64_t i = 0; i < 500; ++i) {
    size_t fact_rows = i % 10 == 9 ? 10000 : 2000;
    auto tables = testing::random_tables(7000 + i / 5, fact_rows, 15);
    for (const auto& [name, t] : tables) largest = std::max(largest, t.rows.size());
    SessionConfig cfg;
    cfg.partition_rows = partition_rows[i % 4];
    cfg.broadcast_threshold_bytes = i % 2 ? 0 : 1 << 20;
    cfg.join_strategy = strategies[i % 3];
    cfg.worker_count = 1 + i % 6;
    cfg.shuffle_partitions = i % 25 == 0 ? 64 : 1 + i % 11;
    cfg.seed = i;
    Session s(cfg);
    testing::load_tables(s, tables, i % 3 == 0);
    auto q = testing::random_query(gen);
    RowBatch want, got;
    std::string error;
    try {
      want = testing::reference_rows(tables, q.sql);
      got = testing::engine_rows(s, q.sql);
    } catch (const std::exception& e) {
      error = e.what();
    }
    rec->text(q.sql);
    rec->rows(got);
    if (error.empty() && testing::same_rows(got, want, q.ordered)) {
      ++matched;
      nonempty += !want.empty();
    } else if (first_mismatch.empty()) {
      first_mismatch = q.sql + (error.empty() ? "" : " (" + error + ")");
    }
  }
  auto seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  c.note(std::to_string(matched) + "/500 queries match");
  c.note(std::to_string(nonempty) + " non-empty");
  c.note("largest table " + std::to_string(largest) + " rows");
  c.expect(matched == 500, "mismatch: " + first_mismatch);
  c.expect(largest <= 10000, "table larger than 10k rows");
  c.expect(seconds <= 300, "took " + std::to_string(seconds) + " s");
  return c.verdict();
}

// Kill a worker holding cached partitions while a group-by runs.
Verdict fault_transparency() {
  Check c;
  auto start = std::chrono::steady_clock::now();
  const std::string gen = "\\gen events keyed rows=100000 groups=500 seed=21 cache=true";
  const std::string q = "SELECT k, count(*), sum(v), min(s) FROM events GROUP BY k ORDER BY k";
  SessionConfig cfg;
  cfg.worker_count = 4;

  Session clean(cfg);
  ok(clean, gen);
  auto expected = ok(clean, q);

  Session faulty(cfg);
  ok(faulty, gen);
  const auto& cached = *table_node(faulty, "events");
  const size_t victim = 2;
  size_t held = 0;
  for (size_t i = 0; i < cached.partition_count; ++i) held += faulty.cluster().holder(cached.id, i) == victim;
  faulty.cluster().arm(engine::parse_fault("kill " + std::to_string(victim) + " at task 60 in job 0"));
  auto got = ok(faulty, q);
  rec->absorb(faulty);
  const auto& r = faulty.reports().back();

  // Every lost cached partition feeds exactly one map task of the group-by.
  size_t descendants = r.lost_partitions;
  size_t recomputed = r.recomputed_partitions + r.recomputed_tasks;
  size_t lost = r.lost_partitions + r.lost_map_outputs;
  c.note("killed worker held " + std::to_string(held) + " partitions");
  c.note("lost " + std::to_string(r.lost_partitions) + " partitions and " + std::to_string(r.lost_map_outputs) +
         " map outputs");
  c.note("recomputed " + std::to_string(recomputed));
  c.note("recovery workers " + std::to_string(r.recovery_workers));
  c.expect(r.workers_killed == 1, "no worker was killed");
  c.expect(got == expected, "results differ from the fault-free run");
  c.expect(r.lost_partitions == held, "lost partitions differ from those held");
  c.expect(held > 0, "victim held nothing");
  c.expect(recomputed > 0, "nothing was recomputed");
  c.expect(recomputed <= lost + descendants, "recomputed more than lost plus descendants");
  c.expect(r.recomputed_partitions <= r.lost_partitions, "recomputed partitions beyond those lost");
  c.expect(r.recovery_workers >= 2, "recovery used fewer than 2 workers");
  auto seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  c.expect(seconds <= 30, "took " + std::to_string(seconds) + " s");
  return c.verdict();
}

// A selective dimension filter turns a planned shuffle join into a map join.
Verdict mapjoin_selection() {
  Check c;
  auto small = session::generate_keyed(10000, 10000, 32);
  size_t selected = 0;
  for (const auto& row : small.rows) selected += row[2].as_int() < 9;
  double selectivity = static_cast<double>(selected) / small.rows.size();
  const std::string q = "SELECT b.id, s.id, b.v + s.v FROM big b JOIN small s ON b.k = s.id WHERE s.v < 9";

  auto run = [&](const std::string& strategy) {
    SessionConfig cfg;
    cfg.join_strategy = strategy;
    Session s(cfg);
    ok(s, "\\gen big keyed rows=100000 groups=10000 seed=31");
    ok(s, "\\gen small keyed rows=10000 groups=10000 seed=32");
    auto res = s.run(s.sql_to_dataset(q), q);
    rec->report(res.report);
    return res;
  };
  auto adaptive = run("auto");
  auto forced = run("shuffle");
  rec->rows(sorted(adaptive.rows));

  bool mapjoin = false;
  for (const auto& d : adaptive.report.decisions) mapjoin |= d.find("MapJoin") != std::string::npos;
  const auto* big_exchange = adaptive.report.stage_by_label("shuffle b");
  size_t big_tasks = big_exchange ? big_exchange->tasks : 0;
  const auto* forced_exchange = forced.report.stage_by_label("shuffle b");
  bool forced_shuffle = forced_exchange && forced_exchange->tasks > 0;
  for (const auto& d : forced.report.decisions) forced_shuffle &= d.find("MapJoin") == std::string::npos;

  c.note("filter selectivity " + std::to_string(selectivity));
  c.note("decision: " + (adaptive.report.decisions.empty() ? std::string("none") : adaptive.report.decisions[0]));
  c.note("large-side exchange tasks " + std::to_string(big_tasks));
  c.note(std::to_string(adaptive.rows.size()) + " rows");
  c.expect(selectivity <= 0.01, "filter keeps more than 1%");
  c.expect(mapjoin, "no MapJoin decision");
  c.expect(big_tasks == 0, "large side was shuffled");
  c.expect(forced_shuffle, "forced run did not shuffle");
  c.expect(sorted(adaptive.rows) == sorted(forced.rows), "MapJoin and ShuffleJoin results differ");
  c.expect(!adaptive.rows.empty(), "empty join result");
  return c.verdict();
}

// One-byte logarithmic size codes.
Verdict size_codes() {
  Check c;
  auto start = std::chrono::steady_clock::now();
  static_assert(sizeof(pde::log_encode_size(0)) == 1);
  const uint64_t top = uint64_t{32} << 30;
  std::vector<uint64_t> sweep;
  for (uint64_t b = 1; b <= 4096; ++b) sweep.push_back(b);
  for (double b = 4096; b < static_cast<double>(top); b *= 1.01) sweep.push_back(static_cast<uint64_t>(b));
  std::mt19937_64 gen(4);
  for (int i = 0; i < 100000; ++i) sweep.push_back(1 + gen() % top);
  for (uint64_t p = 1; p <= top; p <<= 1) sweep.insert(sweep.end(), {p - 1, p, p + 1});
  sweep.push_back(top);
  double worst = 0;
  uint64_t worst_at = 0;
  for (uint64_t b : sweep) {
    if (b == 0 || b > top) continue;
    double err = std::abs(static_cast<double>(pde::decode_size(pde::log_encode_size(b))) - static_cast<double>(b)) /
                 static_cast<double>(b);
    if (err > worst) worst = err, worst_at = b;
  }
  c.note(std::to_string(sweep.size()) + " sizes up to 32 GiB");
  c.note("worst error " + std::to_string(worst) + " at " + std::to_string(worst_at));
  c.expect(pde::decode_size(pde::log_encode_size(0)) == 0, "zero does not round trip");
  c.expect(worst <= 0.10, "error above 0.10");
  c.expect(!pde::size_clamped(top), "32 GiB flagged as clamped");
  auto seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  c.expect(seconds <= 10, "took " + std::to_string(seconds) + " s");
  rec->text(hex(worst));
  return c.verdict();
}

// Exhaustive optimum versus longest-processing-time assignment.
Verdict lpt_quality() {
  Check c;
  std::mt19937_64 gen(6);
  size_t within = 0;
  double worst = 1;
  for (int trial = 0; trial < 200; ++trial) {
    size_t n = 1 + gen() % 12;
    size_t bins = 2 + gen() % 4;
    std::vector<uint64_t> sizes(n);
    for (auto& s : sizes) s = 1 + gen() % (trial % 2 ? 1000 : 20);
    auto loads = pde::lpt_assign(sizes, bins).bin_loads(sizes);
    uint64_t lpt = *std::max_element(loads.begin(), loads.end());
    uint64_t opt = testing::optimal_max_bin(sizes, bins);
    within += 3 * lpt <= 4 * opt && lpt >= opt;
    worst = std::max(worst, static_cast<double>(lpt) / static_cast<double>(opt));
    rec->text(std::to_string(lpt) + "/" + std::to_string(opt));
  }
  std::vector<uint64_t> example{5, 4, 3, 3, 1};
  auto loads = pde::lpt_assign(example, 2).bin_loads(example);
  std::sort(loads.begin(), loads.end());
  c.note(std::to_string(within) + "/200 within 4/3");
  c.note("worst ratio " + std::to_string(worst));
  c.note("[5,4,3,3,1] loads {" + std::to_string(loads[0]) + "," + std::to_string(loads[1]) + "}");
  c.expect(within == 200, "an instance exceeds 4/3 of optimal");
  c.expect(loads == std::vector<uint64_t>{8, 8}, "example loads differ from {8,8}");
  return c.verdict();
}

// Columnar encoding of lineitem.
Verdict compression() {
  Check c;
  auto t = session::generate_lineitem(120000, 7);
  auto cached = storage::load_table(t.rows, t.schema);
  size_t cols = t.schema.size();
  std::vector<std::set<std::string>> distinct(cols);
  for (const auto& row : t.rows)
    for (size_t j = 0; j < cols; ++j) distinct[j].insert(to_literal(row[j]));
  // The flag and mode columns: strings with few distinct values.
  size_t low = 0, total_encoded = 0, total_plain = 0;
  for (size_t j = 0; j < cols; ++j) {
    if (t.schema.columns()[j].type != Type::kUtf8 || distinct[j].size() > 64) continue;
    ++low;
    size_t encoded = 0, plain = 0;
    size_t offset = 0;
    for (const auto& part : cached.partitions) {
      std::vector<Value> values;
      for (size_t i = 0; i < part->row_count(); ++i) values.push_back(t.rows[offset + i][j]);
      offset += part->row_count();
      encoded += part->columns[j].payload_bytes();
      plain += storage::plain_payload_bytes(values, t.schema.columns()[j].type);
    }
    total_encoded += encoded;
    total_plain += plain;
    double ratio = static_cast<double>(encoded) / static_cast<double>(plain);
    c.note(t.schema.columns()[j].name + " " + std::to_string(ratio).substr(0, 5));
    c.expect(ratio <= 0.5, t.schema.columns()[j].name + " ratio " + std::to_string(ratio));
    rec->text(t.schema.columns()[j].name + " " + std::to_string(encoded) + "/" + std::to_string(plain));
  }
  c.expect(low >= 4, "fewer than 4 low-cardinality columns");
  c.note("total " + std::to_string(total_encoded) + " of " + std::to_string(total_plain) + " plain bytes");
  c.expect(2 * total_encoded <= total_plain, "total encoded above half of plain");
  c.expect(cached.row_count() == t.rows.size(), "row count changed");
  c.expect(cached.rows() == t.rows, "round trip differs");

  // The same data cached through the shell reads back identically.
  Session s({});
  s.add_table("lineitem", t, true, "generated lineitem");
  auto back = s.run(table_node(s, "lineitem"), "scan lineitem");
  rec->report(back.report);
  c.expect(back.rows == t.rows, "cached table scan differs");
  c.note(std::to_string(t.rows.size()) + " rows round trip");
  return c.verdict();
}

// Partition pruning on data clustered by day.
Verdict pruning() {
  Check c;
  const std::string q =
      "SELECT category, count(*), sum(amount), min(id) FROM daily WHERE day = DATE '2024-01-17' GROUP BY category";
  auto run = [&](bool prune) {
    SessionConfig cfg;
    cfg.partition_rows = 500;
    cfg.pruning_on = prune;
    Session s(cfg);
    ok(s, "\\gen daily daily days=30 per_day=500 seed=8 cache=true");
    auto res = s.run(s.sql_to_dataset(q), q);
    rec->report(res.report);
    return res;
  };
  auto pruned = run(true);
  auto full = run(false);
  rec->rows(sorted(pruned.rows));
  size_t total = pruned.report.partitions_scanned + pruned.report.partitions_pruned;
  double selectivity = 1.0 / 30.0;
  c.note("scanned " + std::to_string(pruned.report.partitions_scanned) + " of " + std::to_string(total));
  c.expect(total == 30, "expected 30 partitions");
  c.expect(pruned.report.partitions_scanned <= selectivity * total + 2, "scanned too many partitions");
  c.expect(full.report.partitions_pruned == 0, "pruning ran while disabled");
  c.expect(sorted(pruned.rows) == sorted(full.rows), "pruned results differ");
  c.expect(!pruned.rows.empty(), "empty result");
  return c.verdict();
}

// Join of tables distributed on the join key.
Verdict copartitioned_join() {
  Check c;
  Session s({});
  ok(s, "\\gen orders keyed rows=20000 groups=2000 seed=41");
  ok(s, "\\gen customers keyed rows=3000 groups=2000 seed=42");
  ok(s, "CREATE TABLE o_mem TBLPROPERTIES (\"shark.cache\"=true) AS SELECT * FROM orders DISTRIBUTE BY k");
  ok(s, "CREATE TABLE c_mem TBLPROPERTIES (\"shark.cache\"=true, \"copartition\"=\"o_mem\") AS SELECT * FROM "
        "customers DISTRIBUTE BY k");
  const std::string co_q = "SELECT a.id, b.id, a.v * b.v FROM o_mem a JOIN c_mem b ON a.k = b.k";
  const std::string plain_q = "SELECT a.id, b.id, a.v * b.v FROM orders a JOIN customers b ON a.k = b.k";
  auto co = s.run(s.sql_to_dataset(co_q), co_q);
  auto plain = s.run(s.sql_to_dataset(plain_q), plain_q);
  rec->report(co.report);
  rec->report(plain.report);
  rec->rows(sorted(co.rows));
  c.note("co-partitioned shuffle stages " + std::to_string(co.report.shuffle_stages_run));
  c.note("plain shuffle stages " + std::to_string(plain.report.shuffle_stages_run));
  c.note(std::to_string(co.rows.size()) + " rows");
  c.expect(co.report.shuffle_stages_run == 0, "co-partitioned join shuffled");
  c.expect(co.report.bytes_shuffled == 0, "co-partitioned join moved bytes");
  c.expect(plain.report.shuffle_stages_run > 0, "plain join did not shuffle");
  c.expect(sorted(co.rows) == sorted(plain.rows), "results differ");
  return c.verdict();
}

long double oracle_loss(const std::vector<ml::LabeledPoint>& pts, const std::vector<double>& w) {
  long double total = 0;
  for (const auto& p : pts) {
    long double m = 0;
    for (size_t i = 0; i < w.size(); ++i) m += static_cast<long double>(w[i]) * p.x[i];
    long double z = -p.y * m;
    total += z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
  }
  return total;
}

// Logistic regression: gradient, convergence and recovery.
Verdict logistic_regression() {
  Check c;
  std::mt19937_64 gen(10);
  double worst = 0;
  for (int config = 0; config < 20; ++config) {
    std::uniform_real_distribution<double> u(-2, 2);
    std::vector<ml::LabeledPoint> pts(200);
    for (auto& p : pts) {
      p.x = {u(gen), u(gen), u(gen), u(gen)};
      p.y = gen() % 2 ? 1.0 : -1.0;
    }
    std::vector<double> w{u(gen), u(gen), u(gen), u(gen)};
    auto g = ml::lr_gradient(pts, w);
    const double h = 1e-3;
    for (size_t i = 0; i < w.size(); ++i) {
      auto at = [&](double delta) {
        auto v = w;
        v[i] += delta;
        return oracle_loss(pts, v);
      };
      long double fd = (-at(2 * h) + 8 * at(h) - 8 * at(-h) + at(-2 * h)) / (12 * h);
      worst = std::max(worst, std::abs(static_cast<double>(fd) - g[i]));
    }
  }
  char worst_text[32];
  std::snprintf(worst_text, sizeof worst_text, "%.2e", worst);
  c.note(std::string("gradient vs finite differences ") + worst_text);
  c.expect(worst <= 1e-5, "gradient differs from finite differences");

  auto train = [&](bool kill, double* accuracy) {
    Session s({});
    ok(s, "\\gen sep separable rows=2000 seed=12");
    auto points = ml::feature_points(table_node(s, "sep"), ml::parse_function_ref("select(x1,x2)"), "label");
    if (kill) s.cluster().arm(engine::parse_fault("kill 1 at task 2 in job 5"));
    auto ctx = context(s);
    size_t killed = 0;
    ctx.on_report = [&](const engine::JobReport& r) {
      rec->report(r);
      killed += r.workers_killed;
    };
    auto r = ml::logistic_regression(ctx, points, {.iterations = 10, .seed = 3});
    if (accuracy) {
      lineage::LocalPartitionCache local;
      size_t right = 0, n = 0;
      for (const auto& row : lineage::collect(points, local)) {
        double m = r.weights[0] * row[0].as_double() + r.weights[1] * row[1].as_double();
        right += (m > 0 ? 1.0 : -1.0) == row[2].as_double();
        ++n;
      }
      *accuracy = static_cast<double>(right) / n;
    }
    c.expect(killed == (kill ? 1u : 0u), kill ? "fault did not fire" : "unexpected kill");
    return r.weights;
  };
  double accuracy = 0;
  auto clean = train(false, &accuracy);
  auto faulty = train(true, nullptr);
  std::string ws;
  for (double w : clean) ws += hex(w) + " ";
  rec->text(ws);
  c.note("accuracy " + std::to_string(accuracy));
  c.note("weights " + ws);
  c.expect(accuracy >= 0.95, "accuracy below 0.95");
  c.expect(clean == faulty, "weights differ under a mid-iteration kill");
  return c.verdict();
}

// K-means: monotone error and exact fixed points.
Verdict kmeans() {
  Check c;
  size_t monotone = 0;
  double worst_rise = 0;
  for (uint64_t seed = 0; seed < 20; ++seed) {
    Session s({});
    ok(s, "\\gen b blobs rows=1500 clusters=5 spread=12 seed=" + std::to_string(100 + seed));
    auto points = ml::feature_points(table_node(s, "b"), ml::parse_function_ref("select(x,y)"), "");
    auto r = ml::kmeans(context(s), points, {.k = 2 + seed % 5, .iterations = 10, .seed = seed});
    bool ok_seed = r.sse.size() == 11;
    for (size_t t = 1; t < r.sse.size(); ++t) {
      worst_rise = std::max(worst_rise, r.sse[t] - r.sse[t - 1]);
      ok_seed &= r.sse[t] <= r.sse[t - 1] + 1e-9;
    }
    monotone += ok_seed;
    rec->text(hex(r.sse.back()));
  }
  c.note(std::to_string(monotone) + "/20 seeds monotone");
  c.note("largest rise " + std::to_string(worst_rise));
  c.expect(monotone == 20, "SSE increased");

  // Coincident points: centroids land exactly on the generating locations.
  Session s({});
  ok(s, "\\gen blobs blobs rows=800 clusters=4 spread=0 seed=5");
  auto points = ml::feature_points(table_node(s, "blobs"), ml::parse_function_ref("select(x,y)"), "");
  auto r = ml::kmeans(context(s), points, {.k = 4, .iterations = 3, .seed = 9});
  auto got = r.centroids;
  std::sort(got.begin(), got.end());
  std::vector<std::vector<double>> want{{0, 0}, {20, -20}, {40, -40}, {60, -60}};
  c.expect(got == want, "centroids are not the blob locations");
  c.expect(r.sse.back() == 0.0, "nonzero error at the fixed point");
  bool stationary = true;
  for (size_t t = 1; t < r.sse.size(); ++t) stationary &= r.sse[t] == 0.0;
  c.expect(stationary, "fixed point moved");

  // Once converged, one more iteration changes nothing.
  Session s2({});
  ok(s2, "\\gen b blobs rows=1000 clusters=3 spread=2 seed=6");
  auto pts2 = ml::feature_points(table_node(s2, "b"), ml::parse_function_ref("select(x,y)"), "");
  auto a = ml::kmeans(context(s2), pts2, {.k = 3, .iterations = 30, .seed = 2});
  auto b = ml::kmeans(context(s2), pts2, {.k = 3, .iterations = 31, .seed = 2});
  c.expect(a.centroids == b.centroids && a.sizes == b.sizes, "not at a fixed point after 30 iterations");
  c.expect(b.sse[31] == b.sse[30], "error changed at the fixed point");
  c.note("fixed points exact");
  return c.verdict();
}

struct Criterion {
  int number;
  std::function<Verdict()> run;
};

}  // namespace
}  // namespace ember

int main() {
  using namespace ember;
  std::vector<Criterion> criteria{{1, oracle_equivalence},  {2, fault_transparency}, {3, mapjoin_selection},
                                  {4, size_codes},          {6, lpt_quality},        {7, compression},
                                  {8, pruning},             {9, copartitioned_join}, {10, logistic_regression},
                                  {11, kmeans}};
  bool all = true;
  size_t stats_max = 0, reports = 0;
  std::vector<std::string> differing;
  std::map<int, std::string> lines;
  for (const auto& crit : criteria) {
    Verdict runs[2];
    for (int attempt = 0; attempt < 2; ++attempt) {
      Recorder r;
      rec = &r;
      try {
        runs[attempt] = crit.run();
      } catch (const std::exception& e) {
        runs[attempt] = {false, std::string("exception: ") + e.what(), r.transcript};
      }
      stats_max = std::max(stats_max, r.stats_max_bytes);
      reports += r.reports;
    }
    if (runs[0].transcript != runs[1].transcript) differing.push_back("AC" + std::to_string(crit.number));
    const auto& v = runs[0];
    all &= v.pass && runs[1].pass;
    lines[crit.number] = (v.pass && runs[1].pass ? "PASS " : "FAIL ") + v.detail;
  }
  bool stats_ok = stats_max <= 2048;
  all &= stats_ok;
  lines[5] = std::string(stats_ok ? "PASS" : "FAIL") + " largest serialized stats " + std::to_string(stats_max) +
             " B over " + std::to_string(reports) + " jobs in all workloads";
  std::string diff;
  for (const auto& d : differing) diff += " " + d;
  lines[12] = std::string(differing.empty() ? "PASS" : "FAIL") + " every check run twice; " +
              (differing.empty() ? std::string("reports and results byte-identical") : "differs in" + diff);
  all &= differing.empty();
  for (const auto& [n, line] : lines) std::cout << "AC" << n << " " << line << "\n";
  return all ? 0 : 1;
}
