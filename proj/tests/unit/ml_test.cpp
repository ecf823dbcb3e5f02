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

#include "lineage/evaluator.hpp"
#include "lineage/functions.hpp"
#include "ml/algorithms.hpp"
#include "ml/features.hpp"
#include "session/session.hpp"
#include "support/expect_error.hpp"

namespace ember::ml {
namespace {

using session::Session;

// Loss computed independently of the library, in extended precision.
long double oracle_loss(const std::vector<LabeledPoint>& pts, const std::vector<double>& w) {
  long double total = 0;
  for (const auto& p : pts) {
    long double m = 0;
    for (size_t i = 0; i < w.size(); ++i) m += static_cast<long double>(w[i]) * p.x[i];
    long double z = -p.y * m;
    total += z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
  }
  return total;
}

std::vector<LabeledPoint> random_points(std::mt19937_64& gen, size_t n, size_t d, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  std::vector<LabeledPoint> pts(n);
  for (auto& p : pts) {
    p.x.resize(d);
    for (auto& v : p.x) v = u(gen);
    p.y = gen() % 2 ? 1.0 : -1.0;
  }
  return pts;
}

MlContext context(Session& s, std::vector<engine::JobReport>* reports = nullptr) {
  MlContext ctx;
  ctx.cluster = &s.cluster();
  ctx.make_hook = [&s] { return s.make_hook(); };
  if (reports) ctx.on_report = [reports](const engine::JobReport& r) { reports->push_back(r); };
  ctx.statement = "test";
  return ctx;
}

lineage::NodePtr table_node(Session& s, const std::string& name) { return s.catalog().get(name)->dataset; }

TEST(Gradient, SinglePointByHand) {
  std::vector<LabeledPoint> pos{{{1.0, 0.0}, 1.0}};
  std::vector<double> w{0.0, 0.0};
  EXPECT_EQ(lr_gradient(pos, w), (std::vector<double>{-0.5, 0.0}));
  std::vector<LabeledPoint> neg{{{1.0, 0.0}, -1.0}};
  EXPECT_EQ(lr_gradient(neg, w), (std::vector<double>{0.5, 0.0}));
}

TEST(Gradient, MatchesFiniteDifferences) {
  std::mt19937_64 gen(101);
  for (int config = 0; config < 20; ++config) {
    auto pts = random_points(gen, 100, 5, 1.0 + config % 4);
    std::vector<double> w(5);
    std::uniform_real_distribution<double> u(-2, 2);
    for (auto& v : w) v = u(gen);
    auto g = lr_gradient(pts, w);
    const double h = 1e-3;
    for (size_t i = 0; i < w.size(); ++i) {
      auto at = [&](double delta) {
        auto v = w;
        v[i] += delta;
        return oracle_loss(pts, v);
      };
      // Five-point central difference.
      long double fd = (-at(2 * h) + 8 * at(h) - 8 * at(-h) + at(-2 * h)) / (12 * h);
      double diff = std::abs(static_cast<double>(fd) - g[i]);
      EXPECT_LE(diff, 1e-5) << "config " << config << " dim " << i;
      if (std::abs(g[i]) > 1e-8) EXPECT_LE(diff / std::abs(g[i]), 1e-5) << "config " << config << " dim " << i;
    }
    EXPECT_NEAR(lr_loss(pts, w), static_cast<double>(oracle_loss(pts, w)), 1e-9 * static_cast<double>(oracle_loss(pts, w)));
  }
}

TEST(Gradient, ExtremeMarginsStayFinite) {
  std::vector<LabeledPoint> pts{{{1000.0}, 1.0}, {{1000.0}, -1.0}};
  std::vector<double> w{5.0};
  auto g = lr_gradient(pts, w);
  EXPECT_TRUE(std::isfinite(g[0]));
  EXPECT_NEAR(g[0], 1000.0, 1e-9);
  EXPECT_TRUE(std::isfinite(lr_loss(pts, w)));
}

TEST(Gradient, DimensionMismatch) {
  std::vector<LabeledPoint> pts{{{1.0, 2.0}, 1.0}};
  std::vector<double> w{1.0};
  EXPECT_ERROR_CODE(lr_gradient(pts, w), ErrorCode::kDimensionMismatch);
}

Session& separable_session(Session& s, size_t rows, uint64_t seed) {
  auto out = s.execute("\\gen sep separable rows=" + std::to_string(rows) + " seed=" + std::to_string(seed));
  EXPECT_TRUE(out.ok) << out.message;
  return s;
}

TEST(Gradient, PartitionSumsAreAdditive) {
  register_ml_functions();
  for (size_t partition_rows : {7u, 64u, 1000u}) {
    session::SessionConfig cfg;
    cfg.partition_rows = partition_rows;
    Session s(cfg);
    separable_session(s, 500, 3);
    auto points = feature_points(table_node(s, "sep"), parse_function_ref("select(x1,x2)"), "label");
    std::vector<double> w{0.25, -0.75};
    auto grads = lineage::make_map(points, kGradientFunction, lineage::encode_vector(w));
    auto rows = s.cluster().run_job(grads, nullptr, "g").rows;
    ASSERT_EQ(rows.size(), points->partition_count);

    // Driver-side oracle: gradient of each partition's raw rows, summed in index order.
    lineage::LocalPartitionCache cache;
    std::vector<double> expect(2, 0.0), full_order(2, 0.0);
    std::vector<LabeledPoint> all;
    for (size_t p = 0; p < points->partition_count; ++p) {
      std::vector<LabeledPoint> part;
      auto rows_p = lineage::recompute_partition(points, p, cache);
      for (const auto& r : *rows_p) {
        part.push_back({{r[0].as_double(), r[1].as_double()}, r[2].as_double()});
      }
      auto g = lr_gradient(part, w);
      for (size_t i = 0; i < 2; ++i) expect[i] += g[i];
      all.insert(all.end(), part.begin(), part.end());
    }
    std::vector<double> engine_sum(2, 0.0);
    for (const auto& r : rows) {
      for (size_t i = 0; i < 2; ++i) engine_sum[i] += r[i].as_double();
    }
    EXPECT_EQ(engine_sum, expect);
    auto whole = lr_gradient(all, w);
    for (size_t i = 0; i < 2; ++i) EXPECT_NEAR(engine_sum[i], whole[i], 1e-9 * (1 + std::abs(whole[i])));
  }
}

TEST(LogReg, OneIterationIsOneGradientStep) {
  Session s({});
  separable_session(s, 300, 4);
  auto points = feature_points(table_node(s, "sep"), parse_function_ref("select(x1,x2)"), "label");
  auto ctx = context(s);
  auto r = logistic_regression(ctx, points, {.iterations = 1, .seed = 9, .step = 0.5});
  auto w0 = initial_weights(2, 9);
  std::vector<LabeledPoint> all;
  lineage::LocalPartitionCache cache;
  for (const auto& row : lineage::collect(points, cache)) {
    all.push_back({{row[0].as_double(), row[1].as_double()}, row[2].as_double()});
  }
  auto g = lr_gradient(all, w0);  // single partition, so order matches
  ASSERT_EQ(r.weights.size(), 2u);
  for (size_t i = 0; i < 2; ++i) EXPECT_EQ(r.weights[i], w0[i] - 0.5 * g[i]);
}

TEST(LogReg, InitialWeightsInRange) {
  auto w = initial_weights(1000, 77);
  for (double v : w) {
    EXPECT_GE(v, -1.0);
    EXPECT_LT(v, 1.0);
  }
  EXPECT_EQ(w, initial_weights(1000, 77));
  EXPECT_NE(w, initial_weights(1000, 78));
}

TEST(LogReg, SeparableReachesAccuracy) {
  Session s({});
  separable_session(s, 2000, 1);
  auto points = feature_points(table_node(s, "sep"), parse_function_ref("select(x1,x2)"), "label");
  std::vector<engine::JobReport> reports;
  auto r = logistic_regression(context(s, &reports), points, {.iterations = 10, .seed = 1});
  EXPECT_GE(r.accuracy, 0.95);
  EXPECT_EQ(r.points, 2000u);
  EXPECT_EQ(r.history.size(), 10u);
  EXPECT_EQ(reports.size(), 11u);  // ten gradient jobs and one evaluation
}

TEST(LogReg, KillMidIterationIsBitIdentical) {
  auto run = [](bool kill) {
    Session s({});
    separable_session(s, 2000, 2);
    auto points = feature_points(table_node(s, "sep"), parse_function_ref("select(x1,x2)"), "label");
    if (kill) s.cluster().arm(engine::parse_fault("kill 1 at task 2 in job 4"));
    std::vector<engine::JobReport> reports;
    auto r = logistic_regression(context(s, &reports), points, {.iterations = 10, .seed = 5});
    size_t killed = 0;
    for (const auto& rep : reports) killed += rep.workers_killed;
    EXPECT_EQ(killed, kill ? 1u : 0u);
    return r.weights;
  };
  EXPECT_EQ(run(true), run(false));
}

TEST(LogReg, ZeroIterationsRejected) {
  Session s({});
  separable_session(s, 10, 1);
  auto points = feature_points(table_node(s, "sep"), parse_function_ref("select(x1,x2)"), "label");
  EXPECT_ERROR_CODE(logistic_regression(context(s), points, {.iterations = 0}), ErrorCode::kInvalidArgument);
}

TEST(KMeans, FixedPointRecoversLocations) {
  Session s({});
  ASSERT_TRUE(s.execute("\\gen blobs blobs rows=400 clusters=4 spread=0 seed=3").ok);
  auto points = feature_points(table_node(s, "blobs"), parse_function_ref("select(x,y)"), "");
  auto r = kmeans(context(s), points, {.k = 4, .iterations = 1, .seed = 11});
  auto got = r.centroids;
  std::sort(got.begin(), got.end());
  std::vector<std::vector<double>> want{{0, 0}, {20, -20}, {40, -40}, {60, -60}};
  EXPECT_EQ(got, want);
  EXPECT_EQ(r.sse.back(), 0.0);
  // Sizes match the generator's own labels.
  std::map<std::vector<double>, int64_t> by_centroid;
  for (size_t c = 0; c < 4; ++c) by_centroid[r.centroids[c]] = r.sizes[c];
  std::map<int64_t, int64_t> labelled;
  lineage::LocalPartitionCache cache;
  for (const auto& row : lineage::collect(table_node(s, "blobs"), cache)) ++labelled[row[2].as_int()];
  for (int64_t c = 0; c < 4; ++c) EXPECT_EQ(by_centroid[(std::vector<double>{20.0 * c, -20.0 * c})], labelled[c]);
}

TEST(KMeans, SingleClusterIsMean) {
  Session s({});
  RowBatch rows;
  for (int i = 0; i < 64; ++i) rows.push_back({Value(i * 0.25), Value(-i * 0.5)});
  s.add_table("pts", {Schema({{"a", Type::kFloat64}, {"b", Type::kFloat64}}), rows}, false, "generated pts");
  auto points = feature_points(table_node(s, "pts"), parse_function_ref("select(a,b)"), "");
  auto r = kmeans(context(s), points, {.k = 1, .iterations = 3, .seed = 2});
  ASSERT_EQ(r.centroids.size(), 1u);
  EXPECT_EQ(r.centroids[0], (std::vector<double>{63 * 0.25 / 2, -63 * 0.5 / 2}));
}

TEST(KMeans, SseNeverIncreases) {
  for (uint64_t seed = 0; seed < 20; ++seed) {
    session::SessionConfig cfg;
    cfg.partition_rows = 97;
    Session s(cfg);
    ASSERT_TRUE(s.execute("\\gen b blobs rows=600 clusters=5 spread=15 seed=" + std::to_string(seed)).ok);
    auto points = feature_points(table_node(s, "b"), parse_function_ref("select(x,y)"), "");
    auto r = kmeans(context(s), points, {.k = 2 + seed % 5, .iterations = 10, .seed = seed});
    ASSERT_EQ(r.sse.size(), 11u);
    for (size_t t = 1; t < r.sse.size(); ++t) EXPECT_LE(r.sse[t], r.sse[t - 1] + 1e-9) << "seed " << seed << " t " << t;
  }
}

TEST(KMeans, TooFewDistinctPoints) {
  std::vector<std::vector<double>> pts{{1, 1}, {1, 1}, {2, 2}};
  EXPECT_ERROR_CODE(initial_centroids(pts, 3, 0), ErrorCode::kInvalidK);
  EXPECT_ERROR_CODE(initial_centroids(pts, 0, 0), ErrorCode::kInvalidK);
  auto two = initial_centroids(pts, 2, 0);
  EXPECT_NE(two[0], two[1]);
}

TEST(KMeans, NearestTiesGoLow) {
  std::vector<std::vector<double>> c{{0.0}, {2.0}};
  std::vector<double> mid{1.0};
  EXPECT_EQ(nearest_centroid(mid, c), 0u);
}

TEST(MapRows, SelectExtractsColumns) {
  Session s({});
  separable_session(s, 50, 6);
  auto table = table_node(s, "sep");
  auto mapped = map_rows(table, "select", "x2,x1");
  lineage::LocalPartitionCache cache;
  auto src = lineage::collect(table, cache);
  auto out = lineage::collect(mapped, cache);
  ASSERT_EQ(out.size(), src.size());
  for (size_t i = 0; i < out.size(); ++i) {
    EXPECT_EQ(out[i][0], src[i][1]);
    EXPECT_EQ(out[i][1], src[i][0]);
  }
  EXPECT_ERROR_CODE(map_rows(table, "select", "x1,nope"), ErrorCode::kFieldNotFound);
  EXPECT_ERROR_CODE(map_rows(table, "no.function"), ErrorCode::kNotFound);
}

TEST(MapRows, RecomputeAfterEvictionIsIdentical) {
  Session s({});
  separable_session(s, 300, 7);
  auto points = lineage::make_persist(
      feature_points(table_node(s, "sep"), parse_function_ref("select(x1,x2)"), "label"), lineage::StorageLevel::kRows,
      "points");
  auto first = s.cluster().run_job(points, nullptr, "a").rows;
  for (size_t i = 0; i < points->partition_count; ++i) s.cluster().evict(points->id, i);
  EXPECT_EQ(s.cluster().run_job(points, nullptr, "b").rows, first);
}

TEST(SqlToDataset, MatchesQueryAndJoinSchema) {
  Session s({});
  ASSERT_TRUE(s.execute("\\gen users keyed rows=40 groups=5 seed=1").ok);
  ASSERT_TRUE(s.execute("\\gen comments keyed rows=60 groups=5 seed=2").ok);
  auto node = s.sql_to_dataset("SELECT * FROM users");
  auto rows = s.cluster().run_job(node, nullptr, "q").rows;
  auto shown = s.execute("SELECT * FROM users;");
  ASSERT_TRUE(shown.ok);
  EXPECT_NE(shown.output.find("(" + std::to_string(rows.size()) + " rows)"), std::string::npos);
  auto join = s.sql_to_dataset("SELECT * FROM users u JOIN comments c ON u.id = c.id");
  EXPECT_EQ(join->schema.size(), 8u);
  EXPECT_ERROR_CODE(s.sql_to_dataset("SELECT * FROM nowhere"), ErrorCode::kNotFound);
}

TEST(MlCommand, LabelsAndOutput) {
  Session s({});
  separable_session(s, 400, 8);
  auto out = s.execute("ML LOGREG SELECT x1, x2, label FROM sep FEATURES select(x1,x2) LABEL label ITER 5 SEED 3");
  ASSERT_TRUE(out.ok) << out.message;
  EXPECT_EQ(out.output.rfind("feature,weight\n", 0), 0u) << out.output;
  auto bad = s.execute("ML KMEANS SELECT x1 FROM sep FEATURES select(x1) K 0 ITER 2 SEED 1");
  EXPECT_FALSE(bad.ok);
  EXPECT_EQ(bad.code, ErrorCode::kInvalidK);
}

}  // namespace
}  // namespace ember::ml
