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

#include "ml/algorithms.hpp"

#include <cmath>
#include <random>
#include <set>

#include "common/error.hpp"
#include "lineage/functions.hpp"

namespace ember::ml {

namespace {

engine::JobResult run(const MlContext& ctx, const lineage::NodePtr& root, const std::string& what) {
  if (!ctx.cluster) fail(ErrorCode::kInternal, "ml context without a cluster");
  std::unique_ptr<engine::PlanHook> hook;
  if (ctx.make_hook) hook = ctx.make_hook();
  std::string statement = ctx.statement.empty() ? what : ctx.statement + " [" + what + "]";
  try {
    auto result = ctx.cluster->run_job(root, hook.get(), statement);
    if (ctx.on_report) ctx.on_report(result.report);
    return result;
  } catch (const Error&) {
    if (ctx.on_report) ctx.on_report(ctx.cluster->last_failed_report());
    throw;
  }
}

lineage::NodePtr cached(const lineage::NodePtr& points) {
  if (points->persisted()) return points;
  return lineage::make_persist(points, lineage::StorageLevel::kRows, "points");
}

struct GradientPass {
  std::vector<double> gradient;
  double loss = 0;
  int64_t correct = 0;
  int64_t count = 0;
};

GradientPass gradient_pass(const MlContext& ctx, lineage::NodePtr& points, const std::vector<double>& w,
                           const std::string& what) {
  auto root = lineage::make_map(points, kGradientFunction, lineage::encode_vector(w));
  auto result = run(ctx, root, what);
  // Later jobs reuse the cached points of the final plan.
  points = result.final_root->parents[0];
  size_t d = w.size();
  GradientPass pass;
  pass.gradient.assign(d, 0.0);
  for (const auto& r : result.rows) {
    for (size_t i = 0; i < d; ++i) pass.gradient[i] += r[i].as_double();
    pass.loss += r[d].as_double();
    pass.correct += r[d + 1].as_int();
    pass.count += r[d + 2].as_int();
  }
  return pass;
}

struct AssignPass {
  std::vector<int64_t> counts;
  std::vector<double> sums;
  double sse = 0;
};

AssignPass assign_pass(const MlContext& ctx, lineage::NodePtr& points,
                       const std::vector<std::vector<double>>& centroids, const std::string& what) {
  size_t k = centroids.size();
  size_t d = centroids[0].size();
  std::vector<double> flat{static_cast<double>(k)};
  for (const auto& c : centroids) flat.insert(flat.end(), c.begin(), c.end());
  auto root = lineage::make_map(points, kAssignFunction, lineage::encode_vector(flat));
  auto result = run(ctx, root, what);
  points = result.final_root->parents[0];
  AssignPass pass;
  pass.counts.assign(k, 0);
  pass.sums.assign(k * d, 0.0);
  for (const auto& r : result.rows) {
    for (size_t i = 0; i < k; ++i) pass.counts[i] += r[i].as_int();
    for (size_t i = 0; i < k * d; ++i) pass.sums[i] += r[k + i].as_double();
    pass.sse += r[k + k * d].as_double();
  }
  return pass;
}

uint64_t below(std::mt19937_64& gen, uint64_t n) { return gen() % n; }

}  // namespace

std::vector<double> initial_weights(size_t dims, uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::vector<double> w(dims);
  for (auto& x : w) {
    double u = static_cast<double>(gen() >> 11) * 0x1.0p-53;
    x = 2 * u - 1;
  }
  return w;
}

LogRegResult logistic_regression(const MlContext& ctx, const lineage::NodePtr& points_in,
                                 const LogRegOptions& options) {
  register_ml_functions();
  const Schema& schema = points_in->schema;
  if (schema.size() < 2 || schema[schema.size() - 1].name != "y") {
    fail(ErrorCode::kInvalidArgument, "logistic regression needs labeled points");
  }
  if (options.iterations == 0) fail(ErrorCode::kInvalidArgument, "iterations must be at least 1");
  auto points = cached(points_in);
  LogRegResult out;
  out.weights = initial_weights(schema.size() - 1, options.seed);
  for (size_t it = 0; it < options.iterations; ++it) {
    auto pass = gradient_pass(ctx, points, out.weights, "iteration " + std::to_string(it + 1));
    double norm = 0;
    for (size_t i = 0; i < out.weights.size(); ++i) {
      out.weights[i] -= options.step * pass.gradient[i];
      norm += pass.gradient[i] * pass.gradient[i];
    }
    double acc = pass.count ? static_cast<double>(pass.correct) / static_cast<double>(pass.count) : 0.0;
    out.history.push_back({pass.loss, acc, std::sqrt(norm)});
  }
  auto final_pass = gradient_pass(ctx, points, out.weights, "evaluate");
  out.loss = final_pass.loss;
  out.points = static_cast<size_t>(final_pass.count);
  out.accuracy = final_pass.count ? static_cast<double>(final_pass.correct) / static_cast<double>(final_pass.count) : 0.0;
  return out;
}

std::vector<std::vector<double>> initial_centroids(const std::vector<std::vector<double>>& points, size_t k,
                                                   uint64_t seed) {
  if (k == 0) fail(ErrorCode::kInvalidK, "k must be positive");
  std::mt19937_64 gen(seed);
  std::vector<size_t> order(points.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::vector<std::vector<double>> chosen;
  std::set<std::vector<double>> seen;
  for (size_t i = 0; i < order.size() && chosen.size() < k; ++i) {
    std::swap(order[i], order[i + below(gen, order.size() - i)]);
    const auto& p = points[order[i]];
    if (seen.insert(p).second) chosen.push_back(p);
  }
  if (chosen.size() < k) {
    fail(ErrorCode::kInvalidK, "k=" + std::to_string(k) + " exceeds the " + std::to_string(chosen.size()) +
                                   " distinct points");
  }
  return chosen;
}

KMeansResult kmeans(const MlContext& ctx, const lineage::NodePtr& points_in, const KMeansOptions& options) {
  register_ml_functions();
  if (options.k == 0) fail(ErrorCode::kInvalidK, "k must be positive");
  if (options.iterations == 0) fail(ErrorCode::kInvalidArgument, "iterations must be at least 1");
  for (const auto& c : points_in->schema) {
    if (c.type != Type::kFloat64) fail(ErrorCode::kTypeMismatch, "k-means needs Float64 points");
  }
  auto points = cached(points_in);
  auto collected = run(ctx, points, "sample");
  points = collected.final_root;
  std::vector<std::vector<double>> all;
  all.reserve(collected.rows.size());
  for (const auto& r : collected.rows) {
    std::vector<double> p;
    for (const auto& v : r) p.push_back(v.as_double());
    all.push_back(std::move(p));
  }
  KMeansResult out;
  out.points = all.size();
  out.centroids = initial_centroids(all, options.k, options.seed);
  size_t d = points->schema.size();
  for (size_t it = 0;; ++it) {
    bool last = it == options.iterations;
    auto pass = assign_pass(ctx, points, out.centroids, last ? "evaluate" : "iteration " + std::to_string(it + 1));
    out.sse.push_back(pass.sse);
    out.sizes = pass.counts;
    if (last) break;
    for (size_t c = 0; c < options.k; ++c) {
      if (pass.counts[c] == 0) continue;
      for (size_t j = 0; j < d; ++j) {
        out.centroids[c][j] = pass.sums[c * d + j] / static_cast<double>(pass.counts[c]);
      }
    }
  }
  return out;
}

}  // namespace ember::ml
