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
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "engine/cluster.hpp"
#include "ml/features.hpp"

namespace ember::ml {

// How the iterative drivers talk to the cluster. Every iteration is one job.
struct MlContext {
  engine::Cluster* cluster = nullptr;
  // Fresh hook per job; may be empty.
  std::function<std::unique_ptr<engine::PlanHook>()> make_hook;
  // Called after every job, failed ones included.
  std::function<void(const engine::JobReport&)> on_report;
  std::string statement;
};

struct LogRegOptions {
  size_t iterations = 10;
  uint64_t seed = 0;
  double step = 1.0;
};

struct LogRegIteration {
  double loss = 0;      // at the weights the gradient was taken at
  double accuracy = 0;
  double gradient_norm = 0;
};

struct LogRegResult {
  std::vector<double> weights;
  std::vector<LogRegIteration> history;
  double loss = 0;  // final weights
  double accuracy = 0;
  size_t points = 0;
};

// Initial weights: 2u - 1 per component, u from the top 53 bits of a
// mt19937_64 seeded with `seed`.
std::vector<double> initial_weights(size_t dims, uint64_t seed);

// `points` comes from feature_points with a label. It is cached for the
// iterations; w <- w - step * gradient, partials summed in partition order.
LogRegResult logistic_regression(const MlContext& ctx, const lineage::NodePtr& points, const LogRegOptions& options);

struct KMeansOptions {
  size_t k = 2;
  size_t iterations = 10;
  uint64_t seed = 0;
};

struct KMeansResult {
  std::vector<std::vector<double>> centroids;
  std::vector<int64_t> sizes;
  // sse[t] is the error of the assignment to the centroids after t updates.
  std::vector<double> sse;
  size_t points = 0;
};

// k distinct point values chosen by a seeded partial shuffle. Throws
// InvalidK when fewer than k distinct values exist.
std::vector<std::vector<double>> initial_centroids(const std::vector<std::vector<double>>& points, size_t k,
                                                   uint64_t seed);

// Lloyd iterations; an empty cluster keeps its centroid.
KMeansResult kmeans(const MlContext& ctx, const lineage::NodePtr& points, const KMeansOptions& options);

}  // namespace ember::ml
