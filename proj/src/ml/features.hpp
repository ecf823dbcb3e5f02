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

#include <span>
#include <string>
#include <vector>

#include "lineage/node.hpp"

namespace ember::ml {

// Registered names of the partition functions below.
inline constexpr const char* kPointsFunction = "ml.points";
inline constexpr const char* kGradientFunction = "ml.lr_gradient";
inline constexpr const char* kAssignFunction = "ml.kmeans_assign";

// Idempotent.
void register_ml_functions();

// "name" or "name(params)", e.g. "select(x,y)".
struct FunctionRef {
  std::string name;
  std::string params;
};
FunctionRef parse_function_ref(const std::string& text);

// Narrow per-row map through a registered function; the lineage records the
// function name and parameters. Throws NotFound or FieldNotFound.
lineage::NodePtr map_rows(const lineage::NodePtr& table, const std::string& function, const std::string& params = {});

// Feature vectors x0..x{D-1} (Float64), then y in {-1, +1} when `label` is
// set. Labels 0/false map to -1 and 1/true to +1.
lineage::NodePtr feature_points(const lineage::NodePtr& table, const FunctionRef& features, const std::string& label);

struct LabeledPoint {
  std::vector<double> x;
  double y = 1;
};

// Sum over points of (1/(1+exp(-y w.x)) - 1) * y * x, accumulated in order.
// Throws DimensionMismatch.
std::vector<double> lr_gradient(std::span<const LabeledPoint> points, std::span<const double> w);
// Sum of log(1 + exp(-y w.x)).
double lr_loss(std::span<const LabeledPoint> points, std::span<const double> w);

// Nearest centroid by squared Euclidean distance, ties to the lower index.
size_t nearest_centroid(std::span<const double> x, const std::vector<std::vector<double>>& centroids);

}  // namespace ember::ml
