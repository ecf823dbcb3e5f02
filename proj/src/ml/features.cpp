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

#include "ml/features.hpp"

#include <cmath>
#include <mutex>

#include "common/error.hpp"
#include "lineage/functions.hpp"

namespace ember::ml {

using lineage::FunctionRegistry;
using lineage::Granularity;
using lineage::RowFunction;

namespace {

bool numeric(Type t) { return t == Type::kInt64 || t == Type::kFloat64; }

double as_double(const Value& v) {
  if (v.is_null()) fail(ErrorCode::kInvalidArgument, "feature value is NULL");
  if (v.type() == Type::kBoolean) return v.as_bool() ? 1.0 : 0.0;
  return v.numeric();
}

double as_label(const Value& v) {
  if (v.is_null()) fail(ErrorCode::kInvalidArgument, "label is NULL");
  double d = v.type() == Type::kBoolean ? (v.as_bool() ? 1.0 : 0.0) : v.numeric();
  if (d == 1.0) return 1.0;
  if (d == 0.0 || d == -1.0) return -1.0;
  fail(ErrorCode::kInvalidArgument, "label must be 0/1 or -1/+1, got " + to_string(v));
}

struct PointsParams {
  FunctionRef features;
  std::string label;
};

PointsParams parse_points_params(const std::string& params) {
  size_t a = params.find('|');
  size_t b = params.find('|', a == std::string::npos ? a : a + 1);
  if (a == std::string::npos || b == std::string::npos) fail(ErrorCode::kInvalidArgument, "bad points parameters");
  return {{params.substr(0, a), params.substr(a + 1, b - a - 1)}, params.substr(b + 1)};
}

// Output schema of the feature function, checked to be numeric.
Schema feature_schema(const Schema& input, const FunctionRef& f) {
  const RowFunction& fn = FunctionRegistry::global().get(f.name);
  if (fn.granularity != Granularity::kRow) {
    fail(ErrorCode::kInvalidArgument, "feature function " + f.name + " must map rows");
  }
  Schema out = fn.bind(input, f.params);
  if (out.empty()) fail(ErrorCode::kInvalidArgument, "feature function " + f.name + " produced no columns");
  for (const auto& c : out) {
    if (!numeric(c.type) && c.type != Type::kBoolean) {
      fail(ErrorCode::kTypeMismatch, "feature column " + c.name + " is " + type_name(c.type));
    }
  }
  return out;
}

RowFunction points_function() {
  RowFunction fn;
  fn.name = kPointsFunction;
  fn.granularity = Granularity::kRow;
  fn.bind = [](const Schema& in, const std::string& params) {
    auto p = parse_points_params(params);
    Schema fs = feature_schema(in, p.features);
    std::vector<Column> cols;
    for (size_t i = 0; i < fs.size(); ++i) cols.push_back({"x" + std::to_string(i), Type::kFloat64});
    if (!p.label.empty()) {
      auto idx = in.find(p.label);
      if (!idx) fail(ErrorCode::kFieldNotFound, "no column named " + p.label);
      if (!numeric(in[*idx].type) && in[*idx].type != Type::kBoolean) {
        fail(ErrorCode::kTypeMismatch, "label column " + p.label + " is " + type_name(in[*idx].type));
      }
      cols.push_back({"y", Type::kFloat64});
    }
    return Schema(std::move(cols));
  };
  fn.row = [](const Row& row, const Schema& in, const std::string& params) {
    auto p = parse_points_params(params);
    const RowFunction& f = FunctionRegistry::global().get(p.features.name);
    Row feats = f.row(row, in, p.features.params);
    Row out;
    for (const auto& v : feats) out.emplace_back(as_double(v));
    if (!p.label.empty()) out.emplace_back(as_label(row[*in.find(p.label)]));
    return out;
  };
  return fn;
}

std::vector<LabeledPoint> labeled(const RowBatch& rows) {
  std::vector<LabeledPoint> pts;
  pts.reserve(rows.size());
  for (const auto& r : rows) {
    LabeledPoint p;
    for (size_t i = 0; i + 1 < r.size(); ++i) p.x.push_back(r[i].as_double());
    p.y = r.back().as_double();
    pts.push_back(std::move(p));
  }
  return pts;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

// Per partition: gradient components, loss, correct predictions, count.
RowFunction gradient_function() {
  RowFunction fn;
  fn.name = kGradientFunction;
  fn.granularity = Granularity::kPartition;
  fn.bind = [](const Schema& in, const std::string& params) {
    size_t d = lineage::decode_vector(params).size();
    if (in.size() != d + 1) {
      fail(ErrorCode::kDimensionMismatch, "weights have " + std::to_string(d) + " dimensions, points have " +
                                              std::to_string(in.size() - 1));
    }
    std::vector<Column> cols;
    for (size_t i = 0; i < d; ++i) cols.push_back({"g" + std::to_string(i), Type::kFloat64});
    cols.push_back({"loss", Type::kFloat64});
    cols.push_back({"correct", Type::kInt64});
    cols.push_back({"count", Type::kInt64});
    return Schema(std::move(cols));
  };
  fn.partition = [](const RowBatch& rows, const Schema&, const std::string& params) {
    auto w = lineage::decode_vector(params);
    auto pts = labeled(rows);
    auto g = lr_gradient(pts, w);
    int64_t correct = 0;
    for (const auto& p : pts) correct += ((dot(w, p.x) >= 0) ? 1.0 : -1.0) == p.y;
    Row out;
    for (double v : g) out.emplace_back(v);
    out.emplace_back(lr_loss(pts, w));
    out.emplace_back(correct);
    out.emplace_back(static_cast<int64_t>(pts.size()));
    return RowBatch{out};
  };
  return fn;
}

// params: "k;c00;c01;...": k, then centroids row-major. Emits per-cluster
// counts, coordinate sums and the partition's squared error.
RowFunction assign_function() {
  RowFunction fn;
  fn.name = kAssignFunction;
  fn.granularity = Granularity::kPartition;
  auto unpack = [](const std::string& params, size_t d) {
    auto flat = lineage::decode_vector(params);
    if (flat.empty()) fail(ErrorCode::kInvalidArgument, "missing centroids");
    auto k = static_cast<size_t>(flat[0]);
    if (k == 0 || flat.size() != 1 + k * d) {
      fail(ErrorCode::kDimensionMismatch, "centroids do not match the point dimension");
    }
    std::vector<std::vector<double>> c(k);
    for (size_t i = 0; i < k; ++i) c[i].assign(flat.begin() + 1 + i * d, flat.begin() + 1 + (i + 1) * d);
    return c;
  };
  fn.bind = [unpack](const Schema& in, const std::string& params) {
    size_t k = unpack(params, in.size()).size();
    std::vector<Column> cols;
    for (size_t i = 0; i < k; ++i) cols.push_back({"n" + std::to_string(i), Type::kInt64});
    for (size_t i = 0; i < k * in.size(); ++i) cols.push_back({"s" + std::to_string(i), Type::kFloat64});
    cols.push_back({"sse", Type::kFloat64});
    return Schema(std::move(cols));
  };
  fn.partition = [unpack](const RowBatch& rows, const Schema& in, const std::string& params) {
    size_t d = in.size();
    auto c = unpack(params, d);
    std::vector<int64_t> counts(c.size(), 0);
    std::vector<double> sums(c.size() * d, 0.0);
    double sse = 0;
    std::vector<double> x(d);
    for (const auto& r : rows) {
      for (size_t j = 0; j < d; ++j) x[j] = r[j].as_double();
      size_t best = nearest_centroid(x, c);
      ++counts[best];
      for (size_t j = 0; j < d; ++j) {
        sums[best * d + j] += x[j];
        double diff = x[j] - c[best][j];
        sse += diff * diff;
      }
    }
    Row out;
    for (auto n : counts) out.emplace_back(n);
    for (double s : sums) out.emplace_back(s);
    out.emplace_back(sse);
    return RowBatch{out};
  };
  return fn;
}

}  // namespace

void register_ml_functions() {
  static std::once_flag once;
  std::call_once(once, [] {
    auto& reg = FunctionRegistry::global();
    reg.add(points_function());
    reg.add(gradient_function());
    reg.add(assign_function());
  });
}

FunctionRef parse_function_ref(const std::string& text) {
  FunctionRef f;
  size_t open = text.find('(');
  if (open == std::string::npos) {
    f.name = text;
  } else {
    if (text.back() != ')') fail(ErrorCode::kInvalidArgument, "bad function reference '" + text + "'");
    f.name = text.substr(0, open);
    f.params = text.substr(open + 1, text.size() - open - 2);
  }
  if (f.name.empty()) fail(ErrorCode::kInvalidArgument, "empty function name");
  return f;
}

lineage::NodePtr map_rows(const lineage::NodePtr& table, const std::string& function, const std::string& params) {
  register_ml_functions();
  return lineage::make_map(table, function, params);
}

lineage::NodePtr feature_points(const lineage::NodePtr& table, const FunctionRef& features, const std::string& label) {
  register_ml_functions();
  if (features.params.find('|') != std::string::npos || label.find('|') != std::string::npos) {
    fail(ErrorCode::kInvalidArgument, "feature parameters may not contain '|'");
  }
  return lineage::make_map(table, kPointsFunction, features.name + "|" + features.params + "|" + label);
}

std::vector<double> lr_gradient(std::span<const LabeledPoint> points, std::span<const double> w) {
  std::vector<double> g(w.size(), 0.0);
  for (const auto& p : points) {
    if (p.x.size() != w.size()) {
      fail(ErrorCode::kDimensionMismatch, "point has " + std::to_string(p.x.size()) + " dimensions, weights have " +
                                              std::to_string(w.size()));
    }
    double z = -p.y * dot(w, p.x);
    double coeff = -sigmoid(z);  // 1/(1+exp(z)) - 1
    for (size_t i = 0; i < w.size(); ++i) g[i] += coeff * p.y * p.x[i];
  }
  return g;
}

double lr_loss(std::span<const LabeledPoint> points, std::span<const double> w) {
  double loss = 0;
  for (const auto& p : points) {
    if (p.x.size() != w.size()) fail(ErrorCode::kDimensionMismatch, "point dimension differs from weights");
    double z = -p.y * dot(w, p.x);
    loss += z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
  }
  return loss;
}

size_t nearest_centroid(std::span<const double> x, const std::vector<std::vector<double>>& centroids) {
  size_t best = 0;
  double best_d = 0;
  for (size_t i = 0; i < centroids.size(); ++i) {
    double d = 0;
    for (size_t j = 0; j < x.size(); ++j) {
      double diff = x[j] - centroids[i][j];
      d += diff * diff;
    }
    if (i == 0 || d < best_d) {
      best = i;
      best_d = d;
    }
  }
  return best;
}

}  // namespace ember::ml
