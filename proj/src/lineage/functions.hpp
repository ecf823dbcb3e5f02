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

#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "common/value.hpp"

namespace ember::lineage {

enum class Granularity { kRow, kPartition };

// A named transformation that Map nodes refer to. Lineage stores the name and
// a parameter string, never a closure, so any partition can be replayed.
// Implementations must be pure functions of (input, params).
struct RowFunction {
  std::string name;
  Granularity granularity = Granularity::kRow;
  // Output schema for an input schema; throws FieldNotFound or
  // InvalidArgument when the function cannot apply.
  std::function<Schema(const Schema& input, const std::string& params)> bind;
  std::function<Row(const Row& row, const Schema& input, const std::string& params)> row;
  std::function<RowBatch(const RowBatch& rows, const Schema& input, const std::string& params)>
      partition;
};

class FunctionRegistry {
 public:
  static FunctionRegistry& global();

  // Replaces any existing function with the same name.
  void add(RowFunction fn);
  // Throws NotFound.
  const RowFunction& get(const std::string& name) const;
  bool contains(const std::string& name) const;
  std::vector<std::string> names() const;

 private:
  FunctionRegistry();
  mutable std::mutex mu_;
  // Entries are never erased, so references stay valid.
  std::map<std::string, std::unique_ptr<RowFunction>> fns_;
};

// Parses "a,b,c" into trimmed names.
std::vector<std::string> split_names(const std::string& params);

// Exact text form of a double, for function parameters.
std::string format_hexfloat(double v);
double parse_hexfloat(const std::string& text);
std::string encode_vector(const std::vector<double>& v);
std::vector<double> decode_vector(const std::string& text);

}  // namespace ember::lineage
