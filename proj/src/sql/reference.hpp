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

#include <map>
#include <string>
#include <vector>

#include "common/value.hpp"
#include "sql/ast.hpp"

namespace ember::sql {

struct RefTable {
  Schema schema;
  RowBatch rows;
};

// Keyed by lower-cased table name.
using RefTables = std::map<std::string, RefTable>;

struct RefResult {
  std::vector<std::string> names;
  RowBatch rows;
};

// Test oracle: evaluates a SELECT one row at a time straight from the syntax
// tree. It shares no planning or execution code with the engine; joins are
// nested loops and grouping is a sorted map. Throws on anything outside the
// supported subset.
RefResult reference_eval(const SelectStmt& select, const RefTables& tables);

}  // namespace ember::sql
