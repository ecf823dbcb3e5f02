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

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "common/value.hpp"

namespace ember::sql {

enum class AstKind {
  kColumn,   // [qualifier.]name
  kLiteral,
  kUnary,    // op: "NOT" or "-"
  kBinary,   // op: AND OR = <> < <= > >= + - * / %
  kBetween,  // children: value, lo, hi
  kIn,       // children: value, then the list
  kIsNull,
  kCall,     // name(args); star for COUNT(*)
};

struct AstExpr;
using AstExprPtr = std::shared_ptr<const AstExpr>;

struct AstExpr {
  AstKind kind = AstKind::kLiteral;
  size_t offset = 0;
  std::string qualifier;
  std::string name;  // column or function name, lower-cased for functions
  std::string op;
  Value literal;
  bool negated = false;
  bool distinct = false;
  bool star = false;
  std::vector<AstExprPtr> children;
};

struct SelectItem {
  AstExprPtr expr;             // null for * or t.*
  std::string star_qualifier;  // set for t.*
  std::string alias;
  size_t offset = 0;
};

struct TableRef {
  std::string name;
  std::string alias;
  size_t offset = 0;
  const std::string& scope_name() const { return alias.empty() ? name : alias; }
};

struct OrderItem {
  AstExprPtr expr;
  bool ascending = true;
};

struct SelectStmt {
  std::vector<SelectItem> items;
  std::vector<TableRef> from;  // one table, or two for a join
  AstExprPtr join_on;          // JOIN ... ON; comma joins put the condition in WHERE
  AstExprPtr where;
  std::vector<AstExprPtr> group_by;
  std::vector<OrderItem> order_by;
  std::optional<size_t> limit;
};

struct CreateStmt {
  std::string name;
  std::vector<std::pair<std::string, std::string>> properties;
  SelectStmt query;
  std::string query_text;  // source text of the SELECT
  std::string distribute_by;
  size_t distribute_offset = 0;
};

struct DropStmt {
  std::string name;
  bool if_exists = false;
};

struct Statement {
  enum class Kind { kSelect, kCreate, kDrop } kind = Kind::kSelect;
  bool explain = false;
  SelectStmt select;
  CreateStmt create;
  DropStmt drop;
  std::string text;
};

std::string ast_to_string(const AstExprPtr& e);

}  // namespace ember::sql
