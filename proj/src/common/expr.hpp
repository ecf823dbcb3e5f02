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
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "common/value.hpp"

namespace ember {

enum class ExprKind {
  kColumn,
  kLiteral,
  kCompare,
  kAnd,
  kOr,
  kNot,
  kArith,
  kNegate,
  kBetween,
  kIn,
  kIsNull,
  kCall,
};

enum class CompareOp { kEq, kNe, kLt, kLe, kGt, kGe };
enum class ArithOp { kAdd, kSub, kMul, kDiv, kMod };

const char* compare_op_text(CompareOp op);
CompareOp flip(CompareOp op);

struct ExprNode;
struct ScalarFunction;
using Expr = std::shared_ptr<const ExprNode>;

// A bound expression: column references are positional.
struct ExprNode {
  ExprKind kind;
  // Result type. `null_literal` marks an untyped NULL, which is compatible with
  // every type.
  Type type = Type::kBoolean;
  bool null_literal = false;

  size_t column = 0;
  std::string name;  // column display name or function name
  Value literal;
  CompareOp compare = CompareOp::kEq;
  ArithOp arith = ArithOp::kAdd;
  bool negated = false;  // NOT IN / IS NOT NULL / NOT BETWEEN
  const ScalarFunction* function = nullptr;
  std::vector<Expr> children;
};

Expr make_column(size_t index, Type type, std::string name = {});
Expr make_literal(Value v);
Expr make_null_literal();
Expr make_compare(CompareOp op, Expr lhs, Expr rhs);
Expr make_and(std::vector<Expr> terms);
Expr make_or(std::vector<Expr> terms);
Expr make_not(Expr e);
Expr make_arith(ArithOp op, Expr lhs, Expr rhs);
Expr make_negate(Expr e);
Expr make_between(Expr e, Expr lo, Expr hi, bool negated);
Expr make_in(Expr e, std::vector<Expr> list, bool negated);
Expr make_is_null(Expr e, bool negated);
// Resolves `name` in the scalar function registry; throws Plan on unknown
// names or bad arity and TypeMismatch on argument types.
Expr make_call(const std::string& name, std::vector<Expr> args);

Value evaluate(const ExprNode& e, const Row& row);
inline Value evaluate(const Expr& e, const Row& row) { return evaluate(*e, row); }
// SQL WHERE semantics: NULL and FALSE both reject.
bool evaluate_predicate(const Expr& e, const Row& row);

// Three-valued comparison; NULL when either side is NULL.
Value compare_sql(CompareOp op, const Value& a, const Value& b);
bool comparable(Type a, Type b);

void collect_columns(const Expr& e, std::set<size_t>& out);
bool references_columns(const Expr& e);
// Rebuilds `e` with each column reference replaced by `f(index)`.
Expr substitute_columns(const Expr& e, const std::function<Expr(const ExprNode&)>& f);
Expr shift_columns(const Expr& e, std::ptrdiff_t delta);
Expr fold_constants(const Expr& e);

std::vector<Expr> split_conjuncts(const Expr& e);
// Empty input yields nullptr.
Expr conjunction(const std::vector<Expr>& terms);

bool expr_equal(const Expr& a, const Expr& b);
std::string expr_to_string(const Expr& e);

// Pure scalar functions callable from SQL. Lineage replays them by name, so
// every entry must be deterministic and free of ambient state.
struct ScalarFunction {
  std::string name;
  size_t min_args;
  size_t max_args;
  std::function<Type(std::span<const Type>)> result_type;
  std::function<Value(std::span<const Value>)> eval;
  // Expected argument types by position; nullopt accepts any type.
  std::vector<std::optional<Type>> param_types = {};
};

class ScalarRegistry {
 public:
  static ScalarRegistry& global();
  void add(ScalarFunction fn);
  const ScalarFunction* find(const std::string& name) const;

 private:
  ScalarRegistry();
  mutable std::mutex mu_;
  std::map<std::string, ScalarFunction> fns_;
};

}  // namespace ember
