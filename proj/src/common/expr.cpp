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

#include "common/expr.hpp"

#include <cmath>

#include "common/codec.hpp"
#include "common/error.hpp"

namespace ember {

namespace {

bool is_numeric(Type t) { return t == Type::kInt64 || t == Type::kFloat64; }

std::shared_ptr<ExprNode> node(ExprKind kind, Type type) {
  auto n = std::make_shared<ExprNode>();
  n->kind = kind;
  n->type = type;
  return n;
}

void check_comparable(const Expr& a, const Expr& b) {
  if (a->null_literal || b->null_literal) return;
  if (!comparable(a->type, b->type)) {
    fail(ErrorCode::kTypeMismatch, std::string("cannot compare ") + type_name(a->type) +
                                       " with " + type_name(b->type));
  }
}

Value logical_and(const Value& a, const Value& b) {
  bool af = !a.is_null() && !a.as_bool();
  bool bf = !b.is_null() && !b.as_bool();
  if (af || bf) return Value(false);
  if (a.is_null() || b.is_null()) return Value();
  return Value(true);
}

Value logical_or(const Value& a, const Value& b) {
  bool at = !a.is_null() && a.as_bool();
  bool bt = !b.is_null() && b.as_bool();
  if (at || bt) return Value(true);
  if (a.is_null() || b.is_null()) return Value();
  return Value(false);
}

Value logical_not(const Value& a) {
  if (a.is_null()) return a;
  return Value(!a.as_bool());
}

int64_t wrap_add(int64_t a, int64_t b) {
  return static_cast<int64_t>(static_cast<uint64_t>(a) + static_cast<uint64_t>(b));
}
int64_t wrap_sub(int64_t a, int64_t b) {
  return static_cast<int64_t>(static_cast<uint64_t>(a) - static_cast<uint64_t>(b));
}
int64_t wrap_mul(int64_t a, int64_t b) {
  return static_cast<int64_t>(static_cast<uint64_t>(a) * static_cast<uint64_t>(b));
}

Value arith(ArithOp op, const Value& a, const Value& b) {
  if (a.is_null() || b.is_null()) return Value();
  if (a.type() == Type::kDate && b.type() == Type::kInt64) {
    int64_t d = a.as_date().days;
    if (op == ArithOp::kAdd) return Value(Date{static_cast<int32_t>(d + b.as_int())});
    if (op == ArithOp::kSub) return Value(Date{static_cast<int32_t>(d - b.as_int())});
  }
  if (a.type() == Type::kInt64 && b.type() == Type::kInt64 && op != ArithOp::kDiv) {
    int64_t x = a.as_int(), y = b.as_int();
    switch (op) {
      case ArithOp::kAdd: return Value(wrap_add(x, y));
      case ArithOp::kSub: return Value(wrap_sub(x, y));
      case ArithOp::kMul: return Value(wrap_mul(x, y));
      case ArithOp::kMod:
        if (y == 0) return Value();
        if (y == -1) return Value(int64_t{0});
        return Value(x % y);
      default: break;
    }
  }
  double x = a.numeric(), y = b.numeric();
  switch (op) {
    case ArithOp::kAdd: return Value(x + y);
    case ArithOp::kSub: return Value(x - y);
    case ArithOp::kMul: return Value(x * y);
    case ArithOp::kDiv: return y == 0 ? Value() : Value(x / y);
    case ArithOp::kMod: return y == 0 ? Value() : Value(std::fmod(x, y));
  }
  return Value();
}

Type arith_type(ArithOp op, const Expr& a, const Expr& b) {
  Type ta = a->type, tb = b->type;
  if (a->null_literal) ta = tb;
  if (b->null_literal) tb = ta;
  if (ta == Type::kDate && tb == Type::kInt64 && (op == ArithOp::kAdd || op == ArithOp::kSub)) {
    return Type::kDate;
  }
  if (!is_numeric(ta) || !is_numeric(tb)) {
    fail(ErrorCode::kTypeMismatch, std::string("arithmetic on ") + type_name(ta) + " and " +
                                       type_name(tb));
  }
  if (op == ArithOp::kDiv) return Type::kFloat64;
  return ta == Type::kInt64 && tb == Type::kInt64 ? Type::kInt64 : Type::kFloat64;
}

ScalarFunction fixed(std::string name, size_t min_args, size_t max_args, Type result,
                     std::function<Value(std::span<const Value>)> eval,
                     std::vector<std::optional<Type>> params = {}) {
  return ScalarFunction{std::move(name), min_args, max_args,
                        [result](std::span<const Type>) { return result; }, std::move(eval),
                        std::move(params)};
}

bool any_null(std::span<const Value> args) {
  for (const auto& a : args) {
    if (a.is_null()) return true;
  }
  return false;
}

}  // namespace

const char* compare_op_text(CompareOp op) {
  switch (op) {
    case CompareOp::kEq: return "=";
    case CompareOp::kNe: return "<>";
    case CompareOp::kLt: return "<";
    case CompareOp::kLe: return "<=";
    case CompareOp::kGt: return ">";
    case CompareOp::kGe: return ">=";
  }
  return "?";
}

CompareOp flip(CompareOp op) {
  switch (op) {
    case CompareOp::kLt: return CompareOp::kGt;
    case CompareOp::kLe: return CompareOp::kGe;
    case CompareOp::kGt: return CompareOp::kLt;
    case CompareOp::kGe: return CompareOp::kLe;
    default: return op;
  }
}

bool comparable(Type a, Type b) {
  return a == b || (is_numeric(a) && is_numeric(b));
}

Value compare_sql(CompareOp op, const Value& a, const Value& b) {
  if (a.is_null() || b.is_null()) return Value();
  int c = compare_values(a, b);
  switch (op) {
    case CompareOp::kEq: return Value(c == 0);
    case CompareOp::kNe: return Value(c != 0);
    case CompareOp::kLt: return Value(c < 0);
    case CompareOp::kLe: return Value(c <= 0);
    case CompareOp::kGt: return Value(c > 0);
    case CompareOp::kGe: return Value(c >= 0);
  }
  return Value();
}

Expr make_column(size_t index, Type type, std::string name) {
  auto n = node(ExprKind::kColumn, type);
  n->column = index;
  n->name = std::move(name);
  return n;
}

Expr make_literal(Value v) {
  if (v.is_null()) return make_null_literal();
  auto n = node(ExprKind::kLiteral, v.type());
  n->literal = std::move(v);
  return n;
}

Expr make_null_literal() {
  auto n = node(ExprKind::kLiteral, Type::kBoolean);
  n->null_literal = true;
  return n;
}

Expr make_compare(CompareOp op, Expr lhs, Expr rhs) {
  check_comparable(lhs, rhs);
  auto n = node(ExprKind::kCompare, Type::kBoolean);
  n->compare = op;
  n->children = {std::move(lhs), std::move(rhs)};
  return n;
}

static void require_boolean(const Expr& e) {
  if (!e->null_literal && e->type != Type::kBoolean) {
    fail(ErrorCode::kTypeMismatch, "expected a boolean expression, got " +
                                       std::string(type_name(e->type)));
  }
}

Expr make_and(std::vector<Expr> terms) {
  if (terms.size() == 1) return terms[0];
  for (const auto& t : terms) require_boolean(t);
  auto n = node(ExprKind::kAnd, Type::kBoolean);
  n->children = std::move(terms);
  return n;
}

Expr make_or(std::vector<Expr> terms) {
  if (terms.size() == 1) return terms[0];
  for (const auto& t : terms) require_boolean(t);
  auto n = node(ExprKind::kOr, Type::kBoolean);
  n->children = std::move(terms);
  return n;
}

Expr make_not(Expr e) {
  require_boolean(e);
  auto n = node(ExprKind::kNot, Type::kBoolean);
  n->children = {std::move(e)};
  return n;
}

Expr make_arith(ArithOp op, Expr lhs, Expr rhs) {
  auto n = node(ExprKind::kArith, arith_type(op, lhs, rhs));
  n->arith = op;
  n->children = {std::move(lhs), std::move(rhs)};
  return n;
}

Expr make_negate(Expr e) {
  if (!e->null_literal && !is_numeric(e->type)) {
    fail(ErrorCode::kTypeMismatch, "cannot negate a non-numeric value");
  }
  auto n = node(ExprKind::kNegate, e->type);
  n->children = {std::move(e)};
  return n;
}

Expr make_between(Expr e, Expr lo, Expr hi, bool negated) {
  check_comparable(e, lo);
  check_comparable(e, hi);
  auto n = node(ExprKind::kBetween, Type::kBoolean);
  n->negated = negated;
  n->children = {std::move(e), std::move(lo), std::move(hi)};
  return n;
}

Expr make_in(Expr e, std::vector<Expr> list, bool negated) {
  auto n = node(ExprKind::kIn, Type::kBoolean);
  n->negated = negated;
  for (const auto& item : list) check_comparable(e, item);
  n->children.push_back(std::move(e));
  for (auto& item : list) n->children.push_back(std::move(item));
  return n;
}

Expr make_is_null(Expr e, bool negated) {
  auto n = node(ExprKind::kIsNull, Type::kBoolean);
  n->negated = negated;
  n->children = {std::move(e)};
  return n;
}

Expr make_call(const std::string& name, std::vector<Expr> args) {
  const ScalarFunction* fn = ScalarRegistry::global().find(to_lower(name));
  if (!fn) fail(ErrorCode::kPlan, "unknown function '" + name + "'");
  if (args.size() < fn->min_args || args.size() > fn->max_args) {
    fail(ErrorCode::kPlan, "wrong number of arguments to '" + name + "'");
  }
  std::vector<Type> types;
  for (size_t i = 0; i < args.size(); ++i) {
    const auto& a = args[i];
    if (i < fn->param_types.size() && fn->param_types[i] && !a->null_literal &&
        a->type != *fn->param_types[i]) {
      fail(ErrorCode::kTypeMismatch, "argument " + std::to_string(i + 1) + " of '" + name +
                                         "' must be " + type_name(*fn->param_types[i]));
    }
    types.push_back(a->type);
  }
  auto n = node(ExprKind::kCall, fn->result_type(types));
  n->name = fn->name;
  n->function = fn;
  n->children = std::move(args);
  return n;
}

Value evaluate(const ExprNode& e, const Row& row) {
  switch (e.kind) {
    case ExprKind::kColumn: return row[e.column];
    case ExprKind::kLiteral: return e.null_literal ? Value() : e.literal;
    case ExprKind::kCompare:
      return compare_sql(e.compare, evaluate(*e.children[0], row), evaluate(*e.children[1], row));
    case ExprKind::kAnd: {
      Value acc(true);
      for (const auto& c : e.children) {
        acc = logical_and(acc, evaluate(*c, row));
        if (!acc.is_null() && !acc.as_bool()) break;
      }
      return acc;
    }
    case ExprKind::kOr: {
      Value acc(false);
      for (const auto& c : e.children) {
        acc = logical_or(acc, evaluate(*c, row));
        if (!acc.is_null() && acc.as_bool()) break;
      }
      return acc;
    }
    case ExprKind::kNot: return logical_not(evaluate(*e.children[0], row));
    case ExprKind::kArith:
      return arith(e.arith, evaluate(*e.children[0], row), evaluate(*e.children[1], row));
    case ExprKind::kNegate: {
      Value v = evaluate(*e.children[0], row);
      if (v.is_null()) return v;
      if (v.type() == Type::kInt64) return Value(wrap_sub(0, v.as_int()));
      return Value(-v.as_double());
    }
    case ExprKind::kBetween: {
      Value v = evaluate(*e.children[0], row);
      Value r = logical_and(compare_sql(CompareOp::kGe, v, evaluate(*e.children[1], row)),
                            compare_sql(CompareOp::kLe, v, evaluate(*e.children[2], row)));
      return e.negated ? logical_not(r) : r;
    }
    case ExprKind::kIn: {
      Value v = evaluate(*e.children[0], row);
      Value r(false);
      for (size_t i = 1; i < e.children.size(); ++i) {
        r = logical_or(r, compare_sql(CompareOp::kEq, v, evaluate(*e.children[i], row)));
        if (!r.is_null() && r.as_bool()) break;
      }
      return e.negated ? logical_not(r) : r;
    }
    case ExprKind::kIsNull: {
      bool is_null = evaluate(*e.children[0], row).is_null();
      return Value(e.negated ? !is_null : is_null);
    }
    case ExprKind::kCall: {
      std::vector<Value> args;
      args.reserve(e.children.size());
      for (const auto& c : e.children) args.push_back(evaluate(*c, row));
      return e.function->eval(args);
    }
  }
  return Value();
}

bool evaluate_predicate(const Expr& e, const Row& row) {
  Value v = evaluate(*e, row);
  return !v.is_null() && v.as_bool();
}

void collect_columns(const Expr& e, std::set<size_t>& out) {
  if (e->kind == ExprKind::kColumn) out.insert(e->column);
  for (const auto& c : e->children) collect_columns(c, out);
}

bool references_columns(const Expr& e) {
  if (e->kind == ExprKind::kColumn) return true;
  for (const auto& c : e->children) {
    if (references_columns(c)) return true;
  }
  return false;
}

Expr substitute_columns(const Expr& e, const std::function<Expr(const ExprNode&)>& f) {
  if (e->kind == ExprKind::kColumn) return f(*e);
  if (e->children.empty()) return e;
  auto copy = std::make_shared<ExprNode>(*e);
  for (auto& c : copy->children) c = substitute_columns(c, f);
  return copy;
}

Expr shift_columns(const Expr& e, std::ptrdiff_t delta) {
  return substitute_columns(e, [delta](const ExprNode& col) {
    return make_column(static_cast<size_t>(static_cast<std::ptrdiff_t>(col.column) + delta),
                       col.type, col.name);
  });
}

Expr fold_constants(const Expr& e) {
  if (e->kind == ExprKind::kLiteral || e->kind == ExprKind::kColumn) return e;
  auto copy = std::make_shared<ExprNode>(*e);
  bool all_literal = true;
  for (auto& c : copy->children) {
    c = fold_constants(c);
    if (c->kind != ExprKind::kLiteral) all_literal = false;
  }
  if (!all_literal) return copy;
  Value v = evaluate(*copy, Row{});
  if (v.is_null()) {
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprKind::kLiteral;
    n->type = copy->type;
    n->null_literal = true;
    return n;
  }
  return make_literal(std::move(v));
}

std::vector<Expr> split_conjuncts(const Expr& e) {
  std::vector<Expr> out;
  if (!e) return out;
  if (e->kind == ExprKind::kAnd) {
    for (const auto& c : e->children) {
      auto sub = split_conjuncts(c);
      out.insert(out.end(), sub.begin(), sub.end());
    }
  } else {
    out.push_back(e);
  }
  return out;
}

Expr conjunction(const std::vector<Expr>& terms) {
  if (terms.empty()) return nullptr;
  return make_and(terms);
}

bool expr_equal(const Expr& a, const Expr& b) {
  if (a->kind != b->kind || a->null_literal != b->null_literal || a->negated != b->negated ||
      a->children.size() != b->children.size()) {
    return false;
  }
  switch (a->kind) {
    case ExprKind::kColumn:
      if (a->column != b->column) return false;
      break;
    case ExprKind::kLiteral:
      if (!a->null_literal && !(a->literal == b->literal && a->type == b->type)) return false;
      break;
    case ExprKind::kCompare:
      if (a->compare != b->compare) return false;
      break;
    case ExprKind::kArith:
      if (a->arith != b->arith) return false;
      break;
    case ExprKind::kCall:
      if (a->function != b->function) return false;
      break;
    default: break;
  }
  for (size_t i = 0; i < a->children.size(); ++i) {
    if (!expr_equal(a->children[i], b->children[i])) return false;
  }
  return true;
}

std::string expr_to_string(const Expr& e) {
  auto join = [&](const char* sep, size_t from = 0) {
    std::string s;
    for (size_t i = from; i < e->children.size(); ++i) {
      if (i > from) s += sep;
      s += expr_to_string(e->children[i]);
    }
    return s;
  };
  switch (e->kind) {
    case ExprKind::kColumn:
      return e->name.empty() ? "#" + std::to_string(e->column) : e->name;
    case ExprKind::kLiteral: return e->null_literal ? "NULL" : to_literal(e->literal);
    case ExprKind::kCompare:
      return "(" + expr_to_string(e->children[0]) + " " + compare_op_text(e->compare) + " " +
             expr_to_string(e->children[1]) + ")";
    case ExprKind::kAnd: return "(" + join(" AND ") + ")";
    case ExprKind::kOr: return "(" + join(" OR ") + ")";
    case ExprKind::kNot: return "(NOT " + expr_to_string(e->children[0]) + ")";
    case ExprKind::kArith: {
      static const char* ops[] = {"+", "-", "*", "/", "%"};
      return "(" + expr_to_string(e->children[0]) + " " + ops[static_cast<int>(e->arith)] + " " +
             expr_to_string(e->children[1]) + ")";
    }
    case ExprKind::kNegate: return "(-" + expr_to_string(e->children[0]) + ")";
    case ExprKind::kBetween:
      return "(" + expr_to_string(e->children[0]) + (e->negated ? " NOT" : "") + " BETWEEN " +
             expr_to_string(e->children[1]) + " AND " + expr_to_string(e->children[2]) + ")";
    case ExprKind::kIn:
      return "(" + expr_to_string(e->children[0]) + (e->negated ? " NOT" : "") + " IN (" +
             join(", ", 1) + "))";
    case ExprKind::kIsNull:
      return "(" + expr_to_string(e->children[0]) + (e->negated ? " IS NOT NULL)" : " IS NULL)");
    case ExprKind::kCall: return to_upper(e->name) + "(" + join(", ") + ")";
  }
  return "?";
}

ScalarRegistry& ScalarRegistry::global() {
  static ScalarRegistry registry;
  return registry;
}

void ScalarRegistry::add(ScalarFunction fn) {
  std::lock_guard lock(mu_);
  std::string key = to_lower(fn.name);
  fn.name = key;
  fns_.insert_or_assign(key, std::move(fn));
}

const ScalarFunction* ScalarRegistry::find(const std::string& name) const {
  std::lock_guard lock(mu_);
  auto it = fns_.find(to_lower(name));
  return it == fns_.end() ? nullptr : &it->second;
}

ScalarRegistry::ScalarRegistry() {
  auto add_builtin = [this](ScalarFunction fn) { fns_.emplace(fn.name, std::move(fn)); };

  // Hive-style SUBSTR: 1-based start, negative start counts from the end.
  add_builtin(fixed("substr", 2, 3, Type::kUtf8, [](std::span<const Value> a) -> Value {
    if (any_null(a)) return Value();
    const std::string& s = a[0].as_string();
    auto n = static_cast<int64_t>(s.size());
    int64_t start = a[1].as_int();
    int64_t begin = start > 0 ? start - 1 : (start < 0 ? n + start : 0);
    if (begin < 0 || begin >= n) return Value(std::string());
    int64_t len = a.size() > 2 ? a[2].as_int() : n - begin;
    if (len <= 0) return Value(std::string());
    return Value(s.substr(static_cast<size_t>(begin), static_cast<size_t>(len)));
  }, {Type::kUtf8, Type::kInt64, Type::kInt64}));
  add_builtin(fixed("length", 1, 1, Type::kInt64, [](std::span<const Value> a) -> Value {
    if (any_null(a)) return Value();
    return Value(static_cast<int64_t>(a[0].as_string().size()));
  }, {Type::kUtf8}));
  add_builtin(fixed("upper", 1, 1, Type::kUtf8, [](std::span<const Value> a) -> Value {
    if (any_null(a)) return Value();
    return Value(to_upper(a[0].as_string()));
  }, {Type::kUtf8}));
  add_builtin(fixed("lower", 1, 1, Type::kUtf8, [](std::span<const Value> a) -> Value {
    if (any_null(a)) return Value();
    return Value(to_lower(a[0].as_string()));
  }, {Type::kUtf8}));
  add_builtin(ScalarFunction{
      "abs", 1, 1, [](std::span<const Type> t) { return t[0]; },
      [](std::span<const Value> a) -> Value {
        if (any_null(a)) return Value();
        if (a[0].type() == Type::kInt64) {
          int64_t v = a[0].as_int();
          return Value(v < 0 ? wrap_sub(0, v) : v);
        }
        return Value(std::fabs(a[0].numeric()));
      },
      {}});
  add_builtin(fixed("date", 1, 1, Type::kDate, [](std::span<const Value> a) -> Value {
    if (any_null(a)) return Value();
    if (a[0].type() == Type::kDate) return a[0];
    auto d = parse_date(a[0].as_string());
    return d ? Value(*d) : Value();
  }));
  add_builtin(fixed("year", 1, 1, Type::kInt64, [](std::span<const Value> a) -> Value {
    if (any_null(a)) return Value();
    return Value(static_cast<int64_t>(std::stoi(format_date(a[0].as_date()).substr(0, 4))));
  }, {Type::kDate}));
  // A deterministic stand-in for opaque user predicates: buckets any value by
  // its canonical hash.
  add_builtin(fixed("hash_bucket", 2, 2, Type::kInt64, [](std::span<const Value> a) -> Value {
    if (any_null(a) || a[1].as_int() <= 0) return Value();
    return Value(static_cast<int64_t>(hash_value(a[0]) % static_cast<uint64_t>(a[1].as_int())));
  }, {std::nullopt, Type::kInt64}));
  add_builtin(fixed("concat", 1, 8, Type::kUtf8, [](std::span<const Value> a) -> Value {
    if (any_null(a)) return Value();
    std::string out;
    for (const auto& v : a) out += to_string(v);
    return Value(std::move(out));
  }));
}

}  // namespace ember
