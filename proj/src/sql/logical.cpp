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

#include "sql/logical.hpp"

#include <functional>

#include "common/error.hpp"

namespace ember::sql {

using lineage::AggFunc;
using lineage::AggSpec;

namespace {

std::shared_ptr<LogicalNode> node(LogicalKind kind, std::vector<LogicalPtr> children) {
  auto n = std::make_shared<LogicalNode>();
  n->kind = kind;
  n->children = std::move(children);
  return n;
}

std::shared_ptr<LogicalNode> copy_with(const LogicalPtr& n, std::vector<LogicalPtr> children) {
  auto c = std::make_shared<LogicalNode>(*n);
  c->children = std::move(children);
  return c;
}

void require_boolean(const Expr& e, const char* where) {
  if (!e->null_literal && e->type != Type::kBoolean) {
    fail(ErrorCode::kTypeMismatch, std::string(where) + " must be BOOLEAN, got " + type_name(e->type));
  }
}

}  // namespace

LogicalPtr logical_scan(TableEntryPtr table, std::string alias) {
  auto n = node(LogicalKind::kScan, {});
  n->schema = table->schema;
  n->table = std::move(table);
  n->alias = std::move(alias);
  return n;
}

LogicalPtr logical_filter(LogicalPtr child, Expr predicate) {
  require_boolean(predicate, "WHERE condition");
  auto n = node(LogicalKind::kFilter, {child});
  n->schema = child->schema;
  n->predicate = std::move(predicate);
  return n;
}

LogicalPtr logical_project(LogicalPtr child, std::vector<Expr> exprs, std::vector<std::string> names) {
  auto n = node(LogicalKind::kProject, {std::move(child)});
  std::vector<Column> cols;
  for (size_t i = 0; i < exprs.size(); ++i) {
    // An untyped NULL projects as a nullable Int64.
    cols.push_back({names.at(i), exprs[i]->null_literal ? Type::kInt64 : exprs[i]->type});
  }
  n->schema = Schema(std::move(cols));
  n->exprs = std::move(exprs);
  return n;
}

LogicalPtr logical_aggregate(LogicalPtr child, std::vector<Expr> keys, std::vector<std::string> key_names,
                             std::vector<AggSpec> aggs, std::vector<std::string> agg_names) {
  auto n = node(LogicalKind::kAggregate, {std::move(child)});
  std::vector<Column> cols;
  for (size_t i = 0; i < keys.size(); ++i) {
    cols.push_back({key_names.at(i), keys[i]->null_literal ? Type::kInt64 : keys[i]->type});
  }
  for (size_t i = 0; i < aggs.size(); ++i) cols.push_back({agg_names.at(i), aggs[i].result_type});
  n->schema = Schema(std::move(cols));
  n->exprs = std::move(keys);
  n->aggs = std::move(aggs);
  return n;
}

LogicalPtr logical_join(LogicalPtr left, LogicalPtr right, std::vector<size_t> left_keys,
                        std::vector<size_t> right_keys) {
  auto n = node(LogicalKind::kJoin, {left, right});
  std::vector<Column> cols = left->schema.columns();
  for (const auto& c : right->schema) cols.push_back(c);
  n->schema = Schema(std::move(cols));
  n->left_keys = std::move(left_keys);
  n->right_keys = std::move(right_keys);
  return n;
}

LogicalPtr logical_sort(LogicalPtr child, std::vector<lineage::SortKey> keys, bool per_partition) {
  auto n = node(LogicalKind::kSort, {child});
  n->schema = child->schema;
  n->sort_keys = std::move(keys);
  n->per_partition = per_partition;
  return n;
}

LogicalPtr logical_limit(LogicalPtr child, size_t limit, bool per_partition) {
  auto n = node(LogicalKind::kLimit, {child});
  n->schema = child->schema;
  n->limit = limit;
  n->per_partition = per_partition;
  return n;
}

// ---------------------------------------------------------------------------
// Binding

namespace {

struct ScopeColumn {
  std::string qualifier;
  std::string name;
  Type type;
};

// Expression factories report type errors without a position; attach the
// offset of the expression being bound.
template <typename F>
auto at(size_t offset, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    if (e.offset()) throw;
    throw Error(e.code(), e.what() + std::string(" at offset ") + std::to_string(offset), offset);
  }
}

[[noreturn]] void fail_at(ErrorCode code, const std::string& msg, size_t offset) {
  fail(code, msg + " at offset " + std::to_string(offset), offset);
}

bool is_aggregate_name(const std::string& n) {
  return n == "count" || n == "sum" || n == "avg" || n == "min" || n == "max";
}

bool contains_aggregate(const AstExpr& e) {
  if (e.kind == AstKind::kCall && is_aggregate_name(e.name)) return true;
  for (const auto& c : e.children) {
    if (contains_aggregate(*c)) return true;
  }
  return false;
}

void split_ast_conjuncts(const AstExprPtr& e, std::vector<AstExprPtr>& out) {
  if (!e) return;
  if (e->kind == AstKind::kBinary && e->op == "AND") {
    split_ast_conjuncts(e->children[0], out);
    split_ast_conjuncts(e->children[1], out);
    return;
  }
  out.push_back(e);
}

std::optional<CompareOp> compare_op(const std::string& op) {
  if (op == "=") return CompareOp::kEq;
  if (op == "<>") return CompareOp::kNe;
  if (op == "<") return CompareOp::kLt;
  if (op == "<=") return CompareOp::kLe;
  if (op == ">") return CompareOp::kGt;
  if (op == ">=") return CompareOp::kGe;
  return std::nullopt;
}

std::optional<ArithOp> arith_op(const std::string& op) {
  if (op == "+") return ArithOp::kAdd;
  if (op == "-") return ArithOp::kSub;
  if (op == "*") return ArithOp::kMul;
  if (op == "/") return ArithOp::kDiv;
  if (op == "%") return ArithOp::kMod;
  return std::nullopt;
}

class Binder {
 public:
  using Intercept = std::function<std::optional<Expr>(const AstExpr&)>;

  explicit Binder(std::vector<ScopeColumn> scope) : scope_(std::move(scope)) {}

  const std::vector<ScopeColumn>& scope() const { return scope_; }

  size_t resolve(const AstExpr& col) const {
    std::optional<size_t> found;
    for (size_t i = 0; i < scope_.size(); ++i) {
      if (!iequals(scope_[i].name, col.name)) continue;
      if (!col.qualifier.empty() && !iequals(scope_[i].qualifier, col.qualifier)) continue;
      if (found) fail_at(ErrorCode::kPlan, "ambiguous column '" + col.name + "'", col.offset);
      found = i;
    }
    if (!found) {
      std::string full = col.qualifier.empty() ? col.name : col.qualifier + "." + col.name;
      fail_at(ErrorCode::kFieldNotFound, "unknown column '" + full + "'", col.offset);
    }
    return *found;
  }

  Expr bind(const AstExprPtr& e, const Intercept& intercept = {}) const {
    if (intercept) {
      if (auto r = intercept(*e)) return *r;
    }
    auto sub = [&](size_t i) { return bind(e->children.at(i), intercept); };
    switch (e->kind) {
      case AstKind::kColumn: {
        size_t i = resolve(*e);
        return make_column(i, scope_[i].type, scope_[i].name);
      }
      case AstKind::kLiteral:
        return e->literal.is_null() ? make_null_literal() : make_literal(e->literal);
      case AstKind::kUnary: {
        Expr c = sub(0);
        return at(e->offset, [&] { return e->op == "NOT" ? make_not(c) : make_negate(c); });
      }
      case AstKind::kBinary: {
        Expr l = sub(0), r = sub(1);
        return at(e->offset, [&] {
          if (e->op == "AND") return make_and({l, r});
          if (e->op == "OR") return make_or({l, r});
          if (auto c = compare_op(e->op)) return make_compare(*c, l, r);
          return make_arith(*arith_op(e->op), l, r);
        });
      }
      case AstKind::kBetween: {
        Expr v = sub(0), lo = sub(1), hi = sub(2);
        return at(e->offset, [&] { return make_between(v, lo, hi, e->negated); });
      }
      case AstKind::kIn: {
        Expr v = sub(0);
        std::vector<Expr> list;
        for (size_t i = 1; i < e->children.size(); ++i) list.push_back(sub(i));
        return at(e->offset, [&] { return make_in(v, list, e->negated); });
      }
      case AstKind::kIsNull: {
        Expr v = sub(0);
        return at(e->offset, [&] { return make_is_null(v, e->negated); });
      }
      case AstKind::kCall: {
        if (is_aggregate_name(e->name)) {
          fail_at(ErrorCode::kPlan, "aggregate " + to_upper(e->name) + " is not allowed here", e->offset);
        }
        if (e->star || e->distinct) {
          fail_at(ErrorCode::kPlan, "only aggregates accept * or DISTINCT", e->offset);
        }
        std::vector<Expr> args;
        for (size_t i = 0; i < e->children.size(); ++i) args.push_back(sub(i));
        return at(e->offset, [&] { return make_call(e->name, args); });
      }
    }
    fail(ErrorCode::kInternal, "unhandled expression");
  }

 private:
  std::vector<ScopeColumn> scope_;
};

bool is_numeric(Type t) { return t == Type::kInt64 || t == Type::kFloat64; }

AggSpec make_agg_spec(const AstExpr& e, const Binder& binder) {
  AggSpec spec;
  spec.distinct = e.distinct;
  if (e.star) {
    if (e.name != "count" || e.distinct) fail_at(ErrorCode::kPlan, "* is only valid in COUNT(*)", e.offset);
    spec.func = AggFunc::kCountStar;
    spec.result_type = Type::kInt64;
    return spec;
  }
  if (e.children.size() != 1) {
    fail_at(ErrorCode::kPlan, to_upper(e.name) + " takes exactly one argument", e.offset);
  }
  spec.arg = binder.bind(e.children[0]);
  Type t = spec.arg->type;
  bool untyped = spec.arg->null_literal;
  if (e.name == "count") {
    spec.func = AggFunc::kCount;
    spec.result_type = Type::kInt64;
    return spec;
  }
  if (untyped) fail_at(ErrorCode::kTypeMismatch, "cannot aggregate an untyped NULL", e.offset);
  if (e.name == "sum" || e.name == "avg") {
    if (!is_numeric(t)) {
      fail_at(ErrorCode::kTypeMismatch, to_upper(e.name) + " needs a numeric argument, got " + type_name(t),
              e.offset);
    }
    spec.func = e.name == "sum" ? AggFunc::kSum : AggFunc::kAvg;
    spec.result_type = e.name == "sum" ? t : Type::kFloat64;
    return spec;
  }
  spec.func = e.name == "min" ? AggFunc::kMin : AggFunc::kMax;
  spec.result_type = t;
  return spec;
}

bool same_agg(const AggSpec& a, const AggSpec& b) {
  if (a.func != b.func || a.distinct != b.distinct) return false;
  if (!a.arg || !b.arg) return !a.arg && !b.arg;
  return expr_equal(a.arg, b.arg);
}

}  // namespace

LogicalPtr bind_select(const SelectStmt& select, const Catalog& catalog) {
  std::vector<LogicalPtr> scans;
  std::vector<ScopeColumn> scope;
  for (const auto& t : select.from) {
    auto entry = catalog.find(t.name);
    if (!entry) fail_at(ErrorCode::kNotFound, "unknown table '" + t.name + "'", t.offset);
    for (const auto& s : scans) {
      if (iequals(s->alias, t.scope_name())) {
        fail_at(ErrorCode::kPlan, "duplicate table alias '" + t.scope_name() + "'", t.offset);
      }
    }
    scans.push_back(logical_scan(entry, t.scope_name()));
    for (const auto& c : entry->schema) scope.push_back({t.scope_name(), c.name, c.type});
  }
  Binder binder(scope);

  LogicalPtr plan = scans[0];
  if (scans.size() == 2) {
    std::vector<AstExprPtr> conj;
    split_ast_conjuncts(select.join_on, conj);
    split_ast_conjuncts(select.where, conj);
    size_t lw = scans[0]->schema.size();
    std::vector<size_t> lk, rk;
    std::vector<Expr> residual;
    for (const auto& c : conj) {
      Expr e = binder.bind(c);
      require_boolean(e, "join condition");
      if (e->kind == ExprKind::kCompare && e->compare == CompareOp::kEq &&
          e->children[0]->kind == ExprKind::kColumn && e->children[1]->kind == ExprKind::kColumn) {
        size_t a = e->children[0]->column, b = e->children[1]->column;
        if (a >= lw && b < lw) std::swap(a, b);
        if (a < lw && b >= lw && scope[a].type == scope[b].type) {
          lk.push_back(a);
          rk.push_back(b - lw);
          continue;
        }
      }
      residual.push_back(e);
    }
    if (lk.empty()) {
      fail_at(ErrorCode::kPlan,
              "join needs an equality between same-typed columns of '" + select.from[0].scope_name() + "' and '" +
                  select.from[1].scope_name() + "'",
              select.from[1].offset);
    }
    plan = logical_join(scans[0], scans[1], lk, rk);
    if (!residual.empty()) plan = logical_filter(plan, conjunction(residual));
  } else if (select.where) {
    Expr e = binder.bind(select.where);
    at(select.where->offset, [&] {
      require_boolean(e, "WHERE condition");
      return 0;
    });
    plan = logical_filter(plan, e);
  }

  bool aggregating = !select.group_by.empty();
  for (const auto& item : select.items) aggregating = aggregating || (item.expr && contains_aggregate(*item.expr));
  for (const auto& o : select.order_by) aggregating = aggregating || contains_aggregate(*o.expr);

  std::vector<Expr> keys;
  std::vector<std::string> key_names;
  std::vector<AggSpec> aggs;
  std::vector<std::string> agg_names;
  Binder::Intercept intercept;
  if (aggregating) {
    for (size_t i = 0; i < select.group_by.size(); ++i) {
      const auto& g = select.group_by[i];
      if (contains_aggregate(*g)) fail_at(ErrorCode::kPlan, "aggregates are not allowed in GROUP BY", g->offset);
      Expr k = binder.bind(g);
      keys.push_back(k);
      key_names.push_back(k->kind == ExprKind::kColumn ? k->name : "_k" + std::to_string(i));
    }
    intercept = [&](const AstExpr& e) -> std::optional<Expr> {
      if (e.kind == AstKind::kCall && is_aggregate_name(e.name)) {
        AggSpec spec = make_agg_spec(e, binder);
        size_t j = 0;
        while (j < aggs.size() && !same_agg(aggs[j], spec)) ++j;
        if (j == aggs.size()) {
          aggs.push_back(spec);
          agg_names.push_back("_a" + std::to_string(j));
        }
        return make_column(keys.size() + j, aggs[j].result_type, agg_names[j]);
      }
      if (contains_aggregate(e) || e.kind == AstKind::kLiteral) return std::nullopt;
      Expr x = binder.bind(std::make_shared<AstExpr>(e));
      for (size_t i = 0; i < keys.size(); ++i) {
        if (expr_equal(x, keys[i])) return make_column(i, x->type, key_names[i]);
      }
      if (e.kind == AstKind::kColumn) {
        fail_at(ErrorCode::kPlan, "column '" + e.name + "' must appear in GROUP BY or inside an aggregate",
                e.offset);
      }
      if (!references_columns(x)) return x;
      return std::nullopt;
    };
  }

  std::vector<Expr> out;
  std::vector<std::string> names;
  std::vector<bool> named;  // whether the output name came from the query text
  for (const auto& item : select.items) {
    if (!item.expr) {
      if (aggregating) fail_at(ErrorCode::kPlan, "* cannot be combined with aggregation", item.offset);
      bool any = false;
      for (size_t i = 0; i < scope.size(); ++i) {
        if (!item.star_qualifier.empty() && !iequals(scope[i].qualifier, item.star_qualifier)) continue;
        out.push_back(make_column(i, scope[i].type, scope[i].name));
        names.push_back(scope[i].name);
        named.push_back(true);
        any = true;
      }
      if (!any) fail_at(ErrorCode::kNotFound, "unknown table '" + item.star_qualifier + "'", item.offset);
      continue;
    }
    Expr e = aggregating ? binder.bind(item.expr, intercept) : binder.bind(item.expr);
    std::string name = item.alias;
    if (name.empty() && item.expr->kind == AstKind::kColumn) name = item.expr->name;
    named.push_back(!name.empty());
    if (name.empty()) name = "_c" + std::to_string(out.size());
    out.push_back(e);
    names.push_back(name);
  }
  size_t visible = out.size();

  std::vector<lineage::SortKey> sort_keys;
  for (const auto& o : select.order_by) {
    std::optional<size_t> idx;
    const AstExpr& e = *o.expr;
    if (e.kind == AstKind::kLiteral && !e.literal.is_null() && e.literal.type() == Type::kInt64) {
      int64_t k = e.literal.as_int();
      if (k < 1 || static_cast<size_t>(k) > visible) {
        fail_at(ErrorCode::kPlan, "ORDER BY position " + std::to_string(k) + " is out of range", e.offset);
      }
      idx = static_cast<size_t>(k - 1);
    } else if (e.kind == AstKind::kColumn && e.qualifier.empty()) {
      for (size_t i = 0; i < visible; ++i) {
        if (!named[i] || !iequals(names[i], e.name)) continue;
        // A bare name matching several outputs is only fine if they agree.
        if (idx && !expr_equal(out[*idx], out[i])) {
          fail_at(ErrorCode::kPlan, "ambiguous ORDER BY column '" + e.name + "'", e.offset);
        }
        if (!idx) idx = i;
      }
    }
    if (!idx) {
      Expr x = aggregating ? binder.bind(o.expr, intercept) : binder.bind(o.expr);
      for (size_t i = 0; i < out.size() && !idx; ++i) {
        if (expr_equal(out[i], x)) idx = i;
      }
      if (!idx) {
        idx = out.size();
        out.push_back(x);
        names.push_back("_o" + std::to_string(out.size()));
      }
    }
    sort_keys.push_back({*idx, o.ascending});
  }

  if (aggregating) plan = logical_aggregate(plan, keys, key_names, aggs, agg_names);
  plan = logical_project(plan, out, names);
  if (!sort_keys.empty()) plan = logical_sort(plan, sort_keys, false);
  if (select.limit) plan = logical_limit(plan, *select.limit, false);
  if (out.size() > visible) {
    std::vector<Expr> keep;
    std::vector<std::string> keep_names;
    for (size_t i = 0; i < visible; ++i) {
      keep.push_back(make_column(i, plan->schema[i].type, names[i]));
      keep_names.push_back(names[i]);
    }
    plan = logical_project(plan, keep, keep_names);
  }
  return plan;
}

// ---------------------------------------------------------------------------
// Optimization

namespace {

LogicalPtr fold_all(const LogicalPtr& n) {
  std::vector<LogicalPtr> kids;
  for (const auto& c : n->children) kids.push_back(fold_all(c));
  auto out = copy_with(n, std::move(kids));
  if (out->predicate) out->predicate = fold_constants(out->predicate);
  for (auto& e : out->exprs) e = fold_constants(e);
  for (auto& a : out->aggs) {
    if (a.arg) a.arg = fold_constants(a.arg);
  }
  return out;
}

bool is_true_literal(const Expr& e) {
  return e->kind == ExprKind::kLiteral && !e->null_literal && e->literal.type() == Type::kBoolean &&
         e->literal.as_bool();
}

LogicalPtr wrap(LogicalPtr n, const std::vector<Expr>& preds) {
  std::vector<Expr> kept;
  for (const auto& p : preds) {
    if (!is_true_literal(p)) kept.push_back(p);
  }
  if (kept.empty()) return n;
  return logical_filter(std::move(n), conjunction(kept));
}

// Returns a plan equal to Filter(preds, n) with the predicates moved as far
// down as their columns allow.
LogicalPtr push(const LogicalPtr& n, std::vector<Expr> preds) {
  switch (n->kind) {
    case LogicalKind::kFilter: {
      for (const auto& p : split_conjuncts(n->predicate)) preds.push_back(p);
      return push(n->children[0], std::move(preds));
    }
    case LogicalKind::kScan: {
      std::vector<Expr> all;
      if (n->predicate) all = split_conjuncts(n->predicate);
      for (const auto& p : preds) {
        if (!is_true_literal(p)) all.push_back(p);
      }
      auto out = copy_with(n, {});
      out->predicate = conjunction(all);
      return out;
    }
    case LogicalKind::kProject: {
      std::vector<Expr> below;
      for (const auto& p : preds) {
        below.push_back(substitute_columns(p, [&](const ExprNode& c) { return n->exprs.at(c.column); }));
      }
      return copy_with(n, {push(n->children[0], std::move(below))});
    }
    case LogicalKind::kJoin: {
      size_t lw = n->children[0]->schema.size();
      std::vector<Expr> left, right, stay;
      for (const auto& p : preds) {
        std::set<size_t> cols;
        collect_columns(p, cols);
        bool all_left = true, all_right = true;
        for (size_t c : cols) {
          if (c < lw) all_right = false;
          else all_left = false;
        }
        if (all_left) {
          left.push_back(p);
        } else if (all_right) {
          right.push_back(shift_columns(p, -static_cast<std::ptrdiff_t>(lw)));
        } else {
          stay.push_back(p);
        }
      }
      auto out = copy_with(n, {push(n->children[0], left), push(n->children[1], right)});
      return wrap(out, stay);
    }
    case LogicalKind::kAggregate: {
      std::vector<Expr> below, stay;
      for (const auto& p : preds) {
        std::set<size_t> cols;
        collect_columns(p, cols);
        bool on_keys = !cols.empty();
        for (size_t c : cols) on_keys = on_keys && c < n->exprs.size();
        if (on_keys) {
          below.push_back(substitute_columns(p, [&](const ExprNode& c) { return n->exprs.at(c.column); }));
        } else {
          stay.push_back(p);
        }
      }
      return wrap(copy_with(n, {push(n->children[0], std::move(below))}), stay);
    }
    case LogicalKind::kSort:
      return copy_with(n, {push(n->children[0], std::move(preds))});
    case LogicalKind::kLimit:
      return wrap(copy_with(n, {push(n->children[0], {})}), preds);
  }
  return n;
}

LogicalPtr apply_pruning(const LogicalPtr& n) {
  std::vector<LogicalPtr> kids;
  for (const auto& c : n->children) kids.push_back(apply_pruning(c));
  auto out = copy_with(n, std::move(kids));
  if (n->kind == LogicalKind::kScan && !n->table->stats.empty() &&
      n->table->stats.size() == n->table->partition_count()) {
    std::vector<bool> keep(n->table->stats.size(), false);
    for (size_t i : prune_partitions(n->predicate, n->table->stats)) keep[i] = true;
    out->keep = std::move(keep);
  }
  return out;
}

LogicalPtr push_limits(const LogicalPtr& n) {
  std::vector<LogicalPtr> kids;
  for (const auto& c : n->children) kids.push_back(push_limits(c));
  if (n->kind != LogicalKind::kLimit || n->per_partition) return copy_with(n, std::move(kids));
  const LogicalPtr& child = kids[0];
  if (child->kind == LogicalKind::kLimit && child->per_partition) return copy_with(n, std::move(kids));
  if (child->kind == LogicalKind::kSort && !child->per_partition) {
    const LogicalPtr& below = child->children[0];
    if (below->kind == LogicalKind::kLimit && below->per_partition) return copy_with(n, std::move(kids));
    auto local = logical_limit(logical_sort(below, child->sort_keys, true), n->limit, true);
    return copy_with(n, {copy_with(child, {local})});
  }
  return copy_with(n, {logical_limit(child, n->limit, true)});
}

}  // namespace

LogicalPtr optimize(const LogicalPtr& plan, const OptimizeOptions& options) {
  LogicalPtr p = plan;
  if (options.fold) p = fold_all(p);
  if (options.pushdown) p = push(p, {});
  if (options.pruning) p = apply_pruning(p);
  if (options.limit_pushdown) p = push_limits(p);
  return p;
}

// ---------------------------------------------------------------------------
// Map pruning

namespace {

const Value* literal_of(const Expr& e) {
  if (e->kind != ExprKind::kLiteral) return nullptr;
  return &e->literal;
}

bool holds(CompareOp op, const Value& a, const Value& b) {
  Value r = compare_sql(op, a, b);
  return !r.is_null() && r.as_bool();
}

// True when no row of the partition can satisfy `e`.
bool provably_false(const Expr& e, const storage::PartitionStats& s) {
  if (s.row_count == 0) return true;
  auto column_stats = [&](const Expr& c) -> const storage::ColumnStats* {
    if (c->kind != ExprKind::kColumn || c->column >= s.columns.size()) return nullptr;
    return &s.columns[c->column];
  };
  switch (e->kind) {
    case ExprKind::kLiteral:
      return e->null_literal || (e->literal.type() == Type::kBoolean && !e->literal.as_bool());
    case ExprKind::kAnd:
      for (const auto& c : e->children) {
        if (provably_false(c, s)) return true;
      }
      return false;
    case ExprKind::kOr:
      for (const auto& c : e->children) {
        if (!provably_false(c, s)) return false;
      }
      return true;
    case ExprKind::kCompare: {
      CompareOp op = e->compare;
      Expr col = e->children[0], lit = e->children[1];
      if (col->kind != ExprKind::kColumn) {
        std::swap(col, lit);
        op = flip(op);
      }
      const auto* cs = column_stats(col);
      if (!cs || lit->kind != ExprKind::kLiteral) return false;
      if (lit->null_literal) return true;
      const Value& v = lit->literal;
      if (!cs->min || !cs->max) return true;  // no non-null values
      if (cs->distinct) {
        bool any = false;
        for (const auto& d : *cs->distinct) any = any || holds(op, d, v);
        if (!any) return true;
      }
      const Value& lo = *cs->min;
      const Value& hi = *cs->max;
      switch (op) {
        case CompareOp::kEq: return compare_values(v, lo) < 0 || compare_values(v, hi) > 0;
        case CompareOp::kNe: return compare_values(lo, hi) == 0 && compare_values(lo, v) == 0;
        case CompareOp::kLt: return compare_values(lo, v) >= 0;
        case CompareOp::kLe: return compare_values(lo, v) > 0;
        case CompareOp::kGt: return compare_values(hi, v) <= 0;
        case CompareOp::kGe: return compare_values(hi, v) < 0;
      }
      return false;
    }
    case ExprKind::kBetween: {
      const auto* cs = column_stats(e->children[0]);
      const Value* lo = literal_of(e->children[1]);
      const Value* hi = literal_of(e->children[2]);
      if (!cs || !lo || !hi || e->negated) return false;
      if (lo->is_null() || hi->is_null() || !cs->min) return true;
      if (cs->distinct) {
        bool any = false;
        for (const auto& d : *cs->distinct) any = any || (holds(CompareOp::kGe, d, *lo) && holds(CompareOp::kLe, d, *hi));
        if (!any) return true;
      }
      return compare_values(*cs->max, *lo) < 0 || compare_values(*cs->min, *hi) > 0;
    }
    case ExprKind::kIn: {
      const auto* cs = column_stats(e->children[0]);
      if (!cs || e->negated) return false;
      std::vector<const Value*> list;
      for (size_t i = 1; i < e->children.size(); ++i) {
        const Value* v = literal_of(e->children[i]);
        if (!v) return false;
        if (!v->is_null()) list.push_back(v);
      }
      if (list.empty() || !cs->min) return true;
      for (const Value* v : list) {
        bool in_range = compare_values(*v, *cs->min) >= 0 && compare_values(*v, *cs->max) <= 0;
        if (!in_range) continue;
        if (!cs->distinct) return false;
        for (const auto& d : *cs->distinct) {
          if (holds(CompareOp::kEq, d, *v)) return false;
        }
      }
      return true;
    }
    case ExprKind::kIsNull: {
      const auto* cs = column_stats(e->children[0]);
      if (!cs) return false;
      return e->negated ? cs->null_count == s.row_count : cs->null_count == 0;
    }
    default:
      return false;
  }
}

}  // namespace

std::vector<size_t> prune_partitions(const Expr& predicate, const std::vector<storage::PartitionStats>& stats) {
  std::vector<size_t> keep;
  for (size_t i = 0; i < stats.size(); ++i) {
    if (!predicate ? stats[i].row_count > 0 : !provably_false(predicate, stats[i])) keep.push_back(i);
  }
  return keep;
}

// ---------------------------------------------------------------------------
// EXPLAIN

namespace {

std::string expr_list(const std::vector<Expr>& exprs) {
  std::string s = "[";
  for (size_t i = 0; i < exprs.size(); ++i) s += (i ? ", " : "") + expr_to_string(exprs[i]);
  return s + "]";
}

void explain_into(const LogicalPtr& n, int depth, std::string& out) {
  out += std::string(static_cast<size_t>(depth) * 2, ' ');
  switch (n->kind) {
    case LogicalKind::kScan: {
      out += "Scan " + n->table->name;
      if (!iequals(n->alias, n->table->name)) out += " AS " + n->alias;
      if (n->predicate) out += " filter=" + expr_to_string(n->predicate);
      if (n->keep) {
        size_t kept = 0;
        for (bool k : *n->keep) kept += k;
        out += " partitions=" + std::to_string(kept) + "/" + std::to_string(n->keep->size());
      }
      break;
    }
    case LogicalKind::kFilter: out += "Filter " + expr_to_string(n->predicate); break;
    case LogicalKind::kProject: {
      out += "Project [";
      for (size_t i = 0; i < n->exprs.size(); ++i) {
        out += (i ? ", " : "") + expr_to_string(n->exprs[i]);
        if (n->exprs[i]->kind != ExprKind::kColumn || n->exprs[i]->name != n->schema[i].name) {
          out += " AS " + n->schema[i].name;
        }
      }
      out += "]";
      break;
    }
    case LogicalKind::kAggregate: {
      out += "Aggregate keys=" + expr_list(n->exprs) + " aggs=[";
      for (size_t i = 0; i < n->aggs.size(); ++i) {
        const auto& a = n->aggs[i];
        out += (i ? ", " : "") + std::string(lineage::agg_name(a.func)) + "(" + (a.distinct ? "DISTINCT " : "") +
               (a.arg ? expr_to_string(a.arg) : "*") + ")";
      }
      out += "]";
      break;
    }
    case LogicalKind::kJoin: {
      out += "Join on [";
      for (size_t i = 0; i < n->left_keys.size(); ++i) {
        out += (i ? ", " : "") + n->children[0]->schema[n->left_keys[i]].name + " = " +
               n->children[1]->schema[n->right_keys[i]].name;
      }
      out += "]";
      break;
    }
    case LogicalKind::kSort: {
      out += n->per_partition ? "PartitionSort [" : "Sort [";
      for (size_t i = 0; i < n->sort_keys.size(); ++i) {
        out += (i ? ", " : "") + n->schema[n->sort_keys[i].column].name + (n->sort_keys[i].ascending ? " ASC" : " DESC");
      }
      out += "]";
      break;
    }
    case LogicalKind::kLimit:
      out += (n->per_partition ? "PartitionLimit " : "Limit ") + std::to_string(n->limit);
      break;
  }
  out += "\n";
  for (const auto& c : n->children) explain_into(c, depth + 1, out);
}

}  // namespace

std::string explain_logical(const LogicalPtr& plan) {
  std::string out;
  explain_into(plan, 0, out);
  return out;
}

}  // namespace ember::sql
