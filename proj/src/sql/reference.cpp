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

#include "sql/reference.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <set>

#include "common/error.hpp"
#include "common/expr.hpp"

namespace ember::sql {

namespace {

struct Env {
  std::vector<std::pair<std::string, std::string>> columns;  // qualifier, name
};

bool is_agg(const AstExpr& e) {
  return e.kind == AstKind::kCall &&
         (e.name == "count" || e.name == "sum" || e.name == "avg" || e.name == "min" || e.name == "max");
}

bool has_agg(const AstExpr& e) {
  if (is_agg(e)) return true;
  for (const auto& c : e.children) {
    if (has_agg(*c)) return true;
  }
  return false;
}

std::optional<bool> truth(const Value& v) {
  if (v.is_null()) return std::nullopt;
  return v.as_bool();
}

Value from_truth(std::optional<bool> b) { return b ? Value(*b) : Value(); }

std::optional<bool> sql_and(std::optional<bool> a, std::optional<bool> b) {
  if (a == false || b == false) return false;
  if (!a || !b) return std::nullopt;
  return true;
}

std::optional<bool> sql_or(std::optional<bool> a, std::optional<bool> b) {
  if (a == true || b == true) return true;
  if (!a || !b) return std::nullopt;
  return false;
}

std::optional<bool> compare(const std::string& op, const Value& a, const Value& b) {
  if (a.is_null() || b.is_null()) return std::nullopt;
  int c;
  if (a.type() == Type::kInt64 && b.type() == Type::kInt64) {
    c = a.as_int() < b.as_int() ? -1 : a.as_int() > b.as_int();
  } else if ((a.type() == Type::kInt64 || a.type() == Type::kFloat64) &&
             (b.type() == Type::kInt64 || b.type() == Type::kFloat64)) {
    double x = a.type() == Type::kInt64 ? static_cast<double>(a.as_int()) : a.as_double();
    double y = b.type() == Type::kInt64 ? static_cast<double>(b.as_int()) : b.as_double();
    c = x < y ? -1 : x > y;
  } else {
    c = compare_values(a, b);
  }
  if (op == "=") return c == 0;
  if (op == "<>") return c != 0;
  if (op == "<") return c < 0;
  if (op == "<=") return c <= 0;
  if (op == ">") return c > 0;
  return c >= 0;
}

int64_t wrap(uint64_t v) { return static_cast<int64_t>(v); }

Value arithmetic(const std::string& op, const Value& a, const Value& b) {
  if (a.is_null() || b.is_null()) return Value();
  if (a.type() == Type::kDate && b.type() == Type::kInt64) {
    int64_t d = a.as_date().days;
    return Value(Date{static_cast<int32_t>(op == "+" ? d + b.as_int() : d - b.as_int())});
  }
  if (a.type() == Type::kInt64 && b.type() == Type::kInt64 && op != "/") {
    auto x = static_cast<uint64_t>(a.as_int()), y = static_cast<uint64_t>(b.as_int());
    if (op == "+") return Value(wrap(x + y));
    if (op == "-") return Value(wrap(x - y));
    if (op == "*") return Value(wrap(x * y));
    if (b.as_int() == 0) return Value();
    if (b.as_int() == -1) return Value(int64_t{0});
    return Value(a.as_int() % b.as_int());
  }
  double x = a.type() == Type::kInt64 ? static_cast<double>(a.as_int()) : a.as_double();
  double y = b.type() == Type::kInt64 ? static_cast<double>(b.as_int()) : b.as_double();
  if (op == "+") return Value(x + y);
  if (op == "-") return Value(x - y);
  if (op == "*") return Value(x * y);
  if (y == 0) return Value();
  if (op == "/") return Value(x / y);
  return Value(std::fmod(x, y));
}

Value call(const std::string& name, const std::vector<Value>& args) {
  for (const auto& a : args) {
    if (a.is_null()) return Value();
  }
  if (name == "length") return Value(static_cast<int64_t>(args.at(0).as_string().size()));
  if (name == "upper" || name == "lower") {
    std::string s = args.at(0).as_string();
    for (char& ch : s) {
      if (name == "upper" && ch >= 'a' && ch <= 'z') ch = static_cast<char>(ch - 'a' + 'A');
      if (name == "lower" && ch >= 'A' && ch <= 'Z') ch = static_cast<char>(ch - 'A' + 'a');
    }
    return Value(s);
  }
  if (name == "abs") {
    if (args.at(0).type() == Type::kInt64) {
      int64_t v = args[0].as_int();
      return Value(v < 0 ? wrap(0 - static_cast<uint64_t>(v)) : v);
    }
    return Value(std::fabs(args.at(0).as_double()));
  }
  if (name == "substr") {
    const std::string& s = args.at(0).as_string();
    auto n = static_cast<int64_t>(s.size());
    int64_t start = args.at(1).as_int();
    int64_t from = start > 0 ? start - 1 : start < 0 ? n + start : 0;
    if (from < 0 || from >= n) return Value(std::string());
    int64_t len = args.size() > 2 ? args[2].as_int() : n - from;
    if (len <= 0) return Value(std::string());
    return Value(s.substr(static_cast<size_t>(from), static_cast<size_t>(std::min(len, n - from))));
  }
  if (name == "concat") {
    std::string out;
    for (const auto& a : args) out += to_string(a);
    return Value(out);
  }
  if (name == "date") {
    if (args.at(0).type() == Type::kDate) return args[0];
    auto d = parse_date(args[0].as_string());
    return d ? Value(*d) : Value();
  }
  if (name == "year") return Value(static_cast<int64_t>(std::stoi(format_date(args.at(0).as_date()).substr(0, 4))));
  // Anything else is a user-registered function; call it directly.
  const ScalarFunction* fn = ScalarRegistry::global().find(name);
  if (!fn) fail(ErrorCode::kPlan, "reference evaluator: unknown function " + name);
  return fn->eval(args);
}

class Eval {
 public:
  explicit Eval(const Env& env) : env_(env) {}

  size_t column(const AstExpr& e) const {
    std::optional<size_t> hit;
    for (size_t i = 0; i < env_.columns.size(); ++i) {
      if (!iequals(env_.columns[i].second, e.name)) continue;
      if (!e.qualifier.empty() && !iequals(env_.columns[i].first, e.qualifier)) continue;
      if (hit) fail(ErrorCode::kPlan, "reference evaluator: ambiguous column " + e.name);
      hit = i;
    }
    if (!hit) fail(ErrorCode::kFieldNotFound, "reference evaluator: unknown column " + e.name);
    return *hit;
  }

  // `group` is non-null when aggregates may appear; `row` is then the
  // group's first row (or null for an empty ungrouped input).
  Value eval(const AstExpr& e, const Row* row, const std::vector<const Row*>* group) const {
    switch (e.kind) {
      case AstKind::kColumn:
        if (!row) return Value();
        return (*row)[column(e)];
      case AstKind::kLiteral: return e.literal;
      case AstKind::kUnary: {
        Value v = eval(*e.children[0], row, group);
        if (e.op == "NOT") return from_truth(truth(v) ? std::optional<bool>(!*truth(v)) : std::nullopt);
        if (v.is_null()) return v;
        if (v.type() == Type::kInt64) return Value(wrap(0 - static_cast<uint64_t>(v.as_int())));
        return Value(-v.as_double());
      }
      case AstKind::kBinary: {
        if (e.op == "AND" || e.op == "OR") {
          auto a = truth(eval(*e.children[0], row, group));
          auto b = truth(eval(*e.children[1], row, group));
          return from_truth(e.op == "AND" ? sql_and(a, b) : sql_or(a, b));
        }
        Value a = eval(*e.children[0], row, group);
        Value b = eval(*e.children[1], row, group);
        if (e.op == "+" || e.op == "-" || e.op == "*" || e.op == "/" || e.op == "%") return arithmetic(e.op, a, b);
        return from_truth(compare(e.op, a, b));
      }
      case AstKind::kBetween: {
        Value v = eval(*e.children[0], row, group);
        auto r = sql_and(compare(">=", v, eval(*e.children[1], row, group)),
                         compare("<=", v, eval(*e.children[2], row, group)));
        if (e.negated && r) r = !*r;
        return from_truth(r);
      }
      case AstKind::kIn: {
        Value v = eval(*e.children[0], row, group);
        std::optional<bool> r = false;
        for (size_t i = 1; i < e.children.size(); ++i) r = sql_or(r, compare("=", v, eval(*e.children[i], row, group)));
        if (e.negated && r) r = !*r;
        return from_truth(r);
      }
      case AstKind::kIsNull: {
        bool n = eval(*e.children[0], row, group).is_null();
        return Value(e.negated ? !n : n);
      }
      case AstKind::kCall: {
        if (is_agg(e)) {
          if (!group) fail(ErrorCode::kPlan, "reference evaluator: aggregate outside grouping");
          return aggregate(e, *group);
        }
        std::vector<Value> args;
        for (const auto& c : e.children) args.push_back(eval(*c, row, group));
        return call(e.name, args);
      }
    }
    return Value();
  }

 private:
  Value aggregate(const AstExpr& e, const std::vector<const Row*>& group) const {
    if (e.star) return Value(static_cast<int64_t>(group.size()));
    std::vector<Value> vals;
    for (const Row* r : group) {
      Value v = eval(*e.children.at(0), r, nullptr);
      if (!v.is_null()) vals.push_back(v);
    }
    if (e.distinct) {
      std::vector<Value> uniq;
      for (const auto& v : vals) {
        bool seen = false;
        for (const auto& u : uniq) seen = seen || compare("=", u, v) == true;
        if (!seen) uniq.push_back(v);
      }
      vals = std::move(uniq);
    }
    if (e.name == "count") return Value(static_cast<int64_t>(vals.size()));
    if (vals.empty()) return Value();
    if (e.name == "min" || e.name == "max") {
      Value best = vals[0];
      for (const auto& v : vals) {
        if (e.name == "min" ? compare("<", v, best) == true : compare(">", v, best) == true) best = v;
      }
      return best;
    }
    bool ints = vals[0].type() == Type::kInt64;
    if (e.name == "sum" && ints) {
      uint64_t s = 0;
      for (const auto& v : vals) s += static_cast<uint64_t>(v.as_int());
      return Value(wrap(s));
    }
    double s = 0;
    for (const auto& v : vals) s += ints ? static_cast<double>(v.as_int()) : v.as_double();
    if (e.name == "sum") return Value(s);
    return Value(s / static_cast<double>(vals.size()));
  }

  const Env& env_;
};

struct RowOrder {
  bool operator()(const Row& a, const Row& b) const {
    for (size_t i = 0; i < a.size(); ++i) {
      int c = compare_values(a[i], b[i]);
      if (c) return c < 0;
    }
    return false;
  }
};

}  // namespace

RefResult reference_eval(const SelectStmt& select, const RefTables& tables) {
  Env env;
  std::vector<const RefTable*> inputs;
  for (const auto& t : select.from) {
    auto it = tables.find(to_lower(t.name));
    if (it == tables.end()) fail(ErrorCode::kNotFound, "reference evaluator: unknown table " + t.name);
    inputs.push_back(&it->second);
    for (const auto& c : it->second.schema) env.columns.emplace_back(t.scope_name(), c.name);
  }
  Eval ev(env);
  auto passes = [&](const AstExprPtr& pred, const Row& r) {
    if (!pred) return true;
    Value v = ev.eval(*pred, &r, nullptr);
    return !v.is_null() && v.as_bool();
  };

  RowBatch rows;
  if (inputs.size() == 1) {
    for (const auto& r : inputs[0]->rows) {
      if (passes(select.where, r)) rows.push_back(r);
    }
  } else {
    for (const auto& l : inputs[0]->rows) {
      for (const auto& r : inputs[1]->rows) {
        Row joined = l;
        joined.insert(joined.end(), r.begin(), r.end());
        if (passes(select.join_on, joined) && passes(select.where, joined)) rows.push_back(std::move(joined));
      }
    }
  }

  bool aggregating = !select.group_by.empty();
  for (const auto& i : select.items) aggregating = aggregating || (i.expr && has_agg(*i.expr));
  for (const auto& o : select.order_by) aggregating = aggregating || has_agg(*o.expr);

  // Output rows paired with the context the ORDER BY keys evaluate in.
  struct OutRow {
    Row values;
    const Row* first = nullptr;
    std::vector<const Row*> group;
  };
  std::vector<OutRow> out;
  RefResult result;
  for (size_t i = 0; i < select.items.size(); ++i) {
    const auto& item = select.items[i];
    if (!item.expr) {
      for (const auto& [q, n] : env.columns) {
        if (item.star_qualifier.empty() || iequals(q, item.star_qualifier)) result.names.push_back(n);
      }
    } else {
      result.names.push_back(!item.alias.empty() ? item.alias
                             : item.expr->kind == AstKind::kColumn ? item.expr->name
                                                                   : "_c" + std::to_string(result.names.size()));
    }
  }
  auto project = [&](const Row* row, const std::vector<const Row*>* group) {
    Row values;
    for (const auto& item : select.items) {
      if (!item.expr) {
        for (size_t c = 0; c < env.columns.size(); ++c) {
          if (item.star_qualifier.empty() || iequals(env.columns[c].first, item.star_qualifier)) {
            values.push_back((*row)[c]);
          }
        }
      } else {
        values.push_back(ev.eval(*item.expr, row, group));
      }
    }
    return values;
  };

  if (aggregating) {
    std::map<Row, std::vector<const Row*>, RowOrder> groups;
    for (const auto& r : rows) {
      Row key;
      for (const auto& g : select.group_by) key.push_back(ev.eval(*g, &r, nullptr));
      groups[key].push_back(&r);
    }
    if (select.group_by.empty() && groups.empty()) groups[Row{}] = {};
    for (auto& [key, members] : groups) {
      OutRow o;
      o.group = members;
      o.first = members.empty() ? nullptr : members[0];
      o.values = project(o.first, &o.group);
      out.push_back(std::move(o));
    }
  } else {
    for (const auto& r : rows) {
      OutRow o;
      o.first = &r;
      o.values = project(&r, nullptr);
      out.push_back(std::move(o));
    }
  }

  if (!select.order_by.empty()) {
    std::vector<std::pair<Row, size_t>> keyed;
    for (size_t i = 0; i < out.size(); ++i) {
      Row key;
      for (const auto& o : select.order_by) {
        const AstExpr& e = *o.expr;
        if (e.kind == AstKind::kLiteral && !e.literal.is_null() && e.literal.type() == Type::kInt64) {
          key.push_back(out[i].values.at(static_cast<size_t>(e.literal.as_int() - 1)));
          continue;
        }
        std::optional<size_t> named;
        if (e.kind == AstKind::kColumn && e.qualifier.empty()) {
          for (size_t c = 0; c < select.items.size(); ++c) {
            const auto& item = select.items[c];
            if (!item.expr) continue;
            bool match = iequals(item.alias, e.name) ||
                         (item.alias.empty() && item.expr->kind == AstKind::kColumn && iequals(item.expr->name, e.name));
            if (match && !named) named = c;
          }
        }
        // Items before a star shift positions; only use the shortcut without stars.
        bool has_star = false;
        for (const auto& item : select.items) has_star = has_star || !item.expr;
        if (named && !has_star) {
          key.push_back(out[i].values[*named]);
        } else {
          key.push_back(ev.eval(e, out[i].first, aggregating ? &out[i].group : nullptr));
        }
      }
      keyed.emplace_back(std::move(key), i);
    }
    std::stable_sort(keyed.begin(), keyed.end(), [&](const auto& a, const auto& b) {
      for (size_t k = 0; k < select.order_by.size(); ++k) {
        int c = compare_values(a.first[k], b.first[k]);
        if (c) return select.order_by[k].ascending ? c < 0 : c > 0;
      }
      return false;
    });
    for (const auto& [key, i] : keyed) result.rows.push_back(out[i].values);
  } else {
    for (auto& o : out) result.rows.push_back(std::move(o.values));
  }
  if (select.limit && result.rows.size() > *select.limit) result.rows.resize(*select.limit);
  return result;
}

}  // namespace ember::sql
