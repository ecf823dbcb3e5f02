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

#include "lineage/kernels.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <unordered_map>

#include "common/codec.hpp"
#include "common/error.hpp"

namespace ember::lineage {

namespace {

// Running state of one aggregate for one group.
struct AggState {
  int64_t count = 0;
  Value acc;             // SUM / MIN / MAX
  double avg_sum = 0.0;  // AVG
  std::set<Value, ValueLess> distinct;
};

Value add_values(const Value& a, const Value& b) {
  if (a.is_null()) return b;
  if (b.is_null()) return a;
  if (a.type() == Type::kInt64 && b.type() == Type::kInt64) {
    return Value(static_cast<int64_t>(static_cast<uint64_t>(a.as_int()) + static_cast<uint64_t>(b.as_int())));
  }
  return Value(a.numeric() + b.numeric());
}

void accumulate(AggState& s, const AggSpec& agg, const Value& v) {
  if (agg.func == AggFunc::kCountStar) {
    ++s.count;
    return;
  }
  if (v.is_null()) return;
  if (agg.distinct) {
    s.distinct.insert(v);
    return;
  }
  switch (agg.func) {
    case AggFunc::kCount:
      ++s.count;
      break;
    case AggFunc::kSum:
      s.acc = add_values(s.acc, agg.result_type == Type::kFloat64 && v.type() == Type::kInt64
                                    ? Value(static_cast<double>(v.as_int()))
                                    : v);
      break;
    case AggFunc::kAvg:
      s.avg_sum += v.numeric();
      ++s.count;
      break;
    case AggFunc::kMin:
      if (s.acc.is_null() || compare_values(v, s.acc) < 0) s.acc = v;
      break;
    case AggFunc::kMax:
      if (s.acc.is_null() || compare_values(v, s.acc) > 0) s.acc = v;
      break;
    default:
      break;
  }
}

// Folds DISTINCT sets into ordinary states once grouping is complete.
void settle_distinct(AggState& s, const AggSpec& agg) {
  if (!agg.distinct) return;
  AggSpec plain = agg;
  plain.distinct = false;
  AggState fresh;
  for (const auto& v : s.distinct) accumulate(fresh, plain, v);
  s = std::move(fresh);
}

Value finalize(const AggState& s, const AggSpec& agg) {
  switch (agg.func) {
    case AggFunc::kCountStar:
    case AggFunc::kCount: return Value(s.count);
    case AggFunc::kAvg:
      return s.count == 0 ? Value() : Value(s.avg_sum / static_cast<double>(s.count));
    default: return s.acc;
  }
}

void emit_partial(Row& out, const AggState& s, const AggSpec& agg) {
  switch (agg.func) {
    case AggFunc::kCountStar:
    case AggFunc::kCount: out.emplace_back(s.count); break;
    case AggFunc::kAvg:
      out.emplace_back(s.avg_sum);
      out.emplace_back(s.count);
      break;
    default: out.push_back(s.acc);
  }
}

// Reads a partial state starting at `col`; returns the columns consumed.
size_t merge_partial(AggState& s, const AggSpec& agg, const Row& row, size_t col) {
  switch (agg.func) {
    case AggFunc::kCountStar:
    case AggFunc::kCount:
      s.count += row[col].as_int();
      return 1;
    case AggFunc::kAvg:
      s.avg_sum += row[col].as_double();
      s.count += row[col + 1].as_int();
      return 2;
    case AggFunc::kSum:
      s.acc = add_values(s.acc, row[col]);
      return 1;
    case AggFunc::kMin:
      if (!row[col].is_null() && (s.acc.is_null() || compare_values(row[col], s.acc) < 0)) s.acc = row[col];
      return 1;
    case AggFunc::kMax:
      if (!row[col].is_null() && (s.acc.is_null() || compare_values(row[col], s.acc) > 0)) s.acc = row[col];
      return 1;
  }
  return 1;
}

using Groups = std::map<Row, std::vector<AggState>, RowLess>;

std::vector<AggState>& group_for(Groups& groups, Row key, size_t n) {
  auto it = groups.find(key);
  if (it == groups.end()) it = groups.emplace(std::move(key), std::vector<AggState>(n)).first;
  return it->second;
}

struct KeyHash {
  size_t operator()(const Row& r) const { return hash_values(r); }
};

struct KeyEq {
  bool operator()(const Row& a, const Row& b) const { return compare_rows(a, b) == 0; }
};

using JoinIndex = std::unordered_map<Row, std::vector<size_t>, KeyHash, KeyEq>;

bool extract_key(const Row& row, const std::vector<size_t>& cols, Row& key) {
  key.clear();
  for (size_t c : cols) {
    if (row[c].is_null()) return false;
    key.push_back(row[c]);
  }
  return true;
}

JoinIndex build_index(const RowBatch& rows, const std::vector<size_t>& cols) {
  JoinIndex index;
  Row key;
  for (size_t i = 0; i < rows.size(); ++i) {
    if (extract_key(rows[i], cols, key)) index[key].push_back(i);
  }
  return index;
}

Row concat(const Row& a, const Row& b) {
  Row out;
  out.reserve(a.size() + b.size());
  out.insert(out.end(), a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

}  // namespace

RowBatch apply_filter(const RowBatch& rows, const Expr& predicate) {
  RowBatch out;
  for (const auto& r : rows) {
    if (evaluate_predicate(predicate, r)) out.push_back(r);
  }
  return out;
}

RowBatch apply_project(const RowBatch& rows, const std::vector<Expr>& exprs) {
  RowBatch out;
  out.reserve(rows.size());
  for (const auto& r : rows) {
    Row o;
    o.reserve(exprs.size());
    for (const auto& e : exprs) o.push_back(evaluate(e, r));
    out.push_back(std::move(o));
  }
  return out;
}

RowBatch apply_map(const RowBatch& rows, const MapSpec& spec, const Schema& input) {
  const RowFunction& fn = FunctionRegistry::global().get(spec.function);
  if (fn.granularity == Granularity::kPartition) return fn.partition(rows, input, spec.params);
  RowBatch out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(fn.row(r, input, spec.params));
  return out;
}

RowBatch local_aggregate(const RowBatch& rows, const AggregateSpec& spec) {
  if (spec.mode == AggMode::kPassthrough) {
    RowBatch out;
    out.reserve(rows.size());
    for (const auto& r : rows) {
      Row o = eval_keys(r, spec.keys);
      for (const auto& a : spec.aggs) {
        if (a.arg) o.push_back(evaluate(a.arg, r));
      }
      out.push_back(std::move(o));
    }
    return out;
  }
  Groups groups;
  for (const auto& r : rows) {
    auto& states = group_for(groups, eval_keys(r, spec.keys), spec.aggs.size());
    for (size_t i = 0; i < spec.aggs.size(); ++i) {
      const auto& a = spec.aggs[i];
      accumulate(states[i], a, a.arg ? evaluate(a.arg, r) : Value());
    }
  }
  RowBatch out;
  out.reserve(groups.size());
  for (auto& [key, states] : groups) {
    Row o = key;
    for (size_t i = 0; i < spec.aggs.size(); ++i) emit_partial(o, states[i], spec.aggs[i]);
    out.push_back(std::move(o));
  }
  return out;
}

RowBatch merge_aggregate(const RowBatch& rows, const AggregateSpec& spec) {
  Groups groups;
  const size_t k = spec.key_count;
  for (const auto& r : rows) {
    auto& states = group_for(groups, Row(r.begin(), r.begin() + static_cast<std::ptrdiff_t>(k)),
                             spec.aggs.size());
    size_t col = k;
    for (size_t i = 0; i < spec.aggs.size(); ++i) {
      const auto& a = spec.aggs[i];
      if (spec.mode == AggMode::kMerge) {
        col += merge_partial(states[i], a, r, col);
      } else if (a.arg) {
        accumulate(states[i], a, r[col++]);
      } else {
        accumulate(states[i], a, Value());
      }
    }
  }
  // An ungrouped aggregate always yields exactly one row.
  if (k == 0 && groups.empty()) groups.emplace(Row{}, std::vector<AggState>(spec.aggs.size()));
  RowBatch out;
  out.reserve(groups.size());
  for (auto& [key, states] : groups) {
    Row o = key;
    for (size_t i = 0; i < spec.aggs.size(); ++i) {
      settle_distinct(states[i], spec.aggs[i]);
      o.push_back(finalize(states[i], spec.aggs[i]));
    }
    out.push_back(std::move(o));
  }
  return out;
}

RowBatch hash_join(const RowBatch& left, const RowBatch& right, const std::vector<size_t>& left_keys,
                   const std::vector<size_t>& right_keys) {
  JoinIndex index = build_index(right, right_keys);
  RowBatch out;
  Row key;
  for (const auto& l : left) {
    if (!extract_key(l, left_keys, key)) continue;
    auto it = index.find(key);
    if (it == index.end()) continue;
    for (size_t j : it->second) out.push_back(concat(l, right[j]));
  }
  return out;
}

RowBatch broadcast_join(const RowBatch& probe, const RowBatch& build, const BroadcastSpec& spec) {
  const auto& build_keys = spec.build_is_left ? spec.left_keys : spec.right_keys;
  const auto& probe_keys = spec.build_is_left ? spec.right_keys : spec.left_keys;
  JoinIndex index = build_index(build, build_keys);
  RowBatch out;
  Row key;
  for (const auto& p : probe) {
    if (!extract_key(p, probe_keys, key)) continue;
    auto it = index.find(key);
    if (it == index.end()) continue;
    for (size_t j : it->second) {
      out.push_back(spec.build_is_left ? concat(build[j], p) : concat(p, build[j]));
    }
  }
  return out;
}

int compare_sort(const Row& a, const Row& b, const std::vector<SortKey>& keys) {
  for (const auto& k : keys) {
    int c = compare_values(a[k.column], b[k.column]);
    if (c != 0) return k.ascending ? c : -c;
  }
  return 0;
}

void sort_rows(RowBatch& rows, const std::vector<SortKey>& keys) {
  std::stable_sort(rows.begin(), rows.end(),
                   [&](const Row& a, const Row& b) { return compare_sort(a, b, keys) < 0; });
}

RowBatch apply_limit(const RowBatch& rows, size_t n) {
  if (rows.size() <= n) return rows;
  return RowBatch(rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(n));
}

Row eval_keys(const Row& row, const std::vector<Expr>& keys) {
  Row out;
  out.reserve(keys.size());
  for (const auto& k : keys) out.push_back(evaluate(k, row));
  return out;
}

std::vector<RowBatch> hash_partition(const RowBatch& rows, const std::vector<Expr>& keys,
                                     size_t reducers) {
  if (reducers == 0) fail(ErrorCode::kInvalidArgument, "reducer count must be positive");
  std::vector<RowBatch> out(reducers);
  for (const auto& r : rows) out[hash_values(eval_keys(r, keys)) % reducers].push_back(r);
  return out;
}

}  // namespace ember::lineage
