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

#include "session/generators.hpp"

#include <array>
#include <charconv>

#include "common/error.hpp"

namespace ember::session {

uint64_t uniform_below(std::mt19937_64& gen, uint64_t n) { return n ? gen() % n : 0; }

double uniform_unit(std::mt19937_64& gen) { return static_cast<double>(gen() >> 11) * 0x1.0p-53; }

namespace {

// Multiples of 1/64 keep sums exact in floating point.
double dyadic(std::mt19937_64& gen, int64_t lo, int64_t hi) {
  return static_cast<double>(lo * 64 + static_cast<int64_t>(uniform_below(gen, static_cast<uint64_t>((hi - lo) * 64)))) /
         64.0;
}

}  // namespace

GeneratedTable generate_lineitem(size_t rows, uint64_t seed) {
  static const std::array<const char*, 3> flags{"A", "N", "R"};
  static const std::array<const char*, 2> statuses{"F", "O"};
  static const std::array<const char*, 7> modes{"AIR", "FOB", "MAIL", "RAIL", "REG AIR", "SHIP", "TRUCK"};
  static const std::array<const char*, 4> instructs{"COLLECT COD", "DELIVER IN PERSON", "NONE", "TAKE BACK RETURN"};
  std::mt19937_64 gen(seed);
  GeneratedTable t;
  t.schema = Schema({{"orderkey", Type::kInt64},
                     {"linenumber", Type::kInt64},
                     {"quantity", Type::kInt64},
                     {"extendedprice", Type::kFloat64},
                     {"discount", Type::kFloat64},
                     {"returnflag", Type::kUtf8},
                     {"linestatus", Type::kUtf8},
                     {"shipmode", Type::kUtf8},
                     {"shipinstruct", Type::kUtf8},
                     {"shipdate", Type::kDate}});
  t.rows.reserve(rows);
  int32_t base = parse_date("1992-01-01")->days;
  for (size_t i = 0; i < rows; ++i) {
    auto quantity = static_cast<int64_t>(1 + uniform_below(gen, 50));
    Row r;
    r.emplace_back(static_cast<int64_t>(i / 4 + 1));
    r.emplace_back(static_cast<int64_t>(i % 4 + 1));
    r.emplace_back(quantity);
    r.emplace_back(dyadic(gen, 900, 2000) * static_cast<double>(quantity));
    r.emplace_back(static_cast<double>(uniform_below(gen, 11)) / 100.0);
    r.emplace_back(flags[uniform_below(gen, flags.size())]);
    r.emplace_back(statuses[uniform_below(gen, statuses.size())]);
    r.emplace_back(modes[uniform_below(gen, modes.size())]);
    r.emplace_back(instructs[uniform_below(gen, instructs.size())]);
    r.emplace_back(Date{base + static_cast<int32_t>(uniform_below(gen, 2500))});
    t.rows.push_back(std::move(r));
  }
  return t;
}

GeneratedTable generate_daily(size_t days, size_t per_day, uint64_t seed) {
  static const std::array<const char*, 5> categories{"books", "games", "garden", "music", "tools"};
  std::mt19937_64 gen(seed);
  GeneratedTable t;
  t.schema = Schema({{"id", Type::kInt64},
                     {"day", Type::kDate},
                     {"category", Type::kUtf8},
                     {"amount", Type::kInt64}});
  int32_t base = parse_date("2024-01-01")->days;
  int64_t id = 0;
  for (size_t d = 0; d < days; ++d) {
    for (size_t j = 0; j < per_day; ++j) {
      Row r;
      r.emplace_back(id++);
      r.emplace_back(Date{base + static_cast<int32_t>(d)});
      r.emplace_back(categories[uniform_below(gen, categories.size())]);
      r.emplace_back(static_cast<int64_t>(uniform_below(gen, 10000)));
      t.rows.push_back(std::move(r));
    }
  }
  return t;
}

GeneratedTable generate_keyed(size_t rows, size_t groups, uint64_t seed) {
  static const std::array<const char*, 8> words{"amber", "basalt", "cobalt", "dune", "ember", "flint", "garnet", "heath"};
  if (groups == 0) fail(ErrorCode::kInvalidArgument, "groups must be positive");
  std::mt19937_64 gen(seed);
  GeneratedTable t;
  t.schema = Schema({{"id", Type::kInt64}, {"k", Type::kInt64}, {"v", Type::kInt64}, {"s", Type::kUtf8}});
  t.rows.reserve(rows);
  for (size_t i = 0; i < rows; ++i) {
    Row r;
    r.emplace_back(static_cast<int64_t>(i));
    r.emplace_back(static_cast<int64_t>(uniform_below(gen, groups)));
    r.emplace_back(static_cast<int64_t>(uniform_below(gen, 1000)));
    r.emplace_back(words[uniform_below(gen, words.size())]);
    t.rows.push_back(std::move(r));
  }
  return t;
}

GeneratedTable generate_separable(size_t rows, uint64_t seed) {
  std::mt19937_64 gen(seed);
  GeneratedTable t;
  t.schema = Schema({{"x1", Type::kFloat64}, {"x2", Type::kFloat64}, {"label", Type::kInt64}});
  t.rows.reserve(rows);
  for (size_t i = 0; i < rows; ++i) {
    int64_t label = static_cast<int64_t>(uniform_below(gen, 2));
    double c = label ? 0.5 : -0.5;
    Row r;
    r.emplace_back(c + (uniform_unit(gen) - 0.5) * 0.8);
    r.emplace_back(c + (uniform_unit(gen) - 0.5) * 0.8);
    r.emplace_back(label);
    t.rows.push_back(std::move(r));
  }
  return t;
}

GeneratedTable generate_blobs(size_t rows, size_t clusters, double spread, uint64_t seed) {
  if (clusters == 0) fail(ErrorCode::kInvalidArgument, "clusters must be positive");
  std::mt19937_64 gen(seed);
  GeneratedTable t;
  t.schema = Schema({{"x", Type::kFloat64}, {"y", Type::kFloat64}, {"cluster", Type::kInt64}});
  t.rows.reserve(rows);
  for (size_t i = 0; i < rows; ++i) {
    size_t c = uniform_below(gen, clusters);
    double cx = 20.0 * static_cast<double>(c);
    double cy = -20.0 * static_cast<double>(c);
    Row r;
    r.emplace_back(cx + (2 * uniform_unit(gen) - 1) * spread);
    r.emplace_back(cy + (2 * uniform_unit(gen) - 1) * spread);
    r.emplace_back(static_cast<int64_t>(c));
    t.rows.push_back(std::move(r));
  }
  return t;
}

namespace {

class Options {
 public:
  explicit Options(const std::map<std::string, std::string>& o) : o_(o) {}

  uint64_t integer(const std::string& key, uint64_t fallback) const {
    auto it = o_.find(key);
    if (it == o_.end()) return fallback;
    uint64_t v = 0;
    auto [p, ec] = std::from_chars(it->second.data(), it->second.data() + it->second.size(), v);
    if (ec != std::errc() || p != it->second.data() + it->second.size()) {
      fail(ErrorCode::kInvalidArgument, key + " must be a non-negative integer");
    }
    return v;
  }
  double real(const std::string& key, double fallback) const {
    auto it = o_.find(key);
    if (it == o_.end()) return fallback;
    try {
      size_t used = 0;
      double v = std::stod(it->second, &used);
      if (used == it->second.size()) return v;
    } catch (const std::exception&) {
    }
    fail(ErrorCode::kInvalidArgument, key + " must be a number");
  }

 private:
  const std::map<std::string, std::string>& o_;
};

}  // namespace

GeneratedTable generate(const std::string& kind, const std::map<std::string, std::string>& options,
                        uint64_t default_seed) {
  Options o(options);
  uint64_t seed = o.integer("seed", default_seed);
  if (kind == "lineitem") return generate_lineitem(o.integer("rows", 100000), seed);
  if (kind == "daily") return generate_daily(o.integer("days", 30), o.integer("per_day", 1000), seed);
  if (kind == "keyed") return generate_keyed(o.integer("rows", 10000), o.integer("groups", 100), seed);
  if (kind == "separable") return generate_separable(o.integer("rows", 2000), seed);
  if (kind == "blobs") {
    return generate_blobs(o.integer("rows", 1000), o.integer("clusters", 3), o.real("spread", 1.0), seed);
  }
  fail(ErrorCode::kInvalidArgument, "unknown generator '" + kind + "' (lineitem, daily, keyed, separable, blobs)");
}

}  // namespace ember::session
