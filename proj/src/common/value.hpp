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

#include <compare>
#include <concepts>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace ember {

enum class Type : uint8_t { kInt64, kFloat64, kBoolean, kUtf8, kDate };

const char* type_name(Type type);
// Accepts int64/bigint/int, float64/double, boolean/bool, string/utf8, date.
std::optional<Type> parse_type(std::string_view text);

// Days since 1970-01-01.
struct Date {
  int32_t days = 0;
  auto operator<=>(const Date&) const = default;
};

std::optional<Date> parse_date(std::string_view text);
std::string format_date(Date date);

// A nullable scalar. Ordering is total: NULL sorts before every non-null
// value, numerics compare by magnitude across Int64/Float64, strings compare
// byte-wise, and values of unrelated types order by type tag.
class Value {
 public:
  Value() = default;
  template <std::integral T>
    requires(!std::same_as<T, bool>)
  explicit Value(T v) : v_(static_cast<int64_t>(v)) {}
  explicit Value(double v) : v_(v) {}
  explicit Value(bool v) : v_(v) {}
  explicit Value(std::string v) : v_(std::move(v)) {}
  explicit Value(const char* v) : v_(std::string(v)) {}
  explicit Value(Date v) : v_(v) {}

  static Value null() { return Value(); }
  static Value int64(int64_t v) { return Value(v); }
  static Value float64(double v) { return Value(v); }
  static Value boolean(bool v) { return Value(v); }
  static Value string(std::string v) { return Value(std::move(v)); }
  static Value date(int32_t days) { return Value(Date{days}); }

  bool is_null() const { return std::holds_alternative<std::monostate>(v_); }
  // Undefined for NULL.
  Type type() const;

  int64_t as_int() const { return std::get<int64_t>(v_); }
  double as_double() const { return std::get<double>(v_); }
  bool as_bool() const { return std::get<bool>(v_); }
  const std::string& as_string() const { return std::get<std::string>(v_); }
  Date as_date() const { return std::get<Date>(v_); }

  // Int64 and Float64 widen to double; others throw.
  double numeric() const;

  bool operator==(const Value& other) const;

 private:
  std::variant<std::monostate, int64_t, double, bool, std::string, Date> v_;
};

int compare_values(const Value& a, const Value& b);

struct ValueLess {
  bool operator()(const Value& a, const Value& b) const {
    return compare_values(a, b) < 0;
  }
};

// Text used in CSV output and error messages. NULL renders as empty.
std::string to_string(const Value& v);
// Like to_string but renders NULL as "NULL" and quotes strings.
std::string to_literal(const Value& v);

// Approximate in-memory footprint used by statistics and shuffle accounting.
size_t value_byte_size(const Value& v);

struct Column {
  std::string name;
  Type type;
};

class Schema {
 public:
  Schema() = default;
  explicit Schema(std::vector<Column> columns) : columns_(std::move(columns)) {}

  size_t size() const { return columns_.size(); }
  bool empty() const { return columns_.empty(); }
  const Column& operator[](size_t i) const { return columns_[i]; }
  const std::vector<Column>& columns() const { return columns_; }
  auto begin() const { return columns_.begin(); }
  auto end() const { return columns_.end(); }

  // Case-insensitive lookup.
  std::optional<size_t> find(std::string_view name) const;
  // Throws SchemaViolation on empty schema or duplicate names.
  void validate() const;

  std::string to_string() const;
  // Parses "name:type,name:type".
  static Schema parse(std::string_view text);

  bool operator==(const Schema& other) const;

 private:
  std::vector<Column> columns_;
};

using Row = std::vector<Value>;
using RowBatch = std::vector<Row>;
using RowBatchPtr = std::shared_ptr<const RowBatch>;

int compare_rows(const Row& a, const Row& b);

struct RowLess {
  bool operator()(const Row& a, const Row& b) const {
    return compare_rows(a, b) < 0;
  }
};

size_t row_byte_size(const Row& row);

bool iequals(std::string_view a, std::string_view b);
std::string to_lower(std::string_view s);
std::string to_upper(std::string_view s);

}  // namespace ember
