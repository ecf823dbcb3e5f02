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

#include "common/value.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <set>

#include "common/error.hpp"

namespace ember {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kSyntax: return "SyntaxError";
    case ErrorCode::kPlan: return "PlanError";
    case ErrorCode::kTypeMismatch: return "TypeMismatch";
    case ErrorCode::kSchemaViolation: return "SchemaViolation";
    case ErrorCode::kCorruptChunk: return "CorruptChunk";
    case ErrorCode::kSourceUnavailable: return "SourceUnavailable";
    case ErrorCode::kUnrecoverable: return "Unrecoverable";
    case ErrorCode::kScratchIo: return "ScratchIOError";
    case ErrorCode::kFieldNotFound: return "FieldNotFound";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kInvalidK: return "InvalidK";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kNotFound: return "NotFound";
    case ErrorCode::kCycleDetected: return "CycleDetected";
    case ErrorCode::kCancelled: return "Cancelled";
    case ErrorCode::kIo: return "IOError";
    case ErrorCode::kInternal: return "InternalError";
  }
  return "Error";
}

const char* type_name(Type type) {
  switch (type) {
    case Type::kInt64: return "int64";
    case Type::kFloat64: return "float64";
    case Type::kBoolean: return "boolean";
    case Type::kUtf8: return "string";
    case Type::kDate: return "date";
  }
  return "?";
}

std::optional<Type> parse_type(std::string_view text) {
  std::string t = to_lower(text);
  if (t == "int64" || t == "bigint" || t == "int" || t == "integer") return Type::kInt64;
  if (t == "float64" || t == "double" || t == "float" || t == "real") return Type::kFloat64;
  if (t == "boolean" || t == "bool") return Type::kBoolean;
  if (t == "string" || t == "utf8" || t == "varchar" || t == "text") return Type::kUtf8;
  if (t == "date") return Type::kDate;
  return std::nullopt;
}

namespace {

// Civil-calendar conversions after H. Hinnant's public-domain algorithms.
int32_t days_from_civil(int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return static_cast<int32_t>(era * 146097 + static_cast<int64_t>(doe) - 719468);
}

void civil_from_days(int64_t z, int64_t& y, unsigned& m, unsigned& d) {
  z += 719468;
  const int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  y = static_cast<int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = doy - (153 * mp + 2) / 5 + 1;
  m = mp < 10 ? mp + 3 : mp - 9;
  y += m <= 2;
}

int type_rank(const Value& v) {
  // Numerics share a rank so Int64 and Float64 compare by magnitude.
  switch (v.type()) {
    case Type::kBoolean: return 1;
    case Type::kInt64:
    case Type::kFloat64: return 2;
    case Type::kDate: return 3;
    case Type::kUtf8: return 4;
  }
  return 5;
}

int cmp_double(double a, double b) {
  if (a < b) return -1;
  if (a > b) return 1;
  if (a == b) return 0;
  // NaN sorts last, NaN == NaN.
  bool an = std::isnan(a), bn = std::isnan(b);
  return an == bn ? 0 : (an ? 1 : -1);
}

}  // namespace

std::optional<Date> parse_date(std::string_view text) {
  int y = 0;
  unsigned m = 0, d = 0;
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  auto num = [&](size_t pos, size_t len, auto& out) {
    auto r = std::from_chars(text.data() + pos, text.data() + pos + len, out);
    return r.ec == std::errc() && r.ptr == text.data() + pos + len;
  };
  if (!num(0, 4, y) || !num(5, 2, m) || !num(8, 2, d)) return std::nullopt;
  if (m < 1 || m > 12 || d < 1 || d > 31) return std::nullopt;
  static constexpr unsigned kDays[] = {31, 29, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  bool leap = (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
  if (d > kDays[m - 1] || (m == 2 && d == 29 && !leap)) return std::nullopt;
  return Date{days_from_civil(y, m, d)};
}

std::string format_date(Date date) {
  int64_t y;
  unsigned m, d;
  civil_from_days(date.days, y, m, d);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04lld-%02u-%02u", static_cast<long long>(y), m, d);
  return buf;
}

Type Value::type() const {
  switch (v_.index()) {
    case 1: return Type::kInt64;
    case 2: return Type::kFloat64;
    case 3: return Type::kBoolean;
    case 4: return Type::kUtf8;
    case 5: return Type::kDate;
  }
  fail(ErrorCode::kInternal, "type() of NULL value");
}

double Value::numeric() const {
  if (auto* i = std::get_if<int64_t>(&v_)) return static_cast<double>(*i);
  if (auto* d = std::get_if<double>(&v_)) return *d;
  fail(ErrorCode::kTypeMismatch, "value is not numeric");
}

bool Value::operator==(const Value& other) const {
  if (v_.index() != other.v_.index()) return false;
  if (auto* d = std::get_if<double>(&v_)) {
    double o = std::get<double>(other.v_);
    return *d == o || (std::isnan(*d) && std::isnan(o));
  }
  return v_ == other.v_;
}

int compare_values(const Value& a, const Value& b) {
  if (a.is_null() || b.is_null()) return static_cast<int>(!a.is_null()) - static_cast<int>(!b.is_null());
  int ra = type_rank(a), rb = type_rank(b);
  if (ra != rb) return ra < rb ? -1 : 1;
  switch (a.type()) {
    case Type::kBoolean:
      return static_cast<int>(a.as_bool()) - static_cast<int>(b.as_bool());
    case Type::kInt64:
    case Type::kFloat64:
      if (a.type() == Type::kInt64 && b.type() == Type::kInt64) {
        return a.as_int() < b.as_int() ? -1 : (a.as_int() > b.as_int() ? 1 : 0);
      }
      return cmp_double(a.numeric(), b.numeric());
    case Type::kDate:
      return a.as_date() < b.as_date() ? -1 : (b.as_date() < a.as_date() ? 1 : 0);
    case Type::kUtf8: {
      int c = a.as_string().compare(b.as_string());
      return c < 0 ? -1 : (c > 0 ? 1 : 0);
    }
  }
  return 0;
}

std::string to_string(const Value& v) {
  if (v.is_null()) return "";
  switch (v.type()) {
    case Type::kInt64: return std::to_string(v.as_int());
    case Type::kFloat64: {
      char buf[64];
      auto r = std::to_chars(buf, buf + sizeof(buf), v.as_double());
      return std::string(buf, r.ptr);
    }
    case Type::kBoolean: return v.as_bool() ? "true" : "false";
    case Type::kUtf8: return v.as_string();
    case Type::kDate: return format_date(v.as_date());
  }
  return "";
}

std::string to_literal(const Value& v) {
  if (v.is_null()) return "NULL";
  if (v.type() == Type::kUtf8) {
    std::string out = "'";
    for (char c : v.as_string()) {
      if (c == '\'') out += '\'';
      out += c;
    }
    return out + "'";
  }
  if (v.type() == Type::kDate) return "DATE '" + format_date(v.as_date()) + "'";
  return to_string(v);
}

size_t value_byte_size(const Value& v) {
  if (v.is_null()) return 1;
  switch (v.type()) {
    case Type::kInt64:
    case Type::kFloat64: return 8;
    case Type::kBoolean: return 1;
    case Type::kDate: return 4;
    case Type::kUtf8: return 4 + v.as_string().size();
  }
  return 0;
}

std::optional<size_t> Schema::find(std::string_view name) const {
  for (size_t i = 0; i < columns_.size(); ++i) {
    if (iequals(columns_[i].name, name)) return i;
  }
  return std::nullopt;
}

void Schema::validate() const {
  if (columns_.empty()) fail(ErrorCode::kSchemaViolation, "schema has no columns");
  std::set<std::string> seen;
  for (const auto& c : columns_) {
    if (c.name.empty()) fail(ErrorCode::kSchemaViolation, "empty column name");
    if (!seen.insert(to_lower(c.name)).second) {
      fail(ErrorCode::kSchemaViolation, "duplicate column name '" + c.name + "'");
    }
  }
}

std::string Schema::to_string() const {
  std::string out;
  for (size_t i = 0; i < columns_.size(); ++i) {
    if (i) out += ',';
    out += columns_[i].name;
    out += ':';
    out += type_name(columns_[i].type);
  }
  return out;
}

Schema Schema::parse(std::string_view text) {
  std::vector<Column> cols;
  size_t pos = 0;
  while (pos <= text.size()) {
    size_t comma = text.find(',', pos);
    std::string_view item = text.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    size_t colon = item.find(':');
    if (colon == std::string_view::npos) {
      fail(ErrorCode::kInvalidArgument, "schema item '" + std::string(item) + "' is not name:type");
    }
    auto type = parse_type(item.substr(colon + 1));
    if (!type) {
      fail(ErrorCode::kInvalidArgument, "unknown type in '" + std::string(item) + "'");
    }
    cols.push_back({std::string(item.substr(0, colon)), *type});
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  Schema schema(std::move(cols));
  schema.validate();
  return schema;
}

bool Schema::operator==(const Schema& other) const {
  if (size() != other.size()) return false;
  for (size_t i = 0; i < size(); ++i) {
    if (!iequals(columns_[i].name, other.columns_[i].name) ||
        columns_[i].type != other.columns_[i].type) {
      return false;
    }
  }
  return true;
}

int compare_rows(const Row& a, const Row& b) {
  size_t n = std::min(a.size(), b.size());
  for (size_t i = 0; i < n; ++i) {
    if (int c = compare_values(a[i], b[i])) return c;
  }
  return a.size() < b.size() ? -1 : (a.size() > b.size() ? 1 : 0);
}

size_t row_byte_size(const Row& row) {
  size_t n = 0;
  for (const auto& v : row) n += value_byte_size(v);
  return n;
}

bool iequals(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i) {
    char x = a[i], y = b[i];
    if (x >= 'A' && x <= 'Z') x = static_cast<char>(x - 'A' + 'a');
    if (y >= 'A' && y <= 'Z') y = static_cast<char>(y - 'A' + 'a');
    if (x != y) return false;
  }
  return true;
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

std::string to_upper(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
  }
  return out;
}

}  // namespace ember
