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

#include "storage/ingest.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "common/error.hpp"

namespace ember::storage {

namespace {

struct CsvField {
  std::string text;
  bool quoted = false;
};

// Splits CSV text into records. Quoted fields may contain separators, doubled
// quotes and line breaks.
std::vector<std::vector<CsvField>> split_csv(std::string_view text) {
  std::vector<std::vector<CsvField>> records;
  std::vector<CsvField> record;
  CsvField field;
  size_t line = 1;
  size_t i = 0;
  bool at_field_start = true;
  auto end_field = [&] {
    record.push_back(std::move(field));
    field = {};
    at_field_start = true;
  };
  auto end_record = [&] {
    end_field();
    // A lone empty field is a blank line.
    if (!(record.size() == 1 && record[0].text.empty() && !record[0].quoted)) {
      records.push_back(std::move(record));
    }
    record.clear();
  };
  while (i < text.size()) {
    char c = text[i];
    if (at_field_start && c == '"') {
      field.quoted = true;
      at_field_start = false;
      ++i;
      for (;;) {
        if (i >= text.size()) {
          fail(ErrorCode::kSchemaViolation, "unterminated quoted field at line " + std::to_string(line));
        }
        if (text[i] == '"') {
          if (i + 1 < text.size() && text[i + 1] == '"') {
            field.text.push_back('"');
            i += 2;
            continue;
          }
          ++i;
          break;
        }
        if (text[i] == '\n') ++line;
        field.text.push_back(text[i++]);
      }
      if (i < text.size() && text[i] != ',' && text[i] != '\n' && text[i] != '\r') {
        fail(ErrorCode::kSchemaViolation, "text after closing quote at line " + std::to_string(line));
      }
      continue;
    }
    at_field_start = false;
    if (c == ',') {
      end_field();
      ++i;
    } else if (c == '\r' || c == '\n') {
      end_record();
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      ++i;
      ++line;
    } else {
      field.text.push_back(c);
      ++i;
    }
  }
  if (!at_field_start || !record.empty()) end_record();
  return records;
}

}  // namespace

SourceFormat format_for_path(std::string_view path) {
  auto ends = [&](std::string_view suffix) {
    return path.size() >= suffix.size() &&
           iequals(path.substr(path.size() - suffix.size()), suffix);
  };
  if (ends(".jsonl") || ends(".json") || ends(".ndjson")) return SourceFormat::kJsonLines;
  return SourceFormat::kCsv;
}

Value coerce_text(std::string_view text, Type type, const std::string& context) {
  auto bad = [&]() -> Value {
    fail(ErrorCode::kSchemaViolation,
         context + ": cannot read '" + std::string(text) + "' as " + type_name(type));
  };
  switch (type) {
    case Type::kInt64: {
      int64_t v = 0;
      auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
      if (ec != std::errc() || p != text.data() + text.size() || text.empty()) return bad();
      return Value(v);
    }
    case Type::kFloat64: {
      double v = 0;
      auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
      if (ec != std::errc() || p != text.data() + text.size() || text.empty()) return bad();
      return Value(v);
    }
    case Type::kBoolean:
      if (iequals(text, "true") || text == "1") return Value(true);
      if (iequals(text, "false") || text == "0") return Value(false);
      return bad();
    case Type::kUtf8:
      return Value(std::string(text));
    case Type::kDate: {
      auto d = parse_date(text);
      if (!d) return bad();
      return Value(*d);
    }
  }
  return bad();
}

RowBatch parse_csv(std::string_view text, const Schema& schema) {
  auto records = split_csv(text);
  if (records.empty()) fail(ErrorCode::kSchemaViolation, "CSV input has no header row");
  const auto& header = records[0];
  if (header.size() != schema.size()) {
    fail(ErrorCode::kSchemaViolation, "CSV header has " + std::to_string(header.size()) +
                                          " columns, schema has " + std::to_string(schema.size()));
  }
  // position in file -> schema column
  std::vector<size_t> target(header.size());
  std::vector<bool> used(schema.size(), false);
  for (size_t i = 0; i < header.size(); ++i) {
    auto idx = schema.find(header[i].text);
    if (!idx || used[*idx]) {
      fail(ErrorCode::kSchemaViolation, "CSV header column '" + header[i].text + "' not in schema");
    }
    used[*idx] = true;
    target[i] = *idx;
  }
  RowBatch rows;
  rows.reserve(records.size() - 1);
  for (size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.size() != header.size()) {
      fail(ErrorCode::kSchemaViolation, "CSV record " + std::to_string(r) + " has " +
                                            std::to_string(rec.size()) + " fields");
    }
    Row row(schema.size());
    for (size_t i = 0; i < rec.size(); ++i) {
      if (rec[i].text.empty() && !rec[i].quoted) continue;
      const auto& col = schema[target[i]];
      row[target[i]] = coerce_text(rec[i].text, col.type,
                                   "CSV record " + std::to_string(r) + " column " + col.name);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

RowBatch parse_jsonl(std::string_view text, const Schema& schema) {
  using nlohmann::json;
  RowBatch rows;
  std::istringstream in{std::string(text)};
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      fail(ErrorCode::kSchemaViolation, "JSON line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!obj.is_object()) {
      fail(ErrorCode::kSchemaViolation, "JSON line " + std::to_string(line_no) + " is not an object");
    }
    Row row(schema.size());
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      auto idx = schema.find(it.key());
      std::string context = "JSON line " + std::to_string(line_no) + " field " + it.key();
      if (!idx) fail(ErrorCode::kSchemaViolation, context + " not in schema");
      const json& v = it.value();
      if (v.is_null()) continue;
      Type t = schema[*idx].type;
      auto mismatch = [&] {
        fail(ErrorCode::kSchemaViolation, context + ": cannot read " + v.dump() + " as " + type_name(t));
      };
      switch (t) {
        case Type::kInt64:
          if (v.is_number_integer()) row[*idx] = Value(v.get<int64_t>());
          else mismatch();
          break;
        case Type::kFloat64:
          if (v.is_number()) row[*idx] = Value(v.get<double>());
          else mismatch();
          break;
        case Type::kBoolean:
          if (v.is_boolean()) row[*idx] = Value(v.get<bool>());
          else mismatch();
          break;
        case Type::kUtf8:
          if (v.is_string()) row[*idx] = Value(v.get<std::string>());
          else mismatch();
          break;
        case Type::kDate:
          if (v.is_string()) row[*idx] = coerce_text(v.get<std::string>(), t, context);
          else mismatch();
          break;
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

RowBatch parse_source(std::string_view text, SourceFormat format, const Schema& schema) {
  return format == SourceFormat::kCsv ? parse_csv(text, schema) : parse_jsonl(text, schema);
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::kIo, "cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace ember::storage
