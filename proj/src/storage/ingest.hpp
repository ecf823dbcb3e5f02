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

#include <string>
#include <string_view>

#include "common/value.hpp"

namespace ember::storage {

enum class SourceFormat { kCsv, kJsonLines };

// Picks a format from the file extension (.csv, .jsonl, .json).
SourceFormat format_for_path(std::string_view path);

// Converts one text field to `type`; throws SchemaViolation with `context`.
Value coerce_text(std::string_view text, Type type, const std::string& context);

// CSV with a mandatory header row. Header names are matched to the schema
// case-insensitively and may appear in any order. An unquoted empty field is
// NULL; a quoted empty field is the empty string.
RowBatch parse_csv(std::string_view text, const Schema& schema);

// One flat JSON object per line. Missing keys and JSON null become NULL.
RowBatch parse_jsonl(std::string_view text, const Schema& schema);

RowBatch parse_source(std::string_view text, SourceFormat format, const Schema& schema);

std::string read_file(const std::string& path);

}  // namespace ember::storage
