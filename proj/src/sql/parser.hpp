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
#include <vector>

#include "sql/ast.hpp"

namespace ember::sql {

// Parses one statement; a trailing ';' is optional. Throws Syntax with the
// byte offset of the offending token.
Statement parse(std::string_view text);

// Splits a script into statements at ';' outside quotes and comments. Each
// piece keeps its offset into the script.
struct ScriptPiece {
  std::string text;
  size_t offset = 0;
};
std::vector<ScriptPiece> split_statements(std::string_view script);

bool is_reserved(std::string_view word);

}  // namespace ember::sql
