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

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "session/session.hpp"
#include "sql/reference.hpp"

namespace ember::testing {

// Two random tables sharing a join domain: facts(id, k, v, f, s, d, flag)
// and dims(id, name, w, g). Reals are multiples of 1/64 so sums are exact
// in any order. About 5% of nullable values are NULL.
sql::RefTables random_tables(uint64_t seed, size_t max_fact_rows, size_t max_dim_rows);

struct GeneratedQuery {
  std::string sql;
  // ORDER BY covers every output column, so row order is fixed.
  bool ordered = false;
};

// A query in the supported subset over the tables above.
GeneratedQuery random_query(std::mt19937_64& gen);

// Loads every table into the session, optionally as cached columnar partitions.
void load_tables(session::Session& s, const sql::RefTables& tables, bool cache = false);

// Engine result of a SELECT.
RowBatch engine_rows(session::Session& s, const std::string& query);
RowBatch reference_rows(const sql::RefTables& tables, const std::string& query);

// Equal as lists (ordered) or as multisets. Values compare by type and
// value; Int64 3 and Float64 3.0 differ.
bool same_rows(RowBatch a, RowBatch b, bool ordered);
std::string format_rows(const RowBatch& rows, size_t limit = 20);

}  // namespace ember::testing
