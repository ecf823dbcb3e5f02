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
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "common/value.hpp"

namespace ember {

// 64-bit FNV-1a.
inline constexpr uint64_t kFnvOffset = 14695981039346656037ull;
inline constexpr uint64_t kFnvPrime = 1099511628211ull;

inline uint64_t fnv1a(std::string_view bytes, uint64_t h = kFnvOffset) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= kFnvPrime;
  }
  return h;
}

// Canonical byte form of a value: a one-byte type tag followed by a
// little-endian payload. Routing and heavy-hitter keys are derived from it,
// so it must never change between runs or hosts.
void append_canonical(std::string& out, const Value& v);

uint64_t hash_value(const Value& v);
// Hash of a tuple; the empty tuple hashes to the FNV offset basis.
uint64_t hash_values(std::span<const Value> values);

// Binary row format used for spill files and byte accounting.
void encode_row(std::string& out, const Row& row);
std::string encode_rows(const RowBatch& rows);
// Throws CorruptChunk on malformed input.
RowBatch decode_rows(std::string_view bytes);

void put_varint(std::string& out, uint64_t v);
// Advances `pos`; throws CorruptChunk on truncation.
uint64_t get_varint(std::string_view in, size_t& pos);

}  // namespace ember
