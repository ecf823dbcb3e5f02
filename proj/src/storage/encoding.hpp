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
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "common/value.hpp"

namespace ember::storage {

// Codes fit in one byte up to this many dictionary entries.
inline constexpr size_t kDictionaryThreshold = 256;
inline constexpr double kDefaultMaxRunSavings = 0.5;

enum class EncodingKind : uint8_t { kPlain, kDictionary, kRunLength, kBitPacked };

const char* encoding_name(EncodingKind kind);

// A column of one primitive type stored as a flat array.
using TypedVector = std::variant<std::vector<int64_t>, std::vector<double>, std::vector<uint8_t>,
                                 std::vector<std::string>, std::vector<int32_t>>;

size_t typed_size(const TypedVector& v);

struct PlainPayload {
  TypedVector values;
};

struct DictionaryPayload {
  TypedVector dictionary;  // distinct values in first-occurrence order
  std::vector<uint32_t> codes;
};

struct RunLengthPayload {
  TypedVector values;
  std::vector<uint32_t> lengths;
};

// Int64 and Date only. Each packed slot holds (value - base).
struct BitPackedPayload {
  int64_t base = 0;
  uint8_t bit_width = 1;
  std::vector<uint64_t> words;
};

using Payload = std::variant<PlainPayload, DictionaryPayload, RunLengthPayload, BitPackedPayload>;

// An encoded column of one partition. Encodings cover the non-null values
// only; the validity bitmap is orthogonal and empty when no value is NULL.
struct ColumnChunk {
  Type type = Type::kInt64;
  size_t row_count = 0;
  std::vector<uint64_t> validity;  // bit i set = row i is non-null
  Payload payload;

  EncodingKind encoding() const { return static_cast<EncodingKind>(payload.index()); }
  // Encoded bytes, excluding the validity bitmap.
  size_t payload_bytes() const;
  size_t total_bytes() const;
};

// Inputs to the per-partition encoding decision, measured over non-null values.
struct ColumnProfile {
  Type type = Type::kInt64;
  size_t row_count = 0;
  size_t distinct_count = 0;
  size_t run_count = 0;
  // Bits needed for (max - min); Int64/Date only.
  std::optional<unsigned> packed_width;
  // Sum of value_byte_size; 0 means unknown (assume 8 bytes per value).
  size_t value_bytes = 0;
};

ColumnProfile profile_column(std::span<const Value> values, Type type);

// Picks one encoding for a column chunk. Run-length wins when runs are few
// enough; dictionary is preferred for low-cardinality strings; integers
// bit-pack when their range is narrow, falling back to a dictionary when that
// is smaller still.
EncodingKind choose_encoding(const ColumnProfile& profile,
                             double max_run_savings = kDefaultMaxRunSavings);

// Throws TypeMismatch when a non-null value does not match `type`.
ColumnChunk encode_column(std::span<const Value> values, Type type,
                          double max_run_savings = kDefaultMaxRunSavings);
// Forces a specific encoding; throws InvalidArgument if it cannot represent
// the column.
ColumnChunk encode_column_as(std::span<const Value> values, Type type, EncodingKind kind);

// Throws CorruptChunk when the chunk violates its invariants.
std::vector<Value> decode_column(const ColumnChunk& chunk);

// Payload size the given encoding would need, computed from the encoded form.
size_t plain_payload_bytes(std::span<const Value> values, Type type);

}  // namespace ember::storage
