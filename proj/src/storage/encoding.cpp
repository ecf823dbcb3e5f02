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

#include "storage/encoding.hpp"

#include <bit>
#include <map>
#include <unordered_map>

#include "common/codec.hpp"
#include "common/error.hpp"

namespace ember::storage {

namespace {

TypedVector empty_vector(Type type) {
  switch (type) {
    case Type::kInt64: return std::vector<int64_t>{};
    case Type::kFloat64: return std::vector<double>{};
    case Type::kBoolean: return std::vector<uint8_t>{};
    case Type::kUtf8: return std::vector<std::string>{};
    case Type::kDate: return std::vector<int32_t>{};
  }
  return std::vector<int64_t>{};
}

Type vector_type(const TypedVector& v) {
  static constexpr Type kTypes[] = {Type::kInt64, Type::kFloat64, Type::kBoolean, Type::kUtf8,
                                    Type::kDate};
  return kTypes[v.index()];
}

void push_value(TypedVector& out, const Value& v) {
  std::visit(
      [&](auto& vec) {
        using T = typename std::decay_t<decltype(vec)>::value_type;
        if constexpr (std::is_same_v<T, int64_t>) vec.push_back(v.as_int());
        else if constexpr (std::is_same_v<T, double>) vec.push_back(v.as_double());
        else if constexpr (std::is_same_v<T, uint8_t>) vec.push_back(v.as_bool() ? 1 : 0);
        else if constexpr (std::is_same_v<T, std::string>) vec.push_back(v.as_string());
        else vec.push_back(v.as_date().days);
      },
      out);
}

Value value_at(const TypedVector& vec, size_t i) {
  return std::visit(
      [&](const auto& v) -> Value {
        using T = typename std::decay_t<decltype(v)>::value_type;
        if constexpr (std::is_same_v<T, int64_t>) return Value(v[i]);
        else if constexpr (std::is_same_v<T, double>) return Value(v[i]);
        else if constexpr (std::is_same_v<T, uint8_t>) return Value(v[i] != 0);
        else if constexpr (std::is_same_v<T, std::string>) return Value(v[i]);
        else return Value(Date{v[i]});
      },
      vec);
}

size_t typed_bytes(const TypedVector& vec) {
  return std::visit(
      [](const auto& v) -> size_t {
        using T = typename std::decay_t<decltype(v)>::value_type;
        if constexpr (std::is_same_v<T, std::string>) {
          size_t n = 0;
          for (const auto& s : v) n += 4 + s.size();
          return n;
        } else {
          return v.size() * sizeof(T);
        }
      },
      vec);
}

int64_t integral(const Value& v) {
  return v.type() == Type::kDate ? v.as_date().days : v.as_int();
}

size_t code_width(size_t dict_size) {
  if (dict_size <= 256) return 1;
  if (dict_size <= 65536) return 2;
  return 4;
}

size_t packed_words(size_t n, unsigned width) { return (n * width + 63) / 64; }

size_t packed_bytes(size_t n, unsigned width) { return 8 + 1 + 8 * packed_words(n, width); }

unsigned width_for_range(uint64_t range) {
  return std::max(1u, static_cast<unsigned>(64 - std::countl_zero(range)));
}

bool supports_packing(Type t) { return t == Type::kInt64 || t == Type::kDate; }

std::vector<Value> non_null(std::span<const Value> values, Type type,
                            std::vector<uint64_t>& validity) {
  std::vector<Value> out;
  out.reserve(values.size());
  bool any_null = false;
  std::vector<uint64_t> bits((values.size() + 63) / 64, 0);
  for (size_t i = 0; i < values.size(); ++i) {
    const Value& v = values[i];
    if (v.is_null()) {
      any_null = true;
      continue;
    }
    if (v.type() != type) {
      fail(ErrorCode::kTypeMismatch, "row " + std::to_string(i) + ": expected " +
                                         type_name(type) + ", got " + type_name(v.type()));
    }
    bits[i / 64] |= uint64_t{1} << (i % 64);
    out.push_back(v);
  }
  if (any_null) validity = std::move(bits);
  return out;
}

Payload build_payload(const std::vector<Value>& vals, Type type, EncodingKind kind) {
  switch (kind) {
    case EncodingKind::kPlain: {
      PlainPayload p{empty_vector(type)};
      for (const auto& v : vals) push_value(p.values, v);
      return p;
    }
    case EncodingKind::kDictionary: {
      DictionaryPayload p{empty_vector(type), {}};
      std::string key;
      std::unordered_map<std::string, uint32_t> index;
      p.codes.reserve(vals.size());
      for (const auto& v : vals) {
        key.clear();
        append_canonical(key, v);
        auto [it, inserted] = index.emplace(key, static_cast<uint32_t>(index.size()));
        if (inserted) push_value(p.dictionary, v);
        p.codes.push_back(it->second);
      }
      return p;
    }
    case EncodingKind::kRunLength: {
      RunLengthPayload p{empty_vector(type), {}};
      for (size_t i = 0; i < vals.size(); ++i) {
        if (i > 0 && vals[i] == vals[i - 1]) {
          ++p.lengths.back();
        } else {
          push_value(p.values, vals[i]);
          p.lengths.push_back(1);
        }
      }
      return p;
    }
    case EncodingKind::kBitPacked: {
      if (!supports_packing(type)) {
        fail(ErrorCode::kInvalidArgument, std::string("cannot bit-pack ") + type_name(type));
      }
      BitPackedPayload p;
      if (vals.empty()) return p;
      int64_t lo = integral(vals[0]), hi = lo;
      for (const auto& v : vals) {
        lo = std::min(lo, integral(v));
        hi = std::max(hi, integral(v));
      }
      p.base = lo;
      unsigned w = width_for_range(static_cast<uint64_t>(hi) - static_cast<uint64_t>(lo));
      p.bit_width = static_cast<uint8_t>(w);
      p.words.assign(packed_words(vals.size(), w), 0);
      for (size_t i = 0; i < vals.size(); ++i) {
        uint64_t slot = static_cast<uint64_t>(integral(vals[i])) - static_cast<uint64_t>(lo);
        size_t bit = i * w;
        size_t word = bit / 64, shift = bit % 64;
        p.words[word] |= slot << shift;
        if (shift + w > 64) p.words[word + 1] |= slot >> (64 - shift);
      }
      return p;
    }
  }
  return PlainPayload{empty_vector(type)};
}

void check_vector(const TypedVector& v, Type type) {
  if (vector_type(v) != type) fail(ErrorCode::kCorruptChunk, "payload type disagrees with chunk");
}

}  // namespace

const char* encoding_name(EncodingKind kind) {
  switch (kind) {
    case EncodingKind::kPlain: return "plain";
    case EncodingKind::kDictionary: return "dictionary";
    case EncodingKind::kRunLength: return "run_length";
    case EncodingKind::kBitPacked: return "bit_packed";
  }
  return "?";
}

size_t typed_size(const TypedVector& v) {
  return std::visit([](const auto& x) { return x.size(); }, v);
}

size_t ColumnChunk::payload_bytes() const {
  return std::visit(
      [](const auto& p) -> size_t {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, PlainPayload>) {
          return typed_bytes(p.values);
        } else if constexpr (std::is_same_v<P, DictionaryPayload>) {
          return typed_bytes(p.dictionary) + p.codes.size() * code_width(typed_size(p.dictionary));
        } else if constexpr (std::is_same_v<P, RunLengthPayload>) {
          return typed_bytes(p.values) + 4 * p.lengths.size();
        } else {
          return 9 + 8 * p.words.size();
        }
      },
      payload);
}

size_t ColumnChunk::total_bytes() const { return payload_bytes() + 8 * validity.size(); }

size_t plain_payload_bytes(std::span<const Value> values, Type type) {
  (void)type;
  size_t n = 0;
  for (const auto& v : values) {
    if (!v.is_null()) n += value_byte_size(v);
  }
  return n;
}

ColumnProfile profile_column(std::span<const Value> values, Type type) {
  ColumnProfile p;
  p.type = type;
  std::map<Value, size_t, ValueLess> distinct;
  const Value* prev = nullptr;
  int64_t lo = 0, hi = 0;
  for (const auto& v : values) {
    if (v.is_null()) continue;
    ++p.row_count;
    p.value_bytes += value_byte_size(v);
    distinct.emplace(v, 0);
    if (!prev || !(*prev == v)) ++p.run_count;
    if (supports_packing(type)) {
      int64_t x = integral(v);
      if (!prev) lo = hi = x;
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
    prev = &v;
  }
  p.distinct_count = distinct.size();
  if (supports_packing(type) && p.row_count > 0) {
    p.packed_width = width_for_range(static_cast<uint64_t>(hi) - static_cast<uint64_t>(lo));
  }
  return p;
}

EncodingKind choose_encoding(const ColumnProfile& p, double max_run_savings) {
  const size_t n = p.row_count;
  if (n == 0) return EncodingKind::kPlain;
  const bool dict_ok = p.distinct_count <= kDictionaryThreshold;
  if (static_cast<double>(p.run_count) <= max_run_savings * static_cast<double>(n)) {
    // Few runs. A dictionary can still be smaller when values are wide and
    // runs short, so compare estimated payloads; ties keep run-length.
    const bool dict_candidate = dict_ok && (p.type == Type::kUtf8 || p.type == Type::kInt64);
    const double w = p.value_bytes ? static_cast<double>(p.value_bytes) / static_cast<double>(n) : 8.0;
    const double rle = static_cast<double>(p.run_count) * (w + 4);
    const double dict = static_cast<double>(p.distinct_count) * w + static_cast<double>(n * code_width(p.distinct_count));
    if (!dict_candidate || rle <= dict) return EncodingKind::kRunLength;
  }
  if (p.type == Type::kUtf8 && dict_ok) return EncodingKind::kDictionary;

  if (supports_packing(p.type) && p.packed_width) {
    const size_t width = p.type == Type::kDate ? 4 : 8;
    const size_t plain = n * width;
    const size_t packed = packed_bytes(n, *p.packed_width);
    // Dictionary size estimated with a full-width dictionary.
    const size_t dict = p.distinct_count * width + n * code_width(p.distinct_count);
    const bool pack_ok = *p.packed_width < 64 && packed < plain;
    if (pack_ok && (!dict_ok || packed <= dict)) return EncodingKind::kBitPacked;
    if (p.type == Type::kInt64 && dict_ok && dict < plain) return EncodingKind::kDictionary;
    if (pack_ok) return EncodingKind::kBitPacked;
  }
  return EncodingKind::kPlain;
}

ColumnChunk encode_column(std::span<const Value> values, Type type, double max_run_savings) {
  ColumnChunk chunk;
  chunk.type = type;
  chunk.row_count = values.size();
  std::vector<Value> vals = non_null(values, type, chunk.validity);
  EncodingKind kind = choose_encoding(profile_column(vals, type), max_run_savings);
  chunk.payload = build_payload(vals, type, kind);
  return chunk;
}

ColumnChunk encode_column_as(std::span<const Value> values, Type type, EncodingKind kind) {
  ColumnChunk chunk;
  chunk.type = type;
  chunk.row_count = values.size();
  std::vector<Value> vals = non_null(values, type, chunk.validity);
  chunk.payload = build_payload(vals, type, kind);
  return chunk;
}

std::vector<Value> decode_column(const ColumnChunk& chunk) {
  size_t valid = chunk.row_count;
  if (!chunk.validity.empty()) {
    if (chunk.validity.size() != (chunk.row_count + 63) / 64) {
      fail(ErrorCode::kCorruptChunk, "validity bitmap size disagrees with row count");
    }
    valid = 0;
    for (size_t w = 0; w < chunk.validity.size(); ++w) {
      uint64_t bits = chunk.validity[w];
      size_t tail = chunk.row_count - w * 64;
      if (tail < 64 && (bits >> tail) != 0) fail(ErrorCode::kCorruptChunk, "validity bits past end");
      valid += std::popcount(bits);
    }
  }

  std::vector<Value> vals;
  vals.reserve(valid);
  std::visit(
      [&](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, PlainPayload>) {
          check_vector(p.values, chunk.type);
          if (typed_size(p.values) != valid) fail(ErrorCode::kCorruptChunk, "plain length mismatch");
          for (size_t i = 0; i < valid; ++i) vals.push_back(value_at(p.values, i));
        } else if constexpr (std::is_same_v<P, DictionaryPayload>) {
          check_vector(p.dictionary, chunk.type);
          if (p.codes.size() != valid) fail(ErrorCode::kCorruptChunk, "code count mismatch");
          size_t dict = typed_size(p.dictionary);
          for (uint32_t c : p.codes) {
            if (c >= dict) fail(ErrorCode::kCorruptChunk, "dictionary code out of range");
            vals.push_back(value_at(p.dictionary, c));
          }
        } else if constexpr (std::is_same_v<P, RunLengthPayload>) {
          check_vector(p.values, chunk.type);
          if (typed_size(p.values) != p.lengths.size()) {
            fail(ErrorCode::kCorruptChunk, "run value/length count mismatch");
          }
          size_t total = 0;
          for (size_t r = 0; r < p.lengths.size(); ++r) {
            if (p.lengths[r] == 0) fail(ErrorCode::kCorruptChunk, "zero-length run");
            total += p.lengths[r];
            if (total > valid) fail(ErrorCode::kCorruptChunk, "runs exceed row count");
            Value v = value_at(p.values, r);
            for (uint32_t k = 0; k < p.lengths[r]; ++k) vals.push_back(v);
          }
          if (total != valid) fail(ErrorCode::kCorruptChunk, "runs do not cover row count");
        } else {
          if (!supports_packing(chunk.type)) fail(ErrorCode::kCorruptChunk, "bit-packed non-integer");
          unsigned w = p.bit_width;
          if (w < 1 || w > 64) fail(ErrorCode::kCorruptChunk, "bit width out of range");
          if (p.words.size() != packed_words(valid, w)) {
            fail(ErrorCode::kCorruptChunk, "packed word count mismatch");
          }
          uint64_t mask = w == 64 ? ~uint64_t{0} : (uint64_t{1} << w) - 1;
          for (size_t i = 0; i < valid; ++i) {
            size_t bit = i * w;
            size_t word = bit / 64, shift = bit % 64;
            uint64_t slot = p.words[word] >> shift;
            if (shift + w > 64) slot |= p.words[word + 1] << (64 - shift);
            slot &= mask;
            auto x = static_cast<int64_t>(static_cast<uint64_t>(p.base) + slot);
            if (chunk.type == Type::kDate) {
              vals.emplace_back(Date{static_cast<int32_t>(x)});
            } else {
              vals.emplace_back(x);
            }
          }
        }
      },
      chunk.payload);

  if (chunk.validity.empty()) return vals;
  std::vector<Value> out(chunk.row_count);
  size_t next = 0;
  for (size_t i = 0; i < chunk.row_count; ++i) {
    if (chunk.validity[i / 64] >> (i % 64) & 1) out[i] = std::move(vals[next++]);
  }
  return out;
}

}  // namespace ember::storage
