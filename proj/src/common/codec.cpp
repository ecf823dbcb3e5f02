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

#include "common/codec.hpp"

#include <bit>
#include <cmath>
#include <limits>
#include <cstring>

#include "common/error.hpp"

namespace ember {

namespace {

enum Tag : uint8_t { kNull = 0, kInt = 1, kFloat = 2, kBool = 3, kStr = 4, kDate = 5 };

void put_fixed(std::string& out, uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

uint64_t get_fixed(std::string_view in, size_t& pos, int bytes) {
  if (pos + bytes > in.size()) fail(ErrorCode::kCorruptChunk, "truncated row data");
  uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) {
    v |= static_cast<uint64_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  }
  pos += bytes;
  return v;
}

// -0.0 equals 0.0 and every NaN equals every other, so each gets one byte
// form; otherwise equal keys could route to different reducers.
double canonical_double(double d) {
  if (d == 0.0) return 0.0;
  if (std::isnan(d)) return std::numeric_limits<double>::quiet_NaN();
  return d;
}

}  // namespace

static void append_tagged(std::string& out, const Value& v, bool normalize) {
  if (v.is_null()) {
    out.push_back(static_cast<char>(kNull));
    return;
  }
  switch (v.type()) {
    case Type::kInt64:
      out.push_back(static_cast<char>(kInt));
      put_fixed(out, static_cast<uint64_t>(v.as_int()), 8);
      break;
    case Type::kFloat64:
      out.push_back(static_cast<char>(kFloat));
      put_fixed(out, std::bit_cast<uint64_t>(normalize ? canonical_double(v.as_double()) : v.as_double()),
                8);
      break;
    case Type::kBoolean:
      out.push_back(static_cast<char>(kBool));
      out.push_back(v.as_bool() ? 1 : 0);
      break;
    case Type::kUtf8:
      out.push_back(static_cast<char>(kStr));
      put_fixed(out, v.as_string().size(), 4);
      out += v.as_string();
      break;
    case Type::kDate:
      out.push_back(static_cast<char>(kDate));
      put_fixed(out, static_cast<uint32_t>(v.as_date().days), 4);
      break;
  }
}

void append_canonical(std::string& out, const Value& v) { append_tagged(out, v, true); }

uint64_t hash_value(const Value& v) {
  std::string buf;
  append_canonical(buf, v);
  return fnv1a(buf);
}

uint64_t hash_values(std::span<const Value> values) {
  std::string buf;
  for (const auto& v : values) append_canonical(buf, v);
  return fnv1a(buf);
}

void put_varint(std::string& out, uint64_t v) {
  while (v >= 0x80) {
    out.push_back(static_cast<char>((v & 0x7f) | 0x80));
    v >>= 7;
  }
  out.push_back(static_cast<char>(v));
}

uint64_t get_varint(std::string_view in, size_t& pos) {
  uint64_t v = 0;
  for (int shift = 0; shift < 64; shift += 7) {
    if (pos >= in.size()) fail(ErrorCode::kCorruptChunk, "truncated varint");
    auto b = static_cast<unsigned char>(in[pos++]);
    v |= static_cast<uint64_t>(b & 0x7f) << shift;
    if (!(b & 0x80)) return v;
  }
  fail(ErrorCode::kCorruptChunk, "varint too long");
}

void encode_row(std::string& out, const Row& row) {
  put_varint(out, row.size());
  for (const auto& v : row) append_tagged(out, v, false);
}

std::string encode_rows(const RowBatch& rows) {
  std::string out;
  put_varint(out, rows.size());
  for (const auto& r : rows) encode_row(out, r);
  return out;
}

RowBatch decode_rows(std::string_view in) {
  size_t pos = 0;
  uint64_t n = get_varint(in, pos);
  RowBatch rows;
  rows.reserve(n);
  for (uint64_t r = 0; r < n; ++r) {
    uint64_t width = get_varint(in, pos);
    Row row;
    row.reserve(width);
    for (uint64_t c = 0; c < width; ++c) {
      if (pos >= in.size()) fail(ErrorCode::kCorruptChunk, "truncated row data");
      auto tag = static_cast<uint8_t>(in[pos++]);
      switch (tag) {
        case kNull: row.emplace_back(); break;
        case kInt: row.emplace_back(static_cast<int64_t>(get_fixed(in, pos, 8))); break;
        case kFloat: row.emplace_back(std::bit_cast<double>(get_fixed(in, pos, 8))); break;
        case kBool: row.emplace_back(get_fixed(in, pos, 1) != 0); break;
        case kStr: {
          auto len = get_fixed(in, pos, 4);
          if (pos + len > in.size()) fail(ErrorCode::kCorruptChunk, "truncated string");
          row.emplace_back(std::string(in.substr(pos, len)));
          pos += len;
          break;
        }
        case kDate:
          row.emplace_back(Date{static_cast<int32_t>(static_cast<uint32_t>(get_fixed(in, pos, 4)))});
          break;
        default: fail(ErrorCode::kCorruptChunk, "unknown value tag");
      }
    }
    rows.push_back(std::move(row));
  }
  if (pos != in.size()) fail(ErrorCode::kCorruptChunk, "trailing bytes after rows");
  return rows;
}

}  // namespace ember
