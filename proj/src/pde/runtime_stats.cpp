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

#include "pde/runtime_stats.hpp"

#include <algorithm>
#include <cmath>

#include "common/codec.hpp"
#include "common/error.hpp"

namespace ember::pde {

namespace {

int64_t raw_code(uint64_t bytes) {
  return 1 + std::llround(std::log(static_cast<double>(bytes)) / std::log(kSizeBase));
}

std::vector<HeavyHitter> top_k(const std::map<std::string, uint64_t>& counts, size_t k) {
  std::vector<HeavyHitter> out;
  out.reserve(counts.size());
  for (const auto& [key, n] : counts) out.push_back({key, n});
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return a.count > b.count; });
  if (out.size() > k) out.resize(k);
  return out;
}

}  // namespace

uint8_t log_encode_size(uint64_t bytes) {
  if (bytes == 0) return 0;
  return static_cast<uint8_t>(std::clamp<int64_t>(raw_code(bytes), 1, 255));
}

uint64_t decode_size(uint8_t code) {
  if (code == 0) return 0;
  return static_cast<uint64_t>(std::llround(std::pow(kSizeBase, code - 1)));
}

// Code 255 still covers sizes it decodes to within 10%; past that the
// estimate is flagged as a lower bound.
bool size_clamped(uint64_t bytes) {
  return bytes > 0 && raw_code(bytes) > 255 &&
         static_cast<double>(bytes) * 0.9 > static_cast<double>(decode_size(255));
}

void MisraGries::update(const std::string& key, uint64_t weight) {
  total_ += weight;
  if (k_ == 0) return;
  auto it = counters_.find(key);
  if (it != counters_.end()) {
    it->second += weight;
    return;
  }
  if (counters_.size() < k_) {
    counters_.emplace(key, weight);
    return;
  }
  // Decrement every counter by the largest amount the new item can absorb.
  uint64_t smallest = weight;
  for (const auto& [_, n] : counters_) smallest = std::min(smallest, n);
  for (auto i = counters_.begin(); i != counters_.end();) {
    i->second -= smallest;
    i = i->second == 0 ? counters_.erase(i) : std::next(i);
  }
  if (weight > smallest) counters_.emplace(key, weight - smallest);
}

std::vector<HeavyHitter> MisraGries::report(size_t limit) const { return top_k(counters_, limit); }

size_t histogram_bucket(uint64_t hash, size_t buckets) {
  return static_cast<size_t>((static_cast<unsigned __int128>(hash) * buckets) >> 64);
}

std::string key_text(std::span<const Value> key) {
  std::string out;
  for (size_t i = 0; i < key.size(); ++i) {
    if (i) out += '|';
    out += key[i].is_null() ? "NULL" : to_string(key[i]);
    if (out.size() >= kHeavyHitterKeyBytes) break;
  }
  if (out.size() > kHeavyHitterKeyBytes) out.resize(kHeavyHitterKeyBytes);
  return out;
}

TaskStatsBuilder::TaskStatsBuilder(size_t partitions, size_t hh_k, size_t histogram_buckets)
    : bytes_(partitions, 0),
      records_(partitions, 0),
      hitters_(hh_k),
      hh_k_(hh_k),
      histogram_(histogram_buckets, 0) {}

void TaskStatsBuilder::add(size_t partition, uint64_t key_hash, std::span<const Value> key,
                           size_t row_bytes) {
  bytes_[partition] += row_bytes;
  records_[partition] += 1;
  if (!histogram_.empty()) histogram_[histogram_bucket(key_hash, histogram_.size())] += 1;
  if (hh_k_ > 0) hitters_.update(key_text(key));
}

TaskStats TaskStatsBuilder::finish() const {
  TaskStats s;
  for (uint64_t b : bytes_) {
    s.size_codes.push_back(log_encode_size(b));
    s.clamped = s.clamped || size_clamped(b);
  }
  s.record_counts = records_;
  s.heavy_hitters = hitters_.report(hh_k_);
  s.histogram = histogram_;
  return s;
}

std::string serialize_stats(const TaskStats& stats) {
  std::string out;
  put_varint(out, stats.size_codes.size());
  for (uint8_t c : stats.size_codes) out.push_back(static_cast<char>(c));
  for (uint64_t n : stats.record_counts) put_varint(out, n);
  out.push_back(stats.clamped ? 1 : 0);
  put_varint(out, stats.heavy_hitters.size());
  for (const auto& h : stats.heavy_hitters) {
    put_varint(out, h.key.size());
    out += h.key;
    put_varint(out, h.count);
  }
  put_varint(out, stats.histogram.size());
  for (uint64_t n : stats.histogram) put_varint(out, n);
  return out;
}

TaskStats deserialize_stats(std::string_view in) {
  TaskStats s;
  size_t pos = 0;
  auto need = [&](size_t n) {
    if (pos + n > in.size()) fail(ErrorCode::kCorruptChunk, "truncated stats");
  };
  uint64_t parts = get_varint(in, pos);
  need(parts);
  for (uint64_t i = 0; i < parts; ++i) s.size_codes.push_back(static_cast<uint8_t>(in[pos++]));
  for (uint64_t i = 0; i < parts; ++i) s.record_counts.push_back(get_varint(in, pos));
  need(1);
  s.clamped = in[pos++] != 0;
  uint64_t hh = get_varint(in, pos);
  for (uint64_t i = 0; i < hh; ++i) {
    uint64_t len = get_varint(in, pos);
    need(len);
    HeavyHitter h{std::string(in.substr(pos, len)), 0};
    pos += len;
    h.count = get_varint(in, pos);
    s.heavy_hitters.push_back(std::move(h));
  }
  uint64_t buckets = get_varint(in, pos);
  for (uint64_t i = 0; i < buckets; ++i) s.histogram.push_back(get_varint(in, pos));
  if (pos != in.size()) fail(ErrorCode::kCorruptChunk, "trailing bytes after stats");
  return s;
}

uint64_t GlobalStats::total_bytes() const {
  uint64_t n = 0;
  for (uint64_t b : partition_bytes) n += b;
  return n;
}

uint64_t GlobalStats::total_records() const {
  uint64_t n = 0;
  for (uint64_t r : record_counts) n += r;
  return n;
}

GlobalStats aggregate_stats(std::span<const TaskStats> tasks, size_t hh_k) {
  GlobalStats g;
  std::map<std::string, uint64_t> hitters;
  for (const auto& t : tasks) {
    if (g.partition_bytes.size() < t.size_codes.size()) {
      g.partition_bytes.resize(t.size_codes.size(), 0);
      g.record_counts.resize(t.size_codes.size(), 0);
    }
    for (size_t p = 0; p < t.size_codes.size(); ++p) {
      g.partition_bytes[p] += decode_size(t.size_codes[p]);
      if (p < t.record_counts.size()) g.record_counts[p] += t.record_counts[p];
    }
    g.clamped = g.clamped || t.clamped;
    for (const auto& h : t.heavy_hitters) hitters[h.key] += h.count;
    if (g.histogram.size() < t.histogram.size()) g.histogram.resize(t.histogram.size(), 0);
    for (size_t b = 0; b < t.histogram.size(); ++b) g.histogram[b] += t.histogram[b];
  }
  g.heavy_hitters = top_k(hitters, hh_k);
  return g;
}

}  // namespace ember::pde
