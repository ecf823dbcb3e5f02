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

#include "engine/shuffle.hpp"

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "common/codec.hpp"
#include "common/error.hpp"
#include "lineage/kernels.hpp"

namespace ember::engine {

namespace fs = std::filesystem;

std::string default_scratch_dir() {
  std::error_code ec;
  auto base = fs::temp_directory_path(ec);
  if (ec) base = "/tmp";
  return (base / ("ember-scratch-" + std::to_string(::getpid()))).string();
}

std::shared_ptr<const SpillFile> SpillFile::write(const std::string& dir, const std::string& bytes) {
  static std::atomic<uint64_t> counter{0};
  std::string root = dir.empty() ? default_scratch_dir() : dir;
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec) fail(ErrorCode::kScratchIo, "cannot create scratch directory " + root + ": " + ec.message());
  std::string path = (fs::path(root) / ("spill-" + std::to_string(counter.fetch_add(1)) + ".bin")).string();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kScratchIo, "cannot open scratch file " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.close();
  if (!out) {
    fs::remove(path, ec);
    fail(ErrorCode::kScratchIo, "short write to scratch file " + path);
  }
  return std::shared_ptr<const SpillFile>(new SpillFile(path));
}

SpillFile::~SpillFile() {
  std::error_code ec;
  fs::remove(path_, ec);
}

std::string SpillFile::read() const {
  std::ifstream in(path_, std::ios::binary);
  if (!in) fail(ErrorCode::kScratchIo, "cannot read scratch file " + path_);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RowBatchPtr Bucket::load() const {
  if (rows) return rows;
  if (!spill) return std::make_shared<const RowBatch>();
  return std::make_shared<const RowBatch>(decode_rows(spill->read()));
}

MapOutput shuffle_write(const RowBatch& rows, const std::vector<Expr>& keys, size_t reducers,
                        const ShuffleOptions& options) {
  if (reducers == 0) fail(ErrorCode::kInvalidArgument, "reducer count must be positive");
  std::vector<RowBatch> parts(reducers);
  std::vector<size_t> bytes(reducers, 0);
  pde::TaskStatsBuilder stats(reducers, options.hh_k, options.histogram_buckets);
  for (const auto& r : rows) {
    Row key = lineage::eval_keys(r, keys);
    uint64_t h = hash_values(key);
    size_t target = h % reducers;
    size_t size = row_byte_size(r);
    stats.add(target, h, key, size);
    bytes[target] += size;
    parts[target].push_back(r);
  }
  MapOutput out;
  out.rows = rows.size();
  for (size_t i = 0; i < reducers; ++i) {
    Bucket b;
    b.row_count = parts[i].size();
    b.bytes = bytes[i];
    if (b.bytes > options.spill_threshold_bytes) {
      b.spill = SpillFile::write(options.scratch_dir, encode_rows(parts[i]));
    } else {
      b.rows = std::make_shared<const RowBatch>(std::move(parts[i]));
    }
    out.bytes += b.bytes;
    out.buckets.push_back(std::move(b));
  }
  out.stats = stats.finish();
  out.stats_bytes = pde::serialize_stats(out.stats).size();
  return out;
}

}  // namespace ember::engine
