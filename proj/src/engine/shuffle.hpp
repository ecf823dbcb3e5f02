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

#include <memory>
#include <string>
#include <vector>

#include "common/expr.hpp"
#include "common/value.hpp"
#include "pde/runtime_stats.hpp"

namespace ember::engine {

inline constexpr size_t kDefaultSpillThreshold = 1 << 20;

// A scratch file owned by one map output. Deleted when the last reference
// goes away, which is how a dead worker's spills disappear.
class SpillFile {
 public:
  // Throws ScratchIo.
  static std::shared_ptr<const SpillFile> write(const std::string& dir, const std::string& bytes);
  ~SpillFile();
  SpillFile(const SpillFile&) = delete;
  SpillFile& operator=(const SpillFile&) = delete;

  std::string read() const;
  const std::string& path() const { return path_; }

 private:
  explicit SpillFile(std::string path) : path_(std::move(path)) {}
  std::string path_;
};

// One reduce-side bucket of one map task, held in memory or spilled.
struct Bucket {
  RowBatchPtr rows;
  std::shared_ptr<const SpillFile> spill;
  size_t row_count = 0;
  size_t bytes = 0;

  // Throws ScratchIo if the spill cannot be read back.
  RowBatchPtr load() const;
  bool spilled() const { return spill != nullptr; }
};

struct MapOutput {
  std::vector<Bucket> buckets;
  pde::TaskStats stats;
  size_t stats_bytes = 0;  // serialized size of `stats`
  size_t bytes = 0;
  size_t rows = 0;
};

struct ShuffleOptions {
  size_t spill_threshold_bytes = kDefaultSpillThreshold;
  std::string scratch_dir;  // empty: system temp directory
  size_t hh_k = pde::kDefaultHeavyHitters;
  size_t histogram_buckets = pde::kDefaultHistogramBuckets;
};

std::string default_scratch_dir();

// Routes row r to bucket hash(keys(r)) mod reducers, keeping input order
// within each bucket. Buckets larger than the spill threshold go to scratch
// files. Statistics are gathered on the way.
MapOutput shuffle_write(const RowBatch& rows, const std::vector<Expr>& keys, size_t reducers,
                        const ShuffleOptions& options = {});

}  // namespace ember::engine
