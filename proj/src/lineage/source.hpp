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

#include <atomic>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "common/value.hpp"
#include "storage/ingest.hpp"

namespace ember::lineage {

// Immutable base data behind a Source node. Partition i always holds the
// same rows for as long as the snapshot is available.
class Snapshot {
 public:
  virtual ~Snapshot() = default;
  virtual const Schema& schema() const = 0;
  virtual size_t partition_count() const = 0;
  // Throws SourceUnavailable once the underlying data is gone or changed.
  virtual RowBatchPtr read(size_t index) const = 0;
  virtual std::string describe() const = 0;
};

using SnapshotPtr = std::shared_ptr<const Snapshot>;

// In-memory rows split into fixed partitions. `revoke` simulates losing the
// base data.
class MemorySnapshot : public Snapshot {
 public:
  MemorySnapshot(std::string name, Schema schema, std::vector<RowBatchPtr> partitions);
  // Splits rows consecutively into slices of `target_rows`.
  static std::shared_ptr<MemorySnapshot> from_rows(std::string name, Schema schema,
                                                   const RowBatch& rows, size_t target_rows);

  const Schema& schema() const override { return schema_; }
  size_t partition_count() const override { return partitions_.size(); }
  RowBatchPtr read(size_t index) const override;
  std::string describe() const override { return "memory:" + name_; }

  void revoke() const { available_ = false; }

 private:
  std::string name_;
  Schema schema_;
  std::vector<RowBatchPtr> partitions_;
  mutable std::atomic<bool> available_{true};
};

// A CSV or JSON-lines file pinned by its length and content digest when the
// snapshot is taken. Reads verify the file is unchanged.
class FileSnapshot : public Snapshot {
 public:
  static std::shared_ptr<FileSnapshot> open(const std::string& path, Schema schema,
                                            size_t target_rows);

  const Schema& schema() const override { return schema_; }
  size_t partition_count() const override { return partition_count_; }
  RowBatchPtr read(size_t index) const override;
  std::string describe() const override { return "file:" + path_; }

  const std::string& path() const { return path_; }
  uint64_t digest() const { return digest_; }
  uint64_t length() const { return length_; }

 private:
  FileSnapshot() = default;
  void verify() const;

  std::string path_;
  Schema schema_;
  size_t target_rows_ = 0;
  uint64_t length_ = 0;
  uint64_t digest_ = 0;
  int64_t mtime_ = 0;
  size_t partition_count_ = 0;
  storage::SourceFormat format_ = storage::SourceFormat::kCsv;

  mutable std::mutex mu_;
  mutable std::vector<RowBatchPtr> parsed_;
  mutable int64_t verified_mtime_ = 0;
};

}  // namespace ember::lineage
