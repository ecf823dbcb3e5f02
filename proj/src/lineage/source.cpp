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

#include "lineage/source.hpp"

#include <filesystem>

#include "common/codec.hpp"
#include "common/error.hpp"
#include "storage/table.hpp"

namespace ember::lineage {

namespace fs = std::filesystem;

namespace {

int64_t mtime_of(const std::string& path) {
  std::error_code ec;
  auto t = fs::last_write_time(path, ec);
  if (ec) return -1;
  return static_cast<int64_t>(t.time_since_epoch().count());
}

}  // namespace

MemorySnapshot::MemorySnapshot(std::string name, Schema schema, std::vector<RowBatchPtr> partitions)
    : name_(std::move(name)), schema_(std::move(schema)), partitions_(std::move(partitions)) {}

std::shared_ptr<MemorySnapshot> MemorySnapshot::from_rows(std::string name, Schema schema,
                                                          const RowBatch& rows, size_t target_rows) {
  schema.validate();
  for (size_t i = 0; i < rows.size(); ++i) storage::check_row(rows[i], schema, i);
  std::vector<RowBatchPtr> parts;
  for (auto& slice : storage::split_consecutive(rows, target_rows)) {
    parts.push_back(std::make_shared<const RowBatch>(std::move(slice)));
  }
  return std::make_shared<MemorySnapshot>(std::move(name), std::move(schema), std::move(parts));
}

RowBatchPtr MemorySnapshot::read(size_t index) const {
  if (!available_) fail(ErrorCode::kSourceUnavailable, "snapshot " + name_ + " is no longer available");
  if (index >= partitions_.size()) fail(ErrorCode::kInternal, "source partition out of range");
  return partitions_[index];
}

std::shared_ptr<FileSnapshot> FileSnapshot::open(const std::string& path, Schema schema,
                                                 size_t target_rows) {
  schema.validate();
  std::shared_ptr<FileSnapshot> s(new FileSnapshot());
  s->path_ = path;
  s->schema_ = std::move(schema);
  s->target_rows_ = target_rows;
  s->format_ = storage::format_for_path(path);
  s->mtime_ = mtime_of(path);
  std::string text = storage::read_file(path);
  s->length_ = text.size();
  s->digest_ = fnv1a(text);
  RowBatch rows = storage::parse_source(text, s->format_, s->schema_);
  for (auto& slice : storage::split_consecutive(rows, target_rows)) {
    s->parsed_.push_back(std::make_shared<const RowBatch>(std::move(slice)));
  }
  s->partition_count_ = s->parsed_.size();
  s->verified_mtime_ = s->mtime_;
  return s;
}

// Cheap checks first; the digest is recomputed only when the modification
// time moved.
void FileSnapshot::verify() const {
  std::error_code ec;
  auto size = fs::file_size(path_, ec);
  if (ec) fail(ErrorCode::kSourceUnavailable, "source file " + path_ + " is gone");
  if (size != length_) fail(ErrorCode::kSourceUnavailable, "source file " + path_ + " changed size");
  int64_t mtime = mtime_of(path_);
  if (mtime == verified_mtime_) return;
  std::string text;
  try {
    text = storage::read_file(path_);
  } catch (const Error&) {
    fail(ErrorCode::kSourceUnavailable, "source file " + path_ + " is unreadable");
  }
  if (text.size() != length_ || fnv1a(text) != digest_) {
    fail(ErrorCode::kSourceUnavailable, "source file " + path_ + " changed since the snapshot");
  }
  verified_mtime_ = mtime;
}

RowBatchPtr FileSnapshot::read(size_t index) const {
  std::lock_guard lock(mu_);
  verify();
  if (index >= parsed_.size()) fail(ErrorCode::kInternal, "source partition out of range");
  return parsed_[index];
}

}  // namespace ember::lineage
