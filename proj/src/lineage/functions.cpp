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

#include "lineage/functions.hpp"

#include <charconv>
#include <memory>

#include "common/error.hpp"

namespace ember::lineage {

namespace {

std::string trim(std::string_view s) {
  size_t b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  size_t e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

// select(a,b): keeps the named columns in the given order.
RowFunction select_function() {
  RowFunction fn;
  fn.name = "select";
  fn.bind = [](const Schema& in, const std::string& params) {
    std::vector<Column> cols;
    for (const auto& name : split_names(params)) {
      auto idx = in.find(name);
      if (!idx) fail(ErrorCode::kFieldNotFound, "no column named " + name);
      cols.push_back(in[*idx]);
    }
    return Schema(cols);
  };
  fn.row = [](const Row& row, const Schema& in, const std::string& params) {
    Row out;
    for (const auto& name : split_names(params)) out.push_back(row[*in.find(name)]);
    return out;
  };
  return fn;
}

}  // namespace

FunctionRegistry& FunctionRegistry::global() {
  static FunctionRegistry registry;
  return registry;
}

FunctionRegistry::FunctionRegistry() { add(select_function()); }

void FunctionRegistry::add(RowFunction fn) {
  std::lock_guard lock(mu_);
  auto& slot = fns_[fn.name];
  if (slot) {
    *slot = std::move(fn);
  } else {
    slot = std::make_unique<RowFunction>(std::move(fn));
  }
}

const RowFunction& FunctionRegistry::get(const std::string& name) const {
  std::lock_guard lock(mu_);
  auto it = fns_.find(name);
  if (it == fns_.end()) fail(ErrorCode::kNotFound, "no registered function " + name);
  return *it->second;
}

bool FunctionRegistry::contains(const std::string& name) const {
  std::lock_guard lock(mu_);
  return fns_.count(name) > 0;
}

std::vector<std::string> FunctionRegistry::names() const {
  std::lock_guard lock(mu_);
  std::vector<std::string> out;
  for (const auto& [name, _] : fns_) out.push_back(name);
  return out;
}

std::vector<std::string> split_names(const std::string& params) {
  std::vector<std::string> out;
  size_t start = 0;
  while (start <= params.size()) {
    size_t comma = params.find(',', start);
    if (comma == std::string::npos) comma = params.size();
    auto name = trim(std::string_view(params).substr(start, comma - start));
    if (!name.empty()) out.push_back(std::move(name));
    start = comma + 1;
  }
  return out;
}

std::string format_hexfloat(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::hex);
  return std::string(buf, r.ptr);
}

double parse_hexfloat(const std::string& text) {
  double v = 0;
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v, std::chars_format::hex);
  if (ec != std::errc() || p != text.data() + text.size()) {
    fail(ErrorCode::kInvalidArgument, "bad number parameter '" + text + "'");
  }
  return v;
}

std::string encode_vector(const std::vector<double>& v) {
  std::string out;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) out += ';';
    out += format_hexfloat(v[i]);
  }
  return out;
}

std::vector<double> decode_vector(const std::string& text) {
  std::vector<double> out;
  if (text.empty()) return out;
  size_t start = 0;
  for (;;) {
    size_t semi = text.find(';', start);
    out.push_back(parse_hexfloat(text.substr(start, semi - start)));
    if (semi == std::string::npos) break;
    start = semi + 1;
  }
  return out;
}

}  // namespace ember::lineage
