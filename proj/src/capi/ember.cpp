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

#include "ember/ember.h"

#include <new>
#include <string>

#include "session/session.hpp"

struct ember_config {
  ember::session::SessionConfig config;
};

struct ember_session {
  std::unique_ptr<ember::session::Session> session;
};

struct ember_result {
  ember_status status = EMBER_OK;
  std::string output;
  std::string error;
  long long offset = -1;
};

namespace {

thread_local std::string last_error;

ember_status status_of(ember::ErrorCode code) { return static_cast<ember_status>(static_cast<int>(code) + 1); }

template <typename F>
ember_status guarded(F&& f) {
  try {
    f();
    return EMBER_OK;
  } catch (const ember::Error& e) {
    last_error = e.what();
    return status_of(e.code());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return EMBER_ERR_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return EMBER_ERR_INTERNAL;
  }
}

}  // namespace

extern "C" {

const char* ember_version(void) { return "0.1.0"; }

const char* ember_status_name(ember_status status) {
  if (status == EMBER_OK) return "Ok";
  if (status < EMBER_OK || status > EMBER_ERR_INTERNAL) return "Unknown";
  return ember::error_code_name(static_cast<ember::ErrorCode>(static_cast<int>(status) - 1));
}

const char* ember_last_error(void) { return last_error.c_str(); }

ember_config* ember_config_new(void) { return new (std::nothrow) ember_config(); }

void ember_config_free(ember_config* config) { delete config; }

ember_status ember_config_load(ember_config* config, const char* text) {
  if (!config || !text) return EMBER_ERR_INVALID_ARGUMENT;
  return guarded([&] { config->config.load(text); });
}

ember_status ember_config_set(ember_config* config, const char* key, const char* value) {
  if (!config || !key || !value) return EMBER_ERR_INVALID_ARGUMENT;
  return guarded([&] { config->config.set(key, value); });
}

ember_status ember_session_open(const ember_config* config, ember_session** out) {
  if (!out) return EMBER_ERR_INVALID_ARGUMENT;
  *out = nullptr;
  return guarded([&] {
    auto s = std::make_unique<ember_session>();
    s->session = std::make_unique<ember::session::Session>(config ? config->config : ember::session::SessionConfig{});
    *out = s.release();
  });
}

void ember_session_close(ember_session* session) { delete session; }

ember_status ember_session_execute(ember_session* session, const char* command, ember_result** out) {
  if (!session || !command || !out) return EMBER_ERR_INVALID_ARGUMENT;
  *out = nullptr;
  auto* r = new (std::nothrow) ember_result();
  if (!r) return EMBER_ERR_INTERNAL;
  auto outcome = session->session->execute(command);
  r->output = std::move(outcome.output);
  if (!outcome.ok) {
    r->status = status_of(outcome.code);
    r->error = std::move(outcome.message);
    if (outcome.offset) r->offset = static_cast<long long>(*outcome.offset);
  }
  *out = r;
  return r->status;
}

void ember_session_cancel(ember_session* session) {
  if (session) session->session->cancel();
}

int ember_next_command(const char* script, size_t* pos, int final, size_t* begin, size_t* end) {
  if (!script || !pos) return 0;
  std::string_view s(script);
  size_t p = *pos;
  auto c = ember::session::next_command(s, p, final != 0);
  if (!c) return 0;
  *pos = p;
  if (begin) *begin = c->offset;
  if (end) *end = c->offset + c->text.size();
  return 1;
}

ember_status ember_result_status(const ember_result* result) { return result ? result->status : EMBER_ERR_INVALID_ARGUMENT; }

const char* ember_result_output(const ember_result* result) { return result ? result->output.c_str() : ""; }

const char* ember_result_error(const ember_result* result) { return result ? result->error.c_str() : ""; }

long long ember_result_error_offset(const ember_result* result) { return result ? result->offset : -1; }

void ember_result_free(ember_result* result) { delete result; }

}  // extern "C"
