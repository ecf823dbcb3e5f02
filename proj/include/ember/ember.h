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

#ifndef EMBER_EMBER_H_
#define EMBER_EMBER_H_

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(EMBER_BUILDING_LIBRARY)
#define EMBER_API __attribute__((visibility("default")))
#else
#define EMBER_API
#endif

/* Zero is success; every other value names an error class. */
typedef enum ember_status {
  EMBER_OK = 0,
  EMBER_ERR_SYNTAX,
  EMBER_ERR_PLAN,
  EMBER_ERR_TYPE_MISMATCH,
  EMBER_ERR_SCHEMA_VIOLATION,
  EMBER_ERR_CORRUPT_CHUNK,
  EMBER_ERR_SOURCE_UNAVAILABLE,
  EMBER_ERR_UNRECOVERABLE,
  EMBER_ERR_SCRATCH_IO,
  EMBER_ERR_FIELD_NOT_FOUND,
  EMBER_ERR_DIMENSION_MISMATCH,
  EMBER_ERR_INVALID_K,
  EMBER_ERR_INVALID_ARGUMENT,
  EMBER_ERR_NOT_FOUND,
  EMBER_ERR_CYCLE_DETECTED,
  EMBER_ERR_CANCELLED,
  EMBER_ERR_IO,
  EMBER_ERR_INTERNAL
} ember_status;

typedef struct ember_config ember_config;
typedef struct ember_session ember_session;
typedef struct ember_result ember_result;

EMBER_API const char* ember_version(void);
EMBER_API const char* ember_status_name(ember_status status);
/* Message of the last failed call on this thread that returned no result. */
EMBER_API const char* ember_last_error(void);

EMBER_API ember_config* ember_config_new(void);
EMBER_API void ember_config_free(ember_config* config);
/* key=value lines, '#' comments. */
EMBER_API ember_status ember_config_load(ember_config* config, const char* text);
EMBER_API ember_status ember_config_set(ember_config* config, const char* key, const char* value);

EMBER_API ember_status ember_session_open(const ember_config* config, ember_session** out);
EMBER_API void ember_session_close(ember_session* session);
/* Runs one command: a statement (the ';' is optional) or a meta-command
   line. Command errors are reported through the result, which the caller
   frees; the return value is the same status. */
EMBER_API ember_status ember_session_execute(ember_session* session, const char* command, ember_result** out);
/* Safe to call from a signal handler; cancels the running job. */
EMBER_API void ember_session_cancel(ember_session* session);

/* Finds the next command in script[*pos..]. On success stores its byte
   range in [*begin, *end), advances *pos and returns 1. A statement without
   its ';' only counts when `final` is nonzero. */
EMBER_API int ember_next_command(const char* script, size_t* pos, int final, size_t* begin, size_t* end);

EMBER_API ember_status ember_result_status(const ember_result* result);
EMBER_API const char* ember_result_output(const ember_result* result);
EMBER_API const char* ember_result_error(const ember_result* result);
/* Byte offset of the error within the command, or -1. */
EMBER_API long long ember_result_error_offset(const ember_result* result);
EMBER_API void ember_result_free(ember_result* result);

#ifdef __cplusplus
}
#endif

#endif
