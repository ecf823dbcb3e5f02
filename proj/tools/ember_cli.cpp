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

// Interactive shell and batch runner over the C API.

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <unistd.h>

#include "CLI11.hpp"
#include "ember/ember.h"

namespace {

ember_session* volatile g_session = nullptr;

extern "C" void on_interrupt(int) {
  if (g_session) ember_session_cancel(g_session);
}

bool read_text(const std::string& path, std::string& out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  std::ostringstream ss;
  ss << in.rdbuf();
  out = ss.str();
  return true;
}

void position(const std::string& text, size_t offset, size_t& line, size_t& col) {
  line = 1;
  col = 1;
  for (size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
}

// Runs one command; prints output to stdout and errors, with their line and
// column in `text`, to stderr.
bool run_command(ember_session* session, const std::string& text, size_t begin, size_t end) {
  std::string command = text.substr(begin, end - begin);
  ember_result* result = nullptr;
  ember_status status = ember_session_execute(session, command.c_str(), &result);
  if (!result) {
    std::fprintf(stderr, "error: %s: %s\n", ember_status_name(status), ember_last_error());
    return false;
  }
  std::fputs(ember_result_output(result), stdout);
  std::fflush(stdout);
  bool ok = status == EMBER_OK;
  if (!ok) {
    long long off = ember_result_error_offset(result);
    size_t line = 0;
    size_t col = 0;
    position(text, begin + (off < 0 ? 0 : static_cast<size_t>(off)), line, col);
    std::fprintf(stderr, "error at line %zu, column %zu: %s: %s\n", line, col, ember_status_name(status),
                 ember_result_error(result));
  }
  ember_result_free(result);
  return ok;
}

bool is_quit(const std::string& text, size_t begin, size_t end) {
  std::string c = text.substr(begin, end - begin);
  return c == "\\q" || c == "\\quit";
}

int run_script(ember_session* session, const std::string& script) {
  bool all_ok = true;
  size_t pos = 0;
  size_t begin = 0;
  size_t end = 0;
  while (ember_next_command(script.c_str(), &pos, 1, &begin, &end)) {
    if (is_quit(script, begin, end)) break;
    all_ok = run_command(session, script, begin, end) && all_ok;
  }
  return all_ok ? 0 : 1;
}

int repl(ember_session* session) {
  bool interactive = isatty(fileno(stdin));
  std::string buffer;
  std::string line;
  for (;;) {
    if (interactive) std::fputs(buffer.empty() ? "ember> " : "   ..> ", stderr);
    if (!std::getline(std::cin, line)) break;
    buffer += line;
    buffer += '\n';
    size_t pos = 0;
    size_t begin = 0;
    size_t end = 0;
    while (ember_next_command(buffer.c_str(), &pos, 0, &begin, &end)) {
      if (is_quit(buffer, begin, end)) return 0;
      run_command(session, buffer, begin, end);
    }
    buffer.erase(0, pos);
    if (buffer.find_first_not_of(" \t\r\n") == std::string::npos) buffer.clear();
  }
  size_t pos = 0;
  size_t begin = 0;
  size_t end = 0;
  while (ember_next_command(buffer.c_str(), &pos, 1, &begin, &end)) {
    if (is_quit(buffer, begin, end)) break;
    run_command(session, buffer, begin, end);
  }
  return 0;
}

bool check(ember_status status, const char* what) {
  if (status == EMBER_OK) return true;
  std::fprintf(stderr, "error: %s: %s: %s\n", what, ember_status_name(status), ember_last_error());
  return false;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ember: SQL and iterative ML over a simulated cluster"};
  std::string config_path;
  std::string script_path;
  std::string report_dir;
  size_t workers = 0;
  long long seed = -1;
  app.add_option("--config", config_path, "key=value settings file")->check(CLI::ExistingFile);
  app.add_option("--script", script_path, "run a script and exit")->check(CLI::ExistingFile);
  app.add_option("--workers", workers, "simulated worker count")->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "session seed")->check(CLI::NonNegativeNumber);
  app.add_option("--report-dir", report_dir, "directory for job and ML reports");
  CLI11_PARSE(app, argc, argv);

  ember_config* config = ember_config_new();
  if (!config) return 2;
  bool ok = true;
  if (!config_path.empty()) {
    std::string text;
    if (!read_text(config_path, text)) {
      std::fprintf(stderr, "error: cannot read %s\n", config_path.c_str());
      ok = false;
    } else {
      ok = check(ember_config_load(config, text.c_str()), config_path.c_str());
    }
  }
  if (ok && workers) ok = check(ember_config_set(config, "worker_count", std::to_string(workers).c_str()), "--workers");
  if (ok && seed >= 0) ok = check(ember_config_set(config, "seed", std::to_string(seed).c_str()), "--seed");
  if (ok && !report_dir.empty()) ok = check(ember_config_set(config, "report_dir", report_dir.c_str()), "--report-dir");
  ember_session* session = nullptr;
  if (ok) ok = check(ember_session_open(config, &session), "session");
  ember_config_free(config);
  if (!ok) return 2;

  g_session = session;
  std::signal(SIGINT, on_interrupt);

  int code = 0;
  if (!script_path.empty()) {
    std::string script;
    if (!read_text(script_path, script)) {
      std::fprintf(stderr, "error: cannot read %s\n", script_path.c_str());
      code = 2;
    } else {
      code = run_script(session, script);
    }
  } else {
    code = repl(session);
  }
  g_session = nullptr;
  ember_session_close(session);
  return code;
}
