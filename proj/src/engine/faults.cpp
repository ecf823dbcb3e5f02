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

#include "engine/faults.hpp"

#include <charconv>
#include <sstream>

#include "common/error.hpp"
#include "common/value.hpp"

namespace ember::engine {

namespace {

uint64_t parse_count(const std::string& tok, const std::string& text) {
  uint64_t v = 0;
  auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || p != tok.data() + tok.size()) {
    fail(ErrorCode::kInvalidArgument, "bad number '" + tok + "' in fault '" + text + "'");
  }
  return v;
}

double parse_factor(std::string tok, const std::string& text) {
  if (!tok.empty() && (tok[0] == 'x' || tok[0] == 'X')) tok.erase(0, 1);
  double v = 0;
  auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || p != tok.data() + tok.size() || !(v > 0)) {
    fail(ErrorCode::kInvalidArgument, "bad delay factor in fault '" + text + "'");
  }
  return v;
}

}  // namespace

FaultEvent parse_fault(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::string> toks;
  for (std::string t; in >> t;) toks.push_back(to_lower(t));
  auto bad = [&](const std::string& why) -> FaultEvent {
    fail(ErrorCode::kInvalidArgument, "fault '" + text + "': " + why);
  };
  if (toks.size() < 2) return bad("expected 'kill <worker>' or 'delay <worker> <factor>'");
  FaultEvent e;
  size_t i = 0;
  if (toks[0] == "kill" || toks[0] == "kill-worker") {
    e.action = FaultEvent::Action::kKill;
    e.worker = parse_count(toks[1], text);
    i = 2;
  } else if (toks[0] == "delay" || toks[0] == "delay-worker") {
    if (toks.size() < 3) return bad("delay needs a factor");
    e.action = FaultEvent::Action::kDelay;
    e.worker = parse_count(toks[1], text);
    e.factor = parse_factor(toks[2], text);
    i = 3;
  } else {
    return bad("unknown action " + toks[0]);
  }
  while (i < toks.size()) {
    if (toks[i] == "at" && i + 2 < toks.size()) {
      const auto& kind = toks[i + 1];
      if (kind == "stage") e.trigger = FaultEvent::Trigger::kStage;
      else if (kind == "task") e.trigger = FaultEvent::Trigger::kTask;
      else if (kind == "time") e.trigger = FaultEvent::Trigger::kTime;
      else return bad("unknown trigger " + kind);
      e.at = parse_count(toks[i + 2], text);
      i += 3;
    } else if (toks[i] == "in" && i + 2 < toks.size() && toks[i + 1] == "job") {
      e.job = parse_count(toks[i + 2], text);
      i += 3;
    } else {
      return bad("unexpected '" + toks[i] + "'");
    }
  }
  return e;
}

std::vector<FaultEvent> parse_fault_schedule(const std::string& text) {
  std::vector<FaultEvent> out;
  std::string part;
  std::istringstream in(text);
  while (std::getline(in, part, ';')) {
    if (part.find_first_not_of(" \t") == std::string::npos) continue;
    out.push_back(parse_fault(part));
  }
  return out;
}

std::string format_fault(const FaultEvent& e) {
  std::ostringstream out;
  if (e.action == FaultEvent::Action::kKill) {
    out << "kill " << e.worker;
  } else {
    out << "delay " << e.worker << " " << e.factor;
  }
  switch (e.trigger) {
    case FaultEvent::Trigger::kNow: break;
    case FaultEvent::Trigger::kStage: out << " at stage " << e.at; break;
    case FaultEvent::Trigger::kTask: out << " at task " << e.at; break;
    case FaultEvent::Trigger::kTime: out << " at time " << e.at; break;
  }
  if (e.job) out << " in job " << *e.job;
  return out.str();
}

}  // namespace ember::engine
