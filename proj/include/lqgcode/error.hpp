// Copyright 2026 The lqgcode Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lqgcode {

enum class ErrorCode {
  NotStabilizable,
  NoConvergence,
  NotOrdered,
  Singular,
  UnstableFilter,
  DegenerateCoder,
  Infeasible,
  DegeneratePi,
  NonFinite,
  EmptyHistogram,
  BadParameter,
  ZeroMass,
  PrecisionExhausted,
  MalformedCodeword,
  DesyncDetected,
  InsufficientWarmup,
  ParseError,
  DimensionMismatch,
  ValueOutOfRange,
  IoError,
};

inline constexpr std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::NotStabilizable: return "NotStabilizable";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::NotOrdered: return "NotOrdered";
    case ErrorCode::Singular: return "Singular";
    case ErrorCode::UnstableFilter: return "UnstableFilter";
    case ErrorCode::DegenerateCoder: return "DegenerateCoder";
    case ErrorCode::Infeasible: return "Infeasible";
    case ErrorCode::DegeneratePi: return "DegeneratePi";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::EmptyHistogram: return "EmptyHistogram";
    case ErrorCode::BadParameter: return "BadParameter";
    case ErrorCode::ZeroMass: return "ZeroMass";
    case ErrorCode::PrecisionExhausted: return "PrecisionExhausted";
    case ErrorCode::MalformedCodeword: return "MalformedCodeword";
    case ErrorCode::DesyncDetected: return "DesyncDetected";
    case ErrorCode::InsufficientWarmup: return "InsufficientWarmup";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ValueOutOfRange: return "ValueOutOfRange";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

// Single exception type for the library. `stage` is filled in by the
// experiment pipeline so callers can tell which step failed.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what, std::string stage = {})
      : std::runtime_error(compose(code, what, stage)),
        code_(code),
        detail_(what),
        stage_(std::move(stage)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }
  const std::string& stage() const noexcept { return stage_; }

  Error with_stage(std::string stage) const { return Error(code_, detail_, std::move(stage)); }

 private:
  static std::string compose(ErrorCode code, const std::string& what,
                             const std::string& stage) {
    std::string out;
    if (!stage.empty()) out += "[" + stage + "] ";
    out += std::string(to_string(code));
    if (!what.empty()) out += ": " + what;
    return out;
  }

  ErrorCode code_;
  std::string detail_;
  std::string stage_;
};

}  // namespace lqgcode
