/*
 * Copyright 2026 The Skillpath Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef SKILLPATH_ERROR_HPP_
#define SKILLPATH_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace skillpath {

enum class ErrorKind {
  kInvalidAngle,
  kInvalidRotation,
  kUnresolvableFrames,
  kConfiguration,
  kParse,
  kDegenerateInput,
  kDegenerateSpacing,
  kContract,
  kUnsupportedModel,
  kEmit,
  kIo,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidAngle: return "invalid-angle";
    case ErrorKind::kInvalidRotation: return "invalid-rotation";
    case ErrorKind::kUnresolvableFrames: return "unresolvable-frames";
    case ErrorKind::kConfiguration: return "configuration";
    case ErrorKind::kParse: return "parse";
    case ErrorKind::kDegenerateInput: return "degenerate-input";
    case ErrorKind::kDegenerateSpacing: return "degenerate-spacing";
    case ErrorKind::kContract: return "contract";
    case ErrorKind::kUnsupportedModel: return "unsupported-model";
    case ErrorKind::kEmit: return "emit";
    case ErrorKind::kIo: return "io";
  }
  return "unknown";
}

// All library failures surface as this exception; kind() lets callers
// branch without parsing the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace skillpath

#endif  // SKILLPATH_ERROR_HPP_
