// Copyright 2026 The hubrank Authors
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

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hubrank {

/// Malformed or inconsistent caller input (shapes, ids, NaNs).
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A scalar argument outside the domain of the function (e.g. a non-positive precision).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Labels that carry no evidence signal w.r.t. the features.
class DegenerateLabelsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Binary or text file that does not follow its documented layout.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}
  explicit FormatError(const std::string& what)
      : std::runtime_error(what), offset_(npos) {}

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

}  // namespace hubrank
