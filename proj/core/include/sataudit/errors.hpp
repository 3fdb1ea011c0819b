// Copyright 2026 The sataudit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SATAUDIT_ERRORS_HPP_
#define SATAUDIT_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace sataudit {

// Bad flags, config keys, or missing pipeline dependencies.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Unreadable or malformed input, empty cohorts, missing log fidelity.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Optimizer failed to converge or produced non-finite values.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sataudit

#endif  // SATAUDIT_ERRORS_HPP_
