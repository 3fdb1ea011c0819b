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

#ifndef SATAUDIT_CONFIG_HPP_
#define SATAUDIT_CONFIG_HPP_

// Structured key-value text: one `key = value` per line, '#' comments.

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace sataudit {

using KeyValues = std::vector<std::pair<std::string, std::string>>;

// Keeps file order; throws UsageError on a line without '='.
KeyValues parse_key_values(std::string_view text);
KeyValues read_key_values(const std::string& path);

double parse_real(std::string_view key, std::string_view value);
std::int64_t parse_integer(std::string_view key, std::string_view value);
bool parse_boolean(std::string_view key, std::string_view value);

// 64-bit FNV-1a, hex-encoded.
std::string fnv1a_hex(std::string_view bytes);

}  // namespace sataudit

#endif  // SATAUDIT_CONFIG_HPP_
