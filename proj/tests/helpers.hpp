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

#ifndef SATAUDIT_TESTS_HELPERS_HPP_
#define SATAUDIT_TESTS_HELPERS_HPP_

#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "sataudit/logmodel.hpp"

namespace sataudit::testing {

// A minimal valid impression; tweak fields in the test.
inline Impression make_impression(std::string id, std::string query = "q",
                                  DemographicProfile who = {},
                                  std::vector<Click> clicks = {},
                                  bool reformulated = false) {
  Impression imp;
  imp.impression_id = std::move(id);
  imp.user_id = "u-" + imp.impression_id;
  imp.session_id = "s-" + imp.impression_id;
  imp.timestamp = 1000;
  imp.query_text = std::move(query);
  imp.topic = "news";
  imp.results = {"r1", "r2", "r3", "r4", "r5", "r6", "r7", "r8", "r9", "r10"};
  imp.clicks = std::move(clicks);
  imp.reformulated = reformulated;
  imp.demographics = who;
  return imp;
}

inline Click click(std::string result, double dwell, bool terminal = false,
                   int position = 0) {
  Click c;
  c.position = position > 0 ? position : std::stoi(result.substr(1));
  c.result_id = std::move(result);
  c.dwell_seconds = dwell;
  c.terminated_query = terminal;
  return c;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  const char* base = std::getenv("SATAUDIT_TEST_TMP");
  std::filesystem::path p = base ? base : std::filesystem::temp_directory_path();
  p /= name;
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace sataudit::testing

#endif  // SATAUDIT_TESTS_HELPERS_HPP_
