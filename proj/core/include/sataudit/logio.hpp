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

#ifndef SATAUDIT_LOGIO_HPP_
#define SATAUDIT_LOGIO_HPP_

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sataudit/logmodel.hpp"

namespace sataudit {

enum class LogFormat { Ndjson, Csv };

std::optional<LogFormat> parse_log_format(std::string_view text);
// From the file extension; defaults to NDJSON.
LogFormat format_for_path(const std::filesystem::path& path);

// Reads a log file. Lines starting with '#' are metadata comments and are
// ignored. Invalid records are skipped and counted; an unreadable file or a
// file where more than half of the records are malformed throws DataError.
LogCorpus ingest(const std::filesystem::path& path, LogFormat format);

// Parses from memory; same contract as ingest.
LogCorpus ingest_text(std::string_view text, LogFormat format);

// Writes records in impression_id order and returns the record count.
// `comments` are written first as '#'-prefixed lines.
std::size_t emit(const LogCorpus& corpus, const std::filesystem::path& path,
                 LogFormat format,
                 const std::vector<std::string>& comments = {});

std::string emit_text(const LogCorpus& corpus, LogFormat format,
                      const std::vector<std::string>& comments = {});

// The CSV column order used by emit.
const std::vector<std::string>& csv_columns();

// RFC 4180 field splitting for a single line. Returns nullopt on an
// unterminated quote.
std::optional<std::vector<std::string>> split_csv_line(std::string_view line);
std::string csv_escape(std::string_view field);

}  // namespace sataudit

#endif  // SATAUDIT_LOGIO_HPP_
