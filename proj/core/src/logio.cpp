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

#include "sataudit/logio.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"
#include "sataudit/errors.hpp"

namespace sataudit {

using nlohmann::json;

namespace {

constexpr std::size_t kMaxDiagnostics = 20;

// Thrown inside record parsing; converted to a per-record skip.
struct RecordError {
  std::string reason;
};

std::string format_double(double v) { return fmt::format("{}", v); }

double parse_double(std::string_view s, const char* what) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw RecordError{std::string("bad ") + what + " '" + std::string(s) + "'"};
  }
  return v;
}

template <typename Int>
Int parse_int(std::string_view s, const char* what) {
  Int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw RecordError{std::string("bad ") + what + " '" + std::string(s) + "'"};
  }
  return v;
}

std::optional<bool> parse_opt_bool(std::string_view s, const char* what) {
  if (s.empty()) return std::nullopt;
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw RecordError{std::string("bad ") + what + " '" + std::string(s) + "'"};
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  if (s.empty()) return out;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

void finish_impression(Impression& imp) {
  imp.query_text = normalize_query(imp.query_text);
  if (auto why = validate(imp)) throw RecordError{*why};
}

// ---- NDJSON ---------------------------------------------------------------

template <typename T>
T required(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) {
    throw RecordError{std::string("missing field ") + key};
  }
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw RecordError{std::string("wrong type for field ") + key};
  }
}

std::optional<bool> optional_bool(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_boolean()) {
    throw RecordError{std::string("wrong type for field ") + key};
  }
  return it->get<bool>();
}

Impression impression_from_json(std::string_view line) {
  json obj = json::parse(line, nullptr, /*allow_exceptions=*/false);
  if (obj.is_discarded() || !obj.is_object()) {
    throw RecordError{"not a JSON object"};
  }
  Impression imp;
  imp.impression_id = required<std::string>(obj, "impression_id");
  imp.user_id = required<std::string>(obj, "user_id");
  imp.session_id = required<std::string>(obj, "session_id");
  imp.timestamp = required<std::int64_t>(obj, "timestamp");
  imp.query_text = required<std::string>(obj, "query_text");
  imp.topic = required<std::string>(obj, "topic");
  imp.results = required<std::vector<std::string>>(obj, "results");
  auto clicks = required<json>(obj, "clicks");
  if (!clicks.is_array()) throw RecordError{"clicks is not an array"};
  for (const auto& c : clicks) {
    if (!c.is_object()) throw RecordError{"click is not an object"};
    Click click;
    click.result_id = required<std::string>(c, "result_id");
    click.position = required<int>(c, "position");
    auto dwell = c.find("dwell_seconds");
    if (dwell != c.end() && !dwell->is_null()) {
      if (!dwell->is_number()) throw RecordError{"wrong type for dwell_seconds"};
      click.dwell_seconds = dwell->get<double>();
    }
    click.terminated_query = required<bool>(c, "terminated_query");
    imp.clicks.push_back(std::move(click));
  }
  imp.reformulated = optional_bool(obj, "reformulated");
  auto demo = required<json>(obj, "demographics");
  if (!demo.is_object()) throw RecordError{"demographics is not an object"};
  auto age = parse_age_group(required<std::string>(demo, "age"));
  auto gender = parse_gender(required<std::string>(demo, "gender"));
  if (!age) throw RecordError{"unknown age group"};
  if (!gender) throw RecordError{"unknown gender"};
  imp.demographics = {*age, *gender};
  imp.navigational = optional_bool(obj, "navigational");
  finish_impression(imp);
  return imp;
}

std::string impression_to_ndjson_line(const Impression& imp) {
  nlohmann::ordered_json obj;
  obj["impression_id"] = imp.impression_id;
  obj["user_id"] = imp.user_id;
  obj["session_id"] = imp.session_id;
  obj["timestamp"] = imp.timestamp;
  obj["query_text"] = imp.query_text;
  obj["topic"] = imp.topic;
  obj["results"] = imp.results;
  auto clicks = nlohmann::ordered_json::array();
  for (const auto& c : imp.clicks) {
    nlohmann::ordered_json jc;
    jc["result_id"] = c.result_id;
    jc["position"] = c.position;
    jc["dwell_seconds"] = c.dwell_seconds ? nlohmann::ordered_json(*c.dwell_seconds)
                                          : nlohmann::ordered_json(nullptr);
    jc["terminated_query"] = c.terminated_query;
    clicks.push_back(std::move(jc));
  }
  obj["clicks"] = std::move(clicks);
  obj["reformulated"] = imp.reformulated
                            ? nlohmann::ordered_json(*imp.reformulated)
                            : nlohmann::ordered_json(nullptr);
  nlohmann::ordered_json demo;
  demo["age"] = to_string(imp.demographics.age);
  demo["gender"] = to_string(imp.demographics.gender);
  obj["demographics"] = std::move(demo);
  obj["navigational"] = imp.navigational
                            ? nlohmann::ordered_json(*imp.navigational)
                            : nlohmann::ordered_json(nullptr);
  return obj.dump();
}

// ---- CSV ------------------------------------------------------------------

const std::vector<std::string> kCsvColumns = {
    "impression_id", "user_id", "session_id", "timestamp",
    "query_text",    "topic",   "results",    "clicks",
    "reformulated",  "age",     "gender",     "navigational"};

std::string pack_clicks(const std::vector<Click>& clicks) {
  std::string out;
  for (std::size_t i = 0; i < clicks.size(); ++i) {
    const auto& c = clicks[i];
    if (i) out += ';';
    out += fmt::format("{}:{}:{}:{}", c.position, c.result_id,
                       c.dwell_seconds ? format_double(*c.dwell_seconds) : "",
                       c.terminated_query ? 1 : 0);
  }
  return out;
}

std::vector<Click> unpack_clicks(std::string_view packed) {
  std::vector<Click> clicks;
  for (auto entry : split(packed, ';')) {
    auto parts = split(entry, ':');
    if (parts.size() != 4) throw RecordError{"click entry needs 4 fields"};
    Click c;
    c.position = parse_int<int>(parts[0], "click position");
    c.result_id = std::string(parts[1]);
    if (!parts[2].empty()) {
      c.dwell_seconds = parse_double(parts[2], "dwell_seconds");
    }
    auto term = parse_opt_bool(parts[3], "terminated flag");
    if (!term) throw RecordError{"missing terminated flag"};
    c.terminated_query = *term;
    clicks.push_back(std::move(c));
  }
  return clicks;
}

std::string opt_bool_text(const std::optional<bool>& v) {
  if (!v) return "";
  return *v ? "true" : "false";
}

std::string impression_to_csv_line(const Impression& imp) {
  std::string results;
  for (std::size_t i = 0; i < imp.results.size(); ++i) {
    if (i) results += '|';
    results += imp.results[i];
  }
  std::vector<std::string> fields = {
      imp.impression_id,
      imp.user_id,
      imp.session_id,
      std::to_string(imp.timestamp),
      imp.query_text,
      imp.topic,
      results,
      pack_clicks(imp.clicks),
      opt_bool_text(imp.reformulated),
      std::string(to_string(imp.demographics.age)),
      std::string(to_string(imp.demographics.gender)),
      opt_bool_text(imp.navigational)};
  std::string line;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) line += ',';
    line += csv_escape(fields[i]);
  }
  return line;
}

struct CsvLayout {
  std::map<std::string, std::size_t> index;
  std::size_t width = 0;
};

CsvLayout parse_header(std::string_view line) {
  auto fields = split_csv_line(line);
  if (!fields) throw DataError("unterminated quote in CSV header");
  CsvLayout layout;
  layout.width = fields->size();
  for (std::size_t i = 0; i < fields->size(); ++i) {
    layout.index[(*fields)[i]] = i;
  }
  for (const auto& col : kCsvColumns) {
    if (col == "navigational") continue;
    if (!layout.index.contains(col)) {
      throw DataError("CSV header is missing column '" + col + "'");
    }
  }
  return layout;
}

Impression impression_from_csv(std::string_view line, const CsvLayout& layout) {
  auto fields = split_csv_line(line);
  if (!fields) throw RecordError{"unterminated quote"};
  if (fields->size() != layout.width) {
    throw RecordError{fmt::format("expected {} fields, got {}", layout.width,
                                  fields->size())};
  }
  auto col = [&](const std::string& name) -> std::string_view {
    return (*fields)[layout.index.at(name)];
  };
  Impression imp;
  imp.impression_id = std::string(col("impression_id"));
  imp.user_id = std::string(col("user_id"));
  imp.session_id = std::string(col("session_id"));
  imp.timestamp = parse_int<std::int64_t>(col("timestamp"), "timestamp");
  imp.query_text = std::string(col("query_text"));
  imp.topic = std::string(col("topic"));
  for (auto r : split(col("results"), '|')) imp.results.emplace_back(r);
  imp.clicks = unpack_clicks(col("clicks"));
  imp.reformulated = parse_opt_bool(col("reformulated"), "reformulated");
  auto age = parse_age_group(col("age"));
  auto gender = parse_gender(col("gender"));
  if (!age) throw RecordError{"unknown age group"};
  if (!gender) throw RecordError{"unknown gender"};
  imp.demographics = {*age, *gender};
  if (layout.index.contains("navigational")) {
    imp.navigational = parse_opt_bool(col("navigational"), "navigational");
  }
  finish_impression(imp);
  return imp;
}

bool is_blank(std::string_view line) {
  return line.find_first_not_of(" \t\r") == std::string_view::npos;
}

}  // namespace

std::optional<LogFormat> parse_log_format(std::string_view text) {
  if (text == "ndjson") return LogFormat::Ndjson;
  if (text == "csv") return LogFormat::Csv;
  return std::nullopt;
}

LogFormat format_for_path(const std::filesystem::path& path) {
  return path.extension() == ".csv" ? LogFormat::Csv : LogFormat::Ndjson;
}

const std::vector<std::string>& csv_columns() { return kCsvColumns; }

std::optional<std::vector<std::string>> split_csv_line(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted) return std::nullopt;
  fields.push_back(std::move(cur));
  return fields;
}

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) {
    return std::string(field);
  }
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

LogCorpus ingest_text(std::string_view text, LogFormat format) {
  std::vector<Impression> accepted;
  IngestStats stats;
  std::set<std::string> ids;
  std::optional<CsvLayout> layout;

  auto skip = [&](std::size_t record, const std::string& reason) {
    ++stats.skipped;
    if (stats.diagnostics.size() < kMaxDiagnostics) {
      stats.diagnostics.push_back(fmt::format("record {}: {}", record, reason));
    }
  };

  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (is_blank(line) || line.front() == '#') continue;
    if (format == LogFormat::Csv && !layout) {
      layout = parse_header(line);
      continue;
    }
    std::size_t record = ++stats.total_records;
    try {
      Impression imp = format == LogFormat::Ndjson
                           ? impression_from_json(line)
                           : impression_from_csv(line, *layout);
      if (!ids.insert(imp.impression_id).second) {
        skip(record, "duplicate impression_id " + imp.impression_id);
        continue;
      }
      accepted.push_back(std::move(imp));
    } catch (const RecordError& e) {
      skip(record, e.reason);
    }
  }
  if (stats.total_records > 0 && 2 * stats.skipped > stats.total_records) {
    std::string msg = fmt::format(
        "{} of {} records malformed; wrong schema?", stats.skipped,
        stats.total_records);
    if (!stats.diagnostics.empty()) msg += " first: " + stats.diagnostics[0];
    throw DataError(msg);
  }
  stats.accepted = accepted.size();
  LogCorpus corpus = make_corpus(std::move(accepted));
  corpus.stats = std::move(stats);
  return corpus;
}

LogCorpus ingest(const std::filesystem::path& path, LogFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read log file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw DataError("error reading log file " + path.string());
  return ingest_text(buf.str(), format);
}

std::string emit_text(const LogCorpus& corpus, LogFormat format,
                      const std::vector<std::string>& comments) {
  std::vector<const Impression*> order;
  order.reserve(corpus.size());
  for (const auto& imp : corpus.impressions) order.push_back(&imp);
  std::sort(order.begin(), order.end(), [](const auto* a, const auto* b) {
    return a->impression_id < b->impression_id;
  });

  std::string out;
  for (const auto& c : comments) out += "# " + c + "\n";
  if (format == LogFormat::Csv) {
    for (std::size_t i = 0; i < kCsvColumns.size(); ++i) {
      if (i) out += ',';
      out += kCsvColumns[i];
    }
    out += '\n';
  }
  for (const auto* imp : order) {
    out += format == LogFormat::Ndjson ? impression_to_ndjson_line(*imp)
                                       : impression_to_csv_line(*imp);
    out += '\n';
  }
  return out;
}

std::size_t emit(const LogCorpus& corpus, const std::filesystem::path& path,
                 LogFormat format, const std::vector<std::string>& comments) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write log file " + path.string());
  out << emit_text(corpus, format, comments);
  out.flush();
  if (!out) throw DataError("error writing log file " + path.string());
  return corpus.size();
}

}  // namespace sataudit
