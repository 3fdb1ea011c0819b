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

#include "sataudit_cli/cli.hpp"

#include <fmt/format.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "sataudit/aggregate.hpp"
#include "sataudit/difficulty.hpp"
#include "sataudit/errors.hpp"
#include "sataudit/logio.hpp"
#include "sataudit/report.hpp"
#include "sataudit/synth.hpp"

namespace sataudit::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

std::string_view to_string(Method m) {
  switch (m) {
    case Method::Raw: return "raw";
    case Method::Matched: return "matched";
    case Method::Multilevel: return "multilevel";
    case Method::Pairwise: return "pairwise";
    case Method::External: return "external";
  }
  return "?";
}

std::set<Method> parse_methods(std::string_view list) {
  std::set<Method> out;
  std::size_t pos = 0;
  while (pos <= list.size()) {
    auto end = list.find(',', pos);
    if (end == std::string_view::npos) end = list.size();
    std::string_view item = list.substr(pos, end - pos);
    pos = end + 1;
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    if (item.empty()) continue;
    bool found = false;
    for (Method m : {Method::Raw, Method::Matched, Method::Multilevel,
                     Method::Pairwise, Method::External}) {
      if (item == to_string(m)) {
        out.insert(m);
        found = true;
      }
    }
    if (!found) throw UsageError(fmt::format("unknown method '{}'", item));
  }
  if (out.empty()) throw UsageError("no audit method selected");
  return out;
}

void AuditRunConfig::validate() const {
  if (input.empty()) throw UsageError("audit needs --input");
  if (!(k > 1.0)) throw UsageError("k must be > 1");
  const bool needs_fits = methods.count(Method::Pairwise) || methods.count(Method::External);
  if (needs_fits && !default_thresholds && !methods.count(Method::Multilevel) &&
      fits_dir.empty()) {
    throw UsageError(
        "pairwise needs multilevel fits for its k*delta thresholds: add "
        "'multilevel' to --methods, pass --fits-dir, or use --default-thresholds");
  }
  if (!(query_fraction > 0.0 && query_fraction <= 1.0)) {
    throw UsageError("query_fraction must lie in (0,1]");
  }
  if (pairs_per_query < 1) throw UsageError("pairs_per_query must be >= 1");
  if (!(pair_prior_variance > 0.0)) throw UsageError("pair_prior_variance must be > 0");
  match.validate();
  priors.validate();
}

std::string AuditRunConfig::canonical_text() const {
  std::string methods_text;
  for (Method m : methods) {
    if (!methods_text.empty()) methods_text += ',';
    methods_text += to_string(m);
  }
  std::string out;
  auto put = [&](std::string_view key, auto value) {
    out += fmt::format("{}={}\n", key, value);
  };
  put("methods", methods_text);
  put("factor", sataudit::to_string(factor));
  put("seed", seed);
  put("k", k);
  put("default_thresholds", default_thresholds);
  put("fits_dir", fits_dir);
  put("dwell_threshold", metric.dwell_threshold_s);
  put("reform_token_overlap", metric.reform_token_overlap);
  put("reform_edit_distance", metric.reform_edit_distance);
  put("min_impressions_per_group", match.min_impressions_per_group);
  put("serp_prefix_len", match.serp_prefix_len);
  put("require_navigational", match.require_navigational);
  put("navigational_concentration", match.navigational_concentration);
  put("var_age", priors.var_age);
  put("var_gender", priors.var_gender);
  put("var_topic", priors.var_topic);
  put("var_interaction", priors.var_interaction);
  put("empirical_bayes_rounds", priors.empirical_bayes_rounds);
  put("mlm_max_rows", mlm_max_rows);
  put("query_fraction", query_fraction);
  put("pairs_per_query", pairs_per_query);
  put("min_groups", eligibility.min_groups);
  put("min_impressions", eligibility.min_impressions);
  put("pair_prior_variance", pair_prior_variance);
  return out;
}

void apply_audit_setting(AuditRunConfig& c, std::string_view key, std::string_view v) {
  auto real = [&] { return parse_real(key, v); };
  auto integer = [&] { return parse_integer(key, v); };
  if (key == "input") c.input = std::string(v);
  else if (key == "format") c.format = std::string(v);
  else if (key == "methods") c.methods = parse_methods(v);
  else if (key == "factor") {
    auto f = parse_factor(v);
    if (!f) throw UsageError(fmt::format("unknown factor '{}'", v));
    c.factor = *f;
  } else if (key == "seed") c.seed = static_cast<std::uint64_t>(integer());
  else if (key == "k") c.k = real();
  else if (key == "default_thresholds") c.default_thresholds = parse_boolean(key, v);
  else if (key == "fits_dir") c.fits_dir = std::string(v);
  else if (key == "out") c.out_dir = std::string(v);
  else if (key == "dwell_threshold") {
    c.metric.dwell_threshold_s = real();
    c.match.dwell_threshold_s = c.metric.dwell_threshold_s;
  } else if (key == "reform_token_overlap") c.metric.reform_token_overlap = real();
  else if (key == "reform_edit_distance") c.metric.reform_edit_distance = real();
  else if (key == "min_impressions_per_group") c.match.min_impressions_per_group = static_cast<int>(integer());
  else if (key == "serp_prefix_len") c.match.serp_prefix_len = static_cast<int>(integer());
  else if (key == "require_navigational") c.match.require_navigational = parse_boolean(key, v);
  else if (key == "navigational_concentration") c.match.navigational_concentration = real();
  else if (key == "prior_variance") {
    c.priors.var_age = c.priors.var_gender = c.priors.var_topic =
        c.priors.var_interaction = real();
  } else if (key == "var_age") c.priors.var_age = real();
  else if (key == "var_gender") c.priors.var_gender = real();
  else if (key == "var_topic") c.priors.var_topic = real();
  else if (key == "var_interaction") c.priors.var_interaction = real();
  else if (key == "empirical_bayes_rounds") c.priors.empirical_bayes_rounds = static_cast<int>(integer());
  else if (key == "mlm_max_rows") {
    auto n = integer();
    if (n < 0) throw UsageError("mlm_max_rows must be >= 0");
    c.mlm_max_rows = static_cast<std::size_t>(n);
  } else if (key == "query_fraction") c.query_fraction = real();
  else if (key == "pairs_per_query") c.pairs_per_query = static_cast<int>(integer());
  else if (key == "min_groups") c.eligibility.min_groups = static_cast<int>(integer());
  else if (key == "min_impressions") c.eligibility.min_impressions = static_cast<int>(integer());
  else if (key == "pair_prior_variance") c.pair_prior_variance = real();
  else throw UsageError(fmt::format("unknown audit setting '{}'", key));
}

namespace {

constexpr std::string_view kDefaultOutDir = "sataudit_out";

// --out, then SATAUDIT_OUT_DIR, then the config file, then the default.
fs::path resolve_out_dir(const std::string& flag, const std::string& from_config) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("SATAUDIT_OUT_DIR"); env && *env) return env;
  if (!from_config.empty()) return from_config;
  return std::string(kDefaultOutDir);
}

class OutputDir {
 public:
  explicit OutputDir(fs::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw UsageError(fmt::format("cannot create output directory {}", dir_.string()));
  }
  void write(const std::string& name, std::string_view content) {
    const fs::path p = dir_ / name;
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw UsageError(fmt::format("cannot write {}", p.string()));
    out << content;
    if (!out) throw UsageError(fmt::format("cannot write {}", p.string()));
    files_.push_back(name);
  }
  const fs::path& path() const { return dir_; }
  std::vector<std::string> files() const {
    auto f = files_;
    std::sort(f.begin(), f.end());
    return f;
  }

 private:
  fs::path dir_;
  std::vector<std::string> files_;
};

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot read {}", p.string()));
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string strip_hash(std::string line) {
  if (line.rfind("# ", 0) == 0) line.erase(0, 2);
  while (!line.empty() && line.back() == '\n') line.pop_back();
  return line;
}

LogFormat resolve_format(const std::string& flag, const fs::path& path) {
  if (flag.empty()) return format_for_path(path);
  auto f = parse_log_format(flag);
  if (!f) throw UsageError(fmt::format("unknown log format '{}'", flag));
  return *f;
}

LogCorpus load_corpus(const std::string& path, const std::string& format,
                      const MetricConfig& metric, std::ostream& err) {
  LogCorpus corpus = ingest(path, resolve_format(format, path));
  if (corpus.stats.skipped > 0) {
    err << fmt::format("sataudit: warning: skipped {} malformed records\n",
                       corpus.stats.skipped);
  }
  if (corpus.empty()) throw DataError("input log has no valid impressions");
  if (corpus.source == LogSource::Internal) derive_reformulation_flags(corpus, metric);
  return corpus;
}

ordered_json meta_json(const RunMetadata& meta) {
  return {{"tool", "sataudit"},
          {"version", library_version()},
          {"seed", meta.seed},
          {"config_hash", meta.config_hash}};
}

ordered_json panel_json(const NormalizedPanel& panel, Factor factor) {
  ordered_json groups = ordered_json::array();
  for (std::size_t g = 0; g < panel.groups.size(); ++g) {
    const auto& s = panel.groups[g];
    groups.push_back({{"group", group_label(factor, s.group)},
                      {"raw", s.raw},
                      {"normalized", panel.normalized[g]},
                      {"stderr", s.std_error},
                      {"n_queries", s.n_queries},
                      {"n_impressions", s.n_impressions}});
  }
  return {{"metric", sataudit::to_string(panel.metric)},
          {"groups", groups},
          {"degenerate", panel.degenerate},
          {"raw_gap", panel.raw_gap},
          {"gap_in_stderrs", panel.gap_in_stderrs}};
}

ordered_json scores_json(const NormalizedGroupScores& scores) {
  ordered_json panels = ordered_json::array();
  for (const auto& p : scores.panels) panels.push_back(panel_json(p, scores.factor));
  return panels;
}

ordered_json grid_json(const AgeGrid& grid) {
  ordered_json rows = ordered_json::object();
  for (AgeGroup a : kAgeGroups) {
    ordered_json row = ordered_json::object();
    for (AgeGroup b : kAgeGroups) {
      row[std::string(sataudit::to_string(b))] =
          grid[static_cast<int>(a)][static_cast<int>(b)];
    }
    rows[std::string(sataudit::to_string(a))] = row;
  }
  return rows;
}

// ---- generate -------------------------------------------------------------

struct GenerateOptions {
  std::string preset;
  std::string config;
  std::vector<std::string> sets;
  std::uint64_t seed = 0;
  bool seed_given = false;
  int users_per_profile = 0;
  bool users_given = false;
  std::string out;
  std::string format = "csv";
};

std::pair<std::string, std::string> split_setting(const std::string& s) {
  auto eq = s.find('=');
  if (eq == std::string::npos) throw UsageError(fmt::format("--set expects key=value, got '{}'", s));
  return {s.substr(0, eq), s.substr(eq + 1)};
}

int do_generate(const GenerateOptions& o, std::ostream& out) {
  KeyValues file_kv;
  if (!o.config.empty()) file_kv = read_key_values(o.config);
  std::string preset = "null";
  for (const auto& [k, v] : file_kv) {
    if (k == "preset") preset = v;
  }
  if (!o.preset.empty()) preset = o.preset;

  ScenarioParams params = preset_params(preset);
  for (const auto& [k, v] : file_kv) {
    if (k != "preset") apply_setting(params, k, v);
  }
  for (const auto& s : o.sets) {
    auto [k, v] = split_setting(s);
    apply_setting(params, k, v);
  }
  if (o.seed_given) params.seed = o.seed;
  if (o.users_given) params.users_per_profile = o.users_per_profile;

  const auto format = parse_log_format(o.format);
  if (!format) throw UsageError(fmt::format("unknown log format '{}'", o.format));

  const std::string canonical = sataudit::canonical_text(params);
  const RunMetadata meta{params.seed, fnv1a_hex(canonical)};
  auto [corpus, truth] = generate(build_scenario(params));

  OutputDir dir(resolve_out_dir(o.out, {}));
  const std::string corpus_name = *format == LogFormat::Csv ? "corpus.csv" : "corpus.ndjson";
  dir.write(corpus_name, emit_text(corpus, *format, {strip_hash(metadata_line(meta))}));
  dir.write("ground_truth.csv", metadata_line(meta) + ground_truth_csv(truth));
  dir.write("scenario.cfg", metadata_line(meta) + canonical);
  out << fmt::format("generated {} impressions ({}) into {}\n", corpus.size(),
                     params.preset, dir.path().string());
  return 0;
}

// ---- metrics --------------------------------------------------------------

int do_metrics(const std::string& input, const std::string& format,
               const std::string& out_flag, double dwell, std::uint64_t seed,
               std::ostream& out, std::ostream& err) {
  MetricConfig mc;
  mc.dwell_threshold_s = dwell;
  LogCorpus corpus = load_corpus(input, format, mc, err);
  const auto vectors = metric_vectors(corpus, mc);
  const RunMetadata meta{
      seed, fnv1a_hex(fmt::format("dwell_threshold={}\ninput={}\n", dwell,
                                  fnv1a_hex(read_file(input))))};
  OutputDir dir(resolve_out_dir(out_flag, {}));
  dir.write("metrics.csv", metrics_csv(corpus, vectors, meta));
  out << fmt::format("wrote metrics for {} impressions into {}\n", corpus.size(),
                     dir.path().string());
  return 0;
}

// ---- audit ----------------------------------------------------------------

std::optional<MultilevelFit> load_fit(const std::string& dir, MetricKind metric) {
  const fs::path p = fs::path(dir) / fmt::format("fit_{}.json", sataudit::to_string(metric));
  if (!fs::exists(p)) return std::nullopt;
  return fit_from_json(read_file(p));
}

const MultilevelFit* find_fit(std::map<MetricKind, MultilevelFit>& fits,
                              const AuditRunConfig& cfg, MetricKind metric) {
  if (auto it = fits.find(metric); it != fits.end()) return &it->second;
  if (!cfg.fits_dir.empty()) {
    if (auto f = load_fit(cfg.fits_dir, metric)) {
      return &fits.emplace(metric, std::move(*f)).first->second;
    }
  }
  return nullptr;
}

ordered_json thresholds_json(const PairThresholds& th) {
  return {{"k", th.k},
          {"gu_strong", th.gu_strong},
          {"scc_strong", th.scc_strong},
          {"gu_weak", th.gu_weak},
          {"scc_weak", th.scc_weak},
          {"pcc_external", th.pcc_external}};
}

int do_audit(AuditRunConfig cfg, std::ostream& out, std::ostream& err) {
  cfg.validate();
  const std::string input_hash = fnv1a_hex(read_file(cfg.input));
  const RunMetadata meta{cfg.seed,
                         fnv1a_hex(cfg.canonical_text() + "input=" + input_hash + "\n")};
  LogCorpus corpus = load_corpus(cfg.input, cfg.format, cfg.metric, err);
  OutputDir dir(resolve_out_dir(cfg.out_dir, {}));
  auto has = [&](Method m) { return cfg.methods.count(m) > 0; };

  ordered_json summary;
  summary["meta"] = meta_json(meta);
  summary["input"] = {{"path", fs::path(cfg.input).filename().string()},
                      {"content_hash", input_hash},
                      {"impressions", corpus.size()},
                      {"skipped_records", corpus.stats.skipped},
                      {"source", corpus.source == LogSource::Internal ? "internal" : "external"}};
  summary["factor"] = sataudit::to_string(cfg.factor);
  ordered_json methods = ordered_json::array();
  for (Method m : cfg.methods) methods.push_back(to_string(m));
  summary["methods"] = methods;
  summary["raw_matched_divergence"] = nullptr;
  ordered_json warnings = ordered_json::array();

  const bool internal_needed = has(Method::Raw) || has(Method::Matched) ||
                               has(Method::Multilevel) || has(Method::Pairwise);
  std::vector<MetricVector> vectors;
  if (internal_needed) vectors = metric_vectors(corpus, cfg.metric);

  std::optional<RawScores> raw;
  if (has(Method::Raw) || has(Method::Matched)) {
    raw = query_averaged_scores(corpus, vectors, cfg.factor);
  }
  if (has(Method::Raw)) {
    const auto norm = normalize(*raw);
    dir.write("raw_aggregate.csv", aggregate_csv(norm, meta));
    dir.write("query_kl.csv", query_kl_csv(corpus, cfg.factor, meta));
    dir.write("query_classes.csv", query_class_csv(corpus, meta));
    summary["raw"] = {{"panels", scores_json(norm)}};
    for (const auto& w : raw->warnings) warnings.push_back(w);
  }

  if (has(Method::Matched)) {
    const auto cohort = match_contexts(corpus, cfg.factor, cfg.match);
    dir.write("attrition.csv", attrition_csv(cohort, meta));
    if (cohort.empty()) {
      throw DataError("matched cohort is empty: no impression context survives the filters");
    }
    const auto matched = query_averaged_scores(corpus, vectors, cfg.factor, cohort.impressions);
    const auto norm = normalize(matched);
    dir.write("matched_aggregate.csv", aggregate_csv(norm, meta));
    const auto cmp = compare_raw_matched(*raw, matched);
    dir.write("comparison.csv", comparison_csv(cmp, meta));
    ordered_json gaps = ordered_json::array();
    for (const auto& p : cmp.panels) {
      gaps.push_back({{"metric", sataudit::to_string(p.metric)},
                      {"raw_gap", p.raw_gap},
                      {"matched_gap", p.matched_gap},
                      {"diverges", p.diverges}});
    }
    summary["raw_matched_divergence"] = cmp.raw_matched_divergence;
    summary["matched"] = {{"impressions", cohort.impressions.size()},
                          {"queries", cohort.by_query.size()},
                          {"panels", scores_json(norm)},
                          {"comparison", gaps}};
  }

  std::map<MetricKind, MultilevelFit> fits;
  if (has(Method::Multilevel)) {
    const auto difficulty = estimate_difficulty(corpus, vectors, Factor::Age);
    dir.write("difficulty.csv", difficulty_csv(difficulty, meta));
    const auto grid = difficulty_grid();
    ordered_json ml = ordered_json::array();
    for (MetricKind k : kMetricKinds) {
      auto obs = build_observations(corpus, vectors, difficulty, k);
      if (cfg.mlm_max_rows > 0) obs = sample_observations(obs, cfg.mlm_max_rows, cfg.seed);
      auto fit = fit_multilevel(obs, family_for(k), cfg.priors);
      const std::string name(sataudit::to_string(k));
      dir.write(fmt::format("fit_{}.json", name), with_metadata(fit_to_json(fit), meta));
      const auto rows = prediction_grid(fit, fit.topics, grid);
      dir.write(fmt::format("prediction_grid_{}.csv", name), prediction_grid_csv(fit, rows, meta));
      ml.push_back({{"metric", name},
                    {"family", sataudit::to_string(fit.family.family)},
                    {"observations", fit.n_observations},
                    {"iterations", fit.convergence.iterations},
                    {"converged", fit.convergence.converged},
                    {"max_group_gap", max_group_gap(fit, grid)}});
      fits.emplace(k, std::move(fit));
    }
    summary["multilevel"] = ml;
  }

  PairSampling sampling;
  sampling.query_fraction = cfg.query_fraction;
  sampling.pairs_per_query = cfg.pairs_per_query;
  sampling.seed = cfg.seed;
  sampling.factor = cfg.factor;
  QueryEligibility eligibility = cfg.eligibility;
  eligibility.factor = cfg.factor;
  PairModelConfig model_cfg;
  model_cfg.prior_variance = cfg.pair_prior_variance;

  auto pair_section = [&](LabelMode mode, const LogCorpus& source,
                          std::span<const MetricVector> vecs, const std::string& stem) {
    PairThresholds th;
    th.k = cfg.k;
    std::string source_label = "defaults";
    if (!cfg.default_thresholds) {
      const auto grid = difficulty_grid();
      ThresholdDerivation d;
      if (mode == LabelMode::Internal) {
        const auto* gu = find_fit(fits, cfg, MetricKind::GU);
        const auto* scc = find_fit(fits, cfg, MetricKind::SCC);
        if (!gu || !scc) {
          throw UsageError("pairwise needs fit_GU.json and fit_SCC.json in --fits-dir "
                           "(or --default-thresholds)");
        }
        d = derive_thresholds(gu, scc, nullptr, cfg.k, grid);
      } else {
        const auto* pcc = find_fit(fits, cfg, MetricKind::PCC);
        if (!pcc) {
          throw UsageError("external needs fit_PCC.json in --fits-dir (or --default-thresholds)");
        }
        d = derive_thresholds(nullptr, nullptr, pcc, cfg.k, grid);
      }
      for (const auto& w : d.warnings) {
        // Only the metrics this labeler reads matter here.
        const bool relevant = mode == LabelMode::Internal ? w.rfind("PCC", 0) != 0
                                                          : w.rfind("PCC", 0) == 0;
        if (!relevant) continue;
        warnings.push_back(w);
        err << "sataudit: warning: " << w << '\n';
      }
      th = d.thresholds;
      source_label = "fits";
    }
    auto audit = run_pair_audit(source, vecs, mode, th, sampling, eligibility, model_cfg);
    auto doc = ordered_json::parse(pair_audit_to_json(audit));
    doc["threshold_source"] = source_label;
    dir.write(stem + ".json", with_metadata(doc.dump(), meta));
    dir.write(stem + "_grid.csv", pair_grid_csv(audit.grid, meta));
    return ordered_json{{"threshold_source", source_label},
                        {"thresholds", thresholds_json(audit.thresholds)},
                        {"eligible_queries", audit.eligible_queries},
                        {"sampled_pairs", audit.sampled_pairs},
                        {"labels", {{"positive", audit.counts.positive},
                                    {"negative", audit.counts.negative},
                                    {"zero", audit.counts.zero}}},
                        {"grid", grid_json(audit.grid)}};
  };
  if (has(Method::Pairwise)) {
    summary["pairwise"] = pair_section(LabelMode::Internal, corpus, vectors, "pair_audit");
  }
  if (has(Method::External)) {
    const LogCorpus clicks =
        corpus.source == LogSource::External ? corpus : to_clicks_only(corpus);
    summary["external"] = pair_section(LabelMode::External, clicks, {}, "external_pair_audit");
  }

  summary["warnings"] = warnings;
  auto files = dir.files();
  files.push_back("summary.json");
  std::sort(files.begin(), files.end());
  summary["files"] = files;
  dir.write("summary.json", summary.dump(2) + "\n");
  out << fmt::format("audit of {} impressions written to {}\n", corpus.size(),
                     dir.path().string());
  if (!summary["raw_matched_divergence"].is_null()) {
    out << fmt::format("raw_matched_divergence: {}\n",
                       summary["raw_matched_divergence"].get<bool>());
  }
  return 0;
}

// ---- report ---------------------------------------------------------------

std::string fmt_num(const ordered_json& v) {
  if (v.is_number_float()) return fmt::format("{:.4f}", v.get<double>());
  if (v.is_number()) return v.dump();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_string()) return v.get<std::string>();
  return "-";
}

void panels_markdown(std::string& md, const ordered_json& panels) {
  md += "| metric | group | raw | normalized | stderr | queries |\n";
  md += "|---|---|---|---|---|---|\n";
  for (const auto& p : panels) {
    for (const auto& g : p["groups"]) {
      md += fmt::format("| {} | {} | {} | {} | {} | {} |\n", fmt_num(p["metric"]),
                        fmt_num(g["group"]), fmt_num(g["raw"]), fmt_num(g["normalized"]),
                        fmt_num(g["stderr"]), fmt_num(g["n_queries"]));
    }
  }
  md += "\n";
}

std::string plot_csv(const RunMetadata& meta, const ordered_json& panels) {
  std::string csv = metadata_line(meta) + "metric,group,normalized,stderr\n";
  for (const auto& p : panels) {
    for (const auto& g : p["groups"]) {
      csv += fmt::format("{},{},{},{}\n", p["metric"].get<std::string>(),
                         g["group"].get<std::string>(), g["normalized"].get<double>(),
                         g["stderr"].get<double>());
    }
  }
  return csv;
}

int do_report(const std::string& audit_dir, const std::string& out_flag, std::ostream& out) {
  const fs::path src(audit_dir);
  const std::string summary_text = read_file(src / "summary.json");
  auto summary = ordered_json::parse(summary_text, nullptr, false);
  if (summary.is_discarded() || !summary.is_object() || !summary.contains("meta")) {
    throw DataError("summary.json is not a sataudit audit summary");
  }
  const RunMetadata meta{summary["meta"]["seed"].get<std::uint64_t>(),
                         fnv1a_hex(summary_text)};
  OutputDir dir(resolve_out_dir(out_flag, {}));

  std::string md = "# sataudit report\n\n";
  md += fmt::format("- version: {}\n- seed: {}\n- audit config hash: {}\n- input: {} ({} impressions)\n- factor: {}\n\n",
                    fmt_num(summary["meta"]["version"]), meta.seed,
                    fmt_num(summary["meta"]["config_hash"]),
                    fmt_num(summary["input"]["path"]), fmt_num(summary["input"]["impressions"]),
                    fmt_num(summary["factor"]));
  if (summary.contains("raw")) {
    md += "## Raw comparison\n\n";
    panels_markdown(md, summary["raw"]["panels"]);
    dir.write("plot_raw.csv", plot_csv(meta, summary["raw"]["panels"]));
  }
  if (summary.contains("matched")) {
    const auto& m = summary["matched"];
    md += fmt::format("## Context-matched comparison\n\n{} impressions over {} queries.\n\n",
                      fmt_num(m["impressions"]), fmt_num(m["queries"]));
    panels_markdown(md, m["panels"]);
    dir.write("plot_matched.csv", plot_csv(meta, m["panels"]));
    md += "| metric | raw gap | matched gap | diverges |\n|---|---|---|---|\n";
    for (const auto& g : m["comparison"]) {
      md += fmt::format("| {} | {} | {} | {} |\n", fmt_num(g["metric"]), fmt_num(g["raw_gap"]),
                        fmt_num(g["matched_gap"]), fmt_num(g["diverges"]));
    }
    md += fmt::format("\nraw_matched_divergence: {}\n\n", fmt_num(summary["raw_matched_divergence"]));
  }
  if (summary.contains("multilevel")) {
    md += "## Multilevel model\n\n| metric | family | observations | converged | max group gap |\n|---|---|---|---|---|\n";
    for (const auto& f : summary["multilevel"]) {
      md += fmt::format("| {} | {} | {} | {} | {} |\n", fmt_num(f["metric"]), fmt_num(f["family"]),
                        fmt_num(f["observations"]), fmt_num(f["converged"]),
                        fmt_num(f["max_group_gap"]));
      // Curves per age group, averaged over topics.
      const auto grid_path = src / fmt::format("prediction_grid_{}.csv", f["metric"].get<std::string>());
      if (!fs::exists(grid_path)) continue;
      std::map<std::pair<std::string, std::string>, std::pair<double, int>> acc;
      for (const auto& row : read_report_csv(read_file(grid_path))) {
        auto& a = acc[{row.at("age"), row.at("difficulty")}];
        a.first += parse_real("predicted", row.at("predicted"));
        ++a.second;
      }
      std::vector<std::tuple<std::string, double, double>> curve;
      for (const auto& [key, v] : acc) {
        curve.emplace_back(key.first, parse_real("difficulty", key.second), v.first / v.second);
      }
      std::sort(curve.begin(), curve.end());
      std::string csv = metadata_line(meta) + "age,difficulty,predicted\n";
      for (const auto& [age, x, y] : curve) csv += fmt::format("{},{},{}\n", age, x, y);
      dir.write(fmt::format("plot_curves_{}.csv", f["metric"].get<std::string>()), csv);
    }
    md += "\n";
  }
  for (const char* key : {"pairwise", "external"}) {
    if (!summary.contains(key)) continue;
    const auto& p = summary[key];
    md += fmt::format("## Pairwise audit ({})\n\nthresholds from {}; labels +{} / -{} / 0 {}\n\n",
                      key, fmt_num(p["threshold_source"]), fmt_num(p["labels"]["positive"]),
                      fmt_num(p["labels"]["negative"]), fmt_num(p["labels"]["zero"]));
    md += "| a_i \\ a_j | G1 | G2 | G3 | G4 |\n|---|---|---|---|---|\n";
    std::string csv = metadata_line(meta) + "age_i,G1,G2,G3,G4\n";
    for (const auto& [ai, row] : p["grid"].items()) {
      md += "| " + ai;
      csv += ai;
      for (const auto& [aj, v] : row.items()) {
        md += " | " + fmt_num(v);
        csv += fmt::format(",{}", v.get<double>());
      }
      md += " |\n";
      csv += "\n";
    }
    md += "\n";
    dir.write(fmt::format("plot_{}_grid.csv", key), csv);
  }
  if (!summary["warnings"].empty()) {
    md += "## Warnings\n\n";
    for (const auto& w : summary["warnings"]) md += "- " + w.get<std::string>() + "\n";
    md += "\n";
  }
  dir.write("report.md", md);
  out << fmt::format("report written to {}\n", dir.path().string());
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Audit search logs for differential satisfaction across demographic groups",
               "sataudit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(library_version()));

  GenerateOptions gen;
  auto* g = app.add_subcommand("generate", "Write a synthetic corpus and its ground truth");
  g->add_option("--preset", gen.preset, "null, query_mix_confound, dwell_confound, true_gap, mixed");
  g->add_option("--config", gen.config, "Scenario key = value file");
  g->add_option("--set", gen.sets, "Scenario override key=value (repeatable)");
  auto* gseed = g->add_option("--seed", gen.seed, "Random seed");
  auto* gusers = g->add_option("--users-per-profile", gen.users_per_profile, "Users per age x gender profile");
  g->add_option("--out", gen.out, "Output directory");
  g->add_option("--format", gen.format, "csv or ndjson")->capture_default_str();

  std::string m_input, m_format, m_out;
  double m_dwell = 30.0;
  std::uint64_t m_seed = 0;
  auto* m = app.add_subcommand("metrics", "Per-impression metric vectors");
  m->add_option("--input", m_input, "Log file")->required();
  m->add_option("--format", m_format, "csv or ndjson (default: from extension)");
  m->add_option("--out", m_out, "Output directory");
  m->add_option("--dwell-threshold", m_dwell, "Successful-click dwell threshold in seconds");
  m->add_option("--seed", m_seed, "Seed recorded in the metadata header");

  std::string a_config, a_methods, a_factor, a_fits, a_out, a_input, a_format;
  std::vector<std::string> a_sets;
  std::uint64_t a_seed = 0;
  double a_k = 0, a_fraction = 0;
  int a_ppq = 0;
  bool a_defaults = false;
  auto* a = app.add_subcommand("audit", "Run audit methods over a log");
  a->add_option("--input", a_input, "Log file");
  a->add_option("--format", a_format, "csv or ndjson (default: from extension)");
  a->add_option("--config", a_config, "Audit key = value file");
  auto* amethods = a->add_option("--methods", a_methods, "raw,matched,multilevel,pairwise,external");
  auto* afactor = a->add_option("--factor", a_factor, "age or gender");
  auto* aseed = a->add_option("--seed", a_seed, "Random seed");
  auto* ak = a->add_option("--k", a_k, "Confidence multiplier for k*delta thresholds");
  auto* adef = a->add_flag("--default-thresholds", a_defaults, "Use the fixed labeling thresholds");
  auto* afits = a->add_option("--fits-dir", a_fits, "Directory holding fit_<metric>.json files");
  auto* afrac = a->add_option("--query-fraction", a_fraction, "Share of eligible queries to pair");
  auto* appq = a->add_option("--pairs-per-query", a_ppq, "Pairs sampled per query");
  a->add_option("--set", a_sets, "Audit override key=value (repeatable)");
  a->add_option("--out", a_out, "Output directory");

  std::string r_dir, r_out;
  auto* r = app.add_subcommand("report", "Summary tables and plot data from an audit directory");
  r->add_option("--audit-dir", r_dir, "Audit output directory")->required();
  r->add_option("--out", r_out, "Output directory");

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  if (!argv_rev.empty()) argv_rev.pop_back();  // program name
  try {
    app.parse(argv_rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << library_version() << '\n';
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "sataudit: usage error: " << e.what() << '\n';
    return 1;
  }

  try {
    if (*g) {
      gen.seed_given = gseed->count() > 0;
      gen.users_given = gusers->count() > 0;
      return do_generate(gen, out);
    }
    if (*m) return do_metrics(m_input, m_format, m_out, m_dwell, m_seed, out, err);
    if (*a) {
      AuditRunConfig cfg;
      if (!a_config.empty()) {
        for (const auto& [k, v] : read_key_values(a_config)) apply_audit_setting(cfg, k, v);
      }
      for (const auto& s : a_sets) {
        auto [k, v] = split_setting(s);
        apply_audit_setting(cfg, k, v);
      }
      if (!a_input.empty()) cfg.input = a_input;
      if (!a_format.empty()) cfg.format = a_format;
      if (amethods->count()) apply_audit_setting(cfg, "methods", a_methods);
      if (afactor->count()) apply_audit_setting(cfg, "factor", a_factor);
      if (aseed->count()) cfg.seed = a_seed;
      if (ak->count()) cfg.k = a_k;
      if (adef->count()) cfg.default_thresholds = a_defaults;
      if (afits->count()) cfg.fits_dir = a_fits;
      if (afrac->count()) cfg.query_fraction = a_fraction;
      if (appq->count()) cfg.pairs_per_query = a_ppq;
      cfg.out_dir = resolve_out_dir(a_out, cfg.out_dir).string();
      return do_audit(std::move(cfg), out, err);
    }
    if (*r) return do_report(r_dir, r_out, out);
  } catch (const UsageError& e) {
    err << "sataudit: usage error: " << e.what() << '\n';
    return 1;
  } catch (const NumericalError& e) {
    err << "sataudit: numerical error: " << e.what() << '\n';
    return 3;
  } catch (const DataError& e) {
    err << "sataudit: data error: " << e.what() << '\n';
    return 2;
  } catch (const nlohmann::json::exception& e) {
    err << "sataudit: data error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "sataudit: data error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}

}  // namespace sataudit::cli
