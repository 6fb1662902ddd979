#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "mavg/numeric.hpp"

namespace mavg {

enum class Study { kLinear, kForecast, kCausal };
std::string_view study_name(Study s);
Study parse_study(std::string_view name);

struct StudyConfig {
  Study study = Study::kLinear;
  std::size_t runs = 1000;
  std::size_t n = 500;
  std::uint64_t seed = 20180101;
  std::size_t workers = 1;
  std::string out_dir = "out";
  std::size_t folds = 10;
  std::size_t horizon = 6;
  std::size_t truth_n = 1000000;
  bool persistence = true;
  bool resume = true;
  std::vector<std::string> learner_sets{"SL", "SL+"};

  void validate() const;
  /// Stable text form of every setting that affects results.
  std::string fingerprint() const;
};

/// Desk-scale defaults per study, or the published run counts with full_scale.
StudyConfig default_config(Study study, bool full_scale = false);

/// Applies one `key = value` setting; throws for unknown keys or malformed values.
void apply_setting(StudyConfig& cfg, std::string_view key, std::string_view value);

/// One (run, method) cell. Values are named vectors; NaN marks entries that do not apply.
struct RunRecord {
  std::size_t run = 0;
  std::string method;
  bool ok = true;
  std::string error;
  std::map<std::string, std::vector<double>> values;

  const std::vector<double>& get(const std::string& key) const;
  double scalar(const std::string& key) const { return get(key).at(0); }
};

std::string to_json_line(const RunRecord& r);
RunRecord from_json_line(std::string_view line);

/// Every record of one replication, in a fixed method order.
std::vector<RunRecord> run_single(const StudyConfig& cfg, std::size_t run);

struct MetricsBlock {
  std::string name;
  std::vector<std::string> columns;
  struct Row {
    std::string label;
    std::vector<double> values;
  };
  std::vector<Row> rows;
};

struct MetricsTable {
  std::string title;
  std::vector<MetricsBlock> blocks;
  std::vector<std::string> notes;

  const MetricsBlock& block(const std::string& name) const;
  double value(const std::string& block, const std::string& row, const std::string& column) const;
};

struct StudyResult {
  StudyConfig config;
  std::vector<RunRecord> records;  // sorted by (run, method order)
  MetricsTable table;
  std::size_t reused_runs = 0;     // runs taken from an earlier, interrupted invocation
};

/// Progress callback: (completed runs, total runs).
using Progress = std::function<void(std::size_t, std::size_t)>;

/// Runs (or resumes) a study and writes runs_<study>.ndjson, table_<study>.csv,
/// table_<study>.md and meta.txt under cfg.out_dir.
StudyResult run_study(const StudyConfig& cfg, const Progress& progress = {});

MetricsTable aggregate(const StudyConfig& cfg, const std::vector<RunRecord>& records);

void emit_csv(const MetricsTable& table, const std::string& path);
void emit_markdown(const MetricsTable& table, const std::string& path);
std::string to_csv(const MetricsTable& table);
std::string to_markdown(const MetricsTable& table);

/// Method order used in records and tables.
std::vector<std::string> study_methods(const StudyConfig& cfg);

/// Resolved conventions written to meta.txt.
std::vector<std::pair<std::string, std::string>> resolved_decisions(const StudyConfig& cfg);

}  // namespace mavg
