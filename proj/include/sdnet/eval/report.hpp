#pragma once

#include "sdnet/eval/metrics.hpp"

namespace sdnet::eval {

enum class Variant { NoSeg, WithSeg, CitOnly, SdNet };
const char* to_string(Variant v);
Variant variant_from_string(const std::string& s);

struct RunResult {
  int repeat = 0;
  int fold = 0;
  ConfusionMatrix cm;
  MetricsRecord metrics;
  SeverityMetrics severity;
};

/// One experiment's outcome: per-run records plus mean +/- sample std over all
/// repeats x folds runs. `meta` carries provenance (seeds, hashes, the std
/// convention) and never affects aggregation.
struct AggregateReport {
  std::string variant;
  std::string config_hash;
  std::vector<RunResult> runs;
  std::map<std::string, MeanStd> aggregate;           // metric name -> stats
  std::map<std::string, MeanStd> severity_aggregate;  // severity name -> stats
  util::json meta = util::json::object();

  util::json to_json() const;
  static AggregateReport from_json(const util::json& j);
};

/// Fills `aggregate` and `severity_aggregate` from `runs`. With
/// `repeat_level_std` the spread is computed over per-repeat means instead of
/// all runs (the alternative reading of "std of the 25 executions").
void aggregate_runs(AggregateReport& report, bool repeat_level_std = false);

/// Structural validation of a report JSON document; returns the list of
/// problems (empty when valid).
std::vector<std::string> validate_report_json(const util::json& j);

/// Renders one table row per report: specificity/precision/F1 for N,
/// sensitivity/precision/F1 for P, then accuracy, as "mean +/- std" percent.
std::string render_table(const std::vector<AggregateReport>& reports);

}  // namespace sdnet::eval
