#pragma once

#include <map>
#include <set>

#include "sdnet/dataset/types.hpp"
#include "sdnet/util/jsonio.hpp"

namespace sdnet::eval {

SDNET_DEFINE_ERROR(LengthMismatch);
SDNET_DEFINE_ERROR(EmptyInput);
SDNET_DEFINE_ERROR(EmptyConfusion);
SDNET_DEFINE_ERROR(MissingSeverity);

struct ConfusionMatrix {
  long tp = 0, fp = 0, tn = 0, fn = 0;

  long total() const { return tp + fp + tn + fn; }
  util::json to_json() const { return {{"tp", tp}, {"fp", fp}, {"tn", tn}, {"fn", fn}}; }
  static ConfusionMatrix from_json(const util::json& j) {
    return {j.at("tp").get<long>(), j.at("fp").get<long>(), j.at("tn").get<long>(),
            j.at("fn").get<long>()};
  }
};

/// P is the positive class.
ConfusionMatrix confusion(const std::vector<dataset::ClassLabel>& predictions,
                          const std::vector<dataset::ClassLabel>& labels);

/// Undefined ratios (0/0) report value 0 plus a flag instead of throwing, so a
/// degenerate fold never aborts an experiment.
struct MetricsRecord {
  double sensitivity = 0;
  double specificity = 0;
  double precision_p = 0;
  double precision_n = 0;
  double f1_p = 0;
  double f1_n = 0;
  double accuracy = 0;
  std::set<std::string> flags;

  util::json to_json() const;
  static MetricsRecord from_json(const util::json& j);
};

MetricsRecord metrics(const ConfusionMatrix& cm);

struct SeverityMetrics {
  struct Level {
    long correct = 0;
    long total = 0;
    double accuracy = 0;
  };
  std::map<dataset::SeverityLevel, Level> levels;      // only levels that occur
  std::set<dataset::SeverityLevel> absent;             // flagged, not reported as 0

  util::json to_json() const;
  static SeverityMetrics from_json(const util::json& j);
};

/// Per-severity accuracy over the positive cases: correct(S) / total(S).
/// Throws MissingSeverity when a positive case carries no severity level.
SeverityMetrics severity_accuracy(const std::vector<dataset::ClassLabel>& decisions,
                                  const std::vector<dataset::ClassLabel>& labels,
                                  const std::vector<dataset::SeverityLevel>& severities);

struct MeanStd {
  double mean = 0;
  double std = 0;
  int n = 0;
};

/// Mean and sample (n-1) standard deviation; single-value series report std 0.
MeanStd mean_std(const std::vector<double>& values);

}  // namespace sdnet::eval
