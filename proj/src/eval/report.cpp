#include "sdnet/eval/report.hpp"

#include <iomanip>
#include <sstream>

namespace sdnet::eval {

const char* to_string(Variant v) {
  switch (v) {
    case Variant::NoSeg: return "no_seg";
    case Variant::WithSeg: return "with_seg";
    case Variant::CitOnly: return "cit_only";
    case Variant::SdNet: return "sdnet";
  }
  return "?";
}

Variant variant_from_string(const std::string& s) {
  if (s == "no_seg") return Variant::NoSeg;
  if (s == "with_seg") return Variant::WithSeg;
  if (s == "cit_only") return Variant::CitOnly;
  if (s == "sdnet") return Variant::SdNet;
  throw ConfigError("unknown variant '" + s + "' (expected no_seg, with_seg, cit_only, sdnet)");
}

namespace {

util::json mean_std_json(const MeanStd& ms) {
  return {{"mean", ms.mean}, {"std", ms.std}, {"n", ms.n}};
}

MeanStd mean_std_from_json(const util::json& j) {
  return {j.at("mean").get<double>(), j.at("std").get<double>(), j.value("n", 0)};
}

const std::vector<std::pair<std::string, double MetricsRecord::*>> kMetricFields{
    {"sensitivity", &MetricsRecord::sensitivity},
    {"specificity", &MetricsRecord::specificity},
    {"precision_P", &MetricsRecord::precision_p},
    {"precision_N", &MetricsRecord::precision_n},
    {"f1_P", &MetricsRecord::f1_p},
    {"f1_N", &MetricsRecord::f1_n},
    {"accuracy", &MetricsRecord::accuracy}};

}  // namespace

util::json AggregateReport::to_json() const {
  util::json j;
  j["schema_version"] = kSchemaVersion;
  j["variant"] = variant;
  j["config_hash"] = config_hash;
  j["runs"] = util::json::array();
  for (const auto& run : runs)
    j["runs"].push_back({{"repeat", run.repeat},
                         {"fold", run.fold},
                         {"confusion", run.cm.to_json()},
                         {"metrics", run.metrics.to_json()},
                         {"severity", run.severity.to_json()}});
  j["aggregate"] = util::json::object();
  for (const auto& [name, ms] : aggregate) j["aggregate"][name] = mean_std_json(ms);
  j["severity_aggregate"] = util::json::object();
  for (const auto& [name, ms] : severity_aggregate)
    j["severity_aggregate"][name] = mean_std_json(ms);
  j["meta"] = meta;
  return j;
}

AggregateReport AggregateReport::from_json(const util::json& j) {
  AggregateReport r;
  r.variant = j.at("variant").get<std::string>();
  r.config_hash = j.value("config_hash", "");
  for (const auto& run : j.at("runs")) {
    RunResult rr;
    rr.repeat = run.at("repeat").get<int>();
    rr.fold = run.at("fold").get<int>();
    rr.cm = ConfusionMatrix::from_json(run.at("confusion"));
    rr.metrics = MetricsRecord::from_json(run.at("metrics"));
    rr.severity = SeverityMetrics::from_json(run.at("severity"));
    r.runs.push_back(std::move(rr));
  }
  for (const auto& [name, ms] : j.at("aggregate").items())
    r.aggregate[name] = mean_std_from_json(ms);
  for (const auto& [name, ms] : j.at("severity_aggregate").items())
    r.severity_aggregate[name] = mean_std_from_json(ms);
  if (j.contains("meta")) r.meta = j.at("meta");
  return r;
}

void aggregate_runs(AggregateReport& report, bool repeat_level_std) {
  report.aggregate.clear();
  report.severity_aggregate.clear();

  auto collapse = [&](const std::vector<std::pair<int, double>>& repeat_value) {
    std::vector<double> series;
    if (!repeat_level_std) {
      for (const auto& [_, v] : repeat_value) series.push_back(v);
      return series;
    }
    std::map<int, std::pair<double, int>> per_repeat;
    for (const auto& [rep, v] : repeat_value) {
      per_repeat[rep].first += v;
      per_repeat[rep].second += 1;
    }
    for (const auto& [_, acc] : per_repeat) series.push_back(acc.first / acc.second);
    return series;
  };

  for (const auto& [name, field] : kMetricFields) {
    std::vector<std::pair<int, double>> values;
    for (const auto& run : report.runs) values.emplace_back(run.repeat, run.metrics.*field);
    report.aggregate[name] = mean_std(collapse(values));
  }

  std::map<std::string, std::vector<std::pair<int, double>>> severity_series;
  for (const auto& run : report.runs)
    for (const auto& [level, stats] : run.severity.levels)
      severity_series[dataset::to_string(level)].emplace_back(run.repeat, stats.accuracy);
  for (const auto& [name, values] : severity_series)
    report.severity_aggregate[name] = mean_std(collapse(values));

  report.meta["std_convention"] =
      repeat_level_std ? "sample std over per-repeat means" : "sample std over all runs";
}

std::vector<std::string> validate_report_json(const util::json& j) {
  std::vector<std::string> problems;
  auto need = [&](const util::json& obj, const char* key, const char* where) {
    if (!obj.contains(key)) problems.push_back(std::string(where) + " is missing '" + key + "'");
    return obj.contains(key);
  };
  for (const char* key : {"variant", "config_hash", "runs", "aggregate", "severity_aggregate"})
    need(j, key, "report");
  if (j.contains("runs")) {
    if (!j.at("runs").is_array()) {
      problems.push_back("'runs' must be an array");
    } else {
      int i = 0;
      for (const auto& run : j.at("runs")) {
        const std::string where = "runs[" + std::to_string(i++) + "]";
        for (const char* key : {"repeat", "fold", "confusion", "metrics", "severity"})
          need(run, key, where.c_str());
        if (run.contains("confusion"))
          for (const char* key : {"tp", "fp", "tn", "fn"})
            need(run.at("confusion"), key, (where + ".confusion").c_str());
        if (run.contains("metrics"))
          for (const auto& [name, _] : kMetricFields)
            need(run.at("metrics"), name.c_str(), (where + ".metrics").c_str());
      }
    }
  }
  if (j.contains("aggregate")) {
    for (const auto& [name, _] : kMetricFields)
      if (!j.at("aggregate").contains(name))
        problems.push_back("aggregate is missing '" + name + "'");
    for (const auto& [name, entry] : j.at("aggregate").items())
      for (const char* key : {"mean", "std"})
        need(entry, key, ("aggregate." + name).c_str());
  }
  return problems;
}

std::string render_table(const std::vector<AggregateReport>& reports) {
  auto cell = [](const std::map<std::string, MeanStd>& agg, const std::string& name) {
    std::ostringstream out;
    const auto it = agg.find(name);
    if (it == agg.end()) {
      out << "--";
      return out.str();
    }
    out << std::fixed << std::setprecision(2) << 100.0 * it->second.mean << " +/- "
        << 100.0 * it->second.std;
    return out.str();
  };

  const std::vector<std::string> columns{"specificity", "precision_N", "f1_N",
                                         "sensitivity", "precision_P", "f1_P",
                                         "accuracy"};
  const std::vector<std::string> headers{"Spec. (N)", "Prec. (N)", "F1 (N)",
                                         "Sens. (P)", "Prec. (P)", "F1 (P)",
                                         "Accuracy"};

  std::vector<std::vector<std::string>> rows;
  rows.push_back({});
  rows.back().push_back("Variant");
  for (const auto& h : headers) rows.back().push_back(h);
  for (const auto& report : reports) {
    std::vector<std::string> row{report.variant};
    for (const auto& col : columns) row.push_back(cell(report.aggregate, col));
    rows.push_back(std::move(row));
  }

  std::vector<std::size_t> widths(rows[0].size(), 0);
  for (const auto& row : rows)
    for (std::size_t c = 0; c < row.size(); ++c) widths[c] = std::max(widths[c], row[c].size());

  std::ostringstream out;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      out << std::left << std::setw(static_cast<int>(widths[c]) + 2) << rows[r][c];
      if (c + 1 < rows[r].size()) out << "| ";
    }
    out << '\n';
    if (r == 0) {
      for (std::size_t c = 0; c < widths.size(); ++c) {
        out << std::string(widths[c] + 2, '-');
        if (c + 1 < widths.size()) out << "+-";
      }
      out << '\n';
    }
  }
  return out.str();
}

}  // namespace sdnet::eval
