#include "sdnet/eval/metrics.hpp"

#include <cmath>

namespace sdnet::eval {

ConfusionMatrix confusion(const std::vector<dataset::ClassLabel>& predictions,
                          const std::vector<dataset::ClassLabel>& labels) {
  if (predictions.size() != labels.size())
    throw LengthMismatch("confusion: " + std::to_string(predictions.size()) +
                         " predictions vs " + std::to_string(labels.size()) + " labels");
  if (predictions.empty()) throw EmptyInput("confusion: empty input");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const bool actual_p = labels[i] == dataset::ClassLabel::P;
    const bool predicted_p = predictions[i] == dataset::ClassLabel::P;
    if (actual_p && predicted_p) ++cm.tp;
    else if (actual_p && !predicted_p) ++cm.fn;
    else if (!actual_p && predicted_p) ++cm.fp;
    else ++cm.tn;
  }
  return cm;
}

util::json MetricsRecord::to_json() const {
  return {{"sensitivity", sensitivity},
          {"specificity", specificity},
          {"precision_P", precision_p},
          {"precision_N", precision_n},
          {"f1_P", f1_p},
          {"f1_N", f1_n},
          {"accuracy", accuracy},
          {"flags", std::vector<std::string>(flags.begin(), flags.end())}};
}

MetricsRecord MetricsRecord::from_json(const util::json& j) {
  MetricsRecord m;
  m.sensitivity = j.at("sensitivity").get<double>();
  m.specificity = j.at("specificity").get<double>();
  m.precision_p = j.at("precision_P").get<double>();
  m.precision_n = j.at("precision_N").get<double>();
  m.f1_p = j.at("f1_P").get<double>();
  m.f1_n = j.at("f1_N").get<double>();
  m.accuracy = j.at("accuracy").get<double>();
  if (j.contains("flags"))
    for (const auto& f : j.at("flags")) m.flags.insert(f.get<std::string>());
  return m;
}

MetricsRecord metrics(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw EmptyConfusion("metrics: empty confusion matrix");
  MetricsRecord m;
  auto ratio = [&m](long num, long den, const char* flag) {
    if (den == 0) {
      m.flags.insert(flag);
      return 0.0;
    }
    return static_cast<double>(num) / static_cast<double>(den);
  };
  m.sensitivity = ratio(cm.tp, cm.tp + cm.fn, "sensitivity_undefined");
  m.specificity = ratio(cm.tn, cm.tn + cm.fp, "specificity_undefined");
  m.precision_p = ratio(cm.tp, cm.tp + cm.fp, "precision_P_undefined");
  m.precision_n = ratio(cm.tn, cm.tn + cm.fn, "precision_N_undefined");
  auto f1 = [&m](double precision, double recall, const char* flag) {
    if (precision + recall == 0) {
      m.flags.insert(flag);
      return 0.0;
    }
    return 2 * precision * recall / (precision + recall);
  };
  m.f1_p = f1(m.precision_p, m.sensitivity, "f1_P_undefined");
  m.f1_n = f1(m.precision_n, m.specificity, "f1_N_undefined");
  m.accuracy = static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total());
  return m;
}

util::json SeverityMetrics::to_json() const {
  util::json j;
  j["levels"] = util::json::object();
  for (const auto& [level, stats] : levels)
    j["levels"][dataset::to_string(level)] = {
        {"correct", stats.correct}, {"total", stats.total}, {"accuracy", stats.accuracy}};
  std::vector<std::string> absent_names;
  for (const auto level : absent) absent_names.push_back(dataset::to_string(level));
  j["absent"] = absent_names;
  return j;
}

SeverityMetrics SeverityMetrics::from_json(const util::json& j) {
  SeverityMetrics s;
  for (const auto& [name, stats] : j.at("levels").items()) {
    Level lvl{stats.at("correct").get<long>(), stats.at("total").get<long>(),
              stats.at("accuracy").get<double>()};
    s.levels[dataset::severity_from_string(name)] = lvl;
  }
  if (j.contains("absent"))
    for (const auto& name : j.at("absent"))
      s.absent.insert(dataset::severity_from_string(name.get<std::string>()));
  return s;
}

SeverityMetrics severity_accuracy(const std::vector<dataset::ClassLabel>& decisions,
                                  const std::vector<dataset::ClassLabel>& labels,
                                  const std::vector<dataset::SeverityLevel>& severities) {
  if (decisions.size() != labels.size() || decisions.size() != severities.size())
    throw LengthMismatch("severity_accuracy: input lengths differ");

  SeverityMetrics out;
  for (std::size_t i = 0; i < decisions.size(); ++i) {
    if (labels[i] != dataset::ClassLabel::P) continue;
    if (severities[i] == dataset::SeverityLevel::NegativeControl)
      throw MissingSeverity("positive case at position " + std::to_string(i) +
                            " has no severity level");
    auto& lvl = out.levels[severities[i]];
    ++lvl.total;
    if (decisions[i] == dataset::ClassLabel::P) ++lvl.correct;
  }
  for (auto& [_, lvl] : out.levels)
    lvl.accuracy = static_cast<double>(lvl.correct) / static_cast<double>(lvl.total);
  for (const auto level :
       {dataset::SeverityLevel::NormalPcrPlus, dataset::SeverityLevel::Mild,
        dataset::SeverityLevel::Moderate, dataset::SeverityLevel::Severe})
    if (!out.levels.count(level)) out.absent.insert(level);
  return out;
}

MeanStd mean_std(const std::vector<double>& values) {
  MeanStd out;
  out.n = static_cast<int>(values.size());
  if (values.empty()) return out;
  // Welford's online algorithm.
  double mean = 0, m2 = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double delta = values[i] - mean;
    mean += delta / static_cast<double>(i + 1);
    m2 += delta * (values[i] - mean);
  }
  out.mean = mean;
  out.std = values.size() > 1 ? std::sqrt(m2 / static_cast<double>(values.size() - 1)) : 0.0;
  return out;
}

}  // namespace sdnet::eval
