#include "sdnet/dataset/types.hpp"

#include <algorithm>
#include <filesystem>

namespace sdnet::dataset {

const char* to_string(ClassLabel label) { return label == ClassLabel::P ? "P" : "N"; }

const char* to_string(SeverityLevel level) {
  switch (level) {
    case SeverityLevel::NormalPcrPlus: return "normal_pcr+";
    case SeverityLevel::Mild: return "mild";
    case SeverityLevel::Moderate: return "moderate";
    case SeverityLevel::Severe: return "severe";
    case SeverityLevel::NegativeControl: return "negative_control";
  }
  return "?";
}

namespace {
std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}
}  // namespace

ClassLabel class_label_from_string(const std::string& s) {
  const std::string v = lower(s);
  if (v == "p" || v == "positive") return ClassLabel::P;
  if (v == "n" || v == "negative") return ClassLabel::N;
  throw InvalidManifest("unknown class label '" + s + "'");
}

SeverityLevel severity_from_string(const std::string& s) {
  const std::string v = lower(s);
  if (v == "normal_pcr+" || v == "normal-pcr+" || v == "normal_pcr_plus") return SeverityLevel::NormalPcrPlus;
  if (v == "mild") return SeverityLevel::Mild;
  if (v == "moderate") return SeverityLevel::Moderate;
  if (v == "severe") return SeverityLevel::Severe;
  if (v == "negative_control") return SeverityLevel::NegativeControl;
  throw InvalidManifest("unknown severity level '" + s + "'");
}

void validate(const RaleScore& rale) {
  if (rale.left_lung < 0 || rale.left_lung > 4 || rale.right_lung < 0 || rale.right_lung > 4)
    throw InvalidRale("per-lung RALE score must be in [0, 4], got left=" +
                      std::to_string(rale.left_lung) +
                      " right=" + std::to_string(rale.right_lung));
}

SeverityLevel severity_from_rale(const RaleScore& rale, bool pcr_positive) {
  validate(rale);
  const int total = rale.total();
  if (total == 0) {
    if (!pcr_positive)
      throw InvalidCombination(
          "RALE total 0 with negative PCR is a negative control, not a positive severity");
    return SeverityLevel::NormalPcrPlus;
  }
  if (total <= 2) return SeverityLevel::Mild;
  if (total <= 5) return SeverityLevel::Moderate;
  return SeverityLevel::Severe;
}

std::string DatasetManifest::resolve_path(const ImageRecord& rec) const {
  if (root.empty()) return rec.path;
  return (std::filesystem::path(root) / rec.path).string();
}

std::size_t DatasetManifest::count(ClassLabel label) const {
  std::size_t c = 0;
  for (const auto& rec : records)
    if (rec.label == label) ++c;
  return c;
}

}  // namespace sdnet::dataset
