#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sdnet/common.hpp"

namespace sdnet::dataset {

SDNET_DEFINE_ERROR(InvalidManifest);
SDNET_DEFINE_ERROR(InvalidRale);
SDNET_DEFINE_ERROR(InvalidCombination);
SDNET_DEFINE_ERROR(InsufficientData);

enum class ClassLabel { N = 0, P = 1 };

/// Positive severities in increasing radiological order; NegativeControl is
/// reserved for class-N records.
enum class SeverityLevel {
  NormalPcrPlus = 0,
  Mild = 1,
  Moderate = 2,
  Severe = 3,
  NegativeControl = 4,
};

const char* to_string(ClassLabel label);
const char* to_string(SeverityLevel level);
ClassLabel class_label_from_string(const std::string& s);
SeverityLevel severity_from_string(const std::string& s);

/// Per-lung extent score, 0-4 each, total 0-8.
struct RaleScore {
  int left_lung = 0;
  int right_lung = 0;

  int total() const { return left_lung + right_lung; }
};

/// Throws InvalidRale if either per-lung score is outside [0, 4].
void validate(const RaleScore& rale);

/// Maps a RALE total to a severity level. Total 0 requires a positive PCR,
/// otherwise the case is a negative control and InvalidCombination is thrown.
SeverityLevel severity_from_rale(const RaleScore& rale, bool pcr_positive);

struct ImageRecord {
  std::string id;
  std::string path;  // relative to the manifest root
  ClassLabel label = ClassLabel::N;
  SeverityLevel severity = SeverityLevel::NegativeControl;
  std::optional<RaleScore> rale;
  std::optional<bool> pcr_positive;
  // view is always PA; non-PA rows are rejected at load time.
};

struct DatasetManifest {
  std::string root;  // base directory image paths resolve against
  std::vector<ImageRecord> records;

  std::size_t n() const { return records.size(); }
  std::string resolve_path(const ImageRecord& rec) const;
  std::size_t count(ClassLabel label) const;
};

}  // namespace sdnet::dataset
