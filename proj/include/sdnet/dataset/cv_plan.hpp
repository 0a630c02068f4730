#pragma once

#include <cstdint>

#include "sdnet/dataset/types.hpp"
#include "sdnet/util/jsonio.hpp"

namespace sdnet::dataset {

struct FoldAssignment {
  int repeat = 0;
  int fold = 0;
  std::vector<std::string> train;
  std::vector<std::string> val;
  std::vector<std::string> test;
};

/// Repeated stratified cross-validation plan. For every repeat the test folds
/// partition the manifest ids; per-class test counts across folds differ by at
/// most one; val is carved out of the train portion.
struct CvPlan {
  int repeats = 5;
  int folds = 5;
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> repeat_seeds;  // empty unless explicitly supplied
  std::vector<FoldAssignment> assignments;  // repeats * folds entries

  const FoldAssignment& at(int repeat, int fold) const;
  util::json to_json() const;
  static CvPlan from_json(const util::json& j);
};

struct CvPlanOptions {
  int repeats = 5;
  int folds = 5;
  double val_fraction = 0.10;
  std::uint64_t seed = 0;
  /// One seed per repeat; when empty, independent streams are derived from `seed`.
  std::vector<std::uint64_t> repeat_seeds;
};

/// Deterministic for a fixed (manifest order, options). Throws
/// InsufficientData when some class has fewer records than folds.
CvPlan make_cv_plan(const DatasetManifest& manifest, const CvPlanOptions& options);

}  // namespace sdnet::dataset
