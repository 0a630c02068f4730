#pragma once

#include <filesystem>

#include "sdnet/dataset/manifest.hpp"

namespace sdnet {

/// Parameters for the generated two-class image set: class P carries bright
/// elliptical blobs whose amplitude encodes severity, class N only the shared
/// background texture. Deterministic per seed.
struct SyntheticSpec {
  int n_positive = 20;
  int n_negative = 20;
  int side = 64;
  std::uint64_t seed = 0;
  /// Fraction of positive records labeled Normal-PCR+ (blob-free positives,
  /// radiologically normal). Keep 0 for separability tests.
  double normal_pcr_fraction = 0.0;
};

/// Writes <dir>/images/*.png and <dir>/manifest.csv; returns the loaded,
/// validated manifest.
dataset::DatasetManifest make_blob_dataset(const std::filesystem::path& dir,
                                           const SyntheticSpec& spec);

}  // namespace sdnet
