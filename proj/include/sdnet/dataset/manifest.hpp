#pragma once

#include <filesystem>

#include "sdnet/dataset/types.hpp"

namespace sdnet::dataset {

struct LoadOptions {
  /// Override the manifest root; defaults to the manifest file's directory.
  std::optional<std::string> root;
  /// Check that every record's path resolves to an existing file.
  bool verify_files = true;
};

/// Loads and validates a CSV manifest. Header must contain
/// {id, path, label, severity, rale_left, rale_right, pcr_positive, view};
/// severity/rale/pcr cells may be empty where they do not apply. Rows that
/// violate an invariant raise InvalidManifest naming the offending row.
DatasetManifest load_manifest(const std::filesystem::path& csv_path,
                              const LoadOptions& options = {});

/// Same schema, one JSON object per line.
DatasetManifest load_manifest_jsonl(const std::filesystem::path& path,
                                    const LoadOptions& options = {});

void save_manifest_csv(const std::filesystem::path& path, const DatasetManifest& manifest);

/// Drops Normal-PCR+ records (the exclusion experiments toggle).
DatasetManifest exclude_normal_pcr(const DatasetManifest& manifest);

/// Fingerprint of ids, paths and labels, in record order.
std::string manifest_hash(const DatasetManifest& manifest);

}  // namespace sdnet::dataset
