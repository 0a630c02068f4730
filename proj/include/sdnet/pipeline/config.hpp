#pragma once

#include "sdnet/eval/experiment.hpp"

namespace sdnet::pipeline {

/// Fully resolved run configuration. Defaults cover everything except the
/// three paths; the resolved JSON is hashed and embedded in every artifact.
struct RunConfig {
  // paths
  std::string manifest_path;
  std::string image_root;  // empty: the manifest file's directory
  std::string workdir;

  eval::Variant variant = eval::Variant::SdNet;
  bool exclude_normal_pcr = false;

  dataset::CvPlanOptions plan;
  preprocess::BackendSpec backend;
  preprocess::PreprocessSettings preprocess;
  preprocess::PrepareSettings prepare;

  cit::CitLossConfig cit_loss;
  cit::CitSchedule cit_schedule;
  nn::GeneratorConfig generator;
  std::string cit_clf_backbone = "resnet18";

  classifier::ClassifierConfig clf;
  bool repeat_level_std = false;

  std::string explain_colormap = "jet";
  double explain_alpha = 0.4;

  util::json to_json() const;
  static RunConfig from_json(const util::json& j);

  /// Hash of the resolved configuration (encoder of provenance).
  std::string hash() const { return util::json_hash(to_json()); }

  eval::ExperimentConfig experiment_config() const;
};

/// Flag-style overrides that win over file and environment values.
struct CliOverrides {
  std::optional<std::string> config_path;
  std::optional<std::string> workdir;
  std::optional<std::string> variant;
  std::optional<bool> exclude_normal_pcr;
  std::optional<std::uint64_t> seed;
  std::optional<int> repeats;
  std::optional<int> folds;
  std::optional<std::string> manifest;
};

/// defaults <- config file <- SDNET_* environment <- CLI flags.
/// Environment keys use double underscores for nesting: SDNET_PLAN__SEED=7.
RunConfig resolve_config(const CliOverrides& overrides);

/// Exposed for tests: applies SDNET_* entries of `env` onto `j`.
void apply_env_overrides(util::json& j, const std::vector<std::string>& env);

}  // namespace sdnet::pipeline
