#pragma once

#include <filesystem>
#include <ostream>

#include "sdnet/cit/expand.hpp"
#include "sdnet/classifier/classifier.hpp"
#include "sdnet/dataset/cv_plan.hpp"
#include "sdnet/eval/report.hpp"
#include "sdnet/fusion/fusion.hpp"

namespace sdnet::eval {

/// Everything one cross-validated experiment needs. The variant decides which
/// stages run: no_seg skips cropping, cit_only scores with the transformation
/// network's own classifier, sdnet runs the full twin-fusion pipeline.
struct ExperimentConfig {
  Variant variant = Variant::SdNet;
  preprocess::BackendSpec backend;
  preprocess::PreprocessSettings preprocess;
  preprocess::PrepareSettings prepare;
  cit::CitLossConfig cit_loss;
  cit::CitSchedule cit_schedule;
  nn::GeneratorConfig generator;
  std::string cit_clf_backbone = "resnet18";
  classifier::ClassifierConfig clf;  // num_classes is set by the variant
  bool repeat_level_std = false;
  bool keep_checkpoints = false;  // per-fold weights under the run directory
  std::string config_hash;
  util::json extra_meta = util::json::object();
};

/// Trains and evaluates every (repeat, fold) of the plan, persists per-fold
/// raw predictions under out_dir/runs/, writes report.json and returns the
/// aggregated report. A failing fold saves report.partial.json and rethrows.
AggregateReport run_experiment(const dataset::DatasetManifest& manifest,
                               const dataset::CvPlan& plan, const ExperimentConfig& config,
                               const std::filesystem::path& out_dir,
                               std::ostream* log = nullptr);

/// Deterministic per-fold seed stream.
std::uint64_t fold_seed(std::uint64_t base, int repeat, int fold);

}  // namespace sdnet::eval
