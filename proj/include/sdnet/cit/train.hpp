#pragma once

#include <filesystem>

#include "sdnet/cit/loss.hpp"
#include "sdnet/nn/models.hpp"

namespace sdnet::cit {

/// The two trained class-inherent transformation generators.
struct GeneratorPair {
  nn::ResidualGenerator gen_p;
  nn::ResidualGenerator gen_n;
};

struct CitSchedule {
  int max_epochs = 100;
  int patience = 10;
  double lr = 1e-3;
  double momentum = 0.9;
  int batch_size = 16;
  std::uint64_t seed = 0;

  util::json to_json() const;
  static CitSchedule from_json(const util::json& j);
};

struct CitComponentLosses {
  double mse = 0, perceptual = 0, ce = 0, total = 0;
};

struct CitEpoch {
  int epoch = 0;
  CitComponentLosses gen_p;
  CitComponentLosses gen_n;
  double val_total = 0;  // L_gen_P + L_gen_N on the validation set
};

struct CitSample {
  std::string id;
  nn::Tensor image;  // prepared [3,S,S]
  dataset::ClassLabel label = dataset::ClassLabel::N;
};

struct TrainedCit {
  GeneratorPair gens;
  nn::ClassifierNet internal_clf;  // two-class, order [N, P]
  std::vector<CitEpoch> history;
  int best_epoch = -1;
  CitLossConfig loss_config;
  nn::GeneratorConfig gen_config;
  nn::ResNetConfig clf_backbone;
  CitSchedule schedule;
};

/// Trains G_P and G_N, each on its own composite loss, alternating with the
/// internal classifier (generator steps first, then a classifier step on the
/// detached generator outputs) within every batch. Returns the best
/// validation-loss checkpoint. Deterministic for a fixed seed.
TrainedCit train_cit(const std::vector<CitSample>& train, const std::vector<CitSample>& val,
                     const CitLossConfig& loss_config, const CitSchedule& schedule,
                     const nn::GeneratorConfig& gen_config,
                     const nn::ResNetConfig& clf_backbone);

/// Checkpoint directory: {gen_P/, gen_N/, internal_clf/, meta.json}.
void save_cit(const std::filesystem::path& dir, TrainedCit& cit, const std::string& data_hash);
TrainedCit load_cit(const std::filesystem::path& dir);

}  // namespace sdnet::cit
