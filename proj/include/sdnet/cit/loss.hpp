#pragma once

#include "sdnet/cit/feature_extractor.hpp"
#include "sdnet/dataset/types.hpp"
#include "sdnet/nn/ops.hpp"
#include "sdnet/util/jsonio.hpp"

namespace sdnet::cit {

struct CitLossConfig {
  /// Fixed weighting of the perceptual term; override only deliberately.
  double perceptual_weight = 0.006;
  /// How strongly the classifier drives the generator. Not stated by the
  /// method's source; tunable, recorded in run metadata.
  double lambda = 0.1;
  std::string extractor = "randconv:7:16";
  /// masked: the cross-entropy term of generator k sees only samples whose
  /// true label is k. relabel_all: every sample contributes with target k.
  enum class CeMode { Masked, RelabelAll } ce_mode = CeMode::Masked;

  util::json to_json() const;
  static CitLossConfig from_json(const util::json& j);
};

struct CitLossParts {
  nn::Var total;
  nn::Var mse;
  nn::Var perceptual;
  nn::Var ce;
};

/// Composite generator loss: mse + perceptual_weight * perceptual + lambda * ce.
/// `clf_logits` is the internal two-class classifier's output on gen_out
/// ([batch, 2], class order [N, P]); `labels` are the samples' true labels and
/// `k` is the generator's own class. Gradients flow into everything reachable.
CitLossParts cit_loss(const nn::Var& gen_out, const nn::Var& target, const nn::Var& clf_logits,
                      const std::vector<dataset::ClassLabel>& labels, dataset::ClassLabel k,
                      const FeatureExtractor& extractor, const CitLossConfig& config);

}  // namespace sdnet::cit
