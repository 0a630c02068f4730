#include "sdnet/cit/loss.hpp"

namespace sdnet::cit {

util::json CitLossConfig::to_json() const {
  return {{"perceptual_weight", perceptual_weight},
          {"lambda", lambda},
          {"extractor", extractor},
          {"ce_mode", ce_mode == CeMode::Masked ? "masked" : "relabel_all"}};
}

CitLossConfig CitLossConfig::from_json(const util::json& j) {
  CitLossConfig c;
  c.perceptual_weight = j.value("perceptual_weight", c.perceptual_weight);
  c.lambda = j.value("lambda", c.lambda);
  c.extractor = j.value("extractor", c.extractor);
  const std::string mode = j.value("ce_mode", "masked");
  if (mode == "masked") c.ce_mode = CeMode::Masked;
  else if (mode == "relabel_all") c.ce_mode = CeMode::RelabelAll;
  else throw ConfigError("unknown ce_mode '" + mode + "'");
  return c;
}

CitLossParts cit_loss(const nn::Var& gen_out, const nn::Var& target, const nn::Var& clf_logits,
                      const std::vector<dataset::ClassLabel>& labels, dataset::ClassLabel k,
                      const FeatureExtractor& extractor, const CitLossConfig& config) {
  if (!gen_out->value.same_shape(target->value))
    throw nn::ShapeMismatch("cit_loss: generator output " + gen_out->value.shape_str() +
                            " vs target " + target->value.shape_str());
  if (clf_logits->value.ndim() != 2 ||
      clf_logits->value.shape(0) != static_cast<int>(labels.size()))
    throw nn::ShapeMismatch("cit_loss: classifier logits must be [batch, K]");

  CitLossParts parts;
  parts.mse = nn::mse_loss(gen_out, target);
  parts.perceptual = nn::mse_loss(extractor.features(gen_out), extractor.features(target));

  const int target_class = static_cast<int>(k);
  std::vector<int> targets(labels.size(), target_class);
  std::vector<nn::Scalar> weights;
  if (config.ce_mode == CitLossConfig::CeMode::Masked) {
    weights.resize(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) weights[i] = labels[i] == k ? 1.0 : 0.0;
  }
  parts.ce = nn::softmax_cross_entropy(clf_logits, targets, weights);

  parts.total = nn::add(nn::add(parts.mse, nn::scale(parts.perceptual, config.perceptual_weight)),
                        nn::scale(parts.ce, config.lambda));
  if (!parts.total->value.all_finite())
    throw nn::NonFiniteLoss("cit_loss total is not finite");
  return parts;
}

}  // namespace sdnet::cit
