#pragma once

#include <memory>

#include "sdnet/nn/layers.hpp"

namespace sdnet::cit {

/// Fixed (non-trainable) feature space for the perceptual term. Gradients
/// flow through the extractor into the generator; the extractor's own
/// parameters never change.
class FeatureExtractor {
 public:
  virtual ~FeatureExtractor() = default;
  virtual std::string identity() const = 0;
  virtual nn::Var features(const nn::Var& image) const = 0;
};

/// features(x) == x; makes the perceptual term equal the pixel MSE.
class IdentityExtractor final : public FeatureExtractor {
 public:
  std::string identity() const override { return "identity/1"; }
  nn::Var features(const nn::Var& image) const override { return image; }
};

/// Two frozen 3x3 convolutions (ReLU between, stride 2 on the second) with
/// weights drawn deterministically from a named seed. A fixed random
/// projection: structure-sensitive without shipping pretrained weights.
class RandomConvExtractor final : public FeatureExtractor {
 public:
  RandomConvExtractor(int in_channels, int features, std::uint64_t seed);
  std::string identity() const override;
  nn::Var features(const nn::Var& image) const override;

 private:
  int in_channels_;
  int features_;
  std::uint64_t seed_;
  nn::Conv2dLayer conv1_, conv2_;
};

/// Parses an extractor spec: "identity" or "randconv[:seed[:features]]"
/// (defaults seed 7, features 16).
std::unique_ptr<FeatureExtractor> make_feature_extractor(const std::string& spec,
                                                         int in_channels);

}  // namespace sdnet::cit
