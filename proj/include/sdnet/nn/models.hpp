#pragma once

#include "sdnet/nn/layers.hpp"
#include "sdnet/util/jsonio.hpp"

namespace sdnet::nn {

/// Shape-preserving image-to-image network: an entry convolution, a chain of
/// identical residual blocks (conv-BN-PReLU-conv-BN plus skip) and an exit
/// convolution back to the input channel count.
struct GeneratorConfig {
  int in_channels = 3;
  int features = 64;
  int blocks = 5;
  int edge_kernel = 9;  // entry/exit convolutions; residual convs are 3x3

  util::json to_json() const;
  static GeneratorConfig from_json(const util::json& j);
};

class ResidualGenerator {
 public:
  ResidualGenerator() = default;
  ResidualGenerator(const GeneratorConfig& config, util::Rng& rng);

  Var forward(const Var& x, bool training) const;
  const GeneratorConfig& config() const { return cfg_; }
  ModelState state();

 private:
  struct Block {
    Conv2dLayer conv1, conv2;
    BatchNorm2dLayer bn1, bn2;
    PReluLayer act;
  };
  GeneratorConfig cfg_;
  Conv2dLayer entry_;
  PReluLayer entry_act_;
  std::vector<Block> blocks_;
  Conv2dLayer exit_;
};

/// Residual classification backbone (basic or bottleneck blocks).
struct ResNetConfig {
  int in_channels = 3;
  int stem_features = 64;
  int stem_kernel = 7;
  int stem_stride = 2;
  bool stem_pool = true;  // 3x3 stride-2 max pool after the stem
  std::vector<int> stage_blocks{2, 2, 2, 2};
  std::vector<int> stage_features{64, 128, 256, 512};
  bool bottleneck = false;

  int feature_dim() const { return stage_features.back() * (bottleneck ? 4 : 1); }

  /// 18-layer basic-block network.
  static ResNetConfig resnet18();
  /// 50-layer bottleneck network.
  static ResNetConfig resnet50();
  /// Small two-stage network for desk-scale runs and tests.
  static ResNetConfig tiny();
  static ResNetConfig named(const std::string& name);

  util::json to_json() const;
  static ResNetConfig from_json(const util::json& j);
};

class ResNetBackbone {
 public:
  ResNetBackbone() = default;
  ResNetBackbone(const ResNetConfig& config, util::Rng& rng);

  /// Returns pooled features [N, feature_dim]. When `last_conv` is non-null it
  /// receives the final convolutional activation map (the Grad-CAM target).
  Var forward(const Var& x, bool training, Var* last_conv = nullptr) const;

  const ResNetConfig& config() const { return cfg_; }
  ModelState state();

 private:
  struct Block {
    bool bottleneck = false;
    Conv2dLayer conv1, conv2, conv3;
    BatchNorm2dLayer bn1, bn2, bn3;
    bool has_projection = false;
    Conv2dLayer proj;
    BatchNorm2dLayer proj_bn;
  };
  Var forward_block(const Block& blk, const Var& x, bool training) const;

  ResNetConfig cfg_;
  Conv2dLayer stem_;
  BatchNorm2dLayer stem_bn_;
  std::vector<std::vector<Block>> stages_;
};

/// Backbone plus classification head. With hidden_units == 0 the head is a
/// single fully connected layer; otherwise a rectified hidden layer of that
/// width precedes the K-way output.
struct ClassifierNetConfig {
  ResNetConfig backbone;
  int hidden_units = 0;
  int num_classes = 2;

  util::json to_json() const;
  static ClassifierNetConfig from_json(const util::json& j);
};

class ClassifierNet {
 public:
  ClassifierNet() = default;
  ClassifierNet(const ClassifierNetConfig& config, util::Rng& rng);

  /// Logits [N, K].
  Var forward(const Var& x, bool training, Var* last_conv = nullptr) const;
  const ClassifierNetConfig& config() const { return cfg_; }
  ModelState state();

 private:
  ClassifierNetConfig cfg_;
  ResNetBackbone backbone_;
  LinearLayer hidden_;
  LinearLayer head_;
};

}  // namespace sdnet::nn
