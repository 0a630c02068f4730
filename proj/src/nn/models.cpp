#include "sdnet/nn/models.hpp"

namespace sdnet::nn {

util::json GeneratorConfig::to_json() const {
  return {{"in_channels", in_channels},
          {"features", features},
          {"blocks", blocks},
          {"edge_kernel", edge_kernel}};
}

GeneratorConfig GeneratorConfig::from_json(const util::json& j) {
  GeneratorConfig c;
  c.in_channels = j.value("in_channels", c.in_channels);
  c.features = j.value("features", c.features);
  c.blocks = j.value("blocks", c.blocks);
  c.edge_kernel = j.value("edge_kernel", c.edge_kernel);
  return c;
}

ResidualGenerator::ResidualGenerator(const GeneratorConfig& config, util::Rng& rng)
    : cfg_(config) {
  const int f = cfg_.features;
  const int ek = cfg_.edge_kernel;
  entry_.init(cfg_.in_channels, f, ek, 1, ek / 2, rng);
  entry_act_.init(f);
  blocks_.resize(static_cast<std::size_t>(cfg_.blocks));
  for (auto& blk : blocks_) {
    blk.conv1.init(f, f, 3, 1, 1, rng);
    blk.bn1.init(f);
    blk.act.init(f);
    blk.conv2.init(f, f, 3, 1, 1, rng);
    blk.bn2.init(f);
  }
  exit_.init(f, cfg_.in_channels, ek, 1, ek / 2, rng);
}

Var ResidualGenerator::forward(const Var& x, bool training) const {
  if (x->value.ndim() != 4 || x->value.shape(1) != cfg_.in_channels)
    throw ShapeMismatch("generator input must be [N," + std::to_string(cfg_.in_channels) +
                        ",H,W], got " + x->value.shape_str());
  Var h = entry_act_.forward(entry_.forward(x));
  for (const auto& blk : blocks_) {
    Var t = blk.conv1.forward(h);
    t = blk.bn1.forward(t, training);
    t = blk.act.forward(t);
    t = blk.conv2.forward(t);
    t = blk.bn2.forward(t, training);
    h = add(h, t);
  }
  return exit_.forward(h);
}

ModelState ResidualGenerator::state() {
  ModelState s;
  entry_.collect("entry", s);
  entry_act_.collect("entry_act", s);
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    const std::string p = "block" + std::to_string(i);
    blocks_[i].conv1.collect(p + ".conv1", s);
    blocks_[i].bn1.collect(p + ".bn1", s);
    blocks_[i].act.collect(p + ".act", s);
    blocks_[i].conv2.collect(p + ".conv2", s);
    blocks_[i].bn2.collect(p + ".bn2", s);
  }
  exit_.collect("exit", s);
  return s;
}

ResNetConfig ResNetConfig::resnet18() { return ResNetConfig{}; }

ResNetConfig ResNetConfig::resnet50() {
  ResNetConfig c;
  c.stage_blocks = {3, 4, 6, 3};
  c.stage_features = {64, 128, 256, 512};
  c.bottleneck = true;
  return c;
}

ResNetConfig ResNetConfig::tiny() {
  ResNetConfig c;
  c.stem_features = 8;
  c.stem_kernel = 3;
  c.stem_stride = 1;
  c.stem_pool = false;
  c.stage_blocks = {1, 1};
  c.stage_features = {8, 16};
  c.bottleneck = false;
  return c;
}

ResNetConfig ResNetConfig::named(const std::string& name) {
  if (name == "resnet18") return resnet18();
  if (name == "resnet50") return resnet50();
  if (name == "tiny") return tiny();
  throw Error("unknown backbone '" + name + "' (expected resnet18, resnet50 or tiny)");
}

util::json ResNetConfig::to_json() const {
  return {{"in_channels", in_channels}, {"stem_features", stem_features},
          {"stem_kernel", stem_kernel}, {"stem_stride", stem_stride},
          {"stem_pool", stem_pool},     {"stage_blocks", stage_blocks},
          {"stage_features", stage_features}, {"bottleneck", bottleneck}};
}

ResNetConfig ResNetConfig::from_json(const util::json& j) {
  ResNetConfig c;
  c.in_channels = j.value("in_channels", c.in_channels);
  c.stem_features = j.value("stem_features", c.stem_features);
  c.stem_kernel = j.value("stem_kernel", c.stem_kernel);
  c.stem_stride = j.value("stem_stride", c.stem_stride);
  c.stem_pool = j.value("stem_pool", c.stem_pool);
  if (j.contains("stage_blocks")) c.stage_blocks = j.at("stage_blocks").get<std::vector<int>>();
  if (j.contains("stage_features"))
    c.stage_features = j.at("stage_features").get<std::vector<int>>();
  c.bottleneck = j.value("bottleneck", c.bottleneck);
  return c;
}

ResNetBackbone::ResNetBackbone(const ResNetConfig& config, util::Rng& rng) : cfg_(config) {
  if (cfg_.stage_blocks.size() != cfg_.stage_features.size())
    throw Error("stage_blocks and stage_features must have equal length");
  stem_.init(cfg_.in_channels, cfg_.stem_features, cfg_.stem_kernel, cfg_.stem_stride,
             cfg_.stem_kernel / 2, rng, /*bias=*/false);
  stem_bn_.init(cfg_.stem_features);

  const int expansion = cfg_.bottleneck ? 4 : 1;
  int in_feat = cfg_.stem_features;
  stages_.resize(cfg_.stage_blocks.size());
  for (std::size_t s = 0; s < stages_.size(); ++s) {
    const int planes = cfg_.stage_features[s];
    const int out_feat = planes * expansion;
    stages_[s].resize(static_cast<std::size_t>(cfg_.stage_blocks[s]));
    for (std::size_t b = 0; b < stages_[s].size(); ++b) {
      Block& blk = stages_[s][b];
      blk.bottleneck = cfg_.bottleneck;
      const int stride = (b == 0 && s > 0) ? 2 : 1;
      if (cfg_.bottleneck) {
        blk.conv1.init(in_feat, planes, 1, 1, 0, rng, false);
        blk.bn1.init(planes);
        blk.conv2.init(planes, planes, 3, stride, 1, rng, false);
        blk.bn2.init(planes);
        blk.conv3.init(planes, out_feat, 1, 1, 0, rng, false);
        blk.bn3.init(out_feat);
      } else {
        blk.conv1.init(in_feat, planes, 3, stride, 1, rng, false);
        blk.bn1.init(planes);
        blk.conv2.init(planes, planes, 3, 1, 1, rng, false);
        blk.bn2.init(planes);
      }
      if (stride != 1 || in_feat != out_feat) {
        blk.has_projection = true;
        blk.proj.init(in_feat, out_feat, 1, stride, 0, rng, false);
        blk.proj_bn.init(out_feat);
      }
      in_feat = out_feat;
    }
  }
}

Var ResNetBackbone::forward_block(const Block& blk, const Var& x, bool training) const {
  Var t = relu(blk.bn1.forward(blk.conv1.forward(x), training));
  t = blk.bn2.forward(blk.conv2.forward(t), training);
  if (blk.bottleneck) {
    t = relu(t);
    t = blk.bn3.forward(blk.conv3.forward(t), training);
  }
  Var shortcut = x;
  if (blk.has_projection) shortcut = blk.proj_bn.forward(blk.proj.forward(x), training);
  return relu(add(t, shortcut));
}

Var ResNetBackbone::forward(const Var& x, bool training, Var* last_conv) const {
  Var h = relu(stem_bn_.forward(stem_.forward(x), training));
  if (cfg_.stem_pool) h = max_pool2d(h, 3, 2, 1);
  for (const auto& stage : stages_)
    for (const auto& blk : stage) h = forward_block(blk, h, training);
  if (last_conv) *last_conv = h;
  return global_avg_pool(h);
}

ModelState ResNetBackbone::state() {
  ModelState s;
  stem_.collect("stem", s);
  stem_bn_.collect("stem_bn", s);
  for (std::size_t st = 0; st < stages_.size(); ++st)
    for (std::size_t b = 0; b < stages_[st].size(); ++b) {
      const std::string p = "stage" + std::to_string(st) + ".block" + std::to_string(b);
      Block& blk = stages_[st][b];
      blk.conv1.collect(p + ".conv1", s);
      blk.bn1.collect(p + ".bn1", s);
      blk.conv2.collect(p + ".conv2", s);
      blk.bn2.collect(p + ".bn2", s);
      if (blk.bottleneck) {
        blk.conv3.collect(p + ".conv3", s);
        blk.bn3.collect(p + ".bn3", s);
      }
      if (blk.has_projection) {
        blk.proj.collect(p + ".proj", s);
        blk.proj_bn.collect(p + ".proj_bn", s);
      }
    }
  return s;
}

util::json ClassifierNetConfig::to_json() const {
  return {{"backbone", backbone.to_json()},
          {"hidden_units", hidden_units},
          {"num_classes", num_classes}};
}

ClassifierNetConfig ClassifierNetConfig::from_json(const util::json& j) {
  ClassifierNetConfig c;
  if (j.contains("backbone")) c.backbone = ResNetConfig::from_json(j.at("backbone"));
  c.hidden_units = j.value("hidden_units", c.hidden_units);
  c.num_classes = j.value("num_classes", c.num_classes);
  return c;
}

ClassifierNet::ClassifierNet(const ClassifierNetConfig& config, util::Rng& rng)
    : cfg_(config), backbone_(config.backbone, rng) {
  const int fdim = cfg_.backbone.feature_dim();
  if (cfg_.hidden_units > 0) {
    hidden_.init(fdim, cfg_.hidden_units, rng);
    head_.init(cfg_.hidden_units, cfg_.num_classes, rng);
  } else {
    head_.init(fdim, cfg_.num_classes, rng);
  }
}

Var ClassifierNet::forward(const Var& x, bool training, Var* last_conv) const {
  Var feat = backbone_.forward(x, training, last_conv);
  if (cfg_.hidden_units > 0) feat = relu(hidden_.forward(feat));
  return head_.forward(feat);
}

ModelState ClassifierNet::state() {
  ModelState s = backbone_.state();
  if (cfg_.hidden_units > 0) hidden_.collect("hidden", s);
  head_.collect("head", s);
  return s;
}

}  // namespace sdnet::nn
