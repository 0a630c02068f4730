#include "sdnet/cit/feature_extractor.hpp"

namespace sdnet::cit {

RandomConvExtractor::RandomConvExtractor(int in_channels, int features, std::uint64_t seed)
    : in_channels_(in_channels), features_(features), seed_(seed) {
  util::Rng rng(seed, /*stream=*/0x9e3779b97f4a7c15ull);
  conv1_.init(in_channels, features, 3, 1, 1, rng);
  conv2_.init(features, features, 3, 2, 1, rng);
  // Frozen by construction.
  conv1_.w->requires_grad = conv1_.b->requires_grad = false;
  conv2_.w->requires_grad = conv2_.b->requires_grad = false;
}

std::string RandomConvExtractor::identity() const {
  return "randconv/1:seed=" + std::to_string(seed_) + ",features=" + std::to_string(features_);
}

nn::Var RandomConvExtractor::features(const nn::Var& image) const {
  if (image->value.ndim() != 4 || image->value.shape(1) != in_channels_)
    throw nn::ShapeMismatch("extractor expects [N," + std::to_string(in_channels_) +
                            ",H,W], got " + image->value.shape_str());
  return conv2_.forward(nn::relu(conv1_.forward(image)));
}

std::unique_ptr<FeatureExtractor> make_feature_extractor(const std::string& spec,
                                                         int in_channels) {
  if (spec == "identity") return std::make_unique<IdentityExtractor>();
  if (spec.rfind("randconv", 0) == 0) {
    std::uint64_t seed = 7;
    int features = 16;
    std::string rest = spec.substr(8);
    if (!rest.empty()) {
      if (rest[0] != ':') throw ConfigError("bad extractor spec '" + spec + "'");
      rest = rest.substr(1);
      const auto colon = rest.find(':');
      try {
        seed = std::stoull(rest.substr(0, colon));
        if (colon != std::string::npos) features = std::stoi(rest.substr(colon + 1));
      } catch (const std::exception&) {
        throw ConfigError("bad extractor spec '" + spec + "'");
      }
    }
    return std::make_unique<RandomConvExtractor>(in_channels, features, seed);
  }
  throw ConfigError("unknown feature extractor '" + spec +
                    "' (expected identity or randconv[:seed[:features]])");
}

}  // namespace sdnet::cit
