#include "sdnet/fusion/fusion.hpp"

namespace sdnet::fusion {

namespace {

void check_normalized(const std::array<double, 4>& v, const char* name) {
  double sum = 0;
  for (double p : v) {
    if (!std::isfinite(p) || p < -1e-9 || p > 1.0 + 1e-9)
      throw DegenerateProbabilities(std::string(name) + " entry outside [0,1]");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-6)
    throw DegenerateProbabilities(std::string(name) + " does not sum to 1 (got " +
                                  std::to_string(sum) + ")");
}

int argmax4(const std::array<double, 4>& v) {
  int best = 0;
  for (int i = 1; i < 4; ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

constexpr int kNMinus = static_cast<int>(cit::Class4::NMinus);
constexpr int kNPlus = static_cast<int>(cit::Class4::NPlus);
constexpr int kPMinus = static_cast<int>(cit::Class4::PMinus);
constexpr int kPPlus = static_cast<int>(cit::Class4::PPlus);

}  // namespace

FusionDecision fuse(const FusionInput& input) {
  check_normalized(input.theta, "theta");
  check_normalized(input.psi, "psi");

  const int y_plus = argmax4(input.theta);
  const int y_minus = argmax4(input.psi);

  FusionDecision decision;
  if (y_plus == kNPlus && y_minus == kNMinus) {
    decision.label = dataset::ClassLabel::N;
    decision.rule = Rule::A;
    return decision;
  }
  if (y_plus == kPPlus && y_minus == kPMinus) {
    decision.label = dataset::ClassLabel::P;
    decision.rule = Rule::B;
    return decision;
  }
  decision.rule = Rule::C;
  decision.max_n = std::max({input.theta[kNMinus], input.theta[kNPlus], input.psi[kNMinus],
                             input.psi[kNPlus]});
  decision.max_p = std::max({input.theta[kPMinus], input.theta[kPPlus], input.psi[kPMinus],
                             input.psi[kPPlus]});
  decision.label = decision.max_n > decision.max_p ? dataset::ClassLabel::N
                                                   : dataset::ClassLabel::P;
  return decision;
}

util::json TraceRecord::to_json() const {
  return {{"id", id},
          {"box", box.to_json()},
          {"fallback", fallback},
          {"theta", theta},
          {"psi", psi},
          {"rule", to_string(rule)},
          {"label", dataset::to_string(label)}};
}

TraceRecord infer_case(const cv::Mat& image, const std::string& id, const InferContext& ctx) {
  TraceRecord trace;
  trace.id = id;

  cv::Mat working = image;
  if (ctx.use_segmentation) {
    const auto outcome = preprocess::segment_and_crop(image, ctx.backend, id, ctx.preprocess);
    trace.box = outcome.box;
    trace.fallback = outcome.empty_mask_fallback;
    working = outcome.image;
  } else {
    trace.box = preprocess::Box{0, 0, image.cols - 1, image.rows - 1};
  }

  const nn::Tensor prepared = preprocess::prepare_image(working, ctx.prepare);
  const auto [plus, minus] = cit::transform_pair(ctx.gens, prepared);

  // Transformed images pass through the same materialization as the expanded
  // training set, so inference sees the distribution the model was trained on.
  const auto as_input = [&](const nn::Tensor& t) {
    return preprocess::prepare_image(preprocess::tensor_to_image(t, ctx.prepare), ctx.prepare);
  };
  const auto pred_plus = classifier::predict(ctx.model, as_input(plus));
  const auto pred_minus = classifier::predict(ctx.model, as_input(minus));
  if (pred_plus.probs.arity() != 4 || pred_minus.probs.arity() != 4)
    throw nn::ShapeMismatch("infer_case needs a four-class model");

  FusionInput input;
  for (int i = 0; i < 4; ++i) {
    input.theta[i] = pred_plus.probs.probs[i];
    input.psi[i] = pred_minus.probs.probs[i];
  }
  const auto decision = fuse(input);
  trace.theta = input.theta;
  trace.psi = input.psi;
  trace.rule = decision.rule;
  trace.label = decision.label;
  return trace;
}

}  // namespace sdnet::fusion
