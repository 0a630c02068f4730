#pragma once

#include <array>

#include "sdnet/cit/expand.hpp"
#include "sdnet/classifier/classifier.hpp"

namespace sdnet::fusion {

SDNET_DEFINE_ERROR(DegenerateProbabilities);

/// Four-class probability vectors for the positively (theta) and negatively
/// (psi) transformed images, indexed in the fixed order [N-, N+, P-, P+].
struct FusionInput {
  std::array<double, 4> theta{};
  std::array<double, 4> psi{};
};

enum class Rule { A, B, C };
inline const char* to_string(Rule r) { return r == Rule::A ? "a" : r == Rule::B ? "b" : "c"; }

struct FusionDecision {
  dataset::ClassLabel label = dataset::ClassLabel::N;
  Rule rule = Rule::C;
  /// The two maxima compared in rule (c); meaningful only when rule == C.
  double max_n = 0;
  double max_p = 0;
};

/// The twin-fusion decision:
///   (a) argmax theta == N+ and argmax psi == N-  ->  N
///   (b) argmax theta == P+ and argmax psi == P-  ->  P
///   (c) otherwise N iff max of the four N entries exceeds the max of the four
///       P entries, else P (ties resolve to P: triage favors sensitivity).
/// Argmax ties inside theta/psi break toward the lowest class index.
FusionDecision fuse(const FusionInput& input);

struct TraceRecord {
  std::string id;
  preprocess::Box box;
  bool fallback = false;
  std::array<double, 4> theta{};
  std::array<double, 4> psi{};
  Rule rule = Rule::C;
  dataset::ClassLabel label = dataset::ClassLabel::N;

  util::json to_json() const;
};

struct InferContext {
  preprocess::SegmentationBackend& backend;
  const cit::GeneratorPair& gens;
  const nn::ClassifierNet& model;  // four-class
  preprocess::PreprocessSettings preprocess;
  preprocess::PrepareSettings prepare;
  bool use_segmentation = true;
};

/// Full single-case pipeline: crop -> prepare -> G_P/G_N -> two four-class
/// predictions -> fuse. Returns the decision with a complete trace; module
/// errors propagate, no stage is skipped silently.
TraceRecord infer_case(const cv::Mat& image, const std::string& id, const InferContext& ctx);

}  // namespace sdnet::fusion
