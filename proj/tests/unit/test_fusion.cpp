#include <doctest.h>

#include "sdnet/fusion/fusion.hpp"
#include "sdnet/synthetic.hpp"
#include "support/tmpdir.hpp"

using namespace sdnet;
using namespace sdnet::fusion;
using dataset::ClassLabel;

namespace {

/// Builds a FusionInput from vectors written in the order (P+, P-, N+, N-),
/// the order used in worked examples; storage is canonical [N-, N+, P-, P+].
FusionInput from_ppnn(const std::array<double, 4>& theta, const std::array<double, 4>& psi) {
  auto reorder = [](const std::array<double, 4>& v) {
    return std::array<double, 4>{v[3], v[2], v[1], v[0]};
  };
  return FusionInput{reorder(theta), reorder(psi)};
}

}  // namespace

TEST_CASE("fuse applies rules (a), (b), (c) as stated") {
  // order in the literals: (P+, P-, N+, N-)
  const auto a = fuse(from_ppnn({.1, .1, .7, .1}, {.1, .1, .1, .7}));
  CHECK(a.label == ClassLabel::N);
  CHECK(a.rule == Rule::A);

  const auto b = fuse(from_ppnn({.7, .1, .1, .1}, {.1, .7, .1, .1}));
  CHECK(b.label == ClassLabel::P);
  CHECK(b.rule == Rule::B);

  const auto c = fuse(from_ppnn({.6, .1, .2, .1}, {.1, .1, .1, .7}));
  CHECK(c.label == ClassLabel::N);
  CHECK(c.rule == Rule::C);
  CHECK(c.max_n == doctest::Approx(0.7));
  CHECK(c.max_p == doctest::Approx(0.6));
}

TEST_CASE("fuse tie in rule (c) resolves to P") {
  const auto tie = fuse(from_ppnn({.5, 0, .5, 0}, {.5, 0, .5, 0}));
  CHECK(tie.rule == Rule::C);
  CHECK(tie.label == ClassLabel::P);
}

TEST_CASE("fuse rejects degenerate probability vectors") {
  CHECK_THROWS_AS(fuse(from_ppnn({.5, .5, .5, .5}, {.25, .25, .25, .25})),
                  DegenerateProbabilities);
  CHECK_THROWS_AS(fuse(from_ppnn({std::nan(""), 0, 0, 1}, {.25, .25, .25, .25})),
                  DegenerateProbabilities);
}

TEST_CASE("swapping the P and N halves of both vectors flips the decision") {
  util::Rng rng(53);
  auto random_simplex = [&rng] {
    std::array<double, 4> v;
    double sum = 0;
    for (auto& x : v) {
      x = -std::log(1.0 - rng.uniform());
      sum += x;
    }
    for (auto& x : v) x /= sum;
    return v;
  };
  // Canonical order [N-, N+, P-, P+]: swapping halves exchanges the roles of
  // N- with P- and N+ with P+.
  auto swap_halves = [](const std::array<double, 4>& v) {
    return std::array<double, 4>{v[2], v[3], v[0], v[1]};
  };
  int flipped = 0;
  for (int i = 0; i < 500; ++i) {
    FusionInput input{random_simplex(), random_simplex()};
    const auto base = fuse(input);
    const auto mirrored = fuse(FusionInput{swap_halves(input.theta), swap_halves(input.psi)});
    // Ties in rule (c) map to P on both sides; every strict case must flip.
    if (base.rule == Rule::C && base.max_n == base.max_p) continue;
    CHECK(mirrored.label != base.label);
    ++flipped;
  }
  CHECK(flipped > 450);
}

TEST_CASE("infer_case runs the full pipeline and traces it") {
  testsupport::TmpDir tmp;
  SyntheticSpec spec;
  spec.n_positive = 2;
  spec.n_negative = 2;
  spec.side = 24;
  spec.seed = 19;
  const auto manifest = make_blob_dataset(tmp.path(), spec);

  util::Rng rng(3);
  nn::GeneratorConfig gen_cfg;
  gen_cfg.features = 4;
  gen_cfg.blocks = 1;
  gen_cfg.edge_kernel = 3;
  cit::GeneratorPair gens{nn::ResidualGenerator(gen_cfg, rng),
                          nn::ResidualGenerator(gen_cfg, rng)};

  nn::ClassifierNetConfig clf_cfg;
  clf_cfg.backbone = nn::ResNetConfig::tiny();
  clf_cfg.hidden_units = 8;
  clf_cfg.num_classes = 4;
  nn::ClassifierNet model(clf_cfg, rng);

  preprocess::FullImageBackend backend;
  preprocess::PreprocessSettings pre;
  preprocess::PrepareSettings prep;
  prep.side = 16;
  InferContext ctx{backend, gens, model, pre, prep, true};

  const auto image = preprocess::load_image(manifest.resolve_path(manifest.records[0]));
  const auto trace = infer_case(image, manifest.records[0].id, ctx);

  CHECK(trace.id == manifest.records[0].id);
  double sum_theta = 0, sum_psi = 0;
  for (int i = 0; i < 4; ++i) {
    sum_theta += trace.theta[i];
    sum_psi += trace.psi[i];
  }
  CHECK(sum_theta == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(sum_psi == doctest::Approx(1.0).epsilon(1e-6));

  const auto again = infer_case(image, manifest.records[0].id, ctx);
  CHECK(again.label == trace.label);
  CHECK(again.rule == trace.rule);
  for (int i = 0; i < 4; ++i) CHECK(again.theta[i] == trace.theta[i]);

  const auto j = trace.to_json();
  CHECK(j.contains("id"));
  CHECK(j.contains("box"));
  CHECK(j.contains("fallback"));
  CHECK(j.at("theta").size() == 4);
  CHECK(j.at("psi").size() == 4);
  CHECK(j.contains("rule"));
  CHECK(j.contains("label"));
}

TEST_CASE("infer_case survives an empty mask via the full-image fallback") {
  struct EmptyBackend final : preprocess::SegmentationBackend {
    std::string identity() const override { return "empty/test"; }
    cv::Mat predict(const cv::Mat& image, const std::string&) override {
      return cv::Mat(image.rows, image.cols, CV_64F, 0.0);
    }
  };

  util::Rng rng(5);
  nn::GeneratorConfig gen_cfg;
  gen_cfg.features = 4;
  gen_cfg.blocks = 1;
  gen_cfg.edge_kernel = 3;
  cit::GeneratorPair gens{nn::ResidualGenerator(gen_cfg, rng),
                          nn::ResidualGenerator(gen_cfg, rng)};
  nn::ClassifierNetConfig clf_cfg;
  clf_cfg.backbone = nn::ResNetConfig::tiny();
  clf_cfg.num_classes = 4;
  nn::ClassifierNet model(clf_cfg, rng);

  EmptyBackend backend;
  InferContext ctx{backend, gens, model, {}, {.side = 16}, true};
  cv::Mat image(32, 40, CV_8U, cv::Scalar(90));
  const auto trace = infer_case(image, "case", ctx);
  CHECK(trace.fallback);
  CHECK(trace.box == preprocess::Box{0, 0, 39, 31});
}
