#include <doctest.h>

#include "sdnet/nn/models.hpp"
#include "sdnet/nn/optim.hpp"
#include "sdnet/nn/serialize.hpp"
#include "support/gradcheck.hpp"
#include "support/tmpdir.hpp"

using namespace sdnet;
using namespace sdnet::nn;
using testsupport::gradcheck;
using testsupport::random_tensor;

namespace {
constexpr double kTol = 1e-6;  // double-precision central differences
}

TEST_CASE("conv2d computes a known value") {
  // 3x3 ones through a 2x2 ones kernel: every window sums to 4.
  auto x = make_leaf(Tensor({1, 1, 3, 3}, 1.0));
  auto w = make_leaf(Tensor({1, 1, 2, 2}, 1.0));
  auto y = conv2d(x, w, nullptr, 1, 0);
  REQUIRE(y->value.shape() == std::vector<int>{1, 1, 2, 2});
  for (std::size_t i = 0; i < 4; ++i) CHECK(y->value[i] == doctest::Approx(4.0));
}

TEST_CASE("conv2d strided/padded gradients match finite differences") {
  util::Rng rng(1);
  auto x = make_leaf(random_tensor({2, 2, 5, 5}, rng), true);
  auto w = make_leaf(random_tensor({3, 2, 3, 3}, rng, 0.5), true);
  auto b = make_leaf(random_tensor({3}, rng, 0.1), true);
  auto target = make_leaf(random_tensor({2, 3, 3, 3}, rng));
  auto loss = [&] { return mse_loss(conv2d(x, w, b, 2, 1), target); };
  CHECK(gradcheck(loss, {x, w, b}) < kTol);
}

TEST_CASE("linear gradients match finite differences") {
  util::Rng rng(2);
  auto x = make_leaf(random_tensor({4, 6}, rng), true);
  auto w = make_leaf(random_tensor({3, 6}, rng, 0.5), true);
  auto b = make_leaf(random_tensor({3}, rng, 0.1), true);
  auto target = make_leaf(random_tensor({4, 3}, rng));
  auto loss = [&] { return mse_loss(linear(x, w, b), target); };
  CHECK(gradcheck(loss, {x, w, b}) < kTol);
}

TEST_CASE("relu and prelu gradients match finite differences") {
  util::Rng rng(3);
  // Keep activations away from the kink so finite differences are valid.
  Tensor xt = random_tensor({2, 3, 4, 4}, rng);
  for (std::size_t i = 0; i < xt.size(); ++i)
    if (std::abs(xt[i]) < 0.05) xt[i] = 0.1;
  auto x = make_leaf(xt, true);
  auto slope = make_leaf(Tensor({3}, 0.25), true);
  auto target = make_leaf(random_tensor({2, 3, 4, 4}, rng));

  auto relu_loss = [&] { return mse_loss(relu(x), target); };
  CHECK(gradcheck(relu_loss, {x}) < kTol);

  auto prelu_loss = [&] { return mse_loss(prelu(x, slope), target); };
  CHECK(gradcheck(prelu_loss, {x, slope}) < kTol);
}

TEST_CASE("max_pool2d forwards the window max and routes gradients") {
  util::Rng rng(4);
  auto x = make_leaf(random_tensor({1, 2, 6, 6}, rng), true);
  auto target = make_leaf(random_tensor({1, 2, 3, 3}, rng));
  auto loss = [&] { return mse_loss(max_pool2d(x, 2, 2, 0), target); };
  CHECK(gradcheck(loss, {x}) < kTol);

  auto padded = [&] { return mse_loss(max_pool2d(x, 3, 2, 1), target); };
  CHECK(gradcheck(padded, {x}) < kTol);
}

TEST_CASE("global_avg_pool gradients match finite differences") {
  util::Rng rng(5);
  auto x = make_leaf(random_tensor({2, 3, 4, 5}, rng), true);
  auto target = make_leaf(random_tensor({2, 3}, rng));
  auto loss = [&] { return mse_loss(global_avg_pool(x), target); };
  CHECK(gradcheck(loss, {x}) < kTol);
}

TEST_CASE("batch_norm2d gradients match finite differences in both modes") {
  util::Rng rng(6);
  auto x = make_leaf(random_tensor({3, 2, 4, 4}, rng), true);
  auto gamma = make_leaf(Tensor({2}, 1.3), true);
  auto beta = make_leaf(Tensor({2}, -0.2), true);
  auto target = make_leaf(random_tensor({3, 2, 4, 4}, rng));
  BatchNormState state;

  auto train_loss = [&] {
    return mse_loss(batch_norm2d(x, gamma, beta, state, /*training=*/true), target);
  };
  CHECK(gradcheck(train_loss, {x, gamma, beta}) < kTol);

  state.running_mean = Tensor({2}, 0.2);
  state.running_var = Tensor({2}, 1.5);
  auto eval_loss = [&] {
    return mse_loss(batch_norm2d(x, gamma, beta, state, /*training=*/false), target);
  };
  CHECK(gradcheck(eval_loss, {x, gamma, beta}) < kTol);
}

TEST_CASE("batch_norm2d normalizes per channel in training mode") {
  util::Rng rng(7);
  auto x = make_leaf(random_tensor({4, 3, 5, 5}, rng, 3.0), false);
  auto gamma = make_leaf(Tensor({3}, 1.0));
  auto beta = make_leaf(Tensor({3}, 0.0));
  BatchNormState state;
  auto y = batch_norm2d(x, gamma, beta, state, true);
  for (int c = 0; c < 3; ++c) {
    double sum = 0, sq = 0;
    int count = 0;
    for (int n = 0; n < 4; ++n)
      for (int h = 0; h < 5; ++h)
        for (int w = 0; w < 5; ++w) {
          const double v = y->value[y->value.at4(n, c, h, w)];
          sum += v;
          sq += v * v;
          ++count;
        }
    CHECK(sum / count == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(sq / count == doctest::Approx(1.0).epsilon(1e-3));
  }
}

TEST_CASE("softmax_cross_entropy gradients and masking") {
  util::Rng rng(8);
  auto logits = make_leaf(random_tensor({4, 3}, rng), true);
  const std::vector<int> targets{0, 2, 1, 2};

  auto loss_all = [&] { return softmax_cross_entropy(logits, targets); };
  CHECK(gradcheck(loss_all, {logits}) < kTol);

  const std::vector<Scalar> mask{1, 0, 1, 0};
  auto loss_masked = [&] { return softmax_cross_entropy(logits, targets, mask); };
  CHECK(gradcheck(loss_masked, {logits}) < kTol);

  // Fully masked batch: constant zero, no gradient.
  const std::vector<Scalar> zero_mask{0, 0, 0, 0};
  auto z = softmax_cross_entropy(logits, targets, zero_mask);
  CHECK(z->value.item() == 0.0);
  CHECK_FALSE(z->requires_grad);
}

TEST_CASE("composite ops (add/scale/reshape/index_scalar) backprop correctly") {
  util::Rng rng(9);
  auto a = make_leaf(random_tensor({2, 6}, rng), true);
  auto b = make_leaf(random_tensor({2, 6}, rng), true);
  auto loss = [&] {
    auto s = add(scale(a, 0.7), b);
    auto r = reshape(s, {12});
    return add(index_scalar(r, 3), index_scalar(r, 8));
  };
  CHECK(gradcheck(loss, {a, b}) < kTol);
}

TEST_CASE("generator preserves shape and channels") {
  util::Rng rng(10);
  GeneratorConfig cfg;
  cfg.features = 4;
  cfg.blocks = 2;
  cfg.edge_kernel = 3;
  ResidualGenerator gen(cfg, rng);

  for (const auto& [h, w] : {std::pair{7, 9}, std::pair{16, 16}}) {
    auto x = make_leaf(random_tensor({1, 3, h, w}, rng));
    auto y = gen.forward(x, /*training=*/false);
    CHECK(y->value.shape() == std::vector<int>{1, 3, h, w});
    CHECK(y->value.all_finite());
  }
}

TEST_CASE("generator with zeroed weights stays finite and shaped") {
  util::Rng rng(11);
  GeneratorConfig cfg;
  cfg.features = 4;
  cfg.blocks = 1;
  cfg.edge_kernel = 3;
  ResidualGenerator gen(cfg, rng);
  auto state = gen.state();
  for (auto& [name, var] : state.params) var->value.fill(0);
  auto x = make_leaf(random_tensor({1, 3, 6, 6}, rng));
  auto y = gen.forward(x, false);
  CHECK(y->value.shape() == std::vector<int>{1, 3, 6, 6});
  CHECK(y->value.all_finite());
}

TEST_CASE("generator evaluation is deterministic") {
  util::Rng rng(12);
  GeneratorConfig cfg;
  cfg.features = 4;
  cfg.blocks = 2;
  cfg.edge_kernel = 3;
  ResidualGenerator gen(cfg, rng);
  auto x = make_leaf(random_tensor({1, 3, 8, 8}, rng));
  auto y1 = gen.forward(x, false);
  auto y2 = gen.forward(x, false);
  for (std::size_t i = 0; i < y1->value.size(); ++i) CHECK(y1->value[i] == y2->value[i]);
}

TEST_CASE("backbone feature dims and classifier head arity") {
  util::Rng rng(13);
  auto cfg = ResNetConfig::tiny();
  ResNetBackbone backbone(cfg, rng);
  auto x = make_leaf(random_tensor({2, 3, 16, 16}, rng));
  Var cam;
  auto feat = backbone.forward(x, false, &cam);
  CHECK(feat->value.shape() == std::vector<int>{2, cfg.feature_dim()});
  REQUIRE(cam != nullptr);
  CHECK(cam->value.shape(1) == cfg.feature_dim());

  for (int k : {2, 4}) {
    ClassifierNetConfig ccfg;
    ccfg.backbone = ResNetConfig::tiny();
    ccfg.hidden_units = 32;
    ccfg.num_classes = k;
    ClassifierNet net(ccfg, rng);
    auto logits = net.forward(x, false);
    CHECK(logits->value.shape() == std::vector<int>{2, k});
  }
}

TEST_CASE("resnet18 and resnet50 configurations build and forward") {
  util::Rng rng(14);
  // Thin but structurally faithful variants keep this test fast.
  auto c18 = ResNetConfig::resnet18();
  c18.stem_features = 4;
  c18.stage_features = {4, 6, 8, 10};
  ResNetBackbone b18(c18, rng);
  auto x = make_leaf(random_tensor({1, 3, 32, 32}, rng));
  CHECK(b18.forward(x, false)->value.shape() == std::vector<int>{1, 10});

  auto c50 = ResNetConfig::resnet50();
  c50.stem_features = 4;
  c50.stage_features = {2, 3, 4, 5};
  ResNetBackbone b50(c50, rng);
  CHECK(b50.forward(x, false)->value.shape() == std::vector<int>{1, 20});
}

TEST_CASE("sgd with momentum reduces a quadratic") {
  auto p = make_leaf(Tensor({2}, 5.0), true);
  Sgd opt({p}, 0.05, 0.9);
  auto target = make_leaf(Tensor({2}, 0.0));
  double first = 0;
  for (int step = 0; step < 200; ++step) {
    opt.zero_grad();
    auto loss = mse_loss(p, target);
    if (step == 0) first = loss->value.item();
    backward(loss);
    opt.step();
  }
  auto final_loss = mse_loss(p, target)->value.item();
  CHECK(final_loss < first * 1e-3);
}

TEST_CASE("state save/load round-trips through disk") {
  testsupport::TmpDir tmp;
  util::Rng rng(15);
  GeneratorConfig cfg;
  cfg.features = 4;
  cfg.blocks = 1;
  cfg.edge_kernel = 3;
  ResidualGenerator gen(cfg, rng);
  auto x = make_leaf(random_tensor({1, 3, 6, 6}, rng));
  const auto before = gen.forward(x, false)->value;

  auto state = gen.state();
  save_state(tmp.path() / "gen.bin", state);

  ResidualGenerator other(cfg, rng);  // different random weights
  auto other_state = other.state();
  load_state(tmp.path() / "gen.bin", other_state);
  const auto after = other.forward(x, false)->value;
  REQUIRE(before.size() == after.size());
  for (std::size_t i = 0; i < before.size(); ++i) CHECK(before[i] == after[i]);

  CHECK_THROWS_AS(load_tensors(tmp.path() / "nope.bin"), CheckpointMissing);
}

TEST_CASE("snapshot/restore preserves exact values") {
  util::Rng rng(16);
  GeneratorConfig cfg;
  cfg.features = 4;
  cfg.blocks = 1;
  cfg.edge_kernel = 3;
  ResidualGenerator gen(cfg, rng);
  auto state = gen.state();
  const auto snap = snapshot(state);
  const double orig = state.params[0].second->value[0];
  state.params[0].second->value.fill(123.0);
  restore(state, snap);
  CHECK(state.params[0].second->value[0] == orig);
}
