#pragma once

#include "sdnet/nn/ops.hpp"
#include "sdnet/util/rng.hpp"

namespace sdnet::nn {

/// Ordered (name, parameter) pairs plus non-trainable buffers (BN running
/// stats). The order defines the checkpoint layout.
struct ModelState {
  std::vector<std::pair<std::string, Var>> params;
  std::vector<std::pair<std::string, Tensor*>> buffers;

  void add(const std::string& name, const Var& v) { params.emplace_back(name, v); }
  void add_buffer(const std::string& name, Tensor* t) { buffers.emplace_back(name, t); }
  std::vector<Var> param_vars() const {
    std::vector<Var> out;
    out.reserve(params.size());
    for (const auto& [_, v] : params) out.push_back(v);
    return out;
  }
};

struct Conv2dLayer {
  Var w, b;
  int stride = 1, pad = 0;

  void init(int cin, int cout, int kernel, int stride_, int pad_, util::Rng& rng,
            bool bias = true) {
    stride = stride_;
    pad = pad_;
    Tensor wt({cout, cin, kernel, kernel});
    const Scalar std = std::sqrt(Scalar(2) / (static_cast<Scalar>(cin) * kernel * kernel));
    for (std::size_t i = 0; i < wt.size(); ++i) wt[i] = std * rng.normal();
    w = make_leaf(std::move(wt), true);
    b = bias ? make_leaf(Tensor({cout}, 0.0), true) : nullptr;
  }

  Var forward(const Var& x) const { return conv2d(x, w, b, stride, pad); }

  void collect(const std::string& prefix, ModelState& state) const {
    state.add(prefix + ".w", w);
    if (b) state.add(prefix + ".b", b);
  }
};

struct LinearLayer {
  Var w, b;

  void init(int in_dim, int out_dim, util::Rng& rng) {
    Tensor wt({out_dim, in_dim});
    const Scalar std = std::sqrt(Scalar(2) / static_cast<Scalar>(in_dim));
    for (std::size_t i = 0; i < wt.size(); ++i) wt[i] = std * rng.normal();
    w = make_leaf(std::move(wt), true);
    b = make_leaf(Tensor({out_dim}, 0.0), true);
  }

  Var forward(const Var& x) const { return linear(x, w, b); }

  void collect(const std::string& prefix, ModelState& state) const {
    state.add(prefix + ".w", w);
    state.add(prefix + ".b", b);
  }
};

struct BatchNorm2dLayer {
  Var gamma, beta;
  mutable BatchNormState stats;

  void init(int channels) {
    gamma = make_leaf(Tensor({channels}, 1.0), true);
    beta = make_leaf(Tensor({channels}, 0.0), true);
    stats.running_mean = Tensor({channels}, 0.0);
    stats.running_var = Tensor({channels}, 1.0);
  }

  Var forward(const Var& x, bool training) const {
    return batch_norm2d(x, gamma, beta, stats, training);
  }

  void collect(const std::string& prefix, ModelState& state) {
    state.add(prefix + ".gamma", gamma);
    state.add(prefix + ".beta", beta);
    state.add_buffer(prefix + ".running_mean", &stats.running_mean);
    state.add_buffer(prefix + ".running_var", &stats.running_var);
  }
};

struct PReluLayer {
  Var slope;

  void init(int channels, Scalar initial = 0.25) {
    slope = make_leaf(Tensor({channels}, initial), true);
  }

  Var forward(const Var& x) const { return prelu(x, slope); }

  void collect(const std::string& prefix, ModelState& state) const {
    state.add(prefix + ".slope", slope);
  }
};

}  // namespace sdnet::nn
