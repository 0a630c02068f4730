#pragma once

#include "sdnet/nn/autograd.hpp"

namespace sdnet::nn {

SDNET_DEFINE_ERROR(NonFiniteLoss);

Var add(const Var& a, const Var& b);
Var scale(const Var& a, Scalar s);
Var reshape(const Var& x, std::vector<int> shape);
/// Selects one element of `x` as a scalar node (Grad-CAM target score).
Var index_scalar(const Var& x, std::size_t flat_index);

/// x: [N,Cin,H,W], w: [Cout,Cin,kh,kw], b: [Cout] or null.
Var conv2d(const Var& x, const Var& w, const Var& b, int stride, int pad);
/// x: [N,D], w: [K,D], b: [K] or null.
Var linear(const Var& x, const Var& w, const Var& b);
Var relu(const Var& x);
/// Per-channel parametric ReLU; slope: [C].
Var prelu(const Var& x, const Var& slope);
Var max_pool2d(const Var& x, int kernel, int stride, int pad);
/// [N,C,H,W] -> [N,C].
Var global_avg_pool(const Var& x);

/// Running statistics owned by the layer, updated only in training mode.
struct BatchNormState {
  Tensor running_mean;
  Tensor running_var;
};

Var batch_norm2d(const Var& x, const Var& gamma, const Var& beta, BatchNormState& state,
                 bool training, Scalar momentum = 0.1, Scalar eps = 1e-5);

/// Mean squared difference over all elements; scalar.
Var mse_loss(const Var& a, const Var& b);

/// Weighted-mean softmax cross entropy over rows of [N,K] logits.
/// `weights` empty means all ones; an all-zero weight vector yields a constant
/// zero loss (the masked-out case), not a NaN.
Var softmax_cross_entropy(const Var& logits, const std::vector<int>& targets,
                          const std::vector<Scalar>& weights = {});

}  // namespace sdnet::nn
