#pragma once

#include <limits>

#include "sdnet/nn/autograd.hpp"

namespace sdnet::nn {

/// Stochastic gradient descent with classical momentum.
class Sgd {
 public:
  Sgd(std::vector<Var> params, Scalar lr, Scalar momentum)
      : params_(std::move(params)), lr_(lr), momentum_(momentum) {
    velocity_.reserve(params_.size());
    for (const auto& p : params_) velocity_.push_back(Tensor::zeros_like(p->value));
  }

  void zero_grad() {
    for (const auto& p : params_)
      if (!p->grad.empty()) p->grad.fill(0);
  }

  void step() {
    for (std::size_t i = 0; i < params_.size(); ++i) {
      Node& p = *params_[i];
      if (p.grad.empty()) continue;
      Tensor& v = velocity_[i];
      for (std::size_t k = 0; k < v.size(); ++k) {
        v[k] = momentum_ * v[k] + p.grad[k];
        p.value[k] -= lr_ * v[k];
      }
    }
  }

  Scalar lr() const { return lr_; }
  void set_lr(Scalar lr) { lr_ = lr; }

 private:
  std::vector<Var> params_;
  std::vector<Tensor> velocity_;
  Scalar lr_;
  Scalar momentum_;
};

/// Multiplies the learning rate by `factor` after `patience` epochs without
/// improvement of the monitored value.
class PlateauLr {
 public:
  PlateauLr(int patience, Scalar factor = 0.1, Scalar min_lr = 1e-6)
      : patience_(patience), factor_(factor), min_lr_(min_lr) {}

  void step(Scalar monitored, Sgd& opt) {
    if (monitored < best_) {
      best_ = monitored;
      bad_ = 0;
      return;
    }
    if (++bad_ > patience_) {
      const Scalar next = std::max(min_lr_, opt.lr() * factor_);
      opt.set_lr(next);
      bad_ = 0;
    }
  }

 private:
  int patience_;
  Scalar factor_;
  Scalar min_lr_;
  Scalar best_ = std::numeric_limits<Scalar>::infinity();
  int bad_ = 0;
};

/// Tracks the best monitored value; lower is better.
class EarlyStopping {
 public:
  explicit EarlyStopping(int patience) : patience_(patience) {}

  /// Returns true when `monitored` improves on the best seen so far.
  bool update(Scalar monitored, int epoch) {
    if (monitored < best_) {
      best_ = monitored;
      best_epoch_ = epoch;
      bad_ = 0;
      return true;
    }
    ++bad_;
    return false;
  }

  bool should_stop() const { return bad_ >= patience_; }
  int best_epoch() const { return best_epoch_; }
  Scalar best() const { return best_; }

 private:
  int patience_;
  Scalar best_ = std::numeric_limits<Scalar>::infinity();
  int best_epoch_ = -1;
  int bad_ = 0;
};

}  // namespace sdnet::nn
