#include "sdnet/nn/ops.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>

namespace sdnet::nn {

namespace {

using RowMat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using MapConst = Eigen::Map<const RowMat>;

void require(bool cond, const char* what) {
  if (!cond) throw ShapeMismatch(what);
}

int out_extent(int in, int kernel, int stride, int pad) {
  return (in + 2 * pad - kernel) / stride + 1;
}

// Scatters input patches into a [Cin*kh*kw, Hout*Wout] matrix for one sample.
void im2col(const Scalar* x, int C, int H, int W, int kh, int kw, int stride, int pad,
            int Hout, int Wout, Scalar* cols) {
  const int HW = Hout * Wout;
  for (int c = 0; c < C; ++c) {
    for (int ki = 0; ki < kh; ++ki) {
      for (int kj = 0; kj < kw; ++kj) {
        Scalar* row = cols + ((c * kh + ki) * kw + kj) * HW;
        for (int oh = 0; oh < Hout; ++oh) {
          const int ih = oh * stride - pad + ki;
          if (ih < 0 || ih >= H) {
            std::fill(row + oh * Wout, row + (oh + 1) * Wout, Scalar(0));
            continue;
          }
          const Scalar* src = x + (c * H + ih) * W;
          for (int ow = 0; ow < Wout; ++ow) {
            const int iw = ow * stride - pad + kj;
            row[oh * Wout + ow] = (iw < 0 || iw >= W) ? Scalar(0) : src[iw];
          }
        }
      }
    }
  }
}

void col2im_accumulate(const Scalar* cols, int C, int H, int W, int kh, int kw, int stride,
                       int pad, int Hout, int Wout, Scalar* x) {
  const int HW = Hout * Wout;
  for (int c = 0; c < C; ++c) {
    for (int ki = 0; ki < kh; ++ki) {
      for (int kj = 0; kj < kw; ++kj) {
        const Scalar* row = cols + ((c * kh + ki) * kw + kj) * HW;
        for (int oh = 0; oh < Hout; ++oh) {
          const int ih = oh * stride - pad + ki;
          if (ih < 0 || ih >= H) continue;
          Scalar* dst = x + (c * H + ih) * W;
          for (int ow = 0; ow < Wout; ++ow) {
            const int iw = ow * stride - pad + kj;
            if (iw >= 0 && iw < W) dst[iw] += row[oh * Wout + ow];
          }
        }
      }
    }
  }
}

}  // namespace

Var add(const Var& a, const Var& b) {
  require(a->value.same_shape(b->value), "add: shapes differ");
  Tensor out = a->value;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b->value[i];
  return make_node(std::move(out), {a, b}, [a, b](Node& self) {
    if (a->requires_grad) {
      Tensor& ga = a->ensure_grad();
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += self.grad[i];
    }
    if (b->requires_grad) {
      Tensor& gb = b->ensure_grad();
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += self.grad[i];
    }
  });
}

Var scale(const Var& a, Scalar s) {
  Tensor out = a->value;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= s;
  return make_node(std::move(out), {a}, [a, s](Node& self) {
    if (!a->requires_grad) return;
    Tensor& ga = a->ensure_grad();
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += s * self.grad[i];
  });
}

Var reshape(const Var& x, std::vector<int> shape) {
  Tensor out = x->value.reshaped(std::move(shape));
  return make_node(std::move(out), {x}, [x](Node& self) {
    if (!x->requires_grad) return;
    Tensor& gx = x->ensure_grad();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += self.grad[i];
  });
}

Var index_scalar(const Var& x, std::size_t flat_index) {
  if (flat_index >= x->value.size()) throw ShapeMismatch("index_scalar out of range");
  Tensor out = Tensor::scalar(x->value[flat_index]);
  return make_node(std::move(out), {x}, [x, flat_index](Node& self) {
    if (!x->requires_grad) return;
    x->ensure_grad()[flat_index] += self.grad[0];
  });
}

Var conv2d(const Var& x, const Var& w, const Var& b, int stride, int pad) {
  const Tensor& xv = x->value;
  const Tensor& wv = w->value;
  require(xv.ndim() == 4, "conv2d: input must be 4-d");
  require(wv.ndim() == 4, "conv2d: weight must be 4-d");
  require(xv.shape(1) == wv.shape(1), "conv2d: channel mismatch");
  const int N = xv.shape(0), Cin = xv.shape(1), H = xv.shape(2), W = xv.shape(3);
  const int Cout = wv.shape(0), kh = wv.shape(2), kw = wv.shape(3);
  require(b == nullptr || (b->value.ndim() == 1 && b->value.shape(0) == Cout),
          "conv2d: bias must be [Cout]");
  const int Hout = out_extent(H, kh, stride, pad);
  const int Wout = out_extent(W, kw, stride, pad);
  require(Hout > 0 && Wout > 0, "conv2d: output would be empty");

  const int D = Cin * kh * kw;
  const int HW = Hout * Wout;
  Tensor out({N, Cout, Hout, Wout});
  std::vector<Scalar> cols(static_cast<std::size_t>(D) * HW);
  MapConst wm(wv.data(), Cout, D);
  for (int n = 0; n < N; ++n) {
    im2col(xv.data() + xv.at4(n, 0, 0, 0), Cin, H, W, kh, kw, stride, pad, Hout, Wout,
           cols.data());
    MapMat om(out.data() + out.at4(n, 0, 0, 0), Cout, HW);
    om.noalias() = wm * MapConst(cols.data(), D, HW);
    if (b) {
      for (int c = 0; c < Cout; ++c) om.row(c).array() += b->value[c];
    }
  }

  std::vector<Var> parents{x, w};
  if (b) parents.push_back(b);
  return make_node(std::move(out), std::move(parents),
                   [x, w, b, stride, pad, N, Cin, H, W, Cout, kh, kw, Hout, Wout](Node& self) {
    const int D = Cin * kh * kw;
    const int HW = Hout * Wout;
    std::vector<Scalar> cols(static_cast<std::size_t>(D) * HW);
    MapConst wm(w->value.data(), Cout, D);
    for (int n = 0; n < N; ++n) {
      MapConst gm(self.grad.data() + self.grad.at4(n, 0, 0, 0), Cout, HW);
      if (w->requires_grad) {
        im2col(x->value.data() + x->value.at4(n, 0, 0, 0), Cin, H, W, kh, kw, stride, pad,
               Hout, Wout, cols.data());
        MapMat gw(w->ensure_grad().data(), Cout, D);
        gw.noalias() += gm * MapConst(cols.data(), D, HW).transpose();
      }
      if (b && b->requires_grad) {
        Tensor& gb = b->ensure_grad();
        for (int c = 0; c < Cout; ++c) gb[c] += gm.row(c).sum();
      }
      if (x->requires_grad) {
        MapMat gcols(cols.data(), D, HW);
        gcols.noalias() = wm.transpose() * gm;
        col2im_accumulate(cols.data(), Cin, H, W, kh, kw, stride, pad, Hout, Wout,
                          x->ensure_grad().data() + x->value.at4(n, 0, 0, 0));
      }
    }
  });
}

Var linear(const Var& x, const Var& w, const Var& b) {
  const Tensor& xv = x->value;
  const Tensor& wv = w->value;
  require(xv.ndim() == 2 && wv.ndim() == 2, "linear: expects 2-d input and weight");
  require(xv.shape(1) == wv.shape(1), "linear: feature dimension mismatch");
  const int N = xv.shape(0), D = xv.shape(1), K = wv.shape(0);
  require(b == nullptr || (b->value.ndim() == 1 && b->value.shape(0) == K),
          "linear: bias must be [K]");

  Tensor out({N, K});
  MapMat om(out.data(), N, K);
  om.noalias() = MapConst(xv.data(), N, D) * MapConst(wv.data(), K, D).transpose();
  if (b) {
    for (int n = 0; n < N; ++n)
      for (int k = 0; k < K; ++k) out[n * K + k] += b->value[k];
  }

  std::vector<Var> parents{x, w};
  if (b) parents.push_back(b);
  return make_node(std::move(out), std::move(parents), [x, w, b, N, D, K](Node& self) {
    MapConst gm(self.grad.data(), N, K);
    if (w->requires_grad) {
      MapMat gw(w->ensure_grad().data(), K, D);
      gw.noalias() += gm.transpose() * MapConst(x->value.data(), N, D);
    }
    if (b && b->requires_grad) {
      Tensor& gb = b->ensure_grad();
      for (int n = 0; n < N; ++n)
        for (int k = 0; k < K; ++k) gb[k] += self.grad[n * K + k];
    }
    if (x->requires_grad) {
      MapMat gx(x->ensure_grad().data(), N, D);
      gx.noalias() += gm * MapConst(w->value.data(), K, D);
    }
  });
}

Var relu(const Var& x) {
  Tensor out = x->value;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = out[i] > 0 ? out[i] : 0;
  return make_node(std::move(out), {x}, [x](Node& self) {
    if (!x->requires_grad) return;
    Tensor& gx = x->ensure_grad();
    for (std::size_t i = 0; i < gx.size(); ++i)
      if (x->value[i] > 0) gx[i] += self.grad[i];
  });
}

Var prelu(const Var& x, const Var& slope) {
  const Tensor& xv = x->value;
  require(xv.ndim() == 4, "prelu: input must be 4-d");
  const int C = xv.shape(1);
  require(slope->value.ndim() == 1 && slope->value.shape(0) == C, "prelu: slope must be [C]");
  const int N = xv.shape(0), H = xv.shape(2), W = xv.shape(3);
  const std::size_t plane = static_cast<std::size_t>(H) * W;

  Tensor out = xv;
  for (int n = 0; n < N; ++n)
    for (int c = 0; c < C; ++c) {
      const Scalar a = slope->value[c];
      Scalar* p = out.data() + out.at4(n, c, 0, 0);
      for (std::size_t i = 0; i < plane; ++i)
        if (p[i] <= 0) p[i] *= a;
    }
  return make_node(std::move(out), {x, slope}, [x, slope, N, C, plane](Node& self) {
    for (int n = 0; n < N; ++n)
      for (int c = 0; c < C; ++c) {
        const std::size_t base = x->value.at4(n, c, 0, 0);
        const Scalar a = slope->value[c];
        for (std::size_t i = 0; i < plane; ++i) {
          const Scalar xi = x->value[base + i];
          const Scalar g = self.grad[base + i];
          if (x->requires_grad) x->ensure_grad()[base + i] += xi > 0 ? g : a * g;
          if (slope->requires_grad && xi <= 0) slope->ensure_grad()[c] += g * xi;
        }
      }
  });
}

Var max_pool2d(const Var& x, int kernel, int stride, int pad) {
  const Tensor& xv = x->value;
  require(xv.ndim() == 4, "max_pool2d: input must be 4-d");
  require(pad < kernel, "max_pool2d: pad must be smaller than kernel");
  const int N = xv.shape(0), C = xv.shape(1), H = xv.shape(2), W = xv.shape(3);
  const int Hout = out_extent(H, kernel, stride, pad);
  const int Wout = out_extent(W, kernel, stride, pad);
  require(Hout > 0 && Wout > 0, "max_pool2d: output would be empty");

  Tensor out({N, C, Hout, Wout});
  auto argmax = std::make_shared<std::vector<std::int64_t>>(out.size());
  std::size_t oi = 0;
  for (int n = 0; n < N; ++n)
    for (int c = 0; c < C; ++c)
      for (int oh = 0; oh < Hout; ++oh)
        for (int ow = 0; ow < Wout; ++ow, ++oi) {
          Scalar best = -std::numeric_limits<Scalar>::infinity();
          std::int64_t best_idx = -1;
          for (int ki = 0; ki < kernel; ++ki) {
            const int ih = oh * stride - pad + ki;
            if (ih < 0 || ih >= H) continue;
            for (int kj = 0; kj < kernel; ++kj) {
              const int iw = ow * stride - pad + kj;
              if (iw < 0 || iw >= W) continue;
              const std::size_t idx = xv.at4(n, c, ih, iw);
              if (xv[idx] > best) {
                best = xv[idx];
                best_idx = static_cast<std::int64_t>(idx);
              }
            }
          }
          out[oi] = best;
          (*argmax)[oi] = best_idx;
        }

  return make_node(std::move(out), {x}, [x, argmax](Node& self) {
    if (!x->requires_grad) return;
    Tensor& gx = x->ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i)
      if ((*argmax)[i] >= 0) gx[static_cast<std::size_t>((*argmax)[i])] += self.grad[i];
  });
}

Var global_avg_pool(const Var& x) {
  const Tensor& xv = x->value;
  require(xv.ndim() == 4, "global_avg_pool: input must be 4-d");
  const int N = xv.shape(0), C = xv.shape(1), H = xv.shape(2), W = xv.shape(3);
  const std::size_t plane = static_cast<std::size_t>(H) * W;
  require(plane > 0, "global_avg_pool: empty plane");

  Tensor out({N, C});
  for (int n = 0; n < N; ++n)
    for (int c = 0; c < C; ++c) {
      const Scalar* p = xv.data() + xv.at4(n, c, 0, 0);
      Scalar sum = 0;
      for (std::size_t i = 0; i < plane; ++i) sum += p[i];
      out[static_cast<std::size_t>(n) * C + c] = sum / static_cast<Scalar>(plane);
    }
  return make_node(std::move(out), {x}, [x, N, C, plane](Node& self) {
    if (!x->requires_grad) return;
    Tensor& gx = x->ensure_grad();
    for (int n = 0; n < N; ++n)
      for (int c = 0; c < C; ++c) {
        const Scalar g = self.grad[static_cast<std::size_t>(n) * C + c] / static_cast<Scalar>(plane);
        Scalar* p = gx.data() + gx.at4(n, c, 0, 0);
        for (std::size_t i = 0; i < plane; ++i) p[i] += g;
      }
  });
}

Var batch_norm2d(const Var& x, const Var& gamma, const Var& beta, BatchNormState& state,
                 bool training, Scalar momentum, Scalar eps) {
  const Tensor& xv = x->value;
  require(xv.ndim() == 4, "batch_norm2d: input must be 4-d");
  const int N = xv.shape(0), C = xv.shape(1), H = xv.shape(2), W = xv.shape(3);
  require(gamma->value.shape(0) == C && beta->value.shape(0) == C,
          "batch_norm2d: gamma/beta must be [C]");
  if (state.running_mean.empty()) {
    state.running_mean = Tensor({C}, 0.0);
    state.running_var = Tensor({C}, 1.0);
  }
  const std::size_t plane = static_cast<std::size_t>(H) * W;
  const Scalar m = static_cast<Scalar>(static_cast<std::size_t>(N) * plane);

  auto mean = std::make_shared<std::vector<Scalar>>(C, 0.0);
  auto inv_std = std::make_shared<std::vector<Scalar>>(C, 0.0);

  if (training) {
    require(m > 0, "batch_norm2d: empty batch");
    for (int c = 0; c < C; ++c) {
      Scalar sum = 0;
      for (int n = 0; n < N; ++n) {
        const Scalar* p = xv.data() + xv.at4(n, c, 0, 0);
        for (std::size_t i = 0; i < plane; ++i) sum += p[i];
      }
      const Scalar mu = sum / m;
      Scalar sq = 0;
      for (int n = 0; n < N; ++n) {
        const Scalar* p = xv.data() + xv.at4(n, c, 0, 0);
        for (std::size_t i = 0; i < plane; ++i) {
          const Scalar d = p[i] - mu;
          sq += d * d;
        }
      }
      const Scalar var = sq / m;  // population variance, used consistently
      (*mean)[c] = mu;
      (*inv_std)[c] = Scalar(1) / std::sqrt(var + eps);
      state.running_mean[c] = (1 - momentum) * state.running_mean[c] + momentum * mu;
      state.running_var[c] = (1 - momentum) * state.running_var[c] + momentum * var;
    }
  } else {
    for (int c = 0; c < C; ++c) {
      (*mean)[c] = state.running_mean[c];
      (*inv_std)[c] = Scalar(1) / std::sqrt(state.running_var[c] + eps);
    }
  }

  Tensor out({N, C, H, W});
  for (int n = 0; n < N; ++n)
    for (int c = 0; c < C; ++c) {
      const Scalar mu = (*mean)[c], is = (*inv_std)[c];
      const Scalar g = gamma->value[c], bta = beta->value[c];
      const Scalar* p = xv.data() + xv.at4(n, c, 0, 0);
      Scalar* q = out.data() + out.at4(n, c, 0, 0);
      for (std::size_t i = 0; i < plane; ++i) q[i] = g * ((p[i] - mu) * is) + bta;
    }

  return make_node(std::move(out), {x, gamma, beta},
                   [x, gamma, beta, mean, inv_std, training, N, C, plane, m](Node& self) {
    for (int c = 0; c < C; ++c) {
      const Scalar mu = (*mean)[c], is = (*inv_std)[c];
      const Scalar g = gamma->value[c];
      // Channel-wise reductions over the batch.
      Scalar sum_dy = 0, sum_dy_xhat = 0;
      for (int n = 0; n < N; ++n) {
        const std::size_t base = x->value.at4(n, c, 0, 0);
        for (std::size_t i = 0; i < plane; ++i) {
          const Scalar dy = self.grad[base + i];
          const Scalar xhat = (x->value[base + i] - mu) * is;
          sum_dy += dy;
          sum_dy_xhat += dy * xhat;
        }
      }
      if (gamma->requires_grad) gamma->ensure_grad()[c] += sum_dy_xhat;
      if (beta->requires_grad) beta->ensure_grad()[c] += sum_dy;
      if (!x->requires_grad) continue;
      Tensor& gx = x->ensure_grad();
      for (int n = 0; n < N; ++n) {
        const std::size_t base = x->value.at4(n, c, 0, 0);
        for (std::size_t i = 0; i < plane; ++i) {
          const Scalar dy = self.grad[base + i];
          if (training) {
            const Scalar xhat = (x->value[base + i] - mu) * is;
            gx[base + i] += g * is / m * (m * dy - sum_dy - xhat * sum_dy_xhat);
          } else {
            gx[base + i] += g * is * dy;
          }
        }
      }
    }
  });
}

Var mse_loss(const Var& a, const Var& b) {
  require(a->value.same_shape(b->value), "mse_loss: shapes differ");
  const std::size_t n = a->value.size();
  require(n > 0, "mse_loss: empty input");
  Scalar sum = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const Scalar d = a->value[i] - b->value[i];
    sum += d * d;
  }
  Tensor out = Tensor::scalar(sum / static_cast<Scalar>(n));
  if (!out.all_finite()) throw NonFiniteLoss("mse_loss produced a non-finite value");
  return make_node(std::move(out), {a, b}, [a, b, n](Node& self) {
    const Scalar g = self.grad[0] * 2 / static_cast<Scalar>(n);
    if (a->requires_grad) {
      Tensor& ga = a->ensure_grad();
      for (std::size_t i = 0; i < n; ++i) ga[i] += g * (a->value[i] - b->value[i]);
    }
    if (b->requires_grad) {
      Tensor& gb = b->ensure_grad();
      for (std::size_t i = 0; i < n; ++i) gb[i] += g * (b->value[i] - a->value[i]);
    }
  });
}

Var softmax_cross_entropy(const Var& logits, const std::vector<int>& targets,
                          const std::vector<Scalar>& weights) {
  const Tensor& lv = logits->value;
  require(lv.ndim() == 2, "softmax_cross_entropy: logits must be [N,K]");
  const int N = lv.shape(0), K = lv.shape(1);
  require(targets.size() == static_cast<std::size_t>(N),
          "softmax_cross_entropy: one target per row");
  require(weights.empty() || weights.size() == static_cast<std::size_t>(N),
          "softmax_cross_entropy: one weight per row");
  for (int t : targets) require(t >= 0 && t < K, "softmax_cross_entropy: target out of range");

  auto wsum = Scalar(0);
  for (int i = 0; i < N; ++i) wsum += weights.empty() ? Scalar(1) : weights[i];
  if (wsum == 0) {
    // Fully masked batch: constant zero, nothing to differentiate.
    return make_leaf(Tensor::scalar(0), false);
  }

  Scalar total = 0;
  for (int i = 0; i < N; ++i) {
    const Scalar wi = weights.empty() ? Scalar(1) : weights[i];
    if (wi == 0) continue;
    const Scalar* row = lv.data() + static_cast<std::size_t>(i) * K;
    Scalar mx = row[0];
    for (int k = 1; k < K; ++k) mx = std::max(mx, row[k]);
    Scalar lse = 0;
    for (int k = 0; k < K; ++k) lse += std::exp(row[k] - mx);
    lse = mx + std::log(lse);
    total += wi * (lse - row[targets[i]]);
  }
  Tensor out = Tensor::scalar(total / wsum);
  if (!out.all_finite()) throw NonFiniteLoss("cross entropy produced a non-finite value");

  return make_node(std::move(out), {logits}, [logits, targets, weights, wsum, N, K](Node& self) {
    if (!logits->requires_grad) return;
    Tensor& gl = logits->ensure_grad();
    const Scalar g = self.grad[0] / wsum;
    for (int i = 0; i < N; ++i) {
      const Scalar wi = weights.empty() ? Scalar(1) : weights[i];
      if (wi == 0) continue;
      const Scalar* row = logits->value.data() + static_cast<std::size_t>(i) * K;
      Scalar mx = row[0];
      for (int k = 1; k < K; ++k) mx = std::max(mx, row[k]);
      Scalar denom = 0;
      for (int k = 0; k < K; ++k) denom += std::exp(row[k] - mx);
      for (int k = 0; k < K; ++k) {
        const Scalar p = std::exp(row[k] - mx) / denom;
        gl[static_cast<std::size_t>(i) * K + k] +=
            g * wi * (p - (k == targets[i] ? Scalar(1) : Scalar(0)));
      }
    }
  });
}

}  // namespace sdnet::nn
