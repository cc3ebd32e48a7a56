#pragma once

// Layer-level forward/backward on tensors. Shapes are validated here; the
// arithmetic lives in kernels.hpp. All functions are pure: inputs are never
// mutated and results are freshly allocated, so concurrent callers are safe.

#include <cmath>
#include <cstdint>
#include <map>
#include <string>

#include "nnkit/kernels.hpp"
#include "nnkit/tensor.hpp"

namespace nnkit {

/// Gradients of one layer: per-parameter tensors plus the input gradient.
template <typename T> struct LayerGradT {
  std::map<std::string, TensorT<T>> params;
  TensorT<T> input;
};

using LayerGrad = LayerGradT<float>;

inline std::size_t conv_out_extent(std::size_t in, std::size_t k, std::size_t stride,
                                   std::size_t pad) {
  return (in + 2 * pad - k) / stride + 1;
}

template <typename T>
void check_conv_shapes(const TensorT<T> &input, const TensorT<T> &kernels,
                       const TensorT<T> &bias, std::size_t stride, std::size_t pad) {
  if (input.rank() != 3)
    throw ConfigError("conv2d input must be [channels,H,W], got " + shape_str(input.shape()));
  if (kernels.rank() != 4)
    throw ConfigError("conv2d kernels must be [m,n,s1,s2], got " + shape_str(kernels.shape()));
  if (kernels.extent(1) != input.extent(0))
    throw ConfigError("conv2d in-channel mismatch: input has " +
                      std::to_string(input.extent(0)) + ", kernels expect " +
                      std::to_string(kernels.extent(1)));
  if (bias.rank() != 1 || bias.extent(0) != kernels.extent(0))
    throw ConfigError("conv2d bias must be [m]");
  if (stride == 0)
    throw ConfigError("conv2d stride must be positive");
  if (kernels.extent(2) > input.extent(1) + 2 * pad || kernels.extent(3) > input.extent(2) + 2 * pad)
    throw ConfigError("conv2d kernel extent exceeds padded input");
}

/// Cross-correlation (deep-learning convention), out-of-range input reads zero.
template <typename T>
TensorT<T> conv2d_forward(const TensorT<T> &input, const TensorT<T> &kernels,
                          const TensorT<T> &bias, std::size_t stride, std::size_t pad) {
  check_conv_shapes(input, kernels, bias, stride, pad);
  std::size_t m = kernels.extent(0), s1 = kernels.extent(2), s2 = kernels.extent(3);
  std::size_t Ho = conv_out_extent(input.extent(1), s1, stride, pad);
  std::size_t Wo = conv_out_extent(input.extent(2), s2, stride, pad);
  TensorT<T> out({m, Ho, Wo});
  kernels::conv2d_forward(input.data(), input.extent(0), input.extent(1), input.extent(2),
                          kernels.data(), m, s1, s2, bias.data(), stride, pad, out.data(), Ho, Wo);
  return out;
}

template <typename T>
LayerGradT<T> conv2d_backward(const TensorT<T> &input, const TensorT<T> &kernels,
                              const TensorT<T> &bias, const TensorT<T> &upstream,
                              std::size_t stride, std::size_t pad) {
  check_conv_shapes(input, kernels, bias, stride, pad);
  std::size_t m = kernels.extent(0), n = kernels.extent(1);
  std::size_t s1 = kernels.extent(2), s2 = kernels.extent(3);
  std::size_t Ho = conv_out_extent(input.extent(1), s1, stride, pad);
  std::size_t Wo = conv_out_extent(input.extent(2), s2, stride, pad);
  if (upstream.shape() != std::vector<std::size_t>{m, Ho, Wo})
    throw ConfigError("conv2d upstream gradient shape " + shape_str(upstream.shape()) +
                      " does not match forward output [" + std::to_string(m) + "," +
                      std::to_string(Ho) + "," + std::to_string(Wo) + "]");
  LayerGradT<T> grad;
  TensorT<T> dk(kernels.shape());
  TensorT<T> db(bias.shape());
  kernels::conv2d_backward_weights(input.data(), n, input.extent(1), input.extent(2),
                                   upstream.data(), m, Ho, Wo, s1, s2, stride, pad, dk.data(),
                                   db.data());
  TensorT<T> din(input.shape());
  kernels::conv2d_backward_input(kernels.data(), m, n, s1, s2, upstream.data(), Ho, Wo, stride,
                                 pad, din.data(), input.extent(1), input.extent(2));
  grad.params.emplace("weight", std::move(dk));
  grad.params.emplace("bias", std::move(db));
  grad.input = std::move(din);
  return grad;
}

template <typename T>
TensorT<T> dense_forward(const TensorT<T> &x, const TensorT<T> &w, const TensorT<T> &b) {
  if (w.rank() != 2)
    throw ConfigError("dense weight must be [out,in]");
  std::size_t in_dim = w.extent(1), out_dim = w.extent(0);
  if (x.size() != in_dim)
    throw ConfigError("dense input length " + std::to_string(x.size()) + " != expected " +
                      std::to_string(in_dim));
  if (b.size() != out_dim)
    throw ConfigError("dense bias length mismatch");
  TensorT<T> y({out_dim});
  kernels::dense_forward(x.data(), w.data(), b.data(), in_dim, out_dim, y.data());
  return y;
}

template <typename T>
LayerGradT<T> dense_backward(const TensorT<T> &x, const TensorT<T> &w, const TensorT<T> &g) {
  std::size_t in_dim = w.extent(1), out_dim = w.extent(0);
  if (g.size() != out_dim)
    throw ConfigError("dense upstream gradient length mismatch");
  if (x.size() != in_dim)
    throw ConfigError("dense input length mismatch");
  LayerGradT<T> grad;
  TensorT<T> dw(w.shape());
  TensorT<T> db({out_dim});
  TensorT<T> dx(x.shape());
  kernels::dense_backward(x.data(), w.data(), g.data(), in_dim, out_dim, dw.data(), db.data(),
                          dx.data());
  grad.params.emplace("weight", std::move(dw));
  grad.params.emplace("bias", std::move(db));
  grad.input = std::move(dx);
  return grad;
}

template <typename T> TensorT<T> relu_forward(const TensorT<T> &x) {
  TensorT<T> y(x.shape());
  kernels::relu_forward(x.data(), x.size(), y.data());
  return y;
}

template <typename T> TensorT<T> relu_backward(const TensorT<T> &x, const TensorT<T> &g) {
  if (!x.same_shape(g))
    throw ConfigError("relu upstream gradient shape mismatch");
  TensorT<T> dx(x.shape());
  kernels::relu_backward(x.data(), g.data(), x.size(), dx.data());
  return dx;
}

template <typename T> struct MaxPoolResult {
  TensorT<T> out;
  std::vector<std::uint8_t> argmax; // routing for the backward pass
};

template <typename T> MaxPoolResult<T> maxpool2x2_forward(const TensorT<T> &x) {
  if (x.rank() != 3 || x.extent(1) % 2 != 0 || x.extent(2) % 2 != 0)
    throw ConfigError("maxpool2x2 needs [C,H,W] with even H and W, got " + shape_str(x.shape()));
  std::size_t C = x.extent(0), H = x.extent(1), W = x.extent(2);
  MaxPoolResult<T> r{TensorT<T>({C, H / 2, W / 2}), std::vector<std::uint8_t>(C * H / 2 * W / 2)};
  kernels::maxpool2x2_forward(x.data(), C, H, W, r.out.data(), r.argmax.data());
  return r;
}

template <typename T>
TensorT<T> maxpool2x2_backward(const TensorT<T> &g, const std::vector<std::uint8_t> &argmax,
                               const std::vector<std::size_t> &input_shape) {
  if (g.size() != argmax.size())
    throw ConfigError("maxpool2x2 upstream gradient does not match pooling plan");
  TensorT<T> din(input_shape);
  kernels::maxpool2x2_backward(g.data(), argmax.data(), input_shape[0], input_shape[1],
                               input_shape[2], din.data());
  return din;
}

template <typename T> TensorT<T> flatten(const TensorT<T> &x) {
  return TensorT<T>({x.size()}, x.vec());
}

template <typename T>
TensorT<T> unflatten(const TensorT<T> &x, const std::vector<std::size_t> &shape) {
  if (TensorT<T>::count(shape) != x.size())
    throw ConfigError("unflatten volume mismatch");
  return TensorT<T>(shape, x.vec());
}

/// Per-channel spatial mean: [C,H,W] -> [C].
template <typename T> TensorT<T> global_avg_pool(const TensorT<T> &x) {
  if (x.rank() != 3)
    throw ConfigError("global_avg_pool input must be [C,H,W]");
  std::size_t C = x.extent(0), area = x.extent(1) * x.extent(2);
  TensorT<T> y({C});
  for (std::size_t c = 0; c < C; ++c) {
    T acc = T(0);
    const T *base = x.data() + c * area;
    for (std::size_t e = 0; e < area; ++e)
      acc += base[e];
    y[c] = acc / static_cast<T>(area);
  }
  return y;
}

template <typename T>
TensorT<T> global_avg_pool_backward(const TensorT<T> &g, const std::vector<std::size_t> &shape) {
  std::size_t area = shape[1] * shape[2];
  TensorT<T> din(shape);
  for (std::size_t c = 0; c < shape[0]; ++c) {
    T v = g[c] / static_cast<T>(area);
    T *base = din.data() + c * area;
    for (std::size_t e = 0; e < area; ++e)
      base[e] = v;
  }
  return din;
}

/// Max-subtracted softmax; identical to the plain form in exact arithmetic.
template <typename T> TensorT<T> softmax(const TensorT<T> &logits) {
  TensorT<T> q(logits.shape());
  T mx = logits[0];
  for (std::size_t i = 1; i < logits.size(); ++i)
    mx = std::max(mx, logits[i]);
  T sum = T(0);
  for (std::size_t i = 0; i < logits.size(); ++i) {
    q[i] = std::exp(logits[i] - mx);
    sum += q[i];
  }
  for (std::size_t i = 0; i < logits.size(); ++i)
    q[i] /= sum;
  return q;
}

/// Jacobian-vector product: dL/dz_i = q_i * (g_i - sum_j g_j q_j).
template <typename T> TensorT<T> softmax_backward(const TensorT<T> &q, const TensorT<T> &g) {
  if (!q.same_shape(g))
    throw ConfigError("softmax upstream gradient shape mismatch");
  T dot = T(0);
  for (std::size_t i = 0; i < q.size(); ++i)
    dot += g[i] * q[i];
  TensorT<T> dz(q.shape());
  for (std::size_t i = 0; i < q.size(); ++i)
    dz[i] = q[i] * (g[i] - dot);
  return dz;
}

} // namespace nnkit
