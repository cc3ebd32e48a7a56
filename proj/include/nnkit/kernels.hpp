#pragma once

// Data-parallel compute kernels. Every kernel exists twice with identical
// arithmetic order: nnkit::kernels::* distributes independent output elements
// across OpenMP threads, nnkit::ref::* runs the same loops serially. The two
// agree bit-for-bit, which the test suite asserts and the benchmark times.

#include <cstddef>
#include <cstdint>

namespace nnkit {
namespace detail {

// Output index range [lo, hi) for which idx*stride + tap - pad stays inside
// [0, extent). Bounds are hoisted out of the inner loops so they stay
// branch-free and vectorizable.
struct TapRange {
  std::size_t lo, hi;
};

inline TapRange tap_range(std::size_t out_extent, std::size_t in_extent, std::size_t tap,
                          std::size_t stride, std::size_t pad) {
  std::ptrdiff_t shift = static_cast<std::ptrdiff_t>(tap) - static_cast<std::ptrdiff_t>(pad);
  std::size_t lo = 0;
  if (shift < 0)
    lo = (static_cast<std::size_t>(-shift) + stride - 1) / stride;
  std::ptrdiff_t last = static_cast<std::ptrdiff_t>(in_extent) - 1 - shift;
  if (last < 0)
    return {0, 0};
  std::size_t hi = static_cast<std::size_t>(last) / stride + 1;
  hi = hi < out_extent ? hi : out_extent;
  lo = lo < hi ? lo : hi;
  return {lo, hi};
}

// One (in-channel, kernel-row, kernel-col) contribution to a whole output map.
// Shared by the parallel and serial convolutions so summation order matches.
template <typename T>
inline void conv_accum_tap(const T *in, std::size_t H, std::size_t W, T w, std::size_t l,
                           std::size_t h, std::size_t stride, std::size_t pad, T *out,
                           std::size_t Ho, std::size_t Wo) {
  TapRange ry = tap_range(Ho, H, l, stride, pad);
  TapRange rx = tap_range(Wo, W, h, stride, pad);
  std::ptrdiff_t yoff = static_cast<std::ptrdiff_t>(l) - static_cast<std::ptrdiff_t>(pad);
  std::ptrdiff_t xoff = static_cast<std::ptrdiff_t>(h) - static_cast<std::ptrdiff_t>(pad);
  for (std::size_t y = ry.lo; y < ry.hi; ++y) {
    const T *in_row = in + (y * stride + yoff) * W + xoff;
    T *out_row = out + y * Wo;
    if (stride == 1) {
      for (std::size_t x = rx.lo; x < rx.hi; ++x)
        out_row[x] += w * in_row[x];
    } else {
      for (std::size_t x = rx.lo; x < rx.hi; ++x)
        out_row[x] += w * in_row[x * stride];
    }
  }
}

// Gradient of one kernel weight: correlate upstream with the input map.
template <typename T>
inline T conv_weight_grad_at(const T *in, std::size_t H, std::size_t W, const T *up,
                             std::size_t Ho, std::size_t Wo, std::size_t l, std::size_t h,
                             std::size_t stride, std::size_t pad) {
  TapRange ry = tap_range(Ho, H, l, stride, pad);
  TapRange rx = tap_range(Wo, W, h, stride, pad);
  std::ptrdiff_t yoff = static_cast<std::ptrdiff_t>(l) - static_cast<std::ptrdiff_t>(pad);
  std::ptrdiff_t xoff = static_cast<std::ptrdiff_t>(h) - static_cast<std::ptrdiff_t>(pad);
  T acc = T(0);
  for (std::size_t y = ry.lo; y < ry.hi; ++y) {
    const T *in_row = in + (y * stride + yoff) * W + xoff;
    const T *up_row = up + y * Wo;
    if (stride == 1) {
      for (std::size_t x = rx.lo; x < rx.hi; ++x)
        acc += up_row[x] * in_row[x];
    } else {
      for (std::size_t x = rx.lo; x < rx.hi; ++x)
        acc += up_row[x] * in_row[x * stride];
    }
  }
  return acc;
}

// Scatter of one (kernel-row, kernel-col) tap of one (j,i) pair into the
// input gradient map. Injective per tap; the (j,l,h) loop order around calls
// fixes the accumulation order per input element.
template <typename T>
inline void conv_input_accum_tap(T *din, std::size_t H, std::size_t W, T w, std::size_t l,
                                 std::size_t h, std::size_t stride, std::size_t pad,
                                 const T *up, std::size_t Ho, std::size_t Wo) {
  TapRange ry = tap_range(Ho, H, l, stride, pad);
  TapRange rx = tap_range(Wo, W, h, stride, pad);
  std::ptrdiff_t yoff = static_cast<std::ptrdiff_t>(l) - static_cast<std::ptrdiff_t>(pad);
  std::ptrdiff_t xoff = static_cast<std::ptrdiff_t>(h) - static_cast<std::ptrdiff_t>(pad);
  for (std::size_t y = ry.lo; y < ry.hi; ++y) {
    T *din_row = din + (y * stride + yoff) * W + xoff;
    const T *up_row = up + y * Wo;
    if (stride == 1) {
      for (std::size_t x = rx.lo; x < rx.hi; ++x)
        din_row[x] += w * up_row[x];
    } else {
      for (std::size_t x = rx.lo; x < rx.hi; ++x)
        din_row[x * stride] += w * up_row[x];
    }
  }
}

template <typename T>
inline void conv_forward_one_filter(const T *in, std::size_t n, std::size_t H, std::size_t W,
                                    const T *kern, std::size_t s1, std::size_t s2, T bias,
                                    std::size_t stride, std::size_t pad, T *out, std::size_t Ho,
                                    std::size_t Wo, std::size_t j) {
  T *outj = out + j * Ho * Wo;
  for (std::size_t e = 0; e < Ho * Wo; ++e)
    outj[e] = bias;
  for (std::size_t i = 0; i < n; ++i) {
    const T *ini = in + i * H * W;
    const T *kji = kern + (j * n + i) * s1 * s2;
    for (std::size_t l = 0; l < s1; ++l)
      for (std::size_t h = 0; h < s2; ++h)
        conv_accum_tap(ini, H, W, kji[l * s2 + h], l, h, stride, pad, outj, Ho, Wo);
  }
}

template <typename T>
inline void conv_input_grad_one_channel(const T *kern, std::size_t m, std::size_t n,
                                        std::size_t s1, std::size_t s2, const T *up,
                                        std::size_t Ho, std::size_t Wo, std::size_t stride,
                                        std::size_t pad, T *din, std::size_t H, std::size_t W,
                                        std::size_t i) {
  T *d = din + i * H * W;
  for (std::size_t e = 0; e < H * W; ++e)
    d[e] = T(0);
  for (std::size_t j = 0; j < m; ++j) {
    const T *kji = kern + (j * n + i) * s1 * s2;
    const T *upj = up + j * Ho * Wo;
    for (std::size_t l = 0; l < s1; ++l)
      for (std::size_t h = 0; h < s2; ++h)
        conv_input_accum_tap(d, H, W, kji[l * s2 + h], l, h, stride, pad, upj, Ho, Wo);
  }
}

template <typename T>
inline T dense_out_at(const T *x, const T *w, T b, std::size_t in_dim, std::size_t o) {
  T acc = b;
  const T *wo = w + o * in_dim;
  for (std::size_t i = 0; i < in_dim; ++i)
    acc += wo[i] * x[i];
  return acc;
}

template <typename T>
inline T dense_input_grad_at(const T *w, const T *g, std::size_t in_dim, std::size_t out_dim,
                             std::size_t i) {
  T acc = T(0);
  for (std::size_t o = 0; o < out_dim; ++o)
    acc += w[o * in_dim + i] * g[o];
  return acc;
}

template <typename T>
inline void maxpool2x2_at(const T *in, std::size_t H, std::size_t W, std::size_t c, std::size_t y,
                          std::size_t x, T *out_val, std::uint8_t *out_arg) {
  const T *base = in + c * H * W + (2 * y) * W + 2 * x;
  T best = base[0];
  std::uint8_t arg = 0;
  const T cand[3] = {base[1], base[W], base[W + 1]};
  for (std::uint8_t k = 0; k < 3; ++k) {
    if (cand[k] > best) {
      best = cand[k];
      arg = static_cast<std::uint8_t>(k + 1);
    }
  }
  *out_val = best;
  *out_arg = arg;
}

} // namespace detail

namespace kernels {

/// out[m,Ho,Wo] — each filter owned by one thread.
template <typename T>
void conv2d_forward(const T *in, std::size_t n, std::size_t H, std::size_t W, const T *kern,
                    std::size_t m, std::size_t s1, std::size_t s2, const T *bias,
                    std::size_t stride, std::size_t pad, T *out, std::size_t Ho, std::size_t Wo) {
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t j = 0; j < static_cast<std::ptrdiff_t>(m); ++j)
    detail::conv_forward_one_filter(in, n, H, W, kern, s1, s2, bias[j], stride, pad, out, Ho, Wo,
                                    static_cast<std::size_t>(j));
}

template <typename T>
void conv2d_backward_weights(const T *in, std::size_t n, std::size_t H, std::size_t W,
                             const T *up, std::size_t m, std::size_t Ho, std::size_t Wo,
                             std::size_t s1, std::size_t s2, std::size_t stride, std::size_t pad,
                             T *dkern, T *dbias) {
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ji = 0; ji < static_cast<std::ptrdiff_t>(m * n); ++ji) {
    std::size_t j = static_cast<std::size_t>(ji) / n;
    std::size_t i = static_cast<std::size_t>(ji) % n;
    const T *ini = in + i * H * W;
    const T *upj = up + j * Ho * Wo;
    T *dk = dkern + (j * n + i) * s1 * s2;
    for (std::size_t l = 0; l < s1; ++l)
      for (std::size_t h = 0; h < s2; ++h)
        dk[l * s2 + h] = detail::conv_weight_grad_at(ini, H, W, upj, Ho, Wo, l, h, stride, pad);
  }
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t j = 0; j < static_cast<std::ptrdiff_t>(m); ++j) {
    const T *upj = up + static_cast<std::size_t>(j) * Ho * Wo;
    T acc = T(0);
    for (std::size_t e = 0; e < Ho * Wo; ++e)
      acc += upj[e];
    dbias[j] = acc;
  }
}

template <typename T>
void conv2d_backward_input(const T *kern, std::size_t m, std::size_t n, std::size_t s1,
                           std::size_t s2, const T *up, std::size_t Ho, std::size_t Wo,
                           std::size_t stride, std::size_t pad, T *din, std::size_t H,
                           std::size_t W) {
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
    detail::conv_input_grad_one_channel(kern, m, n, s1, s2, up, Ho, Wo, stride, pad, din, H, W,
                                        static_cast<std::size_t>(i));
}

template <typename T>
void dense_forward(const T *x, const T *w, const T *b, std::size_t in_dim, std::size_t out_dim,
                   T *y) {
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t o = 0; o < static_cast<std::ptrdiff_t>(out_dim); ++o)
    y[o] = detail::dense_out_at(x, w, b[o], in_dim, static_cast<std::size_t>(o));
}

template <typename T>
void dense_backward(const T *x, const T *w, const T *g, std::size_t in_dim, std::size_t out_dim,
                    T *dw, T *db, T *dx) {
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t o = 0; o < static_cast<std::ptrdiff_t>(out_dim); ++o) {
    T go = g[o];
    T *dwo = dw + static_cast<std::size_t>(o) * in_dim;
    for (std::size_t i = 0; i < in_dim; ++i)
      dwo[i] = go * x[i];
    db[o] = go;
  }
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(in_dim); ++i)
    dx[i] = detail::dense_input_grad_at(w, g, in_dim, out_dim, static_cast<std::size_t>(i));
}

template <typename T> void relu_forward(const T *x, std::size_t len, T *y) {
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t e = 0; e < static_cast<std::ptrdiff_t>(len); ++e)
    y[e] = x[e] > T(0) ? x[e] : T(0);
}

/// Ties at exactly zero pass zero gradient.
template <typename T> void relu_backward(const T *x, const T *g, std::size_t len, T *dx) {
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t e = 0; e < static_cast<std::ptrdiff_t>(len); ++e)
    dx[e] = x[e] > T(0) ? g[e] : T(0);
}

/// H and W must be even. argmax codes: 0 tl, 1 tr, 2 bl, 3 br (first wins ties).
template <typename T>
void maxpool2x2_forward(const T *in, std::size_t C, std::size_t H, std::size_t W, T *out,
                        std::uint8_t *argmax) {
  std::size_t Ho = H / 2, Wo = W / 2;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(C); ++c)
    for (std::size_t y = 0; y < Ho; ++y)
      for (std::size_t x = 0; x < Wo; ++x) {
        std::size_t e = (static_cast<std::size_t>(c) * Ho + y) * Wo + x;
        detail::maxpool2x2_at(in, H, W, static_cast<std::size_t>(c), y, x, &out[e], &argmax[e]);
      }
}

template <typename T>
void maxpool2x2_backward(const T *g, const std::uint8_t *argmax, std::size_t C, std::size_t H,
                         std::size_t W, T *din) {
  std::size_t Ho = H / 2, Wo = W / 2;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t e = 0; e < static_cast<std::ptrdiff_t>(C * H * W); ++e)
    din[e] = T(0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(C); ++c)
    for (std::size_t y = 0; y < Ho; ++y)
      for (std::size_t x = 0; x < Wo; ++x) {
        std::size_t e = (static_cast<std::size_t>(c) * Ho + y) * Wo + x;
        std::uint8_t a = argmax[e];
        std::size_t row = 2 * y + (a >> 1), col = 2 * x + (a & 1);
        din[(static_cast<std::size_t>(c) * H + row) * W + col] = g[e];
      }
}

} // namespace kernels

// Serial reference path: identical arithmetic, no thread distribution.
namespace ref {

template <typename T>
void conv2d_forward(const T *in, std::size_t n, std::size_t H, std::size_t W, const T *kern,
                    std::size_t m, std::size_t s1, std::size_t s2, const T *bias,
                    std::size_t stride, std::size_t pad, T *out, std::size_t Ho, std::size_t Wo) {
  for (std::size_t j = 0; j < m; ++j)
    detail::conv_forward_one_filter(in, n, H, W, kern, s1, s2, bias[j], stride, pad, out, Ho, Wo,
                                    j);
}

template <typename T>
void conv2d_backward_weights(const T *in, std::size_t n, std::size_t H, std::size_t W,
                             const T *up, std::size_t m, std::size_t Ho, std::size_t Wo,
                             std::size_t s1, std::size_t s2, std::size_t stride, std::size_t pad,
                             T *dkern, T *dbias) {
  for (std::size_t ji = 0; ji < m * n; ++ji) {
    std::size_t j = ji / n, i = ji % n;
    const T *ini = in + i * H * W;
    const T *upj = up + j * Ho * Wo;
    T *dk = dkern + (j * n + i) * s1 * s2;
    for (std::size_t l = 0; l < s1; ++l)
      for (std::size_t h = 0; h < s2; ++h)
        dk[l * s2 + h] = detail::conv_weight_grad_at(ini, H, W, upj, Ho, Wo, l, h, stride, pad);
  }
  for (std::size_t j = 0; j < m; ++j) {
    const T *upj = up + j * Ho * Wo;
    T acc = T(0);
    for (std::size_t e = 0; e < Ho * Wo; ++e)
      acc += upj[e];
    dbias[j] = acc;
  }
}

template <typename T>
void conv2d_backward_input(const T *kern, std::size_t m, std::size_t n, std::size_t s1,
                           std::size_t s2, const T *up, std::size_t Ho, std::size_t Wo,
                           std::size_t stride, std::size_t pad, T *din, std::size_t H,
                           std::size_t W) {
  for (std::size_t i = 0; i < n; ++i)
    detail::conv_input_grad_one_channel(kern, m, n, s1, s2, up, Ho, Wo, stride, pad, din, H, W,
                                        i);
}

template <typename T>
void dense_forward(const T *x, const T *w, const T *b, std::size_t in_dim, std::size_t out_dim,
                   T *y) {
  for (std::size_t o = 0; o < out_dim; ++o)
    y[o] = detail::dense_out_at(x, w, b[o], in_dim, o);
}

template <typename T>
void dense_backward(const T *x, const T *w, const T *g, std::size_t in_dim, std::size_t out_dim,
                    T *dw, T *db, T *dx) {
  for (std::size_t o = 0; o < out_dim; ++o) {
    T go = g[o];
    T *dwo = dw + o * in_dim;
    for (std::size_t i = 0; i < in_dim; ++i)
      dwo[i] = go * x[i];
    db[o] = go;
  }
  for (std::size_t i = 0; i < in_dim; ++i)
    dx[i] = detail::dense_input_grad_at(w, g, in_dim, out_dim, i);
}

template <typename T> void relu_forward(const T *x, std::size_t len, T *y) {
  for (std::size_t e = 0; e < len; ++e)
    y[e] = x[e] > T(0) ? x[e] : T(0);
}

template <typename T> void relu_backward(const T *x, const T *g, std::size_t len, T *dx) {
  for (std::size_t e = 0; e < len; ++e)
    dx[e] = x[e] > T(0) ? g[e] : T(0);
}

template <typename T>
void maxpool2x2_forward(const T *in, std::size_t C, std::size_t H, std::size_t W, T *out,
                        std::uint8_t *argmax) {
  std::size_t Ho = H / 2, Wo = W / 2;
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t y = 0; y < Ho; ++y)
      for (std::size_t x = 0; x < Wo; ++x) {
        std::size_t e = (c * Ho + y) * Wo + x;
        detail::maxpool2x2_at(in, H, W, c, y, x, &out[e], &argmax[e]);
      }
}

template <typename T>
void maxpool2x2_backward(const T *g, const std::uint8_t *argmax, std::size_t C, std::size_t H,
                         std::size_t W, T *din) {
  std::size_t Ho = H / 2, Wo = W / 2;
  for (std::size_t e = 0; e < C * H * W; ++e)
    din[e] = T(0);
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t y = 0; y < Ho; ++y)
      for (std::size_t x = 0; x < Wo; ++x) {
        std::size_t e = (c * Ho + y) * Wo + x;
        std::uint8_t a = argmax[e];
        din[(c * H + 2 * y + (a >> 1)) * W + 2 * x + (a & 1)] = g[e];
      }
}

} // namespace ref
} // namespace nnkit
