#include "doctest.h"

#include <cstring>

#include "nnkit/kernels.hpp"
#include "nnkit/rng.hpp"

// The OpenMP kernels only distribute independent output elements across
// threads; the arithmetic per element is shared with the serial reference.
// Results must therefore agree bit for bit at any thread count.

using nnkit::Rng;

namespace {

std::vector<float> random_vec(std::size_t n, Rng &rng) {
  std::vector<float> v(n);
  for (auto &x : v)
    x = static_cast<float>(rng.uniform(-1.0, 1.0));
  return v;
}

bool bitwise_equal(const std::vector<float> &a, const std::vector<float> &b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0;
}

} // namespace

TEST_CASE("conv2d forward/backward: OpenMP path is bit-identical to the serial reference") {
  Rng rng(101);
  for (int inst = 0; inst < 12; ++inst) {
    std::size_t n = 1 + rng.below(3), m = 1 + rng.below(4);
    std::size_t H = 4 + rng.below(6), W = 4 + rng.below(6);
    std::size_t s1 = 1 + rng.below(3), s2 = 1 + rng.below(3);
    std::size_t stride = 1 + rng.below(2), pad = rng.below(2);
    if (s1 > H + 2 * pad || s2 > W + 2 * pad)
      continue;
    std::size_t Ho = (H + 2 * pad - s1) / stride + 1;
    std::size_t Wo = (W + 2 * pad - s2) / stride + 1;

    auto in = random_vec(n * H * W, rng);
    auto k = random_vec(m * n * s1 * s2, rng);
    auto b = random_vec(m, rng);
    auto up = random_vec(m * Ho * Wo, rng);

    std::vector<float> out_omp(m * Ho * Wo), out_ref(m * Ho * Wo);
    nnkit::kernels::conv2d_forward(in.data(), n, H, W, k.data(), m, s1, s2, b.data(), stride,
                                   pad, out_omp.data(), Ho, Wo);
    nnkit::ref::conv2d_forward(in.data(), n, H, W, k.data(), m, s1, s2, b.data(), stride, pad,
                               out_ref.data(), Ho, Wo);
    CHECK(bitwise_equal(out_omp, out_ref));

    std::vector<float> dk_omp(k.size()), db_omp(m), dk_ref(k.size()), db_ref(m);
    nnkit::kernels::conv2d_backward_weights(in.data(), n, H, W, up.data(), m, Ho, Wo, s1, s2,
                                            stride, pad, dk_omp.data(), db_omp.data());
    nnkit::ref::conv2d_backward_weights(in.data(), n, H, W, up.data(), m, Ho, Wo, s1, s2, stride,
                                        pad, dk_ref.data(), db_ref.data());
    CHECK(bitwise_equal(dk_omp, dk_ref));
    CHECK(bitwise_equal(db_omp, db_ref));

    std::vector<float> din_omp(n * H * W), din_ref(n * H * W);
    nnkit::kernels::conv2d_backward_input(k.data(), m, n, s1, s2, up.data(), Ho, Wo, stride, pad,
                                          din_omp.data(), H, W);
    nnkit::ref::conv2d_backward_input(k.data(), m, n, s1, s2, up.data(), Ho, Wo, stride, pad,
                                      din_ref.data(), H, W);
    CHECK(bitwise_equal(din_omp, din_ref));
  }
}

TEST_CASE("dense forward/backward: OpenMP path is bit-identical to the serial reference") {
  Rng rng(103);
  for (int inst = 0; inst < 12; ++inst) {
    std::size_t in_dim = 1 + rng.below(40), out_dim = 1 + rng.below(20);
    auto x = random_vec(in_dim, rng);
    auto w = random_vec(out_dim * in_dim, rng);
    auto b = random_vec(out_dim, rng);
    auto g = random_vec(out_dim, rng);

    std::vector<float> y_omp(out_dim), y_ref(out_dim);
    nnkit::kernels::dense_forward(x.data(), w.data(), b.data(), in_dim, out_dim, y_omp.data());
    nnkit::ref::dense_forward(x.data(), w.data(), b.data(), in_dim, out_dim, y_ref.data());
    CHECK(bitwise_equal(y_omp, y_ref));

    std::vector<float> dw_omp(w.size()), db_omp(out_dim), dx_omp(in_dim);
    std::vector<float> dw_ref(w.size()), db_ref(out_dim), dx_ref(in_dim);
    nnkit::kernels::dense_backward(x.data(), w.data(), g.data(), in_dim, out_dim, dw_omp.data(),
                                   db_omp.data(), dx_omp.data());
    nnkit::ref::dense_backward(x.data(), w.data(), g.data(), in_dim, out_dim, dw_ref.data(),
                               db_ref.data(), dx_ref.data());
    CHECK(bitwise_equal(dw_omp, dw_ref));
    CHECK(bitwise_equal(db_omp, db_ref));
    CHECK(bitwise_equal(dx_omp, dx_ref));
  }
}

TEST_CASE("pool and relu kernels: OpenMP path is bit-identical to the serial reference") {
  Rng rng(107);
  for (int inst = 0; inst < 12; ++inst) {
    std::size_t C = 1 + rng.below(4), H = 2 * (1 + rng.below(4)), W = 2 * (1 + rng.below(4));
    auto in = random_vec(C * H * W, rng);
    auto g = random_vec(C * (H / 2) * (W / 2), rng);

    std::vector<float> out_omp(C * H / 2 * W / 2), out_ref(out_omp.size());
    std::vector<std::uint8_t> arg_omp(out_omp.size()), arg_ref(out_omp.size());
    nnkit::kernels::maxpool2x2_forward(in.data(), C, H, W, out_omp.data(), arg_omp.data());
    nnkit::ref::maxpool2x2_forward(in.data(), C, H, W, out_ref.data(), arg_ref.data());
    CHECK(bitwise_equal(out_omp, out_ref));
    CHECK(arg_omp == arg_ref);

    std::vector<float> din_omp(C * H * W), din_ref(C * H * W);
    nnkit::kernels::maxpool2x2_backward(g.data(), arg_omp.data(), C, H, W, din_omp.data());
    nnkit::ref::maxpool2x2_backward(g.data(), arg_ref.data(), C, H, W, din_ref.data());
    CHECK(bitwise_equal(din_omp, din_ref));

    std::vector<float> r_omp(in.size()), r_ref(in.size());
    nnkit::kernels::relu_forward(in.data(), in.size(), r_omp.data());
    nnkit::ref::relu_forward(in.data(), in.size(), r_ref.data());
    CHECK(bitwise_equal(r_omp, r_ref));
  }
}
