#include "doctest.h"

#include "nnkit/nn.hpp"
#include "testutil.hpp"

using namespace nnkit;
using testutil::finite_difference;
using testutil::max_rel_err;
using testutil::random_tensor;
using testutil::random_tensor_away_from_zero;

namespace {

Tensor64 conv_wrap(const Tensor64 &in, const Tensor64 &k, const Tensor64 &b, std::size_t stride,
                   std::size_t pad) {
  return conv2d_forward(in, k, b, stride, pad);
}

double weighted_sum(const Tensor64 &t, const Tensor64 &w) {
  double s = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i)
    s += t[i] * w[i];
  return s;
}

} // namespace

TEST_CASE("conv2d identity kernel reproduces the input") {
  Tensor in({1, 2, 2}, {1, 2, 3, 4});
  Tensor k({1, 1, 1, 1}, {1.0f});
  Tensor b({1}, {0.0f});
  Tensor out = conv2d_forward(in, k, b, 1, 0);
  REQUIRE(out.shape() == std::vector<std::size_t>{1, 2, 2});
  CHECK(out[0] == 1.0f);
  CHECK(out[1] == 2.0f);
  CHECK(out[2] == 3.0f);
  CHECK(out[3] == 4.0f);
}

TEST_CASE("conv2d 2x2 diagonal kernel: direct dot-product value") {
  // oracle: 1*1 + 2*0 + 3*0 + 4*1 = 5
  Tensor in({1, 2, 2}, {1, 2, 3, 4});
  Tensor k({1, 1, 2, 2}, {1, 0, 0, 1});
  Tensor b({1}, {0.0f});
  Tensor out = conv2d_forward(in, k, b, 1, 0);
  REQUIRE(out.shape() == std::vector<std::size_t>{1, 1, 1});
  CHECK(out[0] == doctest::Approx(5.0f));
}

TEST_CASE("conv2d zero kernels give zero output") {
  Rng rng(7);
  Tensor64 in = random_tensor({3, 5, 6}, rng);
  Tensor64 k({4, 3, 3, 3});
  Tensor64 b({4});
  Tensor64 out = conv2d_forward(in, k, b, 1, 1);
  for (std::size_t i = 0; i < out.size(); ++i)
    CHECK(out[i] == 0.0);
}

TEST_CASE("conv2d rejects channel mismatch") {
  Tensor in({2, 4, 4});
  Tensor k({1, 3, 3, 3});
  Tensor b({1});
  CHECK_THROWS_AS(conv2d_forward(in, k, b, 1, 1), ConfigError);
}

TEST_CASE("conv2d scalar chain rule") {
  Tensor in({1, 1, 1}, {3.0f});
  Tensor k({1, 1, 1, 1}, {2.0f});
  Tensor b({1}, {0.0f});
  Tensor up({1, 1, 1}, {5.0f});
  auto g = conv2d_backward(in, k, b, up, 1, 0);
  CHECK(g.params.at("weight")[0] == doctest::Approx(15.0f)); // input * g
  CHECK(g.params.at("bias")[0] == doctest::Approx(5.0f));
  CHECK(g.input[0] == doctest::Approx(10.0f)); // w * g
}

TEST_CASE("conv2d zero upstream gives zero gradients") {
  Rng rng(9);
  Tensor64 in = random_tensor({2, 4, 4}, rng);
  Tensor64 k = random_tensor({3, 2, 3, 3}, rng);
  Tensor64 b = random_tensor({3}, rng);
  Tensor64 up({3, 4, 4});
  auto g = conv2d_backward(in, k, b, up, 1, 1);
  for (const auto &[name, t] : g.params)
    for (std::size_t i = 0; i < t.size(); ++i)
      CHECK(t[i] == 0.0);
  for (std::size_t i = 0; i < g.input.size(); ++i)
    CHECK(g.input[i] == 0.0);
}

TEST_CASE("conv2d analytic gradients match finite differences") {
  Rng rng(11);
  for (int inst = 0; inst < 20; ++inst) {
    std::size_t stride = inst % 2 ? 2 : 1;
    std::size_t pad = inst % 3 == 0 ? 0 : 1;
    Tensor64 in = random_tensor({1, 4, 4}, rng);
    Tensor64 k = random_tensor({2, 1, 3, 3}, rng);
    Tensor64 b = random_tensor({2}, rng);
    Tensor64 out = conv2d_forward(in, k, b, stride, pad);
    Tensor64 w = random_tensor(out.shape(), rng); // random linear functional

    Tensor64 up = w;
    auto g = conv2d_backward(in, k, b, up, stride, pad);

    auto fd_k = finite_difference(
        [&](const Tensor64 &kk) { return weighted_sum(conv_wrap(in, kk, b, stride, pad), w); },
        k);
    auto fd_b = finite_difference(
        [&](const Tensor64 &bb) { return weighted_sum(conv_wrap(in, k, bb, stride, pad), w); },
        b);
    auto fd_in = finite_difference(
        [&](const Tensor64 &ii) { return weighted_sum(conv_wrap(ii, k, b, stride, pad), w); },
        in);
    CHECK(max_rel_err(g.params.at("weight"), fd_k) < 1e-6);
    CHECK(max_rel_err(g.params.at("bias"), fd_b) < 1e-6);
    CHECK(max_rel_err(g.input, fd_in) < 1e-6);
  }
}

TEST_CASE("conv2d is linear in its kernels (fusion backbone)") {
  Rng rng(13);
  for (int inst = 0; inst < 10; ++inst) {
    Tensor64 in = random_tensor({2, 6, 6}, rng);
    Tensor64 ka = random_tensor({3, 2, 3, 3}, rng);
    Tensor64 kb = random_tensor({3, 2, 3, 3}, rng);
    Tensor64 ba = random_tensor({3}, rng);
    Tensor64 bb = random_tensor({3}, rng);
    Tensor64 kmean(ka.shape());
    Tensor64 bmean(ba.shape());
    for (std::size_t i = 0; i < kmean.size(); ++i)
      kmean[i] = 0.5 * (ka[i] + kb[i]);
    for (std::size_t i = 0; i < bmean.size(); ++i)
      bmean[i] = 0.5 * (ba[i] + bb[i]);
    Tensor64 oa = conv2d_forward(in, ka, ba, 1, 1);
    Tensor64 ob = conv2d_forward(in, kb, bb, 1, 1);
    Tensor64 om = conv2d_forward(in, kmean, bmean, 1, 1);
    for (std::size_t i = 0; i < om.size(); ++i)
      CHECK(std::abs(om[i] - 0.5 * (oa[i] + ob[i])) < 1e-6);
  }
}

TEST_CASE("relu forward covers the sign cases") {
  Tensor x({3}, {-1.0f, 0.0f, 2.0f});
  Tensor y = relu_forward(x);
  CHECK(y[0] == 0.0f);
  CHECK(y[1] == 0.0f);
  CHECK(y[2] == 2.0f);
}

TEST_CASE("relu backward passes gradient only where input is positive") {
  Tensor x({3}, {-1.0f, 0.0f, 2.0f});
  Tensor g({3}, {5.0f, 7.0f, 9.0f});
  Tensor dx = relu_backward(x, g);
  CHECK(dx[0] == 0.0f);
  CHECK(dx[1] == 0.0f); // tie at exactly 0 passes zero
  CHECK(dx[2] == 9.0f);
}

TEST_CASE("maxpool2x2 forward/backward routes through the argmax") {
  Tensor x({1, 2, 2}, {1, 2, 3, 4});
  auto r = maxpool2x2_forward(x);
  REQUIRE(r.out.shape() == std::vector<std::size_t>{1, 1, 1});
  CHECK(r.out[0] == 4.0f);
  Tensor g({1, 1, 1}, {10.0f});
  Tensor dx = maxpool2x2_backward(g, r.argmax, x.shape());
  CHECK(dx[0] == 0.0f);
  CHECK(dx[1] == 0.0f);
  CHECK(dx[2] == 0.0f);
  CHECK(dx[3] == 10.0f);
}

TEST_CASE("maxpool2x2 gradients match finite differences") {
  Rng rng(17);
  for (int inst = 0; inst < 20; ++inst) {
    Tensor64 in = random_tensor({2, 4, 4}, rng); // distinct values almost surely
    auto fwd = maxpool2x2_forward(in);
    Tensor64 w = random_tensor(fwd.out.shape(), rng);
    Tensor64 dx = maxpool2x2_backward(w, fwd.argmax, in.shape());
    auto fd = finite_difference(
        [&](const Tensor64 &ii) { return weighted_sum(maxpool2x2_forward(ii).out, w); }, in,
        1e-7); // small step keeps the argmax stable
    CHECK(max_rel_err(dx, fd) < 1e-5);
  }
}

TEST_CASE("dense gradients match finite differences") {
  Rng rng(19);
  for (int inst = 0; inst < 20; ++inst) {
    Tensor64 x = random_tensor({6}, rng);
    Tensor64 w = random_tensor({4, 6}, rng);
    Tensor64 b = random_tensor({4}, rng);
    Tensor64 lin = random_tensor({4}, rng);
    auto g = dense_backward(x, w, lin);
    auto fd_w = finite_difference(
        [&](const Tensor64 &ww) { return weighted_sum(dense_forward(x, ww, b), lin); }, w);
    auto fd_b = finite_difference(
        [&](const Tensor64 &bb) { return weighted_sum(dense_forward(x, w, bb), lin); }, b);
    auto fd_x = finite_difference(
        [&](const Tensor64 &xx) { return weighted_sum(dense_forward(xx, w, b), lin); }, x);
    CHECK(max_rel_err(g.params.at("weight"), fd_w) < 1e-6);
    CHECK(max_rel_err(g.params.at("bias"), fd_b) < 1e-6);
    CHECK(max_rel_err(g.input, fd_x) < 1e-6);
  }
}

TEST_CASE("relu gradients match finite differences away from the kink") {
  Rng rng(23);
  for (int inst = 0; inst < 20; ++inst) {
    Tensor64 x = random_tensor_away_from_zero({8}, rng);
    Tensor64 w = random_tensor({8}, rng);
    Tensor64 dx = relu_backward(x, w);
    auto fd = finite_difference(
        [&](const Tensor64 &xx) { return weighted_sum(relu_forward(xx), w); }, x);
    CHECK(max_rel_err(dx, fd) < 1e-6);
  }
}

TEST_CASE("global_avg_pool and flatten gradients match finite differences") {
  Rng rng(27);
  for (int inst = 0; inst < 20; ++inst) {
    Tensor64 x = random_tensor({3, 2, 4}, rng);
    Tensor64 w = random_tensor({3}, rng);
    Tensor64 dx = global_avg_pool_backward(w, x.shape());
    auto fd = finite_difference(
        [&](const Tensor64 &xx) { return weighted_sum(global_avg_pool(xx), w); }, x);
    CHECK(max_rel_err(dx, fd) < 1e-6);

    Tensor64 wf = random_tensor({x.size()}, rng);
    Tensor64 dxf = unflatten(wf, x.shape());
    auto fdf =
        finite_difference([&](const Tensor64 &xx) { return weighted_sum(flatten(xx), wf); }, x);
    CHECK(max_rel_err(dxf, fdf) < 1e-6);
  }
}

TEST_CASE("softmax of a constant vector is uniform") {
  for (std::size_t C : {2u, 5u, 9u}) {
    Tensor64 z({C});
    z.fill(3.75);
    Tensor64 q = softmax(z);
    for (std::size_t i = 0; i < C; ++i)
      CHECK(q[i] == doctest::Approx(1.0 / static_cast<double>(C)).epsilon(1e-12));
  }
}

TEST_CASE("softmax closed form for [0, ln 2]") {
  Tensor64 z({2}, {0.0, std::log(2.0)});
  Tensor64 q = softmax(z);
  CHECK(q[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(q[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("softmax sums to one and is shift invariant") {
  Rng rng(31);
  for (int inst = 0; inst < 20; ++inst) {
    Tensor64 z = random_tensor({7}, rng, -4.0, 4.0);
    Tensor64 q = softmax(z);
    double sum = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i)
      sum += q[i];
    CHECK(std::abs(sum - 1.0) < 1e-6);

    double k = rng.uniform(-10.0, 10.0);
    Tensor64 zs = z;
    for (std::size_t i = 0; i < zs.size(); ++i)
      zs[i] += k;
    Tensor64 qs = softmax(zs);
    for (std::size_t i = 0; i < q.size(); ++i)
      CHECK(std::abs(qs[i] - q[i]) < 1e-9);
  }
}

TEST_CASE("softmax jacobian-vector product matches finite differences") {
  Rng rng(37);
  for (int inst = 0; inst < 20; ++inst) {
    Tensor64 z = random_tensor({5}, rng, -2.0, 2.0);
    Tensor64 w = random_tensor({5}, rng);
    Tensor64 q = softmax(z);
    Tensor64 dz = softmax_backward(q, w);
    auto fd =
        finite_difference([&](const Tensor64 &zz) { return weighted_sum(softmax(zz), w); }, z);
    CHECK(max_rel_err(dz, fd) < 1e-6);
  }
}

TEST_CASE("finite forward and backward results on finite inputs") {
  Rng rng(41);
  Tensor64 in = random_tensor({2, 8, 8}, rng, -10.0, 10.0);
  Tensor64 k = random_tensor({4, 2, 3, 3}, rng, -10.0, 10.0);
  Tensor64 b = random_tensor({4}, rng, -10.0, 10.0);
  Tensor64 out = conv2d_forward(in, k, b, 1, 1);
  CHECK(out.all_finite());
  auto g = conv2d_backward(in, k, b, out, 1, 1);
  CHECK(g.input.all_finite());
  CHECK(g.params.at("weight").all_finite());
}
