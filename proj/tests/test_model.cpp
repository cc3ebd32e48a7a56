#include "doctest.h"

#include <cmath>

#include "nnkit/model.hpp"
#include "testutil.hpp"

using namespace nnkit;
using testutil::finite_difference;
using testutil::max_rel_err;
using testutil::random_tensor;

namespace {

// Independent naive convolution for the FA oracle: quadruple loop straight
// from the definition, no shared code with the library kernels.
Tensor64 naive_conv(const Tensor64 &in, const Tensor64 &k, const Tensor64 &b, int stride,
                    int pad) {
  int n = static_cast<int>(in.extent(0)), H = static_cast<int>(in.extent(1)),
      W = static_cast<int>(in.extent(2));
  int m = static_cast<int>(k.extent(0)), s1 = static_cast<int>(k.extent(2)),
      s2 = static_cast<int>(k.extent(3));
  int Ho = (H + 2 * pad - s1) / stride + 1;
  int Wo = (W + 2 * pad - s2) / stride + 1;
  Tensor64 out({static_cast<std::size_t>(m), static_cast<std::size_t>(Ho),
                static_cast<std::size_t>(Wo)});
  for (int j = 0; j < m; ++j)
    for (int y = 0; y < Ho; ++y)
      for (int x = 0; x < Wo; ++x) {
        double acc = b[static_cast<std::size_t>(j)];
        for (int i = 0; i < n; ++i)
          for (int l = 0; l < s1; ++l)
            for (int h = 0; h < s2; ++h) {
              int row = y * stride + l - pad, col = x * stride + h - pad;
              if (row < 0 || row >= H || col < 0 || col >= W)
                continue;
              acc += in.at3(i, row, col) * k.at4(j, i, l, h);
            }
        out.at3(static_cast<std::size_t>(j), static_cast<std::size_t>(y),
                static_cast<std::size_t>(x)) = acc;
      }
  return out;
}

NetworkSpec tiny_spec(bool with_fa) {
  NetworkSpec s;
  s.in_ch = 1;
  s.in_h = s.in_w = 8;
  s.num_classes = 3;
  if (with_fa) {
    s.fa.enabled = true;
    s.fa.branch_ksize = 3;
    s.fa.regions = {{0, 0, 4, 4, 0.5}, {4, 2, 4, 4, 0.25}};
  }
  s.layers = {
      {LayerKind::Conv, "conv1", 2, 3, 1, 1, 0, 0},
      {LayerKind::Relu, "relu1"},
      {LayerKind::MaxPool2, "pool1"},
      {LayerKind::Flatten, "flat"},
      {LayerKind::Dense, "fc1", 0, 0, 1, 0, 32, 3},
  };
  s.validate();
  return s;
}

} // namespace

TEST_CASE("build is deterministic and seed-sensitive") {
  auto spec = minicnn_spec();
  auto a = build<float>(spec, 1);
  auto b = build<float>(spec, 1);
  auto c = build<float>(spec, 2);
  bool identical = true, any_diff = false;
  for (const auto &[name, t] : a.params) {
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (t[i] != b.params.at(name)[i])
        identical = false;
      if (t[i] != c.params.at(name)[i])
        any_diff = true;
    }
  }
  CHECK(identical);
  CHECK(any_diff);
}

TEST_CASE("build rejects a dense layer with the wrong flatten size") {
  NetworkSpec s = tiny_spec(false);
  s.layers.back().in_features = 33;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  CHECK_THROWS_AS(build<float>(s, 0), ConfigError);
}

TEST_CASE("spec validation rejects out-of-image FA regions") {
  NetworkSpec s = tiny_spec(true);
  s.fa.regions[0] = {6, 6, 4, 4, 0.5};
  CHECK_THROWS_AS(s.validate(), ConfigError);
}

TEST_CASE("minicnn parameter inventory matches the spec map") {
  auto spec = minicnn_spec(16, 5, 8, 16, 32, 64, true);
  auto state = build<float>(spec, 3);
  CHECK(state.params.at("conv1.weight").shape() == std::vector<std::size_t>{8, 1, 3, 3});
  CHECK(state.params.at("conv1.branch0.weight").shape() == std::vector<std::size_t>{8, 1, 3, 3});
  CHECK(state.params.at("conv2.weight").shape() == std::vector<std::size_t>{16, 8, 3, 3});
  CHECK(state.params.at("fc2.weight").shape() == std::vector<std::size_t>{5, 128});
  CHECK(spec.parameter_count() ==
        [&] {
          std::size_t n = 0;
          for (const auto &[name, t] : state.params)
            n += t.size();
          return n;
        }());
}

TEST_CASE("fa_forward with all lambdas zero equals the plain convolution") {
  Rng rng(51);
  Tensor64 img = random_tensor({1, 8, 8}, rng);
  Tensor64 main_w = random_tensor({2, 1, 3, 3}, rng);
  Tensor64 main_b = random_tensor({2}, rng);
  Tensor64 bw = random_tensor({2, 1, 3, 3}, rng);
  Tensor64 bb = random_tensor({2}, rng);
  std::vector<FaBranchParams<double>> branches = {{&bw, &bb}};
  std::vector<FaRegion> regions = {{0, 0, 4, 4, 0.0}};
  Tensor64 fused = fa_forward(img, main_w, main_b, std::size_t(1), std::size_t(1), branches,
                              regions);
  Tensor64 plain = conv2d_forward(img, main_w, main_b, std::size_t(1), std::size_t(1));
  for (std::size_t i = 0; i < fused.size(); ++i)
    CHECK(fused[i] == doctest::Approx(plain[i]).epsilon(1e-12));
}

TEST_CASE("fa_forward full-image identical branch at lambda 1 doubles the output") {
  Rng rng(53);
  Tensor64 img = random_tensor({1, 8, 8}, rng);
  Tensor64 main_w = random_tensor({2, 1, 3, 3}, rng);
  Tensor64 main_b({2}); // zero bias so doubling is exact
  std::vector<FaBranchParams<double>> branches = {{&main_w, &main_b}};
  std::vector<FaRegion> regions = {{0, 0, 8, 8, 1.0}};
  Tensor64 fused =
      fa_forward(img, main_w, main_b, std::size_t(1), std::size_t(1), branches, regions);
  Tensor64 plain = conv2d_forward(img, main_w, main_b, std::size_t(1), std::size_t(1));
  for (std::size_t i = 0; i < fused.size(); ++i)
    CHECK(fused[i] == doctest::Approx(2.0 * plain[i]).epsilon(1e-9));
}

TEST_CASE("fa_forward matches the brute-force post-condition oracle") {
  Rng rng(57);
  Tensor64 img = random_tensor({1, 8, 8}, rng);
  Tensor64 main_w = random_tensor({3, 1, 3, 3}, rng);
  Tensor64 main_b = random_tensor({3}, rng);
  Tensor64 bw = random_tensor({3, 1, 3, 3}, rng);
  Tensor64 bb = random_tensor({3}, rng);
  FaRegion region{0, 0, 4, 4, 0.5};

  std::vector<FaBranchParams<double>> branches = {{&bw, &bb}};
  Tensor64 got = fa_forward(img, main_w, main_b, std::size_t(1), std::size_t(1), branches,
                            {region});

  // Independent evaluation: F' = conv(img, main) + lambda * Embed(conv(crop, branch)).
  Tensor64 expected = naive_conv(img, main_w, main_b, 1, 1);
  Tensor64 cropped({1, 4, 4});
  for (std::size_t y = 0; y < 4; ++y)
    for (std::size_t x = 0; x < 4; ++x)
      cropped.at3(0, y, x) = img.at3(0, region.row + y, region.col + x);
  Tensor64 branch_map = naive_conv(cropped, bw, bb, 1, 1);
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t y = 0; y < 4; ++y)
      for (std::size_t x = 0; x < 4; ++x)
        expected.at3(c, region.row + y, region.col + x) +=
            region.lambda * branch_map.at3(c, y, x);

  REQUIRE(got.shape() == expected.shape());
  for (std::size_t i = 0; i < got.size(); ++i)
    CHECK(got[i] == doctest::Approx(expected[i]).epsilon(1e-9));
}

TEST_CASE("fa_forward is affine in each lambda") {
  Rng rng(59);
  Tensor64 img = random_tensor({1, 8, 8}, rng);
  Tensor64 main_w = random_tensor({2, 1, 3, 3}, rng);
  Tensor64 main_b = random_tensor({2}, rng);
  Tensor64 bw = random_tensor({2, 1, 3, 3}, rng);
  Tensor64 bb = random_tensor({2}, rng);
  std::vector<FaBranchParams<double>> branches = {{&bw, &bb}};

  auto run = [&](double lambda) {
    std::vector<FaRegion> regions = {{2, 2, 4, 4, lambda}};
    return fa_forward(img, main_w, main_b, std::size_t(1), std::size_t(1), branches, regions);
  };
  Tensor64 base = run(0.0), one = run(0.3), two = run(0.6);
  for (std::size_t i = 0; i < base.size(); ++i) {
    double delta1 = one[i] - base[i];
    double delta2 = two[i] - base[i];
    CHECK(std::abs(delta2 - 2.0 * delta1) < 1e-9);
  }
}

TEST_CASE("fa_forward rejects regions outside the image") {
  Tensor64 img({1, 8, 8});
  Tensor64 mw({1, 1, 3, 3});
  Tensor64 mb({1});
  std::vector<FaBranchParams<double>> branches = {{&mw, &mb}};
  std::vector<FaRegion> regions = {{5, 5, 4, 4, 1.0}};
  CHECK_THROWS_AS(
      fa_forward(img, mw, mb, std::size_t(1), std::size_t(1), branches, regions), ConfigError);
}

TEST_CASE("zero batch through a zero-weight dense head yields the bias") {
  auto spec = minicnn_spec(16, 5, 4, 8, 8, 16, false);
  auto state = build<float>(spec, 5);
  auto &w = state.params.at("fc2.weight");
  w.fill(0.0f);
  auto &b = state.params.at("fc2.bias");
  for (std::size_t i = 0; i < b.size(); ++i)
    b[i] = static_cast<float>(i) + 0.5f;
  Tensor batch({2, 1, 16, 16});
  Tensor logits = forward(state, batch);
  for (std::size_t s = 0; s < 2; ++s)
    for (std::size_t i = 0; i < 5; ++i)
      CHECK(logits[s * 5 + i] == b[i]);
}

TEST_CASE("forward is pure: repeated calls give identical logits") {
  auto spec = minicnn_spec(16, 5, 4, 8, 8, 16, true);
  auto state = build<float>(spec, 6);
  Rng rng(61);
  Tensor batch({3, 1, 16, 16});
  for (std::size_t i = 0; i < batch.size(); ++i)
    batch[i] = static_cast<float>(rng.uniform());
  Tensor a = forward(state, batch);
  Tensor b = forward(state, batch);
  for (std::size_t i = 0; i < a.size(); ++i)
    CHECK(a[i] == b[i]);
}

TEST_CASE("full-network gradient matches finite differences (64-bit)") {
  for (bool with_fa : {false, true}) {
    auto spec = tiny_spec(with_fa);
    auto state = build<double>(spec, 7);
    Rng rng(63);
    Tensor64 batch({2, 1, 8, 8});
    for (std::size_t i = 0; i < batch.size(); ++i)
      batch[i] = rng.uniform();
    Tensor64 w({2, 3}); // random linear functional over the logits
    for (std::size_t i = 0; i < w.size(); ++i)
      w[i] = rng.uniform(-1.0, 1.0);

    auto functional = [&](const NetworkStateT<double> &st) {
      Tensor64 logits = forward(st, batch);
      double acc = 0.0;
      for (std::size_t i = 0; i < logits.size(); ++i)
        acc += logits[i] * w[i];
      return acc;
    };

    std::vector<ForwardTrace<double>> traces;
    forward(state, batch, &traces);
    GradMapT<double> grads = backward(state, traces, w);

    for (auto &[name, p] : state.params) {
      auto fd = finite_difference(
          [&](const Tensor64 &pp) {
            NetworkStateT<double> st = state;
            st.params.at(name) = pp;
            return functional(st);
          },
          p);
      CHECK(max_rel_err(grads.at(name), fd) < 1e-5);
    }
  }
}

TEST_CASE("attention placeholder layer is a transparent identity") {
  NetworkSpec s = tiny_spec(false);
  s.layers.insert(s.layers.begin() + 1, {LayerKind::AttentionNoop, "att1"});
  s.validate();
  auto with_att = build<float>(s, 11);
  auto plain = build<float>(tiny_spec(false), 11);
  Tensor batch({1, 1, 8, 8});
  Rng rng(67);
  for (std::size_t i = 0; i < batch.size(); ++i)
    batch[i] = static_cast<float>(rng.uniform());
  Tensor a = forward(with_att, batch);
  Tensor b = forward(plain, batch);
  for (std::size_t i = 0; i < a.size(); ++i)
    CHECK(a[i] == b[i]);
}
