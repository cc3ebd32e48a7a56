// Times the OpenMP kernels against the serial reference on convolution and
// dense workloads of increasing size.

#include <chrono>
#include <cstdio>
#include <vector>

#include <omp.h>

#include "nnkit/kernels.hpp"
#include "nnkit/rng.hpp"

using Clock = std::chrono::steady_clock;

namespace {

std::vector<float> random_vec(std::size_t n, nnkit::Rng &rng) {
  std::vector<float> v(n);
  for (auto &x : v)
    x = static_cast<float>(rng.uniform(-1.0, 1.0));
  return v;
}

template <typename Fn> double time_best_of(int reps, Fn &&fn) {
  double best = 1e100;
  for (int r = 0; r < reps; ++r) {
    auto t0 = Clock::now();
    fn();
    auto t1 = Clock::now();
    best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
  }
  return best;
}

struct ConvCase {
  std::size_t n, m, H, W, k;
};

void bench_conv(const ConvCase &c, int iters) {
  nnkit::Rng rng(1);
  std::size_t pad = (c.k - 1) / 2;
  std::size_t Ho = c.H, Wo = c.W;
  auto in = random_vec(c.n * c.H * c.W, rng);
  auto kern = random_vec(c.m * c.n * c.k * c.k, rng);
  auto bias = random_vec(c.m, rng);
  auto up = random_vec(c.m * Ho * Wo, rng);
  std::vector<float> out(c.m * Ho * Wo), dk(kern.size()), db(c.m), din(in.size());

  double serial_fwd = time_best_of(3, [&] {
    for (int i = 0; i < iters; ++i)
      nnkit::ref::conv2d_forward(in.data(), c.n, c.H, c.W, kern.data(), c.m, c.k, c.k,
                                 bias.data(), 1, pad, out.data(), Ho, Wo);
  });
  double omp_fwd = time_best_of(3, [&] {
    for (int i = 0; i < iters; ++i)
      nnkit::kernels::conv2d_forward(in.data(), c.n, c.H, c.W, kern.data(), c.m, c.k, c.k,
                                     bias.data(), 1, pad, out.data(), Ho, Wo);
  });
  double serial_bwd = time_best_of(3, [&] {
    for (int i = 0; i < iters; ++i) {
      nnkit::ref::conv2d_backward_weights(in.data(), c.n, c.H, c.W, up.data(), c.m, Ho, Wo, c.k,
                                          c.k, 1, pad, dk.data(), db.data());
      nnkit::ref::conv2d_backward_input(kern.data(), c.m, c.n, c.k, c.k, up.data(), Ho, Wo, 1,
                                        pad, din.data(), c.H, c.W);
    }
  });
  double omp_bwd = time_best_of(3, [&] {
    for (int i = 0; i < iters; ++i) {
      nnkit::kernels::conv2d_backward_weights(in.data(), c.n, c.H, c.W, up.data(), c.m, Ho, Wo,
                                              c.k, c.k, 1, pad, dk.data(), db.data());
      nnkit::kernels::conv2d_backward_input(kern.data(), c.m, c.n, c.k, c.k, up.data(), Ho, Wo,
                                            1, pad, din.data(), c.H, c.W);
    }
  });

  double macs = static_cast<double>(c.m) * c.n * Ho * Wo * c.k * c.k * iters;
  std::printf("conv %zux%zux%zu k%zu m%zu   fwd %8.3f ms (ref %8.3f, x%.2f, %6.2f GMAC/s)   "
              "bwd %8.3f ms (ref %8.3f, x%.2f)\n",
              c.n, c.H, c.W, c.k, c.m, omp_fwd * 1e3, serial_fwd * 1e3, serial_fwd / omp_fwd,
              macs / omp_fwd * 1e-9, omp_bwd * 1e3, serial_bwd * 1e3, serial_bwd / omp_bwd);
}

void bench_dense(std::size_t in_dim, std::size_t out_dim, int iters) {
  nnkit::Rng rng(2);
  auto x = random_vec(in_dim, rng);
  auto w = random_vec(out_dim * in_dim, rng);
  auto b = random_vec(out_dim, rng);
  std::vector<float> y(out_dim);
  double serial = time_best_of(3, [&] {
    for (int i = 0; i < iters; ++i)
      nnkit::ref::dense_forward(x.data(), w.data(), b.data(), in_dim, out_dim, y.data());
  });
  double omp = time_best_of(3, [&] {
    for (int i = 0; i < iters; ++i)
      nnkit::kernels::dense_forward(x.data(), w.data(), b.data(), in_dim, out_dim, y.data());
  });
  std::printf("dense %5zu->%4zu          fwd %8.3f ms (ref %8.3f, x%.2f)\n", in_dim, out_dim,
              omp * 1e3, serial * 1e3, serial / omp);
}

} // namespace

int main() {
  std::printf("threads: %d\n\n", omp_get_max_threads());
  bench_conv({1, 8, 16, 16, 3}, 2000);
  bench_conv({8, 16, 8, 8, 3}, 2000);
  bench_conv({16, 32, 4, 4, 3}, 2000);
  bench_conv({16, 32, 32, 32, 3}, 100);
  bench_conv({32, 64, 16, 16, 3}, 100);
  std::printf("\n");
  bench_dense(128, 64, 20000);
  bench_dense(1024, 256, 2000);
  return 0;
}
