#include "doctest.h"

#include "nnkit/schedule.hpp"
#include "nnkit/common.hpp"

using namespace nnkit;

TEST_CASE("cosine_lr endpoints and midpoint") {
  double lr_max = 3e-4, lr_min = 1e-6;
  CHECK(cosine_lr(0, 30, lr_max, lr_min) == doctest::Approx(lr_max).epsilon(1e-12));
  CHECK(cosine_lr(30, 30, lr_max, lr_min) == doctest::Approx(lr_min).epsilon(1e-12));
  CHECK(cosine_lr(15, 30, lr_max, lr_min) ==
        doctest::Approx((lr_max + lr_min) / 2.0).epsilon(1e-12));
}

TEST_CASE("cosine_lr rejects a zero period and epochs beyond it") {
  CHECK_THROWS_AS(cosine_lr(0, 0, 1e-3, 0.0), ConfigError);
  CHECK_THROWS_AS(cosine_lr(31, 30, 1e-3, 0.0), ConfigError);
}

TEST_CASE("step_lr decay schedule") {
  CHECK(step_lr(0, 1e-5, 0.5, 10) == doctest::Approx(1e-5));
  CHECK(step_lr(25, 1e-5, 0.5, 10) == doctest::Approx(1e-5 * 0.25));
  CHECK(step_lr(9, 1e-5, 0.5, 10) == doctest::Approx(1e-5));
  CHECK(step_lr(10, 1e-5, 0.5, 10) == doctest::Approx(5e-6));
}

TEST_CASE("step_lr with gamma 1 is constant forever") {
  for (std::size_t e : {0u, 7u, 100u, 100000u})
    CHECK(step_lr(e, 2e-5, 1.0, 3) == doctest::Approx(2e-5));
}

TEST_CASE("step_lr rejects bad gamma and interval") {
  CHECK_THROWS_AS(step_lr(0, 1e-5, 0.0, 10), ConfigError);
  CHECK_THROWS_AS(step_lr(0, 1e-5, 1.5, 10), ConfigError);
  CHECK_THROWS_AS(step_lr(0, 1e-5, 0.5, 0), ConfigError);
}

TEST_CASE("plateau_reached on constant history") {
  std::vector<double> losses(6, 1.0), accs(6, 0.8);
  CHECK(plateau_reached(losses, accs, 5, 0.01, 0.005));
}

TEST_CASE("plateau_reached is false when loss oscillates beyond tolerance") {
  std::vector<double> losses, accs;
  for (int i = 0; i < 10; ++i) {
    losses.push_back(1.0 + (i % 2 ? 0.02 : -0.02)); // range 0.04 = 2 * 2*tol
    accs.push_back(0.8);
  }
  CHECK_FALSE(plateau_reached(losses, accs, 5, 0.02, 0.005));
}

TEST_CASE("plateau_reached range computation at the tolerance edge") {
  // oracle: range of the last 3 losses = 1.004 - 0.998 = 0.006 < 0.01
  std::vector<double> losses = {1.00, 1.004, 0.998};
  std::vector<double> accs = {0.90, 0.901, 0.9005};
  CHECK(plateau_reached(losses, accs, 3, 0.01, 0.005));
}

TEST_CASE("plateau_reached returns not-ready on short history") {
  std::vector<double> losses = {1.0, 1.0}, accs = {0.5, 0.5};
  CHECK_FALSE(plateau_reached(losses, accs, 3, 0.01, 0.005));
}

TEST_CASE("plateau_reached needs both series inside tolerance") {
  std::vector<double> flat(5, 1.0);
  std::vector<double> moving = {0.5, 0.6, 0.7, 0.8, 0.9};
  CHECK_FALSE(plateau_reached(flat, moving, 5, 0.01, 0.005));
  CHECK_FALSE(plateau_reached(moving, flat, 5, 0.01, 0.005));
  CHECK(plateau_reached(flat, flat, 5, 0.01, 0.005));
}
