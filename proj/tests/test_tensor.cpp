#include <cmath>

#include "doctest.h"
#include "mlgib/tensor.hpp"
#include "support/fd_cases.hpp"

using namespace mlgib;
using mlgib_test::primitive_fd_cases;

TEST_CASE("segment_softmax basic values") {
  Tape tape;
  SUBCASE("uniform scores") {
    Tensor s = tape.input({3}, {0, 0, 0}, false);
    Tensor p = segment_softmax(s, {0, 0, 0});
    for (double v : p.values()) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  }
  SUBCASE("analytic two-way softmax") {
    Tensor s = tape.input({2}, {1, 0}, false);
    Tensor p = segment_softmax(s, {0, 0});
    CHECK(p.values()[0] == doctest::Approx(0.7310585786300049).epsilon(1e-12));
    CHECK(p.values()[1] == doctest::Approx(0.2689414213699951).epsilon(1e-12));
  }
  SUBCASE("large scores stay finite") {
    Tensor s = tape.input({2}, {1000, 999}, false);
    Tensor p = segment_softmax(s, {0, 0});
    CHECK(std::isfinite(p.values()[0]));
    CHECK(p.values()[0] == doctest::Approx(0.7310585786300049).epsilon(1e-9));
    CHECK(p.values()[1] == doctest::Approx(0.2689414213699951).epsilon(1e-9));
  }
  SUBCASE("two segments normalize independently") {
    Tensor s = tape.input({5}, {0.3, -1.0, 2.0, 2.0, 2.0}, false);
    Tensor p = segment_softmax(s, {0, 0, 1, 1, 1});
    CHECK(p.values()[0] + p.values()[1] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(p.values()[2] + p.values()[3] + p.values()[4] ==
          doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("segment_softmax properties on random inputs") {
  Rng rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    size_t n_seg = 1 + rng.below(4);
    std::vector<uint32_t> segments;
    std::vector<double> scores;
    for (uint32_t s = 0; s < n_seg; ++s) {
      size_t len = 1 + rng.below(5);
      for (size_t i = 0; i < len; ++i) {
        segments.push_back(s);
        scores.push_back(rng.uniform(-3, 3));
      }
    }
    Tape tape;
    Tensor sc = tape.input({scores.size()}, scores, false);
    Tensor p = segment_softmax(sc, segments);

    // per-segment sums are exactly 1
    std::vector<double> sums(n_seg, 0.0);
    for (size_t i = 0; i < segments.size(); ++i) sums[segments[i]] += p.values()[i];
    for (double s : sums) CHECK(std::abs(s - 1.0) < 1e-12);

    // invariance under a per-segment additive constant
    std::vector<double> shifted = scores;
    std::vector<double> shifts(n_seg);
    for (double& c : shifts) c = rng.uniform(-5, 5);
    for (size_t i = 0; i < segments.size(); ++i) shifted[i] += shifts[segments[i]];
    Tensor sc2 = tape.input({shifted.size()}, shifted, false);
    Tensor p2 = segment_softmax(sc2, segments);
    for (size_t i = 0; i < segments.size(); ++i)
      CHECK(std::abs(p.values()[i] - p2.values()[i]) < 1e-9);
  }
}

TEST_CASE("segment inputs must be grouped") {
  Tape tape;
  Tensor s = tape.input({3}, {1, 2, 3}, false);
  CHECK_THROWS_AS(segment_softmax(s, {1, 0, 1}), ArgumentError);
}

TEST_CASE("gaussian_log_density analytic values") {
  Tape tape;
  SUBCASE("at the mean, unit variance, dim 1") {
    Tensor z = tape.input({1}, {0.7}, false);
    Tensor m = tape.input({1}, {0.7}, false);
    Tensor v = tape.input({1}, {1.0}, false);
    CHECK(gaussian_log_density(z, m, v).scalar() ==
          doctest::Approx(-0.9189385332046727).epsilon(1e-12));
  }
  SUBCASE("one sigma away") {
    Tensor z = tape.input({1}, {1.7}, false);
    Tensor m = tape.input({1}, {0.7}, false);
    Tensor v = tape.input({1}, {1.0}, false);
    CHECK(gaussian_log_density(z, m, v).scalar() ==
          doctest::Approx(-1.4189385332046727).epsilon(1e-12));
  }
  SUBCASE("dim 2 at the mean") {
    Tensor z = tape.input({2}, {0.1, -2.0}, false);
    Tensor m = tape.input({2}, {0.1, -2.0}, false);
    Tensor v = tape.input({2}, {1.0, 1.0}, false);
    CHECK(gaussian_log_density(z, m, v).scalar() ==
          doctest::Approx(-1.8378770664093453).epsilon(1e-12));
  }
  SUBCASE("non-positive variance rejected") {
    Tensor z = tape.input({1}, {0.0}, false);
    Tensor m = tape.input({1}, {0.0}, false);
    Tensor v = tape.input({1}, {0.0}, false);
    CHECK_THROWS_AS(gaussian_log_density(z, m, v), ArgumentError);
  }
}

TEST_CASE("gaussian_log_density is maximized at the mean") {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    size_t d = 1 + rng.below(4);
    std::vector<double> mu(d), var(d), dir(d);
    for (size_t j = 0; j < d; ++j) {
      mu[j] = rng.uniform(-2, 2);
      var[j] = rng.uniform(0.2, 3.0);
      dir[j] = rng.uniform(-1, 1);
    }
    Tape tape;
    Tensor m = tape.input({d}, mu, false);
    Tensor v = tape.input({d}, var, false);
    double at_mean = gaussian_log_density(tape.input({d}, mu, false), m, v).scalar();
    for (double t : {-1.0, -0.3, 0.2, 0.9}) {
      std::vector<double> z = mu;
      for (size_t j = 0; j < d; ++j) z[j] += t * dir[j];
      double off = gaussian_log_density(tape.input({d}, z, false), m, v).scalar();
      CHECK(off <= at_mean + 1e-12);
    }
  }
}

TEST_CASE("backward analytical examples") {
  SUBCASE("sum of squares") {
    Tape tape;
    Tensor x = tape.input({3}, {1, 2, 3}, true);
    Tensor loss = sum(mul(x, x));
    tape.backward(loss);
    CHECK(x.grad()[0] == doctest::Approx(2.0));
    CHECK(x.grad()[1] == doctest::Approx(4.0));
    CHECK(x.grad()[2] == doctest::Approx(6.0));
  }
  SUBCASE("sigmoid at zero") {
    Tape tape;
    Tensor x = tape.input({1}, {0.0}, true);
    Tensor loss = sigmoid(x);
    tape.backward(loss);
    CHECK(x.grad()[0] == doctest::Approx(0.25).epsilon(1e-12));
  }
  SUBCASE("loss must be scalar") {
    Tape tape;
    Tensor x = tape.input({2}, {1, 2}, true);
    CHECK_THROWS_AS(tape.backward(x), ArgumentError);
  }
  SUBCASE("parameter gradients accumulate across calls") {
    Parameter p("w", {2});
    p.value = {1.0, 2.0};
    Tape tape;
    Tensor w = tape.param(p);
    Tensor loss = sum(mul(w, w));
    tape.backward(loss);
    tape.backward(loss);
    CHECK(p.grad[0] == doctest::Approx(4.0));
    CHECK(p.grad[1] == doctest::Approx(8.0));
  }
}

TEST_CASE("finite difference oracle behaves") {
  SUBCASE("f(x)=x^2 at x=3") {
    auto f = [](const std::vector<double>& x) { return x[0] * x[0]; };
    std::vector<double> g = fd_gradient(f, {3.0}, 1e-5);
    CHECK(std::abs(g[0] - 6.0) < 1e-6);
  }
  SUBCASE("constant function") {
    auto f = [](const std::vector<double>&) { return 4.2; };
    std::vector<double> g = fd_gradient(f, {1.0, 2.0}, 1e-5);
    CHECK(g[0] == 0.0);
    CHECK(g[1] == 0.0);
    CHECK(finite_difference_check(f, {1.0, 2.0}, {0.0, 0.0}) == 0.0);
  }
}

TEST_CASE("every primitive matches central finite differences") {
  auto cases = primitive_fd_cases();
  Rng rng(2024);
  for (const auto& c : cases) {
    CAPTURE(c.name);
    double worst = 0.0;
    for (int pt = 0; pt < 100; ++pt) {
      std::vector<double> x(c.dim);
      for (double& v : x) v = rng.uniform(c.lo, c.hi);
      auto f = [&c](const std::vector<double>& p) { return c.eval(p); };
      double err = finite_difference_check(f, x, c.grad(x));
      worst = std::max(worst, err);
    }
    CHECK_MESSAGE(worst < 1e-4, c.name, " worst rel err ", worst);
  }
}

TEST_CASE("three-layer composite passes the oracle") {
  auto c = mlgib_test::composite_mlp_case(55);
  Rng rng(777);
  double worst = 0.0;
  for (int pt = 0; pt < 10; ++pt) {
    std::vector<double> x(c.dim);
    for (double& v : x) v = rng.uniform(c.lo, c.hi);
    auto f = [&c](const std::vector<double>& p) { return c.eval(p); };
    worst = std::max(worst, finite_difference_check(f, x, c.grad(x)));
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("bce composition is numerically stable") {
  Tape tape;
  Tensor logits = tape.input({1}, {20.0}, false);
  Tensor y = tape.constant({1}, {1.0});
  double v = bce_with_logits_sum(logits, y).scalar();
  CHECK(v == doctest::Approx(2.061153622438558e-09).epsilon(1e-6));
  CHECK(std::isfinite(v));
}

TEST_CASE("grad-disabled tape records no backward graph") {
  Tape tape(false);
  Parameter p("w", {2});
  p.value = {1.0, 2.0};
  Tensor w = tape.param(p);
  Tensor loss = sum(mul(w, w));
  CHECK_FALSE(loss.requires_grad());
  CHECK(loss.scalar() == doctest::Approx(5.0));
}
