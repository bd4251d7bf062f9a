#include <doctest.h>

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "histprior/numerics.hpp"
#include "support.hpp"

using namespace histprior;

TEST_CASE("log_beta at small integer arguments") {
  CHECK(log_beta(1, 1) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(log_beta(2, 3) == doctest::Approx(std::log(1.0 / 12.0)).epsilon(1e-14));
  CHECK(log_beta(2, 3) == doctest::Approx(-2.484906650).epsilon(1e-9));
}

TEST_CASE("log_beta matches a long-double ln-gamma reference") {
  CHECK(std::abs(log_beta(151, 111) - static_cast<double>(testing::ref_log_beta(151, 111))) < 1e-10);

  testing::Gen gen(11);
  for (int i = 0; i < 2000; ++i) {
    const double a = gen.log_uniform(1e-3, 1e6);
    const double b = gen.log_uniform(1e-3, 1e6);
    const long double ref = testing::ref_log_beta(a, b);
    const double got = log_beta(a, b);
    INFO("a=" << a << " b=" << b);
    CHECK(std::abs(got - static_cast<double>(ref)) <= 1e-12 * std::max(1.0L, std::abs(ref)));
  }
}

TEST_CASE("log_beta is symmetric and rejects non-positive arguments") {
  testing::Gen gen(12);
  for (int i = 0; i < 200; ++i) {
    const double a = gen.log_uniform(1e-2, 1e5), b = gen.log_uniform(1e-2, 1e5);
    CHECK(std::exp(log_beta(a, b)) == doctest::Approx(std::exp(log_beta(b, a))).epsilon(1e-14));
  }
  CHECK_THROWS_AS(log_beta(0, 1), std::domain_error);
  CHECK_THROWS_AS(log_beta(1, -2), std::domain_error);
  CHECK_THROWS_AS(log_beta(std::nan(""), 1), std::domain_error);
}

TEST_CASE("log_choose") {
  CHECK(log_choose(10, 5) == doctest::Approx(std::log(252.0)).epsilon(1e-14));
  CHECK(log_choose(7, 0) == 0.0);
  CHECK(log_choose(7, 7) == 0.0);
  CHECK_THROWS_AS(log_choose(3, 4), std::domain_error);
}

TEST_CASE("log_beta_binomial examples") {
  CHECK(log_beta_binomial(65, 100, 1, 1) == doctest::Approx(std::log(1.0 / 101.0)).epsilon(1e-13));

  double total = 0.0;
  for (int x = 0; x <= 10; ++x) total += std::exp(log_beta_binomial(x, 10, 2, 2));
  CHECK(std::abs(total - 1.0) < 1e-10);

  // Midpoint Riemann sum of C(n,x) t^x (1-t)^(n-x) Be(t; 5, 7).
  const int cells = 100000;
  double riemann = 0.0;
  for (int k = 0; k < cells; ++k) {
    const double t = (k + 0.5) / cells;
    riemann += 120.0 * std::pow(t, 3) * std::pow(1 - t, 7) * testing::ref_beta_density(t, 5, 7);
  }
  riemann /= cells;
  CHECK(std::abs(std::exp(log_beta_binomial(3, 10, 5, 7)) - riemann) < 1e-6);

  CHECK_THROWS_AS(log_beta_binomial(11, 10, 1, 1), std::domain_error);
  CHECK_THROWS_AS(log_beta_binomial(-1, 10, 1, 1), std::domain_error);
}

TEST_CASE("beta-binomial pmf sums to one") {
  testing::Gen gen(13);
  for (int i = 0; i < 50; ++i) {
    const int n = gen.integer(0, 500);
    const double a = gen.log_uniform(0.05, 500), b = gen.log_uniform(0.05, 500);
    double total = 0.0;
    for (int x = 0; x <= n; ++x) total += std::exp(log_beta_binomial(x, n, a, b));
    INFO("n=" << n << " a=" << a << " b=" << b);
    CHECK(std::abs(total - 1.0) < 1e-10);
  }
}

TEST_CASE("log_binomial_pmf handles the endpoints") {
  CHECK(log_binomial_pmf(0, 10, 0.0) == 0.0);
  CHECK(log_binomial_pmf(10, 10, 1.0) == 0.0);
  CHECK(std::isinf(log_binomial_pmf(1, 10, 0.0)));
  CHECK(log_binomial_pmf(5, 10, 0.5) == doctest::Approx(std::log(252.0 / 1024.0)).epsilon(1e-14));
}

TEST_CASE("normal_cdf") {
  CHECK(normal_cdf(0.0) == 0.5);
  for (double z : {-8.0, -3.0, -1.0, 0.3, 2.0, 5.0}) {
    CHECK(normal_cdf(z) == doctest::Approx(0.5 * std::erfc(-z / std::numbers::sqrt2)).epsilon(1e-15));
  }
}

TEST_CASE("integrate examples") {
  CHECK(std::abs(integrate([](double t) { return t; }, 0, 1, 1e-10) - 0.5) < 1e-10);
  CHECK(std::abs(integrate([](double t) { return 12.0 * t * (1 - t) * (1 - t); }, 0, 1, 1e-10) - 1.0) < 1e-10);
  CHECK(std::abs(integrate([](double t) { return t * t * std::pow(1 - t, 3); }, 0, 1, 1e-10) - 1.0 / 60.0) <
        1e-10);
}

TEST_CASE("integrate is exact on cubics") {
  testing::Gen gen(14);
  for (int i = 0; i < 100; ++i) {
    const double c0 = gen.uniform(-5, 5), c1 = gen.uniform(-5, 5), c2 = gen.uniform(-5, 5),
                 c3 = gen.uniform(-5, 5);
    const double lo = gen.uniform(-2, 0), hi = gen.uniform(0.1, 2);
    auto anti = [&](double x) { return c0 * x + c1 * x * x / 2 + c2 * x * x * x / 3 + c3 * x * x * x * x / 4; };
    const double got = integrate([&](double x) { return c0 + x * (c1 + x * (c2 + x * c3)); }, lo, hi, 1e-10);
    CHECK(std::abs(got - (anti(hi) - anti(lo))) <= 1e-12 * std::max(1.0, std::abs(anti(hi) - anti(lo))));
  }
}

TEST_CASE("integrate reports non-convergence with its last estimate") {
  try {
    integrate([](double t) { return std::sin(1.0 / t) / t; }, 1e-6, 1.0, 1e-14);
    FAIL("expected NumericalError");
  } catch (const NumericalError& e) {
    CHECK(std::isfinite(e.last_estimate()));
  }
  CHECK_THROWS_AS(integrate([](double t) { return t; }, 1, 0), std::domain_error);
}

TEST_CASE("Gauss-Legendre rules") {
  for (int n : {2, 5, 10, 20}) {
    const auto rule = gauss_legendre(n, -1.5, 2.0);
    double wsum = 0.0;
    for (double w : rule.weights) {
      CHECK(w > 0.0);
      wsum += w;
    }
    CHECK(wsum == doctest::Approx(3.5).epsilon(1e-14));
    // Exact through degree 2n-1.
    const int deg = 2 * n - 1;
    const double got = rule.apply([&](double x) { return std::pow(x, deg); });
    const double exact = (std::pow(2.0, deg + 1) - std::pow(-1.5, deg + 1)) / (deg + 1);
    CHECK(got == doctest::Approx(exact).epsilon(1e-12));
  }
  const auto comp = composite_gauss_legendre(7, 4, 0.0, 1.0);
  CHECK(comp.nodes.size() == 28);
  CHECK(comp.apply([](double x) { return std::exp(x); }) == doctest::Approx(std::exp(1.0) - 1.0).epsilon(1e-14));
}

TEST_CASE("Gauss-Hermite rule integrates against the standard normal") {
  for (int n : {5, 21, 41}) {
    const auto rule = gauss_hermite(n);
    CHECK(rule.kind == QuadratureKind::Hermite);
    double wsum = 0.0;
    for (double w : rule.weights) wsum += w;
    CHECK(wsum == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(std::abs(rule.apply([](double z) { return z; })) < 1e-13);
    CHECK(rule.apply([](double z) { return z * z; }) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(rule.apply([](double z) { return z * z * z * z; }) == doctest::Approx(3.0).epsilon(1e-12));
  }
  // E[exp(Z)] = exp(1/2).
  CHECK(gauss_hermite(41).apply([](double z) { return std::exp(z); }) ==
        doctest::Approx(std::exp(0.5)).epsilon(1e-13));
}

TEST_CASE("maximize_box examples") {
  auto quad = maximize_box([](std::span<const double> x) { return -(x[0] - 0.3) * (x[0] - 0.3); }, 1,
                           cube_vertex_starts(1));
  CHECK(std::abs(quad.argmax[0] - 0.3) < 1e-6);

  auto linear = maximize_box([](std::span<const double> x) { return x[0]; }, 1, {{0.2}});
  CHECK(linear.argmax[0] == 1.0);
  CHECK(linear.value == 1.0);
}

TEST_CASE("cube_vertex_starts lists every vertex plus the centroid") {
  const auto starts = cube_vertex_starts(3);
  CHECK(starts.size() == 9);
  CHECK(starts.back() == std::vector<double>{0.5, 0.5, 0.5});
}

TEST_CASE("maximize_box on the three-study likelihood agrees with a grid search") {
  const int xs[] = {40, 50, 60}, ns[] = {90, 80, 90};
  auto f = [&](std::span<const double> d) {
    double a = 1, b = 1;
    for (int i = 0; i < 3; ++i) {
      a += d[i] * xs[i];
      b += d[i] * (ns[i] - xs[i]);
    }
    return log_beta_binomial(65, 100, a, b);
  };
  const auto best = maximize_box(f, 3, cube_vertex_starts(3));
  double grid_best = -INFINITY;
  std::vector<double> grid_arg(3);
  for (int i = 0; i <= 100; ++i) {
    for (int j = 0; j <= 100; ++j) {
      for (int k = 0; k <= 100; ++k) {
        const double d[] = {i / 100.0, j / 100.0, k / 100.0};
        const double v = f(d);
        if (v > grid_best) {
          grid_best = v;
          grid_arg.assign(d, d + 3);
        }
      }
    }
  }
  CHECK(best.value >= grid_best - 1e-12);
  for (int i = 0; i < 3; ++i) CHECK(std::abs(best.argmax[i] - grid_arg[i]) <= 0.02);
}

TEST_CASE("maximize_box results are feasible, dominate the starts and are fixed points") {
  testing::Gen gen(15);
  for (int trial = 0; trial < 40; ++trial) {
    const int d = gen.integer(1, 4);
    std::vector<double> centre(d), scale(d);
    for (int i = 0; i < d; ++i) {
      centre[i] = gen.uniform(-0.5, 1.5);
      scale[i] = gen.log_uniform(0.1, 10);
    }
    auto f = [&](std::span<const double> x) {
      double s = 0.0;
      for (int i = 0; i < d; ++i) s -= scale[i] * (x[i] - centre[i]) * (x[i] - centre[i]);
      return s;
    };
    std::vector<std::vector<double>> starts;
    for (int s = 0; s < 3; ++s) starts.push_back(gen.weights(d));
    const auto best = maximize_box(f, d, starts);
    for (double x : best.argmax) CHECK((x >= 0.0 && x <= 1.0));
    for (const auto& s : starts) CHECK(best.value >= f(s));
    for (int i = 0; i < d; ++i) CHECK(std::abs(best.argmax[i] - std::clamp(centre[i], 0.0, 1.0)) < 1e-5);
    const auto again = maximize_box(f, d, {best.argmax});
    CHECK(again.value >= best.value - 1e-14);
    for (int i = 0; i < d; ++i) CHECK(std::abs(again.argmax[i] - best.argmax[i]) < 1e-6);
  }
}
