#include <doctest.h>

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "bnmf/quadrature.hpp"
#include "oracles.hpp"

using bnmf::gauss_hermite_rule;

namespace {

double double_factorial(int n) {
  double r = 1.0;
  for (int k = n; k > 1; k -= 2) r *= k;
  return r;
}

}  // namespace

TEST_CASE("rejects fewer than two nodes") {
  CHECK_THROWS_AS(gauss_hermite_rule(1), std::invalid_argument);
  CHECK_THROWS_AS(gauss_hermite_rule(0), std::invalid_argument);
}

TEST_CASE("small rules match their closed forms") {
  const auto r2 = gauss_hermite_rule(2);
  CHECK(r2.nodes[0] == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(r2.nodes[1] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(r2.weights[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(bnmf::integrate(r2, [](double z) { return z * z; }) == doctest::Approx(1.0).epsilon(1e-15));

  const auto r3 = gauss_hermite_rule(3);
  CHECK(std::abs(r3.nodes[1]) < 1e-15);
  CHECK(r3.nodes[2] == doctest::Approx(std::sqrt(3.0)).epsilon(1e-15));
  CHECK(r3.weights[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(r3.weights[0] == doctest::Approx(1.0 / 6.0).epsilon(1e-14));
}

TEST_CASE("normalization and polynomial exactness") {
  for (int n : {2, 5, 16, 64, 129, 258}) {
    CAPTURE(n);
    const auto rule = gauss_hermite_rule(n);
    REQUIRE(rule.size() == static_cast<std::size_t>(n));
    const double total = std::accumulate(rule.weights.begin(), rule.weights.end(), 0.0);
    CHECK(std::abs(total - 1.0) < 1e-12);
    CHECK(std::abs(bnmf::integrate(rule, [](double z) { return z * z; }) - 1.0) < 1e-10);
    for (int k = 1; 2 * k <= std::min(2 * n - 1, 24); ++k) {
      CAPTURE(k);
      const double exact = double_factorial(2 * k - 1);
      const double got = bnmf::integrate(rule, [k](double z) { return std::pow(z, 2 * k); });
      CHECK(std::abs(got - exact) / exact < 1e-11);
    }
  }
}

TEST_CASE("odd integrands vanish") {
  const auto rule = gauss_hermite_rule(64);
  CHECK(std::abs(bnmf::integrate(rule, [](double z) { return z; })) < 1e-14);
  CHECK(std::abs(bnmf::integrate(rule, [](double z) { return std::tanh(z); })) < 1e-14);
}

TEST_CASE("tanh^2 against a fine trapezoid") {
  const auto tanh2 = [](double z) { return std::tanh(z) * std::tanh(z); };
  const double want = oracle::gauss_trapezoid(tanh2);
  // tanh has poles at +-i pi/2, which caps Gauss-Hermite convergence: the
  // 64-node error is 2.7e-9 (same with any correct implementation).
  CHECK(std::abs(bnmf::integrate(gauss_hermite_rule(64), tanh2) - want) < 3e-9);
  CHECK(std::abs(bnmf::integrate(bnmf::default_rule(), tanh2) - want) < 1e-12);
}

TEST_CASE("composite panel rule") {
  for (double width : {2.0, 0.3, 0.01, 1e-4}) {
    for (double center : {0.0, 1.7, -12.0}) {
      const auto rule = bnmf::composite_gaussian_rule(center, width);
      const double total = std::accumulate(rule.weights.begin(), rule.weights.end(), 0.0);
      CHECK(std::abs(total - 1.0) < 1e-13);
      CHECK(std::abs(bnmf::integrate(rule, [](double z) { return z * z; }) - 1.0) < 1e-12);
      CHECK(std::abs(bnmf::integrate(rule, [](double z) { return std::pow(z, 4); }) - 3.0) < 1e-11);
    }
  }
  CHECK_THROWS_AS(bnmf::composite_gaussian_rule(0.0, 0.0), std::invalid_argument);
}

TEST_CASE("sharp integrands switch to panels and stay accurate") {
  const auto& rule = bnmf::default_rule();
  for (double q : {0.3, 1.0, 4.0, 100.0, 1e4}) {
    CAPTURE(q);
    const double s = std::sqrt(q);
    const double want = oracle::gauss_trapezoid(
        [s](double z) { return std::tanh(s * z) * std::tanh(s * z); }, -10.0, 10.0, 1e-4 / std::max(1.0, s));
    const double got = bnmf::gaussian_expectation(rule, q, 1.0, [](double u) {
      return std::tanh(u) * std::tanh(u);
    });
    CHECK(std::abs(got - want) < 1e-12);
  }
}

TEST_CASE("pair expectation at large variance matches a 2-D trapezoid") {
  const auto& rule = bnmf::default_rule();
  const auto t = [](double u) { return std::tanh(u); };
  for (double c : {0.3, 0.9}) {
    CAPTURE(c);
    const double qa = 60.0, qb = 20.0;
    const double sa = std::sqrt(qa), sb = std::sqrt(qb), r = std::sqrt(1 - c * c);
    const double want = oracle::gauss_trapezoid_2d(
        [&](double z1, double z2) { return std::tanh(sa * z1) * std::tanh(sb * (c * z1 + r * z2)); },
        8.0, 0.004);
    CHECK(std::abs(bnmf::gaussian_pair_expectation(rule, qa, qb, c, t, t) - want) < 1e-9);
  }
}

TEST_CASE("pair expectation reproduces the covariance") {
  const auto& rule = bnmf::default_rule();
  const auto id = [](double u) { return u; };
  for (double c : {-1.0, -0.3, 0.0, 0.7, 1.0}) {
    const double cov = bnmf::gaussian_pair_expectation(rule, 2.0, 0.5, c, id, id);
    CHECK(cov == doctest::Approx(c * std::sqrt(2.0 * 0.5)).epsilon(1e-12).scale(1.0));
  }
}
