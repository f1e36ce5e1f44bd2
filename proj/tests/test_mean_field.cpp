#include <doctest.h>

#include <cmath>
#include <vector>

#include "bnmf/mean_field.hpp"
#include "oracles.hpp"

using namespace bnmf;

namespace {

MfParams params(double sigma_m2, double sigma_b2, double kappa = 1.0) {
  MfParams p;
  p.sigma_m2 = sigma_m2;
  p.sigma_b2 = sigma_b2;
  p.kappa = kappa;
  return p;
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

// Grid of valid hyperparameters shared by several properties.
std::vector<MfParams> param_grid() {
  std::vector<MfParams> out;
  for (double m : {0.1, 0.3, 0.5, 0.8, 0.99})
    for (double b : {1e-5, 1e-3, 0.05, 0.3}) out.push_back(params(m, b));
  return out;
}

}  // namespace

TEST_CASE("MfParams validation") {
  CHECK_NOTHROW(params(0.0, 0.0).validate());
  CHECK_THROWS_AS(params(1.0, 0.1).validate(), std::invalid_argument);
  CHECK_THROWS_AS(params(-0.1, 0.1).validate(), std::invalid_argument);
  CHECK_THROWS_AS(params(0.5, -1e-9).validate(), std::invalid_argument);
  CHECK_THROWS_AS(params(0.5, 0.1, 0.0).validate(), std::invalid_argument);
}

TEST_CASE("e_phi2 limits, monotonicity and oracle value") {
  const auto p = params(0.5, 0.001);
  CHECK(e_phi2(0.0, p) == 0.0);
  CHECK(e_phi2(1e6, p) > 0.99);
  CHECK(e_phi2(1e6, p) < 1.0);
  double prev = -1.0;
  for (double q = 0.0; q < 20.0; q += 0.25) {
    const double e = e_phi2(q, p);
    CHECK(e >= prev);
    prev = e;
  }
  const auto probit = params(0.5, 0.001, kProbitGain);
  CHECK(std::abs(e_phi2(1.0, probit) - oracle::e_tanh2(1.0, kProbitGain)) < 1e-10);
  CHECK(std::abs(e_phi2(1.0, p) - oracle::e_tanh2(1.0, 1.0)) < 1e-10);
  CHECK_THROWS_AS(e_phi2(-1.0, p), std::invalid_argument);
}

TEST_CASE("variance_map closed-form cases and oracle") {
  for (double q : {0.0, 0.3, 5.0}) {
    CHECK(variance_map(q, params(0.0, 0.0)) == 0.0);
    CHECK(variance_map(q, params(0.0, 0.5)) == doctest::Approx(0.5).epsilon(1e-15));
  }
  const double want = oracle::variance_map(1.0, 0.5, 0.001, 1.0);
  CHECK(rel_err(variance_map(1.0, params(0.5, 0.001)), want) < 1e-10);
}

TEST_CASE("variance_map is monotone nondecreasing in q") {
  for (const auto& p : param_grid()) {
    double prev = -1.0;
    for (double q = 0.0; q <= 10.0; q += 0.1) {
      const double v = variance_map(q, p);
      CHECK(v >= prev);
      prev = v;
    }
  }
}

TEST_CASE("fixed_point_q against a bisection oracle") {
  CHECK(fixed_point_q(params(0.0, 0.3)) == doctest::Approx(0.3).epsilon(1e-12));
  const double want = oracle::bisect(
      [](double q) { return oracle::variance_map(q, 0.5, 0.001, 1.0) - q; }, 1e-9, 10.0, 80);
  const double got = fixed_point_q(params(0.5, 0.001));
  CHECK(rel_err(got, want) < 1e-8);
  CHECK(std::abs(variance_map(got, params(0.5, 0.001)) - got) < 1e-12);
}

TEST_CASE("fixed_point_q does not depend on the start") {
  for (const auto& p : param_grid()) {
    std::vector<double> roots;
    for (double q0 : {0.01, 1.0, 100.0}) {
      FixedPointOptions opt;
      opt.q0 = q0;
      roots.push_back(fixed_point_q(p, default_rule(), opt));
    }
    CHECK(std::abs(roots[0] - roots[1]) < 1e-10);
    CHECK(std::abs(roots[2] - roots[1]) < 1e-10);
  }
}

TEST_CASE("fixed_point_q rejects a non-positive tolerance") {
  FixedPointOptions opt;
  opt.tol = 0.0;
  CHECK_THROWS_AS(fixed_point_q(params(0.5, 0.1), default_rule(), opt), std::invalid_argument);
}

TEST_CASE("c = 1 is a fixed point of correlation_map at q*") {
  for (const auto& p : param_grid()) {
    const double q = fixed_point_q(p);
    CHECK(std::abs(correlation_map(1.0, q, p) - 1.0) < 1e-10);
  }
  // Pure-bias fields are perfectly correlated whatever c_prev is.
  const auto p0 = params(0.0, 0.2);
  for (double c : {-1.0, 0.0, 0.5}) CHECK(correlation_map(c, 0.2, p0) == doctest::Approx(1.0));
}

TEST_CASE("correlation_map matches a 2-D trapezoid oracle") {
  const auto p = params(0.5, 0.001);
  const double q = fixed_point_q(p);
  const double c = 0.5;
  const double s = std::sqrt(q), r = std::sqrt(1.0 - c * c);
  const double e = oracle::gauss_trapezoid_2d(
      [&](double z1, double z2) { return std::tanh(s * z1) * std::tanh(s * (c * z1 + r * z2)); });
  const double want = (1.0 + q) / q * (0.5 * e + 0.001) / 1.001;
  CHECK(rel_err(correlation_map(c, q, p), want) < 1e-9);
}

TEST_CASE("correlation_map keeps [-1, 1] invariant at q*") {
  for (const auto& p : param_grid()) {
    const double q = fixed_point_q(p);
    for (int i = 0; i <= 100; ++i) {
      const double c = -1.0 + 0.02 * i;
      const double next = correlation_map(c, q, p);
      CHECK(next <= 1.0 + 1e-10);
      CHECK(next >= -1.0 - 1e-10);
    }
  }
}

TEST_CASE("correlation_map preconditions") {
  const auto p = params(0.5, 0.1);
  CHECK_THROWS_AS(correlation_map(0.5, 0.0, p), std::invalid_argument);
  CHECK_THROWS_AS(correlation_map(1.5, 0.3, p), std::invalid_argument);
  CHECK_THROWS_AS(chi(0.5, -1.0, p), std::invalid_argument);
}

TEST_CASE("chi at c = 1 matches the backward difference of correlation_map") {
  for (const auto& p : param_grid()) {
    const double q = fixed_point_q(p);
    const double eps = 1e-5;
    const double fd = (correlation_map(1.0, q, p) - correlation_map(1.0 - eps, q, p)) / eps;
    CHECK(rel_err(chi(1.0, q, p), fd) < 1e-4);
  }
  CHECK(chi(0.3, 0.5, params(0.0, 0.5)) == 0.0);
}

TEST_CASE("chi matches central differences across c") {
  const auto p = params(0.7, 0.05);
  const double q = fixed_point_q(p);
  for (double c = -0.9; c <= 0.95; c += 0.15) {
    const double eps = 1e-5;
    const double fd =
        (correlation_map(c + eps, q, p) - correlation_map(c - eps, q, p)) / (2.0 * eps);
    CHECK(rel_err(chi(c, q, p), fd) < 1e-6);
    CHECK(chi(c, q, p) >= 0.0);
  }
}

TEST_CASE("chi at c = 1 stays below one and approaches it as sigma_m2 -> 1") {
  const double high = chi(1.0, fixed_point_q(params(0.99, 0.001)), params(0.99, 0.001));
  CHECK(high < 1.0);
  CHECK(high > 0.9);
  double prev = 0.0;
  for (double m : {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.99, 0.999, 0.9999}) {
    for (double b : {1e-5, 1e-3, 1e-1}) {
      const auto p = params(m, b);
      const double x = chi(1.0, fixed_point_q(p), p);
      CHECK(x < 1.0);
    }
    const auto p = params(m, 1e-3);
    const double x = chi(1.0, fixed_point_q(p), p);
    CHECK(x > prev);
    prev = x;
  }
}

TEST_CASE("variance slope matches a central difference of variance_map at q*") {
  for (const auto& p : param_grid()) {
    const double q = fixed_point_q(p);
    const double eps = 1e-6 * std::max(q, 1e-3);
    const double fd = (variance_map(q + eps, p) - variance_map(q - eps, p)) / (2.0 * eps);
    CHECK(rel_err(chi1_variance_slope(q, p), fd) < 1e-4);
  }
  CHECK(chi1_variance_slope(0.4, params(0.0, 0.4)) == 0.0);
  const auto p = params(0.5, 0.001);
  const double slope = chi1_variance_slope(fixed_point_q(p), p);
  CHECK(slope > 0.0);
  CHECK(slope < 1.0);
}

TEST_CASE("depth_scale sentinels") {
  CHECK(std::isinf(depth_scale(1.0)));
  CHECK(std::isinf(depth_scale(1.0 - 1e-13)));
  CHECK(depth_scale(0.0) == 0.0);
  CHECK(depth_scale(std::exp(-0.5)) == doctest::Approx(2.0));
}

TEST_CASE("depth_scales ordering over sigma_m2") {
  const auto a = depth_scales(params(0.2, 0.001));
  const auto b = depth_scales(params(0.5, 0.001));
  const auto c = depth_scales(params(0.99, 0.001));
  CHECK(a.xi_c < b.xi_c);
  CHECK(b.xi_c < c.xi_c);
  CHECK(std::isfinite(c.xi_c));
  CHECK(std::isfinite(b.xi_q));
  CHECK(b.c_star == 1.0);
  CHECK(b.chi_cstar == b.chi1);
  CHECK(b.xi_c == doctest::Approx(-1.0 / std::log(b.chi_cstar)));
}

TEST_CASE("xi_q equals the decay length of iterated variance_map") {
  for (double m : {0.2, 0.5}) {
    const auto p = params(m, 0.001);
    const auto s = depth_scales(p);
    std::vector<double> ell, log_err;
    double q = s.q_star * 1.05;
    for (int l = 0; l < 60; ++l) {
      const double e = std::abs(q - s.q_star);
      if (e < 1e-11 * s.q_star) break;
      if (l >= 2) {
        ell.push_back(l);
        log_err.push_back(std::log(e));
      }
      q = variance_map(q, p);
    }
    REQUIRE(ell.size() >= 3);
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < ell.size(); ++i) mx += ell[i], my += log_err[i];
    mx /= ell.size();
    my /= ell.size();
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < ell.size(); ++i)
      sxy += (ell[i] - mx) * (log_err[i] - my), sxx += (ell[i] - mx) * (ell[i] - mx);
    CHECK(rel_err(sxy / sxx, -1.0 / s.xi_q) < 0.05);
  }
}

TEST_CASE("depth_scales reports q* = 0 as a convergence error") {
  CHECK_THROWS_AS(depth_scales(params(0.5, 0.0)), ConvergenceError);
}

TEST_CASE("iterate_theory") {
  const auto p = params(0.5, 0.001);
  const double q = fixed_point_q(p);

  SUBCASE("depth zero echoes the inputs") {
    const auto t = iterate_theory(p, 1.3, 0.7, 0.2, 0);
    CHECK(t.depth() == 0);
    CHECK(t.q_aa[0] == 1.3);
    CHECK(t.q_bb[0] == 0.7);
    CHECK(t.c_ab[0] == 0.2);
  }
  SUBCASE("c0 = 1 at q* stays at 1") {
    const auto t = iterate_theory(p, q, q, 1.0, 20);
    for (double c : t.c_ab) CHECK(c == doctest::Approx(1.0).epsilon(1e-10));
  }
  SUBCASE("equal variances reduce to the two scalar maps") {
    const auto t = iterate_theory(p, q, q, 0.4, 3);
    double c = 0.4;
    for (int l = 1; l <= 3; ++l) {
      c = correlation_map(c, q, p);
      CHECK(t.c_ab[l] == doctest::Approx(c).epsilon(1e-9));
      CHECK(t.q_aa[l] == doctest::Approx(q).epsilon(1e-10));
    }
  }
  SUBCASE("variance converges within a few depth scales") {
    const auto p2 = params(0.2, 0.001);
    const auto s = depth_scales(p2);
    const int horizon = static_cast<int>(std::ceil(6.0 * s.xi_q)) + 1;
    const auto t = iterate_theory(p2, 2.0, 2.0, 0.5, horizon);
    CHECK(std::abs(t.q_aa.back() - s.q_star) < 0.01 * std::abs(2.0 - s.q_star));
  }
  SUBCASE("trace invariants") {
    const auto t = iterate_theory(p, 3.0, 0.2, -0.6, 15);
    for (int l = 0; l <= 15; ++l) {
      CHECK(t.q_aa[l] >= 0.0);
      CHECK(std::abs(t.c_ab[l]) <= 1.0);
    }
  }
  SUBCASE("bad inputs") {
    CHECK_THROWS_AS(iterate_theory(p, -1.0, 1.0, 0.0, 3), std::invalid_argument);
    CHECK_THROWS_AS(iterate_theory(p, 1.0, 1.0, 1.2, 3), std::invalid_argument);
    CHECK_THROWS_AS(iterate_theory(p, 1.0, 1.0, 0.0, -1), std::invalid_argument);
  }
}

TEST_CASE("input_layer_step closed form") {
  const auto p = params(0.6, 0.01);
  const auto m = input_layer_step({2.0, 0.5, 0.3}, p);
  CHECK(m.q_aa == doctest::Approx((0.6 * 2.0 + 0.01) / (0.4 * 2.0)));
  CHECK(m.q_bb == doctest::Approx((0.6 * 0.5 + 0.01) / (0.4 * 0.5)));
  const double qab = (0.6 * 0.3 * 1.0 + 0.01) / (0.4 * 1.0);
  CHECK(m.c_ab == doctest::Approx(qab / std::sqrt(m.q_aa * m.q_bb)));
  CHECK_THROWS_AS(input_layer_step({0.0, 1.0, 0.0}, p), std::domain_error);
}

TEST_CASE("doubling the quadrature changes every map by < 1e-8") {
  const auto fine = gauss_hermite_rule(2 * kDefaultQuadratureNodes);
  for (const auto& p : param_grid()) {
    const double q = fixed_point_q(p);
    CHECK(std::abs(fixed_point_q(p, fine) - q) < 1e-8);
    CHECK(std::abs(variance_map(1.0, p, fine) - variance_map(1.0, p)) < 1e-8);
    CHECK(std::abs(correlation_map(0.3, q, p, fine) - correlation_map(0.3, q, p)) < 1e-8);
    CHECK(std::abs(chi(1.0, q, p, fine) - chi(1.0, q, p)) < 1e-8);
  }
}

TEST_CASE("continuous baseline") {
  CHECK(continuous::variance_map(0.7, 0.0, 0.4) == doctest::Approx(0.4));
  CHECK(continuous::fixed_point_q(0.0, 0.4) == doctest::Approx(0.4).epsilon(1e-12));

  const double q = continuous::fixed_point_q(1.5, 0.05);
  CHECK(std::abs(continuous::correlation_map(1.0, q, 1.5, 0.05) - 1.0) < 1e-10);

  // Linear regime: phi'(0) = 1 so chi -> sigma_w2 as q* -> 0.
  CHECK(continuous::chi(1.0, 0.0, 1.0) == doctest::Approx(1.0).epsilon(1e-14));
  const double q_small = continuous::fixed_point_q(0.5, 1e-8);
  CHECK(q_small < 1e-7);
  CHECK(continuous::chi(1.0, q_small, 0.5) == doctest::Approx(0.5).epsilon(1e-6));

  const double c = 0.3, eps = 1e-5;
  const double fd = (continuous::correlation_map(c + eps, q, 1.5, 0.05) -
                     continuous::correlation_map(c - eps, q, 1.5, 0.05)) / (2 * eps);
  CHECK(rel_err(continuous::chi(c, q, 1.5), fd) < 1e-6);
}
