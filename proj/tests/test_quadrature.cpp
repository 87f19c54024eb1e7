#include <catch2/catch_amalgamated.hpp>

#include "pe/quadrature.hpp"

using namespace pe;

TEST_CASE("gauss-legendre weights sum to the interval length") {
  for (int n : {2, 6, 17, 64, 190}) {
    auto rule = gauss_legendre(n, -2.0, 2.0);
    REQUIRE(rule.weights.sum() == Catch::Approx(4.0).margin(1e-12));
    for (int i = 0; i < n; ++i) REQUIRE(rule.weights[i] > 0.0);
  }
}

TEST_CASE("gauss-legendre integrates polynomials to the exactness degree") {
  // n = 6 is exact through degree 11; int y^4 over [-2,2] = 64/5.
  auto rule = gauss_legendre(6, -2.0, 2.0);
  double q4 = 0.0, q11 = 0.0;
  for (int i = 0; i < 6; ++i) {
    q4 += rule.weights[i] * std::pow(rule.nodes[i], 4);
    q11 += rule.weights[i] * std::pow(rule.nodes[i], 11);
  }
  REQUIRE(q4 == Catch::Approx(64.0 / 5.0).epsilon(1e-12));
  REQUIRE(q11 == Catch::Approx(0.0).margin(1e-10));
}

TEST_CASE("gauss-legendre converges spectrally on smooth integrands") {
  auto rule = gauss_legendre(12, 0.0, pi);
  double q = 0.0;
  for (int i = 0; i < 12; ++i) q += rule.weights[i] * std::sin(rule.nodes[i]);
  REQUIRE(q == Catch::Approx(2.0).epsilon(1e-13));
}

TEST_CASE("adaptive simpson reaches the requested tolerance") {
  const double v = adaptive_simpson([](double x) { return std::exp(x); }, 0.0, 1.0, 1e-12);
  REQUIRE(v == Catch::Approx(std::exp(1.0) - 1.0).epsilon(1e-11));
}

TEST_CASE("invalid quadrature arguments are rejected") {
  REQUIRE_THROWS_AS(gauss_legendre(0), std::invalid_argument);
  REQUIRE_THROWS_AS(gauss_legendre(4, 2.0, -2.0), std::invalid_argument);
}
