#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "drml/common.hpp"
#include "drml/rng.hpp"
#include "drml/sensitivity.hpp"

TEST_CASE("no defiers or equal effects leave the estimand unchanged") {
  for (double d2 : {-2.0, -0.3, 0.0, 1.7}) {
    CHECK(drml::xi(-0.04, 0.5, 0.0, d2) == -0.04);
  }
  for (double d1 : {0.0, 0.3, 1.0}) {
    CHECK(drml::xi(-0.04, 0.5, d1, 0.0) == -0.04);
  }
}

TEST_CASE("worked arithmetic case crosses zero") {
  CHECK(drml::xi(-0.04, 0.5, 0.25, 0.08) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("zero first stage and out-of-range defier share are rejected") {
  CHECK_THROWS_AS(drml::xi(0.1, 0.0, 0.2, 0.2), drml::estimation_error);
  CHECK_THROWS_AS(drml::xi(0.1, 0.5, 1.2, 0.2), drml::input_error);
  CHECK_THROWS_AS(drml::xi(0.1, 0.5, -0.1, 0.2), drml::input_error);
}

TEST_CASE("the shift is bilinear in the defier parameters") {
  drml::Rng rng(12);
  for (int trial = 0; trial < 500; ++trial) {
    const double chi = rng.normal();
    const double delta = rng.uniform(0.1, 0.9);
    const double d1 = rng.uniform01();
    const double d2 = rng.uniform(-2.0, 2.0);
    const double c = rng.uniform01();
    const double scaled = drml::xi(chi, delta, c * d1, d2) - chi;
    const double base = drml::xi(chi, delta, d1, d2) - chi;
    CHECK(scaled == doctest::Approx(c * base).epsilon(1e-10));
  }
}

TEST_CASE("surface grid matches the closed form cell by cell") {
  const drml::SensitivitySurface surface = drml::sensitivity_surface(-0.04, 0.5);
  REQUIRE(surface.delta1_grid.size() == 101);
  REQUIRE(surface.delta2_grid.size() == 161);
  CHECK(surface.delta1_grid.front() == 0.0);
  CHECK(surface.delta1_grid.back() == 1.0);
  CHECK(surface.delta2_grid.front() == -2.0);
  CHECK(surface.delta2_grid.back() == 2.0);
  for (std::size_t i = 0; i < surface.delta1_grid.size(); i += 13) {
    for (std::size_t j = 0; j < surface.delta2_grid.size(); j += 17) {
      const double expected = -0.04 + surface.delta1_grid[i] *
                                          surface.delta2_grid[j] / 0.5;
      CHECK(surface.xi_values[i][j] == doctest::Approx(expected).epsilon(1e-14));
    }
  }
}

TEST_CASE("frontier solves for the sign change exactly") {
  const drml::SensitivitySurface surface = drml::sensitivity_surface(-0.04, 0.5);
  CHECK_FALSE(surface.frontier.empty());
  double previous = 1e300;
  for (const auto& [d1, d2] : surface.frontier) {
    CHECK(std::fabs(drml::xi(-0.04, 0.5, d1, d2)) < 1e-12);
    CHECK(std::fabs(d1 * d2 - 0.04 * 0.5) < 1e-12);
    CHECK(std::fabs(d2) < previous + 1e-15);  // shrinks as defiers grow
    previous = std::fabs(d2);
  }
  // The worked example: a tenth of defiers flips sign at a gap of 0.2.
  bool found = false;
  for (const auto& [d1, d2] : surface.frontier) {
    if (std::fabs(d1 - 0.1) < 1e-12) {
      CHECK(d2 == doctest::Approx(0.2).epsilon(1e-12));
      found = true;
    }
  }
  CHECK(found);
}

TEST_CASE("null estimate degenerates the frontier to the axes") {
  const drml::SensitivitySurface surface = drml::sensitivity_surface(0.0, 0.5);
  for (const auto& [d1, d2] : surface.frontier) {
    CHECK(d2 == 0.0);
  }
  for (std::size_t i = 0; i < surface.delta1_grid.size(); i += 10) {
    for (std::size_t j = 0; j < surface.delta2_grid.size(); j += 16) {
      const double sign_expected =
          surface.delta1_grid[i] * surface.delta2_grid[j] / 0.5;
      if (sign_expected == 0.0) {
        CHECK(surface.xi_values[i][j] == 0.0);
      } else {
        CHECK(std::signbit(surface.xi_values[i][j]) ==
              std::signbit(sign_expected));
      }
    }
  }
}
