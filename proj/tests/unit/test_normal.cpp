#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "scbo/normal.hpp"

using namespace scbo;

TEST_CASE("normal quantile reference values") {
  CHECK(normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(normal_quantile(0.25) == doctest::Approx(-0.674489750196082).epsilon(1e-14));
  CHECK(normal_quantile(0.75) == doctest::Approx(0.674489750196082).epsilon(1e-14));
  CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-14));
  CHECK(normal_quantile(1e-10) == doctest::Approx(-6.361340902404056).epsilon(1e-12));
  CHECK(std::isinf(normal_quantile(0.0)));
  CHECK(normal_quantile(0.0) < 0.0);
  CHECK(normal_quantile(1.0) > 0.0);
  CHECK_THROWS_AS(normal_quantile(-0.1), std::invalid_argument);
  CHECK_THROWS_AS(normal_quantile(1.5), std::invalid_argument);
}

TEST_CASE("quantile inverts the cdf") {
  for (double p = 1e-6; p < 1.0; p += 0.013) {
    const double z = normal_quantile(p);
    CHECK(normal_cdf(z) == doctest::Approx(p).epsilon(1e-12));
  }
  // Upper tail loses digits in 1 - cdf; test the lower tail where cdf is exact.
  for (double z = -8.0; z <= 2.0; z += 0.37) CHECK(normal_quantile(normal_cdf(z)) == doctest::Approx(z).epsilon(1e-9));
}

TEST_CASE("pdf and cdf") {
  CHECK(normal_pdf(0.0) == doctest::Approx(1.0 / std::sqrt(2.0 * M_PI)));
  CHECK(normal_cdf(0.0) == doctest::Approx(0.5));
  CHECK(normal_cdf(-1.0) == doctest::Approx(0.15865525393145707));
  // Tail accuracy through erfc.
  CHECK(normal_cdf(-10.0) == doctest::Approx(7.619853024160527e-24).epsilon(1e-12));
}
