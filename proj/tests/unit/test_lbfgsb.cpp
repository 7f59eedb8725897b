#include <doctest.h>

#include <cmath>

#include "scbo/lbfgsb.hpp"

using namespace scbo;

TEST_CASE("unconstrained quadratic") {
  const BoxObjective f = [](const Vector& x, Vector& g) {
    g = 2.0 * (x.array() - 3.0).matrix();
    return (x.array() - 3.0).square().sum();
  };
  const Vector lo = Vector::Constant(4, -10.0), hi = Vector::Constant(4, 10.0);
  const auto res = minimize_box(f, Vector::Zero(4), lo, hi);
  CHECK(res.converged);
  for (Index i = 0; i < 4; ++i) CHECK(res.x[i] == doctest::Approx(3.0).epsilon(1e-6));
}

TEST_CASE("active bounds") {
  const BoxObjective f = [](const Vector& x, Vector& g) {
    g = 2.0 * (x.array() - 3.0).matrix();
    return (x.array() - 3.0).square().sum();
  };
  Vector lo(2), hi(2);
  lo << -1.0, -1.0;
  hi << 1.0, 5.0;
  const auto res = minimize_box(f, Vector::Zero(2), lo, hi);
  CHECK(res.x[0] == doctest::Approx(1.0));
  CHECK(res.x[1] == doctest::Approx(3.0).epsilon(1e-6));
}

TEST_CASE("rosenbrock valley") {
  const BoxObjective f = [](const Vector& x, Vector& g) {
    const double a = 1.0 - x[0], b = x[1] - x[0] * x[0];
    g.resize(2);
    g[0] = -2.0 * a - 400.0 * x[0] * b;
    g[1] = 200.0 * b;
    return a * a + 100.0 * b * b;
  };
  BoxMinimizeOptions opts;
  opts.max_iterations = 500;
  opts.relative_decrease_tol = 0.0;
  const auto res = minimize_box(f, Vector::Constant(2, -1.2), Vector::Constant(2, -2.0),
                                Vector::Constant(2, 2.0), opts);
  CHECK(res.x[0] == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(res.x[1] == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("start outside the box is projected") {
  const BoxObjective f = [](const Vector& x, Vector& g) {
    g = x;
    return 0.5 * x.squaredNorm();
  };
  const auto res = minimize_box(f, Vector::Constant(3, 9.0), Vector::Constant(3, 1.0), Vector::Constant(3, 2.0));
  for (Index i = 0; i < 3; ++i) CHECK(res.x[i] == doctest::Approx(1.0));
}
