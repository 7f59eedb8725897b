#include <doctest.h>

#include <cmath>
#include <set>
#include <string>

#include "oracles.hpp"
#include "scbo/problems.hpp"

using namespace scbo;

namespace {

std::string script(const std::string& name, const std::string& args = "") {
  return "python3 " + std::string(SCBO_TEST_DATA) + "/" + name + " " + args;
}

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

}  // namespace

TEST_CASE("ackley10") {
  const auto p = ackley10();
  CHECK(p.dim == 10);
  CHECK(p.constraint_count == 2);
  CHECK(p.lower[0] == -5.0);
  CHECK(p.upper[9] == 10.0);
  const auto at0 = p.evaluate(Vector::Zero(10));
  CHECK(std::abs(at0.objective) < 1e-12);
  CHECK(at0.constraints[0] == 0.0);
  CHECK(at0.constraints[1] == -5.0);
  const auto at1 = p.evaluate(Vector::Ones(10));
  CHECK(at1.objective == doctest::Approx(20.0 - 20.0 * std::exp(-0.2)).epsilon(1e-13));
  CHECK(at1.constraints[0] == 10.0);
  CHECK(at1.constraints[1] == doctest::Approx(std::sqrt(10.0) - 5.0));
  REQUIRE(p.known_optimum.has_value());
  CHECK(p.known_optimum->value == 0.0);
}

TEST_CASE("keane30") {
  const auto p = keane30();
  CHECK(p.dim == 30);
  const auto at1 = p.evaluate(Vector::Ones(30));
  const double c = std::cos(1.0);
  const double expected = -std::abs((30.0 * std::pow(c, 4) - 2.0 * std::pow(c, 60)) / std::sqrt(465.0));
  CHECK(at1.objective == doctest::Approx(expected).epsilon(1e-13));
  CHECK(at1.constraints[0] == doctest::Approx(-0.25));
  CHECK(at1.constraints[1] == doctest::Approx(-195.0));
  const auto at0 = p.evaluate(Vector::Zero(30));
  CHECK(at0.objective == 0.0);
  CHECK(at0.constraints[0] == 0.75);
}

TEST_CASE("toy2d") {
  const auto p = toy2d();
  const auto a = p.evaluate(vec({1.0, 1.0}));
  CHECK(a.objective == 2.0);
  CHECK(a.constraints[1] == doctest::Approx(0.5));
  const auto b = p.evaluate(vec({0.0, 0.0}));
  CHECK(b.constraints[0] == doctest::Approx(1.5));
  const auto c = p.evaluate(vec({0.3, 0.6}));
  CHECK(c.constraints[0] ==
        doctest::Approx(1.5 - 0.3 - 1.2 - 0.5 * std::sin(2.0 * M_PI * (0.09 - 1.2))).epsilon(1e-14));
  const auto opt = oracle::grid_optimum(p, 1001);
  CHECK(std::isfinite(opt.value));
  CHECK(opt.value > 0.0);
  CHECK(opt.value < 1.0);
}

TEST_CASE("rosenbrock5 with Dixon-Price and Levy constraints") {
  const auto p = rosenbrock5();
  const auto at1 = p.evaluate(Vector::Ones(5));
  CHECK(at1.objective == 0.0);
  // (x1-1)^2 + sum_{i>=2} i (2 x_i^2 - x_{i-1})^2 at ones: 2+3+4+5.
  CHECK(at1.constraints[0] == doctest::Approx(4.0));
  CHECK(std::abs(at1.constraints[1] + 10.0) < 1e-12);
  CHECK(rosenbrock(vec({0.0, 0.0})) == 1.0);
  CHECK(dixon_price(vec({0.0, 0.0})) == 1.0);
  // Levy in 1D at x = 0: w = 0.75.
  const double w = 0.75;
  CHECK(levy(vec({0.0})) ==
        doctest::Approx(std::pow(std::sin(M_PI * w), 2) +
                        std::pow(w - 1.0, 2) * (1.0 + std::pow(std::sin(2.0 * M_PI * w), 2))));
}

TEST_CASE("registry") {
  for (const auto& name : problem_names()) CHECK(make_problem(name).name == name);
  CHECK_THROWS_AS(make_problem("branin"), std::invalid_argument);
}

TEST_CASE("unit cube mapping round trip") {
  const auto p = ackley10();
  Rng rng(1);
  const Matrix u = latin_hypercube(5, 10, rng);
  for (Index i = 0; i < 5; ++i) {
    const Vector x = p.from_unit(Vector(u.row(i).transpose()));
    CHECK((x.array() >= -5.0).all());
    CHECK((x.array() <= 10.0).all());
    CHECK((p.to_unit(x) - u.row(i).transpose()).norm() < 1e-14);
  }
  CHECK(p.from_unit(Vector(Vector::Zero(10))) == p.lower);
}

TEST_CASE("latin hypercube strata") {
  Rng rng(7);
  const Matrix q = latin_hypercube(4, 1, rng);
  std::set<int> quarters;
  for (Index i = 0; i < 4; ++i) quarters.insert(static_cast<int>(q(i, 0) * 4));
  CHECK(quarters == std::set<int>{0, 1, 2, 3});
  for (int n : {1, 7, 50}) {
    const Matrix x = latin_hypercube(n, 6, rng);
    for (int k = 0; k < 6; ++k) {
      std::set<int> strata;
      for (Index i = 0; i < n; ++i) strata.insert(static_cast<int>(std::floor(x(i, k) * n)));
      CHECK(static_cast<int>(strata.size()) == n);
      CHECK(*strata.begin() == 0);
      CHECK(*strata.rbegin() == n - 1);
    }
  }
  Rng a(3), b(3);
  CHECK(latin_hypercube(9, 2, a) == latin_hypercube(9, 2, b));
  CHECK_THROWS_AS(latin_hypercube(0, 2, a), std::invalid_argument);
}

TEST_CASE("feasible volume of toy2d against the grid") {
  const auto est = feasible_volume(toy2d(), 200000, 1);
  int feasible = 0;
  const auto p = toy2d();
  Vector x(2);
  for (int i = 0; i < 500; ++i)
    for (int j = 0; j < 500; ++j) {
      x << (i + 0.5) / 500.0, (j + 0.5) / 500.0;
      feasible += (p.evaluate(x).constraints.array() <= 0.0).all();
    }
  CHECK(std::abs(est.fraction - feasible / 250000.0) < 5 * est.standard_error + 2e-3);
}

TEST_CASE("external evaluator round trip") {
  ExternalCommand cmd{script("echo_evaluator.py", "3"), std::chrono::milliseconds(20000)};
  const auto p = external_problem(cmd, 3, 1, Vector::Zero(3), Vector::Ones(3), "echo");
  for (int rep = 0; rep < 3; ++rep) {
    const Vector x = vec({0.1, 0.2, 1.0 / 3.0 + rep});
    const auto e = p.evaluate(x);
    CHECK(e.objective == x.sum());
    CHECK(e.constraints.size() == 1);
    CHECK(e.constraints[0] == -1.0);
  }
}

TEST_CASE("external evaluator protocol errors") {
  SUBCASE("reply with wrong constraint count") {
    ExternalCommand cmd{script("wrong_m_evaluator.py"), std::chrono::milliseconds(20000)};
    const auto p = external_problem(cmd, 2, 1, Vector::Zero(2), Vector::Ones(2));
    CHECK_THROWS_AS(p.evaluate(vec({0.5, 0.5})), EvaluationError);
  }
  SUBCASE("handshake mismatch") {
    ExternalCommand cmd{script("echo_evaluator.py", "2"), std::chrono::milliseconds(20000)};
    const auto p = external_problem(cmd, 2, 2, Vector::Zero(2), Vector::Ones(2));
    CHECK_THROWS_AS(p.evaluate(vec({0.5, 0.5})), EvaluationError);
  }
  SUBCASE("process exits") {
    ExternalCommand cmd{script("dying_evaluator.py", "1"), std::chrono::milliseconds(20000)};
    const auto p = external_problem(cmd, 2, 1, Vector::Zero(2), Vector::Ones(2));
    CHECK_NOTHROW(p.evaluate(vec({0.5, 0.5})));
    CHECK_THROWS_AS(p.evaluate(vec({0.5, 0.5})), EvaluationError);
    CHECK_THROWS_AS(p.evaluate(vec({0.5, 0.5})), EvaluationError);
  }
  SUBCASE("timeout") {
    ExternalCommand cmd{script("silent_evaluator.py"), std::chrono::milliseconds(300)};
    const auto p = external_problem(cmd, 2, 1, Vector::Zero(2), Vector::Ones(2));
    CHECK_THROWS_AS(p.evaluate(vec({0.5, 0.5})), EvaluationError);
  }
  SUBCASE("missing command") {
    ExternalCommand cmd{"/nonexistent/evaluator", std::chrono::milliseconds(5000)};
    const auto p = external_problem(cmd, 2, 1, Vector::Zero(2), Vector::Ones(2));
    CHECK_THROWS_AS(p.evaluate(vec({0.5, 0.5})), EvaluationError);
  }
}
