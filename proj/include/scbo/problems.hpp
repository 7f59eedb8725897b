#pragma once

#include "scbo/common.hpp"

#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace scbo {

struct Evaluation {
  double objective = 0.0;
  Vector constraints;
};

struct KnownOptimum {
  double value = 0.0;
  Vector location;
};

/// min f(x) s.t. c_l(x) <= 0 over the box [lower, upper].
struct ProblemSpec {
  std::string name;
  int dim = 0;
  Vector lower;
  Vector upper;
  int constraint_count = 0;
  // Takes a point in original units.
  std::function<Evaluation(const Vector&)> evaluate;
  std::optional<KnownOptimum> known_optimum;
  std::optional<double> default_infeasible_value;

  Vector from_unit(const Vector& unit) const;
  Vector to_unit(const Vector& point) const;
  Matrix from_unit(const Matrix& unit) const;
  /// Maps from the unit cube and evaluates; checks the reply shape.
  Evaluation evaluate_unit(const Vector& unit) const;
  /// Throws std::invalid_argument if the box or sizes are inconsistent.
  void validate() const;
};

ProblemSpec ackley10();
ProblemSpec keane30();
ProblemSpec toy2d();
ProblemSpec rosenbrock5();

double ackley(const Vector& x);
double keane_bump(const Vector& x);
double rosenbrock(const Vector& x);
double dixon_price(const Vector& x);
double levy(const Vector& x);

std::vector<std::string> problem_names();
/// Registry lookup; throws std::invalid_argument for unknown names.
ProblemSpec make_problem(const std::string& name);

struct ExternalCommand {
  // Run through /bin/sh -c.
  std::string command;
  std::chrono::milliseconds timeout{60000};
};

/// Problem backed by a subprocess speaking the line-delimited JSON
/// protocol: the child first prints {"d": int, "m": int}; each request
/// {"x": [...]} gets one reply {"objective": f, "constraints": [...]}.
/// The process is started lazily on first evaluation and reused.
ProblemSpec external_problem(const ExternalCommand& command, int dim, int constraint_count,
                             Vector lower, Vector upper, std::string name = "external");

/// Random Latin hypercube design: each coordinate's n values fall in
/// distinct strata [k/n, (k+1)/n).
Matrix latin_hypercube(int n, int dim, Rng& rng);

struct VolumeEstimate {
  std::uint64_t samples = 0;
  std::uint64_t feasible = 0;
  double fraction = 0.0;
  double standard_error = 0.0;
};

/// Monte Carlo estimate of the feasible fraction of the domain under
/// uniform sampling.
VolumeEstimate feasible_volume(const ProblemSpec& problem, std::uint64_t samples, std::uint64_t seed);

}  // namespace scbo
