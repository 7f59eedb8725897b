#include "scbo/problems.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace scbo {

namespace {

constexpr double kPi = std::numbers::pi;

ProblemSpec box_problem(std::string name, int dim, double lo, double hi, int m) {
  ProblemSpec p;
  p.name = std::move(name);
  p.dim = dim;
  p.lower = Vector::Constant(dim, lo);
  p.upper = Vector::Constant(dim, hi);
  p.constraint_count = m;
  return p;
}

}  // namespace

Vector ProblemSpec::from_unit(const Vector& unit) const {
  return (lower.array() + (upper - lower).array() * unit.array()).matrix();
}

Vector ProblemSpec::to_unit(const Vector& point) const {
  return ((point - lower).array() / (upper - lower).array()).matrix();
}

Matrix ProblemSpec::from_unit(const Matrix& unit) const {
  Matrix out(unit.rows(), unit.cols());
  for (Index i = 0; i < unit.rows(); ++i) out.row(i) = from_unit(Vector(unit.row(i).transpose())).transpose();
  return out;
}

Evaluation ProblemSpec::evaluate_unit(const Vector& unit) const {
  Evaluation e = evaluate(from_unit(unit));
  if (e.constraints.size() != constraint_count)
    throw EvaluationError(name + ": evaluator returned " + std::to_string(e.constraints.size()) +
                          " constraint values, expected " + std::to_string(constraint_count));
  return e;
}

void ProblemSpec::validate() const {
  if (dim < 1) throw std::invalid_argument(name + ": dimension must be >= 1");
  if (lower.size() != dim || upper.size() != dim) throw std::invalid_argument(name + ": bounds size mismatch");
  if (!(lower.array() < upper.array()).all()) throw std::invalid_argument(name + ": need lower < upper");
  if (constraint_count < 0) throw std::invalid_argument(name + ": negative constraint count");
  if (!evaluate) throw std::invalid_argument(name + ": no evaluator");
}

double ackley(const Vector& x) {
  const double d = static_cast<double>(x.size());
  const double sq = x.squaredNorm() / d;
  const double cs = (2.0 * kPi * x.array()).cos().sum() / d;
  return -20.0 * std::exp(-0.2 * std::sqrt(sq)) - std::exp(cs) + 20.0 + std::numbers::e;
}

double keane_bump(const Vector& x) {
  double sum_cos4 = 0.0;
  double prod_cos2 = 1.0;
  double weighted = 0.0;
  for (Index i = 0; i < x.size(); ++i) {
    const double c2 = std::pow(std::cos(x[i]), 2);
    sum_cos4 += c2 * c2;
    prod_cos2 *= c2;
    weighted += static_cast<double>(i + 1) * x[i] * x[i];
  }
  // Singular at the origin; the limit convention there is f = 0.
  if (weighted == 0.0) return 0.0;
  return -std::abs((sum_cos4 - 2.0 * prod_cos2) / std::sqrt(weighted));
}

double rosenbrock(const Vector& x) {
  double f = 0.0;
  for (Index i = 0; i + 1 < x.size(); ++i)
    f += 100.0 * std::pow(x[i + 1] - x[i] * x[i], 2) + std::pow(x[i] - 1.0, 2);
  return f;
}

double dixon_price(const Vector& x) {
  double f = std::pow(x[0] - 1.0, 2);
  for (Index i = 1; i < x.size(); ++i)
    f += static_cast<double>(i + 1) * std::pow(2.0 * x[i] * x[i] - x[i - 1], 2);
  return f;
}

double levy(const Vector& x) {
  const Vector w = (1.0 + (x.array() - 1.0) / 4.0).matrix();
  const Index d = w.size();
  double f = std::pow(std::sin(kPi * w[0]), 2);
  for (Index i = 0; i + 1 < d; ++i)
    f += std::pow(w[i] - 1.0, 2) * (1.0 + 10.0 * std::pow(std::sin(kPi * w[i] + 1.0), 2));
  f += std::pow(w[d - 1] - 1.0, 2) * (1.0 + std::pow(std::sin(2.0 * kPi * w[d - 1]), 2));
  return f;
}

ProblemSpec ackley10() {
  auto p = box_problem("ackley10", 10, -5.0, 10.0, 2);
  p.evaluate = [](const Vector& x) {
    Vector c(2);
    c << x.sum(), x.norm() - 5.0;
    return Evaluation{ackley(x), std::move(c)};
  };
  p.known_optimum = KnownOptimum{0.0, Vector::Zero(10)};
  return p;
}

ProblemSpec keane30() {
  constexpr int d = 30;
  auto p = box_problem("keane30", d, 0.0, 10.0, 2);
  p.evaluate = [](const Vector& x) {
    Vector c(2);
    c << 0.75 - x.prod(), x.sum() - 7.5 * static_cast<double>(x.size());
    return Evaluation{keane_bump(x), std::move(c)};
  };
  return p;
}

ProblemSpec toy2d() {
  auto p = box_problem("toy2d", 2, 0.0, 1.0, 2);
  p.evaluate = [](const Vector& x) {
    Vector c(2);
    c << 1.5 - x[0] - 2.0 * x[1] - 0.5 * std::sin(2.0 * kPi * (x[0] * x[0] - 2.0 * x[1])),
        x[0] * x[0] + x[1] * x[1] - 1.5;
    return Evaluation{x[0] + x[1], std::move(c)};
  };
  return p;
}

ProblemSpec rosenbrock5() {
  auto p = box_problem("rosenbrock5", 5, -3.0, 5.0, 2);
  p.evaluate = [](const Vector& x) {
    Vector c(2);
    c << dixon_price(x) - 10.0, levy(x) - 10.0;
    return Evaluation{rosenbrock(x), std::move(c)};
  };
  return p;
}

std::vector<std::string> problem_names() { return {"ackley10", "keane30", "rosenbrock5", "toy2d"}; }

ProblemSpec make_problem(const std::string& name) {
  if (name == "ackley10") return ackley10();
  if (name == "keane30") return keane30();
  if (name == "toy2d") return toy2d();
  if (name == "rosenbrock5") return rosenbrock5();
  throw std::invalid_argument("unknown problem '" + name + "'");
}

Matrix latin_hypercube(int n, int dim, Rng& rng) {
  if (n < 1 || dim < 1) throw std::invalid_argument("latin_hypercube: n and dim must be >= 1");
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Matrix out(n, dim);
  std::vector<int> perm(static_cast<std::size_t>(n));
  for (int k = 0; k < dim; ++k) {
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    for (int i = 0; i < n; ++i) {
      const double v = (perm[static_cast<std::size_t>(i)] + unif(rng)) / static_cast<double>(n);
      // Guard against rounding up into the next stratum.
      out(i, k) = std::min(v, std::nextafter((perm[static_cast<std::size_t>(i)] + 1.0) / n, 0.0));
    }
  }
  return out;
}

VolumeEstimate feasible_volume(const ProblemSpec& problem, std::uint64_t samples, std::uint64_t seed) {
  problem.validate();
  if (samples == 0) throw std::invalid_argument("feasible_volume: need at least one sample");
  Rng rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Vector unit(problem.dim);
  VolumeEstimate est;
  est.samples = samples;
  for (std::uint64_t s = 0; s < samples; ++s) {
    for (int k = 0; k < problem.dim; ++k) unit[k] = unif(rng);
    const auto e = problem.evaluate_unit(unit);
    if ((e.constraints.array() <= 0.0).all()) ++est.feasible;
  }
  const double n = static_cast<double>(samples);
  est.fraction = static_cast<double>(est.feasible) / n;
  est.standard_error = std::sqrt(est.fraction * (1.0 - est.fraction) / n);
  return est;
}

}  // namespace scbo
