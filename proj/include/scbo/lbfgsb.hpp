#pragma once

#include "scbo/common.hpp"

#include <functional>

namespace scbo {

struct BoxMinimizeOptions {
  int max_iterations = 100;
  int memory = 10;
  // Stop when the infinity norm of the projected gradient falls below this.
  double projected_gradient_tol = 1e-5;
  // Stop when an accepted step reduces f by less than this (relative).
  double relative_decrease_tol = 1e-10;
};

struct BoxMinimizeResult {
  Vector x;
  double value = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
};

// Returns f(x) and writes the gradient into `grad` (already sized). May
// return a non-finite value to reject a point; the line search backs off.
using BoxObjective = std::function<double(const Vector& x, Vector& grad)>;

/// Limited-memory quasi-Newton minimization subject to lo <= x <= hi.
///
/// Variables sitting on a bound with the gradient pointing outward are
/// frozen for the iteration; the search direction is the two-loop L-BFGS
/// direction restricted to the free variables, followed by a projected
/// backtracking (Armijo) line search. Infinite bounds are allowed.
BoxMinimizeResult minimize_box(const BoxObjective& objective, Vector x0, const Vector& lo,
                               const Vector& hi, const BoxMinimizeOptions& options = {});

}  // namespace scbo
