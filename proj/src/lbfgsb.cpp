#include "scbo/lbfgsb.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

namespace scbo {

namespace {

Vector project(const Vector& x, const Vector& lo, const Vector& hi) {
  return x.cwiseMax(lo).cwiseMin(hi);
}

// Components that are pinned at a bound with the gradient pushing outward.
std::vector<bool> active_set(const Vector& x, const Vector& g, const Vector& lo,
                             const Vector& hi) {
  std::vector<bool> active(static_cast<std::size_t>(x.size()), false);
  for (Index i = 0; i < x.size(); ++i) {
    const auto k = static_cast<std::size_t>(i);
    active[k] = (x[i] <= lo[i] && g[i] > 0.0) || (x[i] >= hi[i] && g[i] < 0.0);
  }
  return active;
}

struct CurvaturePair {
  Vector s;
  Vector y;
  double rho;
};

Vector two_loop(const Vector& g, const std::deque<CurvaturePair>& pairs) {
  Vector q = g;
  std::vector<double> alpha(pairs.size());
  for (std::size_t k = pairs.size(); k-- > 0;) {
    alpha[k] = pairs[k].rho * pairs[k].s.dot(q);
    q -= alpha[k] * pairs[k].y;
  }
  if (!pairs.empty()) {
    const auto& last = pairs.back();
    q *= last.s.dot(last.y) / last.y.squaredNorm();
  }
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const double beta = pairs[k].rho * pairs[k].y.dot(q);
    q += (alpha[k] - beta) * pairs[k].s;
  }
  return -q;
}

}  // namespace

BoxMinimizeResult minimize_box(const BoxObjective& objective, Vector x0, const Vector& lo,
                               const Vector& hi, const BoxMinimizeOptions& options) {
  const Index n = x0.size();
  if (lo.size() != n || hi.size() != n) throw std::invalid_argument("minimize_box: bound size mismatch");
  if ((lo.array() > hi.array()).any()) throw std::invalid_argument("minimize_box: lo > hi");

  BoxMinimizeResult result;
  Vector x = project(x0, lo, hi);
  Vector g(n);
  double f = objective(x, g);
  ++result.evaluations;
  if (!std::isfinite(f)) {
    result.x = x;
    result.value = f;
    return result;
  }

  std::deque<CurvaturePair> pairs;
  Vector g_new(n);
  for (int it = 0; it < options.max_iterations; ++it) {
    result.iterations = it + 1;
    const auto active = active_set(x, g, lo, hi);
    Vector pg = g;
    for (Index i = 0; i < n; ++i)
      if (active[static_cast<std::size_t>(i)]) pg[i] = 0.0;
    if (pg.lpNorm<Eigen::Infinity>() < options.projected_gradient_tol) {
      result.converged = true;
      break;
    }

    Vector dir = two_loop(pg, pairs);
    for (Index i = 0; i < n; ++i)
      if (active[static_cast<std::size_t>(i)]) dir[i] = 0.0;
    double slope = g.dot(dir);
    if (!(slope < -1e-12 * g.norm() * dir.norm())) {
      pairs.clear();
      dir = -pg;
      slope = g.dot(dir);
    }

    double step = pairs.empty() ? std::min(1.0, 1.0 / pg.lpNorm<Eigen::Infinity>()) : 1.0;
    Vector x_new;
    double f_new = 0.0;
    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls) {
      x_new = project(x + step * dir, lo, hi);
      f_new = objective(x_new, g_new);
      ++result.evaluations;
      if (std::isfinite(f_new) && f_new <= f + 1e-4 * g.dot(x_new - x)) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;

    Vector s = x_new - x;
    Vector y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-10 * y.squaredNorm()) {
      pairs.push_back({std::move(s), std::move(y), 1.0 / sy});
      if (static_cast<int>(pairs.size()) > options.memory) pairs.pop_front();
    }
    const double decrease = f - f_new;
    x = std::move(x_new);
    g = g_new;
    f = f_new;
    if (decrease <= options.relative_decrease_tol * std::max({std::abs(f), std::abs(f + decrease), 1.0})) {
      result.converged = true;
      break;
    }
  }

  result.x = std::move(x);
  result.value = f;
  return result;
}

}  // namespace scbo
