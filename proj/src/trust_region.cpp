#include "scbo/trust_region.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "scbo/sobol.hpp"

namespace scbo {

TrustRegionConfig TrustRegionConfig::defaults(int dim, int batch_size) {
  if (dim < 1 || batch_size < 1) throw std::invalid_argument("TrustRegionConfig: dim and batch size must be >= 1");
  TrustRegionConfig c;
  c.success_tolerance = std::max(3, (dim + 9) / 10);
  c.failure_tolerance = (dim + batch_size - 1) / batch_size;
  return c;
}

Index candidate_count(int dim) { return std::min<Index>(200 * static_cast<Index>(dim), 5000); }

double perturbation_probability(int dim) { return std::min(1.0, 20.0 / static_cast<double>(dim)); }

MeritKey MeritKey::worst() {
  const double inf = std::numeric_limits<double>::infinity();
  return {false, inf, inf};
}

bool operator<(const MeritKey& a, const MeritKey& b) {
  if (a.feasible != b.feasible) return a.feasible;
  if (a.feasible) return a.objective < b.objective;
  if (a.total_violation != b.total_violation) return a.total_violation < b.total_violation;
  return a.objective < b.objective;
}

bool operator==(const MeritKey& a, const MeritKey& b) { return !(a < b) && !(b < a); }

double total_violation(const Vector& constraints) { return constraints.cwiseMax(0.0).sum(); }

MeritKey merit_key(double objective, const Vector& constraints) {
  const double violation = total_violation(constraints);
  return {(constraints.array() <= 0.0).all(), violation, objective};
}

bool improves(const MeritKey& candidate, const MeritKey& incumbent, const TrustRegionConfig& config) {
  if (candidate.feasible != incumbent.feasible) return candidate.feasible;
  const auto margin = [&](double v) {
    return std::isfinite(v) ? std::max(config.improvement_abs, config.improvement_rel * std::abs(v)) : 0.0;
  };
  if (candidate.feasible) {
    if (!std::isfinite(incumbent.objective)) return std::isfinite(candidate.objective);
    return candidate.objective < incumbent.objective - margin(incumbent.objective);
  }
  if (!std::isfinite(incumbent.total_violation)) return std::isfinite(candidate.total_violation);
  return candidate.total_violation < incumbent.total_violation - margin(incumbent.total_violation);
}

const char* to_string(TrustRegionEvent event) {
  switch (event) {
    case TrustRegionEvent::success: return "success";
    case TrustRegionEvent::failure: return "failure";
    case TrustRegionEvent::restart: return "restart";
  }
  return "unknown";
}

TrustRegionState TrustRegionState::fresh(const TrustRegionConfig& config, int restart_count) {
  TrustRegionState s;
  s.config = config;
  s.length = config.length_init;
  s.restart_count = restart_count;
  return s;
}

Vector TrustRegionState::lower() const {
  return (center.array() - length / 2.0).max(0.0).matrix();
}

Vector TrustRegionState::upper() const {
  return (center.array() + length / 2.0).min(1.0).matrix();
}

TrustRegionStep update(const TrustRegionState& state, std::span<const MeritKey> batch_keys,
                       const MeritKey& incumbent) {
  if (!state.live()) throw StateError("trust region update on a terminal state");
  if (batch_keys.empty()) throw std::invalid_argument("trust region update: empty batch");

  const auto best = static_cast<std::size_t>(
      std::min_element(batch_keys.begin(), batch_keys.end()) - batch_keys.begin());

  TrustRegionStep step{state, TrustRegionEvent::failure, std::nullopt};
  auto& s = step.state;
  if (improves(batch_keys[best], incumbent, s.config)) {
    ++s.successes;
    s.failures = 0;
    s.center_key = batch_keys[best];
    step.event = TrustRegionEvent::success;
    step.improving_index = best;
  } else {
    ++s.failures;
    s.successes = 0;
  }

  if (s.successes == s.config.success_tolerance) {
    s.length = std::min(2.0 * s.length, s.config.length_max);
    s.successes = 0;
    s.failures = 0;
  } else if (s.failures == s.config.failure_tolerance) {
    s.length /= 2.0;
    s.successes = 0;
    s.failures = 0;
  }
  if (!s.live()) step.event = TrustRegionEvent::restart;
  return step;
}

Matrix generate_candidates(const TrustRegionState& state, Rng& rng, std::optional<Index> count) {
  if (!state.live()) throw StateError("generate_candidates on a terminal trust region");
  const int d = state.dim();
  if (d < 1) throw StateError("generate_candidates: trust region has no center");
  const Index r = count.value_or(candidate_count(d));
  const double p = perturbation_probability(d);
  const Vector lb = state.lower();
  const Vector width = state.upper() - lb;

  ScrambledSobol sobol(d, split_seed(rng));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::uniform_int_distribution<int> pick(0, d - 1);
  Matrix out(r, d);
  std::vector<bool> mask(static_cast<std::size_t>(d));
  for (Index i = 0; i < r; ++i) {
    const Vector s = sobol.next();
    bool any = false;
    for (int k = 0; k < d; ++k) {
      mask[static_cast<std::size_t>(k)] = p >= 1.0 || unif(rng) < p;
      any = any || mask[static_cast<std::size_t>(k)];
    }
    if (!any) mask[static_cast<std::size_t>(pick(rng))] = true;
    for (int k = 0; k < d; ++k)
      out(i, k) = mask[static_cast<std::size_t>(k)] ? lb[k] + width[k] * s[k] : state.center[k];
  }
  return out;
}

Matrix sobol_points(Index count, int dim, Rng& rng) {
  ScrambledSobol sobol(dim, split_seed(rng));
  return sobol.draw(count);
}

RestartResult restart(const TrustRegionState& previous, int n_init, Rng& rng) {
  if (n_init < 1) throw std::invalid_argument("restart: n_init must be >= 1");
  const int d = previous.dim();
  if (d < 1) throw StateError("restart: previous region has no dimension");
  RestartResult out{TrustRegionState::fresh(previous.config, previous.restart_count + 1),
                    sobol_points(n_init, d, rng)};
  return out;
}

}  // namespace scbo
