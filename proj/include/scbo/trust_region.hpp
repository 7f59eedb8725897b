#pragma once

#include "scbo/common.hpp"

#include <compare>
#include <optional>
#include <span>

namespace scbo {

struct TrustRegionConfig {
  double length_init = 0.8;
  double length_min = 0x1p-7;
  double length_max = 1.6;
  int success_tolerance = 3;
  int failure_tolerance = 1;
  // A batch counts as a success only if it beats the incumbent by more than
  // max(improvement_abs, improvement_rel * |incumbent value|).
  double improvement_rel = 1e-3;
  double improvement_abs = 1e-8;

  /// tau_s = max(3, ceil(d / 10)), tau_f = ceil(d / q).
  static TrustRegionConfig defaults(int dim, int batch_size);
};

/// min(200 d, 5000)
Index candidate_count(int dim);
/// min(1, 20 / d)
double perturbation_probability(int dim);

/// Feasible-first ranking key. Smaller is better.
struct MeritKey {
  bool feasible = false;
  double total_violation = 0.0;
  double objective = 0.0;

  static MeritKey worst();
};

/// Strict "better than" ordering: feasible beats infeasible; feasible keys
/// compare by objective; infeasible keys by violation, then objective.
bool operator<(const MeritKey& a, const MeritKey& b);
bool operator==(const MeritKey& a, const MeritKey& b);

double total_violation(const Vector& constraints);
MeritKey merit_key(double objective, const Vector& constraints);

/// True when `candidate` beats `incumbent` by more than the minimum
/// improvement margin (a feasible candidate always beats an infeasible
/// incumbent).
bool improves(const MeritKey& candidate, const MeritKey& incumbent, const TrustRegionConfig& config);

enum class TrustRegionEvent { success, failure, restart };
const char* to_string(TrustRegionEvent event);

struct TrustRegionState {
  TrustRegionConfig config;
  Vector center;  // unit cube
  MeritKey center_key = MeritKey::worst();
  double length = 0.8;
  int successes = 0;
  int failures = 0;
  int restart_count = 0;

  static TrustRegionState fresh(const TrustRegionConfig& config, int restart_count = 0);

  bool live() const { return length >= config.length_min; }
  int dim() const { return static_cast<int>(center.size()); }
  /// Lower / upper corners of the region clipped to [0, 1]^d.
  Vector lower() const;
  Vector upper() const;
};

struct TrustRegionStep {
  TrustRegionState state;
  TrustRegionEvent event = TrustRegionEvent::failure;
  // Index of the best batch entry when the batch was a success. The caller
  // moves state.center to that point.
  std::optional<std::size_t> improving_index;
};

/// Success/failure bookkeeping and resizing after one evaluated batch.
/// Throws StateError when `state` is terminal.
TrustRegionStep update(const TrustRegionState& state, std::span<const MeritKey> batch_keys,
                       const MeritKey& incumbent);

/// candidate_count(d) candidates inside the region. Each coordinate takes
/// the scrambled-Sobol value with probability perturbation_probability(d)
/// and the center value otherwise; at least one coordinate is perturbed.
Matrix generate_candidates(const TrustRegionState& state, Rng& rng,
                           std::optional<Index> count = std::nullopt);

/// Scrambled Sobol points covering the whole unit cube.
Matrix sobol_points(Index count, int dim, Rng& rng);

struct RestartResult {
  TrustRegionState state;
  Matrix initial_design;  // n_init x d, unit cube
};

/// Fresh region (L = L_init, counters cleared, restart_count + 1) and a
/// new Sobol initial design. The center is assigned once the design has
/// been evaluated.
RestartResult restart(const TrustRegionState& previous, int n_init, Rng& rng);

}  // namespace scbo
