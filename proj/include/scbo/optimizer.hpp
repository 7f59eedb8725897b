#pragma once

#include "scbo/acquisition.hpp"
#include "scbo/common.hpp"
#include "scbo/gp.hpp"
#include "scbo/problems.hpp"
#include "scbo/transforms.hpp"
#include "scbo/trust_region.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace scbo {

struct RunConfig {
  ProblemSpec problem;
  int budget = 100;
  int batch_size = 1;
  int n_init = 10;
  std::uint64_t seed = 0;
  AcquisitionMethod method = AcquisitionMethod::thompson;
  bool use_transforms = true;
  bool use_trust_region = true;
  // Feasibility risk level for the noisy recommendation rule.
  double delta = 0.05;
  // Trust-region decisions and the recommendation use posterior means
  // instead of observed values.
  bool noisy_observations = false;
  // Overrides L_min (used by the restart stress test).
  std::optional<double> length_min;
  GPFitConfig gp;

  /// Throws std::invalid_argument when the configuration is unusable.
  void validate() const;
};

struct EvaluationRecord {
  int eval_index = 0;
  Vector point;  // original units
  double objective = 0.0;
  Vector constraints;
  bool feasible = false;
  // Best evaluation so far under the merit ordering (raw constraint scale).
  MeritKey incumbent;
  // Trust-region side length and restart count when the point was chosen
  // (NaN length in global mode).
  double length = 0.0;
  int restart_count = 0;
};

struct RegionRecord {
  int index = 0;
  int first_eval = 0;
  int batches = 0;
  int successes = 0;
  bool terminated = false;
  double final_length = 0.0;
  Matrix initial_design;  // unit cube
};

struct RunHistory {
  RunConfig config;
  std::vector<EvaluationRecord> records;
  std::vector<RegionRecord> regions;
  bool completed = true;
  std::string error;
  // Index into records of the recommended point, if any.
  std::optional<std::size_t> recommendation;

  /// Best feasible objective after each evaluation (+inf before the first
  /// feasible point).
  std::vector<double> best_feasible_trace() const;
};

/// Runs the constrained trust-region BO loop (or a baseline, depending on
/// method and toggles) until the evaluation budget is spent. Evaluation
/// failures stop the run and are reported in RunHistory::error.
RunHistory run(const RunConfig& config);

/// Best observed feasible point (original units), or none.
std::optional<Vector> recommend(const RunHistory& history);

/// Among `unit_points`, those whose predicted feasibility probability
/// prod_l Phi(-mu_l / sigma_l) is at least 1 - delta; returns the one with
/// minimum posterior objective mean. models[0] is the objective.
std::optional<Index> recommend_noisy(std::span<const TrainedGP> models, const Matrix& unit_points,
                                     double delta);

struct ConsistencyTrace {
  RunHistory history;
  std::vector<double> best_feasible;
};

/// Long toy2d run with a raised L_min so that regions restart often.
ConsistencyTrace consistency_stress(int budget, double length_min, std::uint64_t seed, int n_init = 10);

}  // namespace scbo
