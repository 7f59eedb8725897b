#pragma once

#include "scbo/common.hpp"
#include "scbo/gp.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace scbo {

enum class AcquisitionMethod { thompson, cei, random };

std::string to_string(AcquisitionMethod method);
/// Accepts "ts"/"thompson", "cei"/"ei", "random"/"rs".
AcquisitionMethod parse_acquisition_method(const std::string& name);

struct AcquisitionChoice {
  AcquisitionMethod method = AcquisitionMethod::thompson;
  int batch_size = 1;
};

/// Constrained Thompson selection over one realization.
///
/// `objective` holds r realized objective values, `constraints` is r x m
/// in units where <= 0 means feasible. Among eligible candidates the
/// realized-feasible argmin of the objective wins; if none is feasible the
/// minimum total violation wins with ties broken by the objective.
/// Returns the winning index (first one on exact ties).
Index select_thompson_index(const Vector& objective, const Matrix& constraints,
                            const std::vector<bool>& eligible);

/// Draws one joint realization per model for every batch slot and applies
/// select_thompson_index, excluding already chosen candidates. models[0]
/// is the objective, models[1..m] the constraints; constraint realizations
/// are de-standardized before the feasibility test.
///
/// Slot s consumes the generator as model 0 draw, model 1 draw, ... so it
/// matches calling sample_joint(models[k], candidates, 1, rng) in that
/// order.
std::vector<Index> select_batch_ts(std::span<const TrainedGP> models, const Matrix& candidates,
                                   int batch_size, Rng& rng);

/// E[max(best - f, 0)] for f ~ N(mean, sd^2).
double expected_improvement(double mean, double sd, double best);

/// cEI scores: EI over `best_feasible` (objective model's de-standardized
/// units) times the product of Phi(-mu_l / sigma_l). Without a feasible
/// incumbent the score is the feasibility probability alone.
Vector cei_scores(std::span<const TrainedGP> models, const Matrix& candidates,
                  std::optional<double> best_feasible);

/// Top batch_size distinct candidates by cEI score.
std::vector<Index> select_batch_cei(std::span<const TrainedGP> models, const Matrix& candidates,
                                    int batch_size, std::optional<double> best_feasible);

/// batch_size i.i.d. uniform points in the box [lower, upper], one per row.
Matrix select_batch_random(const Vector& lower, const Vector& upper, int batch_size, Rng& rng);

}  // namespace scbo
