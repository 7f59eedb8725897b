#include "scbo/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "scbo/normal.hpp"

namespace scbo {

std::string to_string(AcquisitionMethod method) {
  switch (method) {
    case AcquisitionMethod::thompson: return "ts";
    case AcquisitionMethod::cei: return "cei";
    case AcquisitionMethod::random: return "random";
  }
  return "unknown";
}

AcquisitionMethod parse_acquisition_method(const std::string& name) {
  if (name == "ts" || name == "thompson") return AcquisitionMethod::thompson;
  if (name == "cei" || name == "ei") return AcquisitionMethod::cei;
  if (name == "random" || name == "rs") return AcquisitionMethod::random;
  throw std::invalid_argument("unknown acquisition method '" + name + "'");
}

namespace {

void check_batch(std::span<const TrainedGP> models, const Matrix& candidates, int batch_size) {
  if (models.empty()) throw std::invalid_argument("acquisition: need at least the objective model");
  if (batch_size < 1) throw std::invalid_argument("acquisition: batch size must be >= 1");
  if (candidates.rows() < batch_size)
    throw std::invalid_argument("acquisition: fewer candidates than batch slots");
}

}  // namespace

Index select_thompson_index(const Vector& objective, const Matrix& constraints,
                            const std::vector<bool>& eligible) {
  const Index r = objective.size();
  if (constraints.rows() != r || static_cast<Index>(eligible.size()) != r)
    throw std::invalid_argument("select_thompson_index: shape mismatch");

  Index best_feasible = -1;
  Index best_infeasible = -1;
  double best_violation = 0.0;
  for (Index i = 0; i < r; ++i) {
    if (!eligible[static_cast<std::size_t>(i)]) continue;
    const double violation = constraints.row(i).cwiseMax(0.0).sum();
    if (violation == 0.0 && (constraints.row(i).array() <= 0.0).all()) {
      if (best_feasible < 0 || objective[i] < objective[best_feasible]) best_feasible = i;
    } else if (best_feasible < 0) {
      if (best_infeasible < 0 || violation < best_violation ||
          (violation == best_violation && objective[i] < objective[best_infeasible])) {
        best_infeasible = i;
        best_violation = violation;
      }
    }
  }
  if (best_feasible >= 0) return best_feasible;
  if (best_infeasible >= 0) return best_infeasible;
  throw std::invalid_argument("select_thompson_index: no eligible candidate");
}

std::vector<Index> select_batch_ts(std::span<const TrainedGP> models, const Matrix& candidates,
                                   int batch_size, Rng& rng) {
  check_batch(models, candidates, batch_size);
  const Index r = candidates.rows();
  const auto m = static_cast<Index>(models.size()) - 1;

  std::vector<JointSampler> samplers;
  samplers.reserve(models.size());
  for (const auto& model : models) samplers.emplace_back(model, candidates);

  std::vector<bool> eligible(static_cast<std::size_t>(r), true);
  std::vector<Index> chosen;
  chosen.reserve(static_cast<std::size_t>(batch_size));
  Matrix realized_constraints(r, m);
  for (int slot = 0; slot < batch_size; ++slot) {
    const Vector realized_objective = samplers[0].draw(rng);
    for (Index k = 0; k < m; ++k) {
      const auto idx = static_cast<std::size_t>(k + 1);
      realized_constraints.col(k) = models[idx].destandardize(samplers[idx].draw(rng));
    }
    const Index pick = select_thompson_index(realized_objective, realized_constraints, eligible);
    eligible[static_cast<std::size_t>(pick)] = false;
    chosen.push_back(pick);
  }
  return chosen;
}

double expected_improvement(double mean, double sd, double best) {
  const double diff = best - mean;
  if (!(sd > 0.0)) return std::max(diff, 0.0);
  const double z = diff / sd;
  return std::max(diff * normal_cdf(z) + sd * normal_pdf(z), 0.0);
}

Vector cei_scores(std::span<const TrainedGP> models, const Matrix& candidates,
                  std::optional<double> best_feasible) {
  if (models.empty()) throw std::invalid_argument("cei_scores: need at least the objective model");
  const PosteriorOptions opts{.destandardize = true, .observation_noise = false};
  Vector scores = Vector::Ones(candidates.rows());
  for (std::size_t k = 1; k < models.size(); ++k) {
    const auto post = models[k].predict(candidates, opts);
    for (Index i = 0; i < candidates.rows(); ++i) {
      const double sd = std::sqrt(post.variance[i]);
      const double p = sd > 0.0 ? normal_cdf(-post.mean[i] / sd) : (post.mean[i] <= 0.0 ? 1.0 : 0.0);
      scores[i] *= p;
    }
  }
  if (best_feasible) {
    const auto post = models[0].predict(candidates, opts);
    for (Index i = 0; i < candidates.rows(); ++i)
      scores[i] *= expected_improvement(post.mean[i], std::sqrt(post.variance[i]), *best_feasible);
  }
  return scores;
}

std::vector<Index> select_batch_cei(std::span<const TrainedGP> models, const Matrix& candidates,
                                    int batch_size, std::optional<double> best_feasible) {
  check_batch(models, candidates, batch_size);
  const Vector scores = cei_scores(models, candidates, best_feasible);
  std::vector<Index> order(static_cast<std::size_t>(candidates.rows()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return scores[a] > scores[b]; });
  order.resize(static_cast<std::size_t>(batch_size));
  return order;
}

Matrix select_batch_random(const Vector& lower, const Vector& upper, int batch_size, Rng& rng) {
  if (batch_size < 1) throw std::invalid_argument("select_batch_random: batch size must be >= 1");
  if (lower.size() != upper.size()) throw std::invalid_argument("select_batch_random: bound size mismatch");
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Matrix out(batch_size, lower.size());
  for (int i = 0; i < batch_size; ++i)
    for (Index k = 0; k < lower.size(); ++k) out(i, k) = lower[k] + (upper[k] - lower[k]) * unif(rng);
  return out;
}

}  // namespace scbo
