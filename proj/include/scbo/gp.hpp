#pragma once

#include "scbo/common.hpp"

#include <Eigen/Cholesky>

#include <optional>

namespace scbo {

/// Matérn-5/2 ARD hyperparameters. Variances are in standardized-target
/// units; lengthscales are in unit-cube units.
struct GPHyperparameters {
  Vector lengthscales;
  double signal_variance = 1.0;
  double noise_variance = 5e-3;
  double constant_mean = 0.0;

  int dim() const { return static_cast<int>(lengthscales.size()); }
};

struct GPFitConfig {
  double lengthscale_lo = 0.005;
  double lengthscale_hi = 2.0;
  double signal_variance_lo = 0.05;
  double signal_variance_hi = 20.0;
  double noise_variance_lo = 5e-4;
  double noise_variance_hi = 0.2;
  // Horseshoe-style penalty ln ln(1 + (scale / noise_variance)^2).
  double horseshoe_scale = 0.1;
  // Number of quasi-Newton starts from perturbed defaults for a cold fit.
  int restarts = 3;
  // Number of starts when a warm start is given (the warm start first).
  int warm_restarts = 1;
  int max_iterations = 50;
  double jitter_initial = 1e-8;
  double jitter_max = 1e-4;
  std::optional<GPHyperparameters> warm_start;
};

double kernel_matern52_ard(const Vector& x, const Vector& z, const GPHyperparameters& hyper);

/// Covariance block k(a_i, b_j) without the noise term.
Matrix kernel_matrix(const Matrix& a, const Matrix& b, const GPHyperparameters& hyper);

/// Log-space parameter vector [log l_1..log l_d, log sf2, log sn2, c].
Vector pack_hyperparameters(const GPHyperparameters& hyper);
GPHyperparameters unpack_hyperparameters(const Vector& theta, int dim);

/// Log marginal likelihood of standardized targets plus the log prior on the
/// noise variance. When `gradient` is non-null it receives the derivative
/// with respect to pack_hyperparameters(hyper). Returns -inf when the
/// covariance cannot be factorized.
double penalized_log_marginal_likelihood(const Matrix& inputs, const Vector& targets,
                                         const GPHyperparameters& hyper,
                                         const GPFitConfig& config, Vector* gradient = nullptr);

struct PosteriorOptions {
  bool destandardize = false;
  // Add the noise variance to the latent-function variance.
  bool observation_noise = false;
};

struct Posterior {
  Vector mean;
  Vector variance;
};

/// A fitted single-output GP. Immutable once constructed.
class TrainedGP {
 public:
  /// Conditions on data with fixed hyperparameters. `targets` are raw
  /// (pre-standardization) values; standardization is done here.
  TrainedGP(Matrix inputs, const Vector& targets, GPHyperparameters hyper,
            const GPFitConfig& config = {});

  const GPHyperparameters& hyperparameters() const { return hyper_; }
  const Matrix& train_inputs() const { return inputs_; }
  const Vector& train_targets() const { return targets_; }
  double target_shift() const { return shift_; }
  double target_scale() const { return scale_; }
  double jitter() const { return jitter_; }
  int dim() const { return static_cast<int>(inputs_.cols()); }
  Index size() const { return inputs_.rows(); }

  double destandardize(double v) const { return v * scale_ + shift_; }
  Vector destandardize(const Vector& v) const;
  double standardize(double v) const { return (v - shift_) / scale_; }

  Posterior predict(const Matrix& queries, const PosteriorOptions& options = {}) const;

  const Eigen::LLT<Matrix>& factor() const { return factor_; }
  const Vector& weights() const { return alpha_; }

 private:
  Matrix inputs_;
  Vector targets_;
  double shift_ = 0.0;
  double scale_ = 1.0;
  GPHyperparameters hyper_;
  double jitter_ = 0.0;
  Eigen::LLT<Matrix> factor_;
  Vector alpha_;
  double jitter_max_ = 1e-4;

  friend class JointSampler;
};

/// Penalized maximum-likelihood fit. Targets are raw; they are standardized
/// to zero mean and unit sample variance before fitting.
TrainedGP fit(const Matrix& inputs, const Vector& targets, const GPFitConfig& config, Rng& rng);

Posterior posterior(const TrainedGP& model, const Matrix& queries,
                    const PosteriorOptions& options = {});

/// Precomputed Cholesky factor of the joint latent posterior at a fixed
/// query set. Each draw consumes exactly queries.rows() standard normals
/// from the generator, in query order.
class JointSampler {
 public:
  JointSampler(const TrainedGP& model, const Matrix& queries);

  /// One realization in standardized units.
  Vector draw(Rng& rng) const;

  const Vector& mean() const { return mean_; }
  double jitter() const { return jitter_; }

 private:
  Vector mean_;
  Matrix chol_;
  double jitter_ = 0.0;
};

/// `count` rows of i.i.d. joint draws of the latent function, in
/// standardized units (or de-standardized when requested).
Matrix sample_joint(const TrainedGP& model, const Matrix& queries, int count, Rng& rng,
                    bool destandardize = false);

}  // namespace scbo
