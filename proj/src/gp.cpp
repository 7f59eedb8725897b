#include "scbo/gp.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include "scbo/lbfgsb.hpp"
#include "scbo/standardization.hpp"

namespace scbo {

namespace {

constexpr double kSqrt5 = 2.23606797749978969641;

inline double matern52(double r, double signal_variance) {
  const double s = kSqrt5 * r;
  return signal_variance * (1.0 + s + s * s / 3.0) * std::exp(-s);
}

// One point per row, each coordinate divided by its lengthscale.
Matrix scaled_rows(const Matrix& points, const Vector& lengthscales) {
  return (points.array().rowwise() / lengthscales.transpose().array()).matrix();
}

// Pairwise distances r(i, j) between rows of sa and rows of sb. With
// lower_only, only i >= j is filled (sa and sb must then be the same).
void scaled_distances(const Matrix& sa, const Matrix& sb, Matrix& out, bool lower_only = false) {
  const Index n = sa.rows();
  const Index m = sb.rows();
  const Index d = sa.cols();
  out.resize(n, m);
  for (Index j = 0; j < m; ++j) {
    const Index first = lower_only ? j : 0;
    auto col = out.col(j).segment(first, n - first);
    col.setZero();
    for (Index c = 0; c < d; ++c) col.array() += (sa.col(c).segment(first, n - first).array() - sb(j, c)).square();
    col = col.array().sqrt().matrix();
  }
}

// Matern-5/2 covariance applied elementwise to a block of distances.
template <typename Block>
void apply_matern52(Block&& r, double signal_variance) {
  auto s = (kSqrt5 * r.array()).eval();
  r.array() = signal_variance * (1.0 + s + s.square() / 3.0) * (-s).exp();
}

void check_dims(const Matrix& points, const GPHyperparameters& hyper, const char* what) {
  if (points.cols() != hyper.lengthscales.size())
    throw std::invalid_argument(std::string(what) + ": dimension mismatch (points have " +
                                std::to_string(points.cols()) + " columns, hyperparameters " +
                                std::to_string(hyper.lengthscales.size()) + " lengthscales)");
}

// Fills the lower triangle of k(points, points) (noise excluded).
void symmetric_kernel_lower(const Matrix& scaled, double signal_variance, Matrix& out) {
  scaled_distances(scaled, scaled, out, true);
  const Index n = out.rows();
  for (Index j = 0; j < n; ++j) apply_matern52(out.col(j).tail(n - j), signal_variance);
}

void check_targets(const Matrix& inputs, const Vector& targets) {
  if (inputs.rows() < 1) throw std::invalid_argument("gp: need at least one training point");
  if (inputs.rows() != targets.size()) throw std::invalid_argument("gp: inputs/targets size mismatch");
  if (!targets.allFinite()) throw std::invalid_argument("gp: non-finite targets");
  if (!inputs.allFinite()) throw std::invalid_argument("gp: non-finite inputs");
}

// Factorizes A + jitter*I in place of a copy, escalating jitter by 10x.
bool factorize_with_jitter(const Matrix& lower, double jitter_initial, double jitter_max,
                           Eigen::LLT<Matrix>& llt, double& jitter_used) {
  for (double jitter = jitter_initial; jitter <= jitter_max * (1.0 + 1e-12); jitter *= 10.0) {
    Matrix a = lower;
    a.diagonal().array() += jitter;
    llt.compute(a);
    if (llt.info() == Eigen::Success) {
      jitter_used = jitter;
      return true;
    }
  }
  return false;
}

// In-place inverse of a lower-triangular matrix; the upper part is ignored.
void invert_lower(Eigen::Ref<Matrix> l) {
  const Index n = l.rows();
  if (n <= 48) {
    Matrix id = Matrix::Identity(n, n);
    l.triangularView<Eigen::Lower>().solveInPlace(id);
    l.triangularView<Eigen::Lower>() = id;
    return;
  }
  const Index k = n / 2;
  invert_lower(l.topLeftCorner(k, k));
  invert_lower(l.bottomRightCorner(n - k, n - k));
  const Matrix t = l.bottomLeftCorner(n - k, k) * l.topLeftCorner(k, k).triangularView<Eigen::Lower>();
  l.bottomLeftCorner(n - k, k).noalias() = l.bottomRightCorner(n - k, n - k).triangularView<Eigen::Lower>() * t;
  l.bottomLeftCorner(n - k, k) *= -1.0;
}

// Lower triangle of x^T x for lower-triangular x.
void lower_gram(const Eigen::Ref<const Matrix>& x, Eigen::Ref<Matrix> out) {
  const Index n = x.rows();
  if (n <= 48) {
    const Matrix xl = x.triangularView<Eigen::Lower>();
    out.triangularView<Eigen::Lower>() = xl.transpose() * xl;
    return;
  }
  const Index k = n / 2;
  lower_gram(x.topLeftCorner(k, k), out.topLeftCorner(k, k));
  out.topLeftCorner(k, k).selfadjointView<Eigen::Lower>().rankUpdate(x.bottomLeftCorner(n - k, k).transpose(), 1.0);
  out.bottomLeftCorner(n - k, k).noalias() =
      x.bottomRightCorner(n - k, n - k).triangularView<Eigen::Lower>().transpose() * x.bottomLeftCorner(n - k, k);
  lower_gram(x.bottomRightCorner(n - k, n - k), out.bottomRightCorner(n - k, n - k));
}

}  // namespace

double kernel_matern52_ard(const Vector& x, const Vector& z, const GPHyperparameters& hyper) {
  if (x.size() != hyper.lengthscales.size() || z.size() != hyper.lengthscales.size())
    throw std::invalid_argument("kernel_matern52_ard: dimension mismatch");
  const double r = ((x - z).array() / hyper.lengthscales.array()).matrix().norm();
  return matern52(r, hyper.signal_variance);
}

Matrix kernel_matrix(const Matrix& a, const Matrix& b, const GPHyperparameters& hyper) {
  check_dims(a, hyper, "kernel_matrix");
  check_dims(b, hyper, "kernel_matrix");
  Matrix out;
  scaled_distances(scaled_rows(a, hyper.lengthscales), scaled_rows(b, hyper.lengthscales), out);
  for (Index j = 0; j < out.cols(); ++j) apply_matern52(out.col(j), hyper.signal_variance);
  return out;
}

Vector pack_hyperparameters(const GPHyperparameters& hyper) {
  const int d = hyper.dim();
  Vector theta(d + 3);
  theta.head(d) = hyper.lengthscales.array().log().matrix();
  theta[d] = std::log(hyper.signal_variance);
  theta[d + 1] = std::log(hyper.noise_variance);
  theta[d + 2] = hyper.constant_mean;
  return theta;
}

GPHyperparameters unpack_hyperparameters(const Vector& theta, int dim) {
  if (theta.size() != dim + 3) throw std::invalid_argument("unpack_hyperparameters: size mismatch");
  GPHyperparameters h;
  h.lengthscales = theta.head(dim).array().exp().matrix();
  h.signal_variance = std::exp(theta[dim]);
  h.noise_variance = std::exp(theta[dim + 1]);
  h.constant_mean = theta[dim + 2];
  return h;
}

double penalized_log_marginal_likelihood(const Matrix& inputs, const Vector& targets,
                                         const GPHyperparameters& hyper,
                                         const GPFitConfig& config, Vector* gradient) {
  check_dims(inputs, hyper, "penalized_log_marginal_likelihood");
  const Index n = inputs.rows();
  const Index d = inputs.cols();
  const double sf2 = hyper.signal_variance;
  const double sn2 = hyper.noise_variance;

  const Matrix scaled = scaled_rows(inputs, hyper.lengthscales);
  Matrix r;
  scaled_distances(scaled, scaled, r, true);
  Matrix a = r;
  for (Index j = 0; j < n; ++j) apply_matern52(a.col(j).tail(n - j), sf2);
  a.diagonal().array() += sn2;

  Eigen::LLT<Matrix> llt;
  double jitter = 0.0;
  if (!factorize_with_jitter(a, config.jitter_initial, config.jitter_max, llt, jitter))
    return -std::numeric_limits<double>::infinity();

  const Vector centered = (targets.array() - hyper.constant_mean).matrix();
  const Vector alpha = llt.solve(centered);
  const Matrix& l = llt.matrixLLT();
  const double log_det = 2.0 * l.diagonal().array().log().sum();
  const double lml = -0.5 * centered.dot(alpha) - 0.5 * log_det -
                     0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);

  const double u = std::pow(config.horseshoe_scale / sn2, 2);
  const double log_prior = std::log(std::log1p(u));
  const double value = lml + log_prior;
  if (gradient == nullptr) return value;

  // d lml / d theta = -1/2 tr(W dA/dtheta), W = A^{-1} - alpha alpha^T.
  // Only the lower triangle of W is formed and read.
  Matrix linv = llt.matrixLLT();
  invert_lower(linv);
  Matrix w(n, n);
  lower_gram(linv, w);
  w.selfadjointView<Eigen::Lower>().rankUpdate(alpha, -1.0);

  // Off-diagonal terms, symmetric: m(i, j) = W(i, j) * slope(r(i, j)).
  // dA(i, j)/dlog l_c = slope * t_c^2 with t_c the scaled difference.
  double sf2_term = sf2 * w.trace();
  Matrix m(n, n);
  for (Index j = 0; j < n; ++j) {
    m(j, j) = 0.0;
    const Index len = n - j - 1;
    if (len == 0) continue;
    const auto rj = r.col(j).tail(len).array();
    const auto sv = (kSqrt5 * rj).eval();
    const auto e = (-sv).exp().eval();
    const auto wj = w.col(j).tail(len).array();
    sf2_term += 2.0 * (wj * sf2 * (1.0 + sv + sv.square() / 3.0) * e).sum();
    m.col(j).tail(len) = (wj * sf2 * (5.0 / 3.0) * (1.0 + sv) * e).matrix();
  }
  m.triangularView<Eigen::StrictlyUpper>() = m.transpose();
  // sum_{i<j} m_ij (s_ic - s_jc)^2 = sum_i s_ic^2 (m 1)_i - sum_i s_ic (m s)_ic
  const Matrix ms = m * scaled;
  const Vector row_sums = m.rowwise().sum();
  gradient->setZero(d + 3);
  Vector& g = *gradient;
  for (Index c = 0; c < d; ++c)
    g[c] = -(scaled.col(c).array().square() * row_sums.array()).sum() + scaled.col(c).dot(ms.col(c));
  g[d] = -0.5 * sf2_term;
  g[d + 1] = -0.5 * sn2 * w.trace();
  g[d + 2] = alpha.sum();
  g[d + 1] += (1.0 / std::log1p(u)) * (1.0 / (1.0 + u)) * (-2.0 * u);
  return value;
}

TrainedGP::TrainedGP(Matrix inputs, const Vector& targets, GPHyperparameters hyper,
                     const GPFitConfig& config)
    : inputs_(std::move(inputs)), hyper_(std::move(hyper)), jitter_max_(config.jitter_max) {
  check_targets(inputs_, targets);
  check_dims(inputs_, hyper_, "TrainedGP");
  const auto st = Standardization::of(targets);
  targets_ = st.apply(targets);
  shift_ = st.shift;
  scale_ = st.scale;

  const Matrix scaled = scaled_rows(inputs_, hyper_.lengthscales);
  Matrix a;
  symmetric_kernel_lower(scaled, hyper_.signal_variance, a);
  a.diagonal().array() += hyper_.noise_variance;
  if (!factorize_with_jitter(a, config.jitter_initial, config.jitter_max, factor_, jitter_))
    throw NumericalError("TrainedGP: kernel matrix not positive definite at maximum jitter");
  alpha_ = factor_.solve((targets_.array() - hyper_.constant_mean).matrix());
}

Vector TrainedGP::destandardize(const Vector& v) const {
  return (v.array() * scale_ + shift_).matrix();
}

Posterior TrainedGP::predict(const Matrix& queries, const PosteriorOptions& options) const {
  check_dims(queries, hyper_, "posterior");
  const Matrix kqn = kernel_matrix(queries, inputs_, hyper_);
  Posterior out;
  out.mean = (kqn * alpha_).array() + hyper_.constant_mean;
  Matrix v = kqn.transpose();
  factor_.matrixL().solveInPlace(v);
  out.variance = (hyper_.signal_variance - v.colwise().squaredNorm().transpose().array()).max(0.0);
  if (options.observation_noise) out.variance.array() += hyper_.noise_variance;
  if (options.destandardize) {
    out.mean = destandardize(out.mean);
    out.variance *= scale_ * scale_;
  }
  return out;
}

Posterior posterior(const TrainedGP& model, const Matrix& queries, const PosteriorOptions& options) {
  return model.predict(queries, options);
}

TrainedGP fit(const Matrix& inputs, const Vector& targets, const GPFitConfig& config, Rng& rng) {
  check_targets(inputs, targets);
  const int d = static_cast<int>(inputs.cols());
  const Vector y = Standardization::of(targets).apply(targets);

  Vector lo(d + 3), hi(d + 3);
  lo.head(d).setConstant(std::log(config.lengthscale_lo));
  hi.head(d).setConstant(std::log(config.lengthscale_hi));
  lo[d] = std::log(config.signal_variance_lo);
  hi[d] = std::log(config.signal_variance_hi);
  lo[d + 1] = std::log(config.noise_variance_lo);
  hi[d + 1] = std::log(config.noise_variance_hi);
  lo[d + 2] = -10.0;
  hi[d + 2] = 10.0;

  GPHyperparameters defaults;
  defaults.lengthscales = Vector::Constant(d, 0.5);
  defaults.signal_variance = 1.0;
  defaults.noise_variance = 5e-3;
  defaults.constant_mean = 0.0;

  std::vector<Vector> starts;
  const bool warm = config.warm_start && config.warm_start->dim() == d;
  starts.push_back(pack_hyperparameters(warm ? *config.warm_start : defaults));
  const int count = std::max(1, warm ? config.warm_restarts : config.restarts);
  std::normal_distribution<double> normal(0.0, 1.0);
  while (static_cast<int>(starts.size()) < count) {
    Vector theta = pack_hyperparameters(defaults);
    for (int c = 0; c < d; ++c) theta[c] += 0.5 * normal(rng);
    theta[d] += 0.5 * normal(rng);
    theta[d + 1] += normal(rng);
    theta[d + 2] += 0.1 * normal(rng);
    starts.push_back(theta.cwiseMax(lo).cwiseMin(hi));
  }

  // Minimized per observation so that tolerances do not scale with n.
  const double inv_n = 1.0 / static_cast<double>(inputs.rows());
  const BoxObjective objective = [&](const Vector& theta, Vector& grad) {
    const auto h = unpack_hyperparameters(theta, d);
    const double v = penalized_log_marginal_likelihood(inputs, y, h, config, &grad);
    grad *= -inv_n;
    return -v * inv_n;
  };

  BoxMinimizeOptions options;
  options.max_iterations = config.max_iterations;
  options.relative_decrease_tol = 2.2e-9;
  std::optional<BoxMinimizeResult> best;
  for (const auto& start : starts) {
    auto res = minimize_box(objective, start, lo, hi, options);
    if (!std::isfinite(res.value)) continue;
    if (!best || res.value < best->value) best = std::move(res);
  }
  const GPHyperparameters hyper = best ? unpack_hyperparameters(best->x, d) : defaults;
  return TrainedGP(inputs, targets, hyper, config);
}

JointSampler::JointSampler(const TrainedGP& model, const Matrix& queries) {
  const auto& hyper = model.hyperparameters();
  check_dims(queries, hyper, "sample_joint");
  if (queries.rows() < 1) throw std::invalid_argument("sample_joint: empty query set");
  const Index q = queries.rows();

  const Matrix kqn = kernel_matrix(queries, model.inputs_, hyper);
  mean_ = (kqn * model.alpha_).array() + hyper.constant_mean;
  Matrix v = kqn.transpose();
  model.factor_.matrixL().solveInPlace(v);

  const Matrix scaled = scaled_rows(queries, hyper.lengthscales);
  const auto build = [&](Matrix& cov) {
    symmetric_kernel_lower(scaled, hyper.signal_variance, cov);
    cov.selfadjointView<Eigen::Lower>().rankUpdate(v.transpose(), -1.0);
  };

  build(chol_);
  for (double jitter = 1e-8; jitter <= model.jitter_max_ * (1.0 + 1e-12); jitter *= 10.0) {
    if (jitter > 1e-8) build(chol_);
    chol_.diagonal().array() += jitter;
    Eigen::LLT<Eigen::Ref<Matrix>> llt(chol_);
    if (llt.info() == Eigen::Success) {
      jitter_ = jitter;
      chol_.triangularView<Eigen::StrictlyUpper>().setZero();
      (void)q;
      return;
    }
  }
  throw NumericalError("sample_joint: posterior covariance not positive definite at maximum jitter");
}

Vector JointSampler::draw(Rng& rng) const {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector z(mean_.size());
  for (Index i = 0; i < z.size(); ++i) z[i] = normal(rng);
  return mean_ + chol_.triangularView<Eigen::Lower>() * z;
}

Matrix sample_joint(const TrainedGP& model, const Matrix& queries, int count, Rng& rng,
                    bool destandardize) {
  if (count < 1) throw std::invalid_argument("sample_joint: count must be >= 1");
  const JointSampler sampler(model, queries);
  Matrix out(count, queries.rows());
  for (int s = 0; s < count; ++s) {
    Vector row = sampler.draw(rng);
    if (destandardize) row = model.destandardize(row);
    out.row(s) = row.transpose();
  }
  return out;
}

}  // namespace scbo
