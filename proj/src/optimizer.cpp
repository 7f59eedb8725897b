#include "scbo/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "scbo/normal.hpp"

namespace scbo {

void RunConfig::validate() const {
  problem.validate();
  if (n_init < 1) throw std::invalid_argument("run: n_init must be >= 1");
  if (budget < n_init) throw std::invalid_argument("run: budget must be >= n_init");
  if (batch_size < 1) throw std::invalid_argument("run: batch size must be >= 1");
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("run: delta must lie in (0, 1)");
  if (length_min && !(*length_min > 0.0)) throw std::invalid_argument("run: length_min must be positive");
}

std::vector<double> RunHistory::best_feasible_trace() const {
  std::vector<double> out;
  out.reserve(records.size());
  double best = std::numeric_limits<double>::infinity();
  for (const auto& r : records) {
    if (r.feasible) best = std::min(best, r.objective);
    out.push_back(best);
  }
  return out;
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

class Loop {
 public:
  explicit Loop(const RunConfig& config)
      : cfg_(config),
        rng_(config.seed),
        dim_(config.problem.dim),
        m_(config.problem.constraint_count),
        toggle_(TransformToggle::enabled(config.use_transforms)),
        data_(dim_, m_) {
    history_.config = config;
    tr_config_ = TrustRegionConfig::defaults(dim_, config.batch_size);
    if (config.length_min) tr_config_.length_min = *config.length_min;
  }

  RunHistory execute() {
    try {
      body();
    } catch (const EvaluationError& e) {
      history_.completed = false;
      history_.error = e.what();
    } catch (const NumericalError& e) {
      history_.completed = false;
      history_.error = std::string("numerical error: ") + e.what();
    }
    finish();
    return std::move(history_);
  }

 private:
  int remaining() const { return cfg_.budget - static_cast<int>(history_.records.size()); }

  // Key used for trust-region decisions: raw objective, transformed
  // constraints (bilog keeps the sign, so feasibility is unchanged).
  MeritKey region_key(double objective, const Vector& constraints) const {
    return merit_key(objective, toggle_.bilog ? bilog(constraints) : constraints);
  }

  std::vector<MeritKey> evaluate_batch(const Matrix& unit_points, double length, int restart_count) {
    std::vector<MeritKey> keys;
    for (Index i = 0; i < unit_points.rows() && remaining() > 0; ++i) {
      const Vector u = unit_points.row(i).transpose().cwiseMax(0.0).cwiseMin(1.0);
      const Evaluation e = cfg_.problem.evaluate_unit(u);
      EvaluationRecord rec;
      rec.eval_index = static_cast<int>(history_.records.size());
      rec.point = cfg_.problem.from_unit(u);
      rec.objective = e.objective;
      rec.constraints = e.constraints;
      const MeritKey raw = merit_key(e.objective, e.constraints);
      rec.feasible = raw.feasible;
      if (raw < incumbent_) incumbent_ = raw;
      rec.incumbent = incumbent_;
      rec.length = length;
      rec.restart_count = restart_count;
      history_.records.push_back(std::move(rec));
      data_.append(u, e.objective, e.constraints);
      keys.push_back(region_key(e.objective, e.constraints));
    }
    return keys;
  }

  Index best_data_index() const {
    Index best = 0;
    MeritKey best_key = region_key(data_.objective[0], data_.constraints.row(0).transpose());
    for (Index i = 1; i < data_.size(); ++i) {
      const auto k = region_key(data_.objective[i], data_.constraints.row(i).transpose());
      if (k < best_key) {
        best_key = k;
        best = i;
      }
    }
    return best;
  }

  void place_center() {
    const Index best = best_data_index();
    state_.center = data_.inputs.row(best).transpose();
    state_.center_key = region_key(data_.objective[best], data_.constraints.row(best).transpose());
    if (cfg_.noisy_observations && models_.size() == static_cast<std::size_t>(m_ + 1))
      state_.center_key = posterior_key(state_.center);
  }

  void open_region(const Matrix& design) {
    RegionRecord region;
    region.index = static_cast<int>(history_.regions.size());
    region.first_eval = static_cast<int>(history_.records.size());
    region.initial_design = design;
    history_.regions.push_back(std::move(region));
  }

  // Fits one GP per output on the transformed post-restart data. Leaves
  // models_ empty if any fit fails.
  void fit_models() {
    const TransformedDataset td = transform_dataset(data_, toggle_);
    std::vector<TrainedGP> models;
    models.reserve(static_cast<std::size_t>(m_ + 1));
    try {
      for (int k = 0; k <= m_; ++k) {
        GPFitConfig gcfg = cfg_.gp;
        if (warm_.size() == static_cast<std::size_t>(m_ + 1)) gcfg.warm_start = warm_[static_cast<std::size_t>(k)];
        const Vector targets = k == 0 ? td.objective : Vector(td.constraints.col(k - 1));
        models.push_back(fit(data_.inputs, targets, gcfg, rng_));
      }
    } catch (const NumericalError&) {
      models_.clear();
      warm_.clear();
      transformed_ = td;
      return;
    }
    warm_.clear();
    for (const auto& model : models) warm_.push_back(model.hyperparameters());
    models_ = std::move(models);
    transformed_ = td;
  }

  std::optional<double> best_feasible_transformed() const {
    std::optional<double> best;
    for (Index i = 0; i < data_.size(); ++i) {
      if ((data_.constraints.row(i).array() <= 0.0).all()) {
        const double v = transformed_.objective[i];
        if (!best || v < *best) best = v;
      }
    }
    return best;
  }

  MeritKey posterior_key(const Vector& unit_point) const {
    const Matrix q = unit_point.transpose();
    const PosteriorOptions opts{.destandardize = true, .observation_noise = false};
    const double f = models_[0].predict(q, opts).mean[0];
    Vector c(m_);
    for (int k = 0; k < m_; ++k) c[k] = models_[static_cast<std::size_t>(k + 1)].predict(q, opts).mean[0];
    return merit_key(f, c);
  }

  // Noisy mode: condition the current hyperparameters on data that now
  // includes the batch and rank by posterior means.
  std::vector<MeritKey> noisy_keys(const Matrix& batch_unit) {
    const TransformedDataset td = transform_dataset(data_, toggle_);
    std::vector<TrainedGP> conditioned;
    for (int k = 0; k <= m_; ++k) {
      const Vector targets = k == 0 ? td.objective : Vector(td.constraints.col(k - 1));
      conditioned.emplace_back(data_.inputs, targets, models_[static_cast<std::size_t>(k)].hyperparameters(), cfg_.gp);
    }
    models_ = std::move(conditioned);
    transformed_ = td;
    std::vector<MeritKey> keys;
    for (Index i = 0; i < batch_unit.rows(); ++i) keys.push_back(posterior_key(batch_unit.row(i).transpose()));
    return keys;
  }

  Matrix take_rows(const Matrix& m, const std::vector<Index>& rows) const {
    Matrix out(static_cast<Index>(rows.size()), m.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = m.row(rows[i]);
    return out;
  }

  void body() {
    const int n0 = std::min(cfg_.n_init, cfg_.budget);
    const Matrix design = latin_hypercube(n0, dim_, rng_);
    state_ = TrustRegionState::fresh(tr_config_);
    const double region_length = cfg_.use_trust_region ? state_.length : kNaN;
    if (cfg_.use_trust_region) open_region(design);
    evaluate_batch(design, region_length, 0);

    if (cfg_.method == AcquisitionMethod::random) {
      const Vector lo = Vector::Zero(dim_);
      const Vector hi = Vector::Ones(dim_);
      while (remaining() > 0) {
        const int qb = std::min(cfg_.batch_size, remaining());
        evaluate_batch(select_batch_random(lo, hi, qb, rng_), kNaN, 0);
      }
      return;
    }

    if (cfg_.use_trust_region) place_center();

    while (remaining() > 0) {
      const int qb = std::min(cfg_.batch_size, remaining());
      const Matrix candidates = cfg_.use_trust_region
                                    ? generate_candidates(state_, rng_)
                                    : sobol_points(candidate_count(dim_), dim_, rng_);
      fit_models();

      std::vector<Index> picks;
      if (models_.size() == static_cast<std::size_t>(m_ + 1)) {
        if (cfg_.method == AcquisitionMethod::thompson)
          picks = select_batch_ts(models_, candidates, qb, rng_);
        else
          picks = select_batch_cei(models_, candidates, qb, best_feasible_transformed());
      } else {
        std::vector<Index> order(static_cast<std::size_t>(candidates.rows()));
        std::iota(order.begin(), order.end(), Index{0});
        std::shuffle(order.begin(), order.end(), rng_);
        picks.assign(order.begin(), order.begin() + qb);
      }
      const Matrix batch = take_rows(candidates, picks);
      const double length = cfg_.use_trust_region ? state_.length : kNaN;
      auto keys = evaluate_batch(batch, length, state_.restart_count);
      if (!cfg_.use_trust_region) continue;

      MeritKey incumbent = state_.center_key;
      if (cfg_.noisy_observations && models_.size() == static_cast<std::size_t>(m_ + 1)) {
        keys = noisy_keys(batch);
        incumbent = posterior_key(state_.center);
      }
      auto step = update(state_, keys, incumbent);
      if (step.improving_index) step.state.center = batch.row(static_cast<Index>(*step.improving_index)).transpose();
      state_ = std::move(step.state);
      auto& region = history_.regions.back();
      ++region.batches;
      if (step.event == TrustRegionEvent::success) ++region.successes;
      region.final_length = state_.length;

      if (step.event == TrustRegionEvent::restart) {
        region.terminated = true;
        if (remaining() <= 0) break;
        auto fresh = restart(state_, cfg_.n_init, rng_);
        state_ = std::move(fresh.state);
        data_.clear();
        models_.clear();
        warm_.clear();
        open_region(fresh.initial_design);
        evaluate_batch(fresh.initial_design, state_.length, state_.restart_count);
        place_center();
      }
    }
  }

  void finish() {
    if (!history_.regions.empty() && !history_.regions.back().terminated)
      history_.regions.back().final_length = state_.length;

    if (cfg_.noisy_observations && models_.size() == static_cast<std::size_t>(m_ + 1) && !data_.empty()) {
      if (auto idx = recommend_noisy(models_, data_.inputs, cfg_.delta)) {
        const auto offset = history_.records.size() - static_cast<std::size_t>(data_.size());
        history_.recommendation = offset + static_cast<std::size_t>(*idx);
      }
      return;
    }
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < history_.records.size(); ++i) {
      const auto& r = history_.records[i];
      if (r.feasible && (!best || r.objective < history_.records[*best].objective)) best = i;
    }
    history_.recommendation = best;
  }

  const RunConfig& cfg_;
  Rng rng_;
  int dim_;
  int m_;
  TransformToggle toggle_;
  TrustRegionConfig tr_config_;
  TrustRegionState state_;
  ObservationSet data_;
  TransformedDataset transformed_;
  std::vector<TrainedGP> models_;
  std::vector<GPHyperparameters> warm_;
  MeritKey incumbent_ = MeritKey::worst();
  RunHistory history_;
};

}  // namespace

RunHistory run(const RunConfig& config) {
  config.validate();
  return Loop(config).execute();
}

std::optional<Vector> recommend(const RunHistory& history) {
  std::optional<Vector> best;
  double best_value = std::numeric_limits<double>::infinity();
  for (const auto& r : history.records) {
    if (r.feasible && (!best || r.objective < best_value)) {
      best = r.point;
      best_value = r.objective;
    }
  }
  return best;
}

std::optional<Index> recommend_noisy(std::span<const TrainedGP> models, const Matrix& unit_points,
                                     double delta) {
  if (models.empty()) throw std::invalid_argument("recommend_noisy: need the objective model");
  if (unit_points.rows() == 0) return std::nullopt;
  const PosteriorOptions opts{.destandardize = true, .observation_noise = false};
  Vector prob = Vector::Ones(unit_points.rows());
  for (std::size_t k = 1; k < models.size(); ++k) {
    const auto post = models[k].predict(unit_points, opts);
    for (Index i = 0; i < unit_points.rows(); ++i) {
      const double sd = std::sqrt(post.variance[i]);
      prob[i] *= sd > 0.0 ? normal_cdf(-post.mean[i] / sd) : (post.mean[i] <= 0.0 ? 1.0 : 0.0);
    }
  }
  const Vector mean = models[0].predict(unit_points, opts).mean;
  std::optional<Index> best;
  for (Index i = 0; i < unit_points.rows(); ++i) {
    if (prob[i] < 1.0 - delta) continue;
    if (!best || mean[i] < mean[*best]) best = i;
  }
  return best;
}

ConsistencyTrace consistency_stress(int budget, double length_min, std::uint64_t seed, int n_init) {
  RunConfig cfg;
  cfg.problem = toy2d();
  cfg.budget = budget;
  cfg.batch_size = 1;
  cfg.n_init = n_init;
  cfg.seed = seed;
  cfg.length_min = length_min;
  ConsistencyTrace out;
  out.history = run(cfg);
  out.best_feasible = out.history.best_feasible_trace();
  return out;
}

}  // namespace scbo
