#include "scbo/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "scbo/normal.hpp"

namespace scbo {

void ObservationSet::append(const Vector& unit_point, double objective_value,
                            const Vector& constraint_values) {
  if (inputs.cols() == 0 && inputs.rows() == 0) {
    inputs.resize(0, unit_point.size());
    constraints.resize(0, constraint_values.size());
  }
  if (unit_point.size() != inputs.cols() || constraint_values.size() != constraints.cols())
    throw std::invalid_argument("ObservationSet::append: shape mismatch");
  const Index n = size();
  inputs.conservativeResize(n + 1, Eigen::NoChange);
  inputs.row(n) = unit_point.transpose();
  objective.conservativeResize(n + 1);
  objective[n] = objective_value;
  constraints.conservativeResize(n + 1, Eigen::NoChange);
  constraints.row(n) = constraint_values.transpose();
}

void ObservationSet::clear() {
  inputs.resize(0, inputs.cols());
  objective.resize(0);
  constraints.resize(0, constraints.cols());
}

double bilog(double y) {
  if (!std::isfinite(y)) throw std::invalid_argument("bilog: non-finite input");
  return std::copysign(std::log1p(std::abs(y)), y);
}

Vector bilog(const Vector& y) {
  Vector out(y.size());
  for (Index i = 0; i < y.size(); ++i) out[i] = bilog(y[i]);
  return out;
}

double CopulaState::rank_of(double raw) const {
  const auto& v = sorted_raw_values;
  const auto lo = std::lower_bound(v.begin(), v.end(), raw);
  const auto hi = std::upper_bound(v.begin(), v.end(), raw);
  const double below = static_cast<double>(lo - v.begin());
  const double ties = static_cast<double>(hi - lo);
  if (ties > 0.0) return below + (ties + 1.0) / 2.0;
  // Strictly between two fitted values (or outside the range): half rank.
  return below + 0.5;
}

double CopulaState::quantile(double raw) const {
  const double n = static_cast<double>(sorted_raw_values.size());
  return rank_of(raw) / (n + 1.0);
}

double CopulaState::transform(double raw) const { return normal_quantile(quantile(raw)); }

double CopulaState::inverse(double transformed) const {
  const auto& v = sorted_raw_values;
  if (v.empty()) throw std::logic_error("CopulaState::inverse: empty state");
  const double n = static_cast<double>(v.size());
  const double rank = normal_cdf(transformed) * (n + 1.0);
  if (rank <= 1.0) return v.front();
  if (rank >= n) return v.back();
  const auto k = static_cast<std::size_t>(std::floor(rank));
  const double frac = rank - static_cast<double>(k);
  return v[k - 1] + frac * (v[k] - v[k - 1]);
}

CopulaFit copula_fit_transform(const Vector& raw) {
  if (raw.size() < 1) throw std::invalid_argument("copula_fit_transform: empty input");
  if (!raw.allFinite()) throw std::invalid_argument("copula_fit_transform: non-finite input");
  CopulaFit out;
  out.state.sorted_raw_values.assign(raw.data(), raw.data() + raw.size());
  std::sort(out.state.sorted_raw_values.begin(), out.state.sorted_raw_values.end());
  out.transformed.resize(raw.size());
  for (Index i = 0; i < raw.size(); ++i) out.transformed[i] = out.state.transform(raw[i]);
  return out;
}

TransformedDataset transform_dataset(const ObservationSet& obs, TransformToggle toggle) {
  if (obs.empty()) throw std::invalid_argument("transform_dataset: empty observation set");
  TransformedDataset out;
  if (toggle.copula) {
    auto fit = copula_fit_transform(obs.objective);
    out.objective = std::move(fit.transformed);
    out.copula = std::move(fit.state);
  } else {
    out.objective = obs.objective;
  }
  out.constraints = obs.constraints;
  if (toggle.bilog) out.constraints = out.constraints.unaryExpr([](double v) { return bilog(v); });

  out.objective_standardized = Standardization::of(out.objective).apply(out.objective);
  out.constraints_standardized.resize(out.constraints.rows(), out.constraints.cols());
  for (Index c = 0; c < out.constraints.cols(); ++c) {
    const Vector col = out.constraints.col(c);
    out.constraints_standardized.col(c) = Standardization::of(col).apply(col);
  }
  return out;
}

}  // namespace scbo
