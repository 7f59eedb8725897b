#pragma once

#include "scbo/common.hpp"
#include "scbo/standardization.hpp"

#include <optional>
#include <vector>

namespace scbo {

/// Evaluated points in unit-cube coordinates with raw outputs.
struct ObservationSet {
  Matrix inputs;       // n x d, unit cube
  Vector objective;    // n
  Matrix constraints;  // n x m

  ObservationSet() = default;
  ObservationSet(int dim, int constraint_count)
      : inputs(0, dim), objective(0), constraints(0, constraint_count) {}

  Index size() const { return inputs.rows(); }
  int dim() const { return static_cast<int>(inputs.cols()); }
  int constraint_count() const { return static_cast<int>(constraints.cols()); }
  bool empty() const { return size() == 0; }

  void append(const Vector& unit_point, double objective_value, const Vector& constraint_values);
  void clear();
};

/// sgn(y) ln(1 + |y|). Throws std::invalid_argument on non-finite input.
double bilog(double y);
Vector bilog(const Vector& y);

enum class PlottingPosition {
  // q = rank / (n + 1), average ranks for ties.
  weibull,
};

/// Empirical-quantile state of a Gaussian copula fitted to raw values.
struct CopulaState {
  std::vector<double> sorted_raw_values;
  PlottingPosition quantile_rule = PlottingPosition::weibull;

  /// Average 1-based rank of `raw` among the fitted values (fractional
  /// when it falls between or ties with fitted values).
  double rank_of(double raw) const;
  double quantile(double raw) const;
  /// Maps a raw value through the fitted copula.
  double transform(double raw) const;
  /// Maps a transformed value back to the raw scale by interpolating the
  /// empirical quantile function.
  double inverse(double transformed) const;
};

struct CopulaFit {
  CopulaState state;
  Vector transformed;
};

CopulaFit copula_fit_transform(const Vector& raw);

struct TransformToggle {
  bool copula = true;
  bool bilog = true;

  static TransformToggle enabled(bool on) { return {on, on}; }
};

struct TransformedDataset {
  // Transformed columns before standardization.
  Vector objective;
  Matrix constraints;
  // Same columns standardized to zero mean and unit variance.
  Vector objective_standardized;
  Matrix constraints_standardized;
  std::optional<CopulaState> copula;
};

TransformedDataset transform_dataset(const ObservationSet& obs, TransformToggle toggle);

}  // namespace scbo
