#pragma once

#include "scbo/common.hpp"

#include <algorithm>
#include <cmath>

namespace scbo {

/// Mean and sample standard deviation (n - 1 denominator). The scale is 1
/// for fewer than two values or for constant data.
struct Standardization {
  double shift = 0.0;
  double scale = 1.0;

  static Standardization of(const Vector& values) {
    Standardization s;
    const Index n = values.size();
    if (n == 0) return s;
    s.shift = values.mean();
    if (n >= 2) {
      const double var = (values.array() - s.shift).square().sum() / static_cast<double>(n - 1);
      const double sd = std::sqrt(var);
      if (std::isfinite(sd) && sd > 1e-12 * std::max(1.0, std::abs(s.shift))) s.scale = sd;
    }
    return s;
  }

  Vector apply(const Vector& values) const { return ((values.array() - shift) / scale).matrix(); }
};

}  // namespace scbo
