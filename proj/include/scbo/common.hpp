#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <random>
#include <stdexcept>

namespace scbo {

using Vector = Eigen::VectorXd;
// Point sets are stored one point per row.
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

using Rng = std::mt19937_64;

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EvaluationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Derive an independent 64-bit seed from a generator without disturbing
// reproducibility of the caller's stream beyond one draw.
inline std::uint64_t split_seed(Rng& rng) { return rng(); }

}  // namespace scbo
