#pragma once

#include "scbo/common.hpp"

#include <boost/random/sobol.hpp>

#include <cstdint>
#include <vector>

namespace scbo {

/// Sobol sequence in [0, 1)^d with a random digital shift: every point is
/// XOR-ed coordinatewise with a fixed 64-bit word drawn from the seed.
/// The shifted sequence keeps the (t, s)-net structure of the original.
class ScrambledSobol {
 public:
  static constexpr int kMaxDimension = 1024;

  ScrambledSobol(int dim, std::uint64_t seed);

  int dim() const { return dim_; }
  Vector next();
  /// The next `count` points, one per row.
  Matrix draw(Index count);

 private:
  int dim_;
  boost::random::sobol engine_;
  std::vector<std::uint64_t> shift_;
  // The engine starts at the second point; the origin is emitted first.
  bool at_origin_ = true;
};

}  // namespace scbo
