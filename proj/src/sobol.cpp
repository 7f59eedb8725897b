#include "scbo/sobol.hpp"

#include <stdexcept>
#include <string>

namespace scbo {

ScrambledSobol::ScrambledSobol(int dim, std::uint64_t seed)
    : dim_(dim),
      engine_(static_cast<std::size_t>(dim >= 1 && dim <= kMaxDimension ? dim : 1)),
      shift_(static_cast<std::size_t>(dim >= 1 ? dim : 0)) {
  if (dim < 1 || dim > kMaxDimension)
    throw std::invalid_argument("ScrambledSobol: dimension must be in [1, " +
                                std::to_string(kMaxDimension) + "]");
  Rng rng(seed);
  for (auto& s : shift_) s = rng();
}

Vector ScrambledSobol::next() {
  Vector point(dim_);
  const bool origin = at_origin_;
  at_origin_ = false;
  for (int k = 0; k < dim_; ++k) {
    const std::uint64_t raw = origin ? 0 : static_cast<std::uint64_t>(engine_());
    const std::uint64_t bits = raw ^ shift_[static_cast<std::size_t>(k)];
    // Top 53 bits keep the value strictly below 1.
    point[k] = static_cast<double>(bits >> 11) * 0x1.0p-53;
  }
  return point;
}

Matrix ScrambledSobol::draw(Index count) {
  Matrix out(count, dim_);
  for (Index i = 0; i < count; ++i) out.row(i) = next().transpose();
  return out;
}

}  // namespace scbo
