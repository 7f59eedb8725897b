#pragma once

namespace scbo {

double normal_pdf(double z);
double normal_cdf(double z);

/// Inverse of the standard normal CDF (Wichura's AS241, about 1e-16
/// relative accuracy). Returns -inf / +inf at p == 0 / p == 1 and throws
/// std::invalid_argument outside [0, 1].
double normal_quantile(double p);

}  // namespace scbo
