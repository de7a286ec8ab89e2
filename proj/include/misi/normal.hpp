#pragma once

namespace misi::normal {

/// Standard normal density.
double pdf(double x);

/// Standard normal CDF via erfc, accurate in both tails.
double cdf(double x);

/// 1 - cdf(x) without cancellation for large x.
double upper_tail(double x);

/// Inverse CDF for p in (0, 1): Acklam's rational approximation (relative
/// error below 1.2e-9) polished by one Halley step against erfc. Returns
/// -inf/+inf at p = 0/1 and NaN outside [0, 1].
double quantile(double p);

}  // namespace misi::normal
