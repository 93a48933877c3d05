#pragma once

namespace gpcc {

// Inverse CDF of the standard normal distribution. Rational initial guess
// polished with one Halley step against erfc, giving |error| < 1e-13 over
// (0, 1). Throws DomainError outside (0, 1).
double normal_quantile(double p);

// Standard normal CDF.
double normal_cdf(double x);

}  // namespace gpcc
