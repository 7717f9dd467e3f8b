#pragma once

namespace hotinfer {

/// Standard normal CDF.
double normal_cdf(double x);

/// Standard normal quantile, Wichura's AS 241 (PPND16) rational
/// approximation, absolute error below 1e-9 on (0, 1).
double normal_quantile(double u);

/// Test hook: adds a bias to every normal_quantile result. Used by the
/// selftest negative control to prove the quantile check can fail.
void set_quantile_perturbation(double delta);

}  // namespace hotinfer
