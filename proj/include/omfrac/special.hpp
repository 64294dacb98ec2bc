#pragma once

// Gamma/Beta special functions used by the fractional kernels and the
// OM divergence constant. Self-contained Lanczos implementation.

namespace omfrac {

// Gamma(x) for x > 0. Lanczos approximation (g = 7, 9 terms),
// relative error below 1e-13 on (0, 10).
double gamma_fn(double x);

// log Gamma(x), x > 0.
double log_gamma(double x);

// Beta(x, y) = Gamma(x)Gamma(y)/Gamma(x+y), x, y > 0.
double beta_fn(double x, double y);

// d_H = sqrt(2H Gamma(H+1/2) Gamma(3/2-H) / Gamma(2-2H)).
// Multiplies the divergence term of the OM functional; equals 1 at H = 1/2.
double dh_constant(double hurst);

}  // namespace omfrac
