#pragma once

#include "omfrac/grid.hpp"

// Discrete Riemann-Liouville fractional integrals and Weyl-form derivatives
// on uniform grids. All operators use product integration: exact moments of
// the singular kernel against piecewise-linear data, so Holder-rough inputs
// are handled without regularization parameters.

namespace omfrac {

// Order parameter; all operators here use orders in (0,1).
struct FracOrder {
  double alpha;
  explicit FracOrder(double a);
};

// (I^a_{0+} f)(t_k) = 1/Gamma(a) int_0^{t_k} (t_k-y)^{a-1} f(y) dy, output[0]=0.
SampledPath frac_integral_left(const SampledPath& f, FracOrder alpha);

// (I^a_{T-} f)(t_k) = 1/Gamma(a) int_{t_k}^{T} (y-t_k)^{a-1} f(y) dy,
// output[n-1]=0.
SampledPath frac_integral_right(const SampledPath& f, FracOrder alpha);

// Weyl form of D^a_{0+}:
//   1/Gamma(1-a) [ f(t)/t^a + a int_0^t (f(t)-f(y))/(t-y)^{a+1} dy ].
// A t^a endpoint component detected from the first subinterval is peeled off
// and differentiated in closed form; node 0 is extrapolated from nodes 1,2.
SampledPath weyl_derivative_left(const SampledPath& f, FracOrder alpha);

// Mirror image about t = T; node n-1 extrapolated.
SampledPath weyl_derivative_right(const SampledPath& f, FracOrder alpha);

enum class WeightedMode {
  SingularComposite,  // s^{-a} I^a_{0+} s^{a} f   (drift image, H < 1/2)
  RegularComposite,   // s^{a} D^a_{0+} s^{-a} f   (drift image, H > 1/2)
};

// The power-weighted composites of the fractional OM functionals. The
// SingularComposite resolves the s^a kink of the weighted input exactly on
// the first subinterval; both composites extrapolate the node-0 output.
SampledPath weighted_frac_op(const SampledPath& f, FracOrder alpha,
                             WeightedMode mode);

namespace detail {

// I^a_{0+}(s^a f) with the s^a profile of the weighted input integrated
// exactly on the first subinterval.
SampledPath frac_integral_left_powerweight(const SampledPath& f, double a);

}  // namespace detail

}  // namespace omfrac
