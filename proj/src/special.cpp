#include "omfrac/special.hpp"

#include <cmath>
#include <stdexcept>

namespace omfrac {

namespace {

// Lanczos coefficients, g = 7, n = 9 (Godfrey's tabulation).
constexpr double kLanczosG = 7.0;
constexpr double kLanczos[9] = {
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
};

constexpr double kSqrtTwoPi = 2.5066282746310002;

}  // namespace

double gamma_fn(double x) {
  if (!(x > 0.0)) {
    throw std::invalid_argument("gamma_fn: requires x > 0");
  }
  if (x < 0.5) {
    // reflection keeps the series argument in its accurate range
    return M_PI / (std::sin(M_PI * x) * gamma_fn(1.0 - x));
  }
  double z = x - 1.0;
  double a = kLanczos[0];
  for (int i = 1; i < 9; ++i) {
    a += kLanczos[i] / (z + static_cast<double>(i));
  }
  const double t = z + kLanczosG + 0.5;
  return kSqrtTwoPi * std::pow(t, z + 0.5) * std::exp(-t) * a;
}

double log_gamma(double x) {
  if (!(x > 0.0)) {
    throw std::invalid_argument("log_gamma: requires x > 0");
  }
  if (x < 0.5) {
    return std::log(M_PI / std::sin(M_PI * x)) - log_gamma(1.0 - x);
  }
  double z = x - 1.0;
  double a = kLanczos[0];
  for (int i = 1; i < 9; ++i) {
    a += kLanczos[i] / (z + static_cast<double>(i));
  }
  const double t = z + kLanczosG + 0.5;
  return 0.5 * std::log(2.0 * M_PI) + (z + 0.5) * std::log(t) - t + std::log(a);
}

double beta_fn(double x, double y) {
  if (!(x > 0.0) || !(y > 0.0)) {
    throw std::invalid_argument("beta_fn: requires x, y > 0");
  }
  return std::exp(log_gamma(x) + log_gamma(y) - log_gamma(x + y));
}

double dh_constant(double hurst) {
  if (hurst == 0.5) return 1.0;
  return std::sqrt(2.0 * hurst * gamma_fn(hurst + 0.5) * gamma_fn(1.5 - hurst) /
                   gamma_fn(2.0 - 2.0 * hurst));
}

}  // namespace omfrac
