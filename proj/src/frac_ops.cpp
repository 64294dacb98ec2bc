#include "omfrac/frac_ops.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "omfrac/special.hpp"

namespace omfrac {

namespace {

// Moments of u^{a-1} over [(m-1)dt, m dt] against the linear hat basis.
// wlo multiplies the far node value, whi the near one (lag m = k - j).
struct PiWeights {
  std::vector<double> wlo, whi;
};

PiWeights integral_weights(int n, double dt, double a) {
  PiWeights w;
  w.wlo.resize(static_cast<std::size_t>(n));
  w.whi.resize(static_cast<std::size_t>(n));
  for (int m = 1; m < n; ++m) {
    const double md = static_cast<double>(m);
    const double P = std::pow(dt, a) * (std::pow(md, a) - std::pow(md - 1.0, a)) / a;
    const double Q = std::pow(dt, a + 1.0) *
                     (std::pow(md, a + 1.0) - std::pow(md - 1.0, a + 1.0)) /
                     (a + 1.0);
    w.wlo[static_cast<std::size_t>(m)] = (Q - (md - 1.0) * dt * P) / dt;
    w.whi[static_cast<std::size_t>(m)] = (md * dt * P - Q) / dt;
  }
  return w;
}

// Moments of u^{-a-1} for the Weyl difference kernel, lags m >= 2.
struct WeylWeights {
  std::vector<double> wlo, whi;  // indexed by lag m
  double c1;                     // adjacent-subinterval weight on the near slope
};

WeylWeights weyl_weights(int n, double dt, double a) {
  WeylWeights w;
  w.wlo.assign(static_cast<std::size_t>(n) + 1, 0.0);
  w.whi.assign(static_cast<std::size_t>(n) + 1, 0.0);
  for (int m = 2; m <= n; ++m) {
    const double md = static_cast<double>(m);
    const double R = std::pow(dt, -a) *
                     (std::pow(md - 1.0, -a) - std::pow(md, -a)) / a;
    const double S = std::pow(dt, 1.0 - a) *
                     (std::pow(md, 1.0 - a) - std::pow(md - 1.0, 1.0 - a)) /
                     (1.0 - a);
    w.wlo[static_cast<std::size_t>(m)] = (S - (md - 1.0) * dt * R) / dt;
    w.whi[static_cast<std::size_t>(m)] = (md * dt * R - S) / dt;
  }
  w.c1 = std::pow(dt, -a) / (1.0 - a);
  return w;
}

// First-subinterval exponent probe: detect a t^a component at the endpoint.
// Returns its coefficient, or 0 when the data does not look like f0 + c t^a.
double probe_power_coeff(double d1, double d2, double dt, double a) {
  if (d1 == 0.0) return 0.0;
  const double r = d2 / d1;
  if (!(r > 0.0)) return 0.0;
  const double p = std::log2(r);
  if (std::abs(p - a) >= 0.25) return 0.0;
  return d1 / std::pow(dt, a);
}

}  // namespace

FracOrder::FracOrder(double a) : alpha(a) {
  if (!(a > 0.0) || !(a < 1.0)) {
    throw std::invalid_argument("FracOrder: order must lie in (0,1)");
  }
}

SampledPath frac_integral_left(const SampledPath& f, FracOrder alpha) {
  const double a = alpha.alpha;
  const int n = f.size();
  const double dt = f.grid->dt();
  const PiWeights w = integral_weights(n, dt, a);
  SampledPath out = SampledPath::zero(f.grid);
  const double ig = 1.0 / gamma_fn(a);
  for (int k = 1; k < n; ++k) {
    double acc = 0.0;
    for (int j = 0; j < k; ++j) {
      const int m = k - j;
      acc += f[j] * w.wlo[static_cast<std::size_t>(m)] +
             f[j + 1] * w.whi[static_cast<std::size_t>(m)];
    }
    out[k] = acc * ig;
  }
  return out;
}

SampledPath frac_integral_right(const SampledPath& f, FracOrder alpha) {
  const double a = alpha.alpha;
  const int n = f.size();
  const double dt = f.grid->dt();
  const PiWeights w = integral_weights(n, dt, a);
  SampledPath out = SampledPath::zero(f.grid);
  const double ig = 1.0 / gamma_fn(a);
  for (int k = 0; k + 1 < n; ++k) {
    double acc = 0.0;
    for (int j = k; j + 1 < n; ++j) {
      const int m = j - k + 1;
      acc += f[j] * w.whi[static_cast<std::size_t>(m)] +
             f[j + 1] * w.wlo[static_cast<std::size_t>(m)];
    }
    out[k] = acc * ig;
  }
  return out;
}

SampledPath weyl_derivative_left(const SampledPath& f, FracOrder alpha) {
  const double a = alpha.alpha;
  const int n = f.size();
  const double dt = f.grid->dt();
  const auto& t = f.grid->nodes;
  const double f0 = f[0];
  const double c = probe_power_coeff(f[1] - f0, f[2] - f0, dt, a);

  // remainder after peeling f0 + c t^a
  std::vector<double> r(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    r[static_cast<std::size_t>(k)] =
        f[k] - f0 - c * std::pow(t[static_cast<std::size_t>(k)], a);
  }

  const WeylWeights w = weyl_weights(n, dt, a);
  SampledPath out = SampledPath::zero(f.grid);
  const double ig = 1.0 / gamma_fn(1.0 - a);
  const double peel = c * gamma_fn(1.0 + a);
  for (int k = 1; k < n; ++k) {
    const double rk = r[static_cast<std::size_t>(k)];
    double acc = (rk - r[static_cast<std::size_t>(k - 1)]) * w.c1;
    for (int j = 0; j + 1 < k; ++j) {
      const int m = k - j;
      acc += (rk - r[static_cast<std::size_t>(j)]) *
                 w.wlo[static_cast<std::size_t>(m)] +
             (rk - r[static_cast<std::size_t>(j + 1)]) *
                 w.whi[static_cast<std::size_t>(m)];
    }
    const double tk = t[static_cast<std::size_t>(k)];
    out[k] = (rk * std::pow(tk, -a) + a * acc) * ig + peel +
             f0 * std::pow(tk, -a) * ig;
  }
  out[0] = 2.0 * out[1] - out[2];
  return out;
}

SampledPath weyl_derivative_right(const SampledPath& f, FracOrder alpha) {
  const double a = alpha.alpha;
  const int n = f.size();
  const double dt = f.grid->dt();
  const auto& t = f.grid->nodes;
  const double T = f.grid->horizon;
  const double fT = f[n - 1];
  const double c = probe_power_coeff(f[n - 2] - fT, f[n - 3] - fT, dt, a);

  std::vector<double> r(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    r[static_cast<std::size_t>(k)] =
        f[k] - fT - c * std::pow(T - t[static_cast<std::size_t>(k)], a);
  }

  const WeylWeights w = weyl_weights(n, dt, a);
  SampledPath out = SampledPath::zero(f.grid);
  const double ig = 1.0 / gamma_fn(1.0 - a);
  const double peel = c * gamma_fn(1.0 + a);
  for (int k = 0; k + 1 < n; ++k) {
    const double rk = r[static_cast<std::size_t>(k)];
    double acc = (r[static_cast<std::size_t>(k + 1)] - rk) * w.c1;
    for (int j = k + 1; j + 1 < n; ++j) {
      const int m = j - k + 1;
      acc += (r[static_cast<std::size_t>(j)] - rk) *
                 w.whi[static_cast<std::size_t>(m)] +
             (r[static_cast<std::size_t>(j + 1)] - rk) *
                 w.wlo[static_cast<std::size_t>(m)];
    }
    const double ts = T - t[static_cast<std::size_t>(k)];
    out[k] = (rk * std::pow(ts, -a) - a * acc) * ig + peel +
             fT * std::pow(ts, -a) * ig;
  }
  out[n - 1] = 2.0 * out[n - 2] - out[n - 3];
  return out;
}

namespace detail {

SampledPath frac_integral_left_powerweight(const SampledPath& f, double a) {
  const int n = f.size();
  const double dt = f.grid->dt();
  const auto& t = f.grid->nodes;
  std::vector<double> w(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    w[static_cast<std::size_t>(k)] =
        std::pow(t[static_cast<std::size_t>(k)], a) * f[k];
  }
  const PiWeights pw = integral_weights(n, dt, a);
  SampledPath out = SampledPath::zero(f.grid);
  const double ig = 1.0 / gamma_fn(a);
  const double Ba = gamma_fn(1.0 + a) * gamma_fn(a) / gamma_fn(1.0 + 2.0 * a);
  for (int k = 1; k < n; ++k) {
    double acc = 0.0;
    for (int j = 1; j < k; ++j) {
      const int m = k - j;
      acc += w[static_cast<std::size_t>(j)] * pw.wlo[static_cast<std::size_t>(m)] +
             w[static_cast<std::size_t>(j + 1)] * pw.whi[static_cast<std::size_t>(m)];
    }
    // first subinterval: w(y) ~ w1 (y/dt)^a
    if (k == 1) {
      acc += w[1] * Ba * std::pow(dt, a);
    } else {
      const double tk = t[static_cast<std::size_t>(k)];
      const double k0 = std::pow(tk, a - 1.0);
      const double k1 = std::pow(tk - dt, a - 1.0);
      const double B = (k1 - k0) / dt;
      acc += w[1] * (k0 * dt / (1.0 + a) + B * dt * dt / (2.0 + a));
    }
    out[k] = acc * ig;
  }
  return out;
}

}  // namespace detail

SampledPath weighted_frac_op(const SampledPath& f, FracOrder alpha,
                             WeightedMode mode) {
  const double a = alpha.alpha;
  const int n = f.size();
  const auto& t = f.grid->nodes;
  SampledPath out = SampledPath::zero(f.grid);
  if (mode == WeightedMode::SingularComposite) {
    SampledPath g = detail::frac_integral_left_powerweight(f, a);
    for (int k = 1; k < n; ++k) {
      out[k] = std::pow(t[static_cast<std::size_t>(k)], -a) * g[k];
    }
  } else {
    SampledPath w = SampledPath::zero(f.grid);
    for (int k = 1; k < n; ++k) {
      w[k] = std::pow(t[static_cast<std::size_t>(k)], -a) * f[k];
    }
    w[0] = 2.0 * w[1] - w[2];
    SampledPath g = weyl_derivative_left(w, alpha);
    for (int k = 1; k < n; ++k) {
      out[k] = std::pow(t[static_cast<std::size_t>(k)], a) * g[k];
    }
  }
  out[0] = 2.0 * out[1] - out[2];
  return out;
}

}  // namespace omfrac
