#include "omfrac/fbm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "omfrac/parallel.hpp"
#include "omfrac/rng.hpp"
#include "omfrac/special.hpp"

namespace omfrac {

namespace {

constexpr double kStandardTol = 1e-14;
constexpr int kMaxSampleGrid = 4096;

struct LinCoef {
  double a, b;  // a + b x
};

LinCoef through(double x0, double y0, double x1, double y1) {
  const double s = (y1 - y0) / (x1 - x0);
  return {y0 - s * x0, s};
}

// (int x^q, int x^{q+1}) over [lo, hi]
inline void powmom(double lo, double hi, double q, double& m0, double& m1) {
  m0 = (std::pow(hi, q + 1.0) - std::pow(lo, q + 1.0)) / (q + 1.0);
  m1 = (std::pow(hi, q + 2.0) - std::pow(lo, q + 2.0)) / (q + 2.0);
}

// (int (u-s)^{a-1} du, int (u-s)^{a-1} u du) over [lo, hi], lo >= s
inline void kermom(double s, double lo, double hi, double a, double& m0,
                   double& m1) {
  const double x0 = lo - s;
  const double x1 = hi - s;
  const double P = (std::pow(x1, a) - std::pow(x0, a)) / a;
  const double Q = (std::pow(x1, a + 1.0) - std::pow(x0, a + 1.0)) / (a + 1.0);
  m0 = P;
  m1 = Q + s * P;
}

// Panel edges on [lo, hi] graded toward one or both ends.
std::vector<double> graded_edges(double lo, double hi, int m, bool left,
                                 bool right) {
  std::vector<double> e(static_cast<std::size_t>(m) + 1);
  for (int i = 0; i <= m; ++i) {
    const double x = static_cast<double>(i) / static_cast<double>(m);
    double w = x;
    if (left && right) {
      w = 0.5 * (1.0 - std::cos(M_PI * x));
    } else if (left) {
      w = x * x;
    } else if (right) {
      w = 1.0 - (1.0 - x) * (1.0 - x);
    }
    e[static_cast<std::size_t>(i)] = lo + (hi - lo) * w;
  }
  return e;
}

// int_s^t (u-s)^{a-1} g(u) du, g linearized on graded panels. For a in (-1,0)
// the first panel needs g(s) = 0 and uses the slope moment.
template <typename G>
double graded_inner(double s, double t, double a, G&& g, int nsub,
                    bool gs_zero) {
  const auto edges = graded_edges(s, t, nsub, true, false);
  double acc = 0.0;
  double prev = s;
  double gl = gs_zero ? 0.0 : g(s);
  bool first = true;
  for (int i = 1; i <= nsub; ++i) {
    const double hi = edges[static_cast<std::size_t>(i)];
    if (hi <= prev) continue;
    const double gr = g(hi);
    const double slope = (gr - gl) / (hi - prev);
    if (first && gs_zero) {
      acc += slope * std::pow(hi - s, a + 1.0) / (a + 1.0);
    } else {
      double m0, m1;
      kermom(s, prev, hi, a, m0, m1);
      acc += (gl - slope * prev) * m0 + slope * m1;
    }
    first = false;
    prev = hi;
    gl = gr;
  }
  return acc;
}

}  // namespace

HurstParam HurstParam::of(double H) {
  if (!(H > 0.25) || !(H < 1.0)) {
    throw std::invalid_argument("HurstParam: H must lie in (1/4, 1)");
  }
  HurstParam p;
  p.H = H;
  p.alpha = std::abs(H - 0.5);
  if (std::abs(H - 0.5) < kStandardTol) {
    p.regime = HurstRegime::Standard;
  } else if (H < 0.5) {
    p.regime = HurstRegime::Singular;
  } else {
    p.regime = HurstRegime::Regular;
  }
  return p;
}

double SigmaSpec::value(double t) const {
  switch (family) {
    case SigmaFamily::Constant:
      return scale;
    case SigmaFamily::Sinusoidal:
      return scale * (2.0 + std::sin(2.0 * M_PI * oscillations * t));
    case SigmaFamily::Tabulated: {
      if (t <= table_t.front()) return table_v.front();
      if (t >= table_t.back()) return table_v.back();
      auto it = std::upper_bound(table_t.begin(), table_t.end(), t);
      const std::size_t i = static_cast<std::size_t>(it - table_t.begin());
      const double lam = (t - table_t[i - 1]) / (table_t[i] - table_t[i - 1]);
      return table_v[i - 1] + lam * (table_v[i] - table_v[i - 1]);
    }
  }
  return scale;
}

double SigmaSpec::deriv(double t) const {
  switch (family) {
    case SigmaFamily::Constant:
      return 0.0;
    case SigmaFamily::Sinusoidal:
      return scale * 2.0 * M_PI * oscillations *
             std::cos(2.0 * M_PI * oscillations * t);
    case SigmaFamily::Tabulated: {
      const double h = (table_t.back() - table_t.front()) * 1e-4;
      const double lo = std::max(table_t.front(), t - h);
      const double hi = std::min(table_t.back(), t + h);
      return (value(hi) - value(lo)) / (hi - lo);
    }
  }
  return 0.0;
}

double SigmaSpec::lower_bound() const {
  switch (family) {
    case SigmaFamily::Constant:
      return scale;
    case SigmaFamily::Sinusoidal:
      return scale;  // c (2 + sin) >= c
    case SigmaFamily::Tabulated:
      return *std::min_element(table_v.begin(), table_v.end());
  }
  return scale;
}

double SigmaSpec::upper_bound() const {
  switch (family) {
    case SigmaFamily::Constant:
      return scale;
    case SigmaFamily::Sinusoidal:
      return 3.0 * scale;
    case SigmaFamily::Tabulated:
      return *std::max_element(table_v.begin(), table_v.end());
  }
  return scale;
}

double SigmaSpec::holder_gamma() const {
  return family == SigmaFamily::Tabulated ? 1.0 : 1.0;
}

SigmaSpec SigmaSpec::constant(double c) {
  if (!(c > 0.0)) throw std::invalid_argument("SigmaSpec: need c > 0");
  SigmaSpec s;
  s.family = SigmaFamily::Constant;
  s.scale = c;
  return s;
}

SigmaSpec SigmaSpec::sinusoidal(double c, int oscillations) {
  if (!(c > 0.0) || oscillations < 1) {
    throw std::invalid_argument("SigmaSpec: need c > 0 and oscillations >= 1");
  }
  SigmaSpec s;
  s.family = SigmaFamily::Sinusoidal;
  s.scale = c;
  s.oscillations = oscillations;
  return s;
}

SigmaSpec SigmaSpec::tabulated(std::vector<double> t, std::vector<double> v) {
  if (t.size() != v.size() || t.size() < 2) {
    throw std::invalid_argument("SigmaSpec: tabulated needs >= 2 samples");
  }
  SigmaSpec s;
  s.family = SigmaFamily::Tabulated;
  s.table_t = std::move(t);
  s.table_v = std::move(v);
  if (s.lower_bound() <= 0.0) {
    throw std::invalid_argument("SigmaSpec: tabulated sigma must stay positive");
  }
  return s;
}

NoiseModel NoiseModel::of(HurstParam hurst, SigmaSpec sigma) {
  if (!(sigma.lower_bound() > 0.0)) {
    throw std::invalid_argument("NoiseModel: sigma must be bounded below by m > 0");
  }
  if (!(sigma.holder_gamma() + hurst.H > 1.0)) {
    throw std::invalid_argument("NoiseModel: need gamma + H > 1");
  }
  return {hurst, std::move(sigma)};
}

double covariance_RH(const HurstParam& hurst, double t, double s) {
  const double twoH = 2.0 * hurst.H;
  return 0.5 * (std::pow(std::abs(t), twoH) + std::pow(std::abs(s), twoH) -
                std::pow(std::abs(t - s), twoH));
}

double kernel_cH(double H) {
  if (!(H > 0.5)) throw std::invalid_argument("kernel_cH: needs H > 1/2");
  return std::sqrt(H * (2.0 * H - 1.0) / beta_fn(2.0 - 2.0 * H, H - 0.5));
}

double kernel_bH(double H) {
  if (!(H < 0.5)) throw std::invalid_argument("kernel_bH: needs H < 1/2");
  return std::sqrt(2.0 * H / ((1.0 - 2.0 * H) * beta_fn(1.0 - 2.0 * H, H + 0.5)));
}

double kernel_KH(const HurstParam& hurst, double t, double s) {
  if (!(s > 0.0) || !(s < t)) {
    throw std::invalid_argument("kernel_KH: requires 0 < s < t");
  }
  if (hurst.standard()) return 1.0;
  const double a = hurst.alpha;
  if (hurst.H > 0.5) {
    const double inner = graded_inner(
        s, t, a, [a](double u) { return std::pow(u, a); }, 192, false);
    return kernel_cH(hurst.H) * std::pow(s, -a) * inner;
  }
  const double inner = graded_inner(
      s, t, 1.0 - a, [a](double u) { return std::pow(u, -(a + 1.0)); }, 192,
      false);
  return kernel_bH(hurst.H) *
         (std::pow(s / t, a) * std::pow(t - s, -a) + a * std::pow(s, a) * inner);
}

FbmOperators::FbmOperators(GridPtr grid, HurstParam hurst, const SigmaSpec* sigma)
    : grid_(std::move(grid)), hurst_(hurst) {
  if (sigma != nullptr) {
    SigmaSpec copy = *sigma;
    sig_ = [copy](double t) { return copy.value(t); };
  } else {
    sig_ = [](double) { return 1.0; };
  }
  build_rows();
}

double FbmOperators::kernel_point(double t, double s, int nsub) const {
  const double a = hurst_.alpha;
  const auto& sig = sig_;
  if (hurst_.standard()) return sig(s);
  if (hurst_.H > 0.5) {
    const double inner = graded_inner(
        s, t, a, [&](double u) { return std::pow(u, a) * sig(u); }, nsub, false);
    return kernel_cH(hurst_.H) * std::pow(s, -a) * inner;
  }
  const double bH = kernel_bH(hurst_.H);
  const double ss = sig(s);
  const double i1 = graded_inner(
      s, t, 1.0 - a, [a](double u) { return std::pow(u, -(a + 1.0)); }, nsub,
      false);
  const double i2 = graded_inner(
      s, t, -a, [&](double u) { return (sig(u) - ss) * std::pow(u, -a); }, nsub,
      true);
  const double KH =
      bH * (std::pow(s / t, a) * std::pow(t - s, -a) + a * std::pow(s, a) * i1);
  return ss * KH - a * bH * std::pow(s, a) * i2;
}

void FbmOperators::build_rows() {
  const int n = grid_->n;
  const auto& t = grid_->nodes;
  const int msub = std::min(64 + n / 8, 192);
  W_.setZero(n, n);
  const double dt = grid_->dt();
  parallel_for(n - 1, [&](int lo, int hi) {
    for (int ki = lo; ki < hi; ++ki) {
      const int k = ki + 1;
      const auto edges = graded_edges(0.0, t[static_cast<std::size_t>(k)], msub,
                                      true, true);
      for (int i = 0; i < msub; ++i) {
        const double w = edges[static_cast<std::size_t>(i + 1)] -
                         edges[static_cast<std::size_t>(i)];
        if (w <= 0.0) continue;
        const double sm = 0.5 * (edges[static_cast<std::size_t>(i)] +
                                 edges[static_cast<std::size_t>(i + 1)]);
        const double av = kernel_point(t[static_cast<std::size_t>(k)], sm, 48);
        int j = static_cast<int>(sm / dt);
        j = std::min(j, n - 2);
        const double lam = (sm - t[static_cast<std::size_t>(j)]) / dt;
        W_(k, j) += av * w * (1.0 - lam);
        W_(k, j + 1) += av * w * lam;
      }
    }
  });
}

std::vector<double> FbmOperators::apply(const std::vector<double>& u) const {
  const int n = grid_->n;
  Eigen::Map<const Eigen::VectorXd> uv(u.data(), n);
  Eigen::VectorXd out = W_ * uv;
  return std::vector<double>(out.data(), out.data() + n);
}

const Eigen::MatrixXd& FbmOperators::sampling_matrix() const {
  if (have_amid_) return A_mid_;
  const int n = grid_->n;
  const auto& t = grid_->nodes;
  const double dt = grid_->dt();
  A_mid_.setZero(n, n - 1);
  if (hurst_.standard()) {
    for (int j = 0; j + 1 < n; ++j) {
      const double val = sig_(t[static_cast<std::size_t>(j)] + 0.5 * dt);
      for (int k = j + 1; k < n; ++k) A_mid_(k, j) = val;
    }
    have_amid_ = true;
    return A_mid_;
  }
  const double a = hurst_.alpha;
  const bool high = hurst_.H > 0.5;
  const double cb = high ? kernel_cH(hurst_.H) : kernel_bH(hurst_.H);
  parallel_for(n - 1, [&](int lo, int hi) {
    for (int j = lo; j < hi; ++j) {
      const double s = t[static_cast<std::size_t>(j)] + 0.5 * dt;
      // incremental inner integrals shared by all t_k > s
      double acc1 = 0.0, acc2 = 0.0;
      double prev = s;
      const double ss = sig_(s);
      double g1l = high ? std::pow(s, a) * sig_(s) : std::pow(s, -(a + 1.0));
      double g2l = 0.0;
      bool first = true;
      for (int k = j + 1; k < n; ++k) {
        const double hiu = t[static_cast<std::size_t>(k)];
        if (high) {
          const double g1r = std::pow(hiu, a) * sig_(hiu);
          double m0, m1;
          kermom(s, prev, hiu, a, m0, m1);
          const LinCoef lc = through(prev, g1l, hiu, g1r);
          acc1 += lc.a * m0 + lc.b * m1;
          g1l = g1r;
          A_mid_(k, j) = cb * std::pow(s, -a) * acc1;
        } else {
          const double g1r = std::pow(hiu, -(a + 1.0));
          double m0, m1;
          kermom(s, prev, hiu, 1.0 - a, m0, m1);
          LinCoef lc = through(prev, g1l, hiu, g1r);
          acc1 += lc.a * m0 + lc.b * m1;
          g1l = g1r;
          const double g2r = (sig_(hiu) - ss) * std::pow(hiu, -a);
          if (first) {
            const double slope = (g2r - g2l) / (hiu - prev);
            acc2 += slope * std::pow(hiu - s, 1.0 - a) / (1.0 - a);
          } else {
            kermom(s, prev, hiu, -a, m0, m1);
            lc = through(prev, g2l, hiu, g2r);
            acc2 += lc.a * m0 + lc.b * m1;
          }
          g2l = g2r;
          const double KH = cb * (std::pow(s / hiu, a) * std::pow(hiu - s, -a) +
                                  a * std::pow(s, a) * acc1);
          A_mid_(k, j) = ss * KH - a * cb * std::pow(s, a) * acc2;
        }
        first = false;
        prev = hiu;
      }
    }
  });
  have_amid_ = true;
  return A_mid_;
}

SampledPath apply_KH(const SampledPath& h, const HurstParam& hurst) {
  FbmOperators ops(h.grid, hurst, nullptr);
  return SampledPath::of(h.grid, ops.apply(h.values));
}

SampledPath apply_KH_sigma(const SampledPath& u, const NoiseModel& noise) {
  FbmOperators ops(u.grid, noise.hurst, &noise.sigma);
  return SampledPath::of(u.grid, ops.apply(u.values));
}

namespace {

// v = h / t^p with central differences; v and v' are smooth when h lies in
// the range of K_H (h ~ t^p x analytic near 0).
void smooth_factor(const SampledPath& h, double p, std::vector<double>& v,
                   std::vector<double>& vp) {
  const int n = h.size();
  const auto& t = h.grid->nodes;
  const double dt = h.grid->dt();
  v.resize(static_cast<std::size_t>(n));
  vp.resize(static_cast<std::size_t>(n));
  for (int k = 1; k < n; ++k) {
    v[static_cast<std::size_t>(k)] =
        h[k] / std::pow(t[static_cast<std::size_t>(k)], p);
  }
  v[0] = 2.0 * v[1] - v[2];
  for (int k = 1; k + 1 < n; ++k) {
    vp[static_cast<std::size_t>(k)] =
        (v[static_cast<std::size_t>(k + 1)] - v[static_cast<std::size_t>(k - 1)]) /
        (2.0 * dt);
  }
  vp[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * dt);
  vp[static_cast<std::size_t>(n - 1)] =
      (3.0 * v[static_cast<std::size_t>(n - 1)] -
       4.0 * v[static_cast<std::size_t>(n - 2)] +
       v[static_cast<std::size_t>(n - 3)]) /
      (2.0 * dt);
}

std::vector<double> central_diff(const SampledPath& h) {
  const int n = h.size();
  const double dt = h.grid->dt();
  std::vector<double> d(static_cast<std::size_t>(n));
  for (int k = 1; k + 1 < n; ++k) {
    d[static_cast<std::size_t>(k)] = (h[k + 1] - h[k - 1]) / (2.0 * dt);
  }
  d[0] = (-3.0 * h[0] + 4.0 * h[1] - h[2]) / (2.0 * dt);
  d[static_cast<std::size_t>(n - 1)] =
      (3.0 * h[n - 1] - 4.0 * h[n - 2] + h[n - 3]) / (2.0 * dt);
  return d;
}

void require_starts_at_zero(const SampledPath& h, const char* who) {
  if (std::abs(h[0]) > 1e-12) {
    throw std::invalid_argument(std::string(who) + ": input must start at 0");
  }
}

}  // namespace

SampledPath apply_KH_inverse(const SampledPath& h, const HurstParam& hurst) {
  require_starts_at_zero(h, "apply_KH_inverse");
  const int n = h.size();
  const auto& t = h.grid->nodes;
  if (hurst.standard()) {
    return SampledPath::of(h.grid, central_diff(h));
  }
  const double a = hurst.alpha;
  const double dH = dh_constant(hurst.H);
  std::vector<double> v, vp;
  SampledPath out = SampledPath::zero(h.grid);
  if (hurst.H > 0.5) {
    // s^a D^a_{0+} s^{-a} h' with s^{-a} h' = (1+a) v + t v'
    smooth_factor(h, 1.0 + a, v, vp);
    SampledPath w = SampledPath::zero(h.grid);
    for (int k = 0; k < n; ++k) {
      w[k] = (1.0 + a) * v[static_cast<std::size_t>(k)] +
             t[static_cast<std::size_t>(k)] * vp[static_cast<std::size_t>(k)];
    }
    SampledPath g = weyl_derivative_left(w, FracOrder(a));
    for (int k = 1; k < n; ++k) {
      out[k] = std::pow(t[static_cast<std::size_t>(k)], a) * g[k] / dH;
    }
  } else {
    // s^{-a} I^a_{0+} s^{a} h' with s^a h' = (1-a) v + t v'
    smooth_factor(h, 1.0 - a, v, vp);
    SampledPath q = SampledPath::zero(h.grid);
    for (int k = 0; k < n; ++k) {
      q[k] = (1.0 - a) * v[static_cast<std::size_t>(k)] +
             t[static_cast<std::size_t>(k)] * vp[static_cast<std::size_t>(k)];
    }
    SampledPath g = frac_integral_left(q, FracOrder(a));
    for (int k = 1; k < n; ++k) {
      out[k] = std::pow(t[static_cast<std::size_t>(k)], -a) * g[k] / dH;
    }
  }
  out[0] = 2.0 * out[1] - out[2];
  return out;
}

SampledPath apply_KH_inverse(const SampledPath& h, const HurstParam& hurst,
                             const std::vector<double>& dh) {
  require_starts_at_zero(h, "apply_KH_inverse");
  if (hurst.standard()) {
    return SampledPath::of(h.grid, dh);
  }
  const int n = h.size();
  const auto& t = h.grid->nodes;
  const double a = hurst.alpha;
  const double dH = dh_constant(hurst.H);
  SampledPath out = SampledPath::zero(h.grid);
  if (hurst.H > 0.5) {
    SampledPath w = SampledPath::zero(h.grid);
    for (int k = 1; k < n; ++k) {
      w[k] = std::pow(t[static_cast<std::size_t>(k)], -a) *
             dh[static_cast<std::size_t>(k)];
    }
    w[0] = 2.0 * w[1] - w[2];
    SampledPath g = weyl_derivative_left(w, FracOrder(a));
    for (int k = 1; k < n; ++k) {
      out[k] = std::pow(t[static_cast<std::size_t>(k)], a) * g[k] / dH;
    }
  } else {
    SampledPath q = SampledPath::zero(h.grid);
    for (int k = 0; k < n; ++k) {
      q[k] = std::pow(t[static_cast<std::size_t>(k)], a) *
             dh[static_cast<std::size_t>(k)];
    }
    SampledPath g = frac_integral_left(q, FracOrder(a));
    for (int k = 1; k < n; ++k) {
      out[k] = std::pow(t[static_cast<std::size_t>(k)], -a) * g[k] / dH;
    }
  }
  out[0] = 2.0 * out[1] - out[2];
  return out;
}

SampledPath apply_KH_sigma_inverse(const SampledPath& f, const NoiseModel& noise) {
  require_starts_at_zero(f, "apply_KH_sigma_inverse");
  const int n = f.size();
  const auto& t = f.grid->nodes;
  const double dt = f.grid->dt();
  // g(t) = int_0^t sigma^{-1} df = f/sigma + int_0^t f sigma'/sigma^2 ds
  SampledPath g = SampledPath::zero(f.grid);
  std::vector<double> integ(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    const double tk = t[static_cast<std::size_t>(k)];
    const double sv = noise.sigma.value(tk);
    integ[static_cast<std::size_t>(k)] =
        f[k] * noise.sigma.deriv(tk) / (sv * sv);
  }
  double acc = 0.0;
  for (int k = 1; k < n; ++k) {
    acc += 0.5 * (integ[static_cast<std::size_t>(k - 1)] +
                  integ[static_cast<std::size_t>(k)]) *
           dt;
    g[k] = f[k] / noise.sigma.value(t[static_cast<std::size_t>(k)]) + acc;
  }
  return apply_KH_inverse(g, noise.hurst);
}

SampledPath apply_KH_star(const SampledPath& f, const NoiseModel& noise) {
  const HurstParam& hurst = noise.hurst;
  if (hurst.standard()) return f;
  const int n = f.size();
  const auto& t = f.grid->nodes;
  const double a = hurst.alpha;
  SampledPath out = SampledPath::zero(f.grid);
  if (hurst.H > 0.5) {
    SampledPath w = SampledPath::zero(f.grid);
    for (int k = 0; k < n; ++k) {
      w[k] = std::pow(t[static_cast<std::size_t>(k)], a) * f[k];
    }
    SampledPath g = frac_integral_right(w, FracOrder(a));
    const double c = kernel_cH(hurst.H) * gamma_fn(a);
    for (int k = 1; k < n; ++k) {
      out[k] = c * std::pow(t[static_cast<std::size_t>(k)], -a) * g[k];
    }
    out[0] = 2.0 * out[1] - out[2];
  } else {
    SampledPath w = SampledPath::zero(f.grid);
    for (int k = 1; k < n; ++k) {
      w[k] = std::pow(t[static_cast<std::size_t>(k)], -a) * f[k];
    }
    w[0] = 2.0 * w[1] - w[2];
    SampledPath g = weyl_derivative_right(w, FracOrder(a));
    const double c = kernel_bH(hurst.H) * gamma_fn(1.0 - a);
    for (int k = 0; k + 1 < n; ++k) {
      out[k] = c * std::pow(t[static_cast<std::size_t>(k)], a) * g[k];
    }
    out[n - 1] = 2.0 * out[n - 2] - out[n - 3];
  }
  return out;
}

SampledPath young_integral(const SampledPath& f, const SampledPath& g) {
  if (f.size() != g.size()) {
    throw std::invalid_argument("young_integral: mismatched grids");
  }
  SampledPath out = SampledPath::zero(f.grid);
  double acc = 0.0;
  for (int k = 1; k < f.size(); ++k) {
    acc += f[k - 1] * (g[k] - g[k - 1]);
    out[k] = acc;
  }
  return out;
}

GaussianEnsemble sample_paths(const NoiseModel& noise, const GridPtr& grid,
                              int n_paths, std::uint64_t seed,
                              EnsembleKind kind) {
  if (n_paths < 1) throw std::invalid_argument("sample_paths: n_paths >= 1");
  if (grid->n > kMaxSampleGrid) {
    throw std::invalid_argument("sample_paths: grid capped at n = 4096");
  }
  const int n = grid->n;
  GaussianEnsemble ens;
  ens.grid = grid;
  ens.seed = seed;
  ens.kind = kind;
  ens.samples.setZero(n_paths, n);

  if (kind == EnsembleKind::FbmPaths) {
    const int m = n - 1;  // drop the t = 0 row/col
    Eigen::MatrixXd cov(m, m);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j <= i; ++j) {
        const double v = covariance_RH(noise.hurst, grid->nodes[static_cast<std::size_t>(i + 1)],
                                       grid->nodes[static_cast<std::size_t>(j + 1)]);
        cov(i, j) = v;
        cov(j, i) = v;
      }
    }
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    bool jitter = false;
    if (llt.info() != Eigen::Success) {
      jitter = true;
      const double eps = 1e-12 * cov.diagonal().maxCoeff();
      for (int tries = 0; tries < 6; ++tries) {
        Eigen::MatrixXd cj = cov;
        cj.diagonal().array() += eps * std::pow(10.0, tries);
        llt.compute(cj);
        if (llt.info() == Eigen::Success) break;
      }
      if (llt.info() != Eigen::Success) {
        throw std::runtime_error("sample_paths: covariance not PSD after jitter");
      }
    }
    ens.jitter_applied = jitter;
    const Eigen::MatrixXd L = llt.matrixL();
    parallel_for(n_paths, [&](int lo, int hi) {
      Eigen::VectorXd z(m);
      for (int p = lo; p < hi; ++p) {
        NormalStream rs(mix_seed(seed, static_cast<std::uint64_t>(p)));
        for (int i = 0; i < m; ++i) z(i) = rs.next();
        ens.samples.row(p).tail(m) = (L * z).transpose();
      }
    });
    return ens;
  }

  FbmOperators ops(grid, noise.hurst, &noise.sigma);
  const Eigen::MatrixXd& A = ops.sampling_matrix();
  const double sqdt = std::sqrt(grid->dt());
  parallel_for(n_paths, [&](int lo, int hi) {
    Eigen::VectorXd z(n - 1);
    for (int p = lo; p < hi; ++p) {
      NormalStream rs(mix_seed(seed, static_cast<std::uint64_t>(p)));
      for (int i = 0; i + 1 < n; ++i) z(i) = rs.next() * sqdt;
      ens.samples.row(p) = (A * z).transpose();
    }
  });
  return ens;
}

void export_ensemble_csv(const GaussianEnsemble& ensemble,
                         const NoiseModel& noise, const std::string& csv_path,
                         const std::string& json_path) {
  std::ofstream csv(csv_path);
  if (!csv) throw std::runtime_error("export_ensemble_csv: cannot open " + csv_path);
  csv << "t";
  for (int p = 0; p < ensemble.n_paths(); ++p) csv << ",path_" << p;
  csv << "\n";
  char buf[32];
  const int n = ensemble.grid->n;
  for (int k = 0; k < n; ++k) {
    std::snprintf(buf, sizeof(buf), "%.12g", ensemble.grid->nodes[static_cast<std::size_t>(k)]);
    csv << buf;
    for (int p = 0; p < ensemble.n_paths(); ++p) {
      std::snprintf(buf, sizeof(buf), "%.12g", ensemble.samples(p, k));
      csv << ',' << buf;
    }
    csv << "\n";
  }
  nlohmann::ordered_json meta;
  meta["H"] = noise.hurst.H;
  meta["sigma"] = {{"family", noise.sigma.family == SigmaFamily::Constant
                                  ? "constant"
                                  : noise.sigma.family == SigmaFamily::Sinusoidal
                                        ? "sinusoidal"
                                        : "tabulated"},
                   {"scale", noise.sigma.scale},
                   {"oscillations", noise.sigma.oscillations}};
  meta["seed"] = ensemble.seed;
  meta["n"] = ensemble.grid->n;
  meta["n_paths"] = ensemble.n_paths();
  meta["kind"] =
      ensemble.kind == EnsembleKind::FbmPaths ? "fbm_paths" : "integral_paths";
  meta["jitter_applied"] = ensemble.jitter_applied;
  std::ofstream js(json_path);
  if (!js) throw std::runtime_error("export_ensemble_csv: cannot open " + json_path);
  js << meta.dump(2) << "\n";
}

}  // namespace omfrac
