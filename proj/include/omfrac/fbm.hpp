#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "omfrac/frac_ops.hpp"
#include "omfrac/grid.hpp"

// Fractional Brownian motion: covariance, Volterra kernels, the operators
// K_H, K_H^*, K_H^sigma and their inverses, and exact Gaussian sampling.

namespace omfrac {

enum class HurstRegime { Singular, Standard, Regular };

struct HurstParam {
  double H;
  HurstRegime regime;
  double alpha;  // |H - 1/2|

  // Accepts H in (1/4, 1), the range the OM functionals are defined on.
  static HurstParam of(double H);
  bool standard() const { return regime == HurstRegime::Standard; }
};

enum class SigmaFamily { Constant, Sinusoidal, Tabulated };

// Deterministic diffusion coefficient sigma(t) with bounds and an analytic
// derivative for the closed-form families. Sinusoidal means c(2 + sin(2 pi k t)).
struct SigmaSpec {
  SigmaFamily family = SigmaFamily::Constant;
  double scale = 1.0;        // c
  int oscillations = 1;      // k (Sinusoidal)
  std::vector<double> table_t, table_v;  // Tabulated

  double value(double t) const;
  double deriv(double t) const;
  double lower_bound() const;   // m
  double upper_bound() const;   // M
  double holder_gamma() const;  // 1 for the C^1 families

  static SigmaSpec constant(double c);
  static SigmaSpec sinusoidal(double c, int oscillations);
  static SigmaSpec tabulated(std::vector<double> t, std::vector<double> v);
};

struct NoiseModel {
  HurstParam hurst;
  SigmaSpec sigma;

  // Validates 0 < m <= sigma <= M and gamma + H > 1.
  static NoiseModel of(HurstParam hurst, SigmaSpec sigma);
};

// R_H(t,s) = (|t|^{2H} + |s|^{2H} - |t-s|^{2H}) / 2.
double covariance_RH(const HurstParam& hurst, double t, double s);

// Constants of the Wiener-integral kernel.
double kernel_cH(double H);  // H > 1/2
double kernel_bH(double H);  // H < 1/2

// K_H(t,s) for 0 < s < t (1 when H = 1/2): product-integrated inner integral.
double kernel_KH(const HurstParam& hurst, double t, double s);

// Operator bundle for a fixed (grid, H, sigma). Builds the row-quadrature
// weights of K_H^sigma and the discretized Wiener kernel once, then applies
// them as dense matrix actions. sigma == nullptr means sigma == 1 (plain K_H).
class FbmOperators {
 public:
  FbmOperators(GridPtr grid, HurstParam hurst, const SigmaSpec* sigma);

  const Eigen::MatrixXd& ksigma_matrix() const { return W_; }
  // (K_H^sigma u)(t_k) (or (K_H u) when built without sigma)
  std::vector<double> apply(const std::vector<double>& u) const;

  // A(t_k, s_j) at subinterval midpoints: the discretized kernel row of
  // K_H^*(sigma 1_[0,t_k]); drives exact-in-law Gaussian sampling.
  const Eigen::MatrixXd& sampling_matrix() const;

  const GridPtr& grid() const { return grid_; }
  const HurstParam& hurst() const { return hurst_; }

  // Wiener integrand value A(t,s) at an arbitrary interior point.
  double kernel_point(double t, double s, int nsub = 48) const;

 private:
  void build_rows();
  GridPtr grid_;
  HurstParam hurst_;
  std::function<double(double)> sig_;
  Eigen::MatrixXd W_;
  mutable Eigen::MatrixXd A_mid_;
  mutable bool have_amid_ = false;
};

// One-shot wrappers over FbmOperators (they rebuild the weights; use the
// class directly inside loops).
SampledPath apply_KH(const SampledPath& h, const HurstParam& hurst);
SampledPath apply_KH_sigma(const SampledPath& u, const NoiseModel& noise);

// (K_H)^{-1} h = the L^2 control u with K_H u = h; requires h[0] = 0.
// Uses the differentiable forms with the smooth-factor derivative
// v = h / t^{1 +- alpha}. Supply dh analytically when available.
SampledPath apply_KH_inverse(const SampledPath& h, const HurstParam& hurst);
SampledPath apply_KH_inverse(const SampledPath& h, const HurstParam& hurst,
                             const std::vector<double>& dh);

// (K_H^sigma)^{-1} f = (K_H)^{-1}( int_0^. sigma^{-1} df ); requires f[0] = 0.
SampledPath apply_KH_sigma_inverse(const SampledPath& f, const NoiseModel& noise);

// K_H^* f: H>1/2: c_H Gamma(a) s^{-a} I^a_{T-}(s^a f);
//          H<1/2: b_H Gamma(1-a) s^a D^a_{T-}(s^{-a} f); identity at H=1/2.
SampledPath apply_KH_star(const SampledPath& f, const NoiseModel& noise);

// Cumulative left-point Riemann-Stieltjes integral (int_0^{t_k} f dg).
SampledPath young_integral(const SampledPath& f, const SampledPath& g);

enum class EnsembleKind { FbmPaths, IntegralPaths };

struct GaussianEnsemble {
  GridPtr grid;
  Eigen::MatrixXd samples;  // n_paths x n, first column all zero
  std::uint64_t seed = 0;
  EnsembleKind kind = EnsembleKind::IntegralPaths;
  bool jitter_applied = false;

  int n_paths() const { return static_cast<int>(samples.rows()); }
};

// Exact Gaussian sampling. FbmPaths: Cholesky of [R_H(t_i,t_j)] (jitter retry
// 1e-12 * max diag on factorization failure). IntegralPaths: kernel matrix
// acting on scaled i.i.d. normal increments. Parallel across paths; bitwise
// deterministic for a fixed seed.
GaussianEnsemble sample_paths(const NoiseModel& noise, const GridPtr& grid,
                              int n_paths, std::uint64_t seed,
                              EnsembleKind kind);

// CSV (t,path_0,...) plus JSON sidecar with the generating configuration.
void export_ensemble_csv(const GaussianEnsemble& ensemble,
                         const NoiseModel& noise, const std::string& csv_path,
                         const std::string& json_path);

}  // namespace omfrac
