#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "omfrac/fbm.hpp"
#include "omfrac/grid.hpp"

// The Onsager-Machlup functionals of the three Hurst regimes, the constant
// d_H, and the coefficient assumptions (bounds, Holder window, the Novikov
// ratio) that gate them.

namespace omfrac {

enum class DriftFamily { DoubleWell, Linear, Zero, Custom };

struct DriftSpec {
  DriftFamily family = DriftFamily::Zero;
  std::function<double(double, double)> b;        // b(t, x)
  std::function<double(double, double)> db_dx;    // d/dx b
  std::function<double(double, double)> d2b_dx2;  // d2/dx2 b
  double lipschitz = 0.0;   // L
  double sup_bound = 0.0;   // ||b||_inf
  int smoothness = 2;       // spatial C^k order (large for analytic families)

  // b(x) = -x(x^2 - a^2)/(1+x^2)^2; stable at +-a, unstable at 0.
  static DriftSpec double_well(double a);
  static DriftSpec linear(double k);
  static DriftSpec zero();
  // Lipschitz constant estimated as max |db_dx| over a probe box when not given.
  static DriftSpec custom(std::function<double(double, double)> b,
                          std::function<double(double, double)> db,
                          std::function<double(double, double)> d2b,
                          std::optional<double> lipschitz = std::nullopt,
                          std::optional<double> sup_bound = std::nullopt,
                          double probe_lo = -3.0, double probe_hi = 3.0);
};

struct OMEvaluation {
  double J = 0.0;
  double kinetic = 0.0;     // -1/2 int (residual)^2
  double divergence = 0.0;  // -1/2 d_H int db_dx(phi)
  HurstRegime regime = HurstRegime::Standard;
};

// d_H = sqrt(2H Gamma(H+1/2) Gamma(3/2-H) / Gamma(2-2H)); rejects H outside
// (1/4, 1).
double compute_dH(double H);

// Fractional regimes take the control phi_dot and reconstruct
// phi = x0 + K_H^sigma(phi_dot). Pass ops to reuse prebuilt row weights.
OMEvaluation om_singular(const SampledPath& phi_dot, double x0,
                         const DriftSpec& drift, const NoiseModel& noise,
                         const FbmOperators* ops = nullptr);
OMEvaluation om_regular(const SampledPath& phi_dot, double x0,
                        const DriftSpec& drift, const NoiseModel& noise,
                        const FbmOperators* ops = nullptr);

// Standard case: parameterized by the path phi directly; phi' by central
// differences unless supplied.
OMEvaluation om_standard(const SampledPath& phi, const DriftSpec& drift,
                         const NoiseModel& noise);
OMEvaluation om_standard(const SampledPath& phi,
                         const std::vector<double>& dphi,
                         const DriftSpec& drift, const NoiseModel& noise);

// Regime dispatch on phi_dot (fractional) / phi (standard: phi_dot holds the
// path when the regime is Standard -- prefer the named entry points).
OMEvaluation om_evaluate(const SampledPath& phi_dot, double x0,
                         const DriftSpec& drift, const NoiseModel& noise);

// Alternate entry from the path: applies (K_H^sigma)^{-1}. Numerically
// ill-posed for H > 1/2 unless phi is smooth.
OMEvaluation om_from_path(const SampledPath& phi, const DriftSpec& drift,
                          const NoiseModel& noise);

struct AssumptionCheck {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct AssumptionReport {
  std::vector<AssumptionCheck> checks;
  bool pass = false;
  double a2_ratio = 0.0;  // m^2 (2b+1) G(1+b)^2 / (M^2 a^2 L^2 G(b-a)^2); NaN if n/a

  std::string to_json() const;
};

// Coefficient conditions per regime, including the Holder-window check on
// beta and (Regular) the A2 ratio > 1.
AssumptionReport check_assumption_A(const DriftSpec& drift,
                                    const NoiseModel& noise, double beta);

// Largest admissible horizon when the A2 inequality fails on [0,1]:
// T_max = ratio^{1/(2H+1)}.
double novikov_horizon(double m, double M, double L, double H, double beta);

// Default Holder exponent inside the admissible window of each regime.
double default_beta(const HurstParam& hurst, int drift_smoothness);

std::string om_report_json(const OMEvaluation& eval, double dH,
                           const AssumptionReport* assumptions);

}  // namespace omfrac
