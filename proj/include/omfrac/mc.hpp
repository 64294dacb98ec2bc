#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "omfrac/fbm.hpp"
#include "omfrac/om.hpp"

// Monte Carlo: SDE ensembles (Euler drift + exact noise increments),
// transition statistics, and empirical small-ball probabilities with
// exponent fits.

namespace omfrac {

struct SDEConfig {
  DriftSpec drift;
  NoiseModel noise;
  double x0 = -1.0;
  GridPtr grid;
  int n_paths = 1;
  std::uint64_t seed = 0;
};

// X_{k+1} = X_k + b(t_k, X_k) dt + (U_{t_{k+1}} - U_{t_k}) with U exact
// IntegralPaths; the noise part carries no scheme error.
GaussianEnsemble simulate_sde_ensemble(const SDEConfig& cfg);

SampledPath empirical_mean_path(const GaussianEnsemble& ensemble);

// Mean over the paths with terminal value > threshold; empty selection
// throws. Returns the number of selected paths via n_selected.
SampledPath conditioned_mean_path(const GaussianEnsemble& ensemble,
                                  double threshold, int* n_selected = nullptr);

// Fraction of paths with terminal value > threshold.
double transition_fraction(const GaussianEnsemble& ensemble,
                           double threshold = 0.0);

struct SmallBallConfig {
  NoiseModel noise;
  NormSpec norm;
  GridPtr grid;
  std::vector<double> epsilons;  // empty: auto-tuned geometric schedule
  int n_samples = 10000;
  std::uint64_t seed = 0;
};

struct SmallBallRow {
  double epsilon = 0.0;
  double p_hat = 0.0;
  double stderr_wilson = 0.0;
  bool reliable = false;  // p_hat >= 10 / n_samples
};

struct SmallBallTable {
  std::vector<SmallBallRow> rows;
  int n_samples = 0;
};

// P_hat(eps) over IntegralPaths samples of the configured noise; epsilon
// schedule auto-tuned from a 1000-sample pilot when not supplied.
SmallBallTable small_ball_estimate(const SmallBallConfig& cfg);

struct SmallBallFit {
  double slope = 0.0;      // of ln(-ln P) against ln(1/eps)
  double intercept = 0.0;
  double r_squared = 0.0;
  int rows_used = 0;
};

// Least squares over the reliable rows; throws when fewer than 4 qualify.
SmallBallFit small_ball_exponent_fit(const SmallBallTable& table);

void export_smallball_csv(const SmallBallTable& table, const std::string& path);

}  // namespace omfrac
