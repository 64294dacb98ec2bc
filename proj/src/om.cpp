#include "omfrac/om.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "omfrac/special.hpp"

namespace omfrac {

DriftSpec DriftSpec::double_well(double a) {
  if (!(a > 0.0)) throw std::invalid_argument("double_well: need a > 0");
  DriftSpec d;
  d.family = DriftFamily::DoubleWell;
  const double a2 = a * a;
  d.b = [a2](double, double x) {
    const double w = 1.0 + x * x;
    return -x * (x * x - a2) / (w * w);
  };
  d.db_dx = [a2](double, double x) {
    const double x2 = x * x;
    const double w = 1.0 + x2;
    return (x2 * x2 - 3.0 * (1.0 + a2) * x2 + a2) / (w * w * w);
  };
  d.d2b_dx2 = [a2](double, double x) {
    const double x2 = x * x;
    const double w = 1.0 + x2;
    return -2.0 * x * (x2 * x2 - (8.0 + 6.0 * a2) * x2 + (3.0 + 6.0 * a2)) /
           (w * w * w * w);
  };
  // |db_dx| peaks at x = 0 with value a^2 for a <= 1 grid of interest; probe
  // numerically to stay correct for larger a.
  double L = 0.0, S = 0.0;
  for (int i = 0; i <= 4000; ++i) {
    const double x = -8.0 + 16.0 * i / 4000.0;
    L = std::max(L, std::abs(d.db_dx(0.0, x)));
    S = std::max(S, std::abs(d.b(0.0, x)));
  }
  d.lipschitz = L;
  d.sup_bound = S;
  d.smoothness = 64;
  return d;
}

DriftSpec DriftSpec::linear(double k) {
  DriftSpec d;
  d.family = DriftFamily::Linear;
  d.b = [k](double, double x) { return k * x; };
  d.db_dx = [k](double, double) { return k; };
  d.d2b_dx2 = [](double, double) { return 0.0; };
  d.lipschitz = std::abs(k);
  d.sup_bound = std::numeric_limits<double>::infinity();
  d.smoothness = 64;
  return d;
}

DriftSpec DriftSpec::zero() {
  DriftSpec d;
  d.family = DriftFamily::Zero;
  d.b = [](double, double) { return 0.0; };
  d.db_dx = [](double, double) { return 0.0; };
  d.d2b_dx2 = [](double, double) { return 0.0; };
  d.lipschitz = 0.0;
  d.sup_bound = 0.0;
  d.smoothness = 64;
  return d;
}

DriftSpec DriftSpec::custom(std::function<double(double, double)> b,
                            std::function<double(double, double)> db,
                            std::function<double(double, double)> d2b,
                            std::optional<double> lipschitz,
                            std::optional<double> sup_bound, double probe_lo,
                            double probe_hi) {
  DriftSpec d;
  d.family = DriftFamily::Custom;
  d.b = std::move(b);
  d.db_dx = std::move(db);
  d.d2b_dx2 = std::move(d2b);
  if (lipschitz) {
    d.lipschitz = *lipschitz;
  } else {
    double L = 0.0;
    for (int i = 0; i <= 2000; ++i) {
      const double x = probe_lo + (probe_hi - probe_lo) * i / 2000.0;
      for (double tt : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        L = std::max(L, std::abs(d.db_dx(tt, x)));
      }
    }
    d.lipschitz = L;
  }
  if (sup_bound) {
    d.sup_bound = *sup_bound;
  } else {
    double S = 0.0;
    for (int i = 0; i <= 2000; ++i) {
      const double x = probe_lo + (probe_hi - probe_lo) * i / 2000.0;
      for (double tt : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        S = std::max(S, std::abs(d.b(tt, x)));
      }
    }
    d.sup_bound = S;
  }
  d.smoothness = 2;
  return d;
}

double compute_dH(double H) {
  if (!(H > 0.25) || !(H < 1.0)) {
    throw std::invalid_argument("compute_dH: H must lie in (1/4, 1)");
  }
  return dh_constant(H);
}

namespace {

OMEvaluation om_fractional(const SampledPath& phi_dot, double x0,
                           const DriftSpec& drift, const NoiseModel& noise,
                           const FbmOperators* ops, WeightedMode mode,
                           HurstRegime regime) {
  if (noise.hurst.regime != regime) {
    throw std::invalid_argument("om: noise regime does not match entry point");
  }
  const auto& grid = *phi_dot.grid;
  const int n = grid.n;
  std::vector<double> phi;
  if (ops != nullptr) {
    phi = ops->apply(phi_dot.values);
  } else {
    FbmOperators local(phi_dot.grid, noise.hurst, &noise.sigma);
    phi = local.apply(phi_dot.values);
  }
  for (double& v : phi) v += x0;

  SampledPath g = SampledPath::zero(phi_dot.grid);
  for (int k = 0; k < n; ++k) {
    const double tk = grid.nodes[static_cast<std::size_t>(k)];
    g[k] = drift.b(tk, phi[static_cast<std::size_t>(k)]) / noise.sigma.value(tk);
  }
  SampledPath img = weighted_frac_op(g, FracOrder(noise.hurst.alpha), mode);

  std::vector<double> kin(static_cast<std::size_t>(n)),
      div(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    const double r = phi_dot[k] - img[k];
    kin[static_cast<std::size_t>(k)] = r * r;
    div[static_cast<std::size_t>(k)] = drift.db_dx(
        grid.nodes[static_cast<std::size_t>(k)], phi[static_cast<std::size_t>(k)]);
  }
  OMEvaluation out;
  out.regime = regime;
  out.kinetic = -0.5 * quadrature(grid, kin);
  out.divergence = -0.5 * dh_constant(noise.hurst.H) * quadrature(grid, div);
  out.J = out.kinetic + out.divergence;
  return out;
}

}  // namespace

OMEvaluation om_singular(const SampledPath& phi_dot, double x0,
                         const DriftSpec& drift, const NoiseModel& noise,
                         const FbmOperators* ops) {
  return om_fractional(phi_dot, x0, drift, noise, ops,
                       WeightedMode::SingularComposite, HurstRegime::Singular);
}

OMEvaluation om_regular(const SampledPath& phi_dot, double x0,
                        const DriftSpec& drift, const NoiseModel& noise,
                        const FbmOperators* ops) {
  return om_fractional(phi_dot, x0, drift, noise, ops,
                       WeightedMode::RegularComposite, HurstRegime::Regular);
}

OMEvaluation om_standard(const SampledPath& phi, const DriftSpec& drift,
                         const NoiseModel& noise) {
  const int n = phi.size();
  const double dt = phi.grid->dt();
  std::vector<double> dphi(static_cast<std::size_t>(n));
  for (int k = 1; k + 1 < n; ++k) {
    dphi[static_cast<std::size_t>(k)] = (phi[k + 1] - phi[k - 1]) / (2.0 * dt);
  }
  dphi[0] = (phi[1] - phi[0]) / dt;
  dphi[static_cast<std::size_t>(n - 1)] = (phi[n - 1] - phi[n - 2]) / dt;
  return om_standard(phi, dphi, drift, noise);
}

OMEvaluation om_standard(const SampledPath& phi,
                         const std::vector<double>& dphi,
                         const DriftSpec& drift, const NoiseModel& noise) {
  if (!noise.hurst.standard()) {
    throw std::invalid_argument("om_standard: noise regime must be Standard");
  }
  const auto& grid = *phi.grid;
  const int n = grid.n;
  std::vector<double> kin(static_cast<std::size_t>(n)),
      div(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    const double tk = grid.nodes[static_cast<std::size_t>(k)];
    const double r =
        (dphi[static_cast<std::size_t>(k)] - drift.b(tk, phi[k])) /
        noise.sigma.value(tk);
    kin[static_cast<std::size_t>(k)] = r * r;
    div[static_cast<std::size_t>(k)] = drift.db_dx(tk, phi[k]);
  }
  OMEvaluation out;
  out.regime = HurstRegime::Standard;
  out.kinetic = -0.5 * quadrature(grid, kin);
  out.divergence = -0.5 * quadrature(grid, div);
  out.J = out.kinetic + out.divergence;
  return out;
}

OMEvaluation om_evaluate(const SampledPath& phi_dot, double x0,
                         const DriftSpec& drift, const NoiseModel& noise) {
  switch (noise.hurst.regime) {
    case HurstRegime::Singular:
      return om_singular(phi_dot, x0, drift, noise);
    case HurstRegime::Regular:
      return om_regular(phi_dot, x0, drift, noise);
    case HurstRegime::Standard: {
      // phi_dot is the control; phi = x0 + int sigma u
      const auto& grid = *phi_dot.grid;
      const int n = grid.n;
      const double dt = grid.dt();
      SampledPath phi = SampledPath::zero(phi_dot.grid);
      std::vector<double> dphi(static_cast<std::size_t>(n));
      double acc = x0;
      phi[0] = x0;
      for (int k = 0; k < n; ++k) {
        dphi[static_cast<std::size_t>(k)] =
            noise.sigma.value(grid.nodes[static_cast<std::size_t>(k)]) *
            phi_dot[k];
      }
      for (int k = 1; k < n; ++k) {
        acc += 0.5 * (dphi[static_cast<std::size_t>(k - 1)] +
                      dphi[static_cast<std::size_t>(k)]) *
               dt;
        phi[k] = acc;
      }
      return om_standard(phi, dphi, drift, noise);
    }
  }
  throw std::logic_error("om_evaluate: unreachable");
}

OMEvaluation om_from_path(const SampledPath& phi, const DriftSpec& drift,
                          const NoiseModel& noise) {
  if (noise.hurst.standard()) return om_standard(phi, drift, noise);
  SampledPath shifted = phi;
  const double x0 = phi[0];
  for (double& v : shifted.values) v -= x0;
  SampledPath u = apply_KH_sigma_inverse(shifted, noise);
  if (noise.hurst.regime == HurstRegime::Singular) {
    return om_singular(u, x0, drift, noise);
  }
  return om_regular(u, x0, drift, noise);
}

double default_beta(const HurstParam& hurst, int drift_smoothness) {
  switch (hurst.regime) {
    case HurstRegime::Singular:
      return 0.5 * (hurst.H - 0.25);
    case HurstRegime::Regular:
      return 0.5 * ((hurst.H - 0.5) + (hurst.H - 0.25));
    case HurstRegime::Standard: {
      const double cap =
          0.5 - 0.5 / std::max(2, drift_smoothness);
      return std::min(0.45, cap - 1e-3);
    }
  }
  return 0.25;
}

AssumptionReport check_assumption_A(const DriftSpec& drift,
                                    const NoiseModel& noise, double beta) {
  AssumptionReport rep;
  rep.a2_ratio = std::numeric_limits<double>::quiet_NaN();
  const double m = noise.sigma.lower_bound();
  const double M = noise.sigma.upper_bound();
  const double H = noise.hurst.H;
  auto add = [&rep](std::string name, bool pass, std::string detail) {
    rep.checks.push_back({std::move(name), pass, std::move(detail)});
  };

  add("sigma_bounds", m > 0.0 && M >= m,
      "m=" + std::to_string(m) + ", M=" + std::to_string(M));
  add("sigma_regularity", noise.sigma.holder_gamma() + H > 1.0,
      "gamma+H=" + std::to_string(noise.sigma.holder_gamma() + H));
  add("drift_bounded", std::isfinite(drift.sup_bound),
      "sup|b|=" + std::to_string(drift.sup_bound));

  // Holder window of the norm exponent
  bool window_ok = false;
  std::string window;
  switch (noise.hurst.regime) {
    case HurstRegime::Singular:
      window_ok = beta > 0.0 && beta < H - 0.25;
      window = "(0, H-1/4) = (0, " + std::to_string(H - 0.25) + ")";
      break;
    case HurstRegime::Regular:
      window_ok = beta > H - 0.5 && beta < H - 0.25;
      window = "(H-1/2, H-1/4) = (" + std::to_string(H - 0.5) + ", " +
               std::to_string(H - 0.25) + ")";
      break;
    case HurstRegime::Standard: {
      const double cap = 0.5 - 0.5 / std::max(2, drift.smoothness);
      window_ok = beta > 0.0 && beta < cap;
      window = "(0, 1/2 - 1/(2n)) = (0, " + std::to_string(cap) + ")";
      break;
    }
  }
  add("beta_window", window_ok,
      "beta=" + std::to_string(beta) + " in " + window);

  if (noise.hurst.regime == HurstRegime::Regular) {
    const double a = noise.hurst.alpha;
    const double L = drift.lipschitz;
    if (L == 0.0) {
      rep.a2_ratio = std::numeric_limits<double>::infinity();
      add("a2_ratio", true, "L=0: ratio unbounded, condition vacuous");
    } else if (!(beta > a)) {
      add("a2_ratio", false,
          "beta <= alpha: Gamma(beta-alpha) undefined, window already violated");
    } else {
      const double gb = gamma_fn(1.0 + beta);
      const double gba = gamma_fn(beta - a);
      rep.a2_ratio = m * m * (2.0 * beta + 1.0) * gb * gb /
                     (M * M * a * a * L * L * gba * gba);
      add("a2_ratio", rep.a2_ratio > 1.0,
          "ratio=" + std::to_string(rep.a2_ratio) + " (must exceed 1)");
    }
  }

  rep.pass = true;
  for (const auto& c : rep.checks) rep.pass = rep.pass && c.pass;
  return rep;
}

double novikov_horizon(double m, double M, double L, double H, double beta) {
  if (!(m > 0.0) || !(M > 0.0) || !(L > 0.0)) {
    throw std::invalid_argument("novikov_horizon: m, M, L must be positive");
  }
  if (!(H > 0.5) || !(H < 1.0)) {
    throw std::invalid_argument("novikov_horizon: Regular regime only");
  }
  if (!(beta > H - 0.5) || !(beta < H - 0.25)) {
    throw std::invalid_argument("novikov_horizon: beta outside (H-1/2, H-1/4)");
  }
  const double a = H - 0.5;
  const double gb = gamma_fn(1.0 + beta);
  const double gba = gamma_fn(beta - a);
  const double ratio =
      m * m * (2.0 * beta + 1.0) * gb * gb / (M * M * a * a * L * L * gba * gba);
  return std::pow(ratio, 1.0 / (2.0 * H + 1.0));
}

std::string AssumptionReport::to_json() const {
  nlohmann::ordered_json j;
  j["pass"] = pass;
  if (std::isfinite(a2_ratio)) j["a2_ratio"] = a2_ratio;
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& c : checks) {
    arr.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
  }
  j["checks"] = arr;
  return j.dump(2);
}

std::string om_report_json(const OMEvaluation& eval, double dH,
                           const AssumptionReport* assumptions) {
  nlohmann::ordered_json j;
  j["J"] = eval.J;
  j["kinetic"] = eval.kinetic;
  j["divergence"] = eval.divergence;
  j["regime"] = eval.regime == HurstRegime::Singular
                    ? "singular"
                    : eval.regime == HurstRegime::Regular ? "regular"
                                                          : "standard";
  j["dH"] = dH;
  if (assumptions != nullptr) {
    j["assumption_report"] = nlohmann::ordered_json::parse(assumptions->to_json());
  }
  return j.dump(2);
}

}  // namespace omfrac
