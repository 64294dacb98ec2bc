#include "omfrac/mc.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "omfrac/parallel.hpp"
#include "omfrac/rng.hpp"

namespace omfrac {

GaussianEnsemble simulate_sde_ensemble(const SDEConfig& cfg) {
  if (cfg.n_paths < 1) {
    throw std::invalid_argument("simulate_sde_ensemble: n_paths >= 1");
  }
  GaussianEnsemble noise = sample_paths(cfg.noise, cfg.grid, cfg.n_paths,
                                        cfg.seed, EnsembleKind::IntegralPaths);
  const int n = cfg.grid->n;
  const double dt = cfg.grid->dt();
  const auto& t = cfg.grid->nodes;
  GaussianEnsemble out = noise;
  parallel_for(cfg.n_paths, [&](int lo, int hi) {
    for (int p = lo; p < hi; ++p) {
      double x = cfg.x0;
      double drift_sum = 0.0;  // kept separate: b == 0 reproduces the noise bitwise
      out.samples(p, 0) = x;
      for (int k = 0; k + 1 < n; ++k) {
        drift_sum += cfg.drift.b(t[static_cast<std::size_t>(k)], x) * dt;
        x = cfg.x0 + drift_sum + noise.samples(p, k + 1);
        out.samples(p, k + 1) = x;
      }
    }
  });
  return out;
}

SampledPath empirical_mean_path(const GaussianEnsemble& ensemble) {
  if (ensemble.n_paths() < 1) {
    throw std::invalid_argument("empirical_mean_path: empty ensemble");
  }
  const int n = ensemble.grid->n;
  std::vector<double> m(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    m[static_cast<std::size_t>(k)] = ensemble.samples.col(k).mean();
  }
  return SampledPath::of(ensemble.grid, std::move(m));
}

SampledPath conditioned_mean_path(const GaussianEnsemble& ensemble,
                                  double threshold, int* n_selected) {
  const int n = ensemble.grid->n;
  const int np = ensemble.n_paths();
  std::vector<double> m(static_cast<std::size_t>(n), 0.0);
  int count = 0;
  for (int p = 0; p < np; ++p) {
    if (ensemble.samples(p, n - 1) > threshold) {
      ++count;
      for (int k = 0; k < n; ++k) {
        m[static_cast<std::size_t>(k)] += ensemble.samples(p, k);
      }
    }
  }
  if (n_selected != nullptr) *n_selected = count;
  if (count == 0) {
    throw std::runtime_error("conditioned_mean_path: no path crosses the threshold");
  }
  for (double& v : m) v /= static_cast<double>(count);
  return SampledPath::of(ensemble.grid, std::move(m));
}

double transition_fraction(const GaussianEnsemble& ensemble, double threshold) {
  const int np = ensemble.n_paths();
  if (np < 1) throw std::invalid_argument("transition_fraction: empty ensemble");
  const int last = ensemble.grid->n - 1;
  int count = 0;
  for (int p = 0; p < np; ++p) {
    if (ensemble.samples(p, last) > threshold) ++count;
  }
  return static_cast<double>(count) / static_cast<double>(np);
}

namespace {

std::vector<double> sample_norms(const SmallBallConfig& cfg, int n_samples,
                                 std::uint64_t seed) {
  const GridPtr& grid = cfg.grid;
  const int n = grid->n;
  FbmOperators ops(grid, cfg.noise.hurst, &cfg.noise.sigma);
  const Eigen::MatrixXd& A = ops.sampling_matrix();
  const double sqdt = std::sqrt(grid->dt());
  std::vector<double> norms(static_cast<std::size_t>(n_samples));
  parallel_for(n_samples, [&](int lo, int hi) {
    Eigen::VectorXd z(n - 1);
    std::vector<double> path(static_cast<std::size_t>(n));
    for (int p = lo; p < hi; ++p) {
      NormalStream rs(mix_seed(seed, static_cast<std::uint64_t>(p)));
      for (int i = 0; i + 1 < n; ++i) z(i) = rs.next() * sqdt;
      Eigen::VectorXd u = A * z;
      for (int k = 0; k < n; ++k) path[static_cast<std::size_t>(k)] = u(k);
      norms[static_cast<std::size_t>(p)] = path_norm(*grid, path, cfg.norm);
    }
  });
  return norms;
}

double wilson_stderr(double p_hat, int n) {
  const double z = 1.0;  // one-sigma Wilson width
  const double z2 = z * z;
  const double nn = static_cast<double>(n);
  return z / (1.0 + z2 / nn) *
         std::sqrt(p_hat * (1.0 - p_hat) / nn + z2 / (4.0 * nn * nn));
}

}  // namespace

SmallBallTable small_ball_estimate(const SmallBallConfig& cfg) {
  if (cfg.n_samples < 100) {
    throw std::invalid_argument("small_ball_estimate: n_samples too small");
  }
  if (cfg.norm.kind == NormKind::Holder && !(cfg.norm.beta < cfg.noise.hurst.H)) {
    throw std::invalid_argument("small_ball_estimate: requires beta < H");
  }
  std::vector<double> eps = cfg.epsilons;
  if (!eps.empty()) {
    for (std::size_t i = 1; i < eps.size(); ++i) {
      if (!(eps[i] < eps[i - 1])) {
        throw std::invalid_argument(
            "small_ball_estimate: epsilons must decrease strictly");
      }
    }
  }
  if (eps.empty()) {
    // pilot run tunes a geometric schedule so P_hat spans ~[1e-3, 0.5]
    auto pilot = sample_norms(cfg, 1000, substream(cfg.seed, "pilot"));
    std::sort(pilot.begin(), pilot.end());
    const double lo = pilot[static_cast<std::size_t>(0.005 * 1000)];
    const double hi = pilot[static_cast<std::size_t>(0.5 * 1000)];
    const int m = 8;
    eps.resize(m);
    for (int i = 0; i < m; ++i) {
      eps[static_cast<std::size_t>(i)] =
          hi * std::pow(lo / hi, static_cast<double>(i) / (m - 1));
    }
    std::sort(eps.begin(), eps.end(), std::greater<double>());
  }
  auto norms = sample_norms(cfg, cfg.n_samples, substream(cfg.seed, "smallball"));
  SmallBallTable table;
  table.n_samples = cfg.n_samples;
  const double reliable_floor = 10.0 / static_cast<double>(cfg.n_samples);
  for (double e : eps) {
    int count = 0;
    for (double v : norms) {
      if (v <= e) ++count;
    }
    SmallBallRow row;
    row.epsilon = e;
    row.p_hat = static_cast<double>(count) / static_cast<double>(cfg.n_samples);
    row.stderr_wilson = wilson_stderr(row.p_hat, cfg.n_samples);
    row.reliable = row.p_hat >= reliable_floor;
    table.rows.push_back(row);
  }
  return table;
}

SmallBallFit small_ball_exponent_fit(const SmallBallTable& table) {
  std::vector<double> x, y;
  for (const auto& r : table.rows) {
    if (!r.reliable || r.p_hat >= 1.0) continue;
    x.push_back(std::log(1.0 / r.epsilon));
    y.push_back(std::log(-std::log(r.p_hat)));
  }
  if (x.size() < 4) {
    throw std::runtime_error(
        "small_ball_exponent_fit: fewer than 4 reliable rows");
  }
  const double nn = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
    syy += y[i] * y[i];
  }
  SmallBallFit fit;
  fit.slope = (nn * sxy - sx * sy) / (nn * sxx - sx * sx);
  fit.intercept = (sy - fit.slope * sx) / nn;
  double ss_res = 0.0;
  const double ybar = sy / nn;
  double ss_tot = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double yhat = fit.slope * x[i] + fit.intercept;
    ss_res += (y[i] - yhat) * (y[i] - yhat);
    ss_tot += (y[i] - ybar) * (y[i] - ybar);
  }
  fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  fit.rows_used = static_cast<int>(x.size());
  return fit;
}

void export_smallball_csv(const SmallBallTable& table, const std::string& path) {
  std::ofstream csv(path);
  if (!csv) throw std::runtime_error("export_smallball_csv: cannot open " + path);
  csv << "epsilon,p_hat,stderr,reliable\n";
  char buf[96];
  for (const auto& r : table.rows) {
    std::snprintf(buf, sizeof(buf), "%.12g,%.12g,%.12g,%d", r.epsilon, r.p_hat,
                  r.stderr_wilson, r.reliable ? 1 : 0);
    csv << buf << "\n";
  }
}

}  // namespace omfrac
