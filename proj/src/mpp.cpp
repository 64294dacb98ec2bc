#include "omfrac/mpp.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "omfrac/special.hpp"

namespace omfrac {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct LbfgsOutcome {
  VectorXd x;
  double fx = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
};

template <typename F, typename G>
LbfgsOutcome lbfgs(F&& f, G&& grad, VectorXd x, int max_iters, double tol) {
  const int mem = 10;
  LbfgsOutcome out;
  double fx = f(x);
  VectorXd gx = grad(x);
  std::vector<VectorXd> S, Y;
  int it = 0;
  for (; it < max_iters; ++it) {
    const double gn = gx.lpNorm<Eigen::Infinity>();
    if (gn < tol) break;
    VectorXd q = gx;
    std::vector<double> alpha(S.size());
    for (int i = static_cast<int>(S.size()) - 1; i >= 0; --i) {
      const double rho = 1.0 / Y[static_cast<std::size_t>(i)].dot(S[static_cast<std::size_t>(i)]);
      alpha[static_cast<std::size_t>(i)] = rho * S[static_cast<std::size_t>(i)].dot(q);
      q -= alpha[static_cast<std::size_t>(i)] * Y[static_cast<std::size_t>(i)];
    }
    if (!S.empty()) {
      const double gam = S.back().dot(Y.back()) / Y.back().squaredNorm();
      q *= gam;
    }
    for (std::size_t i = 0; i < S.size(); ++i) {
      const double rho = 1.0 / Y[i].dot(S[i]);
      const double beta = rho * Y[i].dot(q);
      q += (alpha[i] - beta) * S[i];
    }
    VectorXd d = -q;
    double gd = gx.dot(d);
    if (gd > 0.0) {
      d = -gx;
      gd = -gx.squaredNorm();
    }
    double step = 1.0;
    VectorXd xn;
    double fn = fx;
    bool ok = false;
    for (int ls = 0; ls < 48; ++ls) {
      xn = x + step * d;
      fn = f(xn);
      if (fn <= fx + 1e-4 * step * gd) {
        ok = true;
        break;
      }
      step *= 0.5;
    }
    if (!ok) break;
    VectorXd gn2 = grad(xn);
    S.push_back(xn - x);
    Y.push_back(gn2 - gx);
    if (static_cast<int>(S.size()) > mem) {
      S.erase(S.begin());
      Y.erase(Y.begin());
    }
    x = std::move(xn);
    fx = fn;
    gx = std::move(gn2);
  }
  out.x = std::move(x);
  out.fx = fx;
  out.grad_norm = gx.lpNorm<Eigen::Infinity>();
  out.iterations = it;
  return out;
}

// Standard regime: interval collocation of the kinetic term (midpoint drift),
// nodal trapezoid for the divergence term. Decision variables: interior nodes.
class StandardObjective {
 public:
  StandardObjective(const MPPProblem& p) : p_(p), grid_(*p.grid) {
    const int n = grid_.n;
    dt_ = grid_.dt();
    tmid_.resize(n - 1);
    smid_.resize(n - 1);
    for (int j = 0; j + 1 < n; ++j) {
      tmid_[static_cast<std::size_t>(j)] =
          grid_.nodes[static_cast<std::size_t>(j)] + 0.5 * dt_;
      smid_[static_cast<std::size_t>(j)] =
          p_.noise.sigma.value(tmid_[static_cast<std::size_t>(j)]);
    }
    w_.assign(static_cast<std::size_t>(n), dt_);
    w_.front() = w_.back() = 0.5 * dt_;
  }

  VectorXd full(const VectorXd& interior) const {
    const int n = grid_.n;
    VectorXd phi(n);
    phi(0) = p_.x0;
    phi.segment(1, n - 2) = interior;
    phi(n - 1) = p_.x1;
    return phi;
  }

  double value(const VectorXd& interior) const {
    const VectorXd phi = full(interior);
    const int n = grid_.n;
    double kin = 0.0;
    for (int j = 0; j + 1 < n; ++j) {
      const double pm = 0.5 * (phi(j) + phi(j + 1));
      const double r = ((phi(j + 1) - phi(j)) / dt_ -
                        p_.drift.b(tmid_[static_cast<std::size_t>(j)], pm)) /
                       smid_[static_cast<std::size_t>(j)];
      kin += r * r * dt_;
    }
    double div = 0.0;
    for (int k = 0; k < n; ++k) {
      div += w_[static_cast<std::size_t>(k)] *
             p_.drift.db_dx(grid_.nodes[static_cast<std::size_t>(k)], phi(k));
    }
    return 0.5 * kin + 0.5 * div;
  }

  VectorXd gradient(const VectorXd& interior) const {
    const VectorXd phi = full(interior);
    const int n = grid_.n;
    VectorXd g = VectorXd::Zero(n);
    for (int j = 0; j + 1 < n; ++j) {
      const double pm = 0.5 * (phi(j) + phi(j + 1));
      const double sm = smid_[static_cast<std::size_t>(j)];
      const double r =
          ((phi(j + 1) - phi(j)) / dt_ - p_.drift.b(tmid_[static_cast<std::size_t>(j)], pm)) / sm;
      const double dbm = p_.drift.db_dx(tmid_[static_cast<std::size_t>(j)], pm);
      const double c = r / sm * dt_;
      g(j) += c * (-1.0 / dt_ - 0.5 * dbm);
      g(j + 1) += c * (1.0 / dt_ - 0.5 * dbm);
    }
    for (int k = 0; k < n; ++k) {
      g(k) += 0.5 * w_[static_cast<std::size_t>(k)] *
              p_.drift.d2b_dx2(grid_.nodes[static_cast<std::size_t>(k)], phi(k));
    }
    return g.segment(1, n - 2);
  }

 private:
  const MPPProblem& p_;
  const TimeGrid& grid_;
  double dt_ = 0.0;
  std::vector<double> tmid_, smid_, w_;
};

// Fractional regimes: control u, phi = x0 + W u, drift image M_img (b/sigma).
class FractionalObjective {
 public:
  FractionalObjective(const MPPProblem& p)
      : p_(p), grid_(*p.grid), ops_(p.grid, p.noise.hurst, &p.noise.sigma) {
    const int n = grid_.n;
    W_ = ops_.ksigma_matrix();
    // image operator matrix assembled column-by-column
    Mimg_.setZero(n, n);
    const WeightedMode mode = p_.noise.hurst.regime == HurstRegime::Singular
                                  ? WeightedMode::SingularComposite
                                  : WeightedMode::RegularComposite;
    SampledPath e = SampledPath::zero(p_.grid);
    for (int j = 0; j < n; ++j) {
      e.values.assign(static_cast<std::size_t>(n), 0.0);
      e[j] = 1.0;
      SampledPath col = weighted_frac_op(e, FracOrder(p_.noise.hurst.alpha), mode);
      for (int k = 0; k < n; ++k) Mimg_(k, j) = col[k];
    }
    w_.setConstant(n, grid_.dt());
    w_(0) = w_(n - 1) = 0.5 * grid_.dt();
    dH_ = dh_constant(p_.noise.hurst.H);
    sig_.resize(n);
    for (int k = 0; k < n; ++k) {
      sig_(k) = p_.noise.sigma.value(grid_.nodes[static_cast<std::size_t>(k)]);
    }
  }

  const Eigen::MatrixXd& W() const { return W_; }

  VectorXd path_of(const VectorXd& u) const {
    return (W_ * u).array() + p_.x0;
  }

  double value(const VectorXd& u, double rho) const {
    const int n = grid_.n;
    const VectorXd phi = path_of(u);
    VectorXd gdr(n), db(n);
    for (int k = 0; k < n; ++k) {
      const double tk = grid_.nodes[static_cast<std::size_t>(k)];
      gdr(k) = p_.drift.b(tk, phi(k)) / sig_(k);
      db(k) = p_.drift.db_dx(tk, phi(k));
    }
    const VectorXd r = u - Mimg_ * gdr;
    const double kin = 0.5 * (w_.array() * r.array().square()).sum();
    const double div = 0.5 * dH_ * (w_.array() * db.array()).sum();
    const double gap = phi(n - 1) - p_.x1;
    return kin + div + rho * gap * gap;
  }

  VectorXd gradient(const VectorXd& u, double rho) const {
    const int n = grid_.n;
    const VectorXd phi = path_of(u);
    VectorXd gdr(n), db(n), d2b(n);
    for (int k = 0; k < n; ++k) {
      const double tk = grid_.nodes[static_cast<std::size_t>(k)];
      gdr(k) = p_.drift.b(tk, phi(k)) / sig_(k);
      db(k) = p_.drift.db_dx(tk, phi(k));
      d2b(k) = p_.drift.d2b_dx2(tk, phi(k));
    }
    const VectorXd r = u - Mimg_ * gdr;
    const VectorXd e = w_.array() * r.array();
    VectorXd g = e;
    const VectorXd inner = Mimg_.transpose() * e;
    g -= W_.transpose() * (db.array() / sig_.array() * inner.array()).matrix();
    g += 0.5 * dH_ * (W_.transpose() * (w_.array() * d2b.array()).matrix());
    const double gap = phi(n - 1) - p_.x1;
    g += 2.0 * rho * gap * W_.row(n - 1).transpose();
    return g;
  }

  double raw_J(const VectorXd& u) const { return -value(u, 0.0); }

 private:
  const MPPProblem& p_;
  const TimeGrid& grid_;
  FbmOperators ops_;
  MatrixXd W_, Mimg_;
  VectorXd w_, sig_;
  double dH_ = 1.0;
};

std::vector<double> to_std(const VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

}  // namespace

MPPResult solve_mpp(const MPPProblem& problem) {
  const auto& grid = *problem.grid;
  const int n = grid.n;
  const double dt = grid.dt();
  if (problem.noise.hurst.regime == HurstRegime::Regular &&
      problem.drift.lipschitz > 0.0) {
    // the theory needs one admissible Holder exponent, so take the most
    // favorable beta inside (H - 1/2, H - 1/4)
    const double H = problem.noise.hurst.H;
    double t_max = 0.0;
    for (int i = 1; i < 128; ++i) {
      const double beta =
          (H - 0.5) + (0.25) * static_cast<double>(i) / 128.0;
      t_max = std::max(
          t_max, novikov_horizon(problem.noise.sigma.lower_bound(),
                                 problem.noise.sigma.upper_bound(),
                                 problem.drift.lipschitz, H, beta));
    }
    if (grid.horizon > t_max) {
      throw std::invalid_argument(
          "solve_mpp: grid horizon exceeds the admissible Novikov horizon");
    }
  }
  MPPResult best;
  bool have_best = false;

  if (problem.noise.hurst.standard()) {
    StandardObjective obj(problem);
    // seeds: straight line, tanh ramp, flat start
    std::vector<VectorXd> seeds;
    {
      VectorXd lin(n - 2), ramp(n - 2), flat(n - 2);
      for (int k = 1; k + 1 < n; ++k) {
        const double tk = grid.nodes[static_cast<std::size_t>(k)];
        lin(k - 1) = problem.x0 + (problem.x1 - problem.x0) * tk / grid.horizon;
        const double z = std::tanh(6.0 * (tk / grid.horizon - 0.5));
        ramp(k - 1) = 0.5 * (problem.x0 + problem.x1) +
                      0.5 * (problem.x1 - problem.x0) * z / std::tanh(3.0);
        flat(k - 1) = problem.x0;
      }
      seeds = {lin, ramp, flat};
    }
    for (const auto& s : seeds) {
      auto res = lbfgs([&](const VectorXd& v) { return obj.value(v); },
                       [&](const VectorXd& v) { return obj.gradient(v); }, s,
                       problem.opt.max_iters, problem.opt.grad_tol);
      const double J = -res.fx;
      if (!have_best || J > best.J + 1e-10 ||
          (std::abs(J - best.J) <= 1e-10 && res.grad_norm < best.grad_norm)) {
        have_best = true;
        const VectorXd phi = obj.full(res.x);
        best.phi = SampledPath::of(problem.grid, to_std(phi));
        std::vector<double> u(static_cast<std::size_t>(n));
        for (int k = 0; k < n; ++k) {
          double d;
          if (k == 0) {
            d = (phi(1) - phi(0)) / dt;
          } else if (k == n - 1) {
            d = (phi(n - 1) - phi(n - 2)) / dt;
          } else {
            d = (phi(k + 1) - phi(k - 1)) / (2.0 * dt);
          }
          u[static_cast<std::size_t>(k)] =
              d / problem.noise.sigma.value(grid.nodes[static_cast<std::size_t>(k)]);
        }
        best.phi_dot = SampledPath::of(problem.grid, std::move(u));
        best.J = J;
        best.grad_norm = res.grad_norm;
        best.iterations = res.iterations;
        best.boundary_gap = 0.0;  // endpoints pinned
        best.converged = res.grad_norm <= 1e-4;
      }
    }
    return best;
  }

  FractionalObjective obj(problem);
  // constant control scaled to land on x1, zero control, tanh bump
  std::vector<VectorXd> seeds;
  {
    const VectorXd ones = VectorXd::Ones(n);
    const double reach = (obj.W() * ones)(n - 1);
    VectorXd c = ones;
    if (std::abs(reach) > 1e-12) {
      c *= (problem.x1 - problem.x0) / reach;
    }
    VectorXd bump(n);
    for (int k = 0; k < n; ++k) {
      const double z = grid.nodes[static_cast<std::size_t>(k)] / grid.horizon - 0.5;
      bump(k) = std::exp(-8.0 * z * z);
    }
    const double reach_b = (obj.W() * bump)(n - 1);
    if (std::abs(reach_b) > 1e-12) {
      bump *= (problem.x1 - problem.x0) / reach_b;
    }
    seeds = {c, VectorXd::Zero(n), bump};
  }
  for (const auto& s : seeds) {
    VectorXd u = s;
    double rho = problem.opt.rho0;
    double gap = 0.0;
    int iters = 0;
    double gn = 0.0;
    for (int round = 0; round < problem.opt.max_penalty_rounds; ++round) {
      auto res = lbfgs([&](const VectorXd& v) { return obj.value(v, rho); },
                       [&](const VectorXd& v) { return obj.gradient(v, rho); },
                       u, problem.opt.max_iters, problem.opt.grad_tol);
      u = res.x;
      iters += res.iterations;
      gn = res.grad_norm;
      gap = std::abs(obj.path_of(u)(n - 1) - problem.x1);
      if (gap <= problem.opt.boundary_tol) break;
      rho *= 2.0;
    }
    const double J = obj.raw_J(u);
    if (!have_best || J > best.J + 1e-10 ||
        (std::abs(J - best.J) <= 1e-10 && gn < best.grad_norm)) {
      have_best = true;
      best.phi = SampledPath::of(problem.grid, to_std(obj.path_of(u)));
      best.phi[0] = problem.x0;
      best.phi_dot = SampledPath::of(problem.grid, to_std(u));
      best.J = J;
      best.boundary_gap = gap;
      best.grad_norm = gn;
      best.iterations = iters;
      best.converged = gap <= problem.opt.boundary_tol && gn <= 1e-4;
    }
  }
  return best;
}

SampledPath el_residual_standard(const SampledPath& phi, const DriftSpec& drift,
                                 const NoiseModel& noise) {
  if (!noise.hurst.standard()) {
    throw std::invalid_argument("el_residual_standard: Standard regime only");
  }
  const auto& grid = *phi.grid;
  const int n = grid.n;
  const double dt = grid.dt();
  auto ddt = [&](const std::vector<double>& f, int k) {
    if (k == 0) return (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * dt);
    if (k == n - 1) {
      return (3.0 * f[static_cast<std::size_t>(n - 1)] -
              4.0 * f[static_cast<std::size_t>(n - 2)] +
              f[static_cast<std::size_t>(n - 3)]) /
             (2.0 * dt);
    }
    return (f[static_cast<std::size_t>(k + 1)] - f[static_cast<std::size_t>(k - 1)]) /
           (2.0 * dt);
  };
  std::vector<double> q(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    const double tk = grid.nodes[static_cast<std::size_t>(k)];
    const double sv = noise.sigma.value(tk);
    q[static_cast<std::size_t>(k)] =
        (ddt(phi.values, k) - drift.b(tk, phi[k])) / (sv * sv);
  }
  SampledPath r = SampledPath::zero(phi.grid);
  for (int k = 0; k < n; ++k) {
    const double tk = grid.nodes[static_cast<std::size_t>(k)];
    r[k] = 2.0 * (ddt(q, k) + drift.db_dx(tk, phi[k]) * q[static_cast<std::size_t>(k)]) -
           drift.d2b_dx2(tk, phi[k]);
  }
  return r;
}

SampledPath el_residual_fractional(const SampledPath& phi_dot, double x0,
                                   const DriftSpec& drift,
                                   const NoiseModel& noise) {
  if (noise.hurst.standard()) {
    throw std::invalid_argument("el_residual_fractional: fractional regimes only");
  }
  const auto& grid = *phi_dot.grid;
  const int n = grid.n;
  const double dt = grid.dt();
  const double a = noise.hurst.alpha;
  FbmOperators ops(phi_dot.grid, noise.hurst, &noise.sigma);
  std::vector<double> phi = ops.apply(phi_dot.values);
  for (double& v : phi) v += x0;

  SampledPath g = SampledPath::zero(phi_dot.grid);
  for (int k = 0; k < n; ++k) {
    const double tk = grid.nodes[static_cast<std::size_t>(k)];
    g[k] = drift.b(tk, phi[static_cast<std::size_t>(k)]) / noise.sigma.value(tk);
  }
  const bool singular = noise.hurst.regime == HurstRegime::Singular;
  SampledPath img = weighted_frac_op(
      g, FracOrder(a),
      singular ? WeightedMode::SingularComposite : WeightedMode::RegularComposite);

  SampledPath resid = SampledPath::zero(phi_dot.grid);
  for (int k = 0; k < n; ++k) resid[k] = phi_dot[k] - img[k];

  // right-sided adjoint composite of the drift-image operator
  SampledPath R = SampledPath::zero(phi_dot.grid);
  const auto& t = grid.nodes;
  if (singular) {
    // s^{a} I^a_{T-} s^{-a} (.)
    SampledPath w = SampledPath::zero(phi_dot.grid);
    for (int k = 1; k < n; ++k) w[k] = std::pow(t[static_cast<std::size_t>(k)], -a) * resid[k];
    w[0] = 2.0 * w[1] - w[2];
    SampledPath iw = frac_integral_right(w, FracOrder(a));
    for (int k = 0; k < n; ++k) R[k] = std::pow(t[static_cast<std::size_t>(k)], a) * iw[k];
  } else {
    // s^{-a} D^a_{T-} s^{a} (.)
    SampledPath w = SampledPath::zero(phi_dot.grid);
    for (int k = 0; k < n; ++k) w[k] = std::pow(t[static_cast<std::size_t>(k)], a) * resid[k];
    SampledPath dw = weyl_derivative_right(w, FracOrder(a));
    for (int k = 1; k < n; ++k) R[k] = std::pow(t[static_cast<std::size_t>(k)], -a) * dw[k];
    R[0] = 2.0 * R[1] - R[2];
  }

  std::vector<double> q(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    q[static_cast<std::size_t>(k)] =
        R[k] / noise.sigma.value(t[static_cast<std::size_t>(k)]);
  }
  auto ddt = [&](const std::vector<double>& f, int k) {
    if (k == 0) return (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * dt);
    if (k == n - 1) {
      return (3.0 * f[static_cast<std::size_t>(n - 1)] -
              4.0 * f[static_cast<std::size_t>(n - 2)] +
              f[static_cast<std::size_t>(n - 3)]) /
             (2.0 * dt);
    }
    return (f[static_cast<std::size_t>(k + 1)] - f[static_cast<std::size_t>(k - 1)]) /
           (2.0 * dt);
  };
  const double dH = dh_constant(noise.hurst.H);
  SampledPath r = SampledPath::zero(phi_dot.grid);
  for (int k = 0; k < n; ++k) {
    const double tk = t[static_cast<std::size_t>(k)];
    r[k] = 2.0 * (ddt(q, k) +
                  drift.db_dx(tk, phi[static_cast<std::size_t>(k)]) *
                      q[static_cast<std::size_t>(k)]) -
           dH * drift.d2b_dx2(tk, phi[static_cast<std::size_t>(k)]);
  }
  return r;
}

void export_mpp_result(const MPPResult& result, const std::string& csv_path,
                       const std::string& json_path) {
  std::ofstream csv(csv_path);
  if (!csv) throw std::runtime_error("export_mpp_result: cannot open " + csv_path);
  csv << "t,phi\n";
  char buf[64];
  for (int k = 0; k < result.phi.size(); ++k) {
    std::snprintf(buf, sizeof(buf), "%.12g,%.12g",
                  result.phi.grid->nodes[static_cast<std::size_t>(k)],
                  result.phi[k]);
    csv << buf << "\n";
  }
  nlohmann::ordered_json j;
  j["J"] = result.J;
  j["boundary_gap"] = result.boundary_gap;
  j["grad_norm"] = result.grad_norm;
  j["iterations"] = result.iterations;
  j["converged"] = result.converged;
  std::ofstream js(json_path);
  if (!js) throw std::runtime_error("export_mpp_result: cannot open " + json_path);
  js << j.dump(2) << "\n";
}

}  // namespace omfrac
