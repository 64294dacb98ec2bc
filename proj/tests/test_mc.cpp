#include <doctest.h>

#include <cmath>

#include "omfrac/mc.hpp"

using namespace omfrac;

namespace {

SDEConfig base_config(double H, double c, int nosc, int n_paths,
                      std::uint64_t seed) {
  SDEConfig cfg;
  cfg.drift = DriftSpec::double_well(1.0);
  cfg.noise = NoiseModel::of(HurstParam::of(H), SigmaSpec::sinusoidal(c, nosc));
  cfg.x0 = -1.0;
  cfg.grid = make_uniform_grid(1.0, 129);
  cfg.n_paths = n_paths;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_CASE("drift-free simulation reproduces the noise ensemble exactly") {
  auto cfg = base_config(0.3, 1.0, 1, 16, 11);
  cfg.drift = DriftSpec::zero();
  cfg.x0 = 0.25;
  auto sde = simulate_sde_ensemble(cfg);
  auto noise = sample_paths(cfg.noise, cfg.grid, cfg.n_paths, cfg.seed,
                            EnsembleKind::IntegralPaths);
  double m = 0.0;
  for (int p = 0; p < cfg.n_paths; ++p) {
    for (int k = 0; k < cfg.grid->n; ++k) {
      m = std::max(m, std::abs(sde.samples(p, k) - (0.25 + noise.samples(p, k))));
    }
  }
  CHECK(m == 0.0);
}

TEST_CASE("simulation is deterministic in the seed") {
  auto a = simulate_sde_ensemble(base_config(0.5, 1.0, 1, 8, 5));
  auto b = simulate_sde_ensemble(base_config(0.5, 1.0, 1, 8, 5));
  CHECK((a.samples - b.samples).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("vanishing noise keeps the path at the stable equilibrium") {
  auto cfg = base_config(0.5, 1e-8, 1, 1, 3);
  auto sde = simulate_sde_ensemble(cfg);
  for (int k = 0; k < cfg.grid->n; ++k) {
    CHECK(std::abs(sde.samples(0, k) + 1.0) < 1e-3);
  }
}

TEST_CASE("a positive fraction of unit-noise paths escapes the left well") {
  auto cfg = base_config(0.5, 1.0, 1, 1000, 20240801);
  auto sde = simulate_sde_ensemble(cfg);
  const double frac = transition_fraction(sde, 0.0);
  CHECK(frac > 0.0);
  CHECK(frac < 1.0);
}

TEST_CASE("mean path of a single path is the path") {
  auto cfg = base_config(0.5, 1.0, 1, 1, 9);
  auto sde = simulate_sde_ensemble(cfg);
  auto mean = empirical_mean_path(sde);
  for (int k = 0; k < cfg.grid->n; ++k) {
    CHECK(mean[k] == sde.samples(0, k));
  }
}

TEST_CASE("antithetic pairing yields an exactly zero mean at b = 0") {
  auto cfg = base_config(0.3, 1.0, 1, 64, 31);
  cfg.drift = DriftSpec::zero();
  cfg.x0 = 0.0;
  auto noise = sample_paths(cfg.noise, cfg.grid, cfg.n_paths, cfg.seed,
                            EnsembleKind::IntegralPaths);
  GaussianEnsemble paired = noise;
  paired.samples.conservativeResize(2 * cfg.n_paths, Eigen::NoChange);
  paired.samples.bottomRows(cfg.n_paths) = -noise.samples;
  auto mean = empirical_mean_path(paired);
  for (int k = 0; k < cfg.grid->n; ++k) {
    CHECK(std::abs(mean[k]) < 1e-14);
  }
}

TEST_CASE("drift-free ensemble mean obeys a CLT envelope") {
  auto cfg = base_config(0.5, 1.0, 1, 4000, 101);
  cfg.drift = DriftSpec::zero();
  cfg.x0 = 0.0;
  auto sde = simulate_sde_ensemble(cfg);
  auto mean = empirical_mean_path(sde);
  for (int k = 1; k < cfg.grid->n; ++k) {
    // Var(U_t) <= (3c)^2 t for H = 1/2; allow 4 sigma slack
    const double sd = 3.0 * std::sqrt(cfg.grid->nodes[static_cast<std::size_t>(k)] /
                                      static_cast<double>(cfg.n_paths));
    CHECK(std::abs(mean[k]) < 4.0 * sd);
  }
}

TEST_CASE("transition fraction: degenerate and monotone cases") {
  auto cfg = base_config(0.5, 1.0, 1, 4, 1);
  auto ens = sample_paths(cfg.noise, cfg.grid, 4, 1, EnsembleKind::IntegralPaths);
  ens.samples.setZero();
  CHECK(transition_fraction(ens, 0.0) == 0.0);

  // matched seeds: smaller noise gives fewer escapes
  auto big = simulate_sde_ensemble(base_config(0.5, 1.0, 1, 800, 55));
  auto small = simulate_sde_ensemble(base_config(0.5, 0.5, 1, 800, 55));
  CHECK(transition_fraction(small, 0.0) <= transition_fraction(big, 0.0));
}

TEST_CASE("symmetric terminal law gives fraction about one half") {
  auto cfg = base_config(0.5, 2.0, 1, 4000, 77);
  cfg.drift = DriftSpec::zero();
  cfg.x0 = 0.0;
  auto sde = simulate_sde_ensemble(cfg);
  const double frac = transition_fraction(sde, 0.0);
  CHECK(std::abs(frac - 0.5) < 3.0 * 0.5 / std::sqrt(4000.0));
}

TEST_CASE("conditioned mean selects the transitioning subset") {
  auto cfg = base_config(0.5, 1.0, 1, 500, 13);
  auto sde = simulate_sde_ensemble(cfg);
  int nsel = 0;
  auto cm = conditioned_mean_path(sde, 0.0, &nsel);
  CHECK(nsel > 0);
  CHECK(cm[cfg.grid->n - 1] > 0.0);
}

TEST_CASE("small-ball estimates are monotone in epsilon and deterministic") {
  SmallBallConfig cfg;
  cfg.noise = NoiseModel::of(HurstParam::of(0.5), SigmaSpec::constant(1.0));
  cfg.norm = NormSpec::sup();
  cfg.grid = make_uniform_grid(1.0, 129);
  cfg.n_samples = 2000;
  cfg.seed = 17;
  auto t1 = small_ball_estimate(cfg);
  auto t2 = small_ball_estimate(cfg);
  REQUIRE(t1.rows.size() == t2.rows.size());
  for (std::size_t i = 0; i < t1.rows.size(); ++i) {
    CHECK(t1.rows[i].p_hat == t2.rows[i].p_hat);
    if (i > 0) {
      CHECK(t1.rows[i].p_hat <= t1.rows[i - 1].p_hat);  // eps decreasing
    }
    CHECK(t1.rows[i].stderr_wilson > 0.0);
  }
  // giant epsilon saturates at 1
  SmallBallConfig cfg2 = cfg;
  cfg2.epsilons = {100.0, 50.0, 25.0, 10.0};
  auto t3 = small_ball_estimate(cfg2);
  CHECK(t3.rows.front().p_hat == 1.0);
}

TEST_CASE("exponent fit recovers a synthetic generator exactly") {
  SmallBallTable table;
  table.n_samples = 100000;
  for (double e : {1.0, 0.8, 0.6, 0.45, 0.33, 0.25}) {
    SmallBallRow r;
    r.epsilon = e;
    r.p_hat = std::exp(-1.0 / (e * e));  // P = exp(-eps^-2)
    r.stderr_wilson = 1e-3;
    r.reliable = true;
    table.rows.push_back(r);
  }
  auto fit = small_ball_exponent_fit(table);
  CHECK(fit.slope == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(fit.r_squared == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("exponent fit requires enough reliable rows") {
  SmallBallTable table;
  table.n_samples = 1000;
  for (double e : {1.0, 0.8}) {
    SmallBallRow r;
    r.epsilon = e;
    r.p_hat = 0.5;
    r.reliable = true;
    table.rows.push_back(r);
  }
  CHECK_THROWS(small_ball_exponent_fit(table));
}

TEST_CASE("holder small-ball rejects beta >= H") {
  SmallBallConfig cfg;
  cfg.noise = NoiseModel::of(HurstParam::of(0.3), SigmaSpec::constant(1.0));
  cfg.norm = NormSpec::holder(0.4);
  cfg.grid = make_uniform_grid(1.0, 65);
  cfg.n_samples = 500;
  CHECK_THROWS(small_ball_estimate(cfg));
}
