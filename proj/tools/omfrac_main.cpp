// omfrac: batch front end for OM-functional evaluation, most probable
// transition paths, SDE ensembles and small-ball statistics.
//
//   omfrac <subcommand> --config <file> [--out dir] [--seed k] [--force] [--dry-run]
//
// Exit codes: 0 success, 2 malformed configuration, 3 assumption failure.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "omfrac/mc.hpp"
#include "omfrac/mpp.hpp"
#include "omfrac/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace omfrac;

namespace {

constexpr const char* kVersion = "omfrac 1.0.0";

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct AssumptionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require_keys(const ordered_json& obj, const std::string& where,
                  const std::set<std::string>& required,
                  const std::set<std::string>& optional) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    if (required.count(key) == 0 && optional.count(key) == 0) {
      throw ConfigError(where + ": unknown key '" + key + "'");
    }
  }
  for (const auto& key : required) {
    if (!obj.contains(key)) {
      throw ConfigError(where + ": missing key '" + key + "'");
    }
  }
}

double num(const ordered_json& j, const std::string& where) {
  if (!j.is_number()) throw ConfigError(where + ": expected a number");
  return j.get<double>();
}

SigmaSpec parse_sigma(const ordered_json& j) {
  require_keys(j, "sigma", {"family"}, {"scale", "oscillations", "t", "values"});
  const std::string fam = j.at("family").get<std::string>();
  if (fam == "constant") {
    return SigmaSpec::constant(j.value("scale", 1.0));
  }
  if (fam == "sinusoidal") {
    return SigmaSpec::sinusoidal(j.value("scale", 1.0), j.value("oscillations", 1));
  }
  if (fam == "tabulated") {
    if (!j.contains("t") || !j.contains("values")) {
      throw ConfigError("sigma: tabulated family needs 't' and 'values'");
    }
    return SigmaSpec::tabulated(j.at("t").get<std::vector<double>>(),
                                j.at("values").get<std::vector<double>>());
  }
  throw ConfigError("sigma: unknown family '" + fam + "'");
}

NoiseModel parse_noise(const ordered_json& j) {
  require_keys(j, "noise", {"H", "sigma"}, {});
  try {
    return NoiseModel::of(HurstParam::of(num(j.at("H"), "noise.H")),
                          parse_sigma(j.at("sigma")));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("noise: ") + e.what());
  }
}

DriftSpec parse_drift(const ordered_json& j) {
  require_keys(j, "drift", {"family"}, {"a", "k"});
  const std::string fam = j.at("family").get<std::string>();
  if (fam == "double_well") return DriftSpec::double_well(j.value("a", 1.0));
  if (fam == "linear") return DriftSpec::linear(j.value("k", 1.0));
  if (fam == "zero") return DriftSpec::zero();
  throw ConfigError("drift: unknown family '" + fam + "'");
}

GridPtr parse_grid(const ordered_json& j) {
  require_keys(j, "grid", {"n"}, {"T"});
  try {
    return make_uniform_grid(j.value("T", 1.0), j.at("n").get<int>());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("grid: ") + e.what());
  }
}

std::vector<double> read_csv_column(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open csv file: " + file);
  std::vector<double> vals;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      vals.push_back(std::stod(line));
    } catch (...) {
      if (!vals.empty()) throw ConfigError("csv parse error in " + file);
    }
  }
  if (vals.empty()) throw ConfigError("csv file holds no values: " + file);
  return vals;
}

struct CommonOpts {
  std::string config_file;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed_override;
  bool force = false;
  bool dry_run = false;
};

ordered_json load_config(const CommonOpts& opts) {
  std::ifstream in(opts.config_file);
  if (!in) throw ConfigError("cannot open config: " + opts.config_file);
  ordered_json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config parse: ") + e.what());
  }
  return j;
}

void write_manifest(const CommonOpts& opts, const std::string& command,
                    const ordered_json& config,
                    const std::vector<std::string>& outputs,
                    const std::string& name_hint = "") {
  ordered_json m;
  m["command"] = command;
  m["version"] = kVersion;
  const auto now = std::chrono::system_clock::now();
  m["timestamp_unix"] =
      std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch())
          .count();
  m["config"] = config;
  m["outputs"] = outputs;
  const std::string stem = name_hint.empty() ? command : name_hint;
  const fs::path path = fs::path(opts.out_dir) / (stem + "_manifest.json");
  std::ofstream out(path);
  out << m.dump(2) << "\n";
}

std::uint64_t resolve_seed(const CommonOpts& opts, const ordered_json& cfg) {
  if (opts.seed_override) return *opts.seed_override;
  return cfg.value("seed", 0ULL);
}

// ---------------------------------------------------------------- om-eval
int cmd_om_eval(const CommonOpts& opts) {
  auto cfg = load_config(opts);
  require_keys(cfg, "om-eval config", {"noise", "drift", "grid", "input"},
               {"x0", "beta", "seed"});
  auto noise = parse_noise(cfg.at("noise"));
  auto drift = parse_drift(cfg.at("drift"));
  auto grid = parse_grid(cfg.at("grid"));
  const double x0 = cfg.value("x0", 0.0);
  const double beta =
      cfg.contains("beta") ? num(cfg.at("beta"), "beta")
                           : default_beta(noise.hurst, drift.smoothness);

  const auto& input = cfg.at("input");
  require_keys(input, "input", {"kind"}, {"values", "csv"});
  const std::string kind = input.at("kind").get<std::string>();
  if (kind != "path" && kind != "control") {
    throw ConfigError("input.kind must be 'path' or 'control'");
  }
  std::vector<double> vals;
  if (input.contains("values")) {
    vals = input.at("values").get<std::vector<double>>();
  } else if (input.contains("csv")) {
    vals = read_csv_column(input.at("csv").get<std::string>());
  } else {
    throw ConfigError("input: needs 'values' or 'csv'");
  }
  if (static_cast<int>(vals.size()) != grid->n) {
    throw ConfigError("input length does not match grid.n");
  }

  auto report = check_assumption_A(drift, noise, beta);
  if (!report.pass && !opts.force) {
    std::cerr << "assumption check failed:\n" << report.to_json() << "\n";
    throw AssumptionError("assumptions violated (use --force to override)");
  }
  if (opts.dry_run) return 0;

  SampledPath f = SampledPath::of(grid, std::move(vals));
  OMEvaluation ev;
  if (kind == "path") {
    ev = om_from_path(f, drift, noise);
  } else {
    ev = om_evaluate(f, x0, drift, noise);
  }
  const std::string out_path =
      (fs::path(opts.out_dir) / "om_eval_report.json").string();
  std::ofstream out(out_path);
  out << om_report_json(ev, compute_dH(noise.hurst.H), &report) << "\n";
  write_manifest(opts, "om-eval", cfg, {out_path});
  std::cout << "J = " << ev.J << " (kinetic " << ev.kinetic << ", divergence "
            << ev.divergence << ")\n";
  return 0;
}

// -------------------------------------------------------------------- mpp
int cmd_mpp(const CommonOpts& opts) {
  auto cfg = load_config(opts);
  require_keys(cfg, "mpp config", {"noise", "drift", "grid", "x0", "x1"},
               {"beta", "seed", "optimizer"});
  MPPProblem prob;
  prob.noise = parse_noise(cfg.at("noise"));
  prob.drift = parse_drift(cfg.at("drift"));
  prob.grid = parse_grid(cfg.at("grid"));
  prob.x0 = num(cfg.at("x0"), "x0");
  prob.x1 = num(cfg.at("x1"), "x1");
  if (cfg.contains("optimizer")) {
    const auto& o = cfg.at("optimizer");
    require_keys(o, "optimizer", {}, {"max_iters", "grad_tol", "boundary_tol"});
    prob.opt.max_iters = o.value("max_iters", prob.opt.max_iters);
    prob.opt.grad_tol = o.value("grad_tol", prob.opt.grad_tol);
    prob.opt.boundary_tol = o.value("boundary_tol", prob.opt.boundary_tol);
  }
  const double beta =
      cfg.contains("beta") ? num(cfg.at("beta"), "beta")
                           : default_beta(prob.noise.hurst, prob.drift.smoothness);
  auto report = check_assumption_A(prob.drift, prob.noise, beta);
  if (!report.pass && !opts.force) {
    std::cerr << "assumption check failed:\n" << report.to_json() << "\n";
    throw AssumptionError("assumptions violated (use --force to override)");
  }
  if (opts.dry_run) return 0;

  auto result = solve_mpp(prob);
  const std::string csv = (fs::path(opts.out_dir) / "mpp_path.csv").string();
  const std::string js = (fs::path(opts.out_dir) / "mpp_diagnostics.json").string();
  export_mpp_result(result, csv, js);
  std::vector<std::string> outputs = {csv, js};
  if (prob.noise.hurst.standard()) {
    auto resid = el_residual_standard(result.phi, prob.drift, prob.noise);
    const std::string rc = (fs::path(opts.out_dir) / "mpp_el_residual.csv").string();
    std::ofstream out(rc);
    out << "t,residual\n";
    for (int k = 0; k < resid.size(); ++k) {
      out << resid.grid->nodes[static_cast<std::size_t>(k)] << "," << resid[k]
          << "\n";
    }
    outputs.push_back(rc);
  }
  write_manifest(opts, "mpp", cfg, outputs);
  std::cout << "J = " << result.J << ", boundary gap " << result.boundary_gap
            << ", converged " << (result.converged ? "yes" : "no") << "\n";
  return result.converged ? 0 : 1;
}

// --------------------------------------------------------------- simulate
int cmd_simulate(const CommonOpts& opts) {
  auto cfg = load_config(opts);
  require_keys(cfg, "simulate config",
               {"noise", "drift", "grid", "x0", "n_paths"},
               {"seed", "threshold", "mpp_overlay", "x1", "tag"});
  SDEConfig sim;
  sim.noise = parse_noise(cfg.at("noise"));
  sim.drift = parse_drift(cfg.at("drift"));
  sim.grid = parse_grid(cfg.at("grid"));
  sim.x0 = num(cfg.at("x0"), "x0");
  sim.n_paths = cfg.at("n_paths").get<int>();
  if (sim.n_paths < 1) throw ConfigError("n_paths must be >= 1");
  sim.seed = substream(resolve_seed(opts, cfg), "simulate");
  const double threshold = cfg.value("threshold", 0.0);
  if (opts.dry_run) return 0;

  const std::string tag = cfg.value("tag", std::string("run"));
  auto ens = simulate_sde_ensemble(sim);
  const std::string paths_csv =
      (fs::path(opts.out_dir) / (tag + "_paths.csv")).string();
  const std::string meta_json =
      (fs::path(opts.out_dir) / (tag + "_paths.json")).string();
  export_ensemble_csv(ens, sim.noise, paths_csv, meta_json);

  auto mean = empirical_mean_path(ens);
  int nsel = 0;
  SampledPath cond = mean;
  bool have_cond = true;
  try {
    cond = conditioned_mean_path(ens, threshold, &nsel);
  } catch (const std::runtime_error&) {
    have_cond = false;
  }
  const std::string mean_csv =
      (fs::path(opts.out_dir) / (tag + "_mean.csv")).string();
  {
    std::ofstream out(mean_csv);
    out << "t,mean,conditioned_mean\n";
    for (int k = 0; k < mean.size(); ++k) {
      out << sim.grid->nodes[static_cast<std::size_t>(k)] << "," << mean[k] << ",";
      if (have_cond) {
        out << cond[k];
      } else {
        out << "nan";
      }
      out << "\n";
    }
  }
  std::vector<std::string> outputs = {paths_csv, meta_json, mean_csv};

  if (cfg.value("mpp_overlay", false)) {
    MPPProblem prob;
    prob.noise = sim.noise;
    prob.drift = sim.drift;
    prob.grid = sim.grid;
    prob.x0 = sim.x0;
    prob.x1 = cfg.value("x1", -sim.x0);
    auto result = solve_mpp(prob);
    const std::string mpp_csv =
        (fs::path(opts.out_dir) / (tag + "_mpp.csv")).string();
    const std::string mpp_js =
        (fs::path(opts.out_dir) / (tag + "_mpp.json")).string();
    export_mpp_result(result, mpp_csv, mpp_js);
    outputs.push_back(mpp_csv);
    outputs.push_back(mpp_js);
  }
  write_manifest(opts, "simulate", cfg, outputs, "simulate_" + tag);
  std::cout << "transition fraction = " << transition_fraction(ens, threshold)
            << " (" << sim.n_paths << " paths)\n";
  return 0;
}

// --------------------------------------------------------------- smallball
int cmd_smallball(const CommonOpts& opts) {
  auto cfg = load_config(opts);
  require_keys(cfg, "smallball config", {"noise", "grid", "norm", "n_samples"},
               {"seed", "epsilons", "tag"});
  SmallBallConfig sb;
  sb.noise = parse_noise(cfg.at("noise"));
  sb.grid = parse_grid(cfg.at("grid"));
  const auto& norm = cfg.at("norm");
  require_keys(norm, "norm", {"kind"}, {"beta"});
  const std::string kind = norm.at("kind").get<std::string>();
  if (kind == "sup") {
    sb.norm = NormSpec::sup();
  } else if (kind == "holder") {
    if (!norm.contains("beta")) throw ConfigError("norm: holder needs beta");
    sb.norm = NormSpec::holder(num(norm.at("beta"), "norm.beta"));
  } else {
    throw ConfigError("norm.kind must be 'sup' or 'holder'");
  }
  sb.n_samples = cfg.at("n_samples").get<int>();
  if (sb.n_samples < 100) throw ConfigError("n_samples must be >= 100");
  if (cfg.contains("epsilons")) {
    sb.epsilons = cfg.at("epsilons").get<std::vector<double>>();
  }
  sb.seed = resolve_seed(opts, cfg);
  if (opts.dry_run) return 0;

  const std::string tag = cfg.value("tag", std::string("smallball"));
  auto table = small_ball_estimate(sb);
  const std::string csv = (fs::path(opts.out_dir) / (tag + "_table.csv")).string();
  export_smallball_csv(table, csv);
  ordered_json fit_js;
  try {
    auto fit = small_ball_exponent_fit(table);
    fit_js["slope"] = fit.slope;
    fit_js["intercept"] = fit.intercept;
    fit_js["r_squared"] = fit.r_squared;
    fit_js["rows_used"] = fit.rows_used;
    std::cout << "fitted slope " << fit.slope << " (r^2 " << fit.r_squared
              << ")\n";
  } catch (const std::exception& e) {
    fit_js["error"] = e.what();
    std::cout << "fit unavailable: " << e.what() << "\n";
  }
  const std::string js = (fs::path(opts.out_dir) / (tag + "_fit.json")).string();
  std::ofstream out(js);
  out << fit_js.dump(2) << "\n";
  write_manifest(opts, "smallball", cfg, {csv, js}, "smallball_" + tag);
  return 0;
}

// ------------------------------------------------------------------ check
int cmd_check(const CommonOpts& opts) {
  auto cfg = load_config(opts);
  require_keys(cfg, "check config", {"noise", "drift"}, {"beta", "seed"});
  auto noise = parse_noise(cfg.at("noise"));
  auto drift = parse_drift(cfg.at("drift"));
  const double beta = cfg.contains("beta")
                          ? num(cfg.at("beta"), "beta")
                          : default_beta(noise.hurst, drift.smoothness);
  auto report = check_assumption_A(drift, noise, beta);
  if (opts.dry_run) return report.pass || opts.force ? 0 : 3;
  const std::string js =
      (fs::path(opts.out_dir) / "assumption_report.json").string();
  std::ofstream out(js);
  out << report.to_json() << "\n";
  write_manifest(opts, "check", cfg, {js});
  std::cout << report.to_json() << "\n";
  if (!report.pass && !opts.force) {
    throw AssumptionError("assumptions violated");
  }
  return 0;
}

// ---------------------------------------------------------------- figures
// The nine Example-1 panels: H in {1/2, 3/5, 3/10} x (c, n) in
// {(1,1), (1,4), (1/2,1)}, each a simulate run with an MPP overlay.
int cmd_figures(const CommonOpts& opts) {
  auto cfg = load_config(opts);
  require_keys(cfg, "figures config", {}, {"seed", "n_paths", "grid_n"});
  const std::uint64_t seed = resolve_seed(opts, cfg);
  const int n_paths = cfg.value("n_paths", 1000);
  const int grid_n = cfg.value("grid_n", 129);
  if (opts.dry_run) return 0;

  std::vector<std::string> outputs;
  const double hs[3] = {0.5, 0.6, 0.3};
  const std::pair<double, int> cn[3] = {{1.0, 1}, {1.0, 4}, {0.5, 1}};
  for (double H : hs) {
    for (auto [c, nosc] : cn) {
      char tag[64];
      std::snprintf(tag, sizeof(tag), "fig_H%g_c%g_n%d", H, c, nosc);
      ordered_json sub;
      sub["noise"] = {{"H", H},
                      {"sigma",
                       {{"family", "sinusoidal"}, {"scale", c}, {"oscillations", nosc}}}};
      sub["drift"] = {{"family", "double_well"}, {"a", 1.0}};
      sub["grid"] = {{"T", 1.0}, {"n", grid_n}};
      sub["x0"] = -1.0;
      sub["x1"] = 1.0;
      sub["n_paths"] = n_paths;
      sub["seed"] = seed;
      sub["mpp_overlay"] = true;
      sub["tag"] = tag;
      const fs::path sub_file = fs::path(opts.out_dir) / (std::string(tag) + ".json");
      {
        std::ofstream out(sub_file);
        out << sub.dump(2) << "\n";
      }
      CommonOpts sub_opts = opts;
      sub_opts.config_file = sub_file.string();
      const int rc = cmd_simulate(sub_opts);
      if (rc != 0) return rc;
      outputs.push_back(sub_file.string());
    }
  }
  write_manifest(opts, "figures", cfg, outputs);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Onsager-Machlup functionals and most probable transition "
               "paths for SDEs driven by time-varying fractional noise"};
  app.require_subcommand(1);

  CommonOpts opts;
  std::uint64_t seed_val = 0;
  bool seed_set = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opts.config_file, "JSON configuration file")
        ->required();
    sub->add_option("--out", opts.out_dir, "output directory");
    sub->add_option("--seed", seed_val, "override the config seed")
        ->each([&](const std::string&) { seed_set = true; });
    sub->add_flag("--force", opts.force, "proceed despite assumption failures");
    sub->add_flag("--dry-run", opts.dry_run, "validate the config and exit");
  };

  auto* om_eval = app.add_subcommand("om-eval", "evaluate the OM functional");
  auto* mpp = app.add_subcommand("mpp", "solve for the most probable path");
  auto* simulate = app.add_subcommand("simulate", "run an SDE ensemble");
  auto* smallball = app.add_subcommand("smallball", "empirical small-ball table");
  auto* check = app.add_subcommand("check", "assumption report only");
  auto* figures = app.add_subcommand("figures", "nine-panel experiment bundle");
  for (auto* sub : {om_eval, mpp, simulate, smallball, check, figures}) {
    add_common(sub);
  }
  app.set_version_flag("--version", kVersion);

  CLI11_PARSE(app, argc, argv);
  if (seed_set) opts.seed_override = seed_val;

  try {
    fs::create_directories(opts.out_dir);
    if (om_eval->parsed()) return cmd_om_eval(opts);
    if (mpp->parsed()) return cmd_mpp(opts);
    if (simulate->parsed()) return cmd_simulate(opts);
    if (smallball->parsed()) return cmd_smallball(opts);
    if (check->parsed()) return cmd_check(opts);
    if (figures->parsed()) return cmd_figures(opts);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const AssumptionError& e) {
    std::cerr << "assumption failure: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
