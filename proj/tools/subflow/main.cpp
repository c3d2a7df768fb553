// subflow: run heat-flow scenarios and the accompanying checks.

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <regex>
#include <sstream>

#include <CLI11.hpp>

#include "subflow/config.hpp"
#include "subflow/error.hpp"
#include "subflow/heatkernel.hpp"
#include "subflow/model.hpp"
#include "subflow/scenario.hpp"

namespace {

using namespace subflow;

struct Overrides {
  double dt = -1.0;
  double t_max = -1.0;
  std::string grid;
  long seed = -1;
  std::string out;
};

void add_overrides(CLI::App *cmd, Overrides &o) {
  cmd->add_option("--dt", o.dt, "time step (0 = stability limit)");
  cmd->add_option("--t-max", o.t_max, "flow time budget");
  cmd->add_option("--grid", o.grid, "grid as NXxNYxNZ");
  cmd->add_option("--seed", o.seed, "random seed");
  cmd->add_option("--out", o.out, "output directory");
}

void apply(RunConfig &c, const Overrides &o) {
  if (o.dt >= 0.0)
    c.flow.dt = o.dt;
  if (o.t_max >= 0.0)
    c.flow.t_max = o.t_max;
  if (!o.grid.empty())
    c.grid = parse_grid(o.grid);
  if (o.seed >= 0)
    c.seed = static_cast<std::uint64_t>(o.seed);
  if (!o.out.empty())
    c.output = o.out;
  const auto v = validate_config(c);
  if (!v.empty())
    throw ConfigError(v);
}

std::string read_file(const std::string &path) {
  std::ifstream is(path);
  if (!is)
    throw IoError("cannot read " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

RunConfig load_config(const std::string &file, const std::string &preset) {
  RunConfig c;
  bool has_output = false;
  if (!file.empty()) {
    const std::string text = read_file(file);
    c = parse_config(text);
    has_output = std::regex_search(text, std::regex(R"((^|\n)\s*output\s*=)"));
  } else if (!preset.empty()) {
    c = preset_config(preset);
  } else {
    throw ConfigError({"run: give a config file or --preset"});
  }
  if (!has_output) {
    if (const char *root = std::getenv("SUBFLOW_OUT"); root && *root)
      c.output = std::filesystem::path(root) / (c.preset.empty() ? "run" : c.preset);
  }
  return c;
}

std::vector<double> parse_list(const std::string &s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    out.push_back(std::stod(item));
  return out;
}

void print_threshold(const Problem &p) {
  std::cout << "eta_min = " << p.eta_min << ", threshold eta_min/2 = " << 0.5 * p.eta_min
            << ", lambda_G = " << p.lambda_G << " ("
            << (p.lambda_G < 0.5 * p.eta_min ? "below" : "NOT below") << " threshold)\n";
}

int cmd_run(const RunConfig &cfg) {
  const Problem p = build_problem(cfg);
  std::cout << "scenario " << (cfg.preset.empty() ? "custom" : cfg.preset) << " on "
            << cfg.grid.nx << "x" << cfg.grid.ny << "x" << cfg.grid.nz << "\n";
  print_threshold(p);
  const ScenarioResult r = run_scenario(cfg);
  std::cout << "outcome " << to_string(r.flow.outcome) << " after " << r.flow.steps
            << " steps at t = " << r.flow.final_state.t << " (" << r.flow.message << ")\n";
  for (const char *key : {"homotopy_preserved", "final_diameter", "final_distance_to_base",
                          "final_sup_distance_to_target", "normal_defect_max_increase"})
    if (r.summary.contains(key))
      std::cout << key << " = " << r.summary[key].dump() << "\n";
  std::cout << "checks " << r.summary["checks"].dump() << "\n";
  std::cout << "artifacts in " << cfg.output.string() << "\n";
  return r.exit_code;
}

int cmd_eta(const std::string &model_name, const std::string &grid_text) {
  const GroupModel model = GroupModel::from_name(model_name);
  const Grid grid = parse_grid(grid_text);
  std::cout << std::setprecision(17);
  try {
    const int step = verify_bracket_generating(model);
    std::cout << "bracket generating: yes (step " << step << ")\n";
  } catch (const NotBracketGenerating &e) {
    std::cout << "bracket generating: no (" << e.what() << ")\n";
  }
  const double eta = eta_min(model, grid, 64);
  std::cout << "eta_min = " << eta << "\n";
  std::cout << "threshold eta_min/2 = " << 0.5 * eta << "\n";
  return 0;
}

int cmd_kernel_check(const std::string &model_name, const std::string &grid_text,
                     const std::string &times_text, bool gradient_mass) {
  const Discretization disc(GroupModel::from_name(model_name), parse_grid(grid_text));
  const SpectralDecomposition spec = spectral_decompose(disc);
  const double floor = disc.grid().h_max() * disc.grid().h_max();
  const KernelReport r = kernel_checks(spec, parse_list(times_text), floor);
  std::cout << std::setprecision(6) << std::scientific;
  std::cout << "nodes = " << spec.size() << "\n";
  std::cout << "lambda_0 = " << spec.eigenvalues()[0] << "\n";
  std::cout << "lambda_1 = " << spec.eigenvalues()[1] << "\n";
  std::cout << "kernel_dimension = " << spec.kernel_dimension() << "\n";
  std::cout << "eigen_residual = " << spec.residual() << "\n";
  std::cout << "orthonormality_defect = " << spec.orthonormality_defect() << "\n";
  std::cout << "t_floor = " << r.t_floor << "\n";
  for (const auto &row : r.rows)
    std::cout << "t = " << row.t << ": asymmetry = " << row.max_asymmetry
              << ", min_entry = " << row.min_entry
              << ", mass_deviation = " << row.max_mass_deviation
              << ", semigroup_residual = " << row.semigroup_residual
              << ", positivity = " << (row.positivity_asserted ? "asserted" : "not asserted")
              << "\n";
  if (gradient_mass) {
    std::vector<double> ts, vals;
    for (double t = 0.04; t > 0.009; t *= 0.5) {
      ts.push_back(t);
      vals.push_back(kernel_gradient_mass(spec, disc, t));
      std::cout << "gradient_mass(t = " << t << ") = " << vals.back() << "\n";
    }
    std::cout << "fitted exponent = " << fit_order(ts, vals) << "\n";
  }
  std::cout << "mass " << (r.mass_ok ? "pass" : "FAIL") << ", symmetry "
            << (r.symmetry_ok ? "pass" : "FAIL") << ", semigroup "
            << (r.semigroup_ok ? "pass" : "FAIL") << ", positivity "
            << (r.positivity_ok ? "pass" : "FAIL") << "\n";
  return r.pass() ? 0 : 1;
}

int cmd_picard(RunConfig cfg, double t, int Q, int k_max, double flow_dt) {
  const Problem p = build_problem(cfg);
  const SpectralDecomposition spec = spectral_decompose(p.disc);
  if (flow_dt <= 0.0)
    flow_dt = t / 64.0;
  const PicardStudy s = picard_study(p, spec, t, Q, k_max, flow_dt);
  const auto &X = s.picard.state.X;
  std::cout << std::setprecision(6) << std::scientific;
  std::cout << "t = " << t << ", Q = " << Q << ", k_max = " << k_max << "\n";
  bool contract = true;
  for (std::size_t k = 0; k < X.size(); ++k) {
    std::cout << "X_" << k + 1 << " = " << X[k];
    if (k + 1 < X.size()) {
      const double ratio = s.picard.ratios[k];
      contract = contract && ratio < 1.0;
      std::cout << ", ratio X_" << k + 2 << "/X_" << k + 1 << " = " << ratio;
    }
    std::cout << "\n";
  }
  std::cout << "sup |picard - flow(dt = " << s.flow_dt << ")| = " << s.sup_difference << "\n";
  std::cout << "contraction " << (contract ? "pass" : "FAIL") << "\n";
  return contract ? 0 : 1;
}

int cmd_sweep(const RunConfig &cfg, const std::string &kind, int levels, double t_max) {
  std::cout << std::setprecision(6) << std::scientific;
  if (kind == "dt") {
    const DtSweep s = energy_identity_sweep(cfg, levels, t_max);
    for (std::size_t i = 0; i < s.dt.size(); ++i)
      std::cout << "dt = " << s.dt[i] << ": energy identity residual = " << s.residual[i]
                << "\n";
    std::cout << "fitted order = " << std::fixed << s.order << "\n";
    return 0;
  }
  if (kind == "grid") {
    const GridSweep s = commutator_sweep(GroupModel::from_name(cfg.model), cfg.grid, levels);
    for (std::size_t i = 0; i < s.h.size(); ++i)
      std::cout << "h = " << s.h[i] << ": commutator defect = " << s.defect[i] << "\n";
    std::cout << "fitted order = " << std::fixed << s.order << "\n";
    return 0;
  }
  throw ConfigError({"sweep: --kind must be dt or grid"});
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"subelliptic harmonic map heat flow with potential"};
  app.require_subcommand(0, 1);
  bool list_presets = false;
  app.add_flag("--list-presets", list_presets, "print scenario presets and exit");

  Overrides run_o, picard_o, sweep_o;
  std::string config_file, run_preset;
  auto *run = app.add_subcommand("run", "run a flow scenario");
  run->add_option("config", config_file, "key = value configuration file");
  run->add_option("--preset", run_preset, "start from a named preset");
  add_overrides(run, run_o);

  std::string eta_model = "heisenberg", eta_grid = "12x12x24";
  auto *eta = app.add_subcommand("eta", "eta_min of a model and the convergence threshold");
  eta->add_option("--model", eta_model, "model name")->capture_default_str();
  eta->add_option("--grid", eta_grid, "sampling grid")->capture_default_str();

  std::string kc_model = "heisenberg", kc_grid = "8x8x8", kc_times = "0.01,0.05,0.1";
  bool kc_gradient = false;
  auto *kc = app.add_subcommand("kernel-check", "heat kernel property report");
  kc->add_option("--model", kc_model, "model name")->capture_default_str();
  kc->add_option("--grid", kc_grid, "grid")->capture_default_str();
  kc->add_option("--times", kc_times, "comma-separated times")->capture_default_str();
  kc->add_flag("--gradient-mass", kc_gradient, "also report the kernel gradient mass");

  double pic_t = 0.005, pic_flow_dt = 0.0;
  int pic_q = 16, pic_k = 8;
  std::string pic_preset = "sphere-projected";
  auto *pic = app.add_subcommand("picard", "Duhamel-Picard contraction report");
  pic->add_option("--t", pic_t, "time horizon")->capture_default_str();
  pic->add_option("--Q", pic_q, "trapezoid intervals")->capture_default_str();
  pic->add_option("--k-max", pic_k, "iterations")->capture_default_str();
  pic->add_option("--flow-dt", pic_flow_dt, "step of the comparison flow (default t/64)");
  pic->add_option("--preset", pic_preset, "preset providing target and initial map")
      ->capture_default_str();
  add_overrides(pic, picard_o);

  std::string sw_preset = "torus-harmonic", sw_kind = "dt", sw_file;
  int sw_levels = 3;
  double sw_t = 0.02;
  auto *sw = app.add_subcommand("sweep", "dt or grid refinement study with fitted orders");
  sw->add_option("config", sw_file, "configuration file (default: --preset)");
  sw->add_option("--preset", sw_preset, "preset")->capture_default_str();
  sw->add_option("--kind", sw_kind, "dt (energy identity) or grid (commutator defect)")
      ->capture_default_str();
  sw->add_option("--levels", sw_levels, "refinement levels")->capture_default_str();
  sw->add_option("--sweep-t", sw_t, "flow time of each dt run")->capture_default_str();
  add_overrides(sw, sweep_o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (list_presets) {
      for (const auto &p : preset_catalogue())
        std::cout << p.name << ": " << p.exercises << "\n";
      return 0;
    }
    if (*run) {
      RunConfig c = load_config(config_file, run_preset);
      apply(c, run_o);
      return cmd_run(c);
    }
    if (*eta)
      return cmd_eta(eta_model, eta_grid);
    if (*kc)
      return cmd_kernel_check(kc_model, kc_grid, kc_times, kc_gradient);
    if (*pic) {
      RunConfig c = preset_config(pic_preset);
      c.grid = Grid(8, 8, 8);
      apply(c, picard_o);
      return cmd_picard(c, pic_t, pic_q, pic_k, pic_flow_dt);
    }
    if (*sw) {
      RunConfig c = load_config(sw_file, sw_preset);
      apply(c, sweep_o);
      return cmd_sweep(c, sw_kind, sw_levels, sw_t);
    }
    std::cerr << app.help();
    return kExitUsage;
  } catch (const ConfigError &e) {
    std::cerr << e.what() << "\n";
    return kExitUsage;
  } catch (const IoError &e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::filesystem::filesystem_error &e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kExitIo;
  } catch (const Error &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}
