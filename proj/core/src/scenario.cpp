#include "subflow/scenario.hpp"

#include <cmath>
#include <complex>
#include <fstream>

#include "subflow/error.hpp"

namespace subflow {

namespace {

using Index = Eigen::Index;

Index ix(std::size_t i) { return static_cast<Index>(i); }

Vector node_vector(const MapState &u, std::size_t p) {
  Vector v(ix(u.dimension()));
  for (std::size_t a = 0; a < u.dimension(); ++a)
    v[ix(a)] = u.components[a][ix(p)];
  return v;
}

Representation representation_for(const RunConfig &c) {
  if (c.target == "hyperbolic")
    return Representation::intrinsic_chart;
  return c.flow.scheme == Scheme::tubular_euler ? Representation::extrinsic_tubular
                                                : Representation::extrinsic_ambient;
}

} // namespace

int exit_code(Outcome o) {
  switch (o) {
  case Outcome::converged:
    return kExitConverged;
  case Outcome::budget_exhausted:
    return kExitBudget;
  case Outcome::aborted:
    return kExitAborted;
  }
  return kExitAborted;
}

std::shared_ptr<const Potential> make_potential(const PotentialSpec &spec, std::size_t dim) {
  if (spec.name == "zero")
    return std::make_shared<ZeroPotential>(dim);
  if (spec.name == "cosine")
    return std::make_shared<CosinePotential>(dim, spec.eps, spec.axis);
  if (spec.name == "rho-squared")
    return std::make_shared<RhoSquaredPotential>(spec.c);
  if (spec.name == "ambient-quadratic") {
    Vector a = Vector::Zero(ix(dim));
    for (std::size_t i = 0; i < spec.linear.size() && i < dim; ++i)
      a[ix(i)] = spec.linear[i];
    return std::make_shared<AmbientQuadraticPotential>(a, spec.kappa);
  }
  throw DomainError("unknown potential '" + spec.name + "'");
}

ScalarField random_smooth_field(const Discretization &disc, std::mt19937_64 &rng, int modes,
                                double amplitude) {
  std::normal_distribution<double> normal;
  struct Mode {
    int kx, ky, kz;
    double a, b;
  };
  std::vector<Mode> list;
  for (int kx = -modes; kx <= modes; ++kx)
    for (int ky = 0; ky <= modes; ++ky) {
      if (ky == 0 && kx <= 0)
        continue;
      const double a = normal(rng);
      const double b = normal(rng);
      list.push_back({kx, ky, 0, a, b});
    }
  for (int kz = 1; kz <= modes; ++kz)
    for (int ky = 0; ky <= modes; ++ky) {
      const double a = normal(rng);
      const double b = normal(rng);
      list.push_back({0, ky, kz, a, b});
    }
  ScalarField f = disc.sample([&](const Eigen::Vector3d &p) {
    double s = 0.0;
    for (const auto &m : list) {
      const double decay = 1.0 / (1.0 + m.kx * m.kx + m.ky * m.ky + m.kz * m.kz);
      if (m.kz == 0) {
        const double ph = 2.0 * M_PI * (m.kx * p[0] + m.ky * p[1]);
        s += decay * (m.a * std::cos(ph) + m.b * std::sin(ph));
      } else {
        const double ph = 2.0 * M_PI * (m.ky * p[1] + m.kz * p[2]);
        s += decay * seam_bump(p[0]) * (m.a * std::cos(ph) + m.b * std::sin(ph));
      }
    }
    return s;
  });
  const double sup = f.cwiseAbs().maxCoeff();
  if (sup > 0.0)
    f *= amplitude / sup;
  return f;
}

MapState make_initial_map(const RunConfig &config, const Discretization &disc,
                          const Target &target) {
  const auto &ini = config.initial;
  const std::size_t K = target.components();
  const auto n = ix(disc.size());
  std::mt19937_64 rng(config.seed);
  const Representation rep = representation_for(config);

  if (ini.preset == "checkpoint") {
    Grid g;
    MapState u = load_checkpoint(*ini.checkpoint, g);
    if (!(g == disc.grid()))
      throw DomainError("checkpoint grid does not match the configured grid");
    if (u.dimension() != K)
      throw DomainError("checkpoint component count does not match the target");
    u.representation = rep;
    validate_map(target, u);
    return u;
  }

  std::vector<ScalarField> comps;
  WindingMatrix w = WindingMatrix::Zero(ix(K), 3);
  if (ini.preset == "winding-perturbed") {
    for (std::size_t a = 0; a < K; ++a) {
      std::array<long, 3> row{0, 0, 0};
      if (a < ini.winding.size())
        row = ini.winding[a];
      ScalarField f = random_smooth_field(disc, rng, ini.modes, ini.amplitude);
      f += disc.sample([&](const Eigen::Vector3d &p) {
        return static_cast<double>(row[0]) * p[0] + static_cast<double>(row[1]) * p[1];
      });
      comps.push_back(std::move(f));
      for (std::size_t c = 0; c < 3; ++c)
        w(ix(a), ix(c)) = row[c];
    }
  } else if (ini.preset == "sphere-perturbed") {
    for (std::size_t a = 0; a < K; ++a) {
      ScalarField f = random_smooth_field(disc, rng, ini.modes, ini.amplitude);
      if (a == ini.pole)
        f.array() += 1.0;
      comps.push_back(std::move(f));
    }
    for (Index p = 0; p < n; ++p) {
      double r2 = 0.0;
      for (const auto &c : comps)
        r2 += c[p] * c[p];
      const double r = std::sqrt(r2);
      for (auto &c : comps)
        c[p] /= r;
    }
  } else if (ini.preset == "disk-perturbed") {
    for (std::size_t a = 0; a < K; ++a) {
      ScalarField f = random_smooth_field(disc, rng, ini.modes, ini.amplitude);
      if (a < ini.point.size())
        f.array() += ini.point[a];
      comps.push_back(std::move(f));
    }
  } else if (ini.preset == "constant") {
    for (std::size_t a = 0; a < K; ++a)
      comps.push_back(ScalarField::Constant(n, ini.point.at(a)));
  } else {
    throw DomainError("unknown initial map '" + ini.preset + "'");
  }
  MapState u(rep, std::move(comps), 0.0);
  u.winding = w;
  validate_map(target, u);
  return u;
}

double disk_distance(const Vector &a, const Vector &b) {
  using C = std::complex<double>;
  const C p(a[0], a[1]);
  const C q(b[0], b[1]);
  const double r = std::abs(p - q) / std::abs(1.0 - std::conj(p) * q);
  return 2.0 * std::atanh(std::min(r, 1.0 - 1e-16));
}

double working_hessian_bound(const Target &target, const Potential &potential,
                             const MapState &initial) {
  if (potential.is_zero())
    return 0.0;
  double radius = 1.0;
  if (const auto *intr = dynamic_cast<const IntrinsicTarget *>(&target)) {
    double rho0 = 0.0;
    for (std::size_t p = 0; p < initial.nodes(); ++p)
      rho0 = std::max(rho0, intr->distance_to_base(node_vector(initial, p)));
    radius = 2.0 * rho0 + 0.5;
  }
  return estimate_hessian_bound(target, potential, target.sample_points(64, radius));
}

Problem build_problem(const RunConfig &config) {
  const auto violations = validate_config(config);
  if (!violations.empty())
    throw ConfigError(violations);
  GroupModel model = GroupModel::from_name(config.model);
  double eta = 0.0;
  try {
    verify_bracket_generating(model);
    eta = eta_min(model, config.grid, 64);
  } catch (const NotBracketGenerating &) {
    eta = 0.0;
  }
  Discretization disc(std::move(model), config.grid);
  auto target = make_target(config.target, config.target_dim);
  auto potential = make_potential(config.potential, config.target_dim);
  MapState initial = make_initial_map(config, disc, *target);
  const double lambda = working_hessian_bound(*target, *potential, initial);
  return Problem{std::move(disc), std::move(target), std::move(potential), std::move(initial),
                 lambda, eta};
}

nlohmann::json scenario_summary(const RunConfig &config, const Problem &problem,
                                const FlowResult &flow) {
  nlohmann::json j = ledger_summary(flow.ledger, problem.lambda_G);
  j["preset"] = config.preset;
  j["model"] = config.model;
  j["grid"] = {config.grid.nx, config.grid.ny, config.grid.nz};
  j["target"] = config.target;
  j["potential"] = config.potential.name;
  j["seed"] = config.seed;
  j["eta_min"] = problem.eta_min;
  j["threshold"] = 0.5 * problem.eta_min;
  j["lambda_G_below_threshold"] = problem.lambda_G < 0.5 * problem.eta_min;
  j["steps"] = flow.steps;
  j["halvings"] = flow.halvings;
  j["unresolved_increases"] = flow.unresolved_increases;
  j["message"] = flow.message;
  j["exit_code"] = exit_code(flow.outcome);
  const Target &target = *problem.target;
  const MapState &u = flow.final_state;
  if (target.supports_winding()) {
    j["homotopy_preserved"] = homotopy_check(target, problem.initial, u);
    nlohmann::json w = nlohmann::json::array();
    for (Index r = 0; r < u.winding.rows(); ++r)
      w.push_back({u.winding(r, 0), u.winding(r, 1), u.winding(r, 2)});
    j["winding"] = w;
  }
  if (const auto *intr = dynamic_cast<const IntrinsicTarget *>(&target)) {
    double to_base = 0.0;
    for (std::size_t p = 0; p < u.nodes(); ++p)
      to_base = std::max(to_base, intr->distance_to_base(node_vector(u, p)));
    double diameter = 0.0;
    if (intr->name() == "hyperbolic") {
      for (std::size_t p = 0; p < u.nodes(); ++p) {
        const Vector a = node_vector(u, p);
        for (std::size_t q = p + 1; q < u.nodes(); ++q)
          diameter = std::max(diameter, disk_distance(a, node_vector(u, q)));
      }
    } else {
      diameter = 2.0 * to_base;
    }
    j["final_distance_to_base"] = to_base;
    j["final_diameter"] = diameter;
  }
  if (const auto *emb = dynamic_cast<const EmbeddedTarget *>(&target);
      emb && !target.supports_winding()) {
    double off = 0.0;
    for (std::size_t p = 0; p < u.nodes(); ++p)
      off = std::max(off, emb->distance_to_manifold(node_vector(u, p)));
    j["final_sup_distance_to_target"] = off;
    double worst_increase = 0.0;
    for (std::size_t k = 1; k < flow.ledger.size(); ++k)
      worst_increase =
          std::max(worst_increase, flow.ledger.entries[k].report.normal_defect -
                                       flow.ledger.entries[k - 1].report.normal_defect);
    j["normal_defect_max_increase"] = worst_increase;
  }
  return j;
}

ScenarioResult run_scenario(const RunConfig &config, bool write_artifacts) {
  Problem problem = build_problem(config);
  ScenarioResult res;
  res.flow = run_flow(problem.disc, problem.initial, config.flow, *problem.target,
                      *problem.potential);
  res.flow.ledger.config_echo = format_config(config);
  res.lambda_G = problem.lambda_G;
  res.eta_min = problem.eta_min;
  res.summary = scenario_summary(config, problem, res.flow);
  res.exit_code = exit_code(res.flow.outcome);
  if (write_artifacts) {
    std::error_code ec;
    std::filesystem::create_directories(config.output, ec);
    if (ec)
      throw IoError("cannot create output directory " + config.output.string() + ": " +
                    ec.message());
    save_ledger_csv(config.output / "ledger.csv", res.flow.ledger);
    std::ofstream os(config.output / "summary.json");
    if (!os)
      throw IoError("cannot write " + (config.output / "summary.json").string());
    os << res.summary.dump(2) << '\n';
    if (!os)
      throw IoError("failed writing summary.json");
    save_checkpoint(config.output / "final", problem.disc.grid(), res.flow.final_state);
  }
  return res;
}

DtSweep energy_identity_sweep(const RunConfig &config, int levels, double t_max) {
  if (levels < 2)
    throw DomainError("a dt sweep needs at least two levels");
  Problem problem = build_problem(config);
  DtSweep out;
  double dt = config.flow.dt > 0.0 ? config.flow.dt
                                   : stable_dt(problem.disc, config.flow.cfl_safety);
  for (int l = 0; l < levels; ++l, dt *= 0.5) {
    FlowConfig fc = config.flow;
    fc.dt = dt;
    fc.t_max = t_max;
    fc.record_stride = 1;
    fc.stop_tolerance = 1e-300;
    const FlowResult r =
        run_flow(problem.disc, problem.initial, fc, *problem.target, *problem.potential);
    out.dt.push_back(dt);
    out.residual.push_back(energy_identity_residual(r.ledger).max_residual);
  }
  out.order = fit_order(out.dt, out.residual);
  return out;
}

GridSweep commutator_sweep(const GroupModel &model, const Grid &base, int levels) {
  if (levels < 2)
    throw DomainError("a grid sweep needs at least two levels");
  GridSweep out;
  Grid g = base;
  for (int l = 0; l < levels; ++l) {
    const Discretization disc(model, g);
    out.h.push_back(g.h_max());
    out.defect.push_back(commutator_defect(disc));
    g = Grid(2 * g.nx, 2 * g.ny, 2 * g.nz);
  }
  out.order = fit_order(out.h, out.defect);
  return out;
}

PicardStudy picard_study(const Problem &problem, const SpectralDecomposition &spec, double t,
                         int Q, int k_max, double flow_dt, TensionScheme scheme) {
  PicardStudy out;
  out.picard = picard_run(problem.disc, spec, problem.initial, *problem.target,
                          *problem.potential, t, Q, k_max, scheme);
  FlowConfig fc;
  fc.dt = flow_dt;
  fc.t_max = t;
  fc.stop_tolerance = 1e-300;
  fc.tension = scheme;
  MapState start = problem.initial;
  if (!problem.target->supports_winding() && problem.target->is_embedded()) {
    fc.scheme = Scheme::tubular_euler;
    start.representation = Representation::extrinsic_tubular;
  }
  const FlowResult flow =
      run_flow(problem.disc, start, fc, *problem.target, *problem.potential);
  if (flow.outcome == Outcome::aborted)
    throw DomainError("flow comparison run aborted: " + flow.message);
  out.flow_dt = flow_dt;
  const MapState &a = out.picard.final_map();
  const MapState &b = flow.final_state;
  for (std::size_t c = 0; c < a.dimension(); ++c)
    out.sup_difference =
        std::max(out.sup_difference, (a.components[c] - b.components[c]).cwiseAbs().maxCoeff());
  return out;
}

} // namespace subflow
