#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "subflow/config.hpp"
#include "subflow/diagnostics.hpp"
#include "subflow/flow.hpp"
#include "subflow/heatkernel.hpp"
#include "subflow/operators.hpp"
#include "subflow/target.hpp"

namespace subflow {

inline constexpr int kExitConverged = 0;
inline constexpr int kExitBudget = 2;
inline constexpr int kExitAborted = 3;
inline constexpr int kExitIo = 4;
inline constexpr int kExitUsage = 64;

int exit_code(Outcome o);

std::shared_ptr<const Potential> make_potential(const PotentialSpec &spec, std::size_t dim);

/// Smooth field with random Fourier coefficients in (x, y) plus bump-modulated
/// z modes, scaled to sup norm `amplitude`. Smooth on the quotient.
ScalarField random_smooth_field(const Discretization &disc, std::mt19937_64 &rng, int modes,
                                double amplitude);

/// Initial map described by config.initial, drawing randomness from a
/// generator seeded with config.seed.
MapState make_initial_map(const RunConfig &config, const Discretization &disc,
                          const Target &target);

/// λ_G over the working region: the whole target when compact, a geodesic
/// ball of radius 2·(initial radius) + 0.5 around the base point otherwise.
double working_hessian_bound(const Target &target, const Potential &potential,
                             const MapState &initial);

/// Hyperbolic distance between two points of the Poincaré disk.
double disk_distance(const Vector &a, const Vector &b);

struct Problem {
  Discretization disc;
  std::shared_ptr<const Target> target;
  std::shared_ptr<const Potential> potential;
  MapState initial;
  double lambda_G = 0.0;
  /// η_min of the model (0 when the model is not bracket generating).
  double eta_min = 0.0;
};

/// Validates the config and assembles operators, target, potential and the
/// initial map.
Problem build_problem(const RunConfig &config);

struct ScenarioResult {
  FlowResult flow;
  double lambda_G = 0.0;
  double eta_min = 0.0;
  nlohmann::json summary;
  int exit_code = kExitConverged;
};

/// Runs the flow of a config. With write_artifacts, writes ledger.csv,
/// summary.json and final.{bin,json} under config.output.
ScenarioResult run_scenario(const RunConfig &config, bool write_artifacts = true);

/// JSON summary of a finished run.
nlohmann::json scenario_summary(const RunConfig &config, const Problem &problem,
                                const FlowResult &flow);

struct DtSweep {
  std::vector<double> dt;
  std::vector<double> residual;
  double order = 0.0;
};

/// Runs the scenario for t_max with dt, dt/2, ... (levels values) and fits
/// the order of the energy identity residual.
DtSweep energy_identity_sweep(const RunConfig &config, int levels, double t_max);

struct GridSweep {
  std::vector<double> h;
  std::vector<double> defect;
  double order = 0.0;
};

/// Commutator defect on base, 2·base, 4·base, ... (levels grids).
GridSweep commutator_sweep(const GroupModel &model, const Grid &base, int levels);

struct PicardStudy {
  PicardResult picard;
  /// Step of the explicit flow run to the same time.
  double flow_dt = 0.0;
  /// sup over nodes and components of |u_picard(t) − u_flow(t)|.
  double sup_difference = 0.0;
};

/// Picard iteration to time t next to an explicit flow run with step
/// flow_dt (tubular-euler for curved embedded targets, so that both solve
/// the same unprojected equation).
PicardStudy picard_study(const Problem &problem, const SpectralDecomposition &spec, double t,
                         int Q, int k_max, double flow_dt,
                         TensionScheme scheme = TensionScheme::variational);

} // namespace subflow
