#pragma once

#include <string>
#include <vector>

#include "subflow/diagnostics.hpp"
#include "subflow/map_state.hpp"
#include "subflow/operators.hpp"
#include "subflow/target.hpp"

namespace subflow {

enum class Scheme { projected_euler, tubular_euler };

/// How the curvature term of the tension field is discretised.
///
/// `variational` makes τ the exact negative gradient of the discrete energy
/// for the node measure: extrinsically the second-fundamental-form term is
/// Δ_H Π(u) − dΠ(u)Δ_H u (the discrete chain rule), intrinsically the
/// Christoffel term comes from differentiating the metric-weighted energy.
/// `pointwise` evaluates Π^a_bc⟨∇u^b,∇u^c⟩ or Γ^I_JK⟨∇u^J,∇u^K⟩ at nodes.
/// Both agree to first order in h.
enum class TensionScheme { variational, pointwise };

std::string to_string(Scheme s);
std::string to_string(TensionScheme s);

struct FlowConfig {
  /// 0 selects the stability limit automatically.
  double dt = 0.0;
  double t_max = 1.0;
  double stop_tolerance = 1e-6;
  Scheme scheme = Scheme::projected_euler;
  TensionScheme tension = TensionScheme::variational;
  double cfl_safety = 0.5;
  int record_stride = 1;
  /// Keep a copy of the state every this many steps (0: none).
  int snapshot_stride = 0;
  /// Allowed E_G increase per step before the step is retried with dt/2.
  double energy_tolerance = 1e-10;
  int max_halvings = 10;
};

/// Largest stable explicit step, cfl_safety · 2/ρ(−Δ_H) with the
/// Gershgorin estimate of ρ.
double stable_dt(const Discretization &disc, double cfl_safety);

/// Throws DomainError on invalid values or dt above the stability limit.
void validate_flow_config(const FlowConfig &config, const Discretization &disc);

using TensionField = std::vector<ScalarField>;

/// Tension field together with the energy report of the same map.
struct Evaluation {
  TensionField tau;
  EnergyReport report;
};

Evaluation evaluate(const Discretization &disc, const Target &target,
                    const Potential &potential, const MapState &u,
                    TensionScheme scheme = TensionScheme::variational);

/// τ(u) in the component layout of u. Throws DomainError for off-manifold
/// (ambient), off-tube (tubular) or off-chart (intrinsic) input.
TensionField tension_field(const Discretization &disc, const Target &target,
                           const Potential &potential, const MapState &u,
                           TensionScheme scheme = TensionScheme::variational);

/// ⟨τ, v⟩ in L²(M; target metric at u).
double tension_pairing(const Discretization &disc, const Target &target,
                       const MapState &u, const TensionField &tau,
                       const std::vector<ScalarField> &v);

/// One explicit step of size dt from u with a precomputed τ(u).
MapState advance(const Target &target, const MapState &u, const TensionField &tau,
                 double dt, Scheme scheme);

/// One step of size config.dt (or the stable step when config.dt is 0).
MapState step(const Discretization &disc, const MapState &u, const FlowConfig &config,
              const Target &target, const Potential &potential);

struct FlowResult {
  MapState final_state;
  TrajectoryLedger ledger;
  Outcome outcome = Outcome::budget_exhausted;
  std::string message;
  std::size_t steps = 0;
  std::size_t halvings = 0;
  /// Steps accepted after max_halvings with the energy still increasing.
  std::size_t unresolved_increases = 0;
  std::vector<MapState> snapshots;
};

/// Steps until sup|τ| < stop_tolerance (converged) or t ≥ t_max
/// (budget-exhausted). Non-finite values, tube exits and chart exits end the
/// run with outcome aborted and the last valid state.
FlowResult run_flow(const Discretization &disc, const MapState &initial,
                    const FlowConfig &config, const Target &target,
                    const Potential &potential);

/// True iff both maps carry the same winding matrix. Torus targets only.
bool homotopy_check(const Target &target, const MapState &a, const MapState &b);

/// Checks the representation invariants of a map for a target.
void validate_map(const Target &target, const MapState &u);

} // namespace subflow
