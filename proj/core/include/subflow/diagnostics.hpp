#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "subflow/map_state.hpp"
#include "subflow/operators.hpp"
#include "subflow/target.hpp"

namespace subflow {

class SpectralDecomposition;

/// Energies and sup-norms of one map.
struct EnergyReport {
  double E_H = 0.0;
  double E_V = 0.0;
  double E_P = 0.0;
  double E_G = 0.0;
  double E = 0.0;
  double sup_e = 0.0;
  double sup_tau = 0.0;
  /// |∂u/∂t| proxy; equals sup_tau along the flow.
  double sup_ut = 0.0;
  /// ∫_M |τ|² dv_g.
  double int_tau_sq = 0.0;
  /// ∫_M |ρ(u)|² for extrinsic non-flat targets, 0 otherwise.
  double normal_defect = 0.0;
  /// sup |u(t_{k+1}) − u(t_k)| / Δt over the step that produced this entry.
  double sup_difference_quotient = 0.0;
};

struct LedgerEntry {
  double t = 0.0;
  EnergyReport report;
};

enum class Outcome { converged, budget_exhausted, aborted };
std::string to_string(Outcome o);

/// Per-step record of a flow run. Times are strictly increasing.
struct TrajectoryLedger {
  std::vector<LedgerEntry> entries;
  std::string config_echo;
  Outcome outcome = Outcome::budget_exhausted;

  void record(double t, const EnergyReport &r);
  bool empty() const { return entries.empty(); }
  const LedgerEntry &front() const { return entries.front(); }
  const LedgerEntry &back() const { return entries.back(); }
  std::size_t size() const { return entries.size(); }
};

/// Columns: t, E_H, E_V, E_P, E_G, sup_e, sup_tau, defect. Values use
/// round-trip precision so identical runs give identical files.
void write_ledger_csv(std::ostream &os, const TrajectoryLedger &ledger);
void save_ledger_csv(const std::filesystem::path &path, const TrajectoryLedger &ledger);

/// Energies of u; wraps the flow module's combined evaluation.
EnergyReport energies(const Discretization &disc, const Target &target,
                      const Potential &potential, const MapState &u);

struct ResidualReport {
  double max_residual = 0.0;
  std::size_t step = 0;
};

/// max_k |(E_G(t_{k+1}) − E_G(t_k))/Δt + ∫|τ(t_k)|²|.
ResidualReport energy_identity_residual(const TrajectoryLedger &ledger);

struct SupBoundReport {
  bool pass = true;
  /// Largest ratio sup|τ|²(t) / (e^{2λ t} sup|τ|²(0)).
  double worst_ratio = 0.0;
  std::size_t worst_index = 0;
  /// Σ Δt·sup|τ|, an upper bound on the distance travelled by each point.
  double distance_bound = 0.0;
  bool tau_non_increasing = true;
  /// Least-squares slope of log sup|τ| over the final half of the ledger.
  std::optional<double> decay_rate;
};

/// Checks sup|τ|²(t) ≤ e^{2λ_G t}·sup|τ|²(0)·(1 + relative_margin).
SupBoundReport sup_bound_checks(const TrajectoryLedger &ledger, double lambda_G,
                                double relative_margin = 1e-3);

struct VerticalEnergyReport {
  bool monotone_required = false;
  bool pass = true;
  double max_increase = 0.0;
  std::size_t worst_step = 0;
  double max_E_V = 0.0;
};

/// For λ_G ≤ 0, E_V must be non-increasing up to `step_tolerance` per step;
/// otherwise the maximum of E_V over the run is reported.
VerticalEnergyReport vertical_energy_monitor(const TrajectoryLedger &ledger,
                                             double lambda_G,
                                             double step_tolerance = 1e-8);

struct MaxPrincipleReport {
  std::vector<double> times;
  std::vector<double> sups;
  double initial_sup = 0.0;
  bool pass = true;
};

/// Evolves φ₀ ≥ 0 by the discrete heat semigroup and checks that its sup
/// does not exceed the initial sup by more than `tolerance`.
MaxPrincipleReport max_principle_check(const SpectralDecomposition &spec,
                                       const ScalarField &phi0,
                                       const std::vector<double> &times,
                                       double tolerance = 1e-9);

/// Least-squares slope of y against x.
double fit_slope(const std::vector<double> &x, const std::vector<double> &y);
/// Order p in err ≈ C·h^p from paired (h, err) samples (log-log slope).
double fit_order(const std::vector<double> &h, const std::vector<double> &err);

/// Summary JSON: outcome, fitted rates, check booleans.
nlohmann::json ledger_summary(const TrajectoryLedger &ledger, double lambda_G);

} // namespace subflow
