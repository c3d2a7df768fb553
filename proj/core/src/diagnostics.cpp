#include "subflow/diagnostics.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>

#include <nlohmann/json.hpp>

#include "subflow/error.hpp"
#include "subflow/flow.hpp"
#include "subflow/heatkernel.hpp"

namespace subflow {

std::string to_string(Outcome o) {
  switch (o) {
  case Outcome::converged:
    return "converged";
  case Outcome::budget_exhausted:
    return "budget-exhausted";
  case Outcome::aborted:
    return "aborted";
  }
  return "unknown";
}

void TrajectoryLedger::record(double t, const EnergyReport &r) {
  if (!entries.empty() && !(t > entries.back().t))
    throw DomainError("ledger times must be strictly increasing");
  entries.push_back({t, r});
}

namespace {

// Shortest representation that parses back to the same double.
void put(std::ostream &os, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  os.write(buf, res.ptr - buf);
}

} // namespace

void write_ledger_csv(std::ostream &os, const TrajectoryLedger &ledger) {
  os << "t,E_H,E_V,E_P,E_G,sup_e,sup_tau,defect\n";
  for (const auto &e : ledger.entries) {
    const EnergyReport &r = e.report;
    for (double v : {e.t, r.E_H, r.E_V, r.E_P, r.E_G, r.sup_e, r.sup_tau}) {
      put(os, v);
      os << ',';
    }
    put(os, r.normal_defect);
    os << '\n';
  }
}

void save_ledger_csv(const std::filesystem::path &path, const TrajectoryLedger &ledger) {
  std::ofstream os(path);
  if (!os)
    throw IoError("cannot open " + path.string() + " for writing");
  write_ledger_csv(os, ledger);
  if (!os)
    throw IoError("failed writing " + path.string());
}

EnergyReport energies(const Discretization &disc, const Target &target,
                      const Potential &potential, const MapState &u) {
  return evaluate(disc, target, potential, u).report;
}

ResidualReport energy_identity_residual(const TrajectoryLedger &ledger) {
  if (ledger.size() < 2)
    throw DomainError("energy identity needs at least two ledger entries");
  ResidualReport r;
  for (std::size_t k = 0; k + 1 < ledger.size(); ++k) {
    const auto &a = ledger.entries[k];
    const auto &b = ledger.entries[k + 1];
    const double res =
        std::abs((b.report.E_G - a.report.E_G) / (b.t - a.t) + a.report.int_tau_sq);
    if (res > r.max_residual) {
      r.max_residual = res;
      r.step = k;
    }
  }
  return r;
}

double fit_slope(const std::vector<double> &x, const std::vector<double> &y) {
  if (x.size() != y.size() || x.size() < 2)
    throw DomainError("slope fit needs at least two paired samples");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double den = n * sxx - sx * sx;
  if (den == 0.0)
    throw DomainError("slope fit with degenerate abscissae");
  return (n * sxy - sx * sy) / den;
}

double fit_order(const std::vector<double> &h, const std::vector<double> &err) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < h.size() && i < err.size(); ++i) {
    if (!(h[i] > 0.0) || !(err[i] > 0.0))
      throw DomainError("order fit needs positive samples");
    lx.push_back(std::log(h[i]));
    ly.push_back(std::log(err[i]));
  }
  return fit_slope(lx, ly);
}

SupBoundReport sup_bound_checks(const TrajectoryLedger &ledger, double lambda_G,
                                double relative_margin) {
  SupBoundReport r;
  if (ledger.empty())
    return r;
  const double t0 = ledger.front().t;
  const double s0 = ledger.front().report.sup_tau;
  for (std::size_t k = 0; k < ledger.size(); ++k) {
    const auto &e = ledger.entries[k];
    const double bound = std::exp(2.0 * lambda_G * (e.t - t0)) * s0 * s0;
    const double lhs = e.report.sup_tau * e.report.sup_tau;
    const double ratio = bound > 0.0 ? lhs / bound : (lhs > 0.0 ? HUGE_VAL : 0.0);
    if (ratio > r.worst_ratio) {
      r.worst_ratio = ratio;
      r.worst_index = k;
    }
    if (lhs > bound * (1.0 + relative_margin))
      r.pass = false;
    if (k > 0) {
      const auto &prev = ledger.entries[k - 1];
      r.distance_bound += (e.t - prev.t) * prev.report.sup_tau;
      if (e.report.sup_tau > prev.report.sup_tau)
        r.tau_non_increasing = false;
    }
  }
  const std::size_t start = ledger.size() / 2;
  std::vector<double> ts, ls;
  for (std::size_t k = start; k < ledger.size(); ++k) {
    const double s = ledger.entries[k].report.sup_tau;
    if (s > 0.0) {
      ts.push_back(ledger.entries[k].t);
      ls.push_back(std::log(s));
    }
  }
  if (ts.size() >= 2 && ts.front() != ts.back())
    r.decay_rate = fit_slope(ts, ls);
  return r;
}

VerticalEnergyReport vertical_energy_monitor(const TrajectoryLedger &ledger,
                                             double lambda_G, double step_tolerance) {
  VerticalEnergyReport r;
  r.monotone_required = lambda_G <= 0.0;
  for (std::size_t k = 0; k < ledger.size(); ++k) {
    const double ev = ledger.entries[k].report.E_V;
    r.max_E_V = std::max(r.max_E_V, ev);
    if (k == 0)
      continue;
    const double inc = ev - ledger.entries[k - 1].report.E_V;
    if (inc > r.max_increase) {
      r.max_increase = inc;
      r.worst_step = k - 1;
    }
  }
  r.pass = !r.monotone_required || r.max_increase <= step_tolerance;
  if (!std::isfinite(r.max_E_V))
    r.pass = false;
  return r;
}

MaxPrincipleReport max_principle_check(const SpectralDecomposition &spec,
                                       const ScalarField &phi0,
                                       const std::vector<double> &times, double tolerance) {
  if (phi0.minCoeff() < 0.0)
    throw DomainError("maximum principle check needs a nonnegative initial field");
  MaxPrincipleReport r;
  r.initial_sup = phi0.maxCoeff();
  for (double t : times) {
    const double s = heat_apply(spec, t, phi0).maxCoeff();
    r.times.push_back(t);
    r.sups.push_back(s);
    if (s > r.initial_sup + tolerance)
      r.pass = false;
  }
  return r;
}

nlohmann::json ledger_summary(const TrajectoryLedger &ledger, double lambda_G) {
  nlohmann::json j;
  j["outcome"] = to_string(ledger.outcome);
  j["entries"] = ledger.size();
  j["config"] = ledger.config_echo;
  j["lambda_G"] = lambda_G;
  if (ledger.empty())
    return j;
  const auto &first = ledger.front();
  const auto &last = ledger.back();
  j["t_final"] = last.t;
  j["E_G_initial"] = first.report.E_G;
  j["E_G_final"] = last.report.E_G;
  j["sup_tau_initial"] = first.report.sup_tau;
  j["sup_tau_final"] = last.report.sup_tau;
  j["max_sup_e"] = 0.0;
  bool e_g_monotone = true;
  for (std::size_t k = 0; k < ledger.size(); ++k) {
    j["max_sup_e"] = std::max(j["max_sup_e"].get<double>(), ledger.entries[k].report.sup_e);
    if (k > 0 && ledger.entries[k].report.E_G > ledger.entries[k - 1].report.E_G + 1e-10)
      e_g_monotone = false;
  }
  const SupBoundReport sb = sup_bound_checks(ledger, lambda_G);
  const VerticalEnergyReport ve = vertical_energy_monitor(ledger, lambda_G);
  auto &checks = j["checks"];
  checks["energy_monotone"] = e_g_monotone;
  checks["sup_bound"] = sb.pass;
  checks["vertical_energy"] = ve.pass;
  j["rates"]["sup_bound_worst_ratio"] = sb.worst_ratio;
  j["rates"]["distance_bound"] = sb.distance_bound;
  j["rates"]["sup_tau_decay_rate"] =
      sb.decay_rate ? nlohmann::json(*sb.decay_rate) : nlohmann::json(nullptr);
  j["vertical"]["monotone_required"] = ve.monotone_required;
  j["vertical"]["max_increase"] = ve.max_increase;
  j["vertical"]["max_E_V"] = ve.max_E_V;
  if (ledger.size() >= 2) {
    const ResidualReport rr = energy_identity_residual(ledger);
    j["rates"]["energy_identity_residual"] = rr.max_residual;
  }
  return j;
}

} // namespace subflow
