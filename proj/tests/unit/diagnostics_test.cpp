#include <cmath>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "subflow/diagnostics.hpp"
#include "subflow/error.hpp"

using namespace subflow;

namespace {

// Ledger of E_G(t) = e^{−2t} with ∫|τ|² = 2e^{−2t} and sup|τ| = e^{−t}.
TrajectoryLedger exponential_ledger(double dt, int steps) {
  TrajectoryLedger l;
  for (int k = 0; k <= steps; ++k) {
    const double t = k * dt;
    EnergyReport r;
    r.E_G = std::exp(-2 * t);
    r.E_H = r.E_G;
    r.int_tau_sq = 2 * std::exp(-2 * t);
    r.sup_tau = std::exp(-t);
    r.E_V = 0.1 * std::exp(-t);
    l.record(t, r);
  }
  return l;
}

} // namespace

TEST(Ledger, TimesMustIncrease) {
  TrajectoryLedger l;
  l.record(0.0, {});
  l.record(0.5, {});
  EXPECT_THROW(l.record(0.5, {}), DomainError);
  EXPECT_THROW(l.record(0.1, {}), DomainError);
  EXPECT_EQ(l.size(), 2u);
}

TEST(Ledger, CsvHasHeaderAndRoundTripsValues) {
  TrajectoryLedger l;
  EnergyReport r;
  r.E_H = 0.1;
  r.E_V = 1.0 / 3.0;
  r.E_P = -2e-300;
  r.E_G = std::nextafter(1.0, 2.0);
  r.sup_e = 7.0;
  r.sup_tau = 1e-17;
  r.normal_defect = 0.0;
  l.record(0.25, r);
  std::ostringstream os;
  write_ledger_csv(os, l);
  std::istringstream is(os.str());
  std::string header, row;
  std::getline(is, header);
  std::getline(is, row);
  EXPECT_EQ(header, "t,E_H,E_V,E_P,E_G,sup_e,sup_tau,defect");
  std::vector<double> v;
  std::stringstream cells(row);
  for (std::string cell; std::getline(cells, cell, ',');)
    v.push_back(std::stod(cell));
  ASSERT_EQ(v.size(), 8u);
  EXPECT_EQ(v[0], 0.25);
  EXPECT_EQ(v[2], r.E_V);
  EXPECT_EQ(v[3], r.E_P);
  EXPECT_EQ(v[4], r.E_G);
  EXPECT_EQ(v[6], r.sup_tau);
}

TEST(Ledger, SaveToMissingDirectoryIsIoError) {
  EXPECT_THROW(save_ledger_csv("/nonexistent/dir/ledger.csv", TrajectoryLedger{}), IoError);
}

TEST(EnergyIdentity, ResidualIsFirstOrderInStep) {
  const double r1 = energy_identity_residual(exponential_ledger(0.01, 100)).max_residual;
  const double r2 = energy_identity_residual(exponential_ledger(0.005, 200)).max_residual;
  EXPECT_NEAR(r1 / r2, 2.0, 0.05);
  EXPECT_THROW(energy_identity_residual(exponential_ledger(0.1, 0)), DomainError);
}

TEST(Fit, SlopeAndOrder) {
  EXPECT_NEAR(fit_slope({0, 1, 2, 3}, {1, 3, 5, 7}), 2.0, 1e-14);
  EXPECT_NEAR(fit_order({0.1, 0.05, 0.025}, {3e-2, 7.5e-3, 1.875e-3}), 2.0, 1e-12);
  EXPECT_THROW(fit_slope({1}, {1}), DomainError);
  EXPECT_THROW(fit_slope({1, 1}, {1, 2}), DomainError);
  EXPECT_THROW(fit_order({0.1, 0.05}, {1.0, -1.0}), DomainError);
}

TEST(SupBound, PassesForDecayAndReportsRate) {
  const SupBoundReport r = sup_bound_checks(exponential_ledger(0.01, 200), 0.0);
  EXPECT_TRUE(r.pass);
  EXPECT_TRUE(r.tau_non_increasing);
  EXPECT_LE(r.worst_ratio, 1.0);
  ASSERT_TRUE(r.decay_rate.has_value());
  EXPECT_NEAR(*r.decay_rate, -1.0, 1e-10);
  // Σ Δt e^{−t_k} over [0, 2].
  EXPECT_NEAR(r.distance_bound, 1.0 - std::exp(-2.0), 0.01);
}

TEST(SupBound, DetectsGrowthBeyondExponentialEnvelope) {
  TrajectoryLedger l;
  for (int k = 0; k <= 10; ++k) {
    EnergyReport r;
    r.sup_tau = std::exp(0.2 * k * 0.1); // grows at rate 0.2
    l.record(0.1 * k, r);
  }
  EXPECT_FALSE(sup_bound_checks(l, 0.1).pass);
  EXPECT_TRUE(sup_bound_checks(l, 0.2).pass);
  EXPECT_FALSE(sup_bound_checks(l, 0.2).tau_non_increasing);
}

TEST(VerticalEnergy, MonotoneOnlyRequiredForNonPositiveBound) {
  TrajectoryLedger l;
  for (int k = 0; k < 5; ++k) {
    EnergyReport r;
    r.E_V = k == 3 ? 1.0 : 0.5 - 0.01 * k;
    l.record(k, r);
  }
  const auto a = vertical_energy_monitor(l, -0.5);
  EXPECT_TRUE(a.monotone_required);
  EXPECT_FALSE(a.pass);
  EXPECT_EQ(a.worst_step, 2u); // increase from entry 2 to entry 3
  EXPECT_NEAR(a.max_increase, 0.52, 1e-12);
  const auto b = vertical_energy_monitor(l, 0.25);
  EXPECT_FALSE(b.monotone_required);
  EXPECT_TRUE(b.pass);
  EXPECT_EQ(b.max_E_V, 1.0);
}

TEST(Summary, CarriesChecksAndRates) {
  TrajectoryLedger l = exponential_ledger(0.01, 50);
  l.outcome = Outcome::converged;
  const nlohmann::json j = ledger_summary(l, 0.0);
  EXPECT_EQ(j["outcome"], "converged");
  EXPECT_EQ(j["entries"], 51);
  EXPECT_TRUE(j["checks"]["energy_monotone"].get<bool>());
  EXPECT_TRUE(j["checks"]["sup_bound"].get<bool>());
  EXPECT_TRUE(j["checks"]["vertical_energy"].get<bool>());
  EXPECT_TRUE(j["rates"].contains("energy_identity_residual"));
  EXPECT_EQ(to_string(Outcome::budget_exhausted), "budget-exhausted");
}
