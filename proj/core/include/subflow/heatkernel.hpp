#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "subflow/flow.hpp"
#include "subflow/map_state.hpp"
#include "subflow/operators.hpp"
#include "subflow/target.hpp"

namespace subflow {

inline constexpr std::size_t kDefaultSpectralCap = 4096;

/// Dense eigendecomposition −Δ_H = V Λ Vᵀ of a symmetric node operator.
/// The heat kernel is K(x, y, t) = (V e^{−tΛ} Vᵀ)_{xy} / w with w the
/// (uniform) node measure, so that Σ_y K(x, y, t) w = 1.
class SpectralDecomposition {
public:
  /// Throws CapacityError above `cap` nodes and DomainError for a
  /// non-symmetric operator.
  SpectralDecomposition(const SparseOperator &laplacian, double node_measure,
                        std::size_t cap = kDefaultSpectralCap);

  std::size_t size() const { return static_cast<std::size_t>(lambda_.size()); }
  /// Nonnegative, ascending.
  const Eigen::VectorXd &eigenvalues() const { return lambda_; }
  /// Columns orthonormal in the Euclidean inner product.
  const Eigen::MatrixXd &eigenvectors() const { return v_; }
  double node_measure() const { return w_; }

  /// e^{tΔ_H} as a matrix acting on node values.
  Eigen::MatrixXd propagator(double t) const;
  /// K(·, ·, t).
  Eigen::MatrixXd kernel(double t) const;

  /// max |(−Δ_H)V − VΛ| against the operator it was built from.
  double residual() const { return residual_; }
  /// max |VᵀV − I|.
  double orthonormality_defect() const;
  /// Number of eigenvalues ≤ tol·max(1, λ_max).
  std::size_t kernel_dimension(double tol = 1e-9) const;

private:
  Eigen::VectorXd lambda_;
  Eigen::MatrixXd v_;
  double w_;
  double residual_ = 0.0;
};

SpectralDecomposition spectral_decompose(const Discretization &disc,
                                         std::size_t cap = kDefaultSpectralCap);

/// e^{tΔ_H} f. Throws DomainError for t < 0.
ScalarField heat_apply(const SpectralDecomposition &spec, double t, const ScalarField &f);

/// Solution at time t of u' = Δ_H u + s, u(0) = f, for a time-independent
/// source s (the constant part of Δ_H applied to a winding lift).
ScalarField heat_apply_affine(const SpectralDecomposition &spec, double t,
                              const ScalarField &f, const ScalarField &s);

struct KernelTimeReport {
  double t = 0.0;
  double max_asymmetry = 0.0;
  double min_entry = 0.0;
  double max_mass_deviation = 0.0;
  /// max |K(2t) − K(t)·M·K(t)|, M = w·I.
  double semigroup_residual = 0.0;
  bool positivity_asserted = false;
};

struct KernelReport {
  std::vector<KernelTimeReport> rows;
  /// Positivity is asserted only for t ≥ t_floor = h_max².
  double t_floor = 0.0;
  bool mass_ok = true;
  bool symmetry_ok = true;
  bool semigroup_ok = true;
  bool positivity_ok = true;
  bool pass() const { return mass_ok && symmetry_ok && semigroup_ok && positivity_ok; }
};

struct KernelTolerances {
  double mass = 1e-8;
  double asymmetry = 1e-10;
  double semigroup = 1e-9;
};

KernelReport kernel_checks(const SpectralDecomposition &spec, const std::vector<double> &times,
                           double t_floor, const KernelTolerances &tol = {});

/// max_x ∫₀ᵗ Σ_y |∇^H_x K(x, y, s)| w ds by Gauss–Legendre quadrature in s.
double kernel_gradient_mass(const SpectralDecomposition &spec, const Discretization &disc,
                            double t);

struct PicardState {
  int k = 0;
  std::vector<double> times;
  /// stack[q] = u_k(·, times[q]).
  std::vector<MapState> stack;
  /// X[k−1] = sup_q ‖u_k(s_q) − u_{k−1}(s_q)‖_{C¹_H}, k = 1..k.
  std::vector<double> X;
};

struct PicardResult {
  PicardState state;
  /// ratios[k−1] = X_{k+1}/X_k.
  std::vector<double> ratios;
  const MapState &final_map() const { return state.stack.back(); }
};

/// Duhamel–Picard iteration u_k = e^{tΔ}ū + ∫₀ᵗ e^{(t−s)Δ} N(u_{k−1}(s)) ds,
/// N = τ − Δ_H, on Q trapezoid intervals, k_max iterations. Embedded
/// targets only. Throws DomainError (naming k and the defect) when an
/// iterate leaves the tube.
PicardResult picard_run(const Discretization &disc, const SpectralDecomposition &spec,
                        const MapState &initial, const Target &target,
                        const Potential &potential, double t, int Q, int k_max,
                        TensionScheme scheme = TensionScheme::variational);

/// sup|f| + sup|∇^H f| for a vector-valued node field (single-valued
/// components).
double c1h_norm(const Discretization &disc, const std::vector<ScalarField> &f);

} // namespace subflow
