#pragma once

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "subflow/map_state.hpp"
#include "subflow/operators.hpp"

namespace subflow {

/// Target dimensions are small; bounded-size types keep per-node algebra
/// off the heap.
inline constexpr int kMaxTargetDim = 8;
using Vector = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxTargetDim, 1>;
using Matrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxTargetDim, kMaxTargetDim>;
/// Third-order coordinate tensor; slice a holds the (b, c) matrix. Only the
/// first `components()` slices are meaningful.
using Tensor3 = std::array<Matrix, kMaxTargetDim>;

/// Target manifold N. Embedded targets are subsets of R^K with a nearest
/// point projection; intrinsic targets are a single chart with a metric.
class Target {
public:
  virtual ~Target() = default;
  virtual std::string name() const = 0;
  /// K for embedded targets, n for intrinsic ones.
  virtual std::size_t components() const = 0;
  virtual bool is_embedded() const = 0;
  virtual bool nonpositive_curvature() const = 0;
  /// Maps are stored as lifts with an integer winding matrix.
  virtual bool supports_winding() const { return false; }
  /// Deterministic sample points spread over the working region; `radius`
  /// bounds the region for complete non-compact targets.
  virtual std::vector<Vector> sample_points(int count, double radius) const = 0;
};

/// First and second derivatives of the projection Π at a point:
/// first(a, b) = ∂Π^a/∂y^b, second[a](b, c) = ∂²Π^a/∂y^b∂y^c.
struct ProjectionJets {
  Matrix first;
  Tensor3 second;
};

class EmbeddedTarget : public Target {
public:
  bool is_embedded() const final { return true; }

  double tubular_radius() const { return tube_radius(); }
  /// |y − Π(y)|, defined everywhere Π is.
  virtual double distance_to_manifold(const Vector &y) const = 0;
  bool within_tube(const Vector &y) const;
  bool on_manifold(const Vector &y, double tol = 1e-9) const;

  /// Closest point on N. Throws DomainError outside the tubular radius.
  Vector project(const Vector &y) const;
  /// Analytic jets at a point of N (within 1e-9); DomainError otherwise.
  ProjectionJets projection_jets(const Vector &y) const;
  /// Analytic jets anywhere inside the tube.
  ProjectionJets jets_at(const Vector &y) const;

  /// A(y)(Y, Y) = Π^a_bc Y^b Y^c for y on N.
  Vector second_fundamental_form(const Vector &y, const Vector &tangent) const;
  /// Orthonormal basis (columns) of T_yN.
  Matrix tangent_basis(const Vector &y) const;

protected:
  virtual double tube_radius() const = 0;
  virtual Vector project_unchecked(const Vector &y) const = 0;
  virtual ProjectionJets jets_unchecked(const Vector &y) const = 0;
};

/// Flat torus T^K = R^K / Z^K handled through real lifts: Π is the identity
/// on lifts and the second fundamental form vanishes.
class FlatTorus final : public EmbeddedTarget {
public:
  explicit FlatTorus(std::size_t k);
  std::string name() const override { return "torus"; }
  std::size_t components() const override { return k_; }
  bool nonpositive_curvature() const override { return true; }
  bool supports_winding() const override { return true; }
  double distance_to_manifold(const Vector &) const override { return 0.0; }
  std::vector<Vector> sample_points(int count, double radius) const override;

protected:
  double tube_radius() const override;
  Vector project_unchecked(const Vector &y) const override { return y; }
  ProjectionJets jets_unchecked(const Vector &y) const override;

private:
  std::size_t k_;
};

/// Unit sphere S^{K−1} ⊂ R^K with Π(y) = y/|y| and tube | |y| − 1 | < 1/2.
class RoundSphere final : public EmbeddedTarget {
public:
  explicit RoundSphere(std::size_t k);
  std::string name() const override { return "sphere"; }
  std::size_t components() const override { return k_; }
  bool nonpositive_curvature() const override { return false; }
  double distance_to_manifold(const Vector &y) const override;
  std::vector<Vector> sample_points(int count, double radius) const override;

protected:
  double tube_radius() const override { return 0.5; }
  Vector project_unchecked(const Vector &y) const override;
  ProjectionJets jets_unchecked(const Vector &y) const override;

private:
  std::size_t k_;
};

class IntrinsicTarget : public Target {
public:
  bool is_embedded() const final { return false; }

  virtual bool in_chart(const Vector &w) const = 0;
  virtual Matrix metric(const Vector &w) const = 0;
  virtual Matrix inverse_metric(const Vector &w) const;
  /// dh[K](I, J) = ∂h_IJ/∂w^K.
  virtual Tensor3 metric_derivative(const Vector &w) const = 0;
  /// gamma[I](J, K) = Γ^I_JK.
  virtual Tensor3 christoffel(const Vector &w) const = 0;
  /// Riemannian distance ρ to the base point P0.
  virtual double distance_to_base(const Vector &w) const = 0;
  virtual Vector base_point() const = 0;
  /// Geodesic exponential map exp_w(v).
  virtual Vector exp(const Vector &w, const Vector &v) const = 0;
};

/// Poincaré disk model of the hyperbolic plane, h = 4|dw|²/(1−|w|²)²,
/// base point at the origin.
class PoincareDisk final : public IntrinsicTarget {
public:
  /// Points with |w| ≥ chart_limit count as chart exits.
  explicit PoincareDisk(double chart_limit = 0.999);
  std::string name() const override { return "hyperbolic"; }
  std::size_t components() const override { return 2; }
  bool nonpositive_curvature() const override { return true; }
  std::vector<Vector> sample_points(int count, double radius) const override;

  bool in_chart(const Vector &w) const override;
  Matrix metric(const Vector &w) const override;
  Matrix inverse_metric(const Vector &w) const override;
  Tensor3 metric_derivative(const Vector &w) const override;
  Tensor3 christoffel(const Vector &w) const override;
  double distance_to_base(const Vector &w) const override;
  Vector base_point() const override { return Vector::Zero(2); }
  Vector exp(const Vector &w, const Vector &v) const override;

private:
  double chart_limit_;
};

/// Potential G, given in the target's coordinates (ambient coordinates for
/// embedded targets, where it is the restriction of Ḡ).
class Potential {
public:
  virtual ~Potential() = default;
  virtual std::string name() const = 0;
  virtual double value(const Vector &y) const = 0;
  /// Coordinate differential DḠ.
  virtual Vector differential(const Vector &y) const = 0;
  /// Coordinate second derivatives ∂²Ḡ.
  virtual Matrix coordinate_hessian(const Vector &y) const = 0;
  /// C with Hess G ≤ −C(1+ρ)⁻¹h, when the potential satisfies the decay
  /// condition.
  virtual std::optional<double> decay_constant() const { return std::nullopt; }
  virtual bool is_zero() const { return false; }
};

class ZeroPotential final : public Potential {
public:
  explicit ZeroPotential(std::size_t dim) : dim_(dim) {}
  std::string name() const override { return "zero"; }
  double value(const Vector &) const override { return 0.0; }
  Vector differential(const Vector &) const override { return Vector::Zero(static_cast<Eigen::Index>(dim_)); }
  Matrix coordinate_hessian(const Vector &) const override {
    return Matrix::Zero(static_cast<Eigen::Index>(dim_), static_cast<Eigen::Index>(dim_));
  }
  bool is_zero() const override { return true; }

private:
  std::size_t dim_;
};

/// G(θ) = ε·cos(2π θ_axis).
class CosinePotential final : public Potential {
public:
  CosinePotential(std::size_t dim, double eps, std::size_t axis = 0);
  std::string name() const override { return "cosine"; }
  double value(const Vector &y) const override;
  Vector differential(const Vector &y) const override;
  Matrix coordinate_hessian(const Vector &y) const override;
  double eps() const { return eps_; }

private:
  std::size_t dim_;
  double eps_;
  std::size_t axis_;
};

/// G = −(c/2)ρ² on the Poincaré disk, ρ the distance to the origin.
class RhoSquaredPotential final : public Potential {
public:
  explicit RhoSquaredPotential(double c);
  std::string name() const override { return "rho-squared"; }
  double value(const Vector &w) const override;
  Vector differential(const Vector &w) const override;
  Matrix coordinate_hessian(const Vector &w) const override;
  std::optional<double> decay_constant() const override { return c_; }
  double c() const { return c_; }

private:
  double c_;
};

/// Ḡ(y) = ⟨a, y⟩ + (κ/2)|y|² on ambient space.
class AmbientQuadraticPotential final : public Potential {
public:
  AmbientQuadraticPotential(Vector linear, double kappa);
  std::string name() const override { return "ambient-quadratic"; }
  double value(const Vector &y) const override;
  Vector differential(const Vector &y) const override;
  Matrix coordinate_hessian(const Vector &y) const override;

private:
  Vector a_;
  double kappa_;
};

struct PotentialValue {
  double value = 0.0;
  /// ∇G in the target's representation: P·DḠ (embedded), DḠ (torus lifts),
  /// h⁻¹dG (intrinsic).
  Vector gradient;
};

PotentialValue potential_eval(const Target &target, const Potential &potential,
                              const Vector &y);

/// Hess G(Y, Y) at a point of N for a tangent vector Y.
double hessian_form(const Target &target, const Potential &potential, const Vector &y,
                    const Vector &tangent);

/// Largest eigenvalue of Hess G relative to the target metric at y.
double hessian_max_eigenvalue(const Target &target, const Potential &potential,
                              const Vector &y);

/// λ_G estimate: max of hessian_max_eigenvalue over samples, padded by 10%
/// of its magnitude.
double estimate_hessian_bound(const Target &target, const Potential &potential,
                              const std::vector<Vector> &samples);

struct ProductConditionReport {
  double minimum = 0.0;
  bool pass = false;
  std::size_t samples = 0;
};

struct TangentSample {
  Vector point;
  Vector tangent;
};

/// Left side ⟨A(y)(Y,Y), y⟩ + |Y|² − ⟨DḠ(y), y⟩ on each sample.
double product_condition_value(const EmbeddedTarget &target, const Potential &potential,
                               const Vector &y, const Vector &tangent);
ProductConditionReport check_product_condition(const EmbeddedTarget &target,
                                               const Potential &potential,
                                               const std::vector<TangentSample> &samples);
/// Deterministic unit tangent samples over the target.
std::vector<TangentSample> tangent_samples(const EmbeddedTarget &target, int count,
                                           unsigned seed = 7);

/// ∫_M |ρ(u)|² dv_g with ρ(y) = y − Π(y).
double normal_defect(const EmbeddedTarget &target, const Discretization &disc,
                     const MapState &u);

/// Factories used by configuration parsing.
std::shared_ptr<const Target> make_target(const std::string &name, std::size_t k);

} // namespace subflow
