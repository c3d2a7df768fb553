#pragma once

#include <array>
#include <map>
#include <string>

#include <Eigen/Core>

namespace subflow {

/// Real polynomial in the three coordinates (x, y, z), stored sparsely by
/// exponent triple. Used for exact frame-bracket computations.
class Polynomial {
public:
  using Exponent = std::array<int, 3>;

  Polynomial() = default;
  static Polynomial constant(double c);
  /// The coordinate function x_axis (axis 0, 1 or 2).
  static Polynomial coordinate(int axis);
  static Polynomial monomial(double c, Exponent e);

  double operator()(const Eigen::Vector3d &p) const;
  Polynomial derivative(int axis) const;

  bool is_zero() const { return terms_.empty(); }
  /// True if no term depends on any coordinate.
  bool is_constant() const;
  const std::map<Exponent, double> &terms() const { return terms_; }

  Polynomial &operator+=(const Polynomial &o);
  Polynomial &operator-=(const Polynomial &o);
  friend Polynomial operator+(Polynomial a, const Polynomial &b) { return a += b; }
  friend Polynomial operator-(Polynomial a, const Polynomial &b) { return a -= b; }
  friend Polynomial operator*(const Polynomial &a, const Polynomial &b);
  friend Polynomial operator*(double s, Polynomial a);
  friend bool operator==(const Polynomial &a, const Polynomial &b) {
    return a.terms_ == b.terms_;
  }

  std::string to_string() const;

private:
  void add_term(const Exponent &e, double c);
  std::map<Exponent, double> terms_;
};

/// Vector field a^0 ∂x + a^1 ∂y + a^2 ∂z with polynomial coefficients.
struct VectorField {
  std::array<Polynomial, 3> coeff;

  Eigen::Vector3d operator()(const Eigen::Vector3d &p) const {
    return {coeff[0](p), coeff[1](p), coeff[2](p)};
  }
  bool is_zero() const {
    return coeff[0].is_zero() && coeff[1].is_zero() && coeff[2].is_zero();
  }
  friend bool operator==(const VectorField &a, const VectorField &b) {
    return a.coeff == b.coeff;
  }
  friend VectorField operator-(const VectorField &a) {
    return {{-1.0 * a.coeff[0], -1.0 * a.coeff[1], -1.0 * a.coeff[2]}};
  }
};

/// [U, V]^k = U^j ∂_j V^k − V^j ∂_j U^k.
VectorField lie_bracket(const VectorField &u, const VectorField &v);

} // namespace subflow
