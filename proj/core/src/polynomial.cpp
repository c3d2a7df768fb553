#include "subflow/polynomial.hpp"

#include <cmath>
#include <sstream>

namespace subflow {

Polynomial Polynomial::constant(double c) { return monomial(c, {0, 0, 0}); }

Polynomial Polynomial::coordinate(int axis) {
  Exponent e{0, 0, 0};
  e.at(axis) = 1;
  return monomial(1.0, e);
}

Polynomial Polynomial::monomial(double c, Exponent e) {
  Polynomial p;
  p.add_term(e, c);
  return p;
}

void Polynomial::add_term(const Exponent &e, double c) {
  if (c == 0.0)
    return;
  auto [it, inserted] = terms_.try_emplace(e, c);
  if (!inserted) {
    it->second += c;
    if (it->second == 0.0)
      terms_.erase(it);
  }
}

double Polynomial::operator()(const Eigen::Vector3d &p) const {
  double s = 0.0;
  for (const auto &[e, c] : terms_) {
    double m = c;
    for (int a = 0; a < 3; ++a)
      for (int k = 0; k < e[a]; ++k)
        m *= p[a];
    s += m;
  }
  return s;
}

Polynomial Polynomial::derivative(int axis) const {
  Polynomial d;
  for (const auto &[e, c] : terms_) {
    if (e[axis] == 0)
      continue;
    Exponent f = e;
    f[axis] -= 1;
    d.add_term(f, c * e[axis]);
  }
  return d;
}

bool Polynomial::is_constant() const {
  for (const auto &[e, c] : terms_)
    if (e != Exponent{0, 0, 0})
      return false;
  return true;
}

Polynomial &Polynomial::operator+=(const Polynomial &o) {
  for (const auto &[e, c] : o.terms_)
    add_term(e, c);
  return *this;
}

Polynomial &Polynomial::operator-=(const Polynomial &o) {
  for (const auto &[e, c] : o.terms_)
    add_term(e, -c);
  return *this;
}

Polynomial operator*(const Polynomial &a, const Polynomial &b) {
  Polynomial r;
  for (const auto &[ea, ca] : a.terms_)
    for (const auto &[eb, cb] : b.terms_)
      r.add_term({ea[0] + eb[0], ea[1] + eb[1], ea[2] + eb[2]}, ca * cb);
  return r;
}

Polynomial operator*(double s, Polynomial a) {
  Polynomial r;
  for (const auto &[e, c] : a.terms_)
    r.add_term(e, s * c);
  return r;
}

std::string Polynomial::to_string() const {
  if (terms_.empty())
    return "0";
  static constexpr const char *names[] = {"x", "y", "z"};
  std::ostringstream os;
  bool first = true;
  for (const auto &[e, c] : terms_) {
    if (!first)
      os << (c < 0 ? " - " : " + ");
    else if (c < 0)
      os << "-";
    first = false;
    const double mag = std::abs(c);
    const bool bare = e == Exponent{0, 0, 0};
    if (mag != 1.0 || bare)
      os << mag;
    for (int a = 0; a < 3; ++a) {
      if (e[a] == 0)
        continue;
      os << names[a];
      if (e[a] > 1)
        os << "^" << e[a];
    }
  }
  return os.str();
}

VectorField lie_bracket(const VectorField &u, const VectorField &v) {
  VectorField w;
  for (int k = 0; k < 3; ++k)
    for (int j = 0; j < 3; ++j) {
      w.coeff[k] += u.coeff[j] * v.coeff[k].derivative(j);
      w.coeff[k] -= v.coeff[j] * u.coeff[k].derivative(j);
    }
  return w;
}

} // namespace subflow
