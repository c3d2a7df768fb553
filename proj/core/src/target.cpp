#include "subflow/target.hpp"

#include <cmath>
#include <complex>
#include <limits>
#include <random>

#include <Eigen/Eigenvalues>

#include "subflow/error.hpp"

namespace subflow {

namespace {

Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

// artanh(r)/r, accurate near 0.
double artanh_over_r(double r) {
  if (r < 1e-3) {
    const double r2 = r * r;
    return 1.0 + r2 / 3.0 + r2 * r2 / 5.0;
  }
  return std::atanh(r) / r;
}

} // namespace

bool EmbeddedTarget::within_tube(const Vector &y) const {
  return y.allFinite() && distance_to_manifold(y) < tube_radius();
}

bool EmbeddedTarget::on_manifold(const Vector &y, double tol) const {
  return y.allFinite() && distance_to_manifold(y) <= tol;
}

Vector EmbeddedTarget::project(const Vector &y) const {
  if (static_cast<std::size_t>(y.size()) != components())
    throw DomainError("point has wrong ambient dimension");
  if (!within_tube(y))
    throw DomainError(name() + ": point outside tubular neighbourhood (distance " +
                      std::to_string(distance_to_manifold(y)) + ")");
  return project_unchecked(y);
}

ProjectionJets EmbeddedTarget::projection_jets(const Vector &y) const {
  if (!on_manifold(y))
    throw DomainError(name() + ": projection jets requested off the manifold");
  return jets_unchecked(y);
}

ProjectionJets EmbeddedTarget::jets_at(const Vector &y) const {
  if (!within_tube(y))
    throw DomainError(name() + ": jets requested outside tubular neighbourhood");
  return jets_unchecked(y);
}

Vector EmbeddedTarget::second_fundamental_form(const Vector &y,
                                               const Vector &tangent) const {
  const ProjectionJets j = projection_jets(y);
  Vector out(y.size());
  for (Eigen::Index a = 0; a < y.size(); ++a)
    out[a] = tangent.dot(j.second[static_cast<std::size_t>(a)] * tangent);
  return out;
}

Matrix EmbeddedTarget::tangent_basis(const Vector &y) const {
  const ProjectionJets j = projection_jets(y);
  const Eigen::MatrixXd sym = 0.5 * (j.first + j.first.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  std::vector<Eigen::Index> cols;
  for (Eigen::Index c = 0; c < es.eigenvalues().size(); ++c)
    if (es.eigenvalues()[c] > 0.5)
      cols.push_back(c);
  Matrix basis(y.size(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c)
    basis.col(idx(c)) = es.eigenvectors().col(cols[c]);
  return basis;
}

// ---------------------------------------------------------------------------

FlatTorus::FlatTorus(std::size_t k) : k_(k) {
  if (k == 0 || k > static_cast<std::size_t>(kMaxTargetDim))
    throw DomainError("torus dimension must lie in [1, " + std::to_string(kMaxTargetDim) + "]");
}

double FlatTorus::tube_radius() const { return std::numeric_limits<double>::infinity(); }

ProjectionJets FlatTorus::jets_unchecked(const Vector &) const {
  ProjectionJets j;
  j.first = Matrix::Identity(idx(k_), idx(k_));
  for (std::size_t a = 0; a < k_; ++a)
    j.second[a] = Matrix::Zero(idx(k_), idx(k_));
  return j;
}

std::vector<Vector> FlatTorus::sample_points(int count, double) const {
  // Additive recurrence with generalised golden-ratio increments.
  double phi = 2.0;
  for (int it = 0; it < 32; ++it)
    phi = std::pow(1.0 + phi, 1.0 / static_cast<double>(k_ + 1));
  std::vector<Vector> out;
  for (int s = 0; s < count; ++s) {
    Vector y(idx(k_));
    for (std::size_t a = 0; a < k_; ++a) {
      const double alpha = std::pow(1.0 / phi, static_cast<double>(a + 1));
      y[idx(a)] = std::fmod(0.5 + alpha * (s + 1), 1.0);
    }
    out.push_back(y);
  }
  return out;
}

// ---------------------------------------------------------------------------

RoundSphere::RoundSphere(std::size_t k) : k_(k) {
  if (k < 2 || k > static_cast<std::size_t>(kMaxTargetDim))
    throw DomainError("sphere ambient dimension must lie in [2, " +
                      std::to_string(kMaxTargetDim) + "]");
}

double RoundSphere::distance_to_manifold(const Vector &y) const {
  return std::abs(y.norm() - 1.0);
}

Vector RoundSphere::project_unchecked(const Vector &y) const { return y / y.norm(); }

ProjectionJets RoundSphere::jets_unchecked(const Vector &y) const {
  const double r = y.norm();
  const double r3 = r * r * r;
  const double r5 = r3 * r * r;
  const auto k = idx(k_);
  ProjectionJets j;
  j.first = (Matrix::Identity(k, k) - y * y.transpose() / (r * r)) / r;
  for (Eigen::Index a = 0; a < k; ++a) {
    Matrix &m = j.second[static_cast<std::size_t>(a)];
    m.resize(k, k);
    for (Eigen::Index b = 0; b < k; ++b)
      for (Eigen::Index c = 0; c < k; ++c) {
        double v = 3.0 * y[a] * y[b] * y[c] / r5;
        double lin = 0.0;
        if (a == b)
          lin += y[c];
        if (a == c)
          lin += y[b];
        if (b == c)
          lin += y[a];
        m(b, c) = v - lin / r3;
      }
  }
  return j;
}

std::vector<Vector> RoundSphere::sample_points(int count, double) const {
  std::vector<Vector> out;
  if (k_ == 3) {
    const double golden = M_PI * (3.0 - std::sqrt(5.0));
    for (int s = 0; s < count; ++s) {
      const double z = 1.0 - (2.0 * s + 1.0) / count;
      const double rr = std::sqrt(std::max(0.0, 1.0 - z * z));
      Vector y(3);
      y << rr * std::cos(golden * s), rr * std::sin(golden * s), z;
      out.push_back(y);
    }
    return out;
  }
  std::mt19937_64 rng(11);
  std::normal_distribution<double> normal;
  for (int s = 0; s < count; ++s) {
    Vector y(idx(k_));
    for (auto &c : y)
      c = normal(rng);
    out.push_back(y.normalized());
  }
  return out;
}

// ---------------------------------------------------------------------------

Matrix IntrinsicTarget::inverse_metric(const Vector &w) const {
  return metric(w).inverse();
}

PoincareDisk::PoincareDisk(double chart_limit) : chart_limit_(chart_limit) {
  if (!(chart_limit > 0.0 && chart_limit < 1.0))
    throw DomainError("chart limit must lie in (0, 1)");
}

bool PoincareDisk::in_chart(const Vector &w) const {
  return w.size() == 2 && w.allFinite() && w.norm() < chart_limit_;
}

Matrix PoincareDisk::metric(const Vector &w) const {
  const double s = 1.0 - w.squaredNorm();
  return Matrix::Identity(2, 2) * (4.0 / (s * s));
}

Matrix PoincareDisk::inverse_metric(const Vector &w) const {
  const double s = 1.0 - w.squaredNorm();
  return Matrix::Identity(2, 2) * (s * s / 4.0);
}

Tensor3 PoincareDisk::metric_derivative(const Vector &w) const {
  const double s = 1.0 - w.squaredNorm();
  // ∂_K (4 s⁻²) = 16 w_K s⁻³
  Tensor3 dh;
  for (Eigen::Index k = 0; k < 2; ++k)
    dh[static_cast<std::size_t>(k)] = Matrix::Identity(2, 2) * (16.0 * w[k] / (s * s * s));
  return dh;
}

Tensor3 PoincareDisk::christoffel(const Vector &w) const {
  // h = e^{2φ}δ with ∂_K φ = 2 w_K / (1 − |w|²).
  const double s = 1.0 - w.squaredNorm();
  const Vector dphi = 2.0 * w / s;
  Tensor3 gamma;
  gamma[0] = Matrix::Zero(2, 2);
  gamma[1] = Matrix::Zero(2, 2);
  for (Eigen::Index i = 0; i < 2; ++i)
    for (Eigen::Index j = 0; j < 2; ++j)
      for (Eigen::Index k = 0; k < 2; ++k) {
        double v = 0.0;
        if (i == j)
          v += dphi[k];
        if (i == k)
          v += dphi[j];
        if (j == k)
          v -= dphi[i];
        gamma[static_cast<std::size_t>(i)](j, k) = v;
      }
  return gamma;
}

double PoincareDisk::distance_to_base(const Vector &w) const {
  return 2.0 * std::atanh(w.norm());
}

Vector PoincareDisk::exp(const Vector &w, const Vector &v) const {
  using C = std::complex<double>;
  const C p(w[0], w[1]);
  const double s = 1.0 - std::norm(p);
  const C v0 = C(v[0], v[1]) / s;
  const double len = std::abs(v0);
  const C z0 = len == 0.0 ? C(0.0) : std::tanh(len) * (v0 / len);
  const C z = (z0 + p) / (1.0 + std::conj(p) * z0);
  Vector out(2);
  out << z.real(), z.imag();
  return out;
}

std::vector<Vector> PoincareDisk::sample_points(int count, double radius) const {
  const double rmax = std::tanh(radius / 2.0);
  const int rings = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(count))));
  const int per_ring = std::max(1, count / rings);
  std::vector<Vector> out;
  out.push_back(Vector::Zero(2));
  for (int r = 1; r <= rings; ++r) {
    const double rho = rmax * r / rings;
    for (int a = 0; a < per_ring; ++a) {
      const double th = 2.0 * M_PI * (a + 0.5 * (r % 2)) / per_ring;
      Vector w(2);
      w << rho * std::cos(th), rho * std::sin(th);
      out.push_back(w);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

CosinePotential::CosinePotential(std::size_t dim, double eps, std::size_t axis)
    : dim_(dim), eps_(eps), axis_(axis) {
  if (axis >= dim)
    throw DomainError("cosine potential axis out of range");
}

double CosinePotential::value(const Vector &y) const {
  return eps_ * std::cos(2.0 * M_PI * y[idx(axis_)]);
}

Vector CosinePotential::differential(const Vector &y) const {
  Vector g = Vector::Zero(idx(dim_));
  g[idx(axis_)] = -2.0 * M_PI * eps_ * std::sin(2.0 * M_PI * y[idx(axis_)]);
  return g;
}

Matrix CosinePotential::coordinate_hessian(const Vector &y) const {
  Matrix h = Matrix::Zero(idx(dim_), idx(dim_));
  h(idx(axis_), idx(axis_)) =
      -4.0 * M_PI * M_PI * eps_ * std::cos(2.0 * M_PI * y[idx(axis_)]);
  return h;
}

RhoSquaredPotential::RhoSquaredPotential(double c) : c_(c) {
  if (!(c > 0.0))
    throw DomainError("rho-squared potential needs c > 0");
}

double RhoSquaredPotential::value(const Vector &w) const {
  const double rho = 2.0 * std::atanh(w.norm());
  return -0.5 * c_ * rho * rho;
}

Vector RhoSquaredPotential::differential(const Vector &w) const {
  // ρ ∂_I ρ = g(r) w_I, g(r) = 4 artanh(r) / (r (1 − r²)).
  const double r = w.norm();
  const double g = 4.0 * artanh_over_r(r) / (1.0 - r * r);
  return -c_ * g * w;
}

Matrix RhoSquaredPotential::coordinate_hessian(const Vector &w) const {
  // ∂_IJ(ρ²/2) = g δ_IJ + q w_I w_J with q = g'(r)/r.
  const double r = w.norm();
  const double s = 1.0 - r * r;
  const double g = 4.0 * artanh_over_r(r) / s;
  double q = 0.0;
  if (r < 1e-3) {
    q = 4.0 * (8.0 / 3.0 + 0.8 * r * r) / (s * s);
  } else {
    const double a = std::atanh(r);
    q = 4.0 * (r - a * (1.0 - 3.0 * r * r)) / (r * r * r * s * s);
  }
  return -c_ * (g * Matrix::Identity(2, 2) + q * w * w.transpose());
}

AmbientQuadraticPotential::AmbientQuadraticPotential(Vector linear, double kappa)
    : a_(std::move(linear)), kappa_(kappa) {}

double AmbientQuadraticPotential::value(const Vector &y) const {
  return a_.dot(y) + 0.5 * kappa_ * y.squaredNorm();
}

Vector AmbientQuadraticPotential::differential(const Vector &y) const {
  return a_ + kappa_ * y;
}

Matrix AmbientQuadraticPotential::coordinate_hessian(const Vector &y) const {
  return kappa_ * Matrix::Identity(y.size(), y.size());
}

// ---------------------------------------------------------------------------

PotentialValue potential_eval(const Target &target, const Potential &potential,
                              const Vector &y) {
  PotentialValue out;
  out.value = potential.value(y);
  const Vector d = potential.differential(y);
  if (const auto *emb = dynamic_cast<const EmbeddedTarget *>(&target)) {
    if (target.supports_winding())
      out.gradient = d;
    else
      out.gradient = emb->jets_at(y).first * d;
  } else {
    const auto &intr = dynamic_cast<const IntrinsicTarget &>(target);
    if (!intr.in_chart(y))
      throw DomainError("potential evaluated outside the chart");
    out.gradient = intr.inverse_metric(y) * d;
  }
  return out;
}

namespace {

// Hessian bilinear form matrix in a basis: columns of `basis` for embedded
// targets (tangent basis), coordinate basis for intrinsic ones.
Matrix hessian_matrix(const Target &target, const Potential &potential, const Vector &y,
                      Matrix *metric_out) {
  const Vector d = potential.differential(y);
  const Matrix h2 = potential.coordinate_hessian(y);
  if (const auto *emb = dynamic_cast<const EmbeddedTarget *>(&target)) {
    const ProjectionJets j = emb->projection_jets(y);
    Matrix full = h2;
    for (std::size_t a = 0; a < target.components(); ++a)
      full += d[idx(a)] * j.second[a];
    const Matrix basis = emb->tangent_basis(y);
    if (metric_out)
      *metric_out = Matrix::Identity(basis.cols(), basis.cols());
    return basis.transpose() * full * basis;
  }
  const auto &intr = dynamic_cast<const IntrinsicTarget &>(target);
  const auto gamma = intr.christoffel(y);
  Matrix hess = h2;
  for (std::size_t k = 0; k < target.components(); ++k)
    hess -= d[idx(k)] * gamma[k];
  if (metric_out)
    *metric_out = intr.metric(y);
  return hess;
}

} // namespace

double hessian_form(const Target &target, const Potential &potential, const Vector &y,
                    const Vector &tangent) {
  const Vector d = potential.differential(y);
  const Matrix h2 = potential.coordinate_hessian(y);
  if (const auto *emb = dynamic_cast<const EmbeddedTarget *>(&target)) {
    const Vector a = emb->second_fundamental_form(y, tangent);
    return tangent.dot(h2 * tangent) + d.dot(a);
  }
  const auto &intr = dynamic_cast<const IntrinsicTarget &>(target);
  const auto gamma = intr.christoffel(y);
  double v = tangent.dot(h2 * tangent);
  for (std::size_t k = 0; k < target.components(); ++k)
    v -= d[idx(k)] * tangent.dot(gamma[k] * tangent);
  return v;
}

double hessian_max_eigenvalue(const Target &target, const Potential &potential,
                              const Vector &y) {
  Matrix metric;
  const Matrix hess = hessian_matrix(target, potential, y, &metric);
  const Eigen::MatrixXd sym = 0.5 * (hess + hess.transpose());
  const Eigen::MatrixXd met = metric;
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, met);
  return es.eigenvalues().maxCoeff();
}

double estimate_hessian_bound(const Target &target, const Potential &potential,
                              const std::vector<Vector> &samples) {
  if (samples.empty())
    throw DomainError("hessian bound needs at least one sample");
  double best = -std::numeric_limits<double>::infinity();
  for (const auto &y : samples)
    best = std::max(best, hessian_max_eigenvalue(target, potential, y));
  return best + 0.1 * std::abs(best);
}

double product_condition_value(const EmbeddedTarget &target, const Potential &potential,
                               const Vector &y, const Vector &tangent) {
  const Vector a = target.second_fundamental_form(y, tangent);
  return a.dot(y) + tangent.squaredNorm() - potential.differential(y).dot(y);
}

ProductConditionReport check_product_condition(const EmbeddedTarget &target,
                                               const Potential &potential,
                                               const std::vector<TangentSample> &samples) {
  ProductConditionReport r;
  r.minimum = std::numeric_limits<double>::infinity();
  for (const auto &s : samples)
    r.minimum = std::min(r.minimum, product_condition_value(target, potential, s.point,
                                                             s.tangent));
  r.samples = samples.size();
  // The sphere with G ≡ 0 sits exactly on the boundary; allow rounding.
  r.pass = samples.empty() || r.minimum >= -1e-12;
  return r;
}

std::vector<TangentSample> tangent_samples(const EmbeddedTarget &target, int count,
                                           unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<TangentSample> out;
  for (const auto &y : target.sample_points(count, 1.0)) {
    const Matrix basis = target.tangent_basis(y);
    Vector c(basis.cols());
    for (auto &v : c)
      v = normal(rng);
    out.push_back({y, (basis * c).normalized()});
  }
  return out;
}

double normal_defect(const EmbeddedTarget &target, const Discretization &disc,
                     const MapState &u) {
  double sum = 0.0;
  for (std::size_t p = 0; p < u.nodes(); ++p) {
    const Vector y = u.value(p);
    sum += (y - target.project(y)).squaredNorm();
  }
  return disc.grid().cell_volume() * sum;
}

std::shared_ptr<const Target> make_target(const std::string &name, std::size_t k) {
  if (name == "torus")
    return std::make_shared<FlatTorus>(k);
  if (name == "sphere")
    return std::make_shared<RoundSphere>(k);
  if (name == "hyperbolic") {
    if (k != 2)
      throw DomainError("hyperbolic target is two-dimensional (K = 2)");
    return std::make_shared<PoincareDisk>();
  }
  throw DomainError("unknown target '" + name + "'");
}

} // namespace subflow
