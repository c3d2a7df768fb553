#include "subflow/heatkernel.hpp"

#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>
#include <boost/math/quadrature/gauss.hpp>

#include "subflow/error.hpp"

namespace subflow {

namespace {

using Index = Eigen::Index;

Index ix(std::size_t i) { return static_cast<Index>(i); }

// (1 − e^{−tλ})/λ, t at λ = 0.
double phi1(double lambda, double t) {
  const double x = lambda * t;
  if (std::abs(x) < 1e-8)
    return t * (1.0 - 0.5 * x);
  return -std::expm1(-x) / lambda;
}

} // namespace

SpectralDecomposition::SpectralDecomposition(const SparseOperator &laplacian,
                                             double node_measure, std::size_t cap)
    : w_(node_measure) {
  const auto n = static_cast<std::size_t>(laplacian.size());
  if (n > cap)
    throw CapacityError("spectral decomposition of " + std::to_string(n) +
                        " nodes exceeds the cap of " + std::to_string(cap) +
                        "; use a coarser grid (e.g. 8x8x8 or 16x16x16)");
  const Eigen::MatrixXd a = -Eigen::MatrixXd(laplacian.matrix);
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > 0.0)
    throw DomainError("spectral decomposition needs an exactly symmetric operator");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  if (es.info() != Eigen::Success)
    throw DomainError("eigensolver failed");
  lambda_ = es.eigenvalues().cwiseMax(0.0);
  v_ = es.eigenvectors();
  residual_ = (a * v_ - v_ * es.eigenvalues().asDiagonal()).cwiseAbs().maxCoeff();
}

Eigen::MatrixXd SpectralDecomposition::propagator(double t) const {
  if (t < 0.0)
    throw DomainError("heat propagator needs t >= 0");
  const Eigen::VectorXd decay = (-t * lambda_).array().exp();
  return v_ * decay.asDiagonal() * v_.transpose();
}

Eigen::MatrixXd SpectralDecomposition::kernel(double t) const { return propagator(t) / w_; }

double SpectralDecomposition::orthonormality_defect() const {
  const Index n = v_.cols();
  return (v_.transpose() * v_ - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff();
}

std::size_t SpectralDecomposition::kernel_dimension(double tol) const {
  const double scale = std::max(1.0, lambda_.maxCoeff());
  std::size_t count = 0;
  for (Index i = 0; i < lambda_.size(); ++i)
    if (lambda_[i] <= tol * scale)
      ++count;
  return count;
}

SpectralDecomposition spectral_decompose(const Discretization &disc, std::size_t cap) {
  return SpectralDecomposition(disc.sub_laplacian(), disc.grid().cell_volume(), cap);
}

ScalarField heat_apply(const SpectralDecomposition &spec, double t, const ScalarField &f) {
  if (t < 0.0)
    throw DomainError("heat_apply needs t >= 0");
  if (static_cast<std::size_t>(f.size()) != spec.size())
    throw DomainError("field size does not match the decomposition");
  if (t == 0.0)
    return f;
  Eigen::VectorXd c = spec.eigenvectors().transpose() * f;
  c.array() *= (-t * spec.eigenvalues()).array().exp();
  return spec.eigenvectors() * c;
}

ScalarField heat_apply_affine(const SpectralDecomposition &spec, double t,
                              const ScalarField &f, const ScalarField &s) {
  if (t < 0.0)
    throw DomainError("heat_apply needs t >= 0");
  const auto &lam = spec.eigenvalues();
  Eigen::VectorXd cf = spec.eigenvectors().transpose() * f;
  Eigen::VectorXd cs = spec.eigenvectors().transpose() * s;
  for (Index i = 0; i < lam.size(); ++i)
    cf[i] = std::exp(-t * lam[i]) * cf[i] + phi1(lam[i], t) * cs[i];
  return spec.eigenvectors() * cf;
}

KernelReport kernel_checks(const SpectralDecomposition &spec, const std::vector<double> &times,
                           double t_floor, const KernelTolerances &tol) {
  KernelReport r;
  r.t_floor = t_floor;
  const double w = spec.node_measure();
  for (double t : times) {
    KernelTimeReport row;
    row.t = t;
    const Eigen::MatrixXd k = spec.kernel(t);
    row.max_asymmetry = (k - k.transpose()).cwiseAbs().maxCoeff();
    row.min_entry = k.minCoeff();
    row.max_mass_deviation =
        ((k.rowwise().sum() * w).array() - 1.0).abs().maxCoeff();
    const Eigen::MatrixXd k2 = spec.kernel(2.0 * t);
    row.semigroup_residual = (k2 - w * (k * k)).cwiseAbs().maxCoeff();
    row.positivity_asserted = t >= t_floor;
    r.mass_ok = r.mass_ok && row.max_mass_deviation <= tol.mass;
    r.symmetry_ok = r.symmetry_ok && row.max_asymmetry <= tol.asymmetry;
    r.semigroup_ok = r.semigroup_ok && row.semigroup_residual <= tol.semigroup;
    if (row.positivity_asserted)
      r.positivity_ok = r.positivity_ok && row.min_entry > 0.0;
    r.rows.push_back(row);
  }
  return r;
}

double kernel_gradient_mass(const SpectralDecomposition &spec, const Discretization &disc,
                            double t) {
  if (!(t > 0.0))
    throw DomainError("kernel_gradient_mass needs t > 0");
  const auto &v = spec.eigenvectors();
  const auto &lam = spec.eigenvalues();
  const double w = spec.node_measure();
  const std::size_t m = disc.horizontal_rank();
  std::vector<Eigen::MatrixXd> dv(m);
  for (std::size_t i = 0; i < m; ++i)
    dv[i] = disc.derivative(i).op.matrix * v;
  using Rule = boost::math::quadrature::gauss<double, 15>;
  const auto n = ix(spec.size());
  Eigen::VectorXd accum = Eigen::VectorXd::Zero(n);
  // Nodes of the rule on [−1, 1], mapped to s ∈ [0, t].
  const auto &abscissa = Rule::abscissa();
  const auto &weights = Rule::weights();
  std::vector<std::pair<double, double>> nodes;
  for (std::size_t q = 0; q < abscissa.size(); ++q) {
    const double x = abscissa[q];
    const double wt = weights[q];
    nodes.emplace_back(0.5 * t * (1.0 + x), 0.5 * t * wt);
    if (x != 0.0)
      nodes.emplace_back(0.5 * t * (1.0 - x), 0.5 * t * wt);
  }
  for (const auto &[s, wt] : nodes) {
    const Eigen::VectorXd decay = (-s * lam).array().exp();
    Eigen::MatrixXd sq = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t i = 0; i < m; ++i) {
      // ∇_x K(x, y, s) rows x, columns y.
      const Eigen::MatrixXd g = (dv[i] * decay.asDiagonal()) * v.transpose() / w;
      sq.array() += g.array().square();
    }
    accum += wt * w * sq.array().sqrt().matrix().rowwise().sum();
  }
  return accum.maxCoeff();
}

double c1h_norm(const Discretization &disc, const std::vector<ScalarField> &f) {
  if (f.empty())
    return 0.0;
  const Index n = f.front().size();
  Eigen::VectorXd val = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(n);
  for (const auto &c : f) {
    val.array() += c.array().square();
    for (std::size_t i = 0; i < disc.horizontal_rank(); ++i)
      grad.array() += disc.apply_derivative(i, c).array().square();
  }
  return std::sqrt(val.maxCoeff()) + std::sqrt(grad.maxCoeff());
}

PicardResult picard_run(const Discretization &disc, const SpectralDecomposition &spec,
                        const MapState &initial, const Target &target,
                        const Potential &potential, double t, int Q, int k_max,
                        TensionScheme scheme) {
  if (!target.is_embedded())
    throw UnsupportedOperation("Picard iteration is implemented for embedded targets");
  if (!(t > 0.0) || Q < 1 || k_max < 1)
    throw DomainError("picard_run needs t > 0, Q >= 1, k_max >= 1");
  validate_map(target, initial);
  const auto &emb = static_cast<const EmbeddedTarget &>(target);
  const std::size_t K = initial.dimension();
  const auto &v = spec.eigenvectors();
  const auto &lam = spec.eigenvalues();
  const double ds = t / Q;

  PicardResult res;
  PicardState &st = res.state;
  for (int q = 0; q <= Q; ++q)
    st.times.push_back(initial.t + ds * q);

  MapState start = initial;
  if (!target.supports_winding())
    start.representation = Representation::extrinsic_tubular;

  // Constant source of Δ_H on each lifted component.
  std::vector<ScalarField> source(K);
  for (std::size_t a = 0; a < K; ++a)
    source[a] = disc.apply_sub_laplacian(ScalarField::Zero(initial.components[a].size()),
                                         initial.winding_row(a));

  // u_0(s) = free evolution of ū.
  std::vector<std::vector<ScalarField>> free(static_cast<std::size_t>(Q) + 1,
                                             std::vector<ScalarField>(K));
  for (int q = 0; q <= Q; ++q)
    for (std::size_t a = 0; a < K; ++a)
      free[static_cast<std::size_t>(q)][a] =
          heat_apply_affine(spec, ds * q, initial.components[a], source[a]);

  const auto check_tube = [&](const MapState &u, int k) {
    if (target.supports_winding())
      return;
    for (std::size_t p = 0; p < u.nodes(); ++p) {
      Vector y(ix(K));
      for (std::size_t a = 0; a < K; ++a)
        y[ix(a)] = u.components[a][ix(p)];
      if (!emb.within_tube(y))
        throw DomainError("Picard iterate k = " + std::to_string(k) +
                          " leaves the tube (defect " +
                          std::to_string(emb.distance_to_manifold(y)) + ")");
    }
  };

  st.stack.clear();
  for (int q = 0; q <= Q; ++q) {
    MapState u = start;
    u.components = free[static_cast<std::size_t>(q)];
    u.t = st.times[static_cast<std::size_t>(q)];
    check_tube(u, 0);
    st.stack.push_back(std::move(u));
  }

  for (int k = 1; k <= k_max; ++k) {
    // Spectral coefficients of N(u_{k−1}(s_j)).
    std::vector<std::vector<Eigen::VectorXd>> coeff(static_cast<std::size_t>(Q) + 1,
                                                    std::vector<Eigen::VectorXd>(K));
    for (int j = 0; j <= Q; ++j) {
      const MapState &u = st.stack[static_cast<std::size_t>(j)];
      const TensionField tau = tension_field(disc, target, potential, u, scheme);
      for (std::size_t a = 0; a < K; ++a) {
        const ScalarField lin = disc.apply_sub_laplacian(u.components[a], u.winding_row(a));
        coeff[static_cast<std::size_t>(j)][a] = v.transpose() * (tau[a] - lin);
      }
    }
    std::vector<MapState> next;
    double xk = 0.0;
    for (int q = 0; q <= Q; ++q) {
      MapState u = start;
      u.t = st.times[static_cast<std::size_t>(q)];
      std::vector<ScalarField> diff(K);
      for (std::size_t a = 0; a < K; ++a) {
        Eigen::VectorXd acc = Eigen::VectorXd::Zero(lam.size());
        for (int j = 0; q > 0 && j <= q; ++j) {
          const double wt = (j == 0 || j == q) ? 0.5 * ds : ds;
          const Eigen::ArrayXd decay = (-(ds * (q - j)) * lam).array().exp();
          acc.array() += wt * decay * coeff[static_cast<std::size_t>(j)][a].array();
        }
        u.components[a] = free[static_cast<std::size_t>(q)][a] + v * acc;
        diff[a] = u.components[a] - st.stack[static_cast<std::size_t>(q)].components[a];
      }
      xk = std::max(xk, c1h_norm(disc, diff));
      check_tube(u, k);
      next.push_back(std::move(u));
    }
    st.stack = std::move(next);
    st.k = k;
    st.X.push_back(xk);
  }
  for (std::size_t k = 1; k < st.X.size(); ++k)
    res.ratios.push_back(st.X[k - 1] > 0.0 ? st.X[k] / st.X[k - 1] : 0.0);
  return res;
}

} // namespace subflow
