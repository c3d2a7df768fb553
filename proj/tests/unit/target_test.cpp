#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/LU>
#include <gtest/gtest.h>

#include "oracles.hpp"
#include "subflow/error.hpp"
#include "subflow/target.hpp"

using namespace subflow;

namespace {

Eigen::VectorXd dyn(const Vector &v) { return Eigen::VectorXd(v); }

Vector random_point(std::mt19937 &rng, int k, double scale) {
  std::normal_distribution<double> nd;
  Vector v(k);
  for (int i = 0; i < k; ++i)
    v[i] = scale * nd(rng);
  return v;
}

} // namespace

TEST(Sphere, ProjectionJetsMatchFiniteDifferences) {
  const RoundSphere s(3);
  std::mt19937 rng(1);
  for (int trial = 0; trial < 10; ++trial) {
    Vector y = random_point(rng, 3, 1.0);
    y *= (1.0 + 0.2 * std::uniform_real_distribution<double>(-1, 1)(rng)) / y.norm();
    const ProjectionJets j = s.jets_at(y);
    const Eigen::MatrixXd first = oracle::fd_jacobian(
        [&](const Eigen::VectorXd &v) { return dyn(s.project(Vector(v))); }, dyn(y));
    EXPECT_LT((Eigen::MatrixXd(j.first) - first).cwiseAbs().maxCoeff(), 1e-8);
    for (int a = 0; a < 3; ++a) {
      const Eigen::MatrixXd second = oracle::fd_jacobian(
          [&](const Eigen::VectorXd &v) {
            return Eigen::VectorXd(s.jets_at(Vector(v)).first.row(a).transpose());
          },
          dyn(y));
      EXPECT_LT((Eigen::MatrixXd(j.second[static_cast<std::size_t>(a)]) - second)
                    .cwiseAbs()
                    .maxCoeff(),
                1e-7);
    }
  }
}

TEST(Sphere, TubeBoundaries) {
  const RoundSphere s(3);
  Vector y(3);
  y << 0.0, 0.0, 1.4;
  EXPECT_TRUE(s.within_tube(y));
  EXPECT_FALSE(s.on_manifold(y));
  y << 0.0, 0.0, 1.6;
  EXPECT_FALSE(s.within_tube(y));
  EXPECT_THROW(s.project(y), DomainError);
  y << 0.0, 0.0, 1.2;
  EXPECT_THROW(s.projection_jets(y), DomainError);
  EXPECT_NO_THROW(s.jets_at(y));
}

TEST(Sphere, TangentBasisAndSecondFundamentalForm) {
  const RoundSphere s(3);
  std::mt19937 rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    Vector y = random_point(rng, 3, 1.0);
    y /= y.norm();
    const Matrix t = s.tangent_basis(y);
    ASSERT_EQ(t.cols(), 2);
    EXPECT_LT((Eigen::MatrixXd(t.transpose() * t) - Eigen::MatrixXd::Identity(2, 2))
                  .cwiseAbs()
                  .maxCoeff(),
              1e-12);
    EXPECT_LT((t.transpose() * y).norm(), 1e-12);
    // A(Y, Y) = −|Y|² y on the unit sphere.
    const Vector Y = t.col(0) * 0.7 + t.col(1) * 0.2;
    EXPECT_LT((s.second_fundamental_form(y, Y) + Y.squaredNorm() * y).norm(), 1e-12);
  }
}

TEST(Torus, ProjectionIsIdentityOnLifts) {
  const FlatTorus t(2);
  Vector y(2);
  y << 3.7, -1.2;
  EXPECT_EQ(t.project(y), y);
  const ProjectionJets j = t.jets_at(y);
  EXPECT_EQ(Eigen::MatrixXd(j.first), Eigen::MatrixXd::Identity(2, 2));
  EXPECT_EQ(Eigen::MatrixXd(j.second[0]).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Disk, MetricDerivativeAndChristoffelMatchFiniteDifferences) {
  const PoincareDisk d;
  std::mt19937 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    Vector w = random_point(rng, 2, 0.3);
    const Tensor3 dh = d.metric_derivative(w);
    const Tensor3 gamma = d.christoffel(w);
    std::array<Eigen::MatrixXd, 2> fd;
    for (int k = 0; k < 2; ++k) {
      Vector p = w, m = w;
      p[k] += 1e-6;
      m[k] -= 1e-6;
      fd[static_cast<std::size_t>(k)] =
          (Eigen::MatrixXd(d.metric(p)) - Eigen::MatrixXd(d.metric(m))) / 2e-6;
      EXPECT_LT((Eigen::MatrixXd(dh[static_cast<std::size_t>(k)]) - fd[static_cast<std::size_t>(k)])
                    .cwiseAbs()
                    .maxCoeff(),
                1e-6);
    }
    // Γ^I_JK = ½ h^{IL}(∂_J h_LK + ∂_K h_LJ − ∂_L h_JK).
    const Eigen::MatrixXd hinv = Eigen::MatrixXd(d.metric(w)).inverse();
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        for (int k = 0; k < 2; ++k) {
          double g = 0.0;
          for (int l = 0; l < 2; ++l)
            g += 0.5 * hinv(i, l) *
                 (fd[static_cast<std::size_t>(j)](l, k) + fd[static_cast<std::size_t>(k)](l, j) -
                  fd[static_cast<std::size_t>(l)](j, k));
          EXPECT_NEAR(gamma[static_cast<std::size_t>(i)](j, k), g, 1e-6);
        }
  }
}

TEST(Disk, DistanceAndExponential) {
  const PoincareDisk d;
  Vector w(2);
  w << 0.3, -0.4;
  EXPECT_NEAR(d.distance_to_base(w), 2.0 * std::atanh(0.5), 1e-14);
  // exp at the base point travels the h-length of v.
  Vector v(2);
  v << 0.6, 0.8;
  const Vector e = d.exp(d.base_point(), v);
  EXPECT_NEAR(d.distance_to_base(e), 2.0 * v.norm(), 1e-10);
  EXPECT_NEAR(e[0] / e[1], 0.75, 1e-12);
  Vector out(2);
  out << 0.9995, 0.0;
  EXPECT_FALSE(d.in_chart(out));
}

TEST(Disk, InverseMetric) {
  const PoincareDisk d;
  Vector w(2);
  w << 0.1, 0.5;
  EXPECT_LT((Eigen::MatrixXd(d.metric(w) * d.inverse_metric(w)) - Eigen::MatrixXd::Identity(2, 2))
                .cwiseAbs()
                .maxCoeff(),
            1e-12);
}

class PotentialJets : public ::testing::TestWithParam<int> {};

TEST_P(PotentialJets, DifferentialAndHessianMatchFiniteDifferences) {
  std::shared_ptr<const Potential> pot;
  int k = 2;
  double scale = 0.3;
  switch (GetParam()) {
  case 0:
    pot = std::make_shared<CosinePotential>(2, 0.1, 1);
    scale = 1.0;
    break;
  case 1:
    pot = std::make_shared<RhoSquaredPotential>(1.5);
    break;
  default: {
    Vector a(3);
    a << 0.2, -0.1, 0.4;
    pot = std::make_shared<AmbientQuadraticPotential>(a, 0.7);
    k = 3;
    scale = 1.0;
  }
  }
  std::mt19937 rng(static_cast<unsigned>(GetParam()));
  for (int trial = 0; trial < 5; ++trial) {
    const Vector y = random_point(rng, k, scale);
    const Eigen::MatrixXd dg = oracle::fd_jacobian(
        [&](const Eigen::VectorXd &v) {
          return Eigen::VectorXd::Constant(1, pot->value(Vector(v)));
        },
        dyn(y));
    EXPECT_LT((dg.transpose() - dyn(pot->differential(y))).cwiseAbs().maxCoeff(), 1e-7);
    const Eigen::MatrixXd hess = oracle::fd_jacobian(
        [&](const Eigen::VectorXd &v) { return dyn(pot->differential(Vector(v))); }, dyn(y));
    EXPECT_LT((hess - Eigen::MatrixXd(pot->coordinate_hessian(y))).cwiseAbs().maxCoeff(), 1e-6);
  }
}

INSTANTIATE_TEST_SUITE_P(Potentials, PotentialJets, ::testing::Values(0, 1, 2));

TEST(Potential, RhoSquaredNeedsPositiveC) {
  EXPECT_THROW(RhoSquaredPotential(0.0), DomainError);
  EXPECT_THROW(RhoSquaredPotential(-1.0), DomainError);
}

TEST(Potential, RhoSquaredValueAndDecayConstant) {
  const RhoSquaredPotential g(2.0);
  Vector w(2);
  w << 0.0, 0.5;
  const double rho = 2.0 * std::atanh(0.5);
  EXPECT_NEAR(g.value(w), -rho * rho, 1e-13);
  ASSERT_TRUE(g.decay_constant().has_value());
  EXPECT_EQ(*g.decay_constant(), 2.0);
}

TEST(HessianBound, CosineOnTorusIsFourPiSquaredEps) {
  const double eps = 1.0 / (16.0 * std::numbers::pi * std::numbers::pi);
  const FlatTorus t(2);
  const CosinePotential g(2, eps, 0);
  Vector y(2);
  y << 0.5, 0.1; // cos(2π·0.5) = −1: Hess = 4π²ε
  EXPECT_NEAR(hessian_max_eigenvalue(t, g, y), 0.25, 1e-12);
  const double bound = estimate_hessian_bound(t, g, t.sample_points(64, 1.0));
  EXPECT_GE(bound, 0.25);
  EXPECT_LE(bound, 0.25 * 1.1 + 1e-12);
}

TEST(HessianBound, RhoSquaredIsNegativeDefinite) {
  const PoincareDisk d;
  const RhoSquaredPotential g(1.0);
  for (const Vector &w : d.sample_points(40, 2.0))
    EXPECT_LT(hessian_max_eigenvalue(d, g, w), 0.0);
}

TEST(HessianBound, HessianFormAgreesWithSecondDerivativeAlongGeodesic) {
  const PoincareDisk d;
  const RhoSquaredPotential g(1.0);
  Vector w(2), v(2);
  w << 0.2, 0.1;
  v << 0.3, -0.5;
  const double s = 1e-3;
  const double second =
      (g.value(d.exp(w, s * v)) - 2 * g.value(w) + g.value(d.exp(w, -s * v))) / (s * s);
  EXPECT_NEAR(hessian_form(d, g, w, v), second, 1e-5);
}

TEST(ProductCondition, SphereWithZeroPotentialHolds) {
  const RoundSphere s(3);
  const ZeroPotential g(3);
  const auto r = check_product_condition(s, g, tangent_samples(s, 50));
  EXPECT_TRUE(r.pass);
  EXPECT_EQ(r.samples, 50u);
  // ⟨A(Y,Y), y⟩ + |Y|² = 0 on the unit sphere for every unit tangent.
  EXPECT_NEAR(r.minimum, 0.0, 1e-12);
}

TEST(ProductCondition, OutwardPushFails) {
  const RoundSphere s(3);
  const AmbientQuadraticPotential g(Vector::Zero(3), 2.0);
  EXPECT_FALSE(check_product_condition(s, g, tangent_samples(s, 20)).pass);
}

TEST(Factory, KnownAndUnknownTargets) {
  EXPECT_EQ(make_target("sphere", 3)->components(), 3u);
  EXPECT_EQ(make_target("torus", 2)->name(), "torus");
  EXPECT_FALSE(make_target("hyperbolic", 2)->is_embedded());
  EXPECT_THROW(make_target("hyperbolic", 3), DomainError);
  EXPECT_THROW(make_target("klein-bottle", 2), DomainError);
  EXPECT_THROW(make_target("torus", 9), DomainError);
}
