#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "subflow/error.hpp"
#include "subflow/heatkernel.hpp"
#include "subflow/scenario.hpp"

using namespace subflow;

namespace {

struct Fixture {
  Discretization disc{GroupModel::heisenberg(), Grid(4, 4, 4)};
  SpectralDecomposition spec = spectral_decompose(disc);
  Eigen::MatrixXd lap = disc.sub_laplacian().matrix.toDense();
};

const Fixture &fixture() {
  static const Fixture f;
  return f;
}

ScalarField random_field(Eigen::Index n, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> nd;
  ScalarField f(n);
  for (auto &v : f)
    v = nd(rng);
  return f;
}

} // namespace

TEST(Spectral, PropagatorMatchesMatrixExponential) {
  const auto &f = fixture();
  for (double t : {0.001, 0.01, 0.1}) {
    const Eigen::MatrixXd want = oracle::expm(f.lap, t);
    EXPECT_LT((f.spec.propagator(t) - want).cwiseAbs().maxCoeff(), 1e-10) << "t = " << t;
  }
}

TEST(Spectral, ConstantsSpanTheKernel) {
  const auto &f = fixture();
  EXPECT_EQ(f.spec.kernel_dimension(), 1u);
  EXPECT_NEAR(f.spec.eigenvalues()[0], 0.0, 1e-9);
  EXPECT_GT(f.spec.eigenvalues()[1], 1e-3);
  EXPECT_LT(f.spec.orthonormality_defect(), 1e-12);
  EXPECT_LT(f.spec.residual(), 1e-9);
  const Eigen::VectorXd v0 = f.spec.eigenvectors().col(0);
  EXPECT_LT((v0.cwiseAbs().array() - 1.0 / std::sqrt(64.0)).abs().maxCoeff(), 1e-10);
}

TEST(Spectral, KernelAxiomsAboveFloor) {
  const auto &f = fixture();
  const KernelReport r = kernel_checks(f.spec, {0.01, 0.05, 0.2}, 0.0625);
  EXPECT_TRUE(r.mass_ok);
  EXPECT_TRUE(r.symmetry_ok);
  EXPECT_TRUE(r.semigroup_ok);
  ASSERT_EQ(r.rows.size(), 3u);
  EXPECT_FALSE(r.rows[0].positivity_asserted);
  EXPECT_TRUE(r.rows[2].positivity_asserted);
}

TEST(Spectral, KernelIsScaledPropagator) {
  const auto &f = fixture();
  const double w = f.disc.grid().cell_volume();
  EXPECT_LT((f.spec.kernel(0.03) * w - f.spec.propagator(0.03)).cwiseAbs().maxCoeff(), 1e-14);
  const Eigen::VectorXd mass = f.spec.kernel(0.03).rowwise().sum() * w;
  EXPECT_LT((mass.array() - 1.0).abs().maxCoeff(), 1e-12);
}

TEST(Spectral, CapacityAndSymmetryGuards) {
  const Discretization disc(GroupModel::heisenberg(), Grid(4, 4, 8));
  EXPECT_THROW(spectral_decompose(disc, 100), CapacityError);
  SparseOperator skew = disc.sub_laplacian();
  skew.matrix.coeffRef(0, 1) += 1e-3;
  EXPECT_THROW(SpectralDecomposition(skew, disc.grid().cell_volume()), DomainError);
  EXPECT_THROW(fixture().spec.propagator(-1.0), DomainError);
}

TEST(HeatApply, MatchesPropagatorAndSemigroup) {
  const auto &f = fixture();
  const ScalarField u = random_field(64, 1);
  EXPECT_LT((heat_apply(f.spec, 0.02, u) - f.spec.propagator(0.02) * u).cwiseAbs().maxCoeff(),
            1e-12);
  EXPECT_LT((heat_apply(f.spec, 0.03, heat_apply(f.spec, 0.02, u)) - heat_apply(f.spec, 0.05, u))
                .cwiseAbs()
                .maxCoeff(),
            1e-12);
  EXPECT_THROW(heat_apply(f.spec, -0.1, u), DomainError);
}

TEST(HeatApply, AffineSolutionMatchesAugmentedExponential) {
  // [u; 1]' = [[L, s], [0, 0]] [u; 1].
  const auto &f = fixture();
  const ScalarField u = random_field(64, 2);
  ScalarField s = random_field(64, 3);
  s.array() -= s.mean();
  Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(65, 65);
  aug.topLeftCorner(64, 64) = f.lap;
  aug.topRightCorner(64, 1) = s;
  Eigen::VectorXd x0(65);
  x0 << u, 1.0;
  const Eigen::VectorXd want = oracle::expm(aug, 0.04) * x0;
  EXPECT_LT((heat_apply_affine(f.spec, 0.04, u, s) - want.head(64)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(HeatApply, MaximumPrinciple) {
  const auto &f = fixture();
  ScalarField phi = random_field(64, 4).cwiseAbs();
  const auto r = max_principle_check(f.spec, phi, {0.05, 0.1, 0.5});
  EXPECT_TRUE(r.pass);
  EXPECT_THROW(max_principle_check(f.spec, -phi, {0.1}), DomainError);
}

TEST(GradientMass, GrowsWithTime) {
  const auto &f = fixture();
  const double a = kernel_gradient_mass(f.spec, f.disc, 0.01);
  const double b = kernel_gradient_mass(f.spec, f.disc, 0.04);
  EXPECT_GT(a, 0.0);
  EXPECT_GT(b, a);
  EXPECT_THROW(kernel_gradient_mass(f.spec, f.disc, 0.0), DomainError);
}

TEST(Picard, LinearTorusProblemIsExactAfterOneIterate) {
  // With G ≡ 0 on the torus the nonlinearity is the constant lift source, so
  // u_1 already solves u' = Δ_H u + s and later iterates do not move.
  RunConfig c = oracle::small_config("torus-harmonic", Grid(4, 4, 4));
  const Problem pb = build_problem(c);
  const auto spec = spectral_decompose(pb.disc);
  const double t = 0.01;
  const PicardResult r = picard_run(pb.disc, spec, pb.initial, *pb.target, *pb.potential, t, 8, 4);
  ASSERT_EQ(r.state.X.size(), 4u);
  EXPECT_LT(r.state.X[1], 1e-12);
  const Eigen::MatrixXd lap = pb.disc.sub_laplacian().matrix.toDense();
  const Eigen::Index n = lap.rows();
  for (std::size_t a = 0; a < 2; ++a) {
    const ScalarField s = pb.disc.apply_sub_laplacian(ScalarField::Zero(n), pb.initial.winding_row(a));
    Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(n + 1, n + 1);
    aug.topLeftCorner(n, n) = lap;
    aug.topRightCorner(n, 1) = s;
    Eigen::VectorXd x0(n + 1);
    x0 << pb.initial.components[a], 1.0;
    const Eigen::VectorXd want = oracle::expm(aug, t) * x0;
    EXPECT_LT((r.final_map().components[a] - want.head(n)).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(Picard, ContractsOnTheSphere) {
  const Problem pb = build_problem(oracle::small_config("sphere-projected", Grid(4, 4, 4)));
  const auto spec = spectral_decompose(pb.disc);
  const PicardResult r =
      picard_run(pb.disc, spec, pb.initial, *pb.target, *pb.potential, 0.005, 8, 6);
  ASSERT_EQ(r.ratios.size(), 5u);
  for (double q : r.ratios)
    EXPECT_LT(q, 1.0);
}

TEST(Picard, IntrinsicTargetsAreUnsupported) {
  const Problem pb = build_problem(oracle::small_config("hyperbolic-decay", Grid(4, 4, 4)));
  const auto spec = spectral_decompose(pb.disc);
  EXPECT_THROW(picard_run(pb.disc, spec, pb.initial, *pb.target, *pb.potential, 0.005, 4, 2),
               UnsupportedOperation);
  const Problem s = build_problem(oracle::small_config("sphere-projected", Grid(4, 4, 4)));
  EXPECT_THROW(picard_run(s.disc, spec, s.initial, *s.target, *s.potential, 0.0, 4, 2),
               DomainError);
}
