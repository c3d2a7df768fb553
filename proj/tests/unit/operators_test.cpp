#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "oracles.hpp"
#include "subflow/error.hpp"
#include "subflow/operators.hpp"

using namespace subflow;

namespace {

double max_abs_difference(const SparseMatrix &a, const oracle::SpMat &b) {
  const Eigen::MatrixXd d = Eigen::MatrixXd(a) - Eigen::MatrixXd(b);
  return d.cwiseAbs().maxCoeff();
}

ScalarField random_field(std::size_t n, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> nd;
  ScalarField f(static_cast<Eigen::Index>(n));
  for (auto &v : f)
    v = nd(rng);
  return f;
}

} // namespace

class StencilMatch : public ::testing::TestWithParam<std::array<int, 3>> {};

TEST_P(StencilMatch, FrameDerivativesMatchIndependentAssembly) {
  const auto [nx, ny, nz] = GetParam();
  const Grid g(nx, ny, nz);
  const Discretization disc(GroupModel::heisenberg(), g);
  const ScalarField xs = disc.sample([](const Eigen::Vector3d &p) { return p[0]; });
  const ScalarField ys = disc.sample([](const Eigen::Vector3d &p) { return p[1]; });
  for (int f = 0; f < 3; ++f) {
    const oracle::Stencil s = oracle::heisenberg_stencil(g, f);
    EXPECT_LT(max_abs_difference(disc.derivative(static_cast<std::size_t>(f)).op.matrix, s.d),
              1e-12)
        << "frame " << f;
    EXPECT_LT((disc.apply_derivative(static_cast<std::size_t>(f), xs, {1, 0, 0}) - s.lift_x)
                  .cwiseAbs()
                  .maxCoeff(),
              1e-9);
    EXPECT_LT((disc.apply_derivative(static_cast<std::size_t>(f), ys, {0, 1, 0}) - s.lift_y)
                  .cwiseAbs()
                  .maxCoeff(),
              1e-9);
  }
  const double scale = disc.sub_laplacian().matrix.toDense().cwiseAbs().maxCoeff();
  EXPECT_LT(max_abs_difference(disc.sub_laplacian().matrix, oracle::heisenberg_sublaplacian(g)),
            1e-12 * scale);
}

INSTANTIATE_TEST_SUITE_P(Grids, StencilMatch,
                         ::testing::Values(std::array<int, 3>{4, 4, 4},
                                           std::array<int, 3>{4, 4, 8},
                                           std::array<int, 3>{3, 2, 6},
                                           std::array<int, 3>{6, 6, 12}));

TEST(SubLaplacian, ExactlySymmetricAndAnnihilatesConstants) {
  const Discretization disc(GroupModel::heisenberg(), Grid(6, 6, 12));
  const SparseMatrix &l = disc.sub_laplacian().matrix;
  EXPECT_EQ(SparseMatrix(l.transpose()).toDense(), l.toDense());
  EXPECT_TRUE(disc.sub_laplacian().symmetric);
  const ScalarField one = ScalarField::Ones(l.rows());
  EXPECT_LT((l * one).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(SubLaplacian, QuadraticFormIsNonPositive) {
  const Discretization disc(GroupModel::heisenberg(), Grid(6, 6, 12));
  for (unsigned seed = 0; seed < 20; ++seed) {
    const ScalarField f = random_field(disc.size(), seed);
    const double q = f.dot(disc.apply_sub_laplacian(f));
    double grad = 0.0;
    for (const auto &d : disc.horizontal_gradient(f))
      grad += d.squaredNorm();
    EXPECT_LE(q, 0.0);
    EXPECT_NEAR(q, -grad, 1e-9 * grad);
  }
}

TEST(SubLaplacian, WindingLiftHasNoSource) {
  // Linear lifts are discretely harmonic: Σ D_iᵀ(D_i lift) vanishes.
  const Discretization disc(GroupModel::heisenberg(), Grid(6, 6, 12));
  const ScalarField xs = disc.sample([](const Eigen::Vector3d &p) { return p[0]; });
  EXPECT_LT(disc.apply_sub_laplacian(xs, {1, 0, 0}).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(SubLaplacian, RejectsNonzeroMeanCurvature) {
  VectorField dx{{Polynomial::constant(1.0), Polynomial(), Polynomial()}};
  VectorField dy{{Polynomial(), Polynomial::constant(1.0), Polynomial()}};
  VectorField dz{{Polynomial(), Polynomial(), Polynomial::constant(1.0)}};
  GroupModel m("tilted", {FrameField("dx", dx), FrameField("dy", dy)}, {FrameField("dz", dz)},
               dx, 0);
  EXPECT_THROW(assemble_sub_laplacian(m, Grid(4, 4, 4)), UnsupportedModel);
}

TEST(SubLaplacian, GershgorinBoundsSpectralRadius) {
  const Discretization disc(GroupModel::heisenberg(), Grid(6, 6, 12));
  const Eigen::MatrixXd l = disc.sub_laplacian().matrix.toDense();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(l, Eigen::EigenvaluesOnly);
  EXPECT_GE(disc.spectral_radius_bound(), es.eigenvalues().cwiseAbs().maxCoeff());
}

TEST(SubLaplacian, ConvergesOnSmoothSeamFunction) {
  // f = b(x) cos(2π y): smooth on the quotient, Δ_H f = b'' cos − 4π² b cos.
  const double pi = std::numbers::pi;
  auto f = [&](const Eigen::Vector3d &p) { return seam_bump(p[0]) * std::cos(2 * pi * p[1]); };
  auto lap = [&](const Eigen::Vector3d &p) {
    const double x = p[0];
    const double s = std::sin(pi * x), c = std::cos(pi * x);
    const double b2 = pi * pi * (30.0 * std::pow(s, 4) * c * c - 6.0 * std::pow(s, 6));
    return (b2 - 4 * pi * pi * seam_bump(x)) * std::cos(2 * pi * p[1]);
  };
  std::vector<double> hs, errs;
  for (int n : {8, 16, 32}) {
    const Discretization disc(GroupModel::heisenberg(), Grid(n, n, n));
    const ScalarField err = disc.apply_sub_laplacian(disc.sample(f)) - disc.sample(lap);
    hs.push_back(1.0 / n);
    errs.push_back(err.cwiseAbs().maxCoeff());
  }
  EXPECT_LT(errs[2], errs[1]);
  EXPECT_LT(errs[1], errs[0]);
  EXPECT_GT(std::log(errs[0] / errs[2]) / std::log(4.0), 0.8);
}

TEST(Commutator, DefectShrinksUnderRefinement) {
  const GroupModel h = GroupModel::heisenberg();
  double prev = 1e300;
  for (int n : {8, 16, 32}) {
    const double d = commutator_defect(Discretization(h, Grid(n, n, n)));
    EXPECT_LT(d, prev);
    prev = d;
  }
}

TEST(Transpose, MatchesSparseTranspose) {
  const Discretization disc(GroupModel::heisenberg(), Grid(4, 4, 8));
  const ScalarField g = random_field(disc.size(), 5);
  for (std::size_t a = 0; a < 3; ++a) {
    const ScalarField want = SparseMatrix(disc.derivative(a).op.matrix.transpose()) * g;
    EXPECT_LT((disc.apply_transpose(a, g) - want).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Integrate, UsesCellVolume) {
  const Discretization disc(GroupModel::heisenberg(), Grid(4, 4, 8));
  EXPECT_NEAR(disc.integrate(ScalarField::Ones(static_cast<Eigen::Index>(disc.size()))), 1.0,
              1e-15);
}

TEST(FieldIo, RoundTripIsBitExact) {
  const Grid g(3, 2, 4);
  const ScalarField f = random_field(g.size(), 9);
  std::stringstream ss;
  write_field(ss, g, f);
  EXPECT_EQ(ss.str().size(), 16 + 8 * g.size());
  EXPECT_EQ(ss.str().substr(0, 4), "SUBF");
  Grid back;
  const ScalarField r = read_field(ss, back);
  EXPECT_EQ(back, g);
  EXPECT_EQ(r, f);
}

TEST(FieldIo, RejectsBadMagicAndTruncation) {
  const Grid g(2, 2, 2);
  std::stringstream ss;
  write_field(ss, g, ScalarField::Zero(8));
  std::string bytes = ss.str();
  std::string bad = bytes;
  bad[0] = 'X';
  Grid out;
  std::stringstream s1(bad);
  EXPECT_THROW(read_field(s1, out), IoError);
  std::stringstream s2(bytes.substr(0, bytes.size() - 3));
  EXPECT_THROW(read_field(s2, out), IoError);
}

TEST(FieldIo, MissingFileIsIoError) {
  Grid out;
  EXPECT_THROW(load_field("/nonexistent/field.bin", out), IoError);
}
